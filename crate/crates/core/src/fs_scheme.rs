//! Fake-transaction insertion and support-corrected mining over the
//! anonymized database.
//!
//! After every real transaction a block of `w_i ~ U{1, .., 2w-1}` fake
//! transactions is inserted; each fake has length `l_i ~ U{1, .., 2l-1}` with
//! items drawn uniformly without replacement from the whole universe.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::apriori::{mine_frequent, EstimatedItemset, LevelThresholds};
use crate::error::{Error, Result};
use crate::market_basket::{
    compute_stats, ItemId, Origin, ProvenanceSidecar, Transaction, TransactionDb,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FsParams {
    /// Mean number of fakes per real transaction. `0` disables insertion.
    pub w: u32,
    /// Mean fake length.
    pub l: u32,
}

impl FsParams {
    pub fn new(w: u32, l: u32, n_items: usize) -> Result<Self> {
        let p = FsParams { w, l };
        p.validate(n_items)?;
        Ok(p)
    }

    /// `l` defaults to the rounded average length of `db`.
    pub fn for_db(w: u32, db: &TransactionDb) -> Result<Self> {
        let avg = compute_stats(db)?.avg_len;
        let l = (avg.round() as u32).max(1);
        FsParams::new(w, l, db.n_items())
    }

    pub fn max_fake_len(&self) -> usize {
        2 * self.l as usize - 1
    }

    pub fn validate(&self, n_items: usize) -> Result<()> {
        if self.l == 0 {
            return Err(Error::Param("fake length l must be >= 1".into()));
        }
        if self.max_fake_len() > n_items {
            return Err(Error::Param(format!(
                "fake lengths up to 2l-1 = {} exceed the universe of {n_items} items",
                self.max_fake_len()
            )));
        }
        Ok(())
    }
}

/// The anonymized list `T'` plus what the data owner knows about it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FsDb {
    pub db_prime: TransactionDb,
    pub provenance: Option<ProvenanceSidecar>,
    pub params: FsParams,
    pub real_count: usize,
}

impl FsDb {
    /// Assembles an `FsDb` from explicit rows and labels.
    pub fn from_labelled(
        db_prime: TransactionDb,
        origin: Vec<Origin>,
        params: FsParams,
    ) -> Result<Self> {
        if origin.len() != db_prime.len() {
            return Err(Error::Param(format!(
                "{} labels for {} transactions",
                origin.len(),
                db_prime.len()
            )));
        }
        let provenance = ProvenanceSidecar::from_origins(origin);
        Ok(FsDb {
            real_count: provenance.real_count(),
            db_prime,
            provenance: Some(provenance),
            params,
        })
    }

    pub fn fake_count(&self) -> usize {
        self.db_prime.len() - self.real_count
    }
}

pub fn fs_anonymize(
    db: &TransactionDb,
    params: FsParams,
    seed: u64,
    emit_provenance: bool,
) -> Result<FsDb> {
    if db.is_empty() {
        return Err(Error::Param("cannot anonymize an empty database".into()));
    }
    params.validate(db.n_items())?;
    let n = db.n_items();
    let max_block = (2 * params.w as usize).saturating_sub(1);
    let max_len = params.max_fake_len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut rows = Vec::with_capacity(db.len() * (1 + params.w as usize));
    let mut origin = Vec::new();
    for real in db {
        rows.push(real.clone());
        if emit_provenance {
            origin.push(Origin::Real);
        }
        if params.w == 0 {
            continue;
        }
        let block = rng.gen_range(1..=max_block);
        for _ in 0..block {
            let len = rng.gen_range(1..=max_len);
            let mut items: Vec<ItemId> =
                index::sample(&mut rng, n, len).into_iter().map(|i| ItemId(i as u32)).collect();
            items.sort_unstable();
            rows.push(Transaction::from_sorted_unchecked(items));
            if emit_provenance {
                origin.push(Origin::Fake);
            }
        }
    }
    Ok(FsDb {
        db_prime: TransactionDb::new_unchecked(n, rows),
        provenance: emit_provenance.then(|| ProvenanceSidecar::from_origins(origin)),
        params,
        real_count: db.len(),
    })
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Probability that a uniformly drawn `y`-subset of `n` items contains a
/// fixed `k`-itemset: `C(y,k) / C(n,k)`, zero when `y < k` or `k > n`.
pub fn fake_support_prob(n: u64, y: u64, k: u64) -> BigRational {
    if k > n || y < k {
        return BigRational::zero();
    }
    BigRational::new(binomial(y, k).into(), binomial(n, k).into())
}

/// Per-fake probability of supporting a fixed `k`-itemset when lengths are
/// uniform on `1..=2l-1`: `sum_{Y=k}^{2l-1} C(Y,k) / (C(n,k) (2l-1))`.
pub fn fake_support_mass_exact(n: u64, l: u64, k: u64) -> BigRational {
    let top = 2 * l - 1;
    if k == 0 {
        return BigRational::one();
    }
    if k > top || k > n {
        return BigRational::zero();
    }
    let sum: BigUint = (k..=top).map(|y| binomial(y, k)).sum();
    BigRational::new(sum.into(), (binomial(n, k) * BigUint::from(top)).into())
}

pub fn fake_support_mass(n: usize, l: u32, k: usize) -> f64 {
    fake_support_mass_exact(n as u64, l as u64, k as u64)
        .to_f64()
        .unwrap_or(0.0)
}

/// Expected number of fakes supporting a fixed `k`-itemset when `wN` fakes
/// are inserted.
pub fn expected_fake_support(n: usize, l: u32, w: f64, n_real: usize, k: usize) -> f64 {
    w * n_real as f64 * fake_support_mass(n, l, k)
}

/// Threshold on `T'` equivalent to `s_min` on the original data:
/// `(s_min + w * mass_k) / (1 + w)`.
pub fn corrected_min_support(s_min: f64, n: usize, l: u32, w: f64, k: usize) -> f64 {
    (s_min + w * fake_support_mass(n, l, k)) / (1.0 + w)
}

/// Inverse of [`corrected_min_support`]: `s = s'(1+w) - w * mass_k`.
pub fn debias_support(s_prime: f64, n: usize, l: u32, w: f64, k: usize) -> f64 {
    s_prime * (1.0 + w) - w * fake_support_mass(n, l, k)
}

/// Per-level thresholds `k -> s'_k` for mining `T'`.
pub fn corrected_thresholds(s_min: f64, n: usize, params: FsParams) -> LevelThresholds {
    let w = params.w as f64;
    let levels = (1..=params.max_fake_len())
        .map(|k| corrected_min_support(s_min, n, params.l, w, k))
        .collect();
    LevelThresholds::per_level(levels, s_min / (1.0 + w))
}

/// Mines `T'` at the corrected thresholds and reports de-biased supports.
pub fn fs_mine_db(
    db_prime: &TransactionDb,
    params: FsParams,
    s_min: f64,
    max_k: Option<usize>,
) -> Vec<EstimatedItemset> {
    let n = db_prime.n_items();
    let th = corrected_thresholds(s_min, n, params);
    let w = params.w as f64;
    mine_frequent(db_prime, &th, max_k)
        .into_iter()
        .map(|f| EstimatedItemset {
            support: debias_support(f.support.value(), n, params.l, w, f.itemset.len()),
            itemset: f.itemset,
        })
        .collect()
}

pub fn fs_mine(fsdb: &FsDb, s_min: f64, max_k: Option<usize>) -> Vec<EstimatedItemset> {
    fs_mine_db(&fsdb.db_prime, fsdb.params, s_min, max_k)
}
