//! Hybrid scheme: fake-transaction insertion followed by MASK distortion of
//! the whole anonymized list.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::apriori::{min_count, EstimatedItemset};
use crate::bitmap::ItemBitmaps;
use crate::error::{Error, Result};
use crate::fs_scheme::{corrected_min_support, debias_support, fs_anonymize, FsParams};
use crate::market_basket::{ProvenanceSidecar, TransactionDb};
use crate::ps_scheme::{distort_rows, mine_levelwise, ps_privacy, MaskEstimator, PsParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HsParams {
    pub fs: FsParams,
    pub ps: PsParams,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HsDb {
    pub db: TransactionDb,
    /// Real/fake flags plus every row before distortion.
    pub provenance: Option<ProvenanceSidecar>,
    pub real_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HsPrivacy {
    pub p_r: f64,
    pub p_p: f64,
}

/// Seeds for the insertion and distortion stages.
pub fn split_seed(seed: u64) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (rng.next_u64(), rng.next_u64())
}

pub fn hs_anonymize(
    db: &TransactionDb,
    params: HsParams,
    seed: u64,
    emit_provenance: bool,
) -> Result<HsDb> {
    let (fs_seed, ps_seed) = split_seed(seed);
    let fs = fs_anonymize(db, params.fs, fs_seed, emit_provenance)?;
    let distorted = distort_rows(&fs.db_prime, params.ps.p, ps_seed)?;
    let provenance = fs.provenance.map(|side| ProvenanceSidecar {
        origin: side.origin,
        original: fs.db_prime.iter().cloned().map(Some).collect(),
    });
    Ok(HsDb { db: distorted, provenance, real_count: fs.real_count })
}

/// Reconstruction probability `P_r^PS / (1 + w)` and its complement.
pub fn hs_privacy_from_ps(w: f64, p_r_ps: f64) -> Result<HsPrivacy> {
    if !(w >= 0.0) {
        return Err(Error::Domain(format!("w must be >= 0, got {w}")));
    }
    if !(0.0..=1.0).contains(&p_r_ps) {
        return Err(Error::Domain(format!("P_r^PS must lie in [0,1], got {p_r_ps}")));
    }
    let p_r = p_r_ps / (1.0 + w);
    Ok(HsPrivacy { p_r, p_p: 1.0 - p_r })
}

pub fn hs_privacy(w: f64, s0: f64, p: f64, a: f64) -> Result<HsPrivacy> {
    hs_privacy_from_ps(w, ps_privacy(s0, p, a)?.p_r)
}

/// Smallest integer `w2 >= 0` with `1 - p_r_ps / (1 + w2) >= target`.
pub fn hs_equivalent_w(target: f64, p_r_ps: f64) -> Result<u32> {
    if !(0.0..1.0).contains(&target) {
        return Err(Error::Domain(format!("target privacy must lie in [0,1), got {target}")));
    }
    if !(p_r_ps > 0.0 && p_r_ps <= 1.0) {
        return Err(Error::Domain(format!("P_r^PS must lie in (0,1], got {p_r_ps}")));
    }
    let meets = |w: f64| 1.0 - p_r_ps / (1.0 + w) >= target - 1e-12;
    let guess = (p_r_ps / (1.0 - target) - 1.0).ceil().max(0.0);
    if guess > u32::MAX as f64 {
        return Err(Error::Domain(format!("target {target} needs w beyond u32 range")));
    }
    let mut w = guess as u32;
    while w > 0 && meets((w - 1) as f64) {
        w -= 1;
    }
    while !meets(w as f64) {
        w += 1;
    }
    Ok(w)
}

/// Fake-to-real ratio plain insertion needs for `target`.
pub fn fs_required_w(target: f64) -> Result<u32> {
    hs_equivalent_w(target, 1.0)
}

/// Mines a hybrid-anonymized database: MASK estimation of `T'` supports,
/// then the fake-insertion de-bias, thresholded at `s_min` on the original
/// scale.
pub fn hs_mine(
    db_hs: &TransactionDb,
    params: HsParams,
    s_min: f64,
    max_k: usize,
) -> Result<Vec<EstimatedItemset>> {
    hs_mine_with(db_hs, params, &MaskEstimator::new(params.ps.p), s_min, max_k)
}

pub fn hs_mine_with(
    db_hs: &TransactionDb,
    params: HsParams,
    estimator: &MaskEstimator,
    s_min: f64,
    max_k: usize,
) -> Result<Vec<EstimatedItemset>> {
    if db_hs.is_empty() {
        return Err(Error::EmptyDb);
    }
    estimator.check()?;
    let n = db_hs.n_items();
    let rows = db_hs.len();
    let max_k = max_k.min(estimator.k_max);
    let w = params.fs.w as f64;
    let l = params.fs.l;
    // count-scale thresholds on T', as in fake-insertion mining
    let keep: Vec<f64> = (1..=max_k)
        .map(|k| min_count(corrected_min_support(s_min, n, l, w, k), rows).max(1) as f64)
        .collect();
    let mut join = keep.clone();
    for k in (0..max_k.saturating_sub(1)).rev() {
        join[k] = join[k].min(join[k + 1]);
    }
    let bitmaps = ItemBitmaps::build(db_hs);
    let raw = mine_levelwise(n, max_k, |k| keep[k - 1], |k| join[k - 1], |cands| {
        estimator.estimate_counts(&bitmaps, cands)
    })?;
    Ok(raw
        .into_iter()
        .map(|e| EstimatedItemset {
            support: debias_support(e.support / rows as f64, n, l, w, e.itemset.len()),
            itemset: e.itemset,
        })
        .collect())
}
