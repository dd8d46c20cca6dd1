//! MASK bit distortion, reconstruction probabilities and support estimation
//! over distorted data.
//!
//! Every bit of the dense `N x n` matrix is kept with probability `p` and
//! flipped otherwise. Supports are recovered per candidate by counting the
//! `2^k` distorted bit patterns over its columns and applying the inverse of
//! the `2^k x 2^k` transition matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::apriori::{canonical_cmp, join_candidates, EstimatedItemset, Itemset};
use crate::bitmap::{and_assign, popcount, ItemBitmaps};
use crate::error::{Error, Result};
use crate::market_basket::{compute_stats, ItemId, Origin, ProvenanceSidecar, Transaction, TransactionDb};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsParams {
    /// Probability of keeping a bit.
    pub p: f64,
    /// Weight of one-bit reconstruction in the overall privacy.
    pub a: f64,
}

impl PsParams {
    pub fn new(p: f64, a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Param(format!("keep probability p must lie in [0,1], got {p}")));
        }
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Param(format!("privacy weight a must lie in [0,1], got {a}")));
        }
        Ok(PsParams { p, a })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsPrivacy {
    pub r1: f64,
    pub r0: f64,
    /// Overall reconstruction probability `a R1 + (1-a) R0`.
    pub p_r: f64,
    /// Preserved privacy `1 - p_r`.
    pub p_p: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distorted {
    pub db: TransactionDb,
    pub provenance: Option<ProvenanceSidecar>,
}

/// Flips each bit independently with probability `1 - p`, visiting bits in
/// row-major order of the dense matrix.
pub fn ps_distort(db: &TransactionDb, p: f64, seed: u64, emit_provenance: bool) -> Result<Distorted> {
    let rows = distort_rows(db, p, seed)?;
    let provenance = emit_provenance.then(|| ProvenanceSidecar {
        origin: vec![Origin::Real; db.len()],
        original: db.iter().cloned().map(Some).collect(),
    });
    Ok(Distorted { db: rows, provenance })
}

pub(crate) fn distort_rows(db: &TransactionDb, p: f64, seed: u64) -> Result<TransactionDb> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Param(format!("keep probability p must lie in [0,1], got {p}")));
    }
    let n = db.n_items();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(db.len());
    for t in db {
        let mut items = Vec::new();
        let mut orig = t.items().iter().peekable();
        for i in 0..n as u32 {
            let bit = if orig.peek().map(|x| x.0) == Some(i) {
                orig.next();
                true
            } else {
                false
            };
            let keep = rng.gen_bool(p);
            if bit == keep {
                items.push(ItemId(i));
            }
        }
        out.push(Transaction::from_sorted_unchecked(items));
    }
    let out = TransactionDb::new_unchecked(n, out);
    if let Ok(stats) = compute_stats(&out) {
        if stats.density > 0.25 {
            log::warn!(
                "distorted database density {:.3} is high for the item-list format",
                stats.density
            );
        }
    }
    Ok(out)
}

/// Probabilities of correctly reconstructing a one bit (`R1`) and a zero bit
/// (`R0`) at 1-bit density `s0` and keep probability `p`.
pub fn reconstruction_probs(s0: f64, p: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&s0) || !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("need s0, p in [0,1], got s0={s0}, p={p}")));
    }
    let q = 1.0 - p;
    let z = 1.0 - s0;
    let d1 = s0 * p + z * q;
    let d2 = s0 * q + z * p;
    let d3 = z * p + s0 * q;
    let d4 = s0 * p + z * q;
    if d1 == 0.0 || d2 == 0.0 || d3 == 0.0 || d4 == 0.0 {
        return Err(Error::Domain(format!(
            "reconstruction undefined at s0={s0}, p={p} (zero denominator)"
        )));
    }
    let r1 = s0 * p * p / d1 + s0 * q * q / d2;
    let r0 = z * p * p / d3 + z * q * q / d4;
    Ok((r1, r0))
}

pub fn ps_privacy(s0: f64, p: f64, a: f64) -> Result<PsPrivacy> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::Domain(format!("privacy weight a must lie in [0,1], got {a}")));
    }
    let (r1, r0) = reconstruction_probs(s0, p)?;
    let p_r = (a * r1 + (1.0 - a) * r0).clamp(0.0, 1.0);
    Ok(PsPrivacy { r1, r0, p_r, p_p: 1.0 - p_r })
}

/// Preserved privacy on an evenly spaced grid of `steps + 1` values of `p`.
/// Grid points where the reconstruction is undefined are skipped.
pub fn ps_privacy_sweep(s0: f64, a: f64, steps: usize) -> Vec<(f64, f64)> {
    (0..=steps)
        .filter_map(|i| {
            let p = i as f64 / steps as f64;
            ps_privacy(s0, p, a).ok().map(|pr| (p, pr.p_p))
        })
        .collect()
}

/// `M[y][x] = P(Y = y | X = x)` over `k` bits; bit `i` of an index is the
/// value of the `i`-th item.
pub fn transition_matrix(k: usize, p: f64) -> Vec<Vec<f64>> {
    let size = 1usize << k;
    (0..size)
        .map(|y| {
            (0..size)
                .map(|x| {
                    let flips = ((x ^ y) as u32).count_ones() as i32;
                    p.powi(k as i32 - flips) * (1.0 - p).powi(flips)
                })
                .collect()
        })
        .collect()
}

/// Inverse of [`transition_matrix`] as the Kronecker power of the inverse
/// of the one-bit matrix `[[p, 1-p], [1-p, p]]`.
pub fn inverse_transition_matrix(k: usize, p: f64) -> Vec<Vec<f64>> {
    let det = 2.0 * p - 1.0;
    let same = p / det;
    let diff = -(1.0 - p) / det;
    let size = 1usize << k;
    (0..size)
        .map(|x| {
            (0..size)
                .map(|y| {
                    let flips = ((x ^ y) as u32).count_ones() as i32;
                    same.powi(k as i32 - flips) * diff.powi(flips)
                })
                .collect()
        })
        .collect()
}

/// Applies the one-bit map `[[same, diff], [diff, same]]` to every bit of a
/// pattern vector, which equals multiplying by its Kronecker power.
fn apply_per_bit(v: &[f64], same: f64, diff: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    let mut stride = 1;
    while stride < out.len() {
        for base in (0..out.len()).step_by(2 * stride) {
            for i in base..base + stride {
                let (zero, one) = (out[i], out[i + stride]);
                out[i] = same * zero + diff * one;
                out[i + stride] = diff * zero + same * one;
            }
        }
        stride *= 2;
    }
    out
}

/// Expected distorted pattern counts for true pattern counts `x`.
pub fn forward_counts(x: &[f64], p: f64) -> Vec<f64> {
    apply_per_bit(x, p, 1.0 - p)
}

/// True pattern counts recovered from distorted pattern counts `y`.
pub fn invert_counts(y: &[f64], p: f64) -> Vec<f64> {
    let det = 2.0 * p - 1.0;
    apply_per_bit(y, p / det, -(1.0 - p) / det)
}

/// Support estimator over MASK-distorted data.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskEstimator {
    pub p: f64,
    pub k_max: usize,
    pub epsilon: f64,
}

impl MaskEstimator {
    pub fn new(p: f64) -> Self {
        MaskEstimator { p, k_max: 4, epsilon: 1e-3 }
    }

    pub(crate) fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Param(format!("keep probability p must lie in [0,1], got {}", self.p)));
        }
        let cond = (2.0 * self.p - 1.0).abs();
        if cond < self.epsilon {
            return Err(Error::IllConditioned(cond));
        }
        Ok(())
    }

    /// Estimated support counts (not divided by `N`) aligned with `itemsets`.
    pub(crate) fn estimate_counts(&self, bitmaps: &ItemBitmaps, itemsets: &[Itemset]) -> Result<Vec<f64>> {
        self.check()?;
        if let Some(big) = itemsets.iter().find(|s| s.len() > self.k_max) {
            return Err(Error::ItemsetTooLarge { k: big.len(), k_max: self.k_max });
        }
        let ones_rows: Vec<Vec<f64>> = (0..=self.k_max)
            .map(|k| {
                let mut inv = inverse_transition_matrix(k, self.p);
                inv.swap_remove((1 << k) - 1)
            })
            .collect();
        let rows = bitmaps.rows() as f64;
        Ok(itemsets
            .par_iter()
            .map(|set| {
                let patterns = pattern_counts(bitmaps, set.items());
                if set.is_empty() {
                    return rows;
                }
                ones_rows[set.len()].iter().zip(&patterns).map(|(a, b)| a * b).sum()
            })
            .collect())
    }
}

/// Counts of each distorted bit pattern over the columns of `items`.
fn pattern_counts(bitmaps: &ItemBitmaps, items: &[ItemId]) -> Vec<f64> {
    let k = items.len();
    let size = 1usize << k;
    // subset supports via incremental intersections
    let mut subset_counts = vec![0u64; size];
    let mut subset_bits: Vec<Vec<u64>> = Vec::with_capacity(size);
    subset_bits.push(bitmaps.all_rows());
    subset_counts[0] = bitmaps.rows() as u64;
    for mask in 1..size {
        let top = usize::BITS - 1 - mask.leading_zeros();
        let rest = mask & !(1 << top);
        let mut bits = subset_bits[rest].clone();
        and_assign(&mut bits, bitmaps.item(items[top as usize]));
        subset_counts[mask] = popcount(&bits);
        subset_bits.push(bits);
    }
    // exact patterns by inclusion-exclusion over supersets
    (0..size)
        .map(|pattern| {
            let free = !pattern & (size - 1);
            let mut total: i64 = 0;
            let mut sub = free;
            loop {
                let sign = if (sub.count_ones() & 1) == 0 { 1 } else { -1 };
                total += sign * subset_counts[pattern | sub] as i64;
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & free;
            }
            total as f64
        })
        .collect()
}

/// Estimated original supports of `itemsets`. Values may fall outside
/// `[0,1]`; see [`clamp_estimates`].
pub fn ps_estimate_supports(
    db_distorted: &TransactionDb,
    estimator: &MaskEstimator,
    itemsets: &[Itemset],
) -> Result<Vec<EstimatedItemset>> {
    if db_distorted.is_empty() {
        return Err(Error::EmptyDb);
    }
    let bitmaps = ItemBitmaps::build(db_distorted);
    let counts = estimator.estimate_counts(&bitmaps, itemsets)?;
    let n = db_distorted.len() as f64;
    Ok(itemsets
        .iter()
        .cloned()
        .zip(counts)
        .map(|(itemset, c)| EstimatedItemset { itemset, support: c / n })
        .collect())
}

pub fn clamp_estimates(estimates: &[EstimatedItemset]) -> Vec<EstimatedItemset> {
    estimates
        .iter()
        .map(|e| EstimatedItemset { itemset: e.itemset.clone(), support: e.support.clamp(0.0, 1.0) })
        .collect()
}

/// Level-wise search over scored candidates. `score` maps a level's
/// candidates to a numeric score; level-`k` candidates scoring at least
/// `keep_min(k)` are output and those at least `join_min(k)` seed level
/// `k + 1`.
pub(crate) fn mine_levelwise<F, K, J>(
    n_items: usize,
    max_k: usize,
    keep_min: K,
    join_min: J,
    mut score: F,
) -> Result<Vec<EstimatedItemset>>
where
    F: FnMut(&[Itemset]) -> Result<Vec<f64>>,
    K: Fn(usize) -> f64,
    J: Fn(usize) -> f64,
{
    let mut out = Vec::new();
    let mut candidates: Vec<Itemset> =
        (0..n_items as u32).map(|i| Itemset::from_sorted(vec![ItemId(i)])).collect();
    for k in 1..=max_k {
        if candidates.is_empty() {
            break;
        }
        let scores = score(&candidates)?;
        let (keep, join) = (keep_min(k), join_min(k));
        let mut survivors = Vec::new();
        for (cand, s) in candidates.into_iter().zip(scores) {
            if s >= keep {
                out.push(EstimatedItemset { itemset: cand.clone(), support: s });
            }
            if s >= join {
                survivors.push(cand);
            }
        }
        if k < max_k {
            candidates = join_candidates(&survivors);
        } else {
            candidates = Vec::new();
        }
    }
    out.sort_by(|a, b| canonical_cmp(&a.itemset, &b.itemset));
    Ok(out)
}

/// Apriori over estimated supports; `slack` lowers the join threshold.
pub fn ps_mine(
    db_distorted: &TransactionDb,
    estimator: &MaskEstimator,
    s_min: f64,
    max_k: usize,
    slack: f64,
) -> Result<Vec<EstimatedItemset>> {
    if db_distorted.is_empty() {
        return Err(Error::EmptyDb);
    }
    estimator.check()?;
    let bitmaps = ItemBitmaps::build(db_distorted);
    let n = db_distorted.len() as f64;
    let max_k = max_k.min(estimator.k_max);
    mine_levelwise(db_distorted.n_items(), max_k, |_| s_min, |_| s_min - slack, |cands| {
        Ok(estimator.estimate_counts(&bitmaps, cands)?.into_iter().map(|c| c / n).collect())
    })
}
