//! Empirical adversaries against fake-transaction insertion.
//!
//! * Sequential random reconstruction: the adversary draws rows uniformly,
//!   returning fakes to the pool and removing each real it finds, so step
//!   `i` succeeds on the first draw with probability `(N-i)/(F+N-i)`.
//! * Guided filtering: rows are scored by the mean log-likelihood ratio of
//!   their items under a prior of real item frequencies versus the uniform
//!   fake model, and low scorers are removed.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fs_scheme::{FsDb, FsParams};
use crate::market_basket::{Origin, ProvenanceSidecar, TransactionDb};
use crate::privacy_analysis::{fs_average_filtered, Population};

#[derive(Clone, Debug, PartialEq)]
pub struct AttackOutcome {
    /// Fraction of fakes removed.
    pub gamma_achieved: f64,
    /// Fraction of reals wrongly removed.
    pub real_loss: f64,
    pub residual_privacy: f64,
    pub per_step_success: Vec<f64>,
}

impl AttackOutcome {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "gamma_achieved={:.6}", self.gamma_achieved).unwrap();
        writeln!(s, "real_loss={:.6}", self.real_loss).unwrap();
        writeln!(s, "residual_privacy={:.6}", self.residual_privacy).unwrap();
        s
    }

    pub fn per_step_csv(&self) -> String {
        let mut s = String::from("step,success_frequency\n");
        for (i, f) in self.per_step_success.iter().enumerate() {
            writeln!(s, "{i},{f:.6}").unwrap();
        }
        s
    }
}

/// Aggregated first-draw successes of a sequential reconstruction attack.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionStats {
    pub trials: u64,
    pub real_count: usize,
    pub fake_count: usize,
    /// `successes[i]`: trials whose `i`-th step hit a real on the first draw.
    pub successes: Vec<u64>,
}

impl ReconstructionStats {
    pub fn frequencies(&self) -> Vec<f64> {
        self.successes.iter().map(|&s| s as f64 / self.trials as f64).collect()
    }

    /// Empirical average-case privacy `1 - mean step frequency`.
    pub fn empirical_privacy(&self) -> f64 {
        let f = self.frequencies();
        1.0 - f.iter().sum::<f64>() / f.len().max(1) as f64
    }
}

const TRIAL_CHUNKS: u64 = 64;

pub fn random_reconstruction(fsdb: &FsDb, trials: u64, seed: u64) -> Result<ReconstructionStats> {
    let side = fsdb.provenance.as_ref().ok_or(Error::MissingProvenance)?;
    reconstruct_from_labels(&side.origin, trials, seed)
}

/// Trials are split into a fixed number of chunks, each with its own RNG
/// stream, so the result does not depend on the thread count.
pub fn reconstruct_from_labels(origin: &[Origin], trials: u64, seed: u64) -> Result<ReconstructionStats> {
    if trials == 0 {
        return Err(Error::Param("trials must be >= 1".into()));
    }
    let real_count = origin.iter().filter(|o| **o == Origin::Real).count();
    let fake_count = origin.len() - real_count;
    let per_chunk = trials.div_ceil(TRIAL_CHUNKS);
    let partials: Vec<Vec<u64>> = (0..TRIAL_CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let begin = chunk * per_chunk;
            let end = ((chunk + 1) * per_chunk).min(trials);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let mut successes = vec![0u64; real_count];
            let mut pool: Vec<usize> = Vec::with_capacity(origin.len());
            for _ in begin..end {
                pool.clear();
                pool.extend(0..origin.len());
                for slot in successes.iter_mut() {
                    let mut first = true;
                    loop {
                        let idx = rng.gen_range(0..pool.len());
                        if origin[pool[idx]] == Origin::Real {
                            if first {
                                *slot += 1;
                            }
                            pool.swap_remove(idx);
                            break;
                        }
                        first = false;
                    }
                }
            }
            successes
        })
        .collect();
    let mut successes = vec![0u64; real_count];
    for part in partials {
        for (acc, v) in successes.iter_mut().zip(part) {
            *acc += v;
        }
    }
    Ok(ReconstructionStats { trials, real_count, fake_count, successes })
}

/// Mean log-likelihood ratio of each row's items: prior frequency versus
/// the uniform fake inclusion probability `l/n`, with `l` the mean row
/// length. Empty rows score 0.
pub fn transaction_scores(db: &TransactionDb, side_info: &[f64]) -> Result<Vec<f64>> {
    let n = db.n_items();
    if side_info.len() != n {
        return Err(Error::Param(format!(
            "side information covers {} items, database has {n}",
            side_info.len()
        )));
    }
    if db.is_empty() {
        return Ok(Vec::new());
    }
    let l = db.total_items() as f64 / db.len() as f64;
    let fake_prob = (l / n as f64).max(f64::MIN_POSITIVE);
    let llr: Vec<f64> = side_info.iter().map(|&q| (q.max(1e-12) / fake_prob).ln()).collect();
    Ok(db
        .iter()
        .map(|t| {
            if t.is_empty() {
                0.0
            } else {
                t.items().iter().map(|id| llr[id.index()]).sum::<f64>() / t.len() as f64
            }
        })
        .collect())
}

/// Otsu threshold on a histogram of `scores`: the cut maximising the
/// between-class variance, which sits in the valley of a bimodal mixture.
pub fn valley_threshold(scores: &[f64], bins: usize) -> Option<f64> {
    let finite: Vec<f64> = scores.iter().copied().filter(|s| s.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if finite.is_empty() || bins < 2 || !(hi > lo) {
        return None;
    }
    let width = (hi - lo) / bins as f64;
    let mut hist = vec![0u64; bins];
    for s in &finite {
        let b = (((s - lo) / width) as usize).min(bins - 1);
        hist[b] += 1;
    }
    let total = finite.len() as f64;
    let centre = |b: usize| lo + (b as f64 + 0.5) * width;
    let sum_all: f64 = hist.iter().enumerate().map(|(b, &c)| c as f64 * centre(b)).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let mut best = (f64::MIN, None);
    for (b, &c) in hist.iter().enumerate().take(bins - 1) {
        w0 += c as f64;
        sum0 += c as f64 * centre(b);
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best.0 {
            best = (between, Some(lo + (b + 1) as f64 * width));
        }
    }
    best.1
}

#[derive(Clone, Debug, PartialEq)]
pub struct GuidedFilter {
    pub filtered: TransactionDb,
    /// Per input row: whether it survived.
    pub kept: Vec<bool>,
    /// Present when ground truth was supplied.
    pub outcome: Option<AttackOutcome>,
}

/// Removes rows scoring below `threshold`.
pub fn guided_filter(
    db_prime: &TransactionDb,
    side_info: &[f64],
    threshold: f64,
    provenance: Option<&ProvenanceSidecar>,
) -> Result<GuidedFilter> {
    let scores = transaction_scores(db_prime, side_info)?;
    let kept: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
    let rows = db_prime
        .iter()
        .zip(&kept)
        .filter(|(_, k)| **k)
        .map(|(t, _)| t.clone())
        .collect();
    let filtered = TransactionDb::new_unchecked(db_prime.n_items(), rows);
    let outcome = match provenance {
        None => None,
        Some(side) => {
            if side.len() != db_prime.len() {
                return Err(Error::Param(format!(
                    "provenance has {} rows, database {}",
                    side.len(),
                    db_prime.len()
                )));
            }
            Some(measure_filter(&side.origin, &kept)?)
        }
    };
    Ok(GuidedFilter { filtered, kept, outcome })
}

fn measure_filter(origin: &[Origin], kept: &[bool]) -> Result<AttackOutcome> {
    let (mut fakes, mut fakes_removed, mut reals, mut reals_removed) = (0usize, 0usize, 0usize, 0usize);
    for (o, k) in origin.iter().zip(kept) {
        match o {
            Origin::Fake => {
                fakes += 1;
                fakes_removed += usize::from(!k);
            }
            Origin::Real => {
                reals += 1;
                reals_removed += usize::from(!k);
            }
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let gamma = ratio(fakes_removed, fakes);
    let w = ratio(fakes, reals);
    let population = if reals >= 3 { Population::Finite(reals) } else { Population::Limit };
    Ok(AttackOutcome {
        gamma_achieved: gamma,
        real_loss: ratio(reals_removed, reals),
        residual_privacy: fs_average_filtered(w, population, gamma)?,
        per_step_success: Vec::new(),
    })
}

/// Average-case privacy left after a filter of measured efficiency.
pub fn residual_privacy(params: &FsParams, population: Population, outcome: &AttackOutcome) -> Result<f64> {
    fs_average_filtered(params.w as f64, population, outcome.gamma_achieved)
}
