//! Mining-error metrics and overhead of the anonymization schemes.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use crate::apriori::{mine_frequent, Itemset, ItemsetRecord, LevelThresholds};
use crate::error::{Error, Result};
use crate::fs_scheme::{fs_anonymize, fs_mine, FsParams};
use crate::hs_scheme::{hs_anonymize, hs_mine, hs_privacy_from_ps, HsParams};
use crate::market_basket::{serialized_len, TransactionDb};
use crate::privacy_analysis::fs_worst;
use crate::ps_scheme::PsParams;

/// Identity errors in percent of the true frequent set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    /// Mean absolute support error over itemsets present in both sets.
    pub support_mae: f64,
}

impl ErrorReport {
    pub fn total(&self) -> f64 {
        self.sigma_plus + self.sigma_minus
    }

    pub fn to_text(&self) -> String {
        format!(
            "sigma_plus={:.6}\nsigma_minus={:.6}\nsupport_mae={:.6}\n",
            self.sigma_plus, self.sigma_minus, self.support_mae
        )
    }
}

pub fn sigma_errors<T: ItemsetRecord, U: ItemsetRecord>(truth: &[T], mined: &[U]) -> Result<ErrorReport> {
    if truth.is_empty() {
        return Err(Error::Domain("true frequent set is empty".into()));
    }
    let truth_map: HashMap<&Itemset, f64> = truth.iter().map(|t| (t.itemset(), t.support_value())).collect();
    let mined_set: HashSet<&Itemset> = mined.iter().map(|m| m.itemset()).collect();
    let mut spurious = 0usize;
    let mut abs_err = 0.0;
    let mut shared = 0usize;
    for m in mined {
        match truth_map.get(m.itemset()) {
            Some(s) => {
                shared += 1;
                abs_err += (s - m.support_value()).abs();
            }
            None => spurious += 1,
        }
    }
    let missing = truth_map.keys().filter(|k| !mined_set.contains(*k)).count();
    let base = truth_map.len() as f64;
    Ok(ErrorReport {
        sigma_plus: 100.0 * spurious as f64 / base,
        sigma_minus: 100.0 * missing as f64 / base,
        support_mae: if shared == 0 { 0.0 } else { abs_err / shared as f64 },
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverheadReport {
    pub memory_ratio: f64,
    pub transaction_ratio: f64,
    pub mining_time_ratio: f64,
}

impl OverheadReport {
    pub fn to_text(&self) -> String {
        format!(
            "memory_ratio={:.6}\ntransaction_ratio={:.6}\nmining_time_ratio={:.6}\n",
            self.memory_ratio, self.transaction_ratio, self.mining_time_ratio
        )
    }
}

/// `timings` is (original, anonymized) mining time. Bytes are measured on
/// the serialized form.
pub fn overhead_report(
    original: &TransactionDb,
    anonymized: &TransactionDb,
    timings: (Duration, Duration),
) -> OverheadReport {
    let ratio = |a: f64, b: f64| if b == 0.0 { if a == 0.0 { 1.0 } else { f64::INFINITY } } else { a / b };
    OverheadReport {
        memory_ratio: ratio(serialized_len(anonymized) as f64, serialized_len(original) as f64),
        transaction_ratio: ratio(anonymized.len() as f64, original.len() as f64),
        mining_time_ratio: ratio(timings.1.as_secs_f64(), timings.0.as_secs_f64()),
    }
}

/// Fastest of `reps` runs of `f`.
pub fn min_duration<F: FnMut()>(reps: usize, mut f: F) -> Duration {
    (0..reps.max(1))
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed()
        })
        .min()
        .unwrap_or_default()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Fs,
    Hs,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Fs => "FS",
            SchemeKind::Hs => "HS",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorTableConfig {
    pub ws: Vec<u32>,
    pub s_mins: Vec<f64>,
    /// Keep probability used when distorting for mining.
    pub hs_p: f64,
    pub hs_a: f64,
    /// Distortion reconstruction probability behind the privacy column.
    pub privacy_p_r_ps: f64,
    pub max_k: usize,
    pub seed: u64,
}

impl Default for ErrorTableConfig {
    fn default() -> Self {
        ErrorTableConfig {
            ws: vec![2, 4],
            s_mins: vec![0.005, 0.0025, 0.001],
            hs_p: 0.9,
            hs_a: 0.5,
            privacy_p_r_ps: 0.5,
            max_k: 2,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorTableRow {
    pub scheme: SchemeKind,
    pub w: u32,
    pub privacy: f64,
    /// One report per configured `s_min`.
    pub cells: Vec<ErrorReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorTable {
    pub s_mins: Vec<f64>,
    pub rows: Vec<ErrorTableRow>,
}

impl ErrorTable {
    pub fn row(&self, scheme: SchemeKind, w: u32) -> Option<&ErrorTableRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.w == w)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("scheme,w,privacy");
        for m in &self.s_mins {
            write!(s, ",sigma_plus@{m},sigma_minus@{m}").unwrap();
        }
        s.push('\n');
        for r in &self.rows {
            write!(s, "{},{},{:.3}", r.scheme, r.w, r.privacy).unwrap();
            for c in &r.cells {
                write!(s, ",{:.3},{:.3}", c.sigma_plus, c.sigma_minus).unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{:<6}{:>4}{:>9}", "scheme", "w", "privacy");
        for m in &self.s_mins {
            write!(s, "  {:>19}", format!("s_min={m}")).unwrap();
        }
        s.push('\n');
        for r in &self.rows {
            write!(s, "{:<6}{:>4}{:>9.3}", r.scheme.to_string(), r.w, r.privacy).unwrap();
            for c in &r.cells {
                write!(s, "  {:>9.3} {:>9.3}", c.sigma_plus, c.sigma_minus).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

/// Mining error of FS and HS against plain mining of `db`, per `w` and
/// `s_min`. The same insertion seed is used for both schemes at a given `w`.
pub fn error_table(db: &TransactionDb, cfg: &ErrorTableConfig) -> Result<ErrorTable> {
    if cfg.s_mins.is_empty() || cfg.ws.is_empty() {
        return Err(Error::Param("error table needs at least one w and one s_min".into()));
    }
    let truths: Vec<_> = cfg
        .s_mins
        .iter()
        .map(|&s| mine_frequent(db, &LevelThresholds::constant(s), Some(cfg.max_k)))
        .collect();
    let ps = PsParams::new(cfg.hs_p, cfg.hs_a)?;
    let mut fs_rows = Vec::new();
    let mut hs_rows = Vec::new();
    for &w in &cfg.ws {
        let fs_params = FsParams::for_db(w, db)?;
        let seed = cfg.seed ^ (u64::from(w) << 32);
        let fsdb = fs_anonymize(db, fs_params, seed, false)?;
        let hs_params = HsParams { fs: fs_params, ps };
        let hsdb = hs_anonymize(db, hs_params, seed, false)?;
        let mut fs_cells = Vec::new();
        let mut hs_cells = Vec::new();
        for (truth, &s_min) in truths.iter().zip(&cfg.s_mins) {
            fs_cells.push(sigma_errors(truth, &fs_mine(&fsdb, s_min, Some(cfg.max_k)))?);
            hs_cells.push(sigma_errors(truth, &hs_mine(&hsdb.db, hs_params, s_min, cfg.max_k)?)?);
        }
        fs_rows.push(ErrorTableRow { scheme: SchemeKind::Fs, w, privacy: fs_worst(w as f64), cells: fs_cells });
        hs_rows.push(ErrorTableRow {
            scheme: SchemeKind::Hs,
            w,
            privacy: hs_privacy_from_ps(w as f64, cfg.privacy_p_r_ps)?.p_p,
            cells: hs_cells,
        });
    }
    fs_rows.extend(hs_rows);
    Ok(ErrorTable { s_mins: cfg.s_mins.clone(), rows: fs_rows })
}
