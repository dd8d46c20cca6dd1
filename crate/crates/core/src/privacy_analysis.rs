//! Closed-form privacy of fake-transaction insertion: worst case, average
//! case over a sequential reconstruction attack, and the average case after
//! a filter removed a fraction `gamma` of the fakes.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Finite sums up to this many real transactions are evaluated in exact
/// rational arithmetic; larger ones use compensated summation.
pub const EXACT_SUM_MAX_N: usize = 128;

/// Number of real transactions the average case is taken over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Population {
    Finite(usize),
    /// `N -> infinity`.
    Limit,
}

impl std::fmt::Display for Population {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Population::Finite(n) => write!(f, "{n}"),
            Population::Limit => f.write_str("limit"),
        }
    }
}

/// `1 - 1/(1+w)`.
pub fn fs_worst(w: f64) -> f64 {
    1.0 - 1.0 / (1.0 + w)
}

/// Success probability of the `i`-th step of a sequential attack:
/// `(N-i) / (wN + N - i)`.
pub fn reconstruction_step(w: f64, n: usize, i: usize) -> f64 {
    let remaining = (n - i) as f64;
    remaining / (w * n as f64 + remaining)
}

fn check_w(w: f64) -> Result<()> {
    if !(w >= 0.0) || !w.is_finite() {
        return Err(Error::Domain(format!("w must be finite and >= 0, got {w}")));
    }
    Ok(())
}

/// Mean reconstruction probability `(1/N) sum_{i<N} (N-i)/(wN+N-i)`.
pub fn average_reconstruction(w: f64, population: Population) -> Result<f64> {
    check_w(w)?;
    match population {
        Population::Limit => Ok(1.0 - limit_privacy(w)),
        Population::Finite(n) if n < 3 => {
            Err(Error::Domain(format!("average case needs N >= 3, got {n}")))
        }
        Population::Finite(n) if n <= EXACT_SUM_MAX_N => Ok(exact_mean(w, n)),
        Population::Finite(n) => Ok(compensated_mean(w, n)),
    }
}

/// `w ln((1+w)/w)`, the large-N average-case privacy.
fn limit_privacy(w: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * (1.0 / w).ln_1p()
    }
}

fn exact_mean(w: f64, n: usize) -> f64 {
    let w = BigRational::from_float(w).expect("finite w");
    let wn = w * BigRational::from_integer(BigInt::from(n));
    let mut sum = BigRational::zero();
    for j in 1..=n {
        let j = BigRational::from_integer(BigInt::from(j));
        sum += &j / (&wn + &j);
    }
    (sum / BigRational::from_integer(BigInt::from(n))).to_f64().unwrap_or(f64::NAN)
}

fn compensated_mean(w: f64, n: usize) -> f64 {
    // Neumaier summation
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for i in 0..n {
        let term = reconstruction_step(w, n, i);
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    (sum + comp) / n as f64
}

/// Average-case privacy `1 - mean reconstruction probability`.
pub fn fs_average(w: f64, population: Population) -> Result<f64> {
    Ok(1.0 - average_reconstruction(w, population)?)
}

/// Average-case privacy after a filter removed a fraction `gamma` of the
/// fakes, i.e. with effective ratio `(1-gamma) w`.
pub fn fs_average_filtered(w: f64, population: Population, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!("gamma must lie in [0,1], got {gamma}")));
    }
    check_w(w)?;
    fs_average((1.0 - gamma) * w, population)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrivacyReport {
    pub w: f64,
    pub worst_case: f64,
    pub average_case: f64,
    /// `(gamma, privacy)` pairs.
    pub filtered: Vec<(f64, f64)>,
    pub population: Population,
}

pub fn privacy_report(w: f64, population: Population, gammas: &[f64]) -> Result<PrivacyReport> {
    let filtered = gammas
        .iter()
        .map(|&g| fs_average_filtered(w, population, g).map(|v| (g, v)))
        .collect::<Result<_>>()?;
    Ok(PrivacyReport {
        w,
        worst_case: fs_worst(w),
        average_case: fs_average(w, population)?,
        filtered,
        population,
    })
}

impl PrivacyReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "w={}", self.w).unwrap();
        writeln!(s, "N={}", self.population).unwrap();
        writeln!(s, "worst_case={:.6}", self.worst_case).unwrap();
        writeln!(s, "average_case={:.6}", self.average_case).unwrap();
        for (g, v) in &self.filtered {
            writeln!(s, "filtered[gamma={g}]={v:.6}").unwrap();
        }
        s
    }
}

/// Rows are filtering efficiencies, columns fake ratios.
#[derive(Clone, Debug, PartialEq)]
pub struct PrivacyTable {
    pub ws: Vec<f64>,
    pub gammas: Vec<f64>,
    pub cells: Vec<Vec<f64>>,
}

pub fn privacy_table(ws: &[f64], gammas: &[f64], population: Population) -> Result<PrivacyTable> {
    let cells = gammas
        .iter()
        .map(|&g| ws.iter().map(|&w| fs_average_filtered(w, population, g)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(PrivacyTable { ws: ws.to_vec(), gammas: gammas.to_vec(), cells })
}

impl PrivacyTable {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        write!(s, "{:<11}", "").unwrap();
        for w in &self.ws {
            write!(s, " {:>8}", format!("w={w}")).unwrap();
        }
        s.push('\n');
        for (g, row) in self.gammas.iter().zip(&self.cells) {
            write!(s, "{:<11}", format!("gamma={g:.1}")).unwrap();
            for v in row {
                write!(s, " {v:>8.4}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("gamma");
        for w in &self.ws {
            write!(s, ",w={w}").unwrap();
        }
        s.push('\n');
        for (g, row) in self.gammas.iter().zip(&self.cells) {
            write!(s, "{g:.1}").unwrap();
            for v in row {
                write!(s, ",{v:.4}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Largest absolute difference against a reference grid of equal shape.
    pub fn max_abs_diff(&self, reference: &[[f64; 10]]) -> f64 {
        self.cells
            .iter()
            .zip(reference)
            .flat_map(|(row, r)| row.iter().zip(r.iter()).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

pub const TABLE1_WS: [f64; 10] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
pub const TABLE1_GAMMAS: [f64; 8] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];

/// Published filtered average-case privacy, rows `gamma = 0.0..0.7`,
/// columns `w = 1..10`.
pub const TABLE1_REFERENCE: [[f64; 10]; 8] = [
    [0.6929, 0.8108, 0.8629, 0.8925, 0.9115, 0.9248, 0.9347, 0.9422, 0.9482, 0.9531],
    [0.6722, 0.7951, 0.8506, 0.8823, 0.9029, 0.9174, 0.9281, 0.9363, 0.9429, 0.9482],
    [0.6485, 0.7766, 0.8358, 0.8701, 0.8925, 0.9083, 0.9200, 0.9291, 0.9363, 0.9422],
    [0.6208, 0.7544, 0.8177, 0.8549, 0.8795, 0.8969, 0.9099, 0.9200, 0.9281, 0.9347],
    [0.5882, 0.7271, 0.7951, 0.8358, 0.8629, 0.8823, 0.8969, 0.9083, 0.9174, 0.9248],
    [0.5490, 0.6929, 0.7660, 0.8108, 0.8410, 0.8629, 0.8795, 0.8925, 0.9029, 0.9115],
    [0.5007, 0.6485, 0.7271, 0.7766, 0.8108, 0.8358, 0.8549, 0.8701, 0.8823, 0.8925],
    [0.4395, 0.5882, 0.6722, 0.7271, 0.7660, 0.7951, 0.8177, 0.8358, 0.8506, 0.8629],
];

pub const TABLE1_TOLERANCE: f64 = 2e-3;

pub fn table1(population: Population) -> Result<PrivacyTable> {
    privacy_table(&TABLE1_WS, &TABLE1_GAMMAS, population)
}
