//! Command-line front end. Every randomized subcommand takes an explicit
//! `--seed`; outputs are buffered and committed only after the whole run
//! succeeds.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::apriori::{derive_rules, mine_frequent, write_estimated, write_frequent, write_rules, LevelThresholds};
use crate::attack_sim::{guided_filter, reconstruct_from_labels, transaction_scores, valley_threshold, AttackOutcome};
use crate::error::Error;
use crate::evaluation::{error_table, min_duration, overhead_report, sigma_errors, ErrorTableConfig};
use crate::fs_scheme::{fs_anonymize, fs_mine_db, FsParams};
use crate::hs_scheme::{fs_required_w, hs_anonymize, hs_equivalent_w, hs_mine, hs_privacy, HsParams};
use crate::market_basket::{
    compute_stats, gen_synthetic, load_db, save_db, ItemWeights, ProvenanceSidecar, TransactionDb,
};
use crate::privacy_analysis::{
    fs_average_filtered, privacy_report, privacy_table, table1, Population, TABLE1_GAMMAS, TABLE1_REFERENCE,
    TABLE1_TOLERANCE, TABLE1_WS,
};
use crate::ps_scheme::{ps_distort, ps_mine, ps_privacy, MaskEstimator, PsParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "ppmine", version, about = "Privacy-preserving association rule mining")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summary statistics of a transaction file.
    Stats(StatsArgs),
    /// Generate a synthetic database.
    Synth(SynthArgs),
    /// Anonymize a database with FS, PS or HS.
    Anonymize(AnonymizeArgs),
    /// Mine frequent itemsets, plain or from anonymized data.
    Mine(MineArgs),
    /// Closed-form privacy measures.
    Privacy(PrivacyArgs),
    /// Run an adversary against an FS-anonymized database.
    Attack(AttackArgs),
    /// Mining error and overhead of an anonymized database.
    Evaluate(EvaluateArgs),
    /// Filtering-efficiency privacy grid, checked against the reference values.
    Table1(Table1Args),
    /// FS and HS mining error per w and minimum support.
    Table3(Table3Args),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Fs,
    Ps,
    Hs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MineScheme {
    Plain,
    Fs,
    Ps,
    Hs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AttackMode {
    Random,
    Guided,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Transaction file.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Item universe size, overriding the file header.
    #[arg(long)]
    pub n_items: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n_items: usize,
    #[arg(long)]
    pub n_transactions: usize,
    #[arg(long)]
    pub avg_len: f64,
    /// Zipf exponent of item popularity; uniform when absent.
    #[arg(long)]
    pub zipf: Option<f64>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnonymizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub scheme: Scheme,
    /// Fake-to-real ratio (FS, HS).
    #[arg(long, default_value_t = 1)]
    pub w: u32,
    /// Mean fake length (FS, HS); defaults to the rounded real mean length.
    #[arg(long)]
    pub l: Option<u32>,
    /// Keep probability (PS, HS).
    #[arg(long, default_value_t = 0.9)]
    pub p: f64,
    #[arg(long)]
    pub seed: u64,
    /// Ground-truth sidecar destination.
    #[arg(long)]
    pub provenance: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MineParams {
    #[arg(long, value_enum, default_value = "plain")]
    pub scheme: MineScheme,
    #[arg(long)]
    pub s_min: f64,
    #[arg(long)]
    pub max_k: Option<usize>,
    /// Fake-to-real ratio used at anonymization (FS, HS).
    #[arg(long)]
    pub w: Option<u32>,
    /// Mean fake length used at anonymization (FS, HS).
    #[arg(long)]
    pub l: Option<u32>,
    /// Keep probability used at anonymization (PS, HS).
    #[arg(long)]
    pub p: Option<f64>,
    /// Amount by which the PS join threshold is lowered.
    #[arg(long, default_value_t = 0.0)]
    pub slack: f64,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub params: MineParams,
    /// Also derive rules at this confidence (plain mining only).
    #[arg(long)]
    pub min_confidence: Option<f64>,
    /// Rules destination; standard output after the itemsets when absent.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrivacyArgs {
    /// Print the filtering-efficiency grid.
    #[arg(long)]
    pub table1: bool,
    /// Use the large-population limit.
    #[arg(long, conflicts_with = "n_transactions")]
    pub limit: bool,
    /// Finite number of real transactions.
    #[arg(long)]
    pub n_transactions: Option<usize>,
    #[arg(long)]
    pub w: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7])]
    pub gammas: Vec<f64>,
    /// MASK privacy at this keep probability (with --s0, --a).
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 0.3)]
    pub s0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub a: f64,
    /// Fake ratios needed to reach this privacy.
    #[arg(long)]
    pub target: Option<f64>,
    /// MASK reconstruction probability for --target.
    #[arg(long)]
    pub p_r_ps: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    /// FS-anonymized transaction file.
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub mode: AttackMode,
    /// Ground-truth sidecar; required for random mode.
    #[arg(long)]
    pub provenance: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    /// Database whose item frequencies form the adversary's prior (guided mode).
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Score cut; the valley of the score histogram when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    /// Per-step success frequencies as CSV.
    #[arg(long)]
    pub steps_csv: Option<PathBuf>,
    /// Filtered database (guided mode).
    #[arg(long)]
    pub filtered_output: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Original database.
    #[arg(long)]
    pub original: PathBuf,
    /// Anonymized database.
    #[arg(long)]
    pub anonymized: PathBuf,
    #[command(flatten)]
    pub params: MineParams,
    /// Include the mining-time ratio (wall-clock, not reproducible).
    #[arg(long)]
    pub timing: bool,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    /// Evaluate at a finite population instead of the limit.
    #[arg(long)]
    pub n_transactions: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Table3Args {
    /// Real corpus; a synthetic corpus of the same shape otherwise.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Renumber corpus items densely from 0.
    #[arg(long)]
    pub compact_ids: bool,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![2u32, 4])]
    pub ws: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.005, 0.0025, 0.001])]
    pub s_mins: Vec<f64>,
    #[arg(long, default_value_t = 0.9)]
    pub hs_p: f64,
    #[arg(long, default_value_t = 2)]
    pub max_k: usize,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError { code: EXIT_CONFIG, kind: "config", message: message.into() }
    }

    fn tolerance(message: impl Into<String>) -> Self {
        CliError { code: EXIT_TOLERANCE, kind: "tolerance", message: message.into() }
    }

    /// `error kind=<kind> code=<code> msg=<text>` on one line.
    pub fn line(&self) -> String {
        let msg: String = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error kind={} code={} msg={}", self.kind, self.code, msg)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match e {
            Error::Io(_) | Error::Parse { .. } | Error::ItemRange { .. } | Error::EmptyDb | Error::MissingProvenance => {
                (EXIT_DATA, "data")
            }
            Error::Param(_) | Error::Domain(_) | Error::IllConditioned(_) | Error::ItemsetTooLarge { .. } => {
                (EXIT_CONFIG, "config")
            }
        };
        CliError { code, kind, message: e.to_string() }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Error::Io(e).into()
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Buffered outputs; `None` is standard output.
#[derive(Default)]
struct Outputs(Vec<(Option<PathBuf>, Vec<u8>)>);

impl Outputs {
    fn push(&mut self, path: Option<&Path>, bytes: Vec<u8>) {
        self.0.push((path.map(Path::to_path_buf), bytes));
    }

    fn push_str(&mut self, path: Option<&Path>, s: String) {
        self.push(path, s.into_bytes());
    }

    /// Writes every file to a sibling temporary and renames them into place
    /// only when all writes succeeded.
    fn commit(self) -> CliResult<()> {
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
        let mut stdout_parts = Vec::new();
        let result = (|| -> io::Result<()> {
            for (path, bytes) in &self.0 {
                match path {
                    None => stdout_parts.push(bytes),
                    Some(p) => {
                        let tmp = temp_sibling(p);
                        staged.push((tmp.clone(), p.clone()));
                        let mut f = File::create(&tmp)?;
                        f.write_all(bytes)?;
                        f.sync_all()?;
                    }
                }
            }
            for (tmp, dst) in &staged {
                fs::rename(tmp, dst)?;
            }
            Ok(())
        })();
        if let Err(e) = result {
            for (tmp, _) in &staged {
                let _ = fs::remove_file(tmp);
            }
            return Err(e.into());
        }
        let mut out = io::stdout().lock();
        for part in stdout_parts {
            out.write_all(part)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn temp_sibling(p: &Path) -> PathBuf {
    let name = p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    p.with_file_name(format!(".{name}.tmp{}", std::process::id()))
}

fn read_db(input: &InputArgs) -> CliResult<TransactionDb> {
    read_db_path(&input.input, input.n_items)
}

fn read_db_path(path: &Path, n_items: Option<usize>) -> CliResult<TransactionDb> {
    let file = File::open(path).map_err(|e| CliError::from(e).with_path(path))?;
    Ok(load_db(BufReader::new(file), n_items)?.db)
}

fn read_provenance(path: &Path) -> CliResult<ProvenanceSidecar> {
    let file = File::open(path).map_err(|e| CliError::from(e).with_path(path))?;
    Ok(ProvenanceSidecar::load(BufReader::new(file))?)
}

impl CliError {
    fn with_path(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

fn db_bytes(db: &TransactionDb) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    save_db(db, &mut buf)?;
    Ok(buf)
}

fn require<T>(v: Option<T>, flag: &str, why: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::config(format!("--{flag} is required {why}")))
}

fn kv(pairs: &[(&str, String)], format: Format) -> String {
    match format {
        Format::Text => pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect(),
        Format::Csv => {
            let head: Vec<&str> = pairs.iter().map(|(k, _)| *k).collect();
            let row: Vec<&str> = pairs.iter().map(|(_, v)| v.as_str()).collect();
            format!("{}\n{}\n", head.join(","), row.join(","))
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let mut out = Outputs::default();
    match cli.command {
        Command::Stats(a) => stats(a, &mut out)?,
        Command::Synth(a) => synth(a, &mut out)?,
        Command::Anonymize(a) => anonymize(a, &mut out)?,
        Command::Mine(a) => mine(a, &mut out)?,
        Command::Privacy(a) => privacy(a, &mut out)?,
        Command::Attack(a) => attack(a, &mut out)?,
        Command::Evaluate(a) => evaluate(a, &mut out)?,
        Command::Table1(a) => run_table1(a, &mut out)?,
        Command::Table3(a) => run_table3(a, &mut out)?,
    }
    out.commit()
}

/// Parses `args`, runs, and returns the process exit code. Errors go to
/// standard error as a single line.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return EXIT_OK;
            }
            let text = e.to_string();
            let msg: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect();
            let msg = msg.join(" ");
            let msg = msg.strip_prefix("error: ").unwrap_or(&msg);
            eprintln!("{}", CliError::config(msg).line());
            return EXIT_CONFIG;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.line());
            e.code
        }
    }
}

fn stats(a: StatsArgs, out: &mut Outputs) -> CliResult<()> {
    let s = compute_stats(&read_db(&a.input)?)?;
    let pairs = [
        ("n_items", s.n_items.to_string()),
        ("n_transactions", s.n_transactions.to_string()),
        ("total_items", s.total_items.to_string()),
        ("avg_len", format!("{:.6}", s.avg_len)),
        ("density", format!("{:.6}", s.density)),
    ];
    out.push_str(a.output.as_deref(), kv(&pairs, a.format));
    Ok(())
}

fn synth(a: SynthArgs, out: &mut Outputs) -> CliResult<()> {
    let weights = a.zipf.map_or(ItemWeights::Uniform, ItemWeights::Zipf);
    let db = gen_synthetic(a.n_items, a.n_transactions, a.avg_len, weights, a.seed)?;
    out.push(a.output.as_deref(), db_bytes(&db)?);
    Ok(())
}

fn fs_params_for(db: &TransactionDb, w: u32, l: Option<u32>) -> CliResult<FsParams> {
    Ok(match l {
        Some(l) => FsParams::new(w, l, db.n_items())?,
        None => FsParams::for_db(w, db)?,
    })
}

fn anonymize(a: AnonymizeArgs, out: &mut Outputs) -> CliResult<()> {
    let db = read_db(&a.input)?;
    let emit = a.provenance.is_some();
    let (anon, side) = match a.scheme {
        Scheme::Fs => {
            let r = fs_anonymize(&db, fs_params_for(&db, a.w, a.l)?, a.seed, emit)?;
            (r.db_prime, r.provenance)
        }
        Scheme::Ps => {
            PsParams::new(a.p, 0.5)?;
            let r = ps_distort(&db, a.p, a.seed, emit)?;
            (r.db, r.provenance)
        }
        Scheme::Hs => {
            let params = HsParams { fs: fs_params_for(&db, a.w, a.l)?, ps: PsParams::new(a.p, 0.5)? };
            let r = hs_anonymize(&db, params, a.seed, emit)?;
            (r.db, r.provenance)
        }
    };
    out.push(a.output.as_deref(), db_bytes(&anon)?);
    if let (Some(path), Some(side)) = (a.provenance.as_deref(), side) {
        let mut buf = Vec::new();
        side.save(&mut buf)?;
        out.push(Some(path), buf);
    }
    Ok(())
}

enum Mined {
    Exact(Vec<crate::apriori::FrequentItemset>),
    Estimated(Vec<crate::apriori::EstimatedItemset>),
}

fn mine_with(db: &TransactionDb, m: &MineParams) -> CliResult<Mined> {
    if !(0.0..=1.0).contains(&m.s_min) {
        return Err(CliError::config(format!("--s-min must lie in [0,1], got {}", m.s_min)));
    }
    let est_k = m.max_k.unwrap_or(MaskEstimator::new(0.9).k_max);
    Ok(match m.scheme {
        MineScheme::Plain => Mined::Exact(mine_frequent(db, &LevelThresholds::constant(m.s_min), m.max_k)),
        MineScheme::Fs => {
            let w = require(m.w, "w", "for fs mining")?;
            let l = require(m.l, "l", "for fs mining")?;
            Mined::Estimated(fs_mine_db(db, FsParams::new(w, l, db.n_items())?, m.s_min, m.max_k))
        }
        MineScheme::Ps => {
            let p = require(m.p, "p", "for ps mining")?;
            Mined::Estimated(ps_mine(db, &MaskEstimator::new(p), m.s_min, est_k, m.slack)?)
        }
        MineScheme::Hs => {
            let w = require(m.w, "w", "for hs mining")?;
            let l = require(m.l, "l", "for hs mining")?;
            let p = require(m.p, "p", "for hs mining")?;
            let params = HsParams { fs: FsParams::new(w, l, db.n_items())?, ps: PsParams::new(p, 0.5)? };
            Mined::Estimated(hs_mine(db, params, m.s_min, est_k)?)
        }
    })
}

fn mine(a: MineArgs, out: &mut Outputs) -> CliResult<()> {
    let db = read_db(&a.input)?;
    let mined = mine_with(&db, &a.params)?;
    let mut buf = Vec::new();
    match &mined {
        Mined::Exact(sets) => write_frequent(&mut buf, sets)?,
        Mined::Estimated(sets) => write_estimated(&mut buf, sets)?,
    }
    if let Some(conf) = a.min_confidence {
        let Mined::Exact(sets) = &mined else {
            return Err(CliError::config("--min-confidence requires --scheme plain"));
        };
        if !(0.0..=1.0).contains(&conf) {
            return Err(CliError::config(format!("--min-confidence must lie in [0,1], got {conf}")));
        }
        let mut rules = Vec::new();
        write_rules(&mut rules, &derive_rules(sets, conf, &db))?;
        match a.rules.as_deref() {
            Some(path) => out.push(Some(path), rules),
            None => {
                buf.push(b'\n');
                buf.extend(rules);
            }
        }
    }
    out.push(a.output.as_deref(), buf);
    Ok(())
}

fn population(limit: bool, n: Option<usize>) -> Population {
    match (limit, n) {
        (false, Some(n)) => Population::Finite(n),
        _ => Population::Limit,
    }
}

fn privacy(a: PrivacyArgs, out: &mut Outputs) -> CliResult<()> {
    let pop = population(a.limit, a.n_transactions);
    let text = if a.table1 {
        let t = privacy_table(&TABLE1_WS, &TABLE1_GAMMAS, pop)?;
        match a.format {
            Format::Text => t.to_text(),
            Format::Csv => t.to_csv(),
        }
    } else if let Some(target) = a.target {
        let mut pairs = vec![("target", target.to_string()), ("fs_w", fs_required_w(target)?.to_string())];
        if let Some(pr) = a.p_r_ps {
            pairs.push(("hs_w", hs_equivalent_w(target, pr)?.to_string()));
        }
        kv(&pairs, a.format)
    } else if let Some(p) = a.p {
        let ps = ps_privacy(a.s0, p, a.a)?;
        let mut pairs = vec![
            ("r1", format!("{:.6}", ps.r1)),
            ("r0", format!("{:.6}", ps.r0)),
            ("ps_p_r", format!("{:.6}", ps.p_r)),
            ("ps_p_p", format!("{:.6}", ps.p_p)),
        ];
        if let Some(w) = a.w {
            let hs = hs_privacy(w, a.s0, p, a.a)?;
            pairs.push(("hs_p_r", format!("{:.6}", hs.p_r)));
            pairs.push(("hs_p_p", format!("{:.6}", hs.p_p)));
        }
        kv(&pairs, a.format)
    } else {
        let w = require(a.w, "w", "unless --table1, --target or --p is given")?;
        let r = privacy_report(w, pop, &a.gammas)?;
        match a.format {
            Format::Text => r.to_text(),
            Format::Csv => {
                let mut s = String::from("w,population,gamma,privacy\n");
                writeln!(s, "{w},{pop},worst,{:.6}", r.worst_case).unwrap();
                for (g, v) in &r.filtered {
                    writeln!(s, "{w},{pop},{g},{v:.6}").unwrap();
                }
                s
            }
        }
    };
    out.push_str(a.output.as_deref(), text);
    Ok(())
}

fn outcome_text(o: &AttackOutcome, extra: &[(&str, String)]) -> String {
    let mut s = o.to_text();
    for (k, v) in extra {
        writeln!(s, "{k}={v}").unwrap();
    }
    s
}

fn attack(a: AttackArgs, out: &mut Outputs) -> CliResult<()> {
    let db = read_db(&a.input)?;
    let side = a.provenance.as_deref().map(read_provenance).transpose()?;
    if let Some(side) = &side {
        if side.len() != db.len() {
            return Err(CliError::from(Error::Param(format!(
                "provenance has {} rows, database {}",
                side.len(),
                db.len()
            ))));
        }
    }
    match a.mode {
        AttackMode::Random => {
            let side = side.as_ref().ok_or(Error::MissingProvenance)?;
            let stats = reconstruct_from_labels(&side.origin, a.trials, a.seed)?;
            let reals = stats.real_count;
            let w = if reals == 0 { 0.0 } else { stats.fake_count as f64 / reals as f64 };
            let pop = if reals >= 3 { Population::Finite(reals) } else { Population::Limit };
            let outcome = AttackOutcome {
                gamma_achieved: 0.0,
                real_loss: 0.0,
                residual_privacy: fs_average_filtered(w, pop, 0.0)?,
                per_step_success: stats.frequencies(),
            };
            let extra = [
                ("trials", a.trials.to_string()),
                ("empirical_privacy", format!("{:.6}", stats.empirical_privacy())),
            ];
            out.push_str(a.output.as_deref(), outcome_text(&outcome, &extra));
            if let Some(path) = a.steps_csv.as_deref() {
                out.push_str(Some(path), outcome.per_step_csv());
            }
        }
        AttackMode::Guided => {
            let prior_path = require(a.prior.as_deref(), "prior", "for guided mode")?;
            let prior_db = read_db_path(prior_path, Some(db.n_items()))?;
            if prior_db.is_empty() {
                return Err(Error::EmptyDb.into());
            }
            let prior: Vec<f64> =
                prior_db.item_counts().iter().map(|&c| c as f64 / prior_db.len() as f64).collect();
            let threshold = match a.threshold {
                Some(t) => t,
                None => valley_threshold(&transaction_scores(&db, &prior)?, 64).unwrap_or(f64::NEG_INFINITY),
            };
            let g = guided_filter(&db, &prior, threshold, side.as_ref())?;
            let mut text = format!("threshold={threshold:.6}\nremoved={}\n", db.len() - g.filtered.len());
            if let Some(o) = &g.outcome {
                text.push_str(&o.to_text());
            }
            out.push_str(a.output.as_deref(), text);
            if let Some(path) = a.filtered_output.as_deref() {
                out.push(Some(path), db_bytes(&g.filtered)?);
            }
        }
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs, out: &mut Outputs) -> CliResult<()> {
    let original = read_db_path(&a.original, None)?;
    let anonymized = read_db_path(&a.anonymized, Some(original.n_items()))?;
    let truth = mine_frequent(&original, &LevelThresholds::constant(a.params.s_min), a.params.max_k);
    let mined = mine_with(&anonymized, &a.params)?;
    let err = match &mined {
        Mined::Exact(m) => sigma_errors(&truth, m)?,
        Mined::Estimated(m) => sigma_errors(&truth, m)?,
    };
    let timings = if a.timing {
        let t0 = min_duration(a.reps, || {
            mine_frequent(&original, &LevelThresholds::constant(a.params.s_min), a.params.max_k);
        });
        let mut failed = None;
        let t1 = min_duration(a.reps, || {
            if let Err(e) = mine_with(&anonymized, &a.params) {
                failed = Some(e);
            }
        });
        if let Some(e) = failed {
            return Err(e);
        }
        (t0, t1)
    } else {
        Default::default()
    };
    let over = overhead_report(&original, &anonymized, timings);
    let mut pairs = vec![
        ("sigma_plus", format!("{:.6}", err.sigma_plus)),
        ("sigma_minus", format!("{:.6}", err.sigma_minus)),
        ("support_mae", format!("{:.6}", err.support_mae)),
        ("memory_ratio", format!("{:.6}", over.memory_ratio)),
        ("transaction_ratio", format!("{:.6}", over.transaction_ratio)),
    ];
    if a.timing {
        pairs.push(("mining_time_ratio", format!("{:.6}", over.mining_time_ratio)));
    }
    out.push_str(a.output.as_deref(), kv(&pairs, a.format));
    Ok(())
}

fn run_table1(a: Table1Args, out: &mut Outputs) -> CliResult<()> {
    let pop = population(a.n_transactions.is_none(), a.n_transactions);
    let t = table1(pop)?;
    let diff = t.max_abs_diff(&TABLE1_REFERENCE);
    let mut text = match a.format {
        Format::Text => t.to_text(),
        Format::Csv => t.to_csv(),
    };
    if a.format == Format::Text {
        writeln!(text, "max_abs_diff={diff:.6} tolerance={TABLE1_TOLERANCE}").unwrap();
    }
    out.push_str(a.output.as_deref(), text);
    if pop == Population::Limit && diff > TABLE1_TOLERANCE {
        return Err(CliError::tolerance(format!(
            "grid deviates from reference by {diff:.6} > {TABLE1_TOLERANCE}"
        )));
    }
    Ok(())
}

/// Published privacy column: FS at w = 2, 4 and HS at w = 2, 4.
const TABLE3_PRIVACY: [(u32, f64, f64); 2] = [(2, 0.667, 0.833), (4, 0.800, 0.900)];

fn run_table3(a: Table3Args, out: &mut Outputs) -> CliResult<()> {
    let db = match a.corpus.as_deref() {
        Some(path) => {
            let db = read_db_path(path, None)?;
            if a.compact_ids {
                db.compact_items().0
            } else {
                db
            }
        }
        None => gen_synthetic(497, 10_000, 2.0, ItemWeights::Zipf(1.0), a.seed)?,
    };
    let cfg = ErrorTableConfig {
        ws: a.ws,
        s_mins: a.s_mins,
        hs_p: a.hs_p,
        max_k: a.max_k,
        seed: a.seed,
        ..Default::default()
    };
    let table = error_table(&db, &cfg)?;
    let text = match a.format {
        Format::Text => table.to_text(),
        Format::Csv => table.to_csv(),
    };
    out.push_str(a.output.as_deref(), text);
    for (w, fs_ref, hs_ref) in TABLE3_PRIVACY {
        for (scheme, reference) in [(crate::evaluation::SchemeKind::Fs, fs_ref), (crate::evaluation::SchemeKind::Hs, hs_ref)] {
            if let Some(row) = table.row(scheme, w) {
                if (row.privacy - reference).abs() > 5e-4 {
                    return Err(CliError::tolerance(format!(
                        "{scheme} privacy at w={w} is {:.4}, reference {reference}",
                        row.privacy
                    )));
                }
            }
        }
    }
    Ok(())
}
