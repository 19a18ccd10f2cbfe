//! The `pdlsic` command line.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on usage,
//! configuration or input-format errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;

use crate::capacity::{
    c_awgn, c_compound, c_compound_approx, c_nonjoint, c_parallel, c_parallel_approx,
    mean_identity_check, penalties_db, verify_star_property, worst_case_search, Penalties,
    StarGrid, StarReport, WorstCaseGrid, WorstCaseReport,
};
use crate::channel::{sample_params, ChannelModel, PdlClass, SampleMode, SnrSpec};
use crate::equalize::{
    closed_form_stream_snr, lmmse_equalizer, stream_statistics, zf_equalizer, FirstStage,
    SicReceiver, StreamScheme,
};
use crate::error::{Error, Result};
use crate::linkbudget::{evaluate_operating_point, FerTable, OperatingPoint};
use crate::montecarlo::{self, SimConfig, SimReport};
use crate::precode::{effective_channel, universal_precoder, verify_orthogonal_design, Precoder};
use crate::rng::child_rng;
use crate::with_thread_limit;

const TABLE1: &str = include_str!("../data/fer_8ask_r34.csv");
const TABLE2: &str = include_str!("../data/fer_16ask_r56.csv");

/// Relative tolerance of the closed-form SNR suite.
pub const SNR_REL_TOL: f64 = 1e-9;
/// Tolerance of the orthogonal-design suite.
pub const ORTHO_TOL: f64 = 1e-10;
/// Tolerance of `|G² − A·H|` in the means suite.
pub const MEANS_TOL: f64 = 1e-15;
/// Tolerance, in bits, between the max-min optimum and `c_compound`.
pub const WORST_CASE_TOL_BITS: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "pdlsic", version, about = "Capacity, receiver and link-budget tools for PDL channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity curves as CSV.
    Curves(CurvesArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Run a Monte Carlo configuration file.
    Simulate(SimulateArgs),
    /// Evaluate a two-code operating point from FER tables.
    Fer(FerArgs),
    /// SNR penalties of non-joint, parallel and SIC decoding.
    Penalties(PenaltiesArgs),
}

/// PDL class; defaults to α = 0.599 (about 6 dB) when neither flag is given.
#[derive(Debug, Clone, Args)]
pub struct ClassArgs {
    #[arg(long, conflicts_with = "pdl_db")]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub pdl_db: Option<f64>,
}

impl ClassArgs {
    pub fn class(&self) -> Result<PdlClass> {
        match (self.alpha, self.pdl_db) {
            (Some(a), _) => PdlClass::new(a),
            (None, Some(db)) => PdlClass::from_pdl_db(db),
            (None, None) => PdlClass::new(0.599),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Real,
    Complex,
}

impl From<ModelArg> for ChannelModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Real => ChannelModel::Real,
            ModelArg::Complex => ChannelModel::ComplexEquivalent,
        }
    }
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    #[arg(long, default_value_t = 0.0)]
    pub snr_min_db: f64,
    #[arg(long, default_value_t = 30.0)]
    pub snr_max_db: f64,
    #[arg(long, default_value_t = 0.25)]
    pub snr_step_db: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Orthogonality,
    SnrClosedForms,
    StarProperty,
    WorstCase,
    Means,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[command(flatten)]
    pub class: ClassArgs,
    /// Linear SNR 20 when omitted.
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// Both models when omitted.
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Random draws for the orthogonality and closed-form suites.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Column permutation applied to the precoder, e.g. `0,2,1,3`.
    #[arg(long, value_delimiter = ',')]
    pub permute: Option<Vec<usize>>,
    /// Use the identity precoder.
    #[arg(long, conflicts_with = "permute")]
    pub identity: bool,
    #[arg(long)]
    pub n_gamma: Option<usize>,
    #[arg(long)]
    pub n_theta: Option<usize>,
    #[arg(long)]
    pub n_phi: Option<usize>,
    #[arg(long)]
    pub n_beta: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON configuration file.
    pub config: PathBuf,
    /// Overrides the seed in the file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Exit with status 1 when a 3-standard-error check fails.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FerArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    #[arg(long)]
    pub snr_db: f64,
    /// Table of the first (derated) code; bundled 8-ASK rows when omitted.
    #[arg(long)]
    pub table1: Option<PathBuf>,
    /// Table of the second code; bundled 16-ASK rows when omitted.
    #[arg(long)]
    pub table2: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PenaltiesArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `%.12g`-style formatting.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (11 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const CURVE_HEADER: [&str; 7] = [
    "snr_db",
    "c_awgn",
    "c_compound",
    "c_compound_approx",
    "c_parallel",
    "c_parallel_approx",
    "c_nonjoint",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub snr_db: f64,
    pub c_awgn: f64,
    pub c_compound: f64,
    pub c_compound_approx: f64,
    pub c_parallel: f64,
    pub c_parallel_approx: f64,
    pub c_nonjoint: f64,
}

impl CurveRow {
    pub fn new(alpha: f64, snr_db: f64) -> Result<Self> {
        let s = SnrSpec::from_db(snr_db)?.linear();
        Ok(Self {
            snr_db,
            c_awgn: c_awgn(s)?,
            c_compound: c_compound(alpha, s)?,
            c_compound_approx: c_compound_approx(alpha, s)?,
            c_parallel: c_parallel(alpha, s)?,
            c_parallel_approx: c_parallel_approx(alpha, s)?,
            c_nonjoint: c_nonjoint(alpha, s)?,
        })
    }

    fn values(&self) -> [f64; 7] {
        [
            self.snr_db,
            self.c_awgn,
            self.c_compound,
            self.c_compound_approx,
            self.c_parallel,
            self.c_parallel_approx,
            self.c_nonjoint,
        ]
    }
}

/// Rows from `min_db` to `max_db` inclusive (within half a step).
pub fn curve_rows(alpha: f64, min_db: f64, max_db: f64, step_db: f64) -> Result<Vec<CurveRow>> {
    if !(step_db > 0.0) || !(max_db >= min_db) || !min_db.is_finite() || !max_db.is_finite() {
        return Err(Error::Config(format!(
            "invalid SNR range {min_db}..{max_db} step {step_db}"
        )));
    }
    let count = ((max_db - min_db) / step_db + 0.5).floor() as usize + 1;
    (0..count)
        .map(|k| CurveRow::new(alpha, min_db + k as f64 * step_db))
        .collect()
}

pub fn write_curves<W: Write>(rows: &[CurveRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CURVE_HEADER)?;
    for r in rows {
        wtr.write_record(r.values().iter().map(|&v| fmt_g12(v)))?;
    }
    wtr.flush()?;
    Ok(())
}

fn emit(out: Option<&Path>, body: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, body)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut body = serde_json::to_vec_pretty(value)?;
    body.push(b'\n');
    emit(out, &body)
}

pub fn cmd_curves(args: &CurvesArgs) -> Result<()> {
    let alpha = args.class.class()?.alpha();
    let rows = curve_rows(alpha, args.snr_min_db, args.snr_max_db, args.snr_step_db)?;
    let mut body = Vec::new();
    write_curves(&rows, &mut body)?;
    emit(args.out.as_deref(), &body)
}

#[derive(Clone, Debug, Serialize)]
pub struct PenaltyReport {
    pub alpha: f64,
    pub pdl_db: f64,
    pub penalties_db: Penalties,
}

pub fn cmd_penalties(args: &PenaltiesArgs) -> Result<PenaltyReport> {
    let class = args.class.class()?;
    let report = PenaltyReport {
        alpha: class.alpha(),
        pdl_db: class.pdl_db(),
        penalties_db: penalties_db(class.alpha())?,
    };
    emit_json(args.out.as_deref(), &report)?;
    Ok(report)
}

pub fn cmd_fer(args: &FerArgs) -> Result<OperatingPoint> {
    let load = |p: &Option<PathBuf>, bundled: &str, name: &str| match p {
        Some(p) => FerTable::from_path(p),
        None => FerTable::from_reader(bundled.as_bytes(), name),
    };
    let t1 = load(&args.table1, TABLE1, "bundled fer_8ask_r34.csv")?;
    let t2 = load(&args.table2, TABLE2, "bundled fer_16ask_r56.csv")?;
    let op = evaluate_operating_point(
        args.class.class()?.alpha(),
        SnrSpec::from_db(args.snr_db)?,
        &t1,
        &t2,
    )?;
    emit_json(args.out.as_deref(), &op)?;
    Ok(op)
}

/// Reads a simulation config, reporting the failing field and position.
pub fn load_sim_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_sim_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_sim_config(text: &str) -> Result<SimConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: SimConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        Error::Config(format!(
            "line {} column {}: field `{}`: {}",
            inner.line(),
            inner.column(),
            e.path(),
            inner
        ))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimReport> {
    let mut cfg = load_sim_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let report = with_thread_limit(|| montecarlo::run(&cfg))??;
    emit_json(args.out.as_deref(), &report)?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct OrthogonalitySummary {
    pub model: ChannelModel,
    pub samples: usize,
    pub max_h1_defect: f64,
    pub max_h2_defect: f64,
    pub max_s_symmetry_defect: f64,
    pub max_s_gain_defect: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosedFormSummary {
    pub model: ChannelModel,
    pub samples: usize,
    pub max_rel_error_zf: f64,
    pub max_rel_error_lmmse: f64,
    pub max_rel_error_post_sic: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeansSummary {
    pub gammas: usize,
    pub max_defect: f64,
    pub max_capacity_chain_defect: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WorstCaseSummary {
    pub beta_within_one_step: bool,
    pub optimum_error_bits: f64,
    #[serde(flatten)]
    pub report: WorstCaseReport,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StarSummary {
    pub model: ChannelModel,
    pub precoder: String,
    #[serde(flatten)]
    pub report: StarReport,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum SuiteDetail {
    Orthogonality(OrthogonalitySummary),
    ClosedForms(ClosedFormSummary),
    Star(StarSummary),
    WorstCase(Box<WorstCaseSummary>),
    Means(MeansSummary),
}

impl SuiteDetail {
    fn passed(&self) -> bool {
        match self {
            SuiteDetail::Orthogonality(s) => s.passed,
            SuiteDetail::ClosedForms(s) => s.passed,
            SuiteDetail::Star(s) => s.report.passed,
            SuiteDetail::WorstCase(s) => s.passed,
            SuiteDetail::Means(s) => s.passed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub alpha: f64,
    pub snr: SnrSpec,
    pub passed: bool,
    pub details: Vec<SuiteDetail>,
}

fn models(args: &VerifyArgs) -> Result<Vec<ChannelModel>> {
    if let Some(m) = args.model {
        return Ok(vec![m.into()]);
    }
    Ok(match args.permute.as_ref().map(Vec::len) {
        None => vec![ChannelModel::Real, ChannelModel::ComplexEquivalent],
        Some(4) => vec![ChannelModel::Real],
        Some(8) => vec![ChannelModel::ComplexEquivalent],
        Some(n) => {
            return Err(Error::Config(format!(
                "a permutation must have 4 or 8 entries, got {n}"
            )))
        }
    })
}

fn precoder_for(args: &VerifyArgs, model: ChannelModel) -> Result<(Precoder, String)> {
    let base = universal_precoder(model);
    if args.identity {
        return Ok((Precoder::identity(model), "identity".into()));
    }
    match &args.permute {
        Some(p) => {
            let label = format!(
                "universal, columns {}",
                p.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
            );
            Ok((base.permute_columns(p)?, label))
        }
        None => Ok((base, "universal".into())),
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Orthogonal-design certificate over random draws.
pub fn orthogonality_suite(
    model: ChannelModel,
    alpha: f64,
    precoder: &Precoder,
    samples: usize,
    seed: u64,
) -> Result<OrthogonalitySummary> {
    let class = PdlClass::new(alpha)?;
    let snr = SnrSpec::new(1.0)?;
    let mut s = OrthogonalitySummary {
        model,
        samples,
        max_h1_defect: 0.0,
        max_h2_defect: 0.0,
        max_s_symmetry_defect: 0.0,
        max_s_gain_defect: 0.0,
        passed: true,
    };
    for p in sample_params(class, model, SampleMode::UniformInterior, seed).take(samples) {
        let r = verify_orthogonal_design(&effective_channel(&p, precoder, snr)?);
        s.max_h1_defect = s.max_h1_defect.max(r.h1_defect);
        s.max_h2_defect = s.max_h2_defect.max(r.h2_defect);
        s.max_s_symmetry_defect = s.max_s_symmetry_defect.max(r.s_symmetry_defect);
        s.max_s_gain_defect = s.max_s_gain_defect.max(r.s_gain_defect);
    }
    s.passed = [
        s.max_h1_defect,
        s.max_h2_defect,
        s.max_s_symmetry_defect,
        s.max_s_gain_defect,
    ]
    .iter()
    .all(|&d| d < ORTHO_TOL);
    Ok(s)
}

/// Stream SNRs from the receiver statistics against the closed forms, over
/// random draws with the SNR itself drawn from `snrs`.
pub fn closed_form_suite(
    model: ChannelModel,
    alpha: f64,
    snrs: &[f64],
    precoder: &Precoder,
    samples: usize,
    seed: u64,
) -> Result<ClosedFormSummary> {
    let class = PdlClass::new(alpha)?;
    let mut pick = child_rng(seed, u64::MAX);
    let mut s = ClosedFormSummary {
        model,
        samples,
        max_rel_error_zf: 0.0,
        max_rel_error_lmmse: 0.0,
        max_rel_error_post_sic: 0.0,
        passed: true,
    };
    for p in sample_params(class, model, SampleMode::UniformInterior, seed).take(samples) {
        let snr = SnrSpec::new(snrs[pick.random_range(0..snrs.len())])?;
        let eff = effective_channel(&p, precoder, snr)?;
        let half = eff.streams() / 2;
        let zf = stream_statistics(&eff, &zf_equalizer(&eff)?)?;
        let lm = stream_statistics(&eff, &lmmse_equalizer(&eff)?)?;
        let sic = SicReceiver::new(&eff, FirstStage::Lmmse)?.analyze();
        let cf_zf = closed_form_stream_snr(StreamScheme::ZeroForcing, p.gamma, snr)?;
        let cf_lm = closed_form_stream_snr(StreamScheme::Lmmse, p.gamma, snr)?;
        let cf_sic = closed_form_stream_snr(StreamScheme::PostSic, p.gamma, snr)?;
        for (&a, &b) in zf.snr_per_stream.iter().zip(&lm.snr_per_stream) {
            s.max_rel_error_zf = s.max_rel_error_zf.max(rel_err(a, cf_zf));
            s.max_rel_error_lmmse = s.max_rel_error_lmmse.max(rel_err(b, cf_lm));
        }
        for &x in &sic.second_stage.snr_per_stream[..half] {
            s.max_rel_error_post_sic = s.max_rel_error_post_sic.max(rel_err(x, cf_sic));
        }
    }
    let worst = s
        .max_rel_error_zf
        .max(s.max_rel_error_lmmse)
        .max(s.max_rel_error_post_sic);
    s.passed = worst < SNR_REL_TOL;
    Ok(s)
}

/// `|G² − A·H|` for the pairs `(1 + γ, 1 − γ)` across the γ lattice.
pub fn means_suite(alpha: f64, snr: f64, n_gamma: usize) -> Result<MeansSummary> {
    let gammas = crate::channel::ParamGrid {
        n_gamma,
        n_theta: 1,
        n_phi: 1,
    }
    .gamma_values(alpha);
    let mut s = MeansSummary {
        gammas: gammas.len(),
        max_defect: 0.0,
        max_capacity_chain_defect: 0.0,
        passed: true,
    };
    for g in gammas {
        let r = mean_identity_check(1.0 + g, 1.0 - g, snr)?;
        s.max_defect = s.max_defect.max(r.defect);
        s.max_capacity_chain_defect = s.max_capacity_chain_defect.max(r.capacity_chain_defect);
    }
    s.passed = s.max_defect < MEANS_TOL;
    Ok(s)
}

pub fn worst_case_suite(alpha: f64, snr: f64, grid: WorstCaseGrid) -> Result<WorstCaseSummary> {
    let report = worst_case_search(alpha, snr, grid)?;
    let beta_within_one_step = (report.beta_star - 0.5).abs() <= report.beta_step + 1e-15;
    // the objective counts two real dimensions
    let optimum_error_bits = (0.5 * report.max_min_value - c_compound(alpha, snr)?).abs();
    let passed = beta_within_one_step && report.extremal && optimum_error_bits < WORST_CASE_TOL_BITS;
    Ok(WorstCaseSummary {
        beta_within_one_step,
        optimum_error_bits,
        report,
        passed,
    })
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<VerifyReport> {
    let alpha = args.class.class()?.alpha();
    let snr = match args.snr_db {
        Some(db) => SnrSpec::from_db(db)?,
        None => SnrSpec::new(20.0)?,
    };
    let details = with_thread_limit(|| -> Result<Vec<SuiteDetail>> {
        let mut details = Vec::new();
        match args.suite {
            Suite::Orthogonality => {
                for m in models(args)? {
                    let (p, _) = precoder_for(args, m)?;
                    details.push(SuiteDetail::Orthogonality(orthogonality_suite(
                        m,
                        alpha,
                        &p,
                        args.samples,
                        args.seed,
                    )?));
                }
            }
            Suite::SnrClosedForms => {
                for m in models(args)? {
                    let (p, _) = precoder_for(args, m)?;
                    details.push(SuiteDetail::ClosedForms(closed_form_suite(
                        m,
                        alpha,
                        &[snr.linear()],
                        &p,
                        args.samples,
                        args.seed,
                    )?));
                }
            }
            Suite::StarProperty => {
                for m in models(args)? {
                    let (p, label) = precoder_for(args, m)?;
                    let d = StarGrid::default();
                    let grid = StarGrid {
                        n_gamma: args.n_gamma.unwrap_or(d.n_gamma),
                        n_theta: args.n_theta.unwrap_or(d.n_theta),
                        n_phi: args.n_phi.unwrap_or(d.n_phi),
                    };
                    details.push(SuiteDetail::Star(StarSummary {
                        model: m,
                        precoder: label,
                        report: verify_star_property(&p, alpha, snr.linear(), grid)?,
                    }));
                }
            }
            Suite::WorstCase => {
                let d = WorstCaseGrid::default();
                let grid = WorstCaseGrid {
                    n_beta: args.n_beta.unwrap_or(d.n_beta),
                    n_gamma: args.n_gamma.unwrap_or(d.n_gamma),
                };
                details.push(SuiteDetail::WorstCase(Box::new(worst_case_suite(
                    alpha,
                    snr.linear(),
                    grid,
                )?)));
            }
            Suite::Means => {
                details.push(SuiteDetail::Means(means_suite(
                    alpha,
                    snr.linear(),
                    args.n_gamma.unwrap_or(201),
                )?));
            }
        }
        Ok(details)
    })??;
    let suite = args
        .suite
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    let report = VerifyReport {
        suite,
        alpha,
        snr,
        passed: details.iter().all(SuiteDetail::passed),
        details,
    };
    emit_json(args.out.as_deref(), &report)?;
    Ok(report)
}

/// Parses `args` and runs the chosen command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match &cli.command {
        Command::Curves(a) => cmd_curves(a).map(|_| true),
        Command::Penalties(a) => cmd_penalties(a).map(|_| true),
        Command::Fer(a) => cmd_fer(a).map(|_| true),
        Command::Simulate(a) => cmd_simulate(a).map(|r| !a.strict || r.checks_passed != Some(false)),
        Command::Verify(a) => cmd_verify(a).map(|r| {
            eprintln!("{} {}", if r.passed { "PASS" } else { "FAIL" }, r.suite);
            r.passed
        }),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
