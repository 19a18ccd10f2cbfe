//! Monte Carlo simulation of the precode → channel → equalize → SIC chain.
//!
//! Trials are grouped into blocks that share one channel draw. Each block
//! has its own random stream derived from the master seed, block moments are
//! summed with a fixed pairwise tree, and standard errors come from a
//! leave-one-block-out jackknife. Reports are therefore identical for a given
//! seed regardless of the number of worker threads.

use std::f64::consts::{SQRT_2, TAU};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::awgn_bits;
use crate::channel::{sample_params, ChannelModel, ChannelParams, PdlClass, SampleMode, SnrSpec};
use crate::equalize::{
    closed_form_stream_snr, lmmse_equalizer, statistics_from_map, stream_statistics, zf_equalizer,
    FirstStage, SicReceiver, StreamScheme, StreamStats,
};
use crate::error::{Error, Result};
use crate::matrix_rows;
use crate::precode::{effective_channel, universal_precoder, EffectiveChannel, Precoder};
use crate::rng::{child_rng, SimRng};

pub const DEFAULT_BLOCK_LEN: u64 = 1000;
pub const DEFAULT_THETA_STRATA: usize = 4;
/// Width, in standard errors, of every agreement check in a report.
pub const CHECK_SIGMAS: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "ZF")]
    ZeroForcing,
    #[serde(rename = "LMMSE")]
    Lmmse,
    #[serde(rename = "ZF-SIC")]
    ZfSic,
    #[serde(rename = "LMMSE-SIC")]
    LmmseSic,
    /// Identity precoder with a ZF receiver.
    #[serde(rename = "NoPrecode-ZF")]
    NoPrecodeZf,
}

impl Scheme {
    fn first_stage(self) -> Option<FirstStage> {
        match self {
            Scheme::ZfSic => Some(FirstStage::ZeroForcing),
            Scheme::LmmseSic => Some(FirstStage::Lmmse),
            _ => None,
        }
    }

    /// Closed-form SNR family of stream group 1 and 2, if any.
    fn closed_forms(self) -> Option<(StreamScheme, StreamScheme)> {
        use StreamScheme::*;
        match self {
            Scheme::ZeroForcing => Some((ZeroForcing, ZeroForcing)),
            Scheme::Lmmse => Some((Lmmse, Lmmse)),
            Scheme::ZfSic => Some((ZeroForcing, PostSic)),
            Scheme::LmmseSic => Some((Lmmse, PostSic)),
            Scheme::NoPrecodeZf => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constellation {
    Gaussian,
    #[serde(rename = "PAM")]
    Pam(u32),
}

fn default_constellation() -> Constellation {
    Constellation::Gaussian
}

fn default_block_len() -> u64 {
    DEFAULT_BLOCK_LEN
}

fn default_theta_strata() -> usize {
    DEFAULT_THETA_STRATA
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub model: ChannelModel,
    pub alpha: f64,
    pub snr: SnrSpec,
    pub param_mode: SampleMode,
    pub scheme: Scheme,
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "default_constellation")]
    pub constellation: Constellation,
    /// Trials sharing one channel draw.
    #[serde(default = "default_block_len")]
    pub block_len: u64,
    /// Number of equal-width θ bins used for stratified estimates.
    #[serde(default = "default_theta_strata")]
    pub theta_strata: usize,
}

impl SimConfig {
    pub fn new(
        model: ChannelModel,
        alpha: f64,
        snr: SnrSpec,
        param_mode: SampleMode,
        scheme: Scheme,
        trials: u64,
        seed: u64,
    ) -> Self {
        Self {
            model,
            alpha,
            snr,
            param_mode,
            scheme,
            trials,
            seed,
            constellation: Constellation::Gaussian,
            block_len: DEFAULT_BLOCK_LEN,
            theta_strata: DEFAULT_THETA_STRATA,
        }
    }

    pub fn with_constellation(mut self, constellation: Constellation) -> Self {
        self.constellation = constellation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        PdlClass::new(self.alpha)?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.block_len == 0 {
            return Err(Error::Config("block_len must be at least 1".into()));
        }
        if self.theta_strata == 0 {
            return Err(Error::Config("theta_strata must be at least 1".into()));
        }
        if let Constellation::Pam(m) = self.constellation {
            if ![2, 4, 8].contains(&m) {
                return Err(Error::Config(format!("PAM order must be 2, 4 or 8, got {m}")));
            }
        }
        if let SampleMode::Grid(g) = self.param_mode {
            if g.is_empty(self.model) {
                return Err(Error::Config("parameter grid is empty".into()));
            }
        }
        Ok(())
    }

    fn blocks(&self) -> u64 {
        self.trials.div_ceil(self.block_len)
    }

    fn block_trials(&self, b: u64) -> usize {
        (self.trials - b * self.block_len).min(self.block_len) as usize
    }
}

/// Scalar AWGN symbol-error rate of `M`-PAM at per-symbol SNR `snr`:
/// `2(1 − 1/M)·Q(√(3·SNR/(M² − 1)))`.
pub fn pam_ser(order: u32, snr: f64) -> f64 {
    let m = order as f64;
    2.0 * (1.0 - 1.0 / m) * q_function((3.0 * snr / (m * m - 1.0)).sqrt())
}

fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Empirical, analytic and standard-error matrices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixEstimate {
    pub empirical: Vec<Vec<f64>>,
    pub standard_error: Option<Vec<Vec<f64>>>,
    pub analytic: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StreamEstimate {
    pub stream: usize,
    /// 1 for the first column group, 2 for the second.
    pub group: usize,
    pub empirical_snr: f64,
    pub standard_error: Option<f64>,
    pub analytic_snr: f64,
    /// Present when the scheme has a closed form and every block shares one `γ²`.
    pub closed_form_snr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub empirical: f64,
    pub analytic: f64,
    pub standard_error: Option<f64>,
    pub z: Option<f64>,
    pub passed: Option<bool>,
}

impl Check {
    fn new(name: String, empirical: f64, analytic: f64, standard_error: Option<f64>) -> Self {
        let z = standard_error.map(|se| {
            let d = empirical - analytic;
            if se > 0.0 {
                d / se
            } else if d.abs() <= 1e-12 * analytic.abs().max(1.0) {
                0.0
            } else {
                f64::INFINITY.copysign(d)
            }
        });
        // JSON has no infinities
        let z = z.map(|z| z.clamp(-f64::MAX, f64::MAX));
        Self {
            name,
            empirical,
            analytic,
            standard_error,
            passed: z.map(|z| z.abs() <= CHECK_SIGMAS),
            z,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stratum {
    pub index: usize,
    pub label: String,
    pub blocks: u64,
    pub trials: u64,
    pub snr_per_stream: Vec<f64>,
    pub standard_errors: Vec<Option<f64>>,
    pub analytic_snr_per_stream: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolErrors {
    pub stream: usize,
    pub group: usize,
    pub symbols: u64,
    pub errors: u64,
    pub ser: f64,
    /// Wilson 95% interval.
    pub ci95: [f64; 2],
    /// Scalar AWGN SER at the closed-form stream SNR (analytic SNR for
    /// schemes without a closed form), averaged over blocks.
    pub theory_ser: f64,
    pub binomial_se: f64,
    pub deviation: f64,
    pub within_3se: bool,
}

/// Second-group errors when the cancellation uses the first group's
/// hard decisions instead of the true symbols, in the same trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecisionDirected {
    pub stream: usize,
    pub errors: u64,
    pub ser: f64,
    pub genie_errors: u64,
    pub genie_ser: f64,
    pub ratio: Option<f64>,
    /// Trials where exactly one of the two receivers erred.
    pub discordant: u64,
    /// McNemar test at 3 standard errors.
    pub differs: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SerReport {
    pub order: u32,
    pub streams: Vec<SymbolErrors>,
    pub decision_directed: Vec<DecisionDirected>,
    pub first_stage_max_ser: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub streams: usize,
    pub blocks: u64,
    pub k_uu: MatrixEstimate,
    pub k_uz: MatrixEstimate,
    pub k_zz: MatrixEstimate,
    pub snr_per_stream: Vec<StreamEstimate>,
    pub estimated_rate_bits_per_real_dim: f64,
    pub analytic_rate_bits_per_real_dim: f64,
    /// Per-stream SNRs, `diag(K_ŨZ̃)` and within-group `K_Z̃Z̃` entries
    /// against their analytic values.
    pub checks: Vec<Check>,
    /// `None` when standard errors are undefined (fewer than two blocks).
    pub checks_passed: Option<bool>,
    pub strata: Vec<Stratum>,
    /// Per-stream SNRs agree across strata within 3 pooled standard errors.
    pub strata_agree: Option<bool>,
    pub ser: Option<SerReport>,
}

/// Sums of second moments over a set of trials.
#[derive(Clone, Debug)]
struct Moments {
    trials: u64,
    uu: DMatrix<f64>,
    uz: DMatrix<f64>,
    zz: DMatrix<f64>,
    errors: Vec<u64>,
    dd_errors: Vec<u64>,
    discordant: Vec<u64>,
}

impl Moments {
    fn zeros(n: usize) -> Self {
        Self {
            trials: 0,
            uu: DMatrix::zeros(n, n),
            uz: DMatrix::zeros(n, n),
            zz: DMatrix::zeros(n, n),
            errors: vec![0; n],
            dd_errors: vec![0; n],
            discordant: vec![0; n],
        }
    }

    fn add(&self, o: &Self) -> Self {
        let sum = |a: &[u64], b: &[u64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        Self {
            trials: self.trials + o.trials,
            uu: &self.uu + &o.uu,
            uz: &self.uz + &o.uz,
            zz: &self.zz + &o.zz,
            errors: sum(&self.errors, &o.errors),
            dd_errors: sum(&self.dd_errors, &o.dd_errors),
            discordant: sum(&self.discordant, &o.discordant),
        }
    }

    fn sub(&self, o: &Self) -> Self {
        Self {
            trials: self.trials - o.trials,
            uu: &self.uu - &o.uu,
            uz: &self.uz - &o.uz,
            zz: &self.zz - &o.zz,
            errors: vec![],
            dd_errors: vec![],
            discordant: vec![],
        }
    }

    /// Per-stream SNRs followed by `K_ŨŨ`, `K_ŨZ̃`, `K_Z̃Z̃` in row-major order.
    fn statistics(&self) -> Vec<f64> {
        let n = self.uu.nrows();
        let t = self.trials as f64;
        let mut out: Vec<f64> = (0..n).map(|i| self.uu[(i, i)] / self.zz[(i, i)]).collect();
        for m in [&self.uu, &self.uz, &self.zz] {
            for i in 0..n {
                for j in 0..n {
                    out.push(m[(i, j)] / t);
                }
            }
        }
        out
    }
}

fn pairwise_sum(items: &[Moments]) -> Moments {
    match items.len() {
        1 => items[0].clone(),
        n => pairwise_sum(&items[..n / 2]).add(&pairwise_sum(&items[n / 2..])),
    }
}

/// Leave-one-out jackknife standard errors of `Moments::statistics`.
fn jackknife(total: &Moments, blocks: &[&Moments]) -> Option<Vec<f64>> {
    let b = blocks.len();
    if b < 2 {
        return None;
    }
    let loo: Vec<Vec<f64>> = blocks.iter().map(|m| total.sub(m).statistics()).collect();
    let k = loo[0].len();
    let bf = b as f64;
    Some(
        (0..k)
            .map(|s| {
                let mean = loo.iter().map(|v| v[s]).sum::<f64>() / bf;
                let ss = loo.iter().map(|v| (v[s] - mean).powi(2)).sum::<f64>();
                ((bf - 1.0) / bf * ss).sqrt()
            })
            .collect(),
    )
}

/// Receiver matrices for one block.
struct Receiver {
    h: DMatrix<f64>,
    /// Rows of the linear equalizer producing the first-stage outputs.
    first: DMatrix<f64>,
    /// `(H1, H2ᵀ)` for SIC schemes.
    sic: Option<(DMatrix<f64>, DMatrix<f64>)>,
    stats: StreamStats,
}

fn receiver(eff: &EffectiveChannel, scheme: Scheme) -> Result<Receiver> {
    match scheme.first_stage() {
        Some(fs) => {
            let eq = match fs {
                FirstStage::ZeroForcing => zf_equalizer(eff)?,
                FirstStage::Lmmse => lmmse_equalizer(eff)?,
            };
            let half = eff.h1.ncols();
            let (signal, noise) = SicReceiver::new(eff, fs)?.combined_maps();
            Ok(Receiver {
                h: eff.h.clone(),
                first: eq.e.rows(0, half).into_owned(),
                sic: Some((eff.h1.clone(), eff.h2.transpose())),
                stats: statistics_from_map(&signal, &noise, eff.snr.linear()),
            })
        }
        None => {
            let eq = match scheme {
                Scheme::Lmmse => lmmse_equalizer(eff)?,
                _ => zf_equalizer(eff)?,
            };
            Ok(Receiver {
                h: eff.h.clone(),
                stats: stream_statistics(eff, &eq)?,
                first: eq.e,
                sic: None,
            })
        }
    }
}

struct BlockOutcome {
    stratum: usize,
    moments: Moments,
    analytic: StreamStats,
    theory_snr: Vec<f64>,
}

struct Pam {
    order: usize,
    scale: f64,
}

impl Pam {
    fn value(&self, k: usize) -> f64 {
        (2.0 * k as f64 - (self.order as f64 - 1.0)) * self.scale
    }

    fn detect(&self, x: f64) -> usize {
        let k = ((x / self.scale + self.order as f64 - 1.0) / 2.0).round();
        k.clamp(0.0, self.order as f64 - 1.0) as usize
    }
}

fn simulate_block(
    cfg: &SimConfig,
    rx: &Receiver,
    trials: usize,
    rng: &mut SimRng,
) -> Moments {
    let n = rx.h.ncols();
    let snr = cfg.snr.linear();
    let pam = match cfg.constellation {
        Constellation::Gaussian => None,
        Constellation::Pam(m) => {
            let m = m as usize;
            Some(Pam {
                order: m,
                scale: (3.0 * snr / ((m * m - 1) as f64)).sqrt(),
            })
        }
    };
    let mut idx = vec![0usize; n * trials];
    let u = match &pam {
        None => {
            let s = snr.sqrt();
            DMatrix::from_fn(n, trials, |_, _| s * rng.sample::<f64, _>(StandardNormal))
        }
        Some(p) => {
            for k in idx.iter_mut() {
                *k = rng.random_range(0..p.order);
            }
            DMatrix::from_fn(n, trials, |i, j| p.value(idx[j * n + i]))
        }
    };
    let z = DMatrix::from_fn(rx.h.nrows(), trials, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = &rx.h * &u + z;

    let out = match &rx.sic {
        None => &rx.first * &y,
        Some((h1, h2t)) => {
            let half = h1.ncols();
            let mut out = DMatrix::zeros(n, trials);
            out.rows_mut(0, half).copy_from(&(&rx.first * &y));
            let residual = &y - h1 * u.rows(0, half);
            out.rows_mut(half, half).copy_from(&(h2t * residual));
            out
        }
    };
    let lambda = rx.stats.lambda.clone();
    let mut ut = u.clone();
    for (i, mut row) in ut.row_iter_mut().enumerate() {
        row *= lambda[i];
    }
    let zt = &out - &ut;
    let mut m = Moments::zeros(n);
    m.trials = trials as u64;
    m.uu = &ut * ut.transpose();
    m.uz = &ut * zt.transpose();
    m.zz = &zt * zt.transpose();

    if let Some(p) = &pam {
        let mut decided = vec![0usize; n * trials];
        for j in 0..trials {
            for i in 0..n {
                let d = p.detect(out[(i, j)] / lambda[i]);
                decided[j * n + i] = d;
                if d != idx[j * n + i] {
                    m.errors[i] += 1;
                }
            }
        }
        if let Some((h1, h2t)) = &rx.sic {
            let half = h1.ncols();
            let u1_hat = DMatrix::from_fn(half, trials, |i, j| p.value(decided[j * n + i]));
            let out_dd = h2t * (&y - h1 * u1_hat);
            for j in 0..trials {
                for i in 0..half {
                    let s = half + i;
                    let d = p.detect(out_dd[(i, j)] / lambda[s]);
                    let dd_err = d != idx[j * n + s];
                    let genie_err = decided[j * n + s] != idx[j * n + s];
                    m.dd_errors[s] += dd_err as u64;
                    m.discordant[s] += (dd_err != genie_err) as u64;
                }
            }
        }
    }
    m
}

fn stratum_of(cfg: &SimConfig, block: u64, params: &ChannelParams, grid_len: usize) -> usize {
    match cfg.param_mode {
        SampleMode::Grid(_) => (block % grid_len as u64) as usize,
        _ => ((params.theta / TAU * cfg.theta_strata as f64) as usize).min(cfg.theta_strata - 1),
    }
}

fn block_params(cfg: &SimConfig) -> Result<Vec<ChannelParams>> {
    let class = PdlClass::new(cfg.alpha)?;
    let stream = sample_params(class, cfg.model, cfg.param_mode, cfg.seed);
    let blocks = cfg.blocks() as usize;
    Ok(match cfg.param_mode {
        SampleMode::Grid(g) => {
            let pts = g.points(&class, cfg.model);
            (0..blocks).map(|b| pts[b % pts.len()]).collect()
        }
        _ => stream.take(blocks).collect(),
    })
}

fn weighted_mean(blocks: &[BlockOutcome], f: impl Fn(&BlockOutcome) -> DMatrix<f64>) -> DMatrix<f64> {
    let total: u64 = blocks.iter().map(|b| b.moments.trials).sum();
    let mut acc = f(&blocks[0]) * 0.0;
    for b in blocks {
        acc += f(b) * b.moments.trials as f64;
    }
    acc / total as f64
}

fn matrix_estimate(
    empirical: DMatrix<f64>,
    se: Option<&[f64]>,
    analytic: &DMatrix<f64>,
) -> MatrixEstimate {
    let n = empirical.nrows();
    MatrixEstimate {
        empirical: matrix_rows(&empirical),
        standard_error: se.map(|s| matrix_rows(&DMatrix::from_row_slice(n, n, s))),
        analytic: matrix_rows(analytic),
    }
}

fn wilson95(errors: u64, n: u64) -> [f64; 2] {
    let z = 1.959963984540054;
    let nf = n as f64;
    let p = errors as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    [(centre - half).max(0.0), (centre + half).min(1.0)]
}

/// Simulates `config` and compares every estimate with its analytic value.
pub fn run(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let cfg = config;
    let precoder = match cfg.scheme {
        Scheme::NoPrecodeZf => Precoder::identity(cfg.model),
        _ => universal_precoder(cfg.model),
    };
    let params = block_params(cfg)?;
    let grid_len = match cfg.param_mode {
        SampleMode::Grid(g) => g.len(cfg.model),
        _ => 0,
    };

    let outcomes: Vec<BlockOutcome> = params
        .par_iter()
        .enumerate()
        .map(|(b, p)| {
            let b = b as u64;
            let eff = effective_channel(p, &precoder, cfg.snr)?;
            let rx = receiver(&eff, cfg.scheme)?;
            let n = eff.streams();
            let half = n / 2;
            let theory_snr = match cfg.scheme.closed_forms() {
                Some((g1, g2)) => (0..n)
                    .map(|i| closed_form_stream_snr(if i < half { g1 } else { g2 }, p.gamma, cfg.snr))
                    .collect::<Result<Vec<f64>>>()?,
                None => rx.stats.snr_per_stream.clone(),
            };
            let mut rng = child_rng(cfg.seed, b + 1);
            let moments = simulate_block(cfg, &rx, cfg.block_trials(b), &mut rng);
            Ok(BlockOutcome {
                stratum: stratum_of(cfg, b, p, grid_len),
                moments,
                analytic: rx.stats,
                theory_snr,
            })
        })
        .collect::<Result<_>>()?;

    let n = outcomes[0].moments.uu.nrows();
    let half = n / 2;
    let moments: Vec<Moments> = outcomes.iter().map(|o| o.moments.clone()).collect();
    let total = pairwise_sum(&moments);
    let refs: Vec<&Moments> = moments.iter().collect();
    let se = jackknife(&total, &refs);
    let t = total.trials as f64;

    let a_uu = weighted_mean(&outcomes, |o| o.analytic.k_uu.clone());
    let a_uz = weighted_mean(&outcomes, |o| o.analytic.k_uz.clone());
    let a_zz = weighted_mean(&outcomes, |o| o.analytic.k_zz.clone());
    let stats = total.statistics();
    let nn = n * n;
    let se_slice = |k: usize| se.as_ref().map(|s| &s[n + k * nn..n + (k + 1) * nn]);

    let closed_form = |i: usize| -> Option<f64> {
        let first = outcomes[0].theory_snr[i];
        let same = outcomes
            .iter()
            .all(|o| (o.theory_snr[i] - first).abs() <= 1e-12 * first.abs());
        (cfg.scheme.closed_forms().is_some() && same).then_some(first)
    };
    let snr_per_stream: Vec<StreamEstimate> = (0..n)
        .map(|i| StreamEstimate {
            stream: i,
            group: if i < half { 1 } else { 2 },
            empirical_snr: stats[i],
            standard_error: se.as_ref().map(|s| s[i]),
            analytic_snr: a_uu[(i, i)] / a_zz[(i, i)],
            closed_form_snr: closed_form(i),
        })
        .collect();

    let mut checks = Vec::new();
    for s in &snr_per_stream {
        checks.push(Check::new(
            format!("snr[{}]", s.stream),
            s.empirical_snr,
            s.analytic_snr,
            s.standard_error,
        ));
    }
    for i in 0..n {
        checks.push(Check::new(
            format!("k_uz[{i}][{i}]"),
            total.uz[(i, i)] / t,
            a_uz[(i, i)],
            se_slice(1).map(|s| s[i * n + i]),
        ));
    }
    for g in [0..half, half..n] {
        for i in g.clone() {
            for j in g.clone().filter(|&j| j > i) {
                checks.push(Check::new(
                    format!("k_zz[{i}][{j}]"),
                    total.zz[(i, j)] / t,
                    a_zz[(i, j)],
                    se_slice(2).map(|s| s[i * n + j]),
                ));
            }
        }
    }
    let checks_passed = checks
        .iter()
        .map(|c| c.passed)
        .collect::<Option<Vec<bool>>>()
        .map(|v| v.iter().all(|&p| p));

    let strata = stratify(cfg, &outcomes, grid_len);
    let strata_agree = strata_agree(&strata);

    let ser = match cfg.constellation {
        Constellation::Gaussian => None,
        Constellation::Pam(order) => Some(ser_report(order, cfg, &outcomes, &total)),
    };

    let rate = |snrs: &mut dyn Iterator<Item = f64>| snrs.map(awgn_bits).sum::<f64>() / n as f64;
    Ok(SimReport {
        config: cfg.clone(),
        streams: n,
        blocks: outcomes.len() as u64,
        k_uu: matrix_estimate(&total.uu / t, se_slice(0), &a_uu),
        k_uz: matrix_estimate(&total.uz / t, se_slice(1), &a_uz),
        k_zz: matrix_estimate(&total.zz / t, se_slice(2), &a_zz),
        estimated_rate_bits_per_real_dim: rate(&mut snr_per_stream.iter().map(|s| s.empirical_snr)),
        analytic_rate_bits_per_real_dim: rate(&mut snr_per_stream.iter().map(|s| s.analytic_snr)),
        snr_per_stream,
        checks,
        checks_passed,
        strata,
        strata_agree,
        ser,
    })
}

fn stratify(cfg: &SimConfig, outcomes: &[BlockOutcome], grid_len: usize) -> Vec<Stratum> {
    let count = match cfg.param_mode {
        SampleMode::Grid(_) => grid_len.min(outcomes.len()),
        _ => cfg.theta_strata,
    };
    let grid_points = match cfg.param_mode {
        SampleMode::Grid(g) => PdlClass::new(cfg.alpha)
            .map(|c| g.points(&c, cfg.model))
            .unwrap_or_default(),
        _ => vec![],
    };
    let width = TAU / cfg.theta_strata as f64;
    (0..count)
        .filter_map(|k| {
            let members: Vec<&BlockOutcome> = outcomes.iter().filter(|o| o.stratum == k).collect();
            if members.is_empty() {
                return None;
            }
            let moments: Vec<Moments> = members.iter().map(|o| o.moments.clone()).collect();
            let total = pairwise_sum(&moments);
            let refs: Vec<&Moments> = moments.iter().collect();
            let se = jackknife(&total, &refs);
            let n = total.uu.nrows();
            let stats = total.statistics();
            let mut a_uu = DMatrix::<f64>::zeros(n, n);
            let mut a_zz = DMatrix::<f64>::zeros(n, n);
            for o in &members {
                a_uu += &o.analytic.k_uu * o.moments.trials as f64;
                a_zz += &o.analytic.k_zz * o.moments.trials as f64;
            }
            let label = match grid_points.get(k) {
                Some(p) => match p.phi {
                    Some(phi) => format!("gamma={:.6} theta={:.6} phi={:.6}", p.gamma, p.theta, phi),
                    None => format!("gamma={:.6} theta={:.6}", p.gamma, p.theta),
                },
                None => format!("theta in [{:.6}, {:.6})", k as f64 * width, (k + 1) as f64 * width),
            };
            Some(Stratum {
                index: k,
                label,
                blocks: members.len() as u64,
                trials: total.trials,
                snr_per_stream: stats[..n].to_vec(),
                standard_errors: (0..n).map(|i| se.as_ref().map(|s| s[i])).collect(),
                analytic_snr_per_stream: (0..n).map(|i| a_uu[(i, i)] / a_zz[(i, i)]).collect(),
            })
        })
        .collect()
}

fn strata_agree(strata: &[Stratum]) -> Option<bool> {
    if strata.len() < 2 {
        return None;
    }
    let mut ok = true;
    for (a, sa) in strata.iter().enumerate() {
        for sb in &strata[a + 1..] {
            for i in 0..sa.snr_per_stream.len() {
                let (ea, eb) = (sa.standard_errors[i]?, sb.standard_errors[i]?);
                let pooled = (ea * ea + eb * eb).sqrt();
                if (sa.snr_per_stream[i] - sb.snr_per_stream[i]).abs() > CHECK_SIGMAS * pooled {
                    ok = false;
                }
            }
        }
    }
    Some(ok)
}

fn ser_report(order: u32, cfg: &SimConfig, outcomes: &[BlockOutcome], total: &Moments) -> SerReport {
    let n = total.uu.nrows();
    let half = n / 2;
    let symbols = total.trials;
    let streams: Vec<SymbolErrors> = (0..n)
        .map(|i| {
            let theory = outcomes
                .iter()
                .map(|o| pam_ser(order, o.theory_snr[i]) * o.moments.trials as f64)
                .sum::<f64>()
                / symbols as f64;
            let errors = total.errors[i];
            let ser = errors as f64 / symbols as f64;
            let binomial_se = (theory * (1.0 - theory) / symbols as f64).sqrt();
            let deviation = (ser - theory).abs();
            SymbolErrors {
                stream: i,
                group: if i < half { 1 } else { 2 },
                symbols,
                errors,
                ser,
                ci95: wilson95(errors, symbols),
                theory_ser: theory,
                binomial_se,
                deviation,
                within_3se: deviation <= CHECK_SIGMAS * binomial_se,
            }
        })
        .collect();
    let decision_directed = if cfg.scheme.first_stage().is_some() {
        (half..n)
            .map(|s| {
                let errors = total.dd_errors[s];
                let genie_errors = total.errors[s];
                let discordant = total.discordant[s];
                let diff = errors as f64 - genie_errors as f64;
                DecisionDirected {
                    stream: s,
                    errors,
                    ser: errors as f64 / symbols as f64,
                    genie_errors,
                    genie_ser: genie_errors as f64 / symbols as f64,
                    ratio: (genie_errors > 0).then(|| errors as f64 / genie_errors as f64),
                    discordant,
                    differs: discordant > 0 && diff.abs() > CHECK_SIGMAS * (discordant as f64).sqrt(),
                }
            })
            .collect()
    } else {
        vec![]
    };
    SerReport {
        order,
        first_stage_max_ser: streams[..half].iter().map(|s| s.ser).fold(0.0, f64::max),
        streams,
        decision_directed,
    }
}

/// Uncoded PAM transmission over the chain; requires a PAM constellation.
pub fn uncoded_ser_experiment(config: &SimConfig) -> Result<SimReport> {
    match config.constellation {
        Constellation::Pam(_) => run(config),
        Constellation::Gaussian => Err(Error::Config(
            "the uncoded experiment needs a PAM constellation".into(),
        )),
    }
}

/// Rate in bits per real dimension implied by the empirical stream SNRs:
/// the mean over streams of `C(SNR_i)`.
pub fn estimate_mi(report: &SimReport) -> f64 {
    report.estimated_rate_bits_per_real_dim
}
