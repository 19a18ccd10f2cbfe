//! Capacity analytics and brute-force max-min oracles.
//!
//! Unless stated otherwise capacities are in bits per real dimension.
//! `C(x) = ½·log2(1 + x)` is the real scalar AWGN capacity.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelModel, ParamGrid, PdlClass, SnrSpec};
use crate::error::{domain, Result};
use crate::precode::{effective_channel, Precoder};

/// Tolerance for the star-property equality, in bits.
pub const STAR_TOL_BITS: f64 = 1e-9;

/// `½·log2(1 + snr)` without argument checks.
pub fn awgn_bits(snr: f64) -> f64 {
    0.5 * snr.ln_1p() / std::f64::consts::LN_2
}

fn check_snr(snr: f64) -> Result<()> {
    if !(snr >= 0.0) || !snr.is_finite() {
        return Err(domain(format!("SNR must be finite and non-negative, got {snr}")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    PdlClass::new(alpha).map(|_| ())
}

pub fn c_awgn(snr: f64) -> Result<f64> {
    check_snr(snr)?;
    Ok(awgn_bits(snr))
}

/// Compound capacity `[C((1+α)S) + C((1−α)S)] / 2`.
pub fn c_compound(alpha: f64, snr: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_snr(snr)?;
    Ok(0.5 * (awgn_bits((1.0 + alpha) * snr) + awgn_bits((1.0 - alpha) * snr)))
}

/// High-SNR form `[C((1−α²)S) + C(S)] / 2`, within `O(1/S)` of [`c_compound`].
pub fn c_compound_approx(alpha: f64, snr: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_snr(snr)?;
    Ok(0.5 * (awgn_bits((1.0 - alpha * alpha) * snr) + awgn_bits(snr)))
}

/// Capacity with joint coding but parallel decoding: `2·c_compound − c_awgn`.
pub fn c_parallel(alpha: f64, snr: f64) -> Result<f64> {
    Ok(2.0 * c_compound(alpha, snr)? - awgn_bits(snr))
}

/// `C((1−α²)S)`.
pub fn c_parallel_approx(alpha: f64, snr: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_snr(snr)?;
    Ok(awgn_bits((1.0 - alpha * alpha) * snr))
}

/// Rate guaranteed when each polarization is coded and decoded on its own: `C((1−α)S)`.
pub fn c_nonjoint(alpha: f64, snr: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_snr(snr)?;
    Ok(awgn_bits((1.0 - alpha) * snr))
}

/// Asymptotic SNR penalties relative to a PDL-free channel, in dB.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Penalties {
    /// No joint coding or decoding: `10·log10(1/(1−α))`.
    pub nonjoint: f64,
    /// Joint coding, parallel decoding: `10·log10(1/(1−α²))`.
    pub parallel: f64,
    /// Joint coding with successive (or joint) decoding: `10·log10(1/√(1−α²))`.
    pub sic: f64,
}

pub fn penalties_db(alpha: f64) -> Result<Penalties> {
    check_alpha(alpha)?;
    Ok(Penalties {
        nonjoint: -10.0 * (1.0 - alpha).log10(),
        parallel: -10.0 * (1.0 - alpha * alpha).log10(),
        sic: -5.0 * (1.0 - alpha * alpha).log10(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CapacityReport {
    pub snr: SnrSpec,
    pub alpha: f64,
    pub c_awgn: f64,
    pub c_compound: f64,
    pub c_compound_approx: f64,
    pub c_parallel: f64,
    pub c_parallel_approx: f64,
    pub c_nonjoint: f64,
    pub penalties_db: Penalties,
}

impl CapacityReport {
    pub fn new(alpha: f64, snr: SnrSpec) -> Result<Self> {
        let s = snr.linear();
        Ok(Self {
            snr,
            alpha,
            c_awgn: c_awgn(s)?,
            c_compound: c_compound(alpha, s)?,
            c_compound_approx: c_compound_approx(alpha, s)?,
            c_parallel: c_parallel(alpha, s)?,
            c_parallel_approx: c_parallel_approx(alpha, s)?,
            c_nonjoint: c_nonjoint(alpha, s)?,
            penalties_db: penalties_db(alpha)?,
        })
    }
}

/// Chain-rule mutual-information terms for one channel realization with
/// input `N(0, S·I₂)`. Values are bits per channel use (two real dimensions).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MiTerms {
    pub gamma: f64,
    pub theta: f64,
    pub snr: f64,
    /// `I(X1; Y1 Y2)`
    pub i_x1_y: f64,
    /// `I(X2; Y1 Y2 X1)`
    pub i_x2_y_given_x1: f64,
    /// `I(X2; Y1 Y2)`
    pub i_x2_y: f64,
    pub sum_check: f64,
}

pub fn mi_terms(gamma: f64, theta: f64, snr: f64) -> Result<MiTerms> {
    if !(gamma.abs() < 1.0) {
        return Err(domain(format!("|gamma| must be < 1, got {gamma}")));
    }
    check_snr(snr)?;
    let c2 = (2.0 * theta).cos();
    let joint = awgn_bits((1.0 + gamma) * snr) + awgn_bits((1.0 - gamma) * snr);
    let i_x2_y_given_x1 = awgn_bits((1.0 - gamma * c2) * snr);
    let i_x1_y = joint - i_x2_y_given_x1;
    let i_x2_y = joint - awgn_bits((1.0 + gamma * c2) * snr);
    Ok(MiTerms {
        gamma,
        theta,
        snr,
        i_x1_y,
        i_x2_y_given_x1,
        i_x2_y,
        sum_check: i_x1_y + i_x2_y_given_x1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WorstCaseGrid {
    pub n_beta: usize,
    pub n_gamma: usize,
}

impl Default for WorstCaseGrid {
    fn default() -> Self {
        Self {
            n_beta: 201,
            n_gamma: 201,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GammaStar {
    pub beta: f64,
    pub gamma: f64,
    pub value: f64,
}

/// Outcome of the brute-force `max_β min_γ` search. Values are bits per
/// channel use (two real dimensions).
#[derive(Clone, Debug, Serialize)]
pub struct WorstCaseReport {
    pub alpha: f64,
    pub snr: f64,
    pub gamma_star: Vec<GammaStar>,
    pub beta_star: f64,
    pub beta_step: f64,
    pub max_min_value: f64,
    /// `C((1+α)S) + C((1−α)S)`
    pub closed_form: f64,
    /// Every inner minimizer sits at `±α`.
    pub extremal: bool,
}

/// Objective of the power-allocation game: `C(2(1+γ)βS) + C(2(1−γ)(1−β)S)`.
pub fn allocation_objective(beta: f64, gamma: f64, snr: f64) -> f64 {
    awgn_bits(2.0 * (1.0 + gamma) * beta * snr) + awgn_bits(2.0 * (1.0 - gamma) * (1.0 - beta) * snr)
}

pub fn worst_case_search(alpha: f64, snr: f64, grid: WorstCaseGrid) -> Result<WorstCaseReport> {
    check_alpha(alpha)?;
    check_snr(snr)?;
    if grid.n_beta < 2 || grid.n_gamma < 2 {
        return Err(domain("worst-case grids need at least two points"));
    }
    let gammas = ParamGrid {
        n_gamma: grid.n_gamma,
        n_theta: 1,
        n_phi: 1,
    }
    .gamma_values(alpha);
    let betas: Vec<f64> = (0..grid.n_beta)
        .map(|i| i as f64 / (grid.n_beta - 1) as f64)
        .collect();

    let gamma_star: Vec<GammaStar> = betas
        .iter()
        .map(|&beta| {
            let mut best = GammaStar {
                beta,
                gamma: gammas[0],
                value: allocation_objective(beta, gammas[0], snr),
            };
            for &gamma in &gammas[1..] {
                let value = allocation_objective(beta, gamma, snr);
                if value < best.value {
                    best = GammaStar { beta, gamma, value };
                }
            }
            best
        })
        .collect();

    let mut star = gamma_star[0];
    for g in &gamma_star[1..] {
        if g.value > star.value {
            star = *g;
        }
    }
    let extremal = gamma_star.iter().all(|g| {
        // at α = 0 every γ is an endpoint; otherwise ties resolve to an endpoint too
        g.gamma.abs() == alpha
            || (allocation_objective(g.beta, alpha, snr) - g.value).abs() <= 1e-15 * g.value.max(1.0)
            || (allocation_objective(g.beta, -alpha, snr) - g.value).abs() <= 1e-15 * g.value.max(1.0)
    });
    Ok(WorstCaseReport {
        alpha,
        snr,
        beta_star: star.beta,
        beta_step: 1.0 / (grid.n_beta - 1) as f64,
        max_min_value: star.value,
        closed_form: awgn_bits((1.0 + alpha) * snr) + awgn_bits((1.0 - alpha) * snr),
        extremal,
        gamma_star,
    })
}

/// `I(U_i; Y | U_1..U_{i−1})` in bits for every stream of `Y = H·U + Z` with
/// `U ~ N(0, snr·I)`. These are the sub-channel capacities of a receiver that
/// decodes one stream at a time in column order with LMMSE filtering against
/// the remaining streams.
pub fn chain_rule_terms(h: &DMatrix<f64>, snr: f64) -> Vec<f64> {
    let n = h.ncols();
    // reversed column order: the leading k×k block then covers the last k streams
    let rev = DMatrix::from_fn(h.nrows(), n, |i, j| h[(i, n - 1 - j)]);
    let a = rev.transpose() * &rev * snr + DMatrix::<f64>::identity(n, n);
    let l = a
        .cholesky()
        .expect("I + snr·HᵀH is positive definite")
        .unpack();
    (0..n).map(|i| l[(n - 1 - i, n - 1 - i)].log2()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StarGrid {
    pub n_gamma: usize,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for StarGrid {
    fn default() -> Self {
        Self {
            n_gamma: 201,
            n_theta: 256,
            n_phi: 64,
        }
    }
}

impl From<StarGrid> for ParamGrid {
    fn from(g: StarGrid) -> Self {
        ParamGrid {
            n_gamma: g.n_gamma,
            n_theta: g.n_theta,
            n_phi: g.n_phi,
        }
    }
}

/// Both sides of the star property for one precoder, bits per block of two
/// channel uses.
#[derive(Clone, Debug, Serialize)]
pub struct StarReport {
    /// Minimum over the grid of the summed chain-rule terms.
    pub lhs: f64,
    /// Sum over streams of each term's own minimum.
    pub rhs: f64,
    /// `lhs − rhs`, never negative.
    pub gap: f64,
    pub per_stream_minima: Vec<f64>,
    pub grid_points: usize,
    pub passed: bool,
}

/// Evaluates `min Σ_i I_i` against `Σ_i min I_i` over the grid, where `I_i`
/// are the chain-rule terms of the precoded channel in column order.
pub fn verify_star_property(
    precoder: &Precoder,
    alpha: f64,
    snr: f64,
    grid: StarGrid,
) -> Result<StarReport> {
    let class = PdlClass::new(alpha)?;
    let snr_spec = SnrSpec::new(snr)?;
    let model = precoder.model();
    let grid: ParamGrid = grid.into();
    let gammas = grid.gamma_values(alpha);
    let thetas = grid.theta_values();
    let phis: Vec<Option<f64>> = match model {
        ChannelModel::Real => vec![None],
        ChannelModel::ComplexEquivalent => grid.phi_values().into_iter().map(Some).collect(),
    };
    let n = precoder.dim();

    // per γ row: (min of sums, per-stream minima); rows reduced in fixed order
    let rows: Vec<(f64, Vec<f64>)> = gammas
        .par_iter()
        .map(|&gamma| {
            let mut min_sum = f64::INFINITY;
            let mut mins = vec![f64::INFINITY; n];
            for &theta in &thetas {
                for &phi in &phis {
                    let params = class.params(gamma, theta, phi).expect("lattice lies in class");
                    let eff = effective_channel(&params, precoder, snr_spec).expect("models match");
                    let terms = chain_rule_terms(&eff.h, snr);
                    min_sum = min_sum.min(terms.iter().sum());
                    for (m, t) in mins.iter_mut().zip(&terms) {
                        *m = m.min(*t);
                    }
                }
            }
            (min_sum, mins)
        })
        .collect();

    let mut lhs = f64::INFINITY;
    let mut per_stream_minima = vec![f64::INFINITY; n];
    for (s, mins) in rows {
        lhs = lhs.min(s);
        for (m, t) in per_stream_minima.iter_mut().zip(mins) {
            *m = m.min(t);
        }
    }
    let rhs: f64 = per_stream_minima.iter().sum();
    let gap = (lhs - rhs).max(0.0);
    Ok(StarReport {
        lhs,
        rhs,
        gap,
        per_stream_minima,
        grid_points: grid.len(model),
        passed: gap < STAR_TOL_BITS,
    })
}

/// Arithmetic, geometric and harmonic means of two positive numbers.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeanReport {
    pub a: f64,
    pub b: f64,
    pub arithmetic: f64,
    pub geometric: f64,
    pub harmonic: f64,
    /// `|G² − A·H|`
    pub defect: f64,
    /// Largest disagreement, in bits, between the high-SNR capacity written
    /// as `½log2(ab·S²)`, as two geometric-mean channels, and as one
    /// arithmetic-mean plus one harmonic-mean channel.
    pub capacity_chain_defect: f64,
}

pub fn mean_identity_check(a: f64, b: f64, snr: f64) -> Result<MeanReport> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(domain(format!("means need positive inputs, got ({a}, {b})")));
    }
    if !(snr > 0.0) {
        return Err(domain("SNR must be positive"));
    }
    let arithmetic = (a + b) / 2.0;
    let geometric = (a * b).sqrt();
    let harmonic = 2.0 * a * b / (a + b);
    let defect = (geometric * geometric - arithmetic * harmonic).abs();

    let product = 0.5 * (a * b * snr * snr).log2();
    let two_geometric = (geometric * snr).log2();
    let split = 0.5 * (arithmetic * snr).log2() + 0.5 * (harmonic * snr).log2();
    let capacity_chain_defect = (product - two_geometric)
        .abs()
        .max((product - split).abs())
        .max((two_geometric - split).abs());
    Ok(MeanReport {
        a,
        b,
        arithmetic,
        geometric,
        harmonic,
        defect,
        capacity_chain_defect,
    })
}
