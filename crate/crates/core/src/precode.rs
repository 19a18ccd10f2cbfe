//! Universal precoders and the two-channel-use effective channel.
//!
//! Both precoders are fixed signed half-permutations. Applied over two uses
//! of the channel they make the column halves `H1`, `H2` of the effective
//! channel orthonormal for every member of the compound class, which is an
//! orthogonal design in the entries of the single-use channel matrix.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::channel::{channel_matrix, ChannelModel, ChannelParams, SnrSpec};
use crate::error::{domain, Error, Result};

/// Tolerance at which orthogonality is certified.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

#[rustfmt::skip]
const REAL_PATTERN: [i8; 16] = [
     1,  0,  1,  0,
     0,  1,  0,  1,
     0,  1,  0, -1,
    -1,  0,  1,  0,
];

#[rustfmt::skip]
const COMPLEX_PATTERN: [i8; 64] = [
     1,  0,  0,  0,  1,  0,  0,  0,
     0,  0,  1,  0,  0,  0,  1,  0,
     0, -1,  0,  0,  0, -1,  0,  0,
     0,  0,  0, -1,  0,  0,  0, -1,
     0,  0,  1,  0,  0,  0, -1,  0,
    -1,  0,  0,  0,  1,  0,  0,  0,
     0,  0,  0,  1,  0,  0,  0, -1,
     0, -1,  0,  0,  0,  1,  0,  0,
];

/// Orthogonal precoder acting on two channel uses.
#[derive(Clone, Debug, PartialEq)]
pub struct Precoder {
    entries: DMatrix<f64>,
    model: ChannelModel,
}

impl Precoder {
    /// Checks the matrix is square, sized for two uses of `model`, and orthogonal.
    pub fn new(entries: DMatrix<f64>, model: ChannelModel) -> Result<Self> {
        let n = 2 * model.dim();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: entries.nrows().max(entries.ncols()),
            });
        }
        let defect = (entries.transpose() * &entries - DMatrix::<f64>::identity(n, n)).amax();
        if defect > 1e-12 {
            return Err(domain(format!("precoder is not orthogonal (defect {defect:.3e})")));
        }
        Ok(Self { entries, model })
    }

    /// No precoding.
    pub fn identity(model: ChannelModel) -> Self {
        let n = 2 * model.dim();
        Self {
            entries: DMatrix::identity(n, n),
            model,
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn model(&self) -> ChannelModel {
        self.model
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Reorders columns so that column `k` of the result is column `perm[k]`
    /// of `self`. Changes the decoding order; used for negative controls.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        let n = self.dim();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(domain(format!("{perm:?} is not a permutation of 0..{n}")));
        }
        Ok(Self {
            entries: DMatrix::from_fn(n, n, |i, j| self.entries[(i, perm[j])]),
            model: self.model,
        })
    }

    pub fn swap_columns(&self, a: usize, b: usize) -> Result<Self> {
        let mut perm: Vec<usize> = (0..self.dim()).collect();
        if a >= perm.len() || b >= perm.len() {
            return Err(domain("column index out of range"));
        }
        perm.swap(a, b);
        self.permute_columns(&perm)
    }
}

fn from_pattern(pattern: &[i8], n: usize, model: ChannelModel) -> Precoder {
    Precoder {
        entries: DMatrix::from_row_iterator(n, n, pattern.iter().map(|&v| v as f64 * FRAC_1_SQRT_2)),
        model,
    }
}

/// The 4×4 precoder for the real channel model.
pub fn precoder_real() -> Precoder {
    from_pattern(&REAL_PATTERN, 4, ChannelModel::Real)
}

/// The 8×8 precoder for the real-equivalent complex channel model.
pub fn precoder_complex() -> Precoder {
    from_pattern(&COMPLEX_PATTERN, 8, ChannelModel::ComplexEquivalent)
}

/// The paper-style universal precoder for `model`.
pub fn universal_precoder(model: ChannelModel) -> Precoder {
    match model {
        ChannelModel::Real => precoder_real(),
        ChannelModel::ComplexEquivalent => precoder_complex(),
    }
}

/// `H = blockdiag(M, M)·G` with its column halves.
#[derive(Clone, Debug)]
pub struct EffectiveChannel {
    pub h: DMatrix<f64>,
    pub h1: DMatrix<f64>,
    pub h2: DMatrix<f64>,
    pub params: ChannelParams,
    pub snr: SnrSpec,
}

impl EffectiveChannel {
    pub fn model(&self) -> ChannelModel {
        self.params.model()
    }

    /// Number of streams (= number of real dimensions over two channel uses).
    pub fn streams(&self) -> usize {
        self.h.ncols()
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.h.transpose() * &self.h
    }
}

pub fn effective_channel(
    params: &ChannelParams,
    precoder: &Precoder,
    snr: SnrSpec,
) -> Result<EffectiveChannel> {
    if params.model() != precoder.model() {
        return Err(Error::ModelMismatch {
            precoder: precoder.model(),
            channel: params.model(),
        });
    }
    let m = channel_matrix(params).entries;
    let d = m.nrows();
    let mut block = DMatrix::zeros(2 * d, 2 * d);
    block.view_mut((0, 0), (d, d)).copy_from(&m);
    block.view_mut((d, d), (d, d)).copy_from(&m);
    let h = block * precoder.entries();
    Ok(EffectiveChannel {
        h1: h.columns(0, d).into_owned(),
        h2: h.columns(d, d).into_owned(),
        h,
        params: *params,
        snr,
    })
}

/// The printed `S_{γ,θ}` for the real model, so that `HᵀH = [[I, −S], [−S, I]]`.
pub fn s_gamma_theta(gamma: f64, theta: f64) -> DMatrix<f64> {
    let (s, c) = (2.0 * theta).sin_cos();
    DMatrix::from_row_slice(2, 2, &[-gamma * c, gamma * s, gamma * s, gamma * c])
}

/// Numeric certificate of the orthogonal-design structure.
#[derive(Clone, Debug, Serialize)]
pub struct OrthogonalDesignReport {
    /// `max |H1ᵀH1 − I|`
    pub h1_defect: f64,
    /// `max |H2ᵀH2 − I|`
    pub h2_defect: f64,
    /// `S` read off the upper-right block of `HᵀH` (negated).
    #[serde(serialize_with = "crate::serialize_matrix")]
    pub s: DMatrix<f64>,
    /// `max |S − Sᵀ|`
    pub s_symmetry_defect: f64,
    /// Largest deviation of the eigenvalues of `SᵀS` from `γ²`.
    pub s_gain_defect: f64,
    pub passed: bool,
}

pub fn verify_orthogonal_design(effective: &EffectiveChannel) -> OrthogonalDesignReport {
    let d = effective.h1.ncols();
    let eye = DMatrix::<f64>::identity(d, d);
    let h1_defect = (effective.h1.transpose() * &effective.h1 - &eye).amax();
    let h2_defect = (effective.h2.transpose() * &effective.h2 - &eye).amax();
    let s = -(effective.h1.transpose() * &effective.h2);
    let s_symmetry_defect = (&s - s.transpose()).amax();
    let g2 = effective.params.gamma * effective.params.gamma;
    let s_gain_defect = (s.transpose() * &s)
        .symmetric_eigenvalues()
        .iter()
        .map(|ev| (ev - g2).abs())
        .fold(0.0, f64::max);
    let passed = [h1_defect, h2_defect, s_symmetry_defect, s_gain_defect]
        .iter()
        .all(|&x| x < ORTHOGONALITY_TOL);
    OrthogonalDesignReport {
        h1_defect,
        h2_defect,
        s,
        s_symmetry_defect,
        s_gain_defect,
        passed,
    }
}
