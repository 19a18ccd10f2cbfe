//! The compound PDL channel class and its channel matrices.
//!
//! A single channel use maps two real inputs (real model) or the
//! real-equivalent four-vector of two complex inputs through
//! `D_γ · R_θ` (respectively `D_γ · R_θ · B_φ`). Real-equivalent vectors
//! carry real parts in entries 1..2 and imaginary parts in entries 3..4.
//! Noise has unit variance per real dimension; SNR carries all scaling.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Result};
use crate::rng::{child_rng, SimRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelModel {
    #[serde(alias = "real")]
    Real,
    #[serde(alias = "complex")]
    ComplexEquivalent,
}

impl ChannelModel {
    /// Real dimension of one channel use.
    pub fn dim(self) -> usize {
        match self {
            ChannelModel::Real => 2,
            ChannelModel::ComplexEquivalent => 4,
        }
    }
}

/// `10·log10((1+α)/(1−α))`.
pub fn pdl_db_from_alpha(alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(domain(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    Ok(10.0 * ((1.0 + alpha) / (1.0 - alpha)).log10())
}

/// Inverse of [`pdl_db_from_alpha`].
pub fn alpha_from_pdl_db(pdl_db: f64) -> Result<f64> {
    if !(pdl_db >= 0.0) || !pdl_db.is_finite() {
        return Err(domain(format!("PDL must be a finite non-negative dB value, got {pdl_db}")));
    }
    let r = 10f64.powf(pdl_db / 10.0);
    Ok((r - 1.0) / (r + 1.0))
}

/// Worst-case PDL `α`; the compound set is `γ ∈ [−α, α]` with arbitrary rotations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PdlClass {
    alpha: f64,
}

impl PdlClass {
    pub fn new(alpha: f64) -> Result<Self> {
        pdl_db_from_alpha(alpha)?;
        Ok(Self { alpha })
    }

    pub fn from_pdl_db(pdl_db: f64) -> Result<Self> {
        Self::new(alpha_from_pdl_db(pdl_db)?)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn pdl_db(&self) -> f64 {
        10.0 * ((1.0 + self.alpha) / (1.0 - self.alpha)).log10()
    }

    pub fn contains(&self, params: &ChannelParams) -> bool {
        params.gamma.abs() <= self.alpha
    }

    /// Parameters belonging to this class.
    pub fn params(&self, gamma: f64, theta: f64, phi: Option<f64>) -> Result<ChannelParams> {
        if gamma.abs() > self.alpha {
            return Err(domain(format!(
                "|gamma| = {} exceeds the class bound alpha = {}",
                gamma.abs(),
                self.alpha
            )));
        }
        ChannelParams::new(gamma, theta, phi)
    }
}

impl<'de> Deserialize<'de> for PdlClass {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            alpha: f64,
        }
        let raw = Raw::deserialize(d)?;
        PdlClass::new(raw.alpha).map_err(serde::de::Error::custom)
    }
}

fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// One member of the compound class: PDL `γ`, rotation `θ`, and for the
/// complex model the phase `φ`. Angles are normalized into `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub gamma: f64,
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
}

impl ChannelParams {
    pub fn new(gamma: f64, theta: f64, phi: Option<f64>) -> Result<Self> {
        if !(gamma.abs() < 1.0) {
            return Err(domain(format!("|gamma| must be < 1, got {gamma}")));
        }
        if !theta.is_finite() || phi.is_some_and(|p| !p.is_finite()) {
            return Err(domain("angles must be finite"));
        }
        Ok(Self {
            gamma,
            theta: wrap_angle(theta),
            phi: phi.map(wrap_angle),
        })
    }

    pub fn real(gamma: f64, theta: f64) -> Result<Self> {
        Self::new(gamma, theta, None)
    }

    pub fn complex(gamma: f64, theta: f64, phi: f64) -> Result<Self> {
        Self::new(gamma, theta, Some(phi))
    }

    pub fn model(&self) -> ChannelModel {
        match self.phi {
            None => ChannelModel::Real,
            Some(_) => ChannelModel::ComplexEquivalent,
        }
    }
}

/// Per-real-dimension SNR. Serialized as `{"snr_linear": .., "snr_db": ..}`;
/// either key is accepted on input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrSpec {
    linear: f64,
}

impl SnrSpec {
    pub fn new(linear: f64) -> Result<Self> {
        if !(linear > 0.0) || !linear.is_finite() {
            return Err(domain(format!("SNR must be positive and finite, got {linear}")));
        }
        Ok(Self { linear })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::new(10f64.powf(db / 10.0))
    }

    pub fn linear(&self) -> f64 {
        self.linear
    }

    pub fn db(&self) -> f64 {
        10.0 * self.linear.log10()
    }
}

impl Serialize for SnrSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("SnrSpec", 2)?;
        st.serialize_field("snr_linear", &self.linear)?;
        st.serialize_field("snr_db", &self.db())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for SnrSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            snr_linear: Option<f64>,
            snr_db: Option<f64>,
        }
        let raw = Raw::deserialize(d)?;
        let spec = match (raw.snr_linear, raw.snr_db) {
            (Some(lin), _) => SnrSpec::new(lin),
            (None, Some(db)) => SnrSpec::from_db(db),
            (None, None) => {
                return Err(serde::de::Error::custom("expected `snr_linear` or `snr_db`"))
            }
        };
        spec.map_err(serde::de::Error::custom)
    }
}

/// Dense single-use channel matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrix {
    pub entries: DMatrix<f64>,
    pub model: ChannelModel,
}

impl ChannelMatrix {
    /// Squared singular values in descending order.
    pub fn squared_singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self
            .entries
            .singular_values()
            .iter()
            .map(|s| s * s)
            .collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }
}

fn pdl_diag(gamma: f64, copies: usize) -> DMatrix<f64> {
    let d = [(1.0 + gamma).sqrt(), (1.0 - gamma).sqrt()];
    DMatrix::from_fn(2 * copies, 2 * copies, |i, j| if i == j { d[i % 2] } else { 0.0 })
}

fn rotation(theta: f64, copies: usize) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    let mut r = DMatrix::zeros(2 * copies, 2 * copies);
    for k in 0..copies {
        let o = 2 * k;
        r[(o, o)] = c;
        r[(o, o + 1)] = -s;
        r[(o + 1, o)] = s;
        r[(o + 1, o + 1)] = c;
    }
    r
}

/// Real-equivalent of `diag(e^{iφ}, e^{−iφ})`.
fn phase(phi: f64) -> DMatrix<f64> {
    let (s, c) = phi.sin_cos();
    DMatrix::from_row_slice(
        4,
        4,
        &[
            c, 0.0, -s, 0.0, //
            0.0, c, 0.0, s, //
            s, 0.0, c, 0.0, //
            0.0, -s, 0.0, c,
        ],
    )
}

/// `D_γ · R_θ` for the real model.
pub fn channel_matrix_real(params: &ChannelParams) -> Result<ChannelMatrix> {
    if params.phi.is_some() {
        return Err(domain("real channel model takes no phase parameter"));
    }
    Ok(ChannelMatrix {
        entries: pdl_diag(params.gamma, 1) * rotation(params.theta, 1),
        model: ChannelModel::Real,
    })
}

/// `D_γ · R_θ · B_φ` in the 4×4 real-equivalent layout.
pub fn channel_matrix_complex(params: &ChannelParams) -> Result<ChannelMatrix> {
    let phi = params
        .phi
        .ok_or_else(|| domain("complex channel model requires a phase parameter"))?;
    Ok(ChannelMatrix {
        entries: pdl_diag(params.gamma, 2) * rotation(params.theta, 2) * phase(phi),
        model: ChannelModel::ComplexEquivalent,
    })
}

/// Dispatches on the model implied by `params`.
pub fn channel_matrix(params: &ChannelParams) -> ChannelMatrix {
    match params.model() {
        ChannelModel::Real => channel_matrix_real(params),
        ChannelModel::ComplexEquivalent => channel_matrix_complex(params),
    }
    .expect("model dispatch matches parameter shape")
}

/// Received signal-to-noise ratio under a balanced input of per-dimension
/// power `snr`: `trace(HᵀH)·snr / n`.
pub fn received_snr(matrix: &ChannelMatrix, snr: SnrSpec) -> f64 {
    let n = matrix.entries.nrows() as f64;
    let energy: f64 = matrix.entries.iter().map(|x| x * x).sum();
    energy * snr.linear() / n
}

/// Deterministic lattice over the compound set. γ points include both
/// endpoints `±α`; θ and φ points cover `[0, 2π)` without the right endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub n_gamma: usize,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for ParamGrid {
    fn default() -> Self {
        Self {
            n_gamma: 41,
            n_theta: 64,
            n_phi: 64,
        }
    }
}

impl ParamGrid {
    pub fn gamma_values(&self, alpha: f64) -> Vec<f64> {
        match self.n_gamma {
            0 => vec![],
            1 => vec![alpha],
            n => (0..n)
                .map(|j| alpha * (2.0 * j as f64 / (n - 1) as f64 - 1.0))
                .collect(),
        }
    }

    pub fn theta_values(&self) -> Vec<f64> {
        angle_lattice(self.n_theta)
    }

    pub fn phi_values(&self) -> Vec<f64> {
        angle_lattice(self.n_phi)
    }

    /// Number of lattice points for `model`.
    pub fn len(&self, model: ChannelModel) -> usize {
        let phis = match model {
            ChannelModel::Real => 1,
            ChannelModel::ComplexEquivalent => self.n_phi,
        };
        self.n_gamma * self.n_theta * phis
    }

    pub fn is_empty(&self, model: ChannelModel) -> bool {
        self.len(model) == 0
    }

    /// All lattice points, γ outermost and φ innermost.
    pub fn points(&self, class: &PdlClass, model: ChannelModel) -> Vec<ChannelParams> {
        let thetas = self.theta_values();
        let phis: Vec<Option<f64>> = match model {
            ChannelModel::Real => vec![None],
            ChannelModel::ComplexEquivalent => self.phi_values().into_iter().map(Some).collect(),
        };
        let mut out = Vec::with_capacity(self.len(model));
        for gamma in self.gamma_values(class.alpha()) {
            for &theta in &thetas {
                for &phi in &phis {
                    out.push(ChannelParams { gamma, theta, phi });
                }
            }
        }
        out
    }
}

fn angle_lattice(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SampleMode {
    /// `γ = ±α` with equal probability, angles uniform.
    WorstCaseEdge,
    /// `γ` uniform on `[−α, α]`, angles uniform.
    UniformInterior,
    /// The deterministic [`ParamGrid`] lattice; the stream ends after it.
    Grid(ParamGrid),
}

/// Stream of parameters drawn from a class.
pub struct ParamStream {
    class: PdlClass,
    model: ChannelModel,
    kind: StreamKind,
}

enum StreamKind {
    Random { mode: SampleMode, rng: SimRng },
    Lattice(std::vec::IntoIter<ChannelParams>),
}

impl Iterator for ParamStream {
    type Item = ChannelParams;

    fn next(&mut self) -> Option<ChannelParams> {
        match &mut self.kind {
            StreamKind::Lattice(it) => it.next(),
            StreamKind::Random { mode, rng } => {
                let alpha = self.class.alpha();
                let gamma = match mode {
                    SampleMode::WorstCaseEdge => {
                        if rng.random::<bool>() {
                            alpha
                        } else {
                            -alpha
                        }
                    }
                    _ => alpha * (2.0 * rng.random::<f64>() - 1.0),
                };
                let theta = TAU * rng.random::<f64>();
                let phi = match self.model {
                    ChannelModel::Real => None,
                    ChannelModel::ComplexEquivalent => Some(TAU * rng.random::<f64>()),
                };
                Some(ChannelParams { gamma, theta, phi })
            }
        }
    }
}

/// Parameter stream for `class`; deterministic for a fixed `seed`.
pub fn sample_params(
    class: PdlClass,
    model: ChannelModel,
    mode: SampleMode,
    seed: u64,
) -> ParamStream {
    let kind = match mode {
        SampleMode::Grid(grid) => StreamKind::Lattice(grid.points(&class, model).into_iter()),
        _ => StreamKind::Random {
            mode,
            rng: child_rng(seed, 0),
        },
    };
    ParamStream { class, model, kind }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn pdl_db_examples() {
        // commonly rounded to 6 dB
        let db = pdl_db_from_alpha(0.599).unwrap();
        assert!((db - 6.007).abs() < 5e-4);
        assert_relative_eq!(db, 10.0 * (1.599f64 / 0.401).log10(), max_relative = 1e-14);
        assert_eq!(pdl_db_from_alpha(0.0).unwrap(), 0.0);
        assert_relative_eq!(
            pdl_db_from_alpha(1.0 / 3.0).unwrap(),
            10.0 * 2f64.log10(),
            max_relative = 1e-12
        );
        assert!(pdl_db_from_alpha(1.0).is_err());
        assert!(pdl_db_from_alpha(-0.1).is_err());
    }

    #[test]
    fn alpha_from_db_examples() {
        let a = alpha_from_pdl_db(6.0).unwrap();
        assert!((a - 0.5985).abs() < 5e-5);
        assert!((a - 0.599).abs() < 1e-3);
        assert_eq!(alpha_from_pdl_db(0.0).unwrap(), 0.0);
        let third = alpha_from_pdl_db(10.0 * 2f64.log10()).unwrap();
        assert_relative_eq!(third, 1.0 / 3.0, max_relative = 1e-12);
        assert!(alpha_from_pdl_db(-1.0).is_err());
    }

    #[test]
    fn class_bounds_gamma() {
        let class = PdlClass::new(0.5).unwrap();
        assert!(class.params(0.6, 0.0, None).is_err());
        let p = class.params(-0.5, -0.1, Some(7.0)).unwrap();
        assert!(class.contains(&p));
        assert!((0.0..TAU).contains(&p.theta));
        assert!((0.0..TAU).contains(&p.phi.unwrap()));
        assert_eq!(PdlClass::new(0.0).unwrap().pdl_db(), 0.0);
    }

    #[test]
    fn real_matrix_examples() {
        let id = channel_matrix_real(&ChannelParams::real(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(id.entries, DMatrix::identity(2, 2));

        let alpha = 0.599;
        let m = channel_matrix_real(&ChannelParams::real(alpha, 0.0).unwrap()).unwrap();
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            (1.0 + alpha).sqrt(),
            (1.0 - alpha).sqrt(),
        ]));
        assert!((m.entries - expect).amax() < 1e-15);

        let m = channel_matrix_real(&ChannelParams::real(0.5, PI / 4.0).unwrap()).unwrap();
        let sv = m.squared_singular_values();
        assert!((sv[0] - 1.5).abs() < 1e-12 && (sv[1] - 0.5).abs() < 1e-12);

        assert!(channel_matrix_real(&ChannelParams::complex(0.1, 0.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn complex_matrix_examples() {
        let id = channel_matrix_complex(&ChannelParams::complex(0.0, 0.0, 0.0).unwrap()).unwrap();
        assert!((id.entries - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);

        // φ = 0: two copies of the real 2×2 structure, one per real/imaginary half
        let p = ChannelParams::complex(0.3, 1.1, 0.0).unwrap();
        let m = channel_matrix_complex(&p).unwrap().entries;
        let r = channel_matrix_real(&ChannelParams::real(0.3, 1.1).unwrap())
            .unwrap()
            .entries;
        assert!((m.view((0, 0), (2, 2)) - &r).amax() < 1e-15);
        assert!((m.view((2, 2), (2, 2)) - &r).amax() < 1e-15);
        assert!(m.view((0, 2), (2, 2)).amax() < 1e-15);
        assert!(m.view((2, 0), (2, 2)).amax() < 1e-15);

        let m = channel_matrix_complex(&ChannelParams::complex(0.3, 1.0, 2.0).unwrap()).unwrap();
        let sv = m.squared_singular_values();
        for (got, want) in sv.iter().zip([1.3, 1.3, 0.7, 0.7]) {
            assert!((got - want).abs() < 1e-12, "{sv:?}");
        }
        assert!(channel_matrix_complex(&ChannelParams::real(0.1, 0.0).unwrap()).is_err());
    }

    #[test]
    fn sampling_modes() {
        let zero = PdlClass::new(0.0).unwrap();
        for mode in [
            SampleMode::WorstCaseEdge,
            SampleMode::UniformInterior,
            SampleMode::Grid(ParamGrid::default()),
        ] {
            assert!(sample_params(zero, ChannelModel::Real, mode, 1)
                .take(200)
                .all(|p| p.gamma == 0.0));
        }

        let class = PdlClass::new(0.599).unwrap();
        let edge: Vec<_> = sample_params(class, ChannelModel::ComplexEquivalent, SampleMode::WorstCaseEdge, 9)
            .take(500)
            .collect();
        assert!(edge.iter().all(|p| p.gamma.abs() == 0.599 && p.phi.is_some()));
        assert!(edge.iter().any(|p| p.gamma > 0.0) && edge.iter().any(|p| p.gamma < 0.0));

        let again: Vec<_> = sample_params(class, ChannelModel::ComplexEquivalent, SampleMode::WorstCaseEdge, 9)
            .take(500)
            .collect();
        assert_eq!(edge, again);

        let interior = sample_params(class, ChannelModel::Real, SampleMode::UniformInterior, 2)
            .take(1000)
            .collect::<Vec<_>>();
        assert!(interior.iter().all(|p| class.contains(p) && p.phi.is_none()));

        let grid = ParamGrid {
            n_gamma: 5,
            n_theta: 3,
            n_phi: 2,
        };
        let half = PdlClass::new(0.5).unwrap();
        assert_eq!(grid.gamma_values(0.5), vec![-0.5, -0.25, 0.0, 0.25, 0.5]);
        let pts: Vec<_> = sample_params(half, ChannelModel::ComplexEquivalent, SampleMode::Grid(grid), 0).collect();
        assert_eq!(pts.len(), 30);
        assert_eq!(grid.theta_values(), vec![0.0, TAU / 3.0, 2.0 * TAU / 3.0]);
    }

    #[test]
    fn received_snr_examples() {
        let snr = SnrSpec::new(20.0).unwrap();
        let m = channel_matrix_real(&ChannelParams::real(0.599, 0.4).unwrap()).unwrap();
        assert_relative_eq!(received_snr(&m, snr), 20.0, max_relative = 1e-12);
        let m = channel_matrix_complex(&ChannelParams::complex(0.9, 1.2, 0.3).unwrap()).unwrap();
        let five = SnrSpec::new(5.0).unwrap();
        assert_relative_eq!(received_snr(&m, five), 5.0, max_relative = 1e-12);
    }

    #[test]
    fn received_snr_is_parameter_free_on_grid() {
        let class = PdlClass::new(0.9).unwrap();
        let grid = ParamGrid {
            n_gamma: 10,
            n_theta: 10,
            n_phi: 10,
        };
        let snr = SnrSpec::new(7.0).unwrap();
        let worst = grid
            .points(&class, ChannelModel::ComplexEquivalent)
            .iter()
            .map(|p| (received_snr(&channel_matrix(p), snr) / 7.0 - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10);
    }

    #[test]
    fn snr_spec_serde() {
        let s: SnrSpec = serde_json::from_str(r#"{"snr_db": 10.0}"#).unwrap();
        assert_relative_eq!(s.linear(), 10.0, max_relative = 1e-12);
        let s: SnrSpec = serde_json::from_str(r#"{"snr_linear": 20.0}"#).unwrap();
        assert_relative_eq!(s.db(), 10.0 * 20f64.log10(), max_relative = 1e-12);
        assert!(serde_json::from_str::<SnrSpec>(r#"{"snr_linear": -1.0}"#).is_err());
        assert!(SnrSpec::new(0.0).is_err());
    }

    proptest! {
        #[test]
        fn db_alpha_round_trip(alpha in 0.0f64..0.99) {
            let back = alpha_from_pdl_db(pdl_db_from_alpha(alpha).unwrap()).unwrap();
            prop_assert!((back - alpha).abs() <= 1e-12 * alpha.max(1e-300) || (back - alpha).abs() < 1e-15);
        }

        #[test]
        fn singular_values_are_one_plus_minus_gamma(
            gamma in -0.99f64..0.99, theta in 0.0f64..TAU, phi in 0.0f64..TAU,
        ) {
            let lo = 1.0 - gamma.abs();
            let hi = 1.0 + gamma.abs();
            let r = channel_matrix(&ChannelParams::real(gamma, theta).unwrap()).squared_singular_values();
            prop_assert!((r[0] - hi).abs() < 1e-10 && (r[1] - lo).abs() < 1e-10);
            let c = channel_matrix(&ChannelParams::complex(gamma, theta, phi).unwrap()).squared_singular_values();
            for (got, want) in c.iter().zip([hi, hi, lo, lo]) {
                prop_assert!((got - want).abs() < 1e-10);
            }
        }

        #[test]
        fn complex_matrix_is_real_representation(
            gamma in -0.99f64..0.99, theta in 0.0f64..TAU, phi in 0.0f64..TAU,
        ) {
            let m = channel_matrix(&ChannelParams::complex(gamma, theta, phi).unwrap()).entries;
            // [[A, −B], [B, A]] for the complex matrix A + iB
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((m[(i, j)] - m[(i + 2, j + 2)]).abs() < 1e-12);
                    prop_assert!((m[(i, j + 2)] + m[(i + 2, j)]).abs() < 1e-12);
                }
            }
        }
    }
}
