//! Linear equalization and successive interference cancellation.
//!
//! For `Y = H·U + Z` with `E[UUᵀ] = SNR·I`, `Z ~ N(0, I)` and an equalizer
//! `E`, split `E·H = Λ + F` with `Λ` diagonal. The equalized output is
//! `Ũ + Z̃` where `Ũ = Λ·U` and `Z̃ = F·U + E·Z`, giving
//!
//! ```text
//! K_ŨŨ = SNR·Λ²,   K_ŨZ̃ = SNR·Λ·Fᵀ,   K_Z̃Z̃ = SNR·F·Fᵀ + E·Eᵀ
//! ```
//!
//! and per-stream SNRs `(K_ŨŨ)_ii / (K_Z̃Z̃)_ii`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::capacity::awgn_bits;
use crate::channel::SnrSpec;
use crate::error::{domain, Error, Result};
use crate::precode::EffectiveChannel;

/// Largest condition number accepted before an inversion is refused.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EqualizerKind {
    ZeroForcing,
    Lmmse,
    /// `E = H2ᵀ` applied after cancelling the first stream group.
    MatchedSecondStage,
}

#[derive(Clone, Debug)]
pub struct Equalizer {
    pub e: DMatrix<f64>,
    pub kind: EqualizerKind,
}

pub(crate) fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

fn guarded_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let condition = condition_number(m);
    if !(condition < CONDITION_LIMIT) {
        return Err(Error::Singular { condition });
    }
    m.clone()
        .try_inverse()
        .ok_or(Error::Singular { condition })
}

/// `E = H⁻¹`.
pub fn zf_equalizer(effective: &EffectiveChannel) -> Result<Equalizer> {
    Ok(Equalizer {
        e: guarded_inverse(&effective.h)?,
        kind: EqualizerKind::ZeroForcing,
    })
}

/// `E = Hᵀ(HHᵀ + I/SNR)⁻¹`.
pub fn lmmse_equalizer(effective: &EffectiveChannel) -> Result<Equalizer> {
    Ok(Equalizer {
        e: lmmse_matrix(&effective.h, effective.snr.linear())?,
        kind: EqualizerKind::Lmmse,
    })
}

pub(crate) fn lmmse_matrix(h: &DMatrix<f64>, snr: f64) -> Result<DMatrix<f64>> {
    let m = h.nrows();
    let reg = h * h.transpose() + DMatrix::<f64>::identity(m, m) / snr;
    Ok(h.transpose() * guarded_inverse(&reg)?)
}

/// `E = H2ᵀ`.
pub fn matched_second_stage(effective: &EffectiveChannel) -> Equalizer {
    Equalizer {
        e: effective.h2.transpose(),
        kind: EqualizerKind::MatchedSecondStage,
    }
}

/// Post-equalization covariances and per-stream SNRs.
#[derive(Clone, Debug)]
pub struct StreamStats {
    pub k_uu: DMatrix<f64>,
    pub k_uz: DMatrix<f64>,
    pub k_zz: DMatrix<f64>,
    pub lambda: DVector<f64>,
    pub f: DMatrix<f64>,
    pub snr_per_stream: Vec<f64>,
}

/// Statistics of `Ũ + Z̃` for the output `signal_map·U + noise_map·Z`.
/// With `signal_map = E·H` and `noise_map = E` this is the usual single-stage
/// case; other maps describe outputs after cancellation.
pub fn statistics_from_map(
    signal_map: &DMatrix<f64>,
    noise_map: &DMatrix<f64>,
    snr: f64,
) -> StreamStats {
    let lambda = signal_map.diagonal();
    let mut f = signal_map.clone();
    f.fill_diagonal(0.0);
    let lam = DMatrix::from_diagonal(&lambda);
    let k_uu = &lam * &lam * snr;
    let k_uz = &lam * f.transpose() * snr;
    let k_zz = &f * f.transpose() * snr + noise_map * noise_map.transpose();
    let snr_per_stream = (0..lambda.len())
        .map(|i| k_uu[(i, i)] / k_zz[(i, i)])
        .collect();
    StreamStats {
        k_uu,
        k_uz,
        k_zz,
        lambda,
        f,
        snr_per_stream,
    }
}

pub fn stream_statistics(effective: &EffectiveChannel, equalizer: &Equalizer) -> Result<StreamStats> {
    if equalizer.e.ncols() != effective.h.nrows() {
        return Err(Error::Dimension {
            expected: effective.h.nrows(),
            got: equalizer.e.ncols(),
        });
    }
    let eh = &equalizer.e * &effective.h;
    Ok(statistics_from_map(&eh, &equalizer.e, effective.snr.linear()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FirstStage {
    #[serde(rename = "ZF")]
    ZeroForcing,
    #[serde(rename = "LMMSE")]
    Lmmse,
}

/// Equalizer outputs for one received vector.
#[derive(Clone, Debug)]
pub struct SicOutputs {
    /// First-stage equalizer outputs for streams `1..=n/2`.
    pub first_stage: DVector<f64>,
    /// `Ŷ = H2ᵀ(Y − H1·u_first)` for streams `n/2+1..=n`.
    pub second_stage: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct SicResult {
    /// Statistics of the first-stage equalizer over all `n` streams; only
    /// streams `1..=n/2` are decoded from it.
    pub first_stage: StreamStats,
    /// Statistics of the `n/2` streams after cancellation and `H2ᵀ` filtering.
    pub second_stage: StreamStats,
    pub achievable_rate_bits_per_real_dim: f64,
    pub outputs: Option<SicOutputs>,
}

impl SicResult {
    /// SNRs of the decoded streams in decoding order.
    pub fn decoded_snrs(&self) -> Vec<f64> {
        let half = self.second_stage.snr_per_stream.len();
        self.first_stage.snr_per_stream[..half]
            .iter()
            .chain(&self.second_stage.snr_per_stream)
            .copied()
            .collect()
    }
}

/// Two-stage receiver: decode the first column group with a linear
/// equalizer, cancel it, then match-filter the second group with `H2ᵀ`.
#[derive(Clone, Debug)]
pub struct SicReceiver {
    first: Equalizer,
    second: Equalizer,
    h1: DMatrix<f64>,
    snr: f64,
}

impl SicReceiver {
    pub fn new(effective: &EffectiveChannel, first_stage: FirstStage) -> Result<Self> {
        let first = match first_stage {
            FirstStage::ZeroForcing => zf_equalizer(effective)?,
            FirstStage::Lmmse => lmmse_equalizer(effective)?,
        };
        Ok(Self {
            first,
            second: matched_second_stage(effective),
            h1: effective.h1.clone(),
            snr: effective.snr.linear(),
        })
    }

    pub fn half(&self) -> usize {
        self.h1.ncols()
    }

    pub fn first_equalizer(&self) -> &Equalizer {
        &self.first
    }

    /// Equalized first-group outputs.
    pub fn first_stage(&self, received: &DVector<f64>) -> DVector<f64> {
        self.first.e.rows(0, self.half()) * received
    }

    /// `H2ᵀ(Y − H1·u_first)`.
    pub fn cancel(&self, received: &DVector<f64>, first_symbols: &DVector<f64>) -> DVector<f64> {
        &self.second.e * (received - &self.h1 * first_symbols)
    }

    /// Signal and noise maps of the stacked decoded outputs, assuming the
    /// first group was cancelled perfectly.
    pub fn combined_maps(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let half = self.half();
        let n = 2 * half;
        let h2 = self.second.e.transpose();
        let h = {
            let mut h = DMatrix::zeros(n, n);
            h.columns_mut(0, half).copy_from(&self.h1);
            h.columns_mut(half, half).copy_from(&h2);
            h
        };
        let first_signal = self.first.e.rows(0, half) * &h;
        let mut signal = DMatrix::zeros(n, n);
        signal.rows_mut(0, half).copy_from(&first_signal);
        signal
            .view_mut((half, half), (half, half))
            .copy_from(&(&self.second.e * &h2));
        let mut noise = DMatrix::zeros(n, h.nrows());
        noise.rows_mut(0, half).copy_from(&self.first.e.rows(0, half));
        noise.rows_mut(half, half).copy_from(&self.second.e);
        (signal, noise)
    }

    /// Genie-aided statistics of both stages.
    pub fn analyze(&self) -> SicResult {
        let h2 = self.second.e.transpose();
        let h = {
            let mut h = DMatrix::zeros(h2.nrows(), 2 * self.half());
            h.columns_mut(0, self.half()).copy_from(&self.h1);
            h.columns_mut(self.half(), self.half()).copy_from(&h2);
            h
        };
        let first_stage = statistics_from_map(&(&self.first.e * &h), &self.first.e, self.snr);
        let second_stage = statistics_from_map(&(&self.second.e * &h2), &self.second.e, self.snr);
        let n = h.ncols() as f64;
        let half = self.half();
        let rate = first_stage.snr_per_stream[..half]
            .iter()
            .chain(&second_stage.snr_per_stream)
            .map(|&s| awgn_bits(s))
            .sum::<f64>()
            / n;
        SicResult {
            first_stage,
            second_stage,
            achievable_rate_bits_per_real_dim: rate,
            outputs: None,
        }
    }
}

/// Runs both SIC stages on one received vector. `first_half_symbols` are the
/// true (genie) or decoded values of the first stream group.
pub fn sic_pipeline(
    effective: &EffectiveChannel,
    first_stage: FirstStage,
    first_half_symbols: &DVector<f64>,
    received: &DVector<f64>,
) -> Result<SicResult> {
    let n = effective.streams();
    if received.len() != effective.h.nrows() {
        return Err(Error::Dimension {
            expected: effective.h.nrows(),
            got: received.len(),
        });
    }
    if first_half_symbols.len() != n / 2 {
        return Err(Error::Dimension {
            expected: n / 2,
            got: first_half_symbols.len(),
        });
    }
    let rx = SicReceiver::new(effective, first_stage)?;
    let mut result = rx.analyze();
    result.outputs = Some(SicOutputs {
        first_stage: rx.first_stage(received),
        second_stage: rx.cancel(received, first_half_symbols),
    });
    Ok(result)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamScheme {
    ZeroForcing,
    Lmmse,
    PostSic,
}

/// Per-stream SNR under the universal precoders, which depends on `γ` only.
pub fn closed_form_stream_snr(scheme: StreamScheme, gamma: f64, snr: SnrSpec) -> Result<f64> {
    if !(gamma.abs() < 1.0) {
        return Err(domain(format!("|gamma| must be < 1, got {gamma}")));
    }
    let s = snr.linear();
    let g2 = 1.0 - gamma * gamma;
    Ok(match scheme {
        StreamScheme::ZeroForcing => g2 * s,
        StreamScheme::Lmmse => (g2 * s * s + s) / (s + 1.0),
        StreamScheme::PostSic => s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_params, ChannelModel, ChannelParams, PdlClass, SampleMode};
    use crate::precode::{effective_channel, precoder_real, s_gamma_theta, universal_precoder, Precoder};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn eff(params: ChannelParams, precoder: &Precoder, snr: f64) -> EffectiveChannel {
        effective_channel(&params, precoder, SnrSpec::new(snr).unwrap()).unwrap()
    }

    fn block2(tl: &DMatrix<f64>, tr: &DMatrix<f64>, bl: &DMatrix<f64>, br: &DMatrix<f64>) -> DMatrix<f64> {
        let k = tl.nrows();
        let mut m = DMatrix::zeros(2 * k, 2 * k);
        m.view_mut((0, 0), (k, k)).copy_from(tl);
        m.view_mut((0, k), (k, k)).copy_from(tr);
        m.view_mut((k, 0), (k, k)).copy_from(bl);
        m.view_mut((k, k), (k, k)).copy_from(br);
        m
    }

    #[test]
    fn zf_identity_without_pdl() {
        let e = eff(ChannelParams::real(0.0, 0.0).unwrap(), &Precoder::identity(ChannelModel::Real), 10.0);
        let zf = zf_equalizer(&e).unwrap();
        assert!((zf.e - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);
    }

    #[test]
    fn zf_statistics_match_printed_real_forms() {
        let (gamma, theta, snr) = (0.599, 0.37, 20.0);
        let e = eff(ChannelParams::real(gamma, theta).unwrap(), &precoder_real(), snr);
        let zf = zf_equalizer(&e).unwrap();
        assert!((&zf.e * &e.h - DMatrix::<f64>::identity(4, 4)).amax() < 1e-10);
        let st = stream_statistics(&e, &zf).unwrap();
        assert!(st.f.amax() < 1e-12);
        assert!(st.k_uz.amax() < 1e-10);
        assert!((&st.k_uu - DMatrix::<f64>::identity(4, 4) * snr).amax() < 1e-9);
        let s = s_gamma_theta(gamma, theta);
        let eye = DMatrix::<f64>::identity(2, 2);
        let expect = block2(&eye, &s, &s, &eye) / (1.0 - gamma * gamma);
        assert!((&st.k_zz - expect).amax() < 1e-10);
        for &x in &st.snr_per_stream {
            assert_relative_eq!(x, (1.0 - gamma * gamma) * snr, max_relative = 1e-10);
        }
    }

    #[test]
    fn zf_without_precoder_depends_on_theta() {
        let (gamma, theta, snr) = (0.5, 0.9, 10.0);
        // one channel use is enough here; build it from two uses of the identity precoder
        let e = eff(ChannelParams::real(gamma, theta).unwrap(), &Precoder::identity(ChannelModel::Real), snr);
        let st = stream_statistics(&e, &zf_equalizer(&e).unwrap()).unwrap();
        let c2 = (2.0 * theta).cos();
        let want = [
            (1.0 - gamma * gamma) / (1.0 - gamma * c2) * snr,
            (1.0 - gamma * gamma) / (1.0 + gamma * c2) * snr,
        ];
        for (i, w) in want.iter().cycle().take(4).enumerate() {
            assert_relative_eq!(st.snr_per_stream[i], *w, max_relative = 1e-12);
        }
        assert!(st.k_uz.amax() < 1e-12);
        assert!((&st.k_uu - DMatrix::<f64>::identity(4, 4) * snr).amax() < 1e-12);
    }

    #[test]
    fn zf_refuses_singular_channels() {
        let mut e = eff(ChannelParams::real(0.5, 0.0).unwrap(), &precoder_real(), 10.0);
        e.h.column_mut(0).fill(0.0);
        assert!(matches!(zf_equalizer(&e), Err(Error::Singular { .. })));
    }

    #[test]
    fn lmmse_approaches_zf_at_high_snr() {
        let e = eff(ChannelParams::real(0.6, 1.3).unwrap(), &precoder_real(), 1e8);
        let l = lmmse_equalizer(&e).unwrap();
        let z = zf_equalizer(&e).unwrap();
        assert!((l.e - z.e).amax() < 1e-6);
    }

    #[test]
    fn lmmse_statistics_match_printed_forms() {
        for (gamma, theta, s) in [(0.599, 0.37, 20.0), (-0.3, 2.0, 3.0), (0.9, 4.4, 100.0)] {
            let e = eff(ChannelParams::real(gamma, theta).unwrap(), &precoder_real(), s);
            let st = stream_statistics(&e, &lmmse_equalizer(&e).unwrap()).unwrap();
            let g2 = 1.0 - gamma * gamma;
            let den = s * s * g2 + 2.0 * s + 1.0;
            let kuu = s.powi(3) * (s * g2 + 1.0).powi(2) / (den * den);
            assert!((&st.k_uu - DMatrix::<f64>::identity(4, 4) * kuu).amax() < 1e-9 * kuu);

            let sm = s_gamma_theta(gamma, theta);
            let z = DMatrix::<f64>::zeros(2, 2);
            let kuz = s.powi(3) * (s * g2 + 1.0) / (den * den);
            let expect_uz = block2(&z, &(-&sm), &(-&sm), &z) * kuz;
            assert!((&st.k_uz - expect_uz).amax() < 1e-9 * kuu);

            let kzz = s * s * (s + 1.0) * (s * g2 + 1.0) / (den * den);
            let t = &sm * ((s * s * g2 - 1.0) / ((s + 1.0) * (s * g2 + 1.0)));
            let eye = DMatrix::<f64>::identity(2, 2);
            let expect_zz = block2(&eye, &t, &t, &eye) * kzz;
            assert!((&st.k_zz - expect_zz).amax() < 1e-9 * kzz.max(1.0));

            let want = closed_form_stream_snr(StreamScheme::Lmmse, gamma, SnrSpec::new(s).unwrap()).unwrap();
            for &x in &st.snr_per_stream {
                assert_relative_eq!(x, want, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn lmmse_operating_point() {
        let (gamma, s) = (0.599, 20.0);
        let e = eff(ChannelParams::real(gamma, 0.8).unwrap(), &precoder_real(), s);
        let st = stream_statistics(&e, &lmmse_equalizer(&e).unwrap()).unwrap();
        let want = ((1.0 - gamma * gamma) * 400.0 + 20.0) / 21.0;
        for &x in &st.snr_per_stream {
            assert_relative_eq!(x, want, max_relative = 1e-10);
        }
    }

    #[test]
    fn diag_of_cross_covariance_vanishes() {
        let mut rng = crate::rng::child_rng(3, 0);
        for _ in 0..20 {
            let h = DMatrix::from_fn(4, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
            let e = DMatrix::from_fn(4, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
            let st = statistics_from_map(&(&e * &h), &e, 7.0);
            for i in 0..4 {
                assert_eq!(st.k_uz[(i, i)], 0.0);
            }
            assert!((&st.k_zz - st.k_zz.transpose()).amax() < 1e-12);
            assert!(st.k_zz.symmetric_eigenvalues().min() > -1e-10);
        }
    }

    #[test]
    fn sic_genie_second_stage_is_white() {
        let class = PdlClass::new(0.9).unwrap();
        for model in [ChannelModel::Real, ChannelModel::ComplexEquivalent] {
            for p in sample_params(class, model, SampleMode::UniformInterior, 11).take(10_000) {
                let e = eff(p, &universal_precoder(model), 20.0);
                let res = SicReceiver::new(&e, FirstStage::Lmmse).unwrap().analyze();
                let k = res.second_stage.k_zz.nrows();
                assert!((&res.second_stage.k_zz - DMatrix::<f64>::identity(k, k)).amax() < 1e-10);
                assert!(res.second_stage.k_uz.amax() < 1e-10);
                for &x in &res.second_stage.snr_per_stream {
                    assert!((x / 20.0 - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn sic_pipeline_first_stage_zf() {
        let (gamma, s) = (0.599, 20.0);
        let e = eff(ChannelParams::real(gamma, 1.7).unwrap(), &precoder_real(), s);
        let u = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let y = &e.h * &u;
        let res = sic_pipeline(&e, FirstStage::ZeroForcing, &u.rows(0, 2).into_owned(), &y).unwrap();
        let out = res.outputs.as_ref().unwrap();
        // noiseless: both stages recover their symbols exactly
        assert!((&out.first_stage - u.rows(0, 2)).amax() < 1e-12);
        assert!((&out.second_stage - u.rows(2, 2)).amax() < 1e-12);
        for &x in &res.first_stage.snr_per_stream[..2] {
            assert_relative_eq!(x, (1.0 - gamma * gamma) * s, max_relative = 1e-10);
            assert!((x - 12.824).abs() < 1e-3);
        }
        let e0 = eff(ChannelParams::real(0.0, 1.7).unwrap(), &precoder_real(), s);
        let res0 = SicReceiver::new(&e0, FirstStage::ZeroForcing).unwrap().analyze();
        for x in res0.decoded_snrs() {
            assert_relative_eq!(x, s, max_relative = 1e-12);
        }
        assert!(sic_pipeline(&e, FirstStage::Lmmse, &u, &y).is_err());
    }

    #[test]
    fn combined_maps_agree_with_stage_statistics() {
        let e = eff(ChannelParams::complex(0.5, 0.4, 2.5).unwrap(), &universal_precoder(ChannelModel::ComplexEquivalent), 9.0);
        let rx = SicReceiver::new(&e, FirstStage::Lmmse).unwrap();
        let (a, b) = rx.combined_maps();
        let st = statistics_from_map(&a, &b, 9.0);
        let res = rx.analyze();
        assert_eq!(st.snr_per_stream.len(), 8);
        for (x, y) in st.snr_per_stream.iter().zip(res.decoded_snrs()) {
            assert_relative_eq!(*x, y, max_relative = 1e-12);
        }
    }

    #[test]
    fn closed_forms() {
        let s = SnrSpec::new(20.0).unwrap();
        assert_relative_eq!(closed_form_stream_snr(StreamScheme::ZeroForcing, 0.599, s).unwrap(), 12.82398, epsilon = 1e-9);
        assert_relative_eq!(10.0 * 12.82398f64.log10(), 11.08, epsilon = 5e-3);
        for snr in [0.5, 20.0, 1e4] {
            let sp = SnrSpec::new(snr).unwrap();
            assert_relative_eq!(closed_form_stream_snr(StreamScheme::Lmmse, 0.0, sp).unwrap(), snr, max_relative = 1e-14);
        }
        assert_eq!(closed_form_stream_snr(StreamScheme::PostSic, 0.8, s).unwrap(), 20.0);
        assert!(closed_form_stream_snr(StreamScheme::ZeroForcing, 1.0, s).is_err());
    }

    #[test]
    fn within_group_correlations_vanish() {
        let class = PdlClass::new(0.8).unwrap();
        for model in [ChannelModel::Real, ChannelModel::ComplexEquivalent] {
            for p in sample_params(class, model, SampleMode::UniformInterior, 4).take(500) {
                let e = eff(p, &universal_precoder(model), 5.0);
                for eq in [zf_equalizer(&e).unwrap(), lmmse_equalizer(&e).unwrap()] {
                    let st = stream_statistics(&e, &eq).unwrap();
                    let half = e.streams() / 2;
                    for g in 0..2 {
                        for i in 0..half {
                            for j in 0..half {
                                if i != j {
                                    let (a, b) = (g * half + i, g * half + j);
                                    assert!(st.k_uz[(a, b)].abs() < 1e-10);
                                    assert!(st.k_zz[(a, b)].abs() < 1e-10);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
