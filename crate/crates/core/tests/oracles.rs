//! Reference values computed with an independent NumPy / float64 script and
//! frozen here, plus invariants over random inputs.

use approx::assert_relative_eq;
use proptest::prelude::*;

use pdlsic::capacity::{
    c_awgn, c_compound, c_compound_approx, c_nonjoint, c_parallel, c_parallel_approx,
    chain_rule_terms, penalties_db,
};
use pdlsic::channel::{pdl_db_from_alpha, ChannelParams, SnrSpec};
use pdlsic::equalize::{closed_form_stream_snr, stream_statistics, zf_equalizer, StreamScheme};
use pdlsic::linkbudget::{compose_fer, implied_gap_db};
use pdlsic::precode::{effective_channel, precoder_real, Precoder};

#[test]
fn capacity_reference_values() {
    // (snr, c_awgn, c_compound, c_compound_approx, c_nonjoint) at alpha = 0.599
    let table = [
        (1.0, 0.5, 0.4661033973947112, 0.4286875450734816, 0.24322847788436552),
        (20.0, 2.1961587113893803, 2.05416173178585, 2.045354638261556, 1.5865637167403281),
        (100.0, 3.3291057413758973, 3.172771751157601, 3.170809515450207, 2.6805332443971603),
        (1000.0, 4.983613129417996, 4.823726970238413, 4.823525716795989, 4.325525845589464),
    ];
    for (s, awgn, compound, approx, nonjoint) in table {
        assert_relative_eq!(c_awgn(s).unwrap(), awgn, max_relative = 1e-14);
        assert_relative_eq!(c_compound(0.599, s).unwrap(), compound, max_relative = 1e-14);
        assert_relative_eq!(c_compound_approx(0.599, s).unwrap(), approx, max_relative = 1e-14);
        assert_relative_eq!(c_nonjoint(0.599, s).unwrap(), nonjoint, max_relative = 1e-14);
    }
}

#[test]
fn penalty_reference_values() {
    let p = penalties_db(0.599).unwrap();
    assert_relative_eq!(p.nonjoint, 3.968556273798176, max_relative = 1e-13);
    assert_relative_eq!(p.parallel, 1.9300716363358295, max_relative = 1e-13);
    assert_relative_eq!(p.sic, 0.9650358181679147, max_relative = 1e-13);
    assert_relative_eq!(pdl_db_from_alpha(0.599).unwrap(), 6.007040911260524, max_relative = 1e-13);
}

#[test]
fn lmmse_stream_snr_reference() {
    let snr = SnrSpec::new(20.0).unwrap();
    let x = closed_form_stream_snr(StreamScheme::Lmmse, 0.599, snr).unwrap();
    assert_relative_eq!(x, 13.165695238095239, max_relative = 1e-14);
}

#[test]
fn link_budget_reference_values() {
    let c = compose_fer(1.2e-3, 1.3e-3).unwrap();
    assert_relative_eq!(c.exact, 2.49844e-3, max_relative = 1e-12);
    assert!((implied_gap_db(1.8, (1.0 - 0.599f64 * 0.599) * 20.0) - 0.61694).abs() < 1e-5);
    assert!((implied_gap_db(2.1, 20.0) - 0.61001).abs() < 1e-5);
}

#[test]
fn chain_rule_terms_match_determinant_differences() {
    let params = ChannelParams::real(0.599, 0.3).unwrap();
    let snr = SnrSpec::new(20.0).unwrap();
    let universal = effective_channel(&params, &precoder_real(), snr).unwrap();
    let expected = [1.912164752182317, 1.9121647521823224, 2.1961587113893786, 2.1961587113893795];
    for (a, b) in chain_rule_terms(&universal.h, 20.0).iter().zip(expected) {
        assert_relative_eq!(*a, b, max_relative = 1e-12);
    }
    let swapped = precoder_real().swap_columns(1, 2).unwrap();
    let eff = effective_channel(&params, &swapped, snr).unwrap();
    let expected = [1.912164752182317, 2.0929516766573473, 2.0153717869143537, 2.1961587113893795];
    for (a, b) in chain_rule_terms(&eff.h, 20.0).iter().zip(expected) {
        assert_relative_eq!(*a, b, max_relative = 1e-12);
    }
}

#[test]
fn unprecoded_zf_matches_complex_arithmetic() {
    // snr / Re[(HᴴH)⁻¹]_kk evaluated on the complex-valued channel
    let expected = [25.362682240876534, 8.58149469341791];
    let snr = SnrSpec::new(20.0).unwrap();
    for params in [
        ChannelParams::real(0.599, 0.3).unwrap(),
        ChannelParams::complex(0.599, 0.3, 1.1).unwrap(),
    ] {
        let model = params.model();
        let eff = effective_channel(&params, &Precoder::identity(model), snr).unwrap();
        let stats = stream_statistics(&eff, &zf_equalizer(&eff).unwrap()).unwrap();
        for (k, s) in stats.snr_per_stream.iter().enumerate() {
            assert_relative_eq!(*s, expected[k % 2], max_relative = 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn capacity_ordering(alpha in 0.0..0.99f64, snr_db in -20.0..40.0f64) {
        let s = 10f64.powf(snr_db / 10.0);
        let awgn = c_awgn(s).unwrap();
        let compound = c_compound(alpha, s).unwrap();
        let parallel = c_parallel(alpha, s).unwrap();
        let nonjoint = c_nonjoint(alpha, s).unwrap();
        prop_assert!(nonjoint <= parallel + 1e-12);
        prop_assert!(parallel <= compound + 1e-12);
        prop_assert!(compound <= awgn + 1e-12);
        prop_assert!(c_parallel_approx(alpha, s).unwrap() <= parallel + 1e-12);
    }

    #[test]
    fn sic_penalty_is_half_the_parallel_one(alpha in 0.0..0.99f64) {
        let p = penalties_db(alpha).unwrap();
        prop_assert!((2.0 * p.sic - p.parallel).abs() < 1e-12);
        prop_assert!(p.sic <= p.parallel && p.parallel <= p.nonjoint + 1e-12);
    }

    #[test]
    fn high_snr_slope_matches_awgn(alpha in 0.0..0.95f64) {
        // both curves gain half a bit per 3.01 dB at high SNR
        let s = 1e6;
        let d = c_compound(alpha, 2.0 * s).unwrap() - c_compound(alpha, s).unwrap();
        prop_assert!((d - 0.5).abs() < 1e-5);
    }
}
