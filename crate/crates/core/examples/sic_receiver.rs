//! LMMSE first stage plus one cancellation step, checked against the
//! closed-form stream SNRs.

use nalgebra::DVector;
use pdlsic::channel::{ChannelParams, SnrSpec};
use pdlsic::equalize::{closed_form_stream_snr, sic_pipeline, FirstStage, SicReceiver, StreamScheme};
use pdlsic::precode::{effective_channel, precoder_complex};

fn main() -> pdlsic::Result<()> {
    let (gamma, snr) = (-0.4, SnrSpec::from_db(12.0)?);
    let eff = effective_channel(&ChannelParams::complex(gamma, 1.3, 0.2)?, &precoder_complex(), snr)?;
    let result = SicReceiver::new(&eff, FirstStage::Lmmse)?.analyze();
    println!("decoded stream SNRs: {:.4?}", result.decoded_snrs());
    println!(
        "closed forms:        LMMSE {:.4}, post-SIC {:.4}",
        closed_form_stream_snr(StreamScheme::Lmmse, gamma, snr)?,
        closed_form_stream_snr(StreamScheme::PostSic, gamma, snr)?
    );
    println!("rate {:.5} bits/real dim", result.achievable_rate_bits_per_real_dim);

    // one noiseless transmission through both stages
    let u = DVector::from_fn(8, |i, _| i as f64 - 3.5);
    let y = &eff.h * &u;
    let one = sic_pipeline(&eff, FirstStage::ZeroForcing, &u.rows(0, 4).into_owned(), &y)?;
    let out = one.outputs.expect("outputs");
    println!("first stage  {:.3}", out.first_stage.transpose());
    println!("second stage {:.3}", out.second_stage.transpose());
    Ok(())
}
