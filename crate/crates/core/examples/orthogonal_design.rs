//! The precoded channel keeps orthonormal column halves for any PDL and
//! rotation; only the coupling block `S` changes.

use pdlsic::channel::{ChannelParams, SnrSpec};
use pdlsic::precode::{effective_channel, precoder_complex, precoder_real, verify_orthogonal_design};

fn main() -> pdlsic::Result<()> {
    let snr = SnrSpec::from_db(15.0)?;
    let real = effective_channel(&ChannelParams::real(0.5, 0.8)?, &precoder_real(), snr)?;
    println!("HᵀH (real model):{:.4}", real.gram());

    let cplx = effective_channel(&ChannelParams::complex(0.5, 0.8, 2.1)?, &precoder_complex(), snr)?;
    let report = verify_orthogonal_design(&cplx);
    println!("S (complex model):{:.4}", report.s);
    println!(
        "defects: H1 {:.1e}, H2 {:.1e}, SᵀS − γ²I {:.1e}; passed = {}",
        report.h1_defect, report.h2_defect, report.s_gain_defect, report.passed
    );
    Ok(())
}
