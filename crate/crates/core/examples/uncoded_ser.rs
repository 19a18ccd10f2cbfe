//! Uncoded 4-PAM through the SIC receiver: measured symbol-error rates
//! against the scalar AWGN formula, with genie and decision-directed
//! cancellation side by side.

use pdlsic::channel::{ChannelModel, SampleMode, SnrSpec};
use pdlsic::montecarlo::{uncoded_ser_experiment, Constellation, Scheme, SimConfig};

fn main() -> pdlsic::Result<()> {
    let cfg = SimConfig::new(
        ChannelModel::ComplexEquivalent,
        0.599,
        SnrSpec::new(20.0)?,
        SampleMode::WorstCaseEdge,
        Scheme::LmmseSic,
        200_000,
        1,
    )
    .with_constellation(Constellation::Pam(4));
    let ser = uncoded_ser_experiment(&cfg)?.ser.expect("PAM run");
    for s in &ser.streams {
        println!(
            "stream {} group {}: SER {:.4e} [{:.3e}, {:.3e}]  theory {:.4e}",
            s.stream, s.group, s.ser, s.ci95[0], s.ci95[1], s.theory_ser
        );
    }
    for d in &ser.decision_directed {
        println!(
            "stream {}: decision-directed {:.4e} vs genie {:.4e}",
            d.stream, d.ser, d.genie_ser
        );
    }
    Ok(())
}
