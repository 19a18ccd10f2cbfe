//! Minimum of the summed chain-rule terms against the sum of their minima,
//! for the universal precoder and two that break it.

use pdlsic::capacity::{verify_star_property, StarGrid};
use pdlsic::channel::ChannelModel;
use pdlsic::precode::{precoder_real, Precoder};

fn main() -> pdlsic::Result<()> {
    let grid = StarGrid {
        n_gamma: 41,
        n_theta: 64,
        n_phi: 1,
    };
    let candidates = [
        ("universal", precoder_real()),
        ("columns 2 and 3 swapped", precoder_real().swap_columns(1, 2)?),
        ("identity", Precoder::identity(ChannelModel::Real)),
    ];
    for (name, p) in candidates {
        let r = verify_star_property(&p, 0.599, 20.0, grid)?;
        println!(
            "{name:<24} min-sum {:.6}  sum-min {:.6}  gap {:.2e}  {}",
            r.lhs,
            r.rhs,
            r.gap,
            if r.passed { "holds" } else { "fails" }
        );
    }
    Ok(())
}
