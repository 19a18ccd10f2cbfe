//! Capacity curves for a 6 dB PDL class, written as CSV to stdout.

use pdlsic::cli::{curve_rows, write_curves};

fn main() -> pdlsic::Result<()> {
    let rows = curve_rows(0.599, 0.0, 30.0, 2.5)?;
    write_curves(&rows, std::io::stdout())
}
