//! Two-code operating point from the bundled frame-error tables.

use pdlsic::channel::SnrSpec;
use pdlsic::linkbudget::{evaluate_operating_point, rate_split, FerTable};

fn main() -> pdlsic::Result<()> {
    let data = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let t1 = FerTable::from_path(data.join("fer_8ask_r34.csv"))?;
    let t2 = FerTable::from_path(data.join("fer_16ask_r56.csv"))?;
    let op = evaluate_operating_point(0.599, SnrSpec::from_db(13.01)?, &t1, &t2)?;
    println!("{}", serde_json::to_string_pretty(&op)?);

    let (r1, r2) = rate_split(0.599, 20.0, 1.0, 1.0)?;
    println!("codes 1 dB from their sub-channel capacities: {r1:.4} and {r2:.4} bits");
    Ok(())
}
