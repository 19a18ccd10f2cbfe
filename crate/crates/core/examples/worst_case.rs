//! Brute-force max-min power split against the worst PDL.

use pdlsic::capacity::{worst_case_search, WorstCaseGrid};

fn main() -> pdlsic::Result<()> {
    let r = worst_case_search(0.599, 20.0, WorstCaseGrid::default())?;
    for g in r.gamma_star.iter().step_by(25) {
        println!("beta {:.3}  worst gamma {:+.3}  value {:.6}", g.beta, g.gamma, g.value);
    }
    println!(
        "beta* = {}, max-min {:.9} vs closed form {:.9}, worst case always extremal: {}",
        r.beta_star, r.max_min_value, r.closed_form, r.extremal
    );
    Ok(())
}
