//! SNR penalties of the three decoding strategies across PDL levels.

use pdlsic::capacity::penalties_db;
use pdlsic::channel::PdlClass;

fn main() -> pdlsic::Result<()> {
    println!("{:>8} {:>8} {:>10} {:>10} {:>10}", "PDL dB", "alpha", "nonjoint", "parallel", "SIC");
    for pdl_db in [1.0, 3.0, 6.0, 10.0] {
        let class = PdlClass::from_pdl_db(pdl_db)?;
        let p = penalties_db(class.alpha())?;
        println!(
            "{:>8.2} {:>8.4} {:>10.4} {:>10.4} {:>10.4}",
            pdl_db,
            class.alpha(),
            p.nonjoint,
            p.parallel,
            p.sic
        );
    }
    Ok(())
}
