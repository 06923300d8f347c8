//! Run the self-verification suite from code and print each report.

use dressed_modes::verify::{self, Level, VerifyOptions};

fn main() {
    let reports = verify::run(Level::Fast, &VerifyOptions::default());
    for r in &reports {
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    println!("{} checks, {failed} failed", reports.len());
}
