//! Occupation-number laws of a dressed thermal pair: single mode, total count
//! and the joint table.

use dressed_modes::statistics::{joint_table, single_table, total_table};
use dressed_modes::DressedModelParams;

fn main() -> dressed_modes::Result<()> {
    let params = DressedModelParams::new(1.0, 0.5)?;

    let single = single_table(8, &params)?;
    let total = total_table(8, &params)?;
    println!("{:>3} {:>12} {:>12}", "n", "P(n)", "P(N = n)");
    for n in 0..=8 {
        println!(
            "{n:>3} {:>12.8} {:>12.8}",
            single.probs()[n],
            total.probs()[n]
        );
    }
    println!(
        "tail bounds: single {:.2e}, total {:.2e} ({:?})",
        single.tail_bound(),
        total.tail_bound(),
        total.method()
    );

    let joint = joint_table(4, &params)?;
    println!("\njoint P(m, n), method {:?}", joint.method());
    for m in 0..=4 {
        let row: Vec<String> = (0..=4)
            .map(|n| format!("{:.6}", joint.joint(m, n)))
            .collect();
        println!("  m = {m}: {}", row.join("  "));
    }

    // CSV for plotting tools
    let mut out = Vec::new();
    joint.write_csv(&mut out)?;
    println!(
        "\n{} CSV bytes, header: {}",
        out.len(),
        String::from_utf8_lossy(&out).lines().next().unwrap_or("")
    );
    Ok(())
}
