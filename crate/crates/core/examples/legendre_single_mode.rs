//! Counting statistics of a single self-dressed mode, `A = a coshθ − a† sinhθ`,
//! from the Legendre series of its generating function.

use dressed_modes::statistics::{dressed_single_table, fourier_extract, t_single};
use dressed_modes::DressedModelParams;

fn main() -> dressed_modes::Result<()> {
    let params = DressedModelParams::new(0.5, 0.8)?;
    let legendre = dressed_single_table(30, &params)?;
    let fourier = fourier_extract(|u| t_single(u, &params).unwrap(), 30)?;
    println!("{:>3} {:>16} {:>16}", "n", "Legendre", "Fourier");
    for n in 0..=12 {
        println!(
            "{n:>3} {:>16.12} {:>16.12}",
            legendre.probs()[n],
            fourier.probs()[n]
        );
    }
    let diff = legendre
        .probs()
        .iter()
        .zip(fourier.probs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("max |Legendre - Fourier| for n <= 30: {diff:.2e}");
    println!(
        "sum to 30: {:.12}, tail bound {:.2e}",
        legendre.total(),
        legendre.tail_bound()
    );
    Ok(())
}
