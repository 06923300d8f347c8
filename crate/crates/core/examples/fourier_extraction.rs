//! Probabilities as Fourier coefficients of a characteristic function sampled
//! on the unit circle.

use dressed_modes::statistics::{fourier_extract, fourier_extract_2d, joint_table, t_closed};
use dressed_modes::{DressedModelParams, C64};

fn main() -> dressed_modes::Result<()> {
    // Poisson law with mean 2 from its characteristic function
    let lambda: f64 = 2.0;
    let poisson = fourier_extract(|u| (lambda * (C64::from_polar(1.0, u) - 1.0)).exp(), 10)?;
    println!(
        "Poisson(2): {:?}",
        poisson
            .probs()
            .iter()
            .map(|p| format!("{p:.6}"))
            .collect::<Vec<_>>()
    );

    let params = DressedModelParams::new(0.7, 0.3)?;
    let by_fft = fourier_extract_2d(|u, v| t_closed(u, v, &params), 6)?;
    let by_recurrence = joint_table(6, &params)?;
    let diff = by_fft
        .probs()
        .iter()
        .zip(by_recurrence.probs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("joint table by 2-D FFT vs recurrence, max |diff| = {diff:.2e}");
    println!(
        "imaginary residue of the FFT: {:.2e}",
        by_fft.imaginary_residue()
    );
    Ok(())
}
