//! Gaussian Wigner functions `c·exp(−α Q αᵀ)`: products, integrals and the
//! trace of an operator product as a phase-space integral.

use dressed_modes::dressed_thermal::{generating_wigner_single, thermal_wigner};
use dressed_modes::phase_space::trace_product;
use dressed_modes::{GaussianWigner, PhaseSpacePoint, C64};
use nalgebra::DMatrix;

fn main() -> dressed_modes::Result<()> {
    let rho = thermal_wigner(0.9, 1)?;
    println!(
        "thermal state: c = {:.6}, ∫W d²α/π = {:.12}",
        rho.prefactor(),
        rho.integrate()?
    );
    println!("W(0) = {:.6}", rho.eval_point(&PhaseSpacePoint::origin(1))?);

    // tr{e^{iu a†a} ρ} for a thermal state is (1 − x)/(1 − x e^{iu}), x = e^{−ε}
    let u = 1.7;
    let t = trace_product(&generating_wigner_single(u)?, &rho)?;
    let x = (-0.9f64).exp();
    let exact = (1.0 - x) / (1.0 - x * C64::from_polar(1.0, u));
    println!("tr(G rho) = {t:.12}, exact {exact:.12}");

    // a strongly oscillating integrand keeps the correct square-root branch
    let mut q = DMatrix::<C64>::zeros(2, 2);
    q[(0, 1)] = C64::new(0.1, -40.0);
    q[(1, 0)] = q[(0, 1)];
    let w = GaussianWigner::new(C64::new(1.0, 0.0), q)?;
    println!("∫ exp(-(0.1 - 40i)·2|α|²) d²α/π = {:.12}", w.integrate()?);
    println!(
        "exact 1/(2(0.1 - 40i)) = {:.12}",
        1.0 / (2.0 * C64::new(0.1, -40.0))
    );
    Ok(())
}
