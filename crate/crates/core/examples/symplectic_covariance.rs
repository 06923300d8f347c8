//! Similarity transformations of ladder operators act on Wigner functions by a
//! linear change of phase-space variables: `W(α) ↦ W(α V)`.

use dressed_modes::dressed_thermal::thermal_wigner;
use dressed_modes::{PhaseSpacePoint, SymplecticTransform, C64};

fn main() -> dressed_modes::Result<()> {
    let v = SymplecticTransform::two_mode_bogolubov(0.7)?;
    println!(
        "two-mode dressing, V K Vᵀ - K residual = {:.2e}",
        v.residual()
    );

    let thermal = thermal_wigner(1.3, 2)?;
    let dressed = v.apply(&thermal)?;
    let p = PhaseSpacePoint::physical(&[C64::new(0.4, -0.2), C64::new(-0.1, 0.6)])?;
    let lhs = dressed.eval_point(&p)?;
    let rhs = thermal.eval_point(&p.transformed(v.matrix())?)?;
    println!("W'(α) = {lhs:.12}, W(α V) = {rhs:.12}");
    println!(
        "normalisation before {:.12}, after {:.12}",
        thermal.integrate()?,
        dressed.integrate()?
    );

    // a non-unitary transform: α V leaves the physical surface α* = conj(α)
    let one = C64::new(1.0, 0.0);
    let w = SymplecticTransform::from_coefficients(one, -one, 0.5 * one, 0.5 * one)?;
    let q = PhaseSpacePoint::physical(&[C64::new(0.3, 0.2)])?.transformed(w.matrix())?;
    println!(
        "non-unitary (1, -1, 1/2, 1/2): residual {:.1e}, image physical: {}",
        w.residual(),
        q.is_physical(1e-9)
    );
    let inverse_roundtrip = w.compose(&w.inverse())?;
    println!("V V⁻¹ = {}", inverse_roundtrip.matrix());
    Ok(())
}
