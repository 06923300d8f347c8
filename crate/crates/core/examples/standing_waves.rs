//! Two traveling modes `a, b` dressed together become two independently
//! dressed standing waves `(a ± b)/√2`, dressed with `+θ` and `−θ`.

use dressed_modes::statistics::{t_closed, t_single};
use dressed_modes::{DressedModelParams, SymplecticTransform, C64};
use nalgebra::DMatrix;

fn main() -> dressed_modes::Result<()> {
    let theta = 0.45;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let o = DMatrix::from_row_slice(2, 2, &[s, s, s, -s]);
    let splitter = SymplecticTransform::new(
        o.kronecker(&DMatrix::<f64>::identity(2, 2))
            .map(|x| C64::new(x, 0.0)),
    )?;

    let pair = SymplecticTransform::two_mode_bogolubov(theta)?;
    let separated = splitter.inverse().compose(&pair)?.compose(&splitter)?;
    let expected = SymplecticTransform::single_mode_bogolubov(theta)?
        .direct_sum(&SymplecticTransform::single_mode_bogolubov(-theta)?);
    println!(
        "|S⁻¹ V S - (V_θ ⊕ V_−θ)| = {:.2e}",
        (separated.matrix() - expected.matrix()).norm()
    );

    // with equal counting angles the pair trace is the square of one standing wave's
    let params = DressedModelParams::new(1.0, theta)?;
    for u in [0.3, 1.5, 2.9] {
        let pair = t_closed(u, u, &params);
        let single = t_single(u, &params)?;
        println!(
            "u = {u}: T(u, u) = {pair:.12}, T1(u)^2 = {:.12}",
            single * single
        );
    }
    Ok(())
}
