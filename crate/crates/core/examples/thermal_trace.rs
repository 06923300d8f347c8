//! Generating function `T(u, v; ε) = tr{e^{iu a†a + iv b†b} ρ}` of a dressed
//! thermal pair, by the closed form and by the phase-space integral.
//!
//! ```text
//! cargo run --example thermal_trace
//! ```

use dressed_modes::{dressed_thermal, statistics, DressedModelParams};

fn main() -> dressed_modes::Result<()> {
    let params = DressedModelParams::new(0.8, 0.6)?;
    let y = statistics::y_parameters(&params)?;
    println!(
        "eps = {}, theta = {}: Y+ = {:.6}, Y- = {:.6}, Y = {:.6}",
        params.epsilon(),
        params.theta(),
        y.y_plus,
        y.y_minus,
        y.y_mean
    );
    println!(
        "{:>6} {:>6} {:>34} {:>10}",
        "u", "v", "T (closed form)", "|diff|"
    );
    for (u, v) in [(0.0, 0.0), (1.0, -0.7), (2.5, 2.5), (-3.0, 1.2)] {
        let closed = statistics::t_closed(u, v, &params);
        let integral = dressed_thermal::trace_via_integral(u, v, &params)?;
        println!(
            "{u:>6.2} {v:>6.2} {:>16.12} {:+16.12}i {:>10.2e}",
            closed.re,
            closed.im,
            (closed - integral).norm()
        );
    }
    Ok(())
}
