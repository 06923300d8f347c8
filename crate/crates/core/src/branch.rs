//! Continuous branch selection for square roots along a path.
//!
//! Both the Gaussian integral `det(A)^(-1/2)` and the single-mode generating
//! function carry a square root whose sign must be fixed by continuity from
//! a point where it is real and positive. [`continuous_sqrt`] follows the
//! argument of a complex function along `t ∈ [0, 1]` in adaptive steps.

use crate::error::{Error, Result};
use crate::C64;

const MAX_ARG_STEP: f64 = 0.25;
/// Per-step bound on the change of `ln|f|`; with the argument bound this
/// rules out an unseen winding for analytic `f`.
const MAX_LOG_STEP: f64 = 0.25;
const MIN_STEP: f64 = 1e-12;

/// Tracks a continuous argument of `f(t)` from `t = 0` to `t = 1`.
///
/// The starting argument is the principal one at `t = 0`. Returns `f(1)` and
/// its continued argument.
pub fn continuous_arg<F>(f: F) -> Result<(C64, f64)>
where
    F: Fn(f64) -> C64,
{
    let mut z = f(0.0);
    check_sample(z, 0.0)?;
    let mut arg = z.arg();
    let mut t = 0.0;
    let mut h: f64 = 1.0 / 16.0;
    while t < 1.0 {
        h = h.min(1.0 - t);
        let mid = f(t + 0.5 * h);
        let end = f(t + h);
        check_sample(mid, t + 0.5 * h)?;
        check_sample(end, t + h)?;
        let d1 = (mid / z).arg();
        let d2 = (end / mid).arg();
        let whole = (end / z).arg();
        let log_step = (mid.norm() / z.norm())
            .ln()
            .abs()
            .max((end.norm() / mid.norm()).ln().abs());
        if (d1 + d2 - whole).abs() > 1e-9 || whole.abs() > MAX_ARG_STEP || log_step > MAX_LOG_STEP {
            h *= 0.5;
            if h < MIN_STEP {
                return Err(Error::Precision(format!(
                    "branch tracking stalled at t = {t:.6} (|f| = {:e})",
                    z.norm()
                )));
            }
            continue;
        }
        arg += d1 + d2;
        t += h;
        z = end;
        h = (2.0 * h).min(0.25);
    }
    Ok((z, arg))
}

/// Square root of `f(1)` on the branch continuous from the principal root at `f(0)`.
pub fn continuous_sqrt<F>(f: F) -> Result<C64>
where
    F: Fn(f64) -> C64,
{
    let (z, arg) = continuous_arg(f)?;
    Ok(C64::from_polar(z.norm().sqrt(), 0.5 * arg))
}

fn check_sample(z: C64, t: f64) -> Result<()> {
    if !z.is_finite() || z.norm() == 0.0 {
        return Err(Error::Precision(format!(
            "branch path hits zero or non-finite value at t = {t:.6}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn follows_winding_past_principal_cut() {
        // e^{3πi t}: principal arg at t=1 is π but the continued one is 3π.
        let (_, arg) = continuous_arg(|t| C64::from_polar(2.0, 3.0 * PI * t)).unwrap();
        assert!((arg - 3.0 * PI).abs() < 1e-12);
        let root = continuous_sqrt(|t| C64::from_polar(4.0, 3.0 * PI * t)).unwrap();
        assert!((root - C64::new(0.0, -2.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_on_path_is_reported() {
        let err = continuous_arg(|t| C64::new(1.0 - 2.0 * t, 0.0));
        assert!(matches!(err, Err(Error::Precision(_))));
    }
}
