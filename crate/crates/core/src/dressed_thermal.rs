//! Thermal states, the counting generating operator and dressed thermal
//! states as Gaussian Wigner functions, and the trace computed as a phase
//! space integral of their product.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::{trace_product, GaussianWigner};
use crate::symplectic::{SymplecticTransform, MAX_THETA};
use crate::C64;

/// Temperature parameter `ε > 0` and Bogolubov angle `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedModelParams {
    epsilon: f64,
    theta: f64,
}

impl DressedModelParams {
    pub fn new(epsilon: f64, theta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Domain(format!(
                "epsilon must be finite and > 0, got {epsilon}"
            )));
        }
        if !theta.is_finite() || theta.abs() > MAX_THETA {
            return Err(Error::Domain(format!(
                "theta must satisfy |theta| <= {MAX_THETA}, got {theta}"
            )));
        }
        Ok(Self { epsilon, theta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Number of modes in the model layer: the single-mode or the paired dressing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeCount {
    One,
    Two,
}

impl ModeCount {
    pub fn get(self) -> usize {
        match self {
            ModeCount::One => 1,
            ModeCount::Two => 2,
        }
    }

    pub fn from_usize(n: usize) -> Result<Self> {
        match n {
            1 => Ok(ModeCount::One),
            2 => Ok(ModeCount::Two),
            _ => Err(Error::Domain(format!("mode count must be 1 or 2, got {n}"))),
        }
    }
}

/// `(2 tanh(ε/2))ⁿ exp(−2 tanh(ε/2) Σ αₖ*αₖ)`.
pub fn thermal_wigner(epsilon: f64, n_modes: usize) -> Result<GaussianWigner> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be > 0, got {epsilon}")));
    }
    if n_modes == 0 {
        return Err(Error::Domain("n_modes must be positive".into()));
    }
    let t = (0.5 * epsilon).tanh();
    let mut q = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        q[(2 * k, 2 * k + 1)] = C64::new(t, 0.0);
        q[(2 * k + 1, 2 * k)] = C64::new(t, 0.0);
    }
    GaussianWigner::new(C64::new((2.0 * t).powi(n_modes as i32), 0.0), q)
}

fn check_angle(name: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x.abs() < PI) {
        return Err(Error::Domain(format!(
            "{name} = {x}: the Wigner function of the generating operator is singular at |{name}| >= pi"
        )));
    }
    Ok(())
}

/// Wigner function of `exp(iu a†a + iv b†b)`, by continuation `ε → −iu` of the
/// thermal form.
pub fn generating_wigner(u: f64, v: f64) -> Result<GaussianWigner> {
    check_angle("u", u)?;
    check_angle("v", v)?;
    let (hu, hv) = (0.5 * u, 0.5 * v);
    let prefactor = C64::from_polar(1.0, -(hu + hv)) / (hu.cos() * hv.cos());
    let mut q = DMatrix::zeros(4, 4);
    q[(0, 1)] = C64::new(0.0, -hu.tan());
    q[(1, 0)] = q[(0, 1)];
    q[(2, 3)] = C64::new(0.0, -hv.tan());
    q[(3, 2)] = q[(2, 3)];
    GaussianWigner::new(prefactor, q)
}

/// One-mode version of [`generating_wigner`]: `exp(iu a†a)`.
pub fn generating_wigner_single(u: f64) -> Result<GaussianWigner> {
    check_angle("u", u)?;
    let hu = 0.5 * u;
    let prefactor = C64::from_polar(1.0, -hu) / hu.cos();
    let mut q = DMatrix::zeros(2, 2);
    q[(0, 1)] = C64::new(0.0, -hu.tan());
    q[(1, 0)] = q[(0, 1)];
    GaussianWigner::new(prefactor, q)
}

/// The Bogolubov transform matching the mode count.
pub fn bogolubov(theta: f64, modes: ModeCount) -> Result<SymplecticTransform> {
    match modes {
        ModeCount::One => SymplecticTransform::single_mode_bogolubov(theta),
        ModeCount::Two => SymplecticTransform::two_mode_bogolubov(theta),
    }
}

/// Wigner function of the thermal state diagonal in the dressed number operators.
pub fn dressed_rho_wigner(params: &DressedModelParams, modes: ModeCount) -> Result<GaussianWigner> {
    let thermal = thermal_wigner(params.epsilon, modes.get())?;
    bogolubov(params.theta, modes)?.apply(&thermal)
}

/// `T(u, v; ε) = ∫ d²α/π d²β/π [G(u,v)]_W [ρ_ε]_W`.
pub fn trace_via_integral(u: f64, v: f64, params: &DressedModelParams) -> Result<C64> {
    trace_product(
        &generating_wigner(u, v)?,
        &dressed_rho_wigner(params, ModeCount::Two)?,
    )
}

/// `T(u; ε)` for the single-mode dressing.
pub fn trace_via_integral_single(u: f64, params: &DressedModelParams) -> Result<C64> {
    trace_product(
        &generating_wigner_single(u)?,
        &dressed_rho_wigner(params, ModeCount::One)?,
    )
}
