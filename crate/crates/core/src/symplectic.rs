//! Linear similarity transformations of ladder operators.
//!
//! A transform is a `2n × 2n` matrix `V` acting on the right of the ladder
//! row `ā = (a₁†, a₁, …, aₙ†, aₙ)`, so that `V⁻¹ ā V = ā · V`. Commutation
//! relations are preserved iff `V K Vᵀ = K`. Wigner functions transform
//! covariantly: `F_W(α) ↦ F_W(α · V)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::branch::continuous_sqrt;
use crate::error::{Error, Result};
use crate::phase_space::GaussianWigner;
use crate::C64;

/// Relative tolerance of the `V K Vᵀ = K` check, scaled by `‖V‖²`.
pub const SYMPLECTIC_TOLERANCE: f64 = 1e-12;
/// Absolute tolerance on `μσ − ντ = 1` for user-supplied coefficients.
pub const COEFFICIENT_TOLERANCE: f64 = 1e-10;
/// Largest Bogolubov angle accepted.
pub const MAX_THETA: f64 = 20.0;

/// The block matrix `K` with per-mode blocks `[[0, −1], [1, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticForm {
    n_modes: usize,
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Self {
        Self { n_modes }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        let mut k = DMatrix::zeros(2 * self.n_modes, 2 * self.n_modes);
        for m in 0..self.n_modes {
            k[(2 * m, 2 * m + 1)] = C64::new(-1.0, 0.0);
            k[(2 * m + 1, 2 * m)] = C64::new(1.0, 0.0);
        }
        k
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    n_modes: usize,
    v: DMatrix<C64>,
}

impl SymplecticTransform {
    /// Validates `V K Vᵀ = K` (and, for one mode, `|μ|, |σ| ≥ |ν|, |τ|`).
    pub fn new(v: DMatrix<C64>) -> Result<Self> {
        if v.nrows() != v.ncols() {
            return Err(Error::DimensionMismatch {
                expected: v.nrows(),
                found: v.ncols(),
            });
        }
        if v.nrows() == 0 || !v.nrows().is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "transform must be 2n x 2n, got {} x {}",
                v.nrows(),
                v.ncols()
            )));
        }
        let n_modes = v.nrows() / 2;
        let out = Self { n_modes, v };
        let tolerance = SYMPLECTIC_TOLERANCE * out.v.norm_squared().max(1.0);
        let residual = out.residual();
        if !(residual <= tolerance) {
            return Err(Error::InvalidTransform {
                residual,
                tolerance,
                reason: "V K V^T != K",
            });
        }
        out.check_admissible()?;
        Ok(out)
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            n_modes,
            v: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Two-mode dressing `A = a coshθ − b† sinhθ`, `B = b coshθ − a† sinhθ`.
    pub fn two_mode_bogolubov(theta: f64) -> Result<Self> {
        let (c, s) = hyperbolic(theta)?;
        let (c, s, z) = (C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(0.0, 0.0));
        // Columns are the images (A†, A, B†, B) in terms of (a†, a, b†, b).
        #[rustfmt::skip]
        let v = DMatrix::from_row_slice(4, 4, &[
            c, z, z, s,
            z, c, s, z,
            z, s, c, z,
            s, z, z, c,
        ]);
        Self::new(v)
    }

    /// Single-mode dressing `A = a coshθ − a† sinhθ`.
    pub fn single_mode_bogolubov(theta: f64) -> Result<Self> {
        let (c, s) = hyperbolic(theta)?;
        Self::from_coefficients(
            C64::new(c, 0.0),
            C64::new(-s, 0.0),
            C64::new(c, 0.0),
            C64::new(-s, 0.0),
        )
    }

    /// Single-mode transform `a† ↦ μa† + νa`, `a ↦ σa + τa†`.
    pub fn from_coefficients(mu: C64, nu: C64, sigma: C64, tau: C64) -> Result<Self> {
        let residual = (mu * sigma - nu * tau - 1.0).norm();
        if !(residual <= COEFFICIENT_TOLERANCE) {
            return Err(Error::InvalidTransform {
                residual,
                tolerance: COEFFICIENT_TOLERANCE,
                reason: "mu*sigma - nu*tau != 1",
            });
        }
        let out = Self {
            n_modes: 1,
            v: DMatrix::from_row_slice(2, 2, &[mu, tau, nu, sigma]),
        };
        out.check_admissible()?;
        Ok(out)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.v
    }

    /// `(μ, ν, σ, τ)` of a single-mode transform.
    pub fn coefficients(&self) -> Option<(C64, C64, C64, C64)> {
        (self.n_modes == 1).then(|| {
            (
                self.v[(0, 0)],
                self.v[(1, 0)],
                self.v[(1, 1)],
                self.v[(0, 1)],
            )
        })
    }

    /// Frobenius norm of `V K Vᵀ − K`.
    pub fn residual(&self) -> f64 {
        let k = SymplecticForm::new(self.n_modes).matrix();
        (&self.v * &k * self.v.transpose() - k).norm()
    }

    /// The transform applying `self` first and then `next`: `next · self`.
    pub fn compose(&self, next: &SymplecticTransform) -> Result<Self> {
        if self.n_modes != next.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                found: next.n_modes,
            });
        }
        Self::new(&next.v * &self.v)
    }

    /// `V⁻¹ = −K Vᵀ K`.
    pub fn inverse(&self) -> Self {
        let k = SymplecticForm::new(self.n_modes).matrix();
        Self {
            n_modes: self.n_modes,
            v: -(&k * self.v.transpose() * &k),
        }
    }

    /// Block-diagonal combination acting on the modes of `self` then `other`.
    pub fn direct_sum(&self, other: &SymplecticTransform) -> Self {
        let (d1, d2) = (self.v.nrows(), other.v.nrows());
        let mut v = DMatrix::zeros(d1 + d2, d1 + d2);
        v.view_mut((0, 0), (d1, d1)).copy_from(&self.v);
        v.view_mut((d1, d1), (d2, d2)).copy_from(&other.v);
        Self {
            n_modes: self.n_modes + other.n_modes,
            v,
        }
    }

    /// `W(α) ↦ W(α · V)`, i.e. `Q ↦ V Q Vᵀ` with the prefactor unchanged.
    pub fn apply(&self, w: &GaussianWigner) -> Result<GaussianWigner> {
        apply_transform(w, self)
    }

    fn check_admissible(&self) -> Result<()> {
        if let Some((mu, nu, sigma, tau)) = self.coefficients() {
            // eigenbras of μa† + νa need |μ| ≥ |ν|, eigenkets of σa + τa† need |σ| ≥ |τ|
            let gap = (nu.norm() - mu.norm()).max(tau.norm() - sigma.norm());
            let slack = 1e-12 * mu.norm().max(sigma.norm()).max(1.0);
            if gap > slack {
                return Err(Error::InvalidTransform {
                    residual: gap,
                    tolerance: slack,
                    reason: "|mu| >= |nu| and |sigma| >= |tau| violated",
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> TransformJson {
        TransformJson {
            n_modes: self.n_modes,
            v: self
                .v
                .row_iter()
                .flat_map(|row| row.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
                .collect(),
        }
    }

    pub fn from_json(json: &TransformJson) -> Result<Self> {
        let dim = 2 * json.n_modes;
        if json.v.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: json.v.len(),
            });
        }
        Self::new(DMatrix::from_row_iterator(
            dim,
            dim,
            json.v.iter().map(|[re, im]| C64::new(*re, *im)),
        ))
    }
}

/// Serialized transform: `V` row-major with `[re, im]` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformJson {
    pub n_modes: usize,
    #[serde(rename = "V")]
    pub v: Vec<[f64; 2]>,
}

pub fn apply_transform(w: &GaussianWigner, v: &SymplecticTransform) -> Result<GaussianWigner> {
    if w.n_modes() != v.n_modes {
        return Err(Error::DimensionMismatch {
            expected: w.n_modes(),
            found: v.n_modes,
        });
    }
    w.with_q(&v.v * w.q() * v.v.transpose())
}

/// Wigner function of the Gaussian operator `exp(ā M āᵀ)`.
///
/// With `L = M K`, the operator acts on the ladder row as `ā ↦ ā exp(2L)` and
/// its Weyl symbol is `det(cosh L)^(−1/2) · exp(−α tanh(L) K αᵀ)`. The root
/// is continued from `M = 0`.
pub fn exponential_wigner(m: &DMatrix<C64>) -> Result<GaussianWigner> {
    if m.nrows() != m.ncols() || m.nrows() == 0 || !m.nrows().is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "quadratic form must be 2n x 2n, got {} x {}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n_modes = m.nrows() / 2;
    let k = SymplecticForm::new(n_modes).matrix();
    let m = (m + m.transpose()) * C64::new(0.5, 0.0);
    let l = &m * &k;
    let dim = l.nrows();
    let id = DMatrix::<C64>::identity(dim, dim);

    let e2 = (&l * C64::new(2.0, 0.0)).exp();
    let denom = (&e2 + &id).try_inverse().ok_or_else(|| {
        Error::Precision("tanh of the generator is singular (exp(2L) + 1 not invertible)".into())
    })?;
    let tanh = (&e2 - &id) * denom;
    let q = tanh * &k;

    let root = continuous_sqrt(|s| {
        let ls = &l * C64::new(s, 0.0);
        ((ls.clone().exp() + (-ls).exp()) * C64::new(0.5, 0.0)).determinant()
    })?;
    GaussianWigner::new(1.0 / root, q)
}

fn hyperbolic(theta: f64) -> Result<(f64, f64)> {
    if !theta.is_finite() || theta.abs() > MAX_THETA {
        return Err(Error::Domain(format!(
            "Bogolubov angle {theta} outside the overflow guard |theta| <= {MAX_THETA}"
        )));
    }
    Ok((theta.cosh(), theta.sinh()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::PhaseSpacePoint;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn k_properties() {
        let k = SymplecticForm::new(3).matrix();
        assert_eq!(k.transpose(), -k.clone());
        assert_eq!(&k * &k, -DMatrix::<C64>::identity(6, 6));
    }

    #[test]
    fn zero_angle_is_identity() {
        assert_eq!(
            SymplecticTransform::two_mode_bogolubov(0.0).unwrap(),
            SymplecticTransform::identity(2)
        );
        assert_eq!(
            SymplecticTransform::single_mode_bogolubov(0.0).unwrap(),
            SymplecticTransform::identity(1)
        );
    }

    #[test]
    fn two_mode_symplectic_at_one() {
        let v = SymplecticTransform::two_mode_bogolubov(1.0).unwrap();
        assert!(v.residual() < 1e-13);
    }

    #[test]
    fn two_mode_angles_add() {
        let (a, b) = (0.37, -1.21);
        let v = SymplecticTransform::two_mode_bogolubov(a)
            .unwrap()
            .compose(&SymplecticTransform::two_mode_bogolubov(b).unwrap())
            .unwrap();
        let w = SymplecticTransform::two_mode_bogolubov(a + b).unwrap();
        assert!(max_diff(v.matrix(), w.matrix()) < 1e-12);
    }

    #[test]
    fn single_mode_coefficients() {
        let v = SymplecticTransform::single_mode_bogolubov(0.5).unwrap();
        let (mu, nu, sigma, tau) = v.coefficients().unwrap();
        assert_eq!(mu, c(0.5f64.cosh()));
        assert_eq!(sigma, c(0.5f64.cosh()));
        assert_eq!(nu, c(-0.5f64.sinh()));
        assert_eq!(tau, c(-0.5f64.sinh()));
        let inv = v
            .compose(&SymplecticTransform::single_mode_bogolubov(-0.5).unwrap())
            .unwrap();
        assert!(max_diff(inv.matrix(), &DMatrix::identity(2, 2)) < 1e-12);
    }

    #[test]
    fn coefficient_validation() {
        assert_eq!(
            SymplecticTransform::from_coefficients(c(1.0), c(0.0), c(1.0), c(0.0)).unwrap(),
            SymplecticTransform::identity(1)
        );
        let nonunitary =
            SymplecticTransform::from_coefficients(c(1.0), c(-1.0), c(0.5), c(0.5)).unwrap();
        assert!(nonunitary.residual() < 1e-15);
        match SymplecticTransform::from_coefficients(c(1.0), c(0.0), c(2.0), c(0.0)) {
            Err(Error::InvalidTransform { residual, .. }) => {
                assert!((residual - 1.0).abs() < 1e-15)
            }
            other => panic!("expected invalid transform, got {other:?}"),
        }
        // satisfies μσ−ντ = 1 but not admissibility
        assert!(SymplecticTransform::from_coefficients(c(0.5), c(1.0), c(1.0), c(-0.5)).is_err());
    }

    #[test]
    fn overflow_guard() {
        assert!(SymplecticTransform::two_mode_bogolubov(20.5).is_err());
        assert!(SymplecticTransform::single_mode_bogolubov(f64::NAN).is_err());
        assert!(SymplecticTransform::two_mode_bogolubov(20.0).is_ok());
    }

    #[test]
    fn inverse_and_direct_sum() {
        let v = SymplecticTransform::from_coefficients(c(1.0), c(-1.0), c(0.5), c(0.5)).unwrap();
        let prod = &v.inverse().v * &v.v;
        assert!(max_diff(&prod, &DMatrix::identity(2, 2)) < 1e-15);
        let s = v.direct_sum(&SymplecticTransform::single_mode_bogolubov(0.3).unwrap());
        assert_eq!(s.n_modes(), 2);
        assert!(s.residual() < 1e-14);
    }

    #[test]
    fn thermal_exponential_symbol() {
        // exp(−λ(a†a + ½)) has symbol sech(λ/2) exp(−2 tanh(λ/2) α*α)
        let lam = 0.9f64;
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0), c(-lam / 2.0), c(-lam / 2.0), c(0.0)]);
        let w = exponential_wigner(&m).unwrap();
        assert!((w.prefactor() - c(1.0 / (lam / 2.0).cosh())).norm() < 1e-13);
        assert!((w.q()[(0, 1)] - c((lam / 2.0).tanh())).norm() < 1e-13);
        assert!(w.q()[(0, 0)].norm() < 1e-13);
    }

    #[test]
    fn exponential_symbol_is_covariant() {
        let lam = 0.6;
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0), c(-lam / 2.0), c(-lam / 2.0), c(0.0)]);
        let v = SymplecticTransform::single_mode_bogolubov(0.45).unwrap();
        let direct = exponential_wigner(&(v.matrix() * &m * v.matrix().transpose())).unwrap();
        let moved = v.apply(&exponential_wigner(&m).unwrap()).unwrap();
        assert!((direct.prefactor() - moved.prefactor()).norm() < 1e-12);
        assert!(max_diff(direct.q(), moved.q()) < 1e-12);
    }

    #[test]
    fn real_transform_keeps_points_physical() {
        let v = SymplecticTransform::two_mode_bogolubov(0.8).unwrap();
        let p = PhaseSpacePoint::physical(&[C64::new(0.4, -0.3), C64::new(-1.1, 0.7)]).unwrap();
        assert!(p.transformed(v.matrix()).unwrap().is_physical(1e-14));
    }

    #[test]
    fn json_round_trip() {
        let v = SymplecticTransform::two_mode_bogolubov(0.3).unwrap();
        let text = serde_json::to_string(&v.to_json()).unwrap();
        let back: TransformJson = serde_json::from_str(&text).unwrap();
        assert_eq!(SymplecticTransform::from_json(&back).unwrap(), v);
    }
}
