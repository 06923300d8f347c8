//! Zero-mean complex Gaussian functions on `n`-mode phase space.
//!
//! Rows are interleaved as `(α₁*, α₁, …, αₙ*, αₙ)`. A [`GaussianWigner`] is the
//! function `W(α) = c · exp(−α Q αᵀ)` with complex symmetric `Q`. The
//! coordinates `α*` and `α` are treated as independent complex numbers so
//! that substitutions by arbitrary (also non-unitary) transformations stay
//! a pure matrix operation; integration goes through real coordinates
//! `α = x + iy`.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Relative threshold for the positive-definiteness test of `Re(A)`.
pub const POSITIVITY_THRESHOLD: f64 = 1e-12;

/// A point of `2n`-dimensional complexified phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpacePoint {
    coords: Vec<C64>,
}

impl PhaseSpacePoint {
    /// Builds a point from interleaved coordinates `(α₁*, α₁, …)`.
    pub fn new(coords: Vec<C64>) -> Result<Self> {
        if coords.is_empty() || !coords.len().is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "phase-space row needs a positive even length, got {}",
                coords.len()
            )));
        }
        Ok(Self { coords })
    }

    /// The physical point with `α*` entries equal to the conjugates of `alphas`.
    pub fn physical(alphas: &[C64]) -> Result<Self> {
        Self::new(alphas.iter().flat_map(|a| [a.conj(), *a]).collect())
    }

    pub fn origin(n_modes: usize) -> Self {
        Self {
            coords: vec![C64::new(0.0, 0.0); 2 * n_modes.max(1)],
        }
    }

    pub fn n_modes(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    /// The `α` entry of mode `k`.
    pub fn alpha(&self, k: usize) -> C64 {
        self.coords[2 * k + 1]
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.coords
            .chunks_exact(2)
            .all(|pair| (pair[0] - pair[1].conj()).norm() <= tol)
    }

    /// Row-vector product `α · V`.
    pub fn transformed(&self, v: &DMatrix<C64>) -> Result<Self> {
        if v.nrows() != self.coords.len() || v.ncols() != self.coords.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coords.len(),
                found: v.nrows(),
            });
        }
        let coords = (0..v.ncols())
            .map(|j| {
                self.coords
                    .iter()
                    .enumerate()
                    .map(|(i, a)| a * v[(i, j)])
                    .sum()
            })
            .collect();
        Ok(Self { coords })
    }
}

/// `W(α) = c · exp(−α Q αᵀ)` on `n`-mode phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWigner {
    n_modes: usize,
    prefactor: C64,
    q: DMatrix<C64>,
}

impl GaussianWigner {
    /// Constructs from a prefactor and a `2n × 2n` matrix, symmetrizing `Q`.
    pub fn new(prefactor: C64, q: DMatrix<C64>) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::DimensionMismatch {
                expected: q.nrows(),
                found: q.ncols(),
            });
        }
        if q.nrows() == 0 || !q.nrows().is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "Q must be 2n x 2n with n >= 1, got {} x {}",
                q.nrows(),
                q.ncols()
            )));
        }
        let q = (&q + q.transpose()) * C64::new(0.5, 0.0);
        Ok(Self {
            n_modes: q.nrows() / 2,
            prefactor,
            q,
        })
    }

    /// The Wigner function of the identity operator, `W ≡ 1`.
    pub fn identity(n_modes: usize) -> Self {
        let dim = 2 * n_modes.max(1);
        Self {
            n_modes: n_modes.max(1),
            prefactor: C64::new(1.0, 0.0),
            q: DMatrix::zeros(dim, dim),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn prefactor(&self) -> C64 {
        self.prefactor
    }

    pub fn q(&self) -> &DMatrix<C64> {
        &self.q
    }

    pub fn eval_point(&self, p: &PhaseSpacePoint) -> Result<C64> {
        self.check_modes(p.n_modes())?;
        let row = p.coords();
        let mut quad = C64::new(0.0, 0.0);
        for i in 0..row.len() {
            for j in 0..row.len() {
                quad += row[i] * self.q[(i, j)] * row[j];
            }
        }
        Ok(self.prefactor * (-quad).exp())
    }

    /// Pointwise product: prefactors multiply, exponents add.
    pub fn multiply(&self, other: &GaussianWigner) -> Result<GaussianWigner> {
        self.check_modes(other.n_modes)?;
        Ok(GaussianWigner {
            n_modes: self.n_modes,
            prefactor: self.prefactor * other.prefactor,
            q: &self.q + &other.q,
        })
    }

    /// Same function with `Q` replaced; keeps the prefactor.
    pub(crate) fn with_q(&self, q: DMatrix<C64>) -> Result<GaussianWigner> {
        GaussianWigner::new(self.prefactor, q)
    }

    /// The real-coordinate quadratic form `A` with `α Q αᵀ = r A rᵀ`,
    /// `r = (x₁, y₁, …, xₙ, yₙ)`.
    pub fn real_form(&self) -> DMatrix<C64> {
        let t = real_coordinate_map(self.n_modes);
        &t * &self.q * t.transpose()
    }

    /// Smallest eigenvalue of `Re(A)`.
    pub fn min_real_eigenvalue(&self) -> f64 {
        let re = self.real_form().map(|z| z.re);
        let re = (&re + re.transpose()) * 0.5;
        SymmetricEigen::new(re)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    fn positivity_threshold(&self) -> f64 {
        POSITIVITY_THRESHOLD * self.real_form().norm()
    }

    pub fn is_integrable(&self) -> bool {
        self.min_real_eigenvalue() > self.positivity_threshold()
    }

    /// `∫ d²ⁿα/πⁿ W(α) = c · det(A)^(−1/2)`.
    ///
    /// The square root follows the homotopy `(1−t)·Re(A) + t·A` from the
    /// positive root at `t = 0`; `Re(A)` positive definite keeps every matrix
    /// on that path nonsingular.
    pub fn integrate(&self) -> Result<C64> {
        let min_eig = self.min_real_eigenvalue();
        let threshold = self.positivity_threshold();
        if !(min_eig > threshold) {
            return Err(Error::DivergentIntegral {
                min_eigenvalue: min_eig,
                threshold,
            });
        }
        // On (1−t)Re(A) + tA the real part stays R = Re(A) > 0, so
        // det A(t) = det R · Π(1 + i t sₖ) with sₖ the eigenvalues of
        // R^{-1/2} Im(A) R^{-1/2}; every factor has positive real part and the
        // principal roots are the continued branch.
        let a = self.real_form();
        let r = a.map(|z| z.re);
        let r = (&r + r.transpose()) * 0.5;
        let s = a.map(|z| z.im);
        let s = (&s + s.transpose()) * 0.5;
        let chol = Cholesky::new(r).ok_or(Error::DivergentIntegral {
            min_eigenvalue: min_eig,
            threshold,
        })?;
        let l = chol.l();
        let l_inv_s = l
            .solve_lower_triangular(&s)
            .ok_or_else(|| Error::Precision("singular Cholesky factor".into()))?;
        let whitened = l
            .solve_lower_triangular(&l_inv_s.transpose())
            .ok_or_else(|| Error::Precision("singular Cholesky factor".into()))?;
        let whitened = (&whitened + whitened.transpose()) * 0.5;
        let mut root = C64::new(l.diagonal().product(), 0.0);
        for sk in SymmetricEigen::new(whitened).eigenvalues.iter() {
            root *= C64::new(1.0, *sk).sqrt();
        }
        Ok(self.prefactor / root)
    }

    fn check_modes(&self, n: usize) -> Result<()> {
        if n != self.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                found: n,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> WignerJson {
        WignerJson {
            n_modes: self.n_modes,
            prefactor: [self.prefactor.re, self.prefactor.im],
            q: self
                .q
                .row_iter()
                .flat_map(|row| row.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
                .collect(),
        }
    }

    pub fn from_json(json: &WignerJson) -> Result<Self> {
        let dim = 2 * json.n_modes;
        if json.q.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: json.q.len(),
            });
        }
        let q =
            DMatrix::from_row_iterator(dim, dim, json.q.iter().map(|[re, im]| C64::new(*re, *im)));
        Self::new(C64::new(json.prefactor[0], json.prefactor[1]), q)
    }
}

/// `tr{F₁ F₂} = ∫ d²ⁿα/πⁿ W₁ W₂`.
pub fn trace_product(w1: &GaussianWigner, w2: &GaussianWigner) -> Result<C64> {
    w1.multiply(w2)?.integrate()
}

/// Serialized form: `Q` is row-major, complex numbers are `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerJson {
    pub n_modes: usize,
    pub prefactor: [f64; 2],
    #[serde(rename = "Q")]
    pub q: Vec<[f64; 2]>,
}

/// Block-diagonal map with `(α*, α) = (x, y) · T`, `T = [[1, 1], [−i, i]]` per mode.
fn real_coordinate_map(n_modes: usize) -> DMatrix<C64> {
    let mut t = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        let (x, y) = (2 * k, 2 * k + 1);
        t[(x, x)] = C64::new(1.0, 0.0);
        t[(x, y)] = C64::new(1.0, 0.0);
        t[(y, x)] = C64::new(0.0, -1.0);
        t[(y, y)] = C64::new(0.0, 1.0);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn thermal_1(eps: f64) -> GaussianWigner {
        let t = (0.5 * eps).tanh();
        GaussianWigner::new(
            c(2.0 * t),
            DMatrix::from_row_slice(2, 2, &[c(0.0), c(t), c(t), c(0.0)]),
        )
        .unwrap()
    }

    #[test]
    fn constructor_symmetrizes() {
        let q = DMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(0.0), c(1.0)]);
        let w = GaussianWigner::new(c(1.0), q).unwrap();
        assert_eq!(w.q()[(0, 1)], c(1.0));
        assert_eq!(w.q()[(1, 0)], c(1.0));
    }

    #[test]
    fn odd_dimension_rejected() {
        let q = DMatrix::zeros(3, 3);
        assert!(GaussianWigner::new(c(1.0), q).is_err());
        assert!(PhaseSpacePoint::new(vec![c(0.0); 3]).is_err());
    }

    #[test]
    fn thermal_at_origin_and_offset() {
        let w = thermal_1(3f64.ln());
        let v = w.eval_point(&PhaseSpacePoint::origin(1)).unwrap();
        assert!((v - c(1.0)).norm() < 1e-15);

        let w = thermal_1(1.0);
        let p = PhaseSpacePoint::physical(&[c(0.5)]).unwrap();
        let t = 0.5f64.tanh();
        let expected = 2.0 * t * (-2.0 * 0.25 * t).exp();
        assert!((w.eval_point(&p).unwrap() - c(expected)).norm() < 1e-15);
    }

    #[test]
    fn identity_is_constant_one() {
        let w = GaussianWigner::identity(2);
        let p = PhaseSpacePoint::physical(&[C64::new(0.3, -1.2), C64::new(2.0, 0.1)]).unwrap();
        assert_eq!(w.eval_point(&p).unwrap(), c(1.0));
    }

    #[test]
    fn dimension_mismatch_reported() {
        let w = thermal_1(1.0);
        let p = PhaseSpacePoint::origin(2);
        assert!(matches!(
            w.eval_point(&p),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(w.multiply(&GaussianWigner::identity(2)).is_err());
    }

    #[test]
    fn gaussian_half_integral() {
        let w = GaussianWigner::new(
            c(1.0),
            DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
        )
        .unwrap();
        assert!((w.integrate().unwrap() - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn thermal_normalized_and_purity() {
        for eps in [0.05, 0.3, 1.0, 5.0, 20.0] {
            let w = thermal_1(eps);
            assert!(
                (w.integrate().unwrap() - c(1.0)).norm() < 1e-12,
                "eps={eps}"
            );
            // tr ρ² = (1-x)²/(1-x²) = tanh(ε/2)
            let purity = trace_product(&w, &w).unwrap();
            assert!((purity - c((0.5 * eps).tanh())).norm() < 1e-12);
        }
    }

    #[test]
    fn thermal_overlap_geometric_series() {
        let (e1, e2) = (0.7f64, 1.9f64);
        let (x, y) = ((-e1).exp(), (-e2).exp());
        let expected = (1.0 - x) * (1.0 - y) / (1.0 - x * y);
        let prod = thermal_1(e1).multiply(&thermal_1(e2)).unwrap();
        let t1 = (0.5 * e1).tanh();
        let t2 = (0.5 * e2).tanh();
        assert!((prod.prefactor() - c(4.0 * t1 * t2)).norm() < 1e-15);
        assert!((prod.q()[(0, 1)] - c(t1 + t2)).norm() < 1e-15);
        assert!((prod.integrate().unwrap() - c(expected)).norm() < 1e-13);
    }

    #[test]
    fn identity_not_integrable() {
        let w = GaussianWigner::identity(1);
        assert!(!w.is_integrable());
        assert!(matches!(
            w.integrate(),
            Err(Error::DivergentIntegral { .. })
        ));
    }

    #[test]
    fn oscillatory_branch_follows_continuation() {
        // ∫ d²α/π exp(−(s − i b)·2|α|²) = 1/(2(s − ib)); principal and continued
        // roots agree here, but for a 2-mode product with large phases the
        // continued root must match the product of single-mode roots.
        let (s, b) = (0.1, 40.0);
        let z = C64::new(s, -b);
        let q1 = DMatrix::from_row_slice(2, 2, &[c(0.0), z, z, c(0.0)]);
        let w1 = GaussianWigner::new(c(1.0), q1.clone()).unwrap();
        let single = w1.integrate().unwrap();
        assert!((single - 1.0 / (2.0 * z)).norm() < 1e-12);

        let mut q2 = DMatrix::zeros(4, 4);
        q2.view_mut((0, 0), (2, 2)).copy_from(&q1);
        q2.view_mut((2, 2), (2, 2)).copy_from(&q1);
        let w2 = GaussianWigner::new(c(1.0), q2).unwrap();
        assert!(
            (w2.integrate().unwrap() - single * single).norm() < 1e-12,
            "{} {}",
            w2.integrate().unwrap(),
            single * single
        );
    }

    #[test]
    fn json_round_trip() {
        let w = thermal_1(0.4).multiply(&thermal_1(1.2)).unwrap();
        let text = serde_json::to_string(&w.to_json()).unwrap();
        let back: WignerJson = serde_json::from_str(&text).unwrap();
        assert_eq!(GaussianWigner::from_json(&back).unwrap(), w);
        assert!(text.contains("\"Q\""));
    }
}
