//! Brute-force truncated number-basis oracle.
//!
//! Operators are dense matrices over `D` number states per mode, with mode 0
//! as the most significant index (`|m, n⟩ ↦ m·D + n`). Nothing here uses the
//! phase-space machinery except [`covariance_oracle`], which evaluates both
//! sides of the covariance rule for comparison.

use std::io::{Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dressed_thermal::{DressedModelParams, ModeCount};
use crate::error::{Error, Result};
use crate::phase_space::PhaseSpacePoint;
use crate::statistics::{CountDistribution, Method, Quantity};
use crate::symplectic::{exponential_wigner, SymplecticTransform};
use crate::C64;

pub const DEFAULT_DIM: usize = 60;
pub const MAX_DIM_PER_MODE: usize = 120;
/// Largest total dimension for which dense multi-mode matrices are formed.
pub const MAX_DENSE_DIM: usize = 4096;
/// Target truncation tolerance when escalating the dimension.
pub const TARGET_TRUNCATION_TOL: f64 = 1e-8;
/// Environment variable overriding [`DEFAULT_DIM`].
pub const DIM_ENV: &str = "DRESSED_MODES_ORACLE_DIM";

/// The default per-mode dimension, honouring `DRESSED_MODES_ORACLE_DIM`.
pub fn default_dimension() -> usize {
    std::env::var(DIM_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&d| (2..=MAX_DIM_PER_MODE).contains(&d))
        .unwrap_or(DEFAULT_DIM)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    n_modes: usize,
    dim_per_mode: usize,
    matrix: DMatrix<C64>,
    truncation_tol: f64,
}

impl FockOperator {
    pub fn new(
        n_modes: usize,
        dim_per_mode: usize,
        matrix: DMatrix<C64>,
        truncation_tol: f64,
    ) -> Result<Self> {
        let dim = total_dim(n_modes, dim_per_mode)?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        Ok(Self {
            n_modes,
            dim_per_mode,
            matrix,
            truncation_tol,
        })
    }

    pub fn identity(n_modes: usize, dim_per_mode: usize) -> Result<Self> {
        let dim = total_dim(n_modes, dim_per_mode)?;
        Self::new(n_modes, dim_per_mode, DMatrix::identity(dim, dim), 0.0)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim_per_mode(&self) -> usize {
        self.dim_per_mode
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn truncation_tol(&self) -> f64 {
        self.truncation_tol
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            ..self.clone()
        }
    }

    fn check_same_space(&self, other: &FockOperator) -> Result<()> {
        if self.n_modes != other.n_modes || self.dim_per_mode != other.dim_per_mode {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &FockOperator) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
            truncation_tol: self.truncation_tol.max(other.truncation_tol),
            ..self.clone()
        })
    }

    /// `Σ cᵢ Oᵢ` over operators on the same space.
    pub fn combination(terms: &[(C64, &FockOperator)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::Domain("empty operator combination".into()))?;
        let mut matrix = DMatrix::zeros(first.dim(), first.dim());
        for (c, op) in terms {
            first.check_same_space(op)?;
            matrix += &op.matrix * *c;
        }
        Ok(Self {
            matrix,
            truncation_tol: 0.0,
            ..(*first).clone()
        })
    }

    pub fn commutator(&self, other: &FockOperator) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(Self {
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
            ..self.clone()
        })
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `tr{self · other}` without forming the product.
    pub fn trace_product(&self, other: &FockOperator) -> Result<C64> {
        self.check_same_space(other)?;
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.matrix[(i, j)] * other.matrix[(j, i)];
            }
        }
        Ok(acc)
    }

    pub fn diagonal(&self) -> Vec<C64> {
        self.matrix.diagonal().iter().copied().collect()
    }

    /// Largest `|Fᵢⱼ − conj(Fⱼᵢ)|`.
    pub fn hermitian_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Sum of `|Fᵢᵢ|` over states with some occupation in the top tenth of the
    /// per-mode range.
    pub fn edge_weight(&self) -> f64 {
        let cut = edge_cut(self.dim_per_mode);
        (0..self.dim())
            .filter(|&i| {
                digits(i, self.n_modes, self.dim_per_mode)
                    .iter()
                    .any(|&d| d >= cut)
            })
            .map(|i| self.matrix[(i, i)].norm())
            .sum()
    }

    /// Dense binary layout: `n_modes`, `D` as little-endian u64, then the
    /// matrix row-major as little-endian `(re, im)` f64 pairs.
    pub fn write_dense_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.n_modes as u64).to_le_bytes())?;
        out.write_all(&(self.dim_per_mode as u64).to_le_bytes())?;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let z = self.matrix[(i, j)];
                out.write_all(&z.re.to_le_bytes())?;
                out.write_all(&z.im.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_dense_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut word = [0u8; 8];
        input.read_exact(&mut word)?;
        let n_modes = u64::from_le_bytes(word) as usize;
        input.read_exact(&mut word)?;
        let dim_per_mode = u64::from_le_bytes(word) as usize;
        let dim = total_dim(n_modes, dim_per_mode)?;
        let mut matrix = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                input.read_exact(&mut word)?;
                let re = f64::from_le_bytes(word);
                input.read_exact(&mut word)?;
                let im = f64::from_le_bytes(word);
                matrix[(i, j)] = C64::new(re, im);
            }
        }
        Self::new(n_modes, dim_per_mode, matrix, 0.0)
    }
}

fn total_dim(n_modes: usize, dim_per_mode: usize) -> Result<usize> {
    if n_modes == 0 || dim_per_mode < 2 {
        return Err(Error::Domain(format!(
            "need n_modes >= 1 and D >= 2, got n_modes = {n_modes}, D = {dim_per_mode}"
        )));
    }
    if dim_per_mode > MAX_DIM_PER_MODE {
        return Err(Error::InsufficientDimension(format!(
            "D = {dim_per_mode} exceeds the supported maximum {MAX_DIM_PER_MODE}"
        )));
    }
    let dim = (0..n_modes).try_fold(1usize, |acc, _| acc.checked_mul(dim_per_mode));
    match dim {
        Some(d) if n_modes == 1 || d <= MAX_DENSE_DIM => Ok(d),
        _ => Err(Error::InsufficientDimension(format!(
            "dense dimension {dim_per_mode}^{n_modes} exceeds {MAX_DENSE_DIM}"
        ))),
    }
}

fn edge_cut(dim_per_mode: usize) -> usize {
    dim_per_mode - dim_per_mode.div_ceil(10)
}

fn digits(mut index: usize, n_modes: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; n_modes];
    for k in (0..n_modes).rev() {
        out[k] = index % d;
        index /= d;
    }
    out
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Single-mode lowering matrix `a|n⟩ = √n |n−1⟩`.
fn lowering(d: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Embeds a single-mode matrix on `mode_index`.
fn embed(single: &DMatrix<C64>, mode_index: usize, n_modes: usize, d: usize) -> DMatrix<C64> {
    let mut out = DMatrix::identity(1, 1);
    for k in 0..n_modes {
        out = if k == mode_index {
            kron(&out, single)
        } else {
            kron(&out, &DMatrix::identity(d, d))
        };
    }
    out
}

/// Lowering operator of `mode_index`.
pub fn ladder(mode_index: usize, n_modes: usize, d: usize) -> Result<FockOperator> {
    if mode_index >= n_modes {
        return Err(Error::Domain(format!(
            "mode index {mode_index} out of range for {n_modes} modes"
        )));
    }
    total_dim(n_modes, d)?;
    FockOperator::new(n_modes, d, embed(&lowering(d), mode_index, n_modes, d), 0.0)
}

/// The ladder row `(a₁†, a₁, …, aₙ†, aₙ)`.
pub fn ladder_row(n_modes: usize, d: usize) -> Result<Vec<FockOperator>> {
    let mut row = Vec::with_capacity(2 * n_modes);
    for k in 0..n_modes {
        let a = ladder(k, n_modes, d)?;
        row.push(a.adjoint());
        row.push(a);
    }
    Ok(row)
}

/// Dressed lowering operators: `[A]` for one mode, `[A, B]` for two.
pub fn dressed_ladder(
    params: &DressedModelParams,
    modes: ModeCount,
    d: usize,
) -> Result<Vec<FockOperator>> {
    let (c, s) = (
        C64::new(params.theta().cosh(), 0.0),
        C64::new(-params.theta().sinh(), 0.0),
    );
    match modes {
        ModeCount::One => {
            let a = ladder(0, 1, d)?;
            Ok(vec![FockOperator::combination(&[
                (c, &a),
                (s, &a.adjoint()),
            ])?])
        }
        ModeCount::Two => {
            let a = ladder(0, 2, d)?;
            let b = ladder(1, 2, d)?;
            Ok(vec![
                FockOperator::combination(&[(c, &a), (s, &b.adjoint())])?,
                FockOperator::combination(&[(c, &b), (s, &a.adjoint())])?,
            ])
        }
    }
}

/// Hermitian eigendecomposition `H = U diag(λ) U†`.
fn hermitian_eig(h: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn apply_spectral(values: &[f64], vectors: &DMatrix<C64>, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
    let mut scaled = vectors.clone();
    for (j, &lam) in values.iter().enumerate() {
        let fv = f(lam);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= fv;
        }
    }
    scaled * vectors.adjoint()
}

/// The matrix of `−ε (A†A + B†B)` for the two-mode dressing restricted to
/// the block of fixed `m − n = k`, with states ordered by increasing `n`.
///
/// Entries are those of the product of truncated ladder matrices: the edge
/// terms `a a†` vanish on `m = D − 1`.
fn pair_block(
    k: isize,
    d: usize,
    params: &DressedModelParams,
) -> (Vec<(usize, usize)>, DMatrix<f64>) {
    let (c, s) = (params.theta().cosh(), params.theta().sinh());
    let n_lo = (-k).max(0) as usize;
    let n_hi = (d as isize - 1 - k.max(0)) as usize;
    let states: Vec<(usize, usize)> = (n_lo..=n_hi)
        .map(|n| (((n as isize) + k) as usize, n))
        .collect();
    let len = states.len();
    let edge = |j: usize| if j + 1 < d { (j + 1) as f64 } else { 0.0 };
    let mut h = DMatrix::zeros(len, len);
    for (i, &(m, n)) in states.iter().enumerate() {
        h[(i, i)] = c * c * (m + n) as f64 + s * s * (edge(m) + edge(n));
        if i + 1 < len {
            let off = -2.0 * c * s * (((m + 1) * (n + 1)) as f64).sqrt();
            h[(i, i + 1)] = off;
            h[(i + 1, i)] = off;
        }
    }
    (states, h)
}

/// Dressed thermal state from its conserved-difference blocks, emitting
/// `(row, col, value)` for every nonzero entry through `sink`.
fn pair_rho_blocks(
    params: &DressedModelParams,
    d: usize,
    mut sink: impl FnMut(&[(usize, usize)], &DMatrix<f64>),
) {
    let x = (-params.epsilon()).exp();
    let norm = (1.0 - x) * (1.0 - x);
    for k in -(d as isize - 1)..=(d as isize - 1) {
        let (states, h) = pair_block(k, d, params);
        let eig = SymmetricEigen::new(h);
        let mut scaled = eig.eigenvectors.clone();
        for (j, &lam) in eig.eigenvalues.iter().enumerate() {
            let w = norm * (-params.epsilon() * lam).exp();
            scaled.column_mut(j).scale_mut(w);
        }
        let rho = scaled * eig.eigenvectors.transpose();
        sink(&states, &rho);
    }
}

/// `(1 − e^{−ε})^{modes} exp(−ε Σ A†A)` in the truncated basis.
pub fn rho_fock(params: &DressedModelParams, modes: ModeCount, d: usize) -> Result<FockOperator> {
    let dim = total_dim(modes.get(), d)?;
    let x = (-params.epsilon()).exp();
    let matrix = match modes {
        ModeCount::One => {
            let lowered = &dressed_ladder(params, modes, d)?[0];
            let h = lowered.adjoint().mul(lowered)?;
            let (values, vectors) = hermitian_eig(h.matrix());
            apply_spectral(&values, &vectors, |lam| {
                C64::new((1.0 - x) * (-params.epsilon() * lam).exp(), 0.0)
            })
        }
        ModeCount::Two => {
            let mut m = DMatrix::zeros(dim, dim);
            pair_rho_blocks(params, d, |states, rho| {
                for (i, &(mi, ni)) in states.iter().enumerate() {
                    for (j, &(mj, nj)) in states.iter().enumerate() {
                        m[(mi * d + ni, mj * d + nj)] = C64::new(rho[(i, j)], 0.0);
                    }
                }
            });
            m
        }
    };
    let mut rho = FockOperator::new(modes.get(), d, matrix, 0.0)?;
    rho.truncation_tol = 2.0 * rho.edge_weight();
    check_normalized(rho.trace().re, rho.truncation_tol, d)?;
    Ok(rho)
}

fn check_normalized(trace: f64, tol: f64, d: usize) -> Result<()> {
    if (trace - 1.0).abs() > 10.0 * tol.max(f64::EPSILON * 1e3) {
        return Err(Error::InsufficientDimension(format!(
            "trace of the truncated state is {trace} at D = {d} (truncation tolerance {tol:e})"
        )));
    }
    Ok(())
}

/// Occupation-number distribution of the truncated dressed thermal state.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOccupations {
    pub distribution: CountDistribution,
    pub truncation_tol: f64,
    pub dim_per_mode: usize,
}

impl OracleOccupations {
    /// `Σ e^{ium + ivn} P(m, n)`; the single-mode case ignores `v`.
    pub fn generating_function(&self, u: f64, v: f64) -> C64 {
        self.distribution
            .rows()
            .into_iter()
            .map(|(idx, p)| {
                let phase = u * idx[0] as f64 + idx.get(1).map_or(0.0, |&n| v * n as f64);
                C64::from_polar(p, phase)
            })
            .sum()
    }

    pub fn joint(&self, m: usize, n: usize) -> f64 {
        self.distribution.joint(m, n)
    }
}

/// Diagonal of the truncated dressed thermal state as a distribution.
///
/// The two-mode case works block by block and never forms the dense
/// `D² × D²` matrix, so it accepts `D` up to [`MAX_DIM_PER_MODE`].
pub fn occupations(
    params: &DressedModelParams,
    modes: ModeCount,
    d: usize,
) -> Result<OracleOccupations> {
    if !(2..=MAX_DIM_PER_MODE).contains(&d) {
        return Err(Error::InsufficientDimension(format!(
            "D = {d} outside the supported range 2..={MAX_DIM_PER_MODE}"
        )));
    }
    let cut = edge_cut(d);
    let (quantity, probs) = match modes {
        ModeCount::One => {
            let rho = rho_fock(params, modes, d)?;
            (
                Quantity::Single,
                rho.diagonal().iter().map(|z| z.re).collect::<Vec<_>>(),
            )
        }
        ModeCount::Two => {
            let mut probs = vec![0.0; d * d];
            pair_rho_blocks(params, d, |states, rho| {
                for (i, &(m, n)) in states.iter().enumerate() {
                    probs[m * d + n] = rho[(i, i)];
                }
            });
            (Quantity::Joint, probs)
        }
    };
    let edge: f64 = probs
        .iter()
        .enumerate()
        .filter(|(i, _)| digits(*i, modes.get(), d).iter().any(|&k| k >= cut))
        .map(|(_, p)| p.abs())
        .sum();
    let truncation_tol = 2.0 * edge;
    let trace: f64 = probs.iter().sum();
    check_normalized(trace, truncation_tol, d)?;
    // the truncated state can overshoot unit trace by rounding only
    let scale = if trace > 1.0 { 1.0 / trace } else { 1.0 };
    let distribution = CountDistribution::new(
        quantity,
        Method::FockOracle,
        d - 1,
        probs.into_iter().map(|p| p * scale).collect(),
        Some(*params),
    )?;
    Ok(OracleOccupations {
        distribution,
        truncation_tol,
        dim_per_mode: d,
    })
}

/// [`occupations`] starting at `start` and growing `D` by 20 until the
/// truncation tolerance reaches [`TARGET_TRUNCATION_TOL`] or `D` hits the
/// maximum; returns the last attempt.
pub fn occupations_escalating(
    params: &DressedModelParams,
    modes: ModeCount,
    start: usize,
) -> Result<OracleOccupations> {
    let mut d = start.clamp(2, MAX_DIM_PER_MODE);
    loop {
        let attempt = occupations(params, modes, d);
        let done = match &attempt {
            Ok(occ) => occ.truncation_tol <= TARGET_TRUNCATION_TOL,
            Err(Error::InsufficientDimension(_)) => false,
            Err(_) => true,
        };
        if done || d == MAX_DIM_PER_MODE {
            return attempt;
        }
        d = (d + 20).min(MAX_DIM_PER_MODE);
    }
}

/// Diagonal `exp(iu·m + iv·n)`; the single-mode version ignores `v`.
pub fn g_fock(u: f64, v: f64, modes: ModeCount, d: usize) -> Result<FockOperator> {
    let n_modes = modes.get();
    let dim = total_dim(n_modes, d)?;
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let occ = digits(i, n_modes, d);
        let phase = u * occ[0] as f64 + occ.get(1).map_or(0.0, |&n| v * n as f64);
        m[(i, i)] = C64::from_polar(1.0, phase);
    }
    FockOperator::new(n_modes, d, m, 0.0)
}

fn check_displacement(alpha: C64, d: usize) -> Result<()> {
    if alpha.norm_sqr() > d as f64 / 4.0 {
        return Err(Error::InsufficientDimension(format!(
            "|alpha|^2 = {} exceeds D/4 = {}",
            alpha.norm_sqr(),
            d as f64 / 4.0
        )));
    }
    Ok(())
}

/// Single-mode `exp(α a† − α* a)`, via the Hermitian matrix `i(α a† − α* a)`.
fn displacement_single(alpha: C64, d: usize) -> DMatrix<C64> {
    let a = lowering(d);
    let generator = a.adjoint() * alpha - &a * alpha.conj();
    let (values, vectors) = hermitian_eig(&(generator * C64::new(0.0, 1.0)));
    apply_spectral(&values, &vectors, |lam| C64::from_polar(1.0, -lam))
}

/// `exp(α a† − α* a)` on mode `mode_index`.
pub fn displacement(
    alpha: C64,
    n_modes: usize,
    mode_index: usize,
    d: usize,
) -> Result<FockOperator> {
    check_displacement(alpha, d)?;
    if mode_index >= n_modes {
        return Err(Error::Domain(format!(
            "mode index {mode_index} out of range for {n_modes} modes"
        )));
    }
    total_dim(n_modes, d)?;
    FockOperator::new(
        n_modes,
        d,
        embed(&displacement_single(alpha, d), mode_index, n_modes, d),
        0.0,
    )
}

/// `(−1)^{total occupation}`.
pub fn parity(n_modes: usize, d: usize) -> Result<FockOperator> {
    let dim = total_dim(n_modes, d)?;
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let total: usize = digits(i, n_modes, d).iter().sum();
        m[(i, i)] = C64::new(if total.is_multiple_of(2) { 1.0 } else { -1.0 }, 0.0);
    }
    FockOperator::new(n_modes, d, m, 0.0)
}

/// `2ⁿ tr{D(α) S D(−α) F}` at a physical point.
///
/// The displaced parity is formed in a basis of `2D` states and restricted to
/// the lowest `D`, which removes the edge error of the truncated displacement.
/// The displaced parity factorises over modes, so the trace is accumulated
/// from the single-mode factors without forming their tensor product.
pub fn wigner_point_fock(f: &FockOperator, p: &PhaseSpacePoint) -> Result<C64> {
    let n = f.n_modes;
    let d = f.dim_per_mode;
    if p.n_modes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.n_modes(),
        });
    }
    if !p.is_physical(1e-12) {
        return Err(Error::Domain(
            "Fock-space Wigner evaluation needs a physical point".into(),
        ));
    }
    // padded so the truncated displacement is accurate on all d kept states
    let work = 2 * d;
    let parity_diag: Vec<f64> = (0..work)
        .map(|l| if l % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let mut factors: Vec<DMatrix<C64>> = Vec::with_capacity(n);
    for k in 0..n {
        let alpha = p.alpha(k);
        check_displacement(alpha, d)?;
        let disp = displacement_single(alpha, work);
        let mut displaced = DMatrix::<C64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                displaced[(i, j)] = (0..work)
                    .map(|l| disp[(i, l)] * parity_diag[l] * disp[(j, l)].conj())
                    .sum::<C64>();
            }
        }
        factors.push(displaced);
    }
    let dim = f.dim();
    let index_digits: Vec<Vec<usize>> = (0..dim).map(|i| digits(i, n, d)).collect();
    let mut acc = C64::new(0.0, 0.0);
    for (i, di) in index_digits.iter().enumerate() {
        for (j, dj) in index_digits.iter().enumerate() {
            let fji = f.matrix[(j, i)];
            if fji == C64::new(0.0, 0.0) {
                continue;
            }
            let mut prod = C64::new(1.0, 0.0);
            for k in 0..n {
                prod *= factors[k][(di[k], dj[k])];
            }
            acc += prod * fji;
        }
    }
    Ok(acc * 2f64.powi(n as i32))
}

/// `tr{ρ²}`.
pub fn purity(rho: &FockOperator) -> Result<f64> {
    Ok(rho.trace_product(rho)?.re)
}

/// `tr{ρ²}` of the truncated two-mode dressed state, summed block by block.
pub fn pair_purity(params: &DressedModelParams, d: usize) -> Result<f64> {
    if !(2..=MAX_DIM_PER_MODE).contains(&d) {
        return Err(Error::InsufficientDimension(format!(
            "D = {d} outside the supported range 2..={MAX_DIM_PER_MODE}"
        )));
    }
    let mut acc = 0.0;
    pair_rho_blocks(params, d, |_, rho| {
        acc += rho.iter().map(|x| x * x).sum::<f64>()
    });
    Ok(acc)
}

/// Quadratic form `ā M āᵀ` of the thermal operator `exp(−λ Σ (aₖ†aₖ + ½))`.
pub fn thermal_form(lambda: f64, n_modes: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        m[(2 * k, 2 * k + 1)] = C64::new(-0.5 * lambda, 0.0);
        m[(2 * k + 1, 2 * k)] = C64::new(-0.5 * lambda, 0.0);
    }
    m
}

/// The form `M'` with `V M' Vᵀ = M`, i.e. the operator that `V` carries to
/// `exp(ā M āᵀ)`.
pub fn pullback_form(m: &DMatrix<C64>, v: &SymplecticTransform) -> DMatrix<C64> {
    let inv = v.inverse();
    inv.matrix() * m * inv.matrix().transpose()
}

/// Exponentiates an operator: spectrally when Hermitian, otherwise by
/// scaling and squaring.
fn exp_operator(x: &FockOperator) -> Result<FockOperator> {
    let scale = x.matrix.norm().max(1.0);
    let matrix = if x.hermitian_residual() <= 1e-12 * scale {
        let (values, vectors) = hermitian_eig(&x.matrix);
        apply_spectral(&values, &vectors, |lam| C64::new(lam.exp(), 0.0))
    } else {
        x.matrix.clone().exp()
    };
    if matrix.iter().any(|z| !z.is_finite()) {
        return Err(Error::InsufficientDimension(
            "operator exponential diverges in the truncated basis".into(),
        ));
    }
    let mut out = FockOperator::new(x.n_modes, x.dim_per_mode, matrix, 0.0)?;
    let edge = out.edge_weight();
    let total: f64 = out.diagonal().iter().map(|z| z.norm()).sum();
    if edge > 1e-2 * total {
        return Err(Error::InsufficientDimension(format!(
            "operator exponential keeps {:.3e} of its diagonal weight on the truncation edge",
            edge / total
        )));
    }
    out.truncation_tol = 2.0 * edge;
    Ok(out)
}

/// Per-mode dimension in which [`covariance_oracle`] builds and exponentiates
/// the substituted generator before projecting back to `d`.
pub fn covariance_work_dim(n_modes: usize, d: usize) -> usize {
    let mut work = (2 * d).min(MAX_DIM_PER_MODE).max(d);
    while n_modes > 1 && work > d && work.pow(n_modes as u32) > MAX_DENSE_DIM {
        work -= 1;
    }
    work
}

/// Both sides of the covariance rule for `F = exp(ā M āᵀ)`.
///
/// `w₁` is the Fock-space Wigner value of `F(ā V)`, built by substituting the
/// transformed ladder matrices into the quadratic form; `w₂` is the
/// phase-space value of the Weyl symbol of `F` transformed by `V`. The third
/// value is the truncation tolerance of `w₁`.
///
/// Truncated `a²` terms distort the exponential near the basis edge, so the
/// generator is exponentiated in a basis of [`covariance_work_dim`] states per
/// mode and the result kept on the lowest `d`.
pub fn covariance_oracle(
    m: &DMatrix<C64>,
    v: &SymplecticTransform,
    p: &PhaseSpacePoint,
    d: usize,
) -> Result<(C64, C64, f64)> {
    let n = v.n_modes();
    if m.nrows() != 2 * n || m.ncols() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: m.nrows(),
        });
    }
    total_dim(n, d)?;
    let work = covariance_work_dim(n, d);
    let row = ladder_row(n, work)?;
    let vm = v.matrix();
    let transformed: Vec<FockOperator> = (0..2 * n)
        .map(|j| {
            let terms: Vec<(C64, &FockOperator)> =
                (0..2 * n).map(|i| (vm[(i, j)], &row[i])).collect();
            FockOperator::combination(&terms)
        })
        .collect::<Result<_>>()?;
    let dim = row[0].dim();
    let mut x = DMatrix::zeros(dim, dim);
    for j in 0..2 * n {
        for k in 0..2 * n {
            let c = m[(j, k)];
            if c != C64::new(0.0, 0.0) {
                x += (&transformed[j].matrix * &transformed[k].matrix) * c;
            }
        }
    }
    let g_work = exp_operator(&FockOperator::new(n, work, x, 0.0)?)?;
    // keep the states with every occupation below d
    let kept: Vec<usize> = (0..dim)
        .filter(|&i| digits(i, n, work).iter().all(|&o| o < d))
        .collect();
    let dropped: f64 = (0..dim)
        .filter(|&i| digits(i, n, work).iter().any(|&o| o >= d))
        .map(|i| g_work.matrix[(i, i)].norm())
        .sum();
    let mut projected = DMatrix::zeros(kept.len(), kept.len());
    for (a, &i) in kept.iter().enumerate() {
        for (b, &j) in kept.iter().enumerate() {
            projected[(a, b)] = g_work.matrix[(i, j)];
        }
    }
    let mut g = FockOperator::new(n, d, projected, 0.0)?;
    g.truncation_tol = g_work.truncation_tol + 2.0 * dropped + 2.0 * g.edge_weight();
    let w1 = wigner_point_fock(&g, p)?;
    let w2 = v.apply(&exponential_wigner(m)?)?.eval_point(p)?;
    // the displaced parity has unit norm, so W inherits 2ⁿ × the trace error
    Ok((w1, w2, 2f64.powi(n as i32) * g.truncation_tol))
}
