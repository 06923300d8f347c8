//! Closed-form generating functions and occupation-number distributions of
//! the dressed thermal state, plus Fourier extraction of probabilities from
//! periodic generating functions.
//!
//! Everything here is parameterised by `Y₊`, `Y₋` and `Y`:
//!
//! ```text
//! Y₊ = (e^ε + tanhθ)/(1 + e^ε tanhθ)
//! Y₋ = (e^ε − tanhθ)/(1 − e^ε tanhθ)
//! Y  = (e^ε + tanh²θ)/(1 + e^ε tanh²θ)
//! ```
//!
//! `Y₋` has a removable pole at `e^ε tanhθ = 1`; near it the generating
//! function is evaluated through the pole-free bracket form and the
//! distributions through Fourier extraction.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::branch::continuous_sqrt;
use crate::dressed_thermal::DressedModelParams;
use crate::error::{Error, Result};
use crate::C64;

/// Relative distance to `e^ε tanhθ = 1` treated as the pole.
pub const POLE_TOLERANCE: f64 = 1e-10;
/// Relative `|Y₊ − Y₋|` below which the degenerate total-count form is used.
pub const DEGENERATE_THRESHOLD: f64 = 1e-6;
/// Largest `m + n` evaluated by the alternating joint-probability sum.
pub const JOINT_SUM_CAP: usize = 64;
/// Largest index served by the Legendre recurrence.
pub const LEGENDRE_MAX_INDEX: usize = 200;
/// Entries this far below zero are clamped to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-12;
/// Imaginary residue above which Fourier extraction rejects its input.
pub const RESIDUE_LIMIT: f64 = 1e-6;

const FOURIER_CONVERGENCE: f64 = 1e-13;
const FOURIER_MAX_GRID_1D: usize = 1 << 17;
const FOURIER_MAX_GRID_2D: usize = 1 << 11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YParameters {
    pub y_plus: f64,
    pub y_minus: f64,
    pub y_mean: f64,
}

/// `e^ε tanhθ`, the quantity whose unit value is the `Y₋` pole.
pub fn pole_product(params: &DressedModelParams) -> f64 {
    params.epsilon().exp() * params.theta().tanh()
}

pub fn near_pole(params: &DressedModelParams) -> bool {
    let prod = pole_product(params);
    (1.0 - prod).abs() <= POLE_TOLERANCE * prod.abs().max(1.0)
}

pub fn y_plus(params: &DressedModelParams) -> f64 {
    let e = params.epsilon().exp();
    let t = params.theta().tanh();
    (e + t) / (1.0 + e * t)
}

pub fn y_mean(params: &DressedModelParams) -> f64 {
    let e = params.epsilon().exp();
    let t2 = params.theta().tanh().powi(2);
    (e + t2) / (1.0 + e * t2)
}

pub fn y_parameters(params: &DressedModelParams) -> Result<YParameters> {
    if near_pole(params) {
        return Err(Error::YMinusPole {
            product: pole_product(params),
        });
    }
    let e = params.epsilon().exp();
    let t = params.theta().tanh();
    let y_plus = y_plus(params);
    let y_minus = (e - t) / (1.0 - e * t);
    let y_mean = y_mean(params);
    let via_pair = (2.0 * y_plus * y_minus - y_plus - y_minus) / (y_plus + y_minus - 2.0);
    if (via_pair - y_mean).abs() > 1e-9 * y_mean {
        return Err(Error::Precision(format!(
            "Y from (Y+, Y-) = {via_pair} disagrees with direct Y = {y_mean}"
        )));
    }
    Ok(YParameters {
        y_plus,
        y_minus,
        y_mean,
    })
}

fn unit(u: f64) -> C64 {
    C64::from_polar(1.0, u)
}

/// The bracket form of `T(u, v; ε)`, free of poles for every real `u, v`.
pub fn t_closed_primitive(u: f64, v: f64, params: &DressedModelParams) -> C64 {
    // numerator and bracket divided by e^{2ε}
    let x = (-params.epsilon()).exp();
    let c = (2.0 * params.theta()).cosh();
    let (wu, wv) = (unit(u), unit(v));
    let minus = (1.0 - x) * (1.0 - x);
    let plus = (1.0 + x) * (1.0 + x);
    let bracket = minus * (1.0 + wu) * (1.0 + wv)
        + plus * (1.0 - wu) * (1.0 - wv)
        + 2.0 * (1.0 - x * x) * (1.0 - wu * wv) * c;
    4.0 * minus / bracket
}

/// `T(u, v; ε) = 2(Y₊−1)(Y₋−1) / [(Y₊−e^{iu})(Y₋−e^{iv}) + (Y₋−e^{iu})(Y₊−e^{iv})]`.
pub fn t_closed(u: f64, v: f64, params: &DressedModelParams) -> C64 {
    let Ok(y) = y_parameters(params) else {
        return t_closed_primitive(u, v, params);
    };
    let (wu, wv) = (unit(u), unit(v));
    let (yp, ym) = (y.y_plus, y.y_minus);
    2.0 * (yp - 1.0) * (ym - 1.0) / ((yp - wu) * (ym - wv) + (ym - wu) * (yp - wv))
}

/// Generating function of a single physical mode: `(Y−1)/(Y−e^{iu})`.
pub fn t_marginal(u: f64, params: &DressedModelParams) -> C64 {
    let y = y_mean(params);
    (y - 1.0) / (y - unit(u))
}

/// Generating function of the single-mode dressing.
///
/// The square root is continued in `u` from `u = 0`, where the bracket is
/// `4(e^ε − 1)² > 0`.
pub fn t_single(u: f64, params: &DressedModelParams) -> Result<C64> {
    let x = (-params.epsilon()).exp();
    let c = (2.0 * params.theta()).cosh();
    let bracket = |w: C64| {
        (1.0 - x).powi(2) * (1.0 + w) * (1.0 + w)
            + (1.0 + x).powi(2) * (1.0 - w) * (1.0 - w)
            + 2.0 * (1.0 - x * x) * (1.0 - w * w) * c
    };
    let root = continuous_sqrt(|s| bracket(unit(s * u)))?;
    Ok(2.0 * (1.0 - x) / root)
}

/// `P(a†a = n) = (1 − 1/Y) Y^{−n}`.
pub fn p_single(n: usize, params: &DressedModelParams) -> f64 {
    let y = y_mean(params);
    (1.0 - 1.0 / y) * (-(n as f64) * y.ln()).exp()
}

/// Total-count law the two modes would have if they were independent.
pub fn p_total_uncorrelated(n_total: usize, params: &DressedModelParams) -> f64 {
    let y = y_mean(params);
    degenerate_total(n_total, y)
}

fn degenerate_total(n_total: usize, y: f64) -> f64 {
    (n_total as f64 + 1.0) * (1.0 - 1.0 / y).powi(2) * (-(n_total as f64) * y.ln()).exp()
}

/// `P(a†a + b†b = N)`.
pub fn p_total(n_total: usize, params: &DressedModelParams) -> Result<f64> {
    let Ok(y) = y_parameters(params) else {
        let dist = fourier_extract(|u| t_closed_primitive(u, u, params), n_total)?;
        return Ok(dist.probs()[n_total]);
    };
    Ok(total_from_y(n_total, &y))
}

fn total_from_y(n_total: usize, y: &YParameters) -> f64 {
    let (yp, ym) = (y.y_plus, y.y_minus);
    if (yp - ym).abs() < DEGENERATE_THRESHOLD * yp.abs() {
        return degenerate_total(n_total, y.y_mean);
    }
    let (a, b) = (1.0 / yp, 1.0 / ym);
    let ratio = if b > 0.0 && (a - b).abs() < 0.5 * a.max(b) {
        // (a^{N+1} − b^{N+1})/(a − b) as a positive finite sum
        (0..=n_total)
            .map(|k| a.powi(k as i32) * b.powi((n_total - k) as i32))
            .sum()
    } else {
        let k = n_total as i32 + 1;
        (a.powi(k) - b.powi(k)) / (a - b)
    };
    (1.0 - a) * (1.0 - b) * ratio
}

/// `P(a†a = m, b†b = n)`.
///
/// Uses the finite alternating sum when `m + n ≤ JOINT_SUM_CAP` and its
/// cancellation keeps the estimated relative error below 1e−10; otherwise the
/// coefficient recurrence of [`joint_block`]. At the `Y₋` pole the value comes
/// from 2-D Fourier extraction.
pub fn p_joint(m: usize, n: usize, params: &DressedModelParams) -> Result<f64> {
    match y_parameters(params) {
        Ok(y) => {
            if m + n <= JOINT_SUM_CAP {
                let (value, magnitude) = joint_sum(m, n, &y);
                let estimate = 8.0 * f64::EPSILON * (m.min(n) + 1) as f64 * magnitude;
                if estimate <= 1e-10 * value.abs() {
                    return Ok(clamp_probability(value));
                }
            }
            let block = joint_recurrence(m, n, &y);
            Ok(clamp_probability(block[m * (n + 1) + n]))
        }
        Err(Error::YMinusPole { .. }) => {
            let dist = fourier_extract_2d(|u, v| t_closed_primitive(u, v, params), m.max(n))?;
            Ok(dist.joint(m, n))
        }
        Err(e) => Err(e),
    }
}

/// The finite sum, rewritten as `Σₖ Cₖ βᵐ⁺ⁿ⁻²ᵏ ωᵏ` with `β = (Y₊⁻¹ + Y₋⁻¹)/2`
/// and `ω = −1/(Y₊Y₋)` so it stays finite when `Y₊ + Y₋ → 0`. Returns the
/// value and the prefactor times `Σ|terms|`.
fn joint_sum(m: usize, n: usize, y: &YParameters) -> (f64, f64) {
    let (a, b) = (1.0 / y.y_plus, 1.0 / y.y_minus);
    let base = 0.5 * (a + b);
    let omega = -a * b;
    let mut sum = 0.0;
    let mut compensation = 0.0;
    let mut magnitude = 0.0;
    for k in 0..=m.min(n) {
        let power = m + n - 2 * k;
        let term = if base == 0.0 && power > 0 {
            0.0
        } else {
            let ln_coeff = ln_factorial((m + n - k) as u64)
                - ln_factorial(k as u64)
                - ln_factorial((m - k) as u64)
                - ln_factorial((n - k) as u64);
            let ln_mag = ln_coeff
                + if power > 0 {
                    power as f64 * base.abs().ln()
                } else {
                    0.0
                }
                + k as f64 * omega.abs().ln();
            let negative = (base < 0.0 && power % 2 == 1) ^ (omega < 0.0 && k % 2 == 1);
            let mag = ln_mag.exp();
            if negative {
                -mag
            } else {
                mag
            }
        };
        magnitude += term.abs();
        // Neumaier summation
        let t = sum + term;
        if sum.abs() >= term.abs() {
            compensation += (sum - t) + term;
        } else {
            compensation += (term - t) + sum;
        }
        sum = t;
    }
    let pre = (1.0 - a) * (1.0 - b);
    (pre * (sum + compensation), pre * magnitude)
}

/// Joint probabilities for `m ≤ m_max`, `n ≤ n_max` (row-major in `m`).
///
/// The denominator of the generating function is bilinear in `e^{iu}`,
/// `e^{iv}`, so the coefficients satisfy
/// `p(m,n) = β (p(m−1,n) + p(m,n−1)) + ω p(m−1,n−1)`.
fn joint_recurrence(m_max: usize, n_max: usize, y: &YParameters) -> Vec<f64> {
    let (a, b) = (1.0 / y.y_plus, 1.0 / y.y_minus);
    let base = 0.5 * (a + b);
    let omega = -a * b;
    let cols = n_max + 1;
    let mut out = vec![0.0; (m_max + 1) * cols];
    for m in 0..=m_max {
        for n in 0..=n_max {
            out[m * cols + n] = if m == 0 && n == 0 {
                (1.0 - a) * (1.0 - b)
            } else {
                let up = if m > 0 { out[(m - 1) * cols + n] } else { 0.0 };
                let left = if n > 0 { out[m * cols + n - 1] } else { 0.0 };
                let diag = if m > 0 && n > 0 {
                    out[(m - 1) * cols + n - 1]
                } else {
                    0.0
                };
                base * (up + left) + omega * diag
            };
        }
    }
    out
}

/// Rectangular block of joint probabilities, `m ≤ m_max`, `n ≤ n_max`,
/// returned row-major in `m`.
pub fn joint_block(m_max: usize, n_max: usize, params: &DressedModelParams) -> Result<Vec<f64>> {
    match y_parameters(params) {
        Ok(y) => Ok(joint_recurrence(m_max, n_max, &y)
            .into_iter()
            .map(clamp_probability)
            .collect()),
        Err(Error::YMinusPole { .. }) => {
            let side = m_max.max(n_max);
            let d = fourier_extract_2d(|u, v| t_closed_primitive(u, v, params), side)?;
            Ok((0..=m_max)
                .flat_map(|m| (0..=n_max).map(move |n| (m, n)))
                .map(|(m, n)| d.joint(m, n))
                .collect())
        }
        Err(e) => Err(e),
    }
}

/// Coefficients of `e^{inu}` in [`t_single`] by the Legendre generating function.
///
/// The scaled bracket is `a₀(1 − 2s·w + r²w²)` with `w = e^{iu}`, so
/// `T = 2(1−e^{−ε})/√a₀ · Σ Pₙ(h) (r w)ⁿ` where `h r = s`. The products
/// `qₙ = Pₙ(h) rⁿ` are real and obey
/// `q_{k+1} = ((2k+1) s q_k − k r² q_{k−1})/(k+1)`.
fn legendre_coefficients(max_index: usize, params: &DressedModelParams) -> Result<Vec<f64>> {
    let x = (-params.epsilon()).exp();
    let c = (2.0 * params.theta()).cosh();
    let a0 = 2.0 * (1.0 + x * x) + 2.0 * (1.0 - x * x) * c;
    let a2 = 2.0 * (1.0 + x * x) - 2.0 * (1.0 - x * x) * c;
    let s = 4.0 * x / a0;
    let r2 = a2 / a0;
    let scale = 2.0 * (1.0 - x) / a0.sqrt();
    let mut q = Vec::with_capacity(max_index + 1);
    q.push(1.0);
    if max_index >= 1 {
        q.push(s);
    }
    for k in 1..max_index {
        let next = ((2 * k + 1) as f64 * s * q[k] - k as f64 * r2 * q[k - 1]) / (k + 1) as f64;
        q.push(next);
    }
    let out: Vec<f64> = q.into_iter().map(|v| scale * v).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precision("Legendre recurrence overflowed".into()));
    }
    Ok(out)
}

/// `P(a†a = n)` for the single-mode dressing.
pub fn p_single_mode_dressed(n: usize, params: &DressedModelParams) -> Result<f64> {
    if n > LEGENDRE_MAX_INDEX {
        return Err(Error::Domain(format!(
            "n = {n} exceeds the Legendre-route limit {LEGENDRE_MAX_INDEX}"
        )));
    }
    match legendre_coefficients(n, params) {
        Ok(c) => Ok(clamp_probability(c[n])),
        Err(Error::Precision(_)) => {
            let dist = fourier_extract(
                |u| t_single(u, params).unwrap_or(C64::new(f64::NAN, 0.0)),
                n,
            )?;
            Ok(dist.probs()[n])
        }
        Err(e) => Err(e),
    }
}

fn clamp_probability(p: f64) -> f64 {
    if (-NEGATIVE_CLAMP..0.0).contains(&p) {
        0.0
    } else {
        p
    }
}

/// Which occupation numbers a [`CountDistribution`] is indexed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `n` quanta in one physical mode.
    Single,
    /// `N` quanta in both modes together.
    Total,
    /// `(m, n)` quanta in modes `a` and `b`.
    Joint,
    /// `n` quanta in the single-mode dressing.
    DressedSingle,
    /// Fourier coefficients of an arbitrary periodic function of one angle.
    Fourier,
    /// Fourier coefficients of an arbitrary periodic function of two angles.
    Fourier2d,
}

impl Quantity {
    pub fn is_two_axis(self) -> bool {
        matches!(self, Quantity::Joint | Quantity::Fourier2d)
    }

    pub fn index_names(self) -> &'static [&'static str] {
        match self {
            Quantity::Joint | Quantity::Fourier2d => &["m", "n"],
            Quantity::Total => &["N"],
            _ => &["n"],
        }
    }
}

/// How a table was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Recurrence,
    Legendre,
    Fourier,
    FockOracle,
}

/// Occupation probabilities up to `max_index` (per axis).
///
/// Two-axis tables are stored row-major with `m` as the row index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountDistribution {
    quantity: Quantity,
    method: Method,
    max_index: usize,
    probs: Vec<f64>,
    tail_bound: f64,
    params: Option<DressedModelParams>,
    imaginary_residue: f64,
}

impl CountDistribution {
    /// Validates and clamps: entries ≥ −1e−12, total ≤ 1 + 1e−9.
    pub fn new(
        quantity: Quantity,
        method: Method,
        max_index: usize,
        mut probs: Vec<f64>,
        params: Option<DressedModelParams>,
    ) -> Result<Self> {
        let side = max_index + 1;
        let expected = if quantity.is_two_axis() {
            side * side
        } else {
            side
        };
        if probs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: probs.len(),
            });
        }
        for p in probs.iter_mut() {
            if !p.is_finite() || *p < -NEGATIVE_CLAMP {
                return Err(Error::InconsistentInput(format!(
                    "probability {p:e} is below -{NEGATIVE_CLAMP:e}"
                )));
            }
            *p = p.max(0.0);
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::InconsistentInput(format!(
                "probabilities sum to {total}, above 1 + 1e-9"
            )));
        }
        Ok(Self {
            quantity,
            method,
            max_index,
            probs,
            tail_bound: (1.0 - total).max(0.0),
            params,
            imaginary_residue: 0.0,
        })
    }

    pub fn quantity(&self) -> Quantity {
        self.quantity
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn params(&self) -> Option<&DressedModelParams> {
        self.params.as_ref()
    }

    pub fn imaginary_residue(&self) -> f64 {
        self.imaginary_residue
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Entry `(m, n)` of a two-axis table.
    pub fn joint(&self, m: usize, n: usize) -> f64 {
        debug_assert!(self.quantity.is_two_axis());
        self.probs[m * (self.max_index + 1) + n]
    }

    /// `(indices, probability)` rows in row-major order.
    pub fn rows(&self) -> Vec<(Vec<usize>, f64)> {
        let side = self.max_index + 1;
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if self.quantity.is_two_axis() {
                    (vec![i / side, i % side], *p)
                } else {
                    (vec![i], *p)
                }
            })
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.quantity.index_names().to_vec();
        header.push("probability");
        w.write_record(&header)
            .map_err(|e| Error::Io(e.to_string()))?;
        for (idx, p) in self.rows() {
            let mut rec: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
            rec.push(crate::format::g17(p));
            w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let probs = if self.quantity.is_two_axis() {
            serde_json::json!(self
                .probs
                .chunks(self.max_index + 1)
                .map(|r| r.to_vec())
                .collect::<Vec<_>>())
        } else {
            serde_json::json!(self.probs)
        };
        serde_json::json!({
            "quantity": self.quantity,
            "method": self.method,
            "max_index": self.max_index,
            "probs": probs,
            "tail_bound": self.tail_bound,
            "params": self.params.map(|p| serde_json::json!({
                "epsilon": p.epsilon(),
                "theta": p.theta(),
            })),
        })
    }
}

/// `P(a†a = n)` for `n ≤ max_index`.
pub fn single_table(max_index: usize, params: &DressedModelParams) -> Result<CountDistribution> {
    let probs = (0..=max_index).map(|n| p_single(n, params)).collect();
    CountDistribution::new(
        Quantity::Single,
        Method::ClosedForm,
        max_index,
        probs,
        Some(*params),
    )
}

pub fn total_table(max_index: usize, params: &DressedModelParams) -> Result<CountDistribution> {
    match y_parameters(params) {
        Ok(y) => {
            let probs = (0..=max_index).map(|n| total_from_y(n, &y)).collect();
            CountDistribution::new(
                Quantity::Total,
                Method::ClosedForm,
                max_index,
                probs,
                Some(*params),
            )
        }
        Err(Error::YMinusPole { .. }) => {
            let f = fourier_extract(|u| t_closed_primitive(u, u, params), max_index)?;
            CountDistribution::new(
                Quantity::Total,
                Method::Fourier,
                max_index,
                f.probs,
                Some(*params),
            )
        }
        Err(e) => Err(e),
    }
}

pub fn joint_table(max_index: usize, params: &DressedModelParams) -> Result<CountDistribution> {
    let method = if near_pole(params) {
        Method::Fourier
    } else {
        Method::Recurrence
    };
    let probs = joint_block(max_index, max_index, params)?;
    CountDistribution::new(Quantity::Joint, method, max_index, probs, Some(*params))
}

pub fn dressed_single_table(
    max_index: usize,
    params: &DressedModelParams,
) -> Result<CountDistribution> {
    if max_index > LEGENDRE_MAX_INDEX {
        return Err(Error::Domain(format!(
            "max_index = {max_index} exceeds the Legendre-route limit {LEGENDRE_MAX_INDEX}"
        )));
    }
    match legendre_coefficients(max_index, params) {
        Ok(c) => {
            let probs = c.into_iter().map(clamp_probability).collect();
            CountDistribution::new(
                Quantity::DressedSingle,
                Method::Legendre,
                max_index,
                probs,
                Some(*params),
            )
        }
        Err(Error::Precision(_)) => {
            let f = fourier_extract(
                |u| t_single(u, params).unwrap_or(C64::new(f64::NAN, 0.0)),
                max_index,
            )?;
            CountDistribution::new(
                Quantity::DressedSingle,
                Method::Fourier,
                max_index,
                f.probs,
                Some(*params),
            )
        }
        Err(e) => Err(e),
    }
}

fn grid_size(max_index: usize) -> usize {
    4 * max_index + 16
}

/// `(1/M) Σⱼ e^{−i m uⱼ} samples[j]` for `m ≤ max_index`, `uⱼ = 2πj/M`.
fn dft(samples: &[C64], max_index: usize) -> Vec<C64> {
    let size = samples.len();
    let mut buffer = samples.to_vec();
    FftPlanner::new()
        .plan_fft_forward(size)
        .process(&mut buffer);
    buffer.truncate(max_index + 1);
    buffer.iter().map(|z| z / size as f64).collect()
}

fn finish_extraction(
    quantity: Quantity,
    max_index: usize,
    coeffs: Vec<C64>,
) -> Result<CountDistribution> {
    let residue = coeffs.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if !(residue <= RESIDUE_LIMIT) {
        return Err(Error::InconsistentInput(format!(
            "Fourier coefficients carry imaginary residue {residue:e} (limit {RESIDUE_LIMIT:e})"
        )));
    }
    let mut dist = CountDistribution::new(
        quantity,
        Method::Fourier,
        max_index,
        coeffs.iter().map(|z| z.re).collect(),
        None,
    )?;
    dist.imaginary_residue = residue;
    Ok(dist)
}

/// Coefficients `p_m = ∫ du/2π e^{−imu} f(u)`, `0 ≤ m ≤ max_index`.
///
/// Uniform trapezoidal rule starting at `4·max_index + 16` points and doubled
/// until successive estimates agree to 1e−13.
pub fn fourier_extract<F>(f: F, max_index: usize) -> Result<CountDistribution>
where
    F: Fn(f64) -> C64,
{
    let mut size = grid_size(max_index);
    let mut samples: Vec<C64> = (0..size)
        .map(|j| f(2.0 * PI * j as f64 / size as f64))
        .collect();
    let mut coeffs = dft(&samples, max_index);
    loop {
        let next_size = 2 * size;
        if next_size > FOURIER_MAX_GRID_1D {
            return Err(Error::Precision(format!(
                "Fourier extraction did not converge on {size} points"
            )));
        }
        // reuse the even samples of the refined grid
        let mut refined = Vec::with_capacity(next_size);
        for (j, s) in samples.iter().enumerate() {
            refined.push(*s);
            refined.push(f(2.0 * PI * (2 * j + 1) as f64 / next_size as f64));
        }
        if refined.iter().any(|z| !z.is_finite()) {
            return Err(Error::InconsistentInput(
                "function returned non-finite samples".into(),
            ));
        }
        let next = dft(&refined, max_index);
        let change = coeffs
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        samples = refined;
        size = next_size;
        coeffs = next;
        if change <= FOURIER_CONVERGENCE {
            break;
        }
    }
    finish_extraction(Quantity::Fourier, max_index, coeffs)
}

/// Two-angle version of [`fourier_extract`]; the result is indexed `(m, n)`.
pub fn fourier_extract_2d<F>(f: F, max_index: usize) -> Result<CountDistribution>
where
    F: Fn(f64, f64) -> C64,
{
    let extract = |size: usize| -> Result<Vec<C64>> {
        let angle = |j: usize| 2.0 * PI * j as f64 / size as f64;
        // transform along v for each u, then along u
        let mut partial = vec![C64::new(0.0, 0.0); size * (max_index + 1)];
        let mut row = vec![C64::new(0.0, 0.0); size];
        for j in 0..size {
            let u = angle(j);
            for (k, r) in row.iter_mut().enumerate() {
                *r = f(u, angle(k));
            }
            if row.iter().any(|z| !z.is_finite()) {
                return Err(Error::InconsistentInput(
                    "function returned non-finite samples".into(),
                ));
            }
            let line = dft(&row, max_index);
            partial[j * (max_index + 1)..(j + 1) * (max_index + 1)].copy_from_slice(&line);
        }
        let side = max_index + 1;
        let mut out = vec![C64::new(0.0, 0.0); side * side];
        let mut column = vec![C64::new(0.0, 0.0); size];
        for n in 0..side {
            for j in 0..size {
                column[j] = partial[j * side + n];
            }
            for (m, c) in dft(&column, max_index).into_iter().enumerate() {
                out[m * side + n] = c;
            }
        }
        Ok(out)
    };
    let mut size = grid_size(max_index);
    let mut coeffs = extract(size)?;
    loop {
        let next_size = 2 * size;
        if next_size > FOURIER_MAX_GRID_2D {
            return Err(Error::Precision(format!(
                "2-D Fourier extraction did not converge on {size} x {size} points"
            )));
        }
        let next = extract(next_size)?;
        let change = coeffs
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        size = next_size;
        coeffs = next;
        if change <= FOURIER_CONVERGENCE {
            break;
        }
    }
    finish_extraction(Quantity::Fourier2d, max_index, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(e: f64, t: f64) -> DressedModelParams {
        DressedModelParams::new(e, t).unwrap()
    }

    #[test]
    fn y_at_zero_angle() {
        let y = y_parameters(&p(1.3, 0.0)).unwrap();
        let e = 1.3f64.exp();
        assert!((y.y_plus - e).abs() < 1e-12);
        assert!((y.y_minus - e).abs() < 1e-12);
        assert!((y.y_mean - e).abs() < 1e-12);
    }

    #[test]
    fn y_values_reference() {
        // hand evaluation: e = 2.718281828, tanh(0.25) = 0.244918662
        let y = y_parameters(&p(1.0, 0.25)).unwrap();
        assert!((y.y_plus - 1.778_87).abs() < 5e-5, "{}", y.y_plus);
        assert!((y.y_minus - 7.4000).abs() < 1e-3, "{}", y.y_minus);
        let y = y_parameters(&p(1.0, 0.5)).unwrap();
        assert!((y.y_minus + 8.806).abs() < 2e-3, "{}", y.y_minus);
    }

    #[test]
    fn pole_detected() {
        let theta = (-1.0f64).exp().atanh();
        let params = p(1.0, theta);
        assert!(matches!(
            y_parameters(&params),
            Err(Error::YMinusPole { .. })
        ));
        // t_closed silently routes through the bracket form
        let t = t_closed(0.7, -0.2, &params);
        assert!((t - t_closed_primitive(0.7, -0.2, &params)).norm() < 1e-15);
        let via_fourier = p_total(3, &params).unwrap();
        let nearby = p_total(3, &p(1.0, theta + 1e-7)).unwrap();
        assert!((via_fourier - nearby).abs() < 1e-6);
    }

    #[test]
    fn primitive_finite_at_pi() {
        let params = p(0.9, 0.4);
        let a = t_closed_primitive(PI, PI, &params);
        let b = t_closed(PI, PI, &params);
        assert!(a.is_finite());
        assert!((a - b).norm() < 1e-12);
        assert!((t_closed_primitive(0.0, 0.0, &params) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn marginal_matches_closed() {
        let params = p(0.6, 0.7);
        for k in 0..50 {
            let u = -3.0 + 6.0 * k as f64 / 49.0;
            assert!((t_marginal(u, &params) - t_closed(u, 0.0, &params)).norm() < 1e-12);
            assert!((t_marginal(u, &params) - t_closed(0.0, u, &params)).norm() < 1e-12);
        }
        let e = 0.6f64.exp();
        let t0 = t_marginal(1.0, &p(0.6, 0.0));
        assert!((t0 - (e - 1.0) / (e - unit(1.0))).norm() < 1e-14);
    }

    #[test]
    fn mean_occupation_from_derivative() {
        let params = p(0.8, 0.45);
        let h = 1e-5;
        let deriv = (t_marginal(h, &params) - t_marginal(-h, &params)) / (2.0 * h);
        let mean = (C64::new(0.0, -1.0) * deriv).re;
        assert!((mean - 1.0 / (y_mean(&params) - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn single_mode_trace_reduces_and_squares() {
        let params = p(1.2, 0.4);
        assert!((t_single(0.0, &params).unwrap() - 1.0).norm() < 1e-15);
        for u in [0.5, 1.7, 3.0, -2.4, 5.5] {
            let s = t_single(u, &params).unwrap();
            assert!((s * s - t_closed(u, u, &params)).norm() < 1e-10, "u={u}");
        }
        let e = 1.2f64.exp();
        let s = t_single(2.2, &p(1.2, 0.0)).unwrap();
        assert!((s - (e - 1.0) / (e - unit(2.2))).norm() < 1e-13);
    }

    #[test]
    fn geometric_single_law() {
        // Y = 2 ⇔ e^ε = 2 at θ = 0
        let params = p(2f64.ln(), 0.0);
        for n in 0..10 {
            assert!((p_single(n, &params) - 0.5f64.powi(n as i32 + 1)).abs() < 1e-15);
        }
        let total: f64 = (0..200).map(|n| p_single(n, &p(0.7, 0.3))).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn total_laws() {
        let params = p(1.0, 0.0);
        for n in 0..10 {
            assert!(
                (p_total(n, &params).unwrap() - p_total_uncorrelated(n, &params)).abs() < 1e-12
            );
        }
        let params = p(1.0, 0.8);
        let y = y_parameters(&params).unwrap();
        let p0 = (1.0 - 1.0 / y.y_plus) * (1.0 - 1.0 / y.y_minus);
        assert!((p_total(0, &params).unwrap() - p0).abs() < 1e-15);
        let diff = (p_total(2, &params).unwrap() - p_total_uncorrelated(2, &params)).abs();
        assert!(diff > 1e-3, "diff = {diff}");
        assert!((p_total_uncorrelated(0, &params) - (1.0 - 1.0 / y.y_mean).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn total_negative_y_minus_regime() {
        let params = p(1.0, 0.5);
        assert!(y_parameters(&params).unwrap().y_minus < -1.0);
        let table = total_table(80, &params).unwrap();
        assert!(table.probs().iter().all(|&q| q >= 0.0));
        assert!(table.total() >= 1.0 - 1e-8);
    }

    #[test]
    fn joint_symmetry_and_origin() {
        let params = p(1.0, 0.25);
        let y = y_parameters(&params).unwrap();
        let p00 = (1.0 - 1.0 / y.y_plus) * (1.0 - 1.0 / y.y_minus);
        assert!((p_joint(0, 0, &params).unwrap() - p00).abs() < 1e-15);
        assert!((p_joint(0, 0, &params).unwrap() - p_total(0, &params).unwrap()).abs() < 1e-15);
        for (m, n) in [(1, 4), (7, 3), (12, 0), (20, 19)] {
            let a = p_joint(m, n, &params).unwrap();
            let b = p_joint(n, m, &params).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn joint_marginal_identities() {
        for params in [p(1.0, 0.25), p(0.5, 0.9), p(1.0, 0.5), p(0.1, 0.1)] {
            let n_max = 3000;
            let block = joint_block(20, n_max, &params).unwrap();
            for m in 0..=20 {
                let row: f64 = block[m * (n_max + 1)..(m + 1) * (n_max + 1)].iter().sum();
                assert!((row - p_single(m, &params)).abs() < 1e-9, "m={m}");
            }
            for nt in 0..=20 {
                let diag: f64 = (0..=nt).map(|m| p_joint(m, nt - m, &params).unwrap()).sum();
                assert!(
                    (diag - p_total(nt, &params).unwrap()).abs() < 1e-9,
                    "N={nt}"
                );
            }
        }
    }

    #[test]
    fn sum_and_recurrence_agree_where_sum_is_stable() {
        for params in [p(1.0, 0.25), p(2.0, 0.9), p(1.0, 0.5)] {
            let y = y_parameters(&params).unwrap();
            let block = joint_recurrence(12, 12, &y);
            for m in 0..=12 {
                for n in 0..=12 {
                    let (sum, _) = joint_sum(m, n, &y);
                    let rec = block[m * 13 + n];
                    assert!(
                        (sum - rec).abs() <= 1e-11 * rec.abs().max(1e-300) + 1e-18,
                        "{m} {n} {sum} {rec}"
                    );
                }
            }
        }
    }

    #[test]
    fn joint_at_cancelling_y() {
        // Y₊ + Y₋ = 0 makes β vanish; only m = n survives.
        let params = p(1.0, 0.5);
        let y = y_parameters(&params).unwrap();
        let fake = YParameters {
            y_plus: y.y_plus,
            y_minus: -y.y_plus,
            y_mean: y.y_mean,
        };
        assert_eq!(joint_sum(2, 3, &fake).0, 0.0);
        assert!(joint_sum(3, 3, &fake).0 > 0.0);
    }

    #[test]
    fn legendre_reduces_to_geometric() {
        let eps = 0.9f64;
        let table = dressed_single_table(30, &p(eps, 0.0)).unwrap();
        for (n, q) in table.probs().iter().enumerate() {
            let expected = (1.0 - (-eps).exp()) * (-eps * n as f64).exp();
            assert!((q - expected).abs() < 1e-14);
        }
        let full = dressed_single_table(200, &p(1.0, 0.4)).unwrap();
        assert!((full.total() - 1.0).abs() < 1e-9);
        assert!(p_single_mode_dressed(201, &p(1.0, 0.4)).is_err());
    }

    #[test]
    fn the_identity_function_has_one_coefficient() {
        let d = fourier_extract(|_| C64::new(1.0, 0.0), 5).unwrap();
        assert!((d.probs()[0] - 1.0).abs() < 1e-15);
        assert!(d.probs()[1..].iter().all(|q| q.abs() < 1e-15));
        assert_eq!(d.tail_bound(), 0.0);
    }

    #[test]
    fn fourier_rejects_complex_coefficients() {
        let r = fourier_extract(|u| C64::new(0.0, 1.0) * unit(u), 3);
        assert!(matches!(r, Err(Error::InconsistentInput(_))));
    }

    #[test]
    fn fourier_recovers_marginal() {
        let params = p(1.0, 0.25);
        let d = fourier_extract(|u| t_marginal(u, &params), 20).unwrap();
        for n in 0..=20 {
            assert!((d.probs()[n] - p_single(n, &params)).abs() < 1e-9);
        }
        let expected_p0 = 1.0 - 1.0 / y_parameters(&params).unwrap().y_mean;
        assert!((d.probs()[0] - expected_p0).abs() < 1e-9);
    }

    #[test]
    fn fourier_2d_recovers_joint() {
        let params = p(1.0, 0.25);
        let d = fourier_extract_2d(|u, v| t_closed(u, v, &params), 8).unwrap();
        let table = joint_table(8, &params).unwrap();
        for m in 0..=8 {
            for n in 0..=8 {
                assert!((d.joint(m, n) - table.joint(m, n)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn distribution_validation() {
        assert!(CountDistribution::new(
            Quantity::Single,
            Method::ClosedForm,
            1,
            vec![0.5, -1e-3],
            None
        )
        .is_err());
        assert!(CountDistribution::new(
            Quantity::Single,
            Method::ClosedForm,
            1,
            vec![0.8, 0.3],
            None
        )
        .is_err());
        let d = CountDistribution::new(
            Quantity::Single,
            Method::ClosedForm,
            1,
            vec![0.5, -1e-13],
            None,
        )
        .unwrap();
        assert_eq!(d.probs()[1], 0.0);
        assert!((d.tail_bound() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let d = joint_table(1, &p(1.0, 0.2)).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "m,n,probability");
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("0,1,"));
    }
}
