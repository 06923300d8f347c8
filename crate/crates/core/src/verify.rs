//! Self-verification: the ten acceptance checks, grouped by cost.
//!
//! Each check reports its measured quantities against fixed bounds. The fast
//! level covers the closed-form identities; the full level adds the
//! truncated-basis oracle comparisons.

use std::f64::consts::PI;
use std::fmt;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::dressed_thermal::{
    dressed_rho_wigner, trace_via_integral, DressedModelParams, ModeCount,
};
use crate::error::Result;
use crate::fock::{self, covariance_oracle, pullback_form, thermal_form};
use crate::phase_space::{trace_product, PhaseSpacePoint};
use crate::statistics::{
    fourier_extract, joint_block, p_joint, p_single, p_single_mode_dressed, p_total, t_closed,
    t_closed_primitive, t_single, y_mean, y_parameters,
};
use crate::symplectic::SymplecticTransform;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubCheck {
    pub label: String,
    pub value: f64,
    pub bound: f64,
    pub kind: Bound,
}

impl SubCheck {
    pub fn passed(&self) -> bool {
        match self.kind {
            Bound::AtMost => self.value <= self.bound,
            Bound::AtLeast => self.value >= self.bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub id: u8,
    pub name: &'static str,
    pub checks: Vec<SubCheck>,
    pub error: Option<String>,
    pub elapsed: Duration,
    /// Wall-clock budget, where the check has one.
    pub budget: Option<Duration>,
}

impl CheckReport {
    pub fn within_budget(&self) -> bool {
        self.budget.is_none_or(|b| self.elapsed <= b)
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.within_budget() && self.checks.iter().all(SubCheck::passed)
    }

    /// Largest value among the upper-bounded sub-checks.
    pub fn max_error(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.kind == Bound::AtMost)
            .map(|c| c.value)
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status} [{:>2}] {:<34} max_err={:.3e} ({:.2?})",
            self.id,
            self.name,
            self.max_error(),
            self.elapsed
        )?;
        if let Some(e) = &self.error {
            write!(f, "\n       error: {e}")?;
        }
        if let Some(b) = self.budget {
            let mark = if self.within_budget() { " " } else { "!" };
            write!(
                f,
                "\n     {mark} {:<46} {:.3?} <= {:?}",
                "runtime", self.elapsed, b
            )?;
        }
        for c in &self.checks {
            let op = if c.kind == Bound::AtMost { "<=" } else { ">=" };
            let mark = if c.passed() { " " } else { "!" };
            write!(
                f,
                "\n     {mark} {:<46} {:.9e} {op} {:.9e}",
                c.label, c.value, c.bound
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Multiplies every upper bound; values below 1 tighten the checks.
    pub tolerance_scale: f64,
    pub oracle_dim: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tolerance_scale: 1.0,
            oracle_dim: fock::default_dimension(),
            seed: 0x5eed,
        }
    }
}

/// Accumulates sub-checks for one criterion.
struct Collector {
    scale: f64,
    checks: Vec<SubCheck>,
}

impl Collector {
    fn new(opts: &VerifyOptions) -> Self {
        Self {
            scale: opts.tolerance_scale,
            checks: Vec::new(),
        }
    }

    fn at_most(&mut self, label: impl Into<String>, value: f64, bound: f64) {
        self.checks.push(SubCheck {
            label: label.into(),
            value: if value.is_nan() { f64::INFINITY } else { value },
            bound: bound * self.scale,
            kind: Bound::AtMost,
        });
    }

    fn at_least(&mut self, label: impl Into<String>, value: f64, bound: f64) {
        self.checks.push(SubCheck {
            label: label.into(),
            value: if value.is_nan() {
                f64::NEG_INFINITY
            } else {
                value
            },
            bound,
            kind: Bound::AtLeast,
        });
    }
}

/// Worst `error / tolerance` over points with individual tolerances.
#[derive(Default)]
struct Worst {
    error: f64,
    tol: f64,
    ratio: f64,
    seen: bool,
}

impl Worst {
    fn push(&mut self, error: f64, tol: f64) {
        let error = if error.is_nan() { f64::INFINITY } else { error };
        let ratio = error / tol;
        if !self.seen || ratio > self.ratio {
            *self = Self {
                error,
                tol,
                ratio,
                seen: true,
            };
        }
    }
}

pub const EPSILON_GRID: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];
pub const THETA_GRID: [f64; 5] = [0.0, 0.1, 0.25, 0.6, 1.0];

/// 21 equally spaced interior points of `(−3, 3)`.
pub fn angle_grid() -> Vec<f64> {
    (0..21)
        .map(|k| -3.0 + 6.0 * (k + 1) as f64 / 22.0)
        .collect()
}

fn param_grid(eps: &[f64], theta: &[f64]) -> Result<Vec<DressedModelParams>> {
    let mut out = Vec::new();
    for &e in eps {
        for &t in theta {
            out.push(DressedModelParams::new(e, t)?);
        }
    }
    Ok(out)
}

type CheckFn = fn(&VerifyOptions, &mut Collector) -> Result<()>;

struct Criterion {
    id: u8,
    name: &'static str,
    level: Level,
    run: CheckFn,
    budget_secs: Option<u64>,
}

const CRITERIA: [Criterion; 10] = [
    Criterion {
        id: 1,
        name: "closed forms agree",
        level: Level::Fast,
        run: closed_forms,
        budget_secs: Some(1),
    },
    Criterion {
        id: 2,
        name: "integral route",
        level: Level::Fast,
        run: integral_route,
        budget_secs: Some(5),
    },
    Criterion {
        id: 3,
        name: "equal-angle special case",
        level: Level::Fast,
        run: equal_angles,
        budget_secs: None,
    },
    Criterion {
        id: 4,
        name: "single-mode square identity",
        level: Level::Fast,
        run: single_square,
        budget_secs: None,
    },
    Criterion {
        id: 5,
        name: "zero-angle factorisation",
        level: Level::Fast,
        run: factorisation,
        budget_secs: None,
    },
    Criterion {
        id: 6,
        name: "distribution identities",
        level: Level::Fast,
        run: distributions,
        budget_secs: Some(10),
    },
    Criterion {
        id: 7,
        name: "Fock oracle equivalence",
        level: Level::Full,
        run: fock_equivalence,
        budget_secs: Some(180),
    },
    Criterion {
        id: 8,
        name: "covariance under transforms",
        level: Level::Full,
        run: covariance,
        budget_secs: Some(60),
    },
    Criterion {
        id: 9,
        name: "Legendre expansion",
        level: Level::Fast,
        run: legendre,
        budget_secs: None,
    },
    Criterion {
        id: 10,
        name: "Wigner normalisation and purity",
        level: Level::Fast,
        run: normalisation,
        budget_secs: None,
    },
];

/// Names of all checks in order.
pub fn criterion_names() -> Vec<(u8, &'static str)> {
    CRITERIA.iter().map(|c| (c.id, c.name)).collect()
}

/// Runs one check by number (1-based).
pub fn run_criterion(id: u8, opts: &VerifyOptions) -> Option<CheckReport> {
    let c = CRITERIA.iter().find(|c| c.id == id)?;
    Some(execute(c, opts, true))
}

fn execute(c: &Criterion, opts: &VerifyOptions, with_oracle: bool) -> CheckReport {
    let start = Instant::now();
    let mut col = Collector::new(opts);
    // the purity check consults the oracle only at the full level
    let result = if c.id == 10 {
        normalisation_impl(opts, &mut col, with_oracle)
    } else {
        (c.run)(opts, &mut col)
    };
    CheckReport {
        id: c.id,
        name: c.name,
        checks: col.checks,
        error: result.err().map(|e| e.to_string()),
        elapsed: start.elapsed(),
        budget: c.budget_secs.map(Duration::from_secs),
    }
}

/// Runs every check belonging to `level`.
pub fn run(level: Level, opts: &VerifyOptions) -> Vec<CheckReport> {
    CRITERIA
        .iter()
        .filter(|c| level == Level::Full || c.level == Level::Fast)
        .map(|c| execute(c, opts, level == Level::Full))
        .collect()
}

fn closed_forms(_: &VerifyOptions, col: &mut Collector) -> Result<()> {
    let grid = angle_grid();
    let mut worst = 0.0f64;
    for p in param_grid(&EPSILON_GRID, &THETA_GRID)? {
        for &u in &grid {
            for &v in &grid {
                worst = worst.max((t_closed_primitive(u, v, &p) - t_closed(u, v, &p)).norm());
            }
        }
    }
    col.at_most("max |primitive - factored|", worst, 1e-12);
    Ok(())
}

fn integral_route(_: &VerifyOptions, col: &mut Collector) -> Result<()> {
    let grid: Vec<f64> = angle_grid()
        .into_iter()
        .filter(|u| u.abs() <= 2.8)
        .collect();
    let mut worst = 0.0f64;
    for p in param_grid(&EPSILON_GRID, &THETA_GRID)? {
        for &u in &grid {
            for &v in &grid {
                worst = worst.max((trace_via_integral(u, v, &p)? - t_closed(u, v, &p)).norm());
            }
        }
    }
    col.at_most("max |integral - closed|", worst, 1e-10);
    Ok(())
}

fn equal_angles(_: &VerifyOptions, col: &mut Collector) -> Result<()> {
    let mut worst = 0.0f64;
    for p in param_grid(&EPSILON_GRID, &THETA_GRID)? {
        let y = match y_parameters(&p) {
            Ok(y) => y,
            Err(_) => continue,
        };
        for &u in &angle_grid() {
            let e = C64::from_polar(1.0, u);
            let expected =
                (y.y_plus - 1.0) * (y.y_minus - 1.0) / ((y.y_plus - e) * (y.y_minus - e));
            worst = worst.max((t_closed(u, u, &p) - expected).norm());
        }
    }
    col.at_most("max |t(u,u) - pole form|", worst, 1e-12);
    Ok(())
}

fn single_square(_: &VerifyOptions, col: &mut Collector) -> Result<()> {
    let grid = angle_grid();
    let mut worst = 0.0f64;
    let mut margin = 0.0f64;
    for p in param_grid(&EPSILON_GRID, &THETA_GRID)? {
        let singles: Vec<C64> = grid
            .iter()
            .map(|&u| t_single(u, &p))
            .collect::<Result<_>>()?;
        for (i, &u) in grid.iter().enumerate() {
            worst = worst.max((singles[i] * singles[i] - t_closed(u, u, &p)).norm());
            if p.theta() != 0.0 {
                for (j, &v) in grid.iter().enumerate() {
                    if i != j {
                        margin = margin.max((singles[i] * singles[j] - t_closed(u, v, &p)).norm());
                    }
                }
            }
        }
    }
    col.at_most("max |t1(u)^2 - t(u,u)|", worst, 1e-10);
    col.at_least("max |t1(u) t1(v) - t(u,v)|, theta != 0", margin, 1e-6);
    Ok(())
}

fn factorisation(_: &VerifyOptions, col: &mut Collector) -> Result<()> {
    let grid = angle_grid();
    let mut worst = 0.0f64;
    for &e in &EPSILON_GRID {
        let p = DressedModelParams::new(e, 0.0)?;
        let x = (-e).exp();
        let factor = |w: f64| (1.0 - x) / (1.0 - C64::from_polar(x, w));
        for &u in &grid {
            for &v in &grid {
                worst = worst.max((t_closed(u, v, &p) - factor(u) * factor(v)).norm());
            }
        }
    }
    col.at_most("max |t(u,v;0) - product|", worst, 1e-12);
    Ok(())
}

/// Index past which a geometric tail with ratio `1/y` drops below `tail`.
fn geometric_cutoff(y: f64, tail: f64) -> usize {
    ((-tail.ln()) / y.ln()).ceil() as usize + 1
}

fn distributions(_: &VerifyOptions, col: &mut Collector) -> Result<()> {
    let mut min_sum = f64::INFINITY;
    let mut marginal = 0.0f64;
    let mut diagonal = 0.0f64;
    let mut min_prob = f64::INFINITY;
    for p in param_grid(&[0.5, 1.0, 2.0], &[0.0, 0.25, 0.5, 0.9])? {
        let y = y_mean(&p);
        let cut = geometric_cutoff(y, 1e-10).max(20);
        let singles: Vec<f64> = (0..=cut).map(|n| p_single(n, &p)).collect();
        min_sum = min_sum.min(singles.iter().sum());
        let n_max = geometric_cutoff(y, 1e-15);
        let block = joint_block(20, n_max, &p)?;
        for m in 0..=20 {
            let row: f64 = block[m * (n_max + 1)..(m + 1) * (n_max + 1)].iter().sum();
            marginal = marginal.max((row - singles[m]).abs());
        }
        for nt in 0..=20 {
            let diag = (0..=nt)
                .map(|m| p_joint(m, nt - m, &p))
                .sum::<Result<f64>>()?;
            diagonal = diagonal.max((diag - p_total(nt, &p)?).abs());
        }
        for nt in 0..=n_max {
            min_prob = min_prob.min(p_total(nt, &p)?);
        }
        min_prob = min_prob.min(block.iter().copied().fold(f64::INFINITY, f64::min));
        min_prob = min_prob.min(singles.iter().copied().fold(f64::INFINITY, f64::min));
    }
    col.at_least("min sum of single-mode law", min_sum, 1.0 - 1e-9);
    col.at_most("max |sum_n P(m,n) - P(m)|, m <= 20", marginal, 1e-9);
    col.at_most("max |sum_{m+n=N} P(m,n) - P(N)|, N <= 20", diagonal, 1e-9);
    col.at_least("min probability", min_prob, -1e-12);
    Ok(())
}

fn fock_equivalence(opts: &VerifyOptions, col: &mut Collector) -> Result<()> {
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let mut trace = Worst::default();
    let mut joint = Worst::default();
    let mut max_dim = 0usize;
    for p in param_grid(&[0.5, 1.0, 2.0], &[0.0, 0.3, 0.6, 1.0])? {
        let occ = fock::occupations_escalating(&p, ModeCount::Two, opts.oracle_dim)?;
        max_dim = max_dim.max(occ.dim_per_mode);
        let tol = occ.truncation_tol.max(1e-6);
        for _ in 0..5 {
            let u = rng.random_range(-PI..PI);
            let v = rng.random_range(-PI..PI);
            trace.push(
                (occ.generating_function(u, v) - t_closed(u, v, &p)).norm(),
                tol,
            );
        }
        let table = joint_block(10, 10, &p)?;
        for m in 0..=10 {
            for n in 0..=10 {
                joint.push((occ.joint(m, n) - table[m * 11 + n]).abs(), tol);
            }
        }
    }
    col.at_most(
        format!("max |tr{{g rho}} - t|, D <= {max_dim}"),
        trace.error,
        trace.tol,
    );
    col.at_most(
        "max |P_fock(m,n) - P(m,n)|, m,n <= 10",
        joint.error,
        joint.tol,
    );
    Ok(())
}

fn finite_or_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

fn random_point(rng: &mut StdRng, radius: f64) -> Result<PhaseSpacePoint> {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = rng.random_range(0.0..2.0 * PI);
    PhaseSpacePoint::physical(&[C64::from_polar(r, phi)])
}

fn covariance(opts: &VerifyOptions, col: &mut Collector) -> Result<()> {
    let mut rng = StdRng::seed_from_u64(opts.seed ^ 0xc0fe);
    let d = opts.oracle_dim;
    // strong enough that the transformed operator is resolved at D = 60
    let lambda = 2.0;
    let thermal = thermal_form(lambda, 1);
    let points: Vec<PhaseSpacePoint> = (0..5)
        .map(|_| random_point(&mut rng, 1.5))
        .collect::<Result<_>>()?;
    let mut unitary = 0.0f64;
    for _ in 0..10 {
        let theta = rng.random_range(-0.8..0.8);
        let phi = rng.random_range(-PI..PI);
        let rotation = SymplecticTransform::from_coefficients(
            C64::from_polar(1.0, phi),
            C64::new(0.0, 0.0),
            C64::from_polar(1.0, -phi),
            C64::new(0.0, 0.0),
        )?;
        let v = SymplecticTransform::single_mode_bogolubov(theta)?.compose(&rotation)?;
        for p in &points {
            let (w1, w2, _) = covariance_oracle(&thermal, &v, p, d)?;
            unitary = unitary.max(finite_or_inf((w1 - w2).norm()));
        }
    }
    let v = SymplecticTransform::from_coefficients(
        C64::new(1.0, 0.0),
        C64::new(-1.0, 0.0),
        C64::new(0.5, 0.0),
        C64::new(0.5, 0.0),
    )?;
    // carried to a thermal operator, so both sides stay trace class
    let m = pullback_form(&thermal, &v);
    let mut nonunitary = 0.0f64;
    for p in &points {
        let (w1, w2, _) = covariance_oracle(&m, &v, p, d)?;
        nonunitary = nonunitary.max(finite_or_inf((w1 - w2).norm()));
    }
    col.at_most(format!("unitary: max |w1 - w2|, D = {d}"), unitary, 1e-6);
    col.at_most(
        "non-unitary (1,-1,1/2,1/2): max |w1 - w2|",
        nonunitary,
        1e-6,
    );
    Ok(())
}

fn legendre(_: &VerifyOptions, col: &mut Collector) -> Result<()> {
    let mut worst = 0.0f64;
    let mut min_prob = f64::INFINITY;
    let mut min_sum = f64::INFINITY;
    for p in param_grid(&[0.5, 1.0, 2.0], &[0.0, 0.4, 0.8])? {
        let series: Vec<f64> = (0..=crate::statistics::LEGENDRE_MAX_INDEX)
            .map(|n| p_single_mode_dressed(n, &p))
            .collect::<Result<_>>()?;
        let fourier = fourier_extract(|u| t_single(u, &p).unwrap_or(C64::new(f64::NAN, 0.0)), 50)?;
        for (a, b) in series.iter().zip(fourier.probs()) {
            worst = worst.max((a - b).abs());
        }
        min_prob = min_prob.min(series.iter().copied().fold(f64::INFINITY, f64::min));
        min_sum = min_sum.min(series.iter().sum());
    }
    col.at_most("max |Legendre - Fourier|, n <= 50", worst, 1e-9);
    col.at_least("min probability", min_prob, 0.0);
    col.at_least("min sum", min_sum, 1.0 - 1e-8);
    Ok(())
}

fn normalisation(opts: &VerifyOptions, col: &mut Collector) -> Result<()> {
    normalisation_impl(opts, col, true)
}

fn normalisation_impl(opts: &VerifyOptions, col: &mut Collector, with_oracle: bool) -> Result<()> {
    let mut norm = 0.0f64;
    let mut zero_angle = 0.0f64;
    for p in param_grid(&EPSILON_GRID, &THETA_GRID)? {
        for modes in [ModeCount::One, ModeCount::Two] {
            let w = dressed_rho_wigner(&p, modes)?;
            norm = norm.max((w.integrate()? - 1.0).norm());
            if p.theta() == 0.0 {
                let expected = (0.5 * p.epsilon()).tanh().powi(modes.get() as i32);
                zero_angle = zero_angle.max((trace_product(&w, &w)? - expected).norm());
            }
        }
    }
    col.at_most("max |integral - 1|", norm, 1e-10);
    col.at_most(
        "max |purity - tanh^modes(eps/2)|, theta = 0",
        zero_angle,
        1e-10,
    );
    if with_oracle {
        let mut oracle = 0.0f64;
        for p in param_grid(&[0.5, 1.0, 2.0], &[0.3, 0.6, 1.0])? {
            let d = opts.oracle_dim;
            let w1 = dressed_rho_wigner(&p, ModeCount::One)?;
            let f1 = fock::purity(&fock::rho_fock(&p, ModeCount::One, fock::MAX_DIM_PER_MODE)?)?;
            oracle = oracle.max((trace_product(&w1, &w1)?.re - f1).abs());
            let w2 = dressed_rho_wigner(&p, ModeCount::Two)?;
            let f2 = fock::pair_purity(
                &p,
                fock::occupations_escalating(&p, ModeCount::Two, d)?.dim_per_mode,
            )?;
            oracle = oracle.max((trace_product(&w2, &w2)?.re - f2).abs());
        }
        col.at_most("max |purity - Fock purity|, theta != 0", oracle, 1e-6);
    }
    Ok(())
}
