//! Semilinear wave equation `u'' + A^2 u = F(u, t)` with a polynomial
//! nonlinearity, solved by Picard iteration around the linear wave solver.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cauchy::{
    e_norm, finish_bundle, wave_apply, wave_bundle, CauchyProblem, ContourSpec, ENormLevel, ProblemKind, Sign,
    SolutionBundle,
};
use crate::linop::ModelOperator;
use crate::time::{GridFunction, TimeGrid};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A coefficient `c_k(t)`. Scalar coefficients act on every component.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    /// Samples on a fixed grid, linearly interpolated between nodes.
    Sampled(GridFunction),
    /// `sum_j coeffs[j] t^j`, scalar.
    PolyInT(Vec<Complex64>),
}

impl Coefficient {
    pub fn poly(coeffs: &[f64]) -> Self {
        Coefficient::PolyInT(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    fn dim(&self) -> usize {
        match self {
            Coefficient::Sampled(g) => g.dim(),
            Coefficient::PolyInT(_) => 1,
        }
    }

    fn check(&self, dim: usize, grid: Option<&TimeGrid>) -> Result<()> {
        let d = self.dim();
        if d != 1 && d != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: d });
        }
        if let (Coefficient::Sampled(g), Some(grid)) = (self, grid) {
            if g.grid() != grid {
                return Err(Error::GridMismatch);
            }
        }
        Ok(())
    }

    /// Value of component `k` at node `j` of the coefficient's own grid or
    /// at time `t`.
    fn at_node(&self, j: usize, t: f64, k: usize) -> Complex64 {
        match self {
            Coefficient::Sampled(g) => g.at(j)[if g.dim() == 1 { 0 } else { k }],
            Coefficient::PolyInT(c) => horner(c, t),
        }
    }

    fn at_time(&self, t: f64, k: usize) -> Complex64 {
        match self {
            Coefficient::Sampled(g) => {
                let grid = g.grid();
                let kk = if g.dim() == 1 { 0 } else { k };
                let x = (t / grid.step()).clamp(0.0, grid.intervals() as f64);
                let j = (x.floor() as usize).min(grid.intervals() - 1);
                let w = x - j as f64;
                g.at(j)[kk] * (1.0 - w) + g.at(j + 1)[kk] * w
            }
            Coefficient::PolyInT(c) => horner(c, t),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Coefficient::Sampled(g) => g.max_abs() == 0.0,
            Coefficient::PolyInT(c) => c.iter().all(|v| *v == ZERO),
        }
    }
}

fn horner(c: &[Complex64], t: f64) -> Complex64 {
    c.iter().rev().fold(ZERO, |acc, v| acc * t + v)
}

/// `F(u, t) = c_0(t) + sum_{k>=1} c_k(t) u^k` with componentwise powers.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialNonlinearity {
    pub forcing: Coefficient,
    /// `terms[k - 1] = c_k`.
    pub terms: Vec<Coefficient>,
}

impl PolynomialNonlinearity {
    pub fn new(forcing: Coefficient, terms: Vec<Coefficient>) -> Self {
        Self { forcing, terms }
    }

    pub fn degree(&self) -> usize {
        self.terms.len()
    }

    fn check(&self, dim: usize, grid: Option<&TimeGrid>) -> Result<()> {
        self.forcing.check(dim, grid)?;
        self.terms.iter().try_for_each(|c| c.check(dim, grid))
    }

    fn value(&self, u: &[Complex64], coeff: impl Fn(&Coefficient, usize) -> Complex64, out: &mut [Complex64]) {
        for (k, (o, &x)) in out.iter_mut().zip(u).enumerate() {
            let mut acc = coeff(&self.forcing, k);
            let mut pow = x;
            for c in &self.terms {
                acc += coeff(c, k) * pow;
                pow *= x;
            }
            *o = acc;
        }
    }

    /// `c_0` sampled on `grid` with dimension `dim`.
    pub fn forcing_on(&self, grid: TimeGrid, dim: usize) -> Result<GridFunction> {
        self.evaluate(&GridFunction::zeros(grid, dim))
    }

    /// `F(u(t), t)` at every node of `u`.
    pub fn evaluate(&self, u: &GridFunction) -> Result<GridFunction> {
        self.check(u.dim(), Some(u.grid()))?;
        let grid = *u.grid();
        let dim = u.dim();
        let mut out = GridFunction::zeros(grid, dim);
        for j in 0..grid.len() {
            let t = grid.node(j);
            self.value(u.at(j), |c, k| c.at_node(j, t, k), out.at_mut(j));
        }
        Ok(out)
    }

    fn evaluate_at(&self, u: &[Complex64], t: f64, out: &mut [Complex64]) {
        self.value(u, |c, k| c.at_time(t, k), out);
    }

    fn has_nonlinear_terms(&self) -> bool {
        self.terms.iter().any(|c| !c.is_zero())
    }
}

/// Free-function form of [`PolynomialNonlinearity::evaluate`].
pub fn evaluate_f(f: &PolynomialNonlinearity, u: &GridFunction) -> Result<GridFunction> {
    f.evaluate(u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub radius: f64,
    /// Number of trailing ratios reported as the contraction estimate.
    pub window: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 60, radius: 1e3, window: 3 }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance >= 1e-10) {
            return Err(Error::InvalidParameter(format!("tolerance must be >= 1e-10, got {}", self.tolerance)));
        }
        if self.max_iterations < 2 {
            return Err(Error::InvalidParameter("max_iterations must be >= 2".into()));
        }
        if !(self.radius > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {}", self.radius)));
        }
        if self.window == 0 {
            return Err(Error::InvalidParameter("window must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationTrace {
    /// `sup_t ||u_{k+1} - u_k||`.
    pub updates: Vec<f64>,
    /// Successive quotients of `updates`.
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub ball_exit: bool,
    /// Largest of the last `window` ratios.
    pub contraction: Option<f64>,
}

impl IterationTrace {
    fn push(&mut self, update: f64, window: usize) {
        if let Some(&prev) = self.updates.last() {
            self.ratios.push(if prev > 0.0 { update / prev } else { 0.0 });
        }
        self.updates.push(update);
        self.iterations = self.updates.len();
        let tail = &self.ratios[self.ratios.len().saturating_sub(window)..];
        self.contraction = tail.iter().cloned().reduce(f64::max);
    }

    pub fn to_kv(&self, prefix: &str) -> Vec<String> {
        let mut out = Vec::new();
        for (k, u) in self.updates.iter().enumerate() {
            out.push(format!("{prefix}.iter_{}_update={u:.10e}", k + 1));
        }
        for (k, r) in self.ratios.iter().enumerate() {
            out.push(format!("{prefix}.iter_{}_ratio={r:.10e}", k + 2));
        }
        out.push(format!("{prefix}.iterations={}", self.iterations));
        out.push(format!("{prefix}.converged={}", self.converged));
        out.push(format!("{prefix}.ball_exit={}", self.ball_exit));
        if let Some(c) = self.contraction {
            out.push(format!("{prefix}.contraction={c:.10e}"));
        }
        out
    }
}

/// Picard iteration `u_{k+1} = solve_wave(F(u_k))` from `u_0 = solve_wave(c_0)`.
///
/// The contour chosen for the seed is frozen so every step applies the same
/// discrete solution operator.
pub fn fixed_point_solve(
    a: &ModelOperator,
    f: &PolynomialNonlinearity,
    config: &FixedPointConfig,
    contour: &ContourSpec,
    grid: TimeGrid,
) -> Result<(SolutionBundle, IterationTrace)> {
    config.validate()?;
    let dim = a.dim();
    f.check(dim, Some(&grid))?;
    let c0 = f.forcing_on(grid, dim)?;
    let admission = CauchyProblem::new(a.clone(), Sign::Plus, c0.clone(), ProblemKind::Wave, *contour)?.admit()?;

    let seed = wave_apply(a, &c0, contour)?;
    let frozen = if seed.contour.nodes > 0 { seed.contour.freeze() } else { *contour };
    let u0 = seed.value.clone();
    let mut u = u0.clone();
    let mut trace = IterationTrace::default();
    let mut last = seed;
    if f.has_nonlinear_terms() {
        loop {
            let forcing = f.evaluate(&u)?;
            let next = wave_apply(a, &forcing, &frozen)?;
            let update = next.value.sub(&u)?.sup_norm();
            trace.push(update, config.window);
            u = next.value.clone();
            last = next;
            if !update.is_finite() {
                return Err(Error::Diverged(Box::new(trace)));
            }
            if u.sub(&u0)?.sup_norm() > config.radius {
                trace.ball_exit = true;
                return Err(Error::BallExit { radius: config.radius, trace: Box::new(trace) });
            }
            if update <= config.tolerance {
                trace.converged = true;
                break;
            }
            let n = trace.ratios.len();
            if n >= 2 && trace.ratios[n - 1] > 1.5 && trace.ratios[n - 2] > 1.5 {
                return Err(Error::Diverged(Box::new(trace)));
            }
            if trace.iterations >= config.max_iterations {
                return Err(Error::MaxIterationsExceeded(Box::new(trace)));
            }
        }
    } else {
        trace.push(0.0, config.window);
        trace.converged = true;
    }

    let forcing = f.evaluate(&u)?;
    let quad_error = last.quad_error;
    let mut bundle = wave_bundle(a, &forcing, last, 1e-3)?;
    bundle.quad_error = quad_error;
    let mut warnings = admission.warnings;
    warnings.append(&mut bundle.warnings);
    bundle.warnings = warnings;
    Ok((finish_bundle(bundle)?, trace))
}

/// Classical RK4 for `v' = w`, `w' = -A^2 v + F(v, t)` from rest, sampled on
/// `grid` with `substeps` steps per interval.
pub fn ode_oracle(a: &ModelOperator, f: &PolynomialNonlinearity, grid: TimeGrid, substeps: usize) -> Result<GridFunction> {
    if substeps < 4 {
        return Err(Error::InvalidParameter(format!("substeps must be >= 4, got {substeps}")));
    }
    let dim = a.dim();
    f.check(dim, None)?;
    let a2 = a.square();
    let h = grid.step() / substeps as f64;
    let rhs = |t: f64, s: &[Complex64]| -> Vec<Complex64> {
        let (v, w) = s.split_at(dim);
        let mut out = vec![ZERO; 2 * dim];
        out[..dim].copy_from_slice(w);
        let mut fv = vec![ZERO; dim];
        f.evaluate_at(v, t, &mut fv);
        let av = a2.apply(v);
        for k in 0..dim {
            out[dim + k] = fv[k] - av[k];
        }
        out
    };
    let axpy = |s: &[Complex64], c: f64, k: &[Complex64]| -> Vec<Complex64> {
        s.iter().zip(k).map(|(x, y)| x + y * c).collect()
    };
    let mut state = vec![ZERO; 2 * dim];
    let mut out = GridFunction::zeros(grid, dim);
    for j in 0..grid.intervals() {
        let t0 = grid.node(j);
        for i in 0..substeps {
            let t = t0 + i as f64 * h;
            let k1 = rhs(t, &state);
            let k2 = rhs(t + 0.5 * h, &axpy(&state, 0.5 * h, &k1));
            let k3 = rhs(t + 0.5 * h, &axpy(&state, 0.5 * h, &k2));
            let k4 = rhs(t + h, &axpy(&state, h, &k3));
            for m in 0..2 * dim {
                state[m] += h / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m]);
            }
            let norm = state.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if !(norm <= 1e12) {
                return Err(Error::OverflowDetected { t: t + h });
            }
        }
        out.at_mut(j + 1).copy_from_slice(&state[..dim]);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub horizon: f64,
    /// `||u||_{E2 partial} / ||F(u)||_{E0}`; `None` when skipped or failed.
    pub c_hat: Option<f64>,
    /// `ok`, `skipped (0/0)` or the solver error.
    pub status: String,
    pub contraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    /// `max / min` of the measured constants (1 when fewer than one).
    pub spread: f64,
    pub pass: bool,
    /// Contraction estimate at the smallest horizon, with whether it is at most 1/2.
    pub smallest_contraction: Option<(f64, bool)>,
}

impl SweepReport {
    pub fn to_kv(&self, prefix: &str) -> Vec<String> {
        let mut out = Vec::new();
        for (k, e) in self.entries.iter().enumerate() {
            out.push(format!("{prefix}.entry_{k}.T={:.10e}", e.horizon));
            match e.c_hat {
                Some(c) => out.push(format!("{prefix}.entry_{k}.c_hat={c:.10e}")),
                None => out.push(format!("{prefix}.entry_{k}.c_hat=none")),
            }
            out.push(format!("{prefix}.entry_{k}.status={}", e.status));
        }
        out.push(format!("{prefix}.spread={:.10e}", self.spread));
        out.push(format!("{prefix}.pass={}", self.pass));
        if let Some((c, half)) = self.smallest_contraction {
            out.push(format!("{prefix}.smallest_contraction={c:.10e}"));
            out.push(format!("{prefix}.smallest_contraction_le_half={half}"));
        }
        out
    }
}

/// Measures `C(T)` over `horizons` with `n` intervals each. Passes when the
/// measured constants stay within a factor 10 of each other.
pub fn stability_constant_sweep(
    a: &ModelOperator,
    f: &PolynomialNonlinearity,
    horizons: &[f64],
    n: usize,
    contour: &ContourSpec,
    config: &FixedPointConfig,
) -> Result<SweepReport> {
    if horizons.is_empty() {
        return Err(Error::InvalidParameter("no horizons given".into()));
    }
    let entries: Vec<SweepEntry> = horizons
        .par_iter()
        .map(|&t| {
            let run = || -> Result<SweepEntry> {
                let grid = TimeGrid::new(t, n)?;
                let (bundle, trace) = fixed_point_solve(a, f, config, contour, grid)?;
                let fu = f.evaluate(&bundle.u)?;
                let num = e_norm(a, Sign::Plus, &bundle.u, ENormLevel::E2Partial, 2.0)?.total;
                let den = e_norm(a, Sign::Plus, &fu, ENormLevel::E0, 2.0)?.total;
                let (c_hat, status) = if den == 0.0 {
                    (None, "skipped (0/0)".to_string())
                } else {
                    (Some(num / den), "ok".to_string())
                };
                Ok(SweepEntry { horizon: t, c_hat, status, contraction: trace.contraction })
            };
            run().unwrap_or_else(|e| SweepEntry {
                horizon: t,
                c_hat: None,
                status: format!("error: {e}"),
                contraction: None,
            })
        })
        .collect();
    let vals: Vec<f64> = entries.iter().filter_map(|e| e.c_hat).collect();
    let failed = entries.iter().any(|e| e.status.starts_with("error"));
    let spread = match (vals.iter().cloned().reduce(f64::max), vals.iter().cloned().reduce(f64::min)) {
        (Some(hi), Some(lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    };
    let smallest = entries
        .iter()
        .min_by(|x, y| x.horizon.total_cmp(&y.horizon))
        .and_then(|e| e.contraction)
        .map(|c| (c, c <= 0.5));
    Ok(SweepReport { entries, spread, pass: !failed && spread <= 10.0, smallest_contraction: smallest })
}

/// Outcome of halving the horizon until the iteration converges.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonSearch {
    /// `(T, outcome)` per attempt.
    pub attempts: Vec<(f64, String)>,
    /// Number of halvings `m` and horizon `T / 2^m` at first convergence.
    pub converged: Option<(usize, f64)>,
}

/// Tries `T / 2^m` for `m = 0..=max_halvings`.
pub fn shrinking_horizon_search(
    a: &ModelOperator,
    f: &PolynomialNonlinearity,
    config: &FixedPointConfig,
    contour: &ContourSpec,
    t: f64,
    n: usize,
    max_halvings: usize,
) -> Result<HorizonSearch> {
    let mut attempts = Vec::new();
    for m in 0..=max_halvings {
        let h = t / f64::powi(2.0, m as i32);
        match fixed_point_solve(a, f, config, contour, TimeGrid::new(h, n)?) {
            Ok(_) => {
                attempts.push((h, "converged".to_string()));
                return Ok(HorizonSearch { attempts, converged: Some((m, h)) });
            }
            Err(e) if e.trace().is_some() || matches!(e, Error::ResidualTooLarge(_)) => {
                attempts.push((h, e.to_string()))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(HorizonSearch { attempts, converged: None })
}
