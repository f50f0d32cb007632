//! Uniform time grids, grid functions, the causal resolvent of `d/dt` and
//! Sobolev-Slobodetskii norms.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::linop::ModelOperator;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Uniform partition of `[0, T]` into `N` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {t_end}")));
        }
        if n < 8 {
            return Err(Error::InvalidParameter(format!("grid needs at least 8 intervals, got {n}")));
        }
        Ok(Self { t_end, n })
    }

    pub fn horizon(&self) -> f64 {
        self.t_end
    }

    pub fn intervals(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.n {
            self.t_end
        } else {
            j as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|j| self.node(j)).collect()
    }

    /// Composite trapezoid weights.
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.n {
            0.5 * self.step()
        } else {
            self.step()
        }
    }
}

/// Vector-valued samples on a [`TimeGrid`], stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: TimeGrid,
    dim: usize,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        Self { grid, dim, values: vec![ZERO; grid.len() * dim] }
    }

    pub fn from_values(grid: TimeGrid, dim: usize, values: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || values.len() != grid.len() * dim {
            return Err(Error::DimensionMismatch { expected: grid.len() * dim.max(1), actual: values.len() });
        }
        Ok(Self { grid, dim, values })
    }

    pub fn from_fn<F>(grid: TimeGrid, dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> Vec<Complex64>,
    {
        let mut values = Vec::with_capacity(grid.len() * dim);
        for t in grid.nodes() {
            let v = f(t);
            assert_eq!(v.len(), dim, "sample has wrong dimension");
            values.extend(v);
        }
        Self { grid, dim, values }
    }

    pub fn from_scalar_fn<F>(grid: TimeGrid, f: F) -> Self
    where
        F: Fn(f64) -> Complex64,
    {
        Self::from_fn(grid, 1, |t| vec![f(t)])
    }

    pub fn from_real_fn<F>(grid: TimeGrid, f: F) -> Self
    where
        F: Fn(f64) -> f64,
    {
        Self::from_fn(grid, 1, |t| vec![Complex64::new(f(t), 0.0)])
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, j: usize) -> &[Complex64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn at_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn last(&self) -> &[Complex64] {
        self.at(self.grid.n)
    }

    pub fn component(&self, k: usize) -> Vec<Complex64> {
        (0..self.grid.len()).map(|j| self.at(j)[k]).collect()
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: other.dim });
        }
        Ok(())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { grid: self.grid, dim: self.dim, values: self.values.iter().map(|v| v * s).collect() }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: Complex64, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect();
        Ok(Self { grid: self.grid, dim: self.dim, values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// Applies `A` at every node.
    pub fn apply_operator(&self, a: &ModelOperator) -> Result<Self> {
        if a.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: a.dim(), actual: self.dim });
        }
        let mut out = Self::zeros(self.grid, self.dim);
        for j in 0..self.grid.len() {
            let (src, dst) = (self.at(j), &mut out.values[j * self.dim..(j + 1) * self.dim]);
            a.apply_into(src, dst);
        }
        Ok(out)
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        Self { grid: self.grid, dim: self.dim, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    fn node_norm(&self, j: usize) -> f64 {
        self.at(j).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Discrete `L^p(0,T; C^dim)` norm with trapezoid weights and the
    /// Euclidean norm in space.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = (0..self.grid.len()).map(|j| self.grid.weight(j) * self.node_norm(j).powf(p)).sum();
        s.powf(1.0 / p)
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.len()).map(|j| self.node_norm(j)).fold(0.0, f64::max)
    }

    /// Largest componentwise modulus.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// CSV with header `t,re_0,im_0,...` and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for k in 0..self.dim {
            s.push_str(&format!(",re_{k},im_{k}"));
        }
        s.push('\n');
        for j in 0..self.grid.len() {
            s.push_str(&format!("{:.16e}", self.grid.node(j)));
            for v in self.at(j) {
                s.push_str(&format!(",{:.16e},{:.16e}", v.re, v.im));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Csv("empty input".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.first() != Some(&"t") || cols.len() < 3 || cols.len() % 2 == 0 {
            return Err(Error::Csv(format!("bad header: {header}")));
        }
        let dim = (cols.len() - 1) / 2;
        let mut ts = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let nums: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| Error::Csv(format!("{e}: {x}"))))
                .collect::<Result<_>>()?;
            if nums.len() != cols.len() {
                return Err(Error::Csv(format!("row has {} fields, expected {}", nums.len(), cols.len())));
            }
            ts.push(nums[0]);
            values.extend(nums[1..].chunks(2).map(|c| Complex64::new(c[0], c[1])));
        }
        if ts.len() < 9 || ts[0] != 0.0 {
            return Err(Error::Csv("need at least 9 rows starting at t = 0".into()));
        }
        let grid = TimeGrid::new(*ts.last().unwrap(), ts.len() - 1)?;
        for (j, t) in ts.iter().enumerate() {
            if (t - grid.node(j)).abs() > 1e-9 * grid.horizon() {
                return Err(Error::Csv(format!("row {j} is not on a uniform grid")));
            }
        }
        Self::from_values(grid, dim, values)
    }
}

/// `phi1(z) = (1 - e^{-z})/z` and `psi(z) = (1 - e^{-z} - z e^{-z})/z^2`.
pub(crate) fn phi_psi(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 0.5 {
        let mut phi = ZERO;
        let mut psi = ZERO;
        let mut term = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for k in 0..20 {
            if k > 0 {
                term *= -z;
                fact *= k as f64;
            }
            phi += term / (fact * (k + 1) as f64);
            psi += term / (fact * (k + 2) as f64);
        }
        (phi, psi)
    } else {
        let e = (-z).exp();
        ((1.0 - e) / z, (1.0 - e - z * e) / (z * z))
    }
}

/// Precomputed one-step coefficients of the causal convolution
/// `w(t) = int_0^t e^{lambda (x - t)} u(x) dx` on a uniform grid.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BStep {
    decay: Complex64,
    alpha: Complex64,
    beta: Complex64,
}

impl BStep {
    pub(crate) fn new(lambda: Complex64, h: f64) -> Self {
        let z = lambda * h;
        let (phi, psi) = phi_psi(z);
        Self { decay: (-z).exp(), alpha: psi * h, beta: (phi - psi) * h }
    }

    /// Writes the convolution of `u` into `out` (same layout).
    pub(crate) fn apply(&self, u: &[Complex64], dim: usize, out: &mut [Complex64]) {
        out[..dim].iter_mut().for_each(|v| *v = ZERO);
        let rows = u.len() / dim;
        for j in 1..rows {
            for k in 0..dim {
                let prev = out[(j - 1) * dim + k];
                out[j * dim + k] = self.decay * prev + self.alpha * u[(j - 1) * dim + k] + self.beta * u[j * dim + k];
            }
        }
    }
}

/// `(B + lambda)^{-1} u`, exact for the piecewise-linear interpolant of `u`.
pub fn b_resolvent_apply(lambda: Complex64, u: &GridFunction) -> GridFunction {
    let mut out = GridFunction::zeros(u.grid, u.dim);
    BStep::new(lambda, u.grid.step()).apply(&u.values, u.dim, &mut out.values);
    out
}

/// `B^{-1} u`, the cumulative trapezoid integral.
pub fn b_inverse_apply(u: &GridFunction) -> GridFunction {
    b_resolvent_apply(ZERO, u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrndReport {
    pub bound: f64,
    pub max_norm_ratio: f64,
    /// `max_norm_ratio / bound`.
    pub ratio: f64,
    pub slack: f64,
    pub pass: bool,
}

/// `(1 - e^{-Re(lambda) T}) / Re(lambda)`, or `T` on the imaginary axis.
pub fn brnd_bound(lambda: Complex64, t_end: f64) -> f64 {
    let r = lambda.re;
    if r == 0.0 {
        t_end
    } else {
        -(-r * t_end).exp_m1() / r
    }
}

/// Measures `||(B + lambda)^{-1}||` in the discrete `L^p` norm on random and
/// structured probes and compares with [`brnd_bound`].
pub fn verify_brnd(lambda: Complex64, grid: TimeGrid, probes: usize, p: f64, seed: u64) -> Result<BrndReport> {
    if probes < 16 {
        return Err(Error::InvalidParameter(format!("need at least 16 probes, got {probes}")));
    }
    let bound = brnd_bound(lambda, grid.horizon());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut test = |u: &GridFunction| {
        let nu = u.lp_norm(p);
        if nu > 0.0 {
            worst = worst.max(b_resolvent_apply(lambda, u).lp_norm(p) / nu);
        }
    };
    test(&GridFunction::from_real_fn(grid, |_| 1.0));
    // Probe matched to the kernel: e^{conj(lambda) t} up to normalization.
    test(&GridFunction::from_scalar_fn(grid, |t| (lambda.conj() * (t - grid.horizon())).exp()));
    for _ in 0..probes {
        let vals: Vec<Complex64> = (0..grid.len())
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        test(&GridFunction::from_values(grid, 1, vals)?);
    }
    let slack = 10.0 / grid.intervals() as f64;
    let ratio = worst / bound;
    Ok(BrndReport { bound, max_norm_ratio: worst, ratio, slack, pass: ratio <= 1.0 + slack })
}

/// Discrete first or second derivative: central in the interior, second
/// order one-sided at the ends.
pub fn finite_diff_derivative(u: &GridFunction, order: u8) -> Result<GridFunction> {
    let n = u.grid.intervals();
    let h = u.grid.step();
    let d = u.dim;
    let mut out = GridFunction::zeros(u.grid, d);
    let v = |j: usize, k: usize| u.values[j * d + k];
    match order {
        1 => {
            for k in 0..d {
                out.values[k] = (-3.0 * v(0, k) + 4.0 * v(1, k) - v(2, k)) / (2.0 * h);
                out.values[n * d + k] = (3.0 * v(n, k) - 4.0 * v(n - 1, k) + v(n - 2, k)) / (2.0 * h);
                for j in 1..n {
                    out.values[j * d + k] = (v(j + 1, k) - v(j - 1, k)) / (2.0 * h);
                }
            }
        }
        2 => {
            let h2 = h * h;
            for k in 0..d {
                out.values[k] = (2.0 * v(0, k) - 5.0 * v(1, k) + 4.0 * v(2, k) - v(3, k)) / h2;
                out.values[n * d + k] = (2.0 * v(n, k) - 5.0 * v(n - 1, k) + 4.0 * v(n - 2, k) - v(n - 3, k)) / h2;
                for j in 1..n {
                    out.values[j * d + k] = (v(j + 1, k) - 2.0 * v(j, k) + v(j - 1, k)) / h2;
                }
            }
        }
        _ => return Err(Error::InvalidParameter(format!("derivative order must be 1 or 2, got {order}"))),
    }
    Ok(out)
}

fn derivative(u: &GridFunction, k: u32) -> Result<GridFunction> {
    match k {
        0 => Ok(u.clone()),
        1 => finite_diff_derivative(u, 1),
        2 => finite_diff_derivative(u, 2),
        _ => Err(Error::InvalidParameter(format!("derivative order {k} not supported"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevParams {
    pub s: f64,
    pub k: u32,
    pub p: f64,
}

impl SobolevParams {
    pub fn new(s: f64, k: u32, p: f64) -> Result<Self> {
        let out = Self { s, k, p };
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::ExponentOutOfRange(format!("s must lie in (0,1), got {}", self.s)));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::ExponentOutOfRange(format!("p must lie in (1,inf), got {}", self.p)));
        }
        if self.s * self.p >= self.p + 1.0 {
            return Err(Error::ExponentOutOfRange("sp >= p + 1".into()));
        }
        if self.k > 2 {
            return Err(Error::InvalidParameter(format!("k must be at most 2, got {}", self.k)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seminorm {
    /// `[d^k u]_{W^{s,p}}`.
    pub value: f64,
    /// Estimated share of the p-th power carried by the excluded diagonal cells.
    pub diagonal_part: f64,
    /// Off-diagonal tensor trapezoid sum (p-th power).
    pub off_diagonal_part: f64,
}

/// Sobolev-Slobodetskii seminorm of the `k`-th derivative.
pub fn sobolev_seminorm(u: &GridFunction, params: SobolevParams) -> Result<Seminorm> {
    params.validate()?;
    let v = derivative(u, params.k)?;
    let g = u.grid;
    let n = g.len();
    let p = params.p;
    let expo = 1.0 + params.s * p;
    let off: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d: f64 = v.at(i).iter().zip(v.at(j)).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
                row += g.weight(j) * d.powf(p) / (g.node(i) - g.node(j)).abs().powf(expo);
            }
            g.weight(i) * row
        })
        .collect();
    let off: f64 = off.iter().sum();
    let alpha = p * (1.0 - params.s) - 1.0;
    let mut diag = 0.0;
    for i in 0..n {
        let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
        let slope = v.at(a).iter().zip(v.at(b)).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
            / (g.node(b) - g.node(a));
        let w = g.weight(i);
        diag += slope.powf(p) * 2.0 * w.powf(alpha + 2.0) / ((alpha + 1.0) * (alpha + 2.0));
    }
    Ok(Seminorm { value: (off + diag).powf(1.0 / p), diagonal_part: diag, off_diagonal_part: off })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolevNorm {
    /// `sum_{m <= k} ||d^m u||_p + [d^k u]_{W^{s,p}}`.
    pub value: f64,
    pub integer_part: f64,
    pub seminorm: Seminorm,
    /// Vanishing-trace flags `d^m u(0) = 0`, one per required order.
    pub traces: Vec<bool>,
    /// `int ||d^k u(x)||^p dx / x` when `s = 1/p`.
    pub hardy_weight: Option<f64>,
    /// All required traces vanish (and the weight is finite when `s = 1/p`).
    pub in_w0: bool,
}

/// Full `W^{k+s,p}` norm plus the vanishing-trace flags of the `W_0` space.
pub fn sobolev_norm(u: &GridFunction, params: SobolevParams) -> Result<SobolevNorm> {
    let seminorm = sobolev_seminorm(u, params)?;
    let mut integer_part = 0.0;
    let mut derivs = Vec::new();
    for m in 0..=params.k {
        let d = derivative(u, m)?;
        integer_part += d.lp_norm(params.p);
        derivs.push(d);
    }
    let tol_scale = 10.0 / (u.grid.intervals() as f64).powi(2);
    let required = if params.s * params.p > 1.0 { params.k as usize + 1 } else { params.k as usize };
    let traces: Vec<bool> = derivs
        .iter()
        .take(required)
        .map(|d| d.node_norm(0) <= tol_scale * d.sup_norm())
        .collect();
    let hardy_weight = if (params.s * params.p - 1.0).abs() < 1e-12 {
        let v = &derivs[params.k as usize];
        let g = u.grid;
        if v.node_norm(0) > tol_scale * v.sup_norm() {
            Some(f64::INFINITY)
        } else {
            let h = g.step();
            let slope = v.node_norm(1) / h;
            let mut w = slope.powf(params.p) * h.powf(params.p) / params.p;
            for j in 1..g.len() {
                let wt = if j == 1 || j == g.intervals() { 0.5 * h } else { h };
                w += wt * v.node_norm(j).powf(params.p) / g.node(j);
            }
            Some(w)
        }
    } else {
        None
    };
    let in_w0 = traces.iter().all(|&t| t) && hardy_weight.is_none_or(f64::is_finite);
    Ok(SobolevNorm { value: integer_part + seminorm.value, integer_part, seminorm, traces, hardy_weight, in_w0 })
}
