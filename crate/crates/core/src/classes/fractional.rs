use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linop::{matrix_function_oracle, ModelOperator};
use crate::sum::par_sum;
use crate::{Error, Result};

/// Trapezoid rule in `sigma = ln s` on `[ln s_min, ln s_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayQuadrature {
    pub nodes: usize,
    pub s_min: f64,
    pub s_max: f64,
}

impl Default for RayQuadrature {
    fn default() -> Self {
        Self { nodes: 400, s_min: 1e-8, s_max: 1e8 }
    }
}

impl RayQuadrature {
    pub fn new(nodes: usize, s_min: f64, s_max: f64) -> Result<Self> {
        if nodes < 2 || !(s_min > 0.0 && s_min < 1.0 && s_max > 1.0 && s_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ray quadrature needs nodes >= 2 and 0 < s_min < 1 < s_max, got {nodes}, {s_min}, {s_max}"
            )));
        }
        Ok(Self { nodes, s_min, s_max })
    }
}

/// Quadrature result for `A^{-theta}` or `Q_A(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalPower {
    pub operator: ModelOperator,
    /// Size of the truncated tails before the analytic correction.
    pub tail_bound: f64,
    /// Size of the first neglected tail terms after the correction.
    pub tail_residual: f64,
    pub nodes_used: usize,
    /// Relative change at the last node doubling.
    pub change: f64,
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::ExponentOutOfRange(format!("theta must lie in (0,1), got {theta}")))
    }
}

fn check_sectorial_spectrum(a: &ModelOperator) -> Result<()> {
    let scale = a.norm2().max(f64::MIN_POSITIVE);
    for mu in a.spectrum() {
        if mu.im.abs() <= 1e-12 * scale && mu.re <= 1e-12 * scale {
            return Err(Error::NotSectorial { eigenvalue: mu });
        }
    }
    Ok(())
}

fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    m.singular_values().max()
}

type Pair = (DMatrix<Complex64>, DMatrix<Complex64>);

/// Trapezoid sum of `int s^{-theta} W(s) ds` with an Euler-Maclaurin endpoint
/// correction. `w(s)` returns `W(s)` and `W'(s)`.
fn ray_sum<F>(dim: usize, quad: &RayQuadrature, theta: f64, nodes: usize, w: &F) -> Result<DMatrix<Complex64>>
where
    F: Fn(f64) -> Result<Pair> + Sync,
{
    let (a, b) = (quad.s_min.ln(), quad.s_max.ln());
    let h = (b - a) / (nodes - 1) as f64;
    let sigma = |k: usize| if k == nodes - 1 { b } else { a + k as f64 * h };
    let mut sum = par_sum(nodes, DMatrix::zeros(dim, dim), |k| {
        let s = sigma(k).exp();
        let wt = if k == 0 || k == nodes - 1 { 0.5 * h } else { h };
        Ok(w(s)?.0 * Complex64::new(wt * s.powf(1.0 - theta), 0.0))
    })?;
    let deriv = |sig: f64| -> Result<DMatrix<Complex64>> {
        let s = sig.exp();
        let (v, dv) = w(s)?;
        Ok(v * Complex64::new((1.0 - theta) * s.powf(1.0 - theta), 0.0) + dv * Complex64::new(s.powf(2.0 - theta), 0.0))
    };
    sum -= (deriv(b)? - deriv(a)?) * Complex64::new(h * h / 12.0, 0.0);
    Ok(sum)
}

fn converge<F>(dim: usize, quad: &RayQuadrature, theta: f64, w: &F) -> Result<(DMatrix<Complex64>, usize, f64)>
where
    F: Fn(f64) -> Result<Pair> + Sync,
{
    let mut nodes = quad.nodes;
    let mut prev = ray_sum(dim, quad, theta, nodes, w)?;
    let mut change = f64::INFINITY;
    for _ in 0..6 {
        nodes *= 2;
        let cur = ray_sum(dim, quad, theta, nodes, w)?;
        let scale = spectral_norm(&cur).max(f64::MIN_POSITIVE);
        change = spectral_norm(&(&cur - &prev)) / scale;
        if change <= 1e-6 {
            return Ok((cur, nodes, change));
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged { change })
}

fn wrap(a: &ModelOperator, m: DMatrix<Complex64>) -> ModelOperator {
    match a {
        ModelOperator::Diagonal(_) => ModelOperator::Diagonal((0..m.nrows()).map(|i| m[(i, i)]).collect()),
        ModelOperator::Dense(_) => ModelOperator::Dense(m),
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `A^{-theta} = (sin(pi theta)/pi) int_0^inf s^{-theta} (A+s)^{-1} ds`, with
/// the truncated tails replaced by their two-term asymptotic expansions.
pub fn balakrishnan_power(a: &ModelOperator, theta: f64, quad: &RayQuadrature) -> Result<FractionalPower> {
    check_theta(theta)?;
    check_sectorial_spectrum(a)?;
    let n = a.dim();
    let am = a.to_matrix();
    let w = |s: f64| -> Result<Pair> {
        let r = a.resolvent(c(s))?.to_matrix();
        let r2 = &r * &r;
        Ok((r, -r2))
    };
    let (body, nodes, change) = converge(n, quad, theta, &w)?;
    let inv = a.inverse()?.to_matrix();
    let inv2 = &inv * &inv;
    let (lo, hi) = (quad.s_min, quad.s_max);
    let eye = DMatrix::<Complex64>::identity(n, n);
    let lower = &inv * c(lo.powf(1.0 - theta) / (1.0 - theta)) - &inv2 * c(lo.powf(2.0 - theta) / (2.0 - theta));
    let upper = &eye * c(hi.powf(-theta) / theta) - &am * c(hi.powf(-theta - 1.0) / (theta + 1.0));
    let k = (PI * theta).sin() / PI;
    let total = (body + lower + upper) * c(k);
    let inv_n = spectral_norm(&inv);
    let tail_bound = k * (inv_n * lo.powf(1.0 - theta) / (1.0 - theta) + hi.powf(-theta) / theta);
    let tail_residual = k
        * (inv_n.powi(3) * lo.powf(3.0 - theta) / (3.0 - theta)
            + a.norm2().powi(2) * hi.powf(-theta - 2.0) / (theta + 2.0));
    Ok(FractionalPower { operator: wrap(a, total), tail_bound, tail_residual, nodes_used: nodes, change })
}

/// `Q_A(z) = (sin(pi theta)/pi) int_0^inf s^{-theta} (z-s)^{-1} (A+s)^{-1} ds`.
pub fn q_operator(a: &ModelOperator, z: Complex64, theta: f64, quad: &RayQuadrature) -> Result<FractionalPower> {
    check_theta(theta)?;
    if z.im.abs() <= 1e-14 * z.norm() && z.re >= 0.0 {
        return Err(Error::BranchCutViolation { z });
    }
    check_sectorial_spectrum(a)?;
    let n = a.dim();
    let am = a.to_matrix();
    let w = |s: f64| -> Result<Pair> {
        let r = a.resolvent(c(s))?.to_matrix();
        let q = (z - s).inv();
        let v = &r * q;
        let dv = &r * (q * q) - &r * &r * q;
        Ok((v, dv))
    };
    let (body, nodes, change) = converge(n, quad, theta, &w)?;
    let inv = a.inverse()?.to_matrix();
    let inv2 = &inv * &inv;
    let eye = DMatrix::<Complex64>::identity(n, n);
    let (lo, hi) = (quad.s_min, quad.s_max);
    let zi = z.inv();
    let lower = (&inv * c(lo.powf(1.0 - theta) / (1.0 - theta))
        + (&inv * zi - &inv2) * c(lo.powf(2.0 - theta) / (2.0 - theta)))
        * zi;
    let upper = -(&eye * c(hi.powf(-theta - 1.0) / (theta + 1.0))
        + (&eye * z - &am) * c(hi.powf(-theta - 2.0) / (theta + 2.0)));
    let k = (PI * theta).sin() / PI;
    let total = (body + lower + upper) * c(k);
    let inv_n = spectral_norm(&inv);
    let tail_bound = k * (inv_n * lo.powf(1.0 - theta) / ((1.0 - theta) * z.norm()) + hi.powf(-theta - 1.0) / (theta + 1.0));
    let tail_residual = k
        * (inv_n.powi(3).max(inv_n / z.norm_sqr()) * lo.powf(3.0 - theta) / z.norm()
            + (a.norm2() + z.norm()).powi(2) * hi.powf(-theta - 3.0));
    Ok(FractionalPower { operator: wrap(a, total), tail_bound, tail_residual, nodes_used: nodes, change })
}

/// `||(A+l)^{-1} A^{-theta} - (-l)^{-theta} (A+l)^{-1} - Q_A(l)|| / ||A^{-theta}||`
/// with `A^{-theta}` from the eigendecomposition oracle.
pub fn decomposition_residual(a: &ModelOperator, lambda: Complex64, theta: f64, quad: &RayQuadrature) -> Result<f64> {
    let q = q_operator(a, lambda, theta, quad)?;
    let pow = matrix_function_oracle(a, |z| z.powf(-theta))?;
    let r = a.resolvent(lambda)?;
    let lhs = r.compose(&pow);
    let rhs = r.scale((-lambda).powf(-theta)).add(&q.operator);
    Ok(lhs.distance(&rhs) / pow.norm2())
}

/// `A^{it}` on the principal branch.
pub fn imaginary_power_oracle(a: &ModelOperator, t: f64) -> Result<ModelOperator> {
    check_sectorial_spectrum(a)?;
    matrix_function_oracle(a, |z| (Complex64::new(0.0, t) * z.ln()).exp())
}

/// `(t, ||A^{it}||)` for `count` equally spaced `t` in `[-delta, delta]`.
pub fn imaginary_power_norms(a: &ModelOperator, delta: f64, count: usize) -> Result<Vec<(f64, f64)>> {
    let count = count.max(2);
    (0..count)
        .map(|k| {
            let t = -delta + 2.0 * delta * k as f64 / (count - 1) as f64;
            Ok((t, imaginary_power_oracle(a, t)?.norm2()))
        })
        .collect()
}
