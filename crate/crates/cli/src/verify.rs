//! Invariant checks run by `verify`, at the resolution of the problem file.

use num_complex::Complex64;
use opcontour_core::cauchy::{
    default_offset, double_contour_wave_apply, fourier_line_apply, inverse_composition_check, j_operator_apply,
    solve_schrodinger, solve_wave, wave_apply, CauchyProblem, ContourSpec, ProblemKind, SolutionBundle, Truncation,
};
use opcontour_core::classes::{
    balakrishnan_power, check_strip, estimate_r_bound, RademacherTrialSpec, RayQuadrature, StripRegion,
};
use opcontour_core::linop::{matrix_function_oracle, ModelOperator, VectorNormSpec};
use opcontour_core::semilinear::{fixed_point_solve, ode_oracle, Coefficient, FixedPointConfig, PolynomialNonlinearity};
use opcontour_core::time::{sobolev_seminorm, verify_brnd, GridFunction, SobolevParams, TimeGrid};
use opcontour_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Checks run when the file has no `checks` list.
pub const SUITE: &[&str] = &[
    "resolvent-identity",
    "brnd",
    "seminorm",
    "strip",
    "balakrishnan",
    "schrodinger-residual",
    "wave-residual",
    "inverse-composition",
    "method-agreement",
    "semilinear-oracle",
    "r-bound-hilbert",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
}

impl Measured {
    fn at_most(measured: f64, threshold: f64) -> Self {
        Self { pass: measured <= threshold, measured, threshold }
    }

    pub fn line(&self, name: &str) -> String {
        format!(
            "check.{name}={} measured={:.6e} threshold={:.6e}",
            if self.pass { "pass" } else { "fail" },
            self.measured,
            self.threshold
        )
    }
}

/// Smooth forcing with `f(0) = f'(0) = 0`.
fn smooth_forcing(grid: TimeGrid, dim: usize) -> GridFunction {
    GridFunction::from_fn(grid, dim, |t| {
        (0..dim).map(|k| Complex64::new(0.0, 1.0 + k as f64).scale(t).exp().scale(t * t)).collect()
    })
}

fn residual_of(r: Result<SolutionBundle>) -> Result<f64> {
    match r {
        Ok(b) => Ok(b.residual),
        Err(Error::ResidualTooLarge(b)) => Ok(b.residual),
        Err(e) => Err(e),
    }
}

fn relative(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    let d = a.sub(b)?.lp_norm(2.0);
    let s = a.lp_norm(2.0).max(b.lp_norm(2.0));
    Ok(if s > 0.0 { d / s } else { 0.0 })
}

pub fn run_check(name: &str, problem: &crate::schema::Problem) -> Result<Measured> {
    let a = &problem.operator;
    let grid = problem.grid;
    let dim = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    match name {
        "resolvent-identity" => {
            let id = ModelOperator::identity(dim);
            let mut worst: f64 = 0.0;
            for _ in 0..16 {
                let lam = Complex64::new(rng.random_range(1.0..10.0), rng.random_range(-10.0..10.0))
                    + Complex64::new(a.norm2(), 0.0);
                let r = a.resolvent(lam)?;
                worst = worst.max(a.shift(lam).compose(&r).distance(&id));
            }
            Ok(Measured::at_most(worst, 1e-10))
        }
        "brnd" => {
            let mut worst: f64 = 0.0;
            let mut slack = 0.0;
            for _ in 0..8 {
                let lam = Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(-20.0..20.0));
                let r = verify_brnd(lam, grid, 16, problem.p, rng.random())?;
                worst = worst.max(r.ratio);
                slack = r.slack;
            }
            Ok(Measured::at_most(worst, 1.0 + slack))
        }
        "seminorm" => {
            let g = TimeGrid::new(1.0, grid.intervals())?;
            let s = sobolev_seminorm(&GridFunction::from_real_fn(g, |t| t), SobolevParams::new(0.5, 0, 2.0)?)?;
            Ok(Measured::at_most((s.value - 1.0).abs(), 2e-2))
        }
        "strip" => {
            let c = problem.c.unwrap_or_else(|| default_offset(a));
            let r = check_strip(a, &StripRegion::default_for(a, c)?, f64::INFINITY);
            Ok(Measured { pass: r.pass, measured: r.k_hat, threshold: f64::INFINITY })
        }
        "balakrishnan" => {
            let d = ModelOperator::real_diagonal(&[1.0, 4.0])?;
            let p = balakrishnan_power(&d, 0.5, &RayQuadrature::default())?;
            let oracle = matrix_function_oracle(&d, |z| z.powf(-0.5))?;
            Ok(Measured::at_most(p.operator.distance(&oracle), 1e-6))
        }
        "schrodinger-residual" => {
            let cp = CauchyProblem::new(
                a.clone(),
                problem.sign,
                smooth_forcing(grid, dim),
                ProblemKind::Schrodinger,
                problem.contour,
            )?;
            Ok(Measured::at_most(residual_of(solve_schrodinger(&cp))?, 1e-3))
        }
        "wave-residual" => {
            let cp =
                CauchyProblem::new(a.clone(), problem.sign, smooth_forcing(grid, dim), ProblemKind::Wave, problem.contour)?;
            Ok(Measured::at_most(residual_of(solve_wave(&cp))?, 1e-3))
        }
        "inverse-composition" => {
            Ok(Measured::at_most(inverse_composition_check(a, &smooth_forcing(grid, dim), &problem.contour)?, 1e-3))
        }
        "method-agreement" => {
            let f = smooth_forcing(grid, dim);
            let line = j_operator_apply(a, problem.sign, &f, &problem.contour)?.value;
            let gamma = default_offset(a);
            let fourier = fourier_line_apply(a, problem.sign, &f, gamma, &Truncation::Adaptive)?.value;
            let wave = wave_apply(a, &f, &problem.contour)?.value;
            let double = double_contour_wave_apply(a, &f, &problem.contour, &ContourSpec::auto())?.value;
            let worst = relative(&line, &fourier)?.max(relative(&wave, &double)?);
            Ok(Measured::at_most(worst, 1e-3))
        }
        "semilinear-oracle" => {
            let f = PolynomialNonlinearity::new(
                Coefficient::poly(&[0.0, 0.0, 1.0]),
                vec![Coefficient::poly(&[0.0]), Coefficient::poly(&[0.1])],
            );
            let (b, _) = fixed_point_solve(a, &f, &FixedPointConfig::default(), &problem.contour, grid)?;
            let o = ode_oracle(a, &f, grid, 8)?;
            let u = b.u.sup_norm();
            Ok(Measured::at_most(b.u.sub(&o)?.sup_norm() / (1.0 + u), 1e-3))
        }
        "r-bound-hilbert" => {
            let c = default_offset(a);
            let fam = (0..8)
                .map(|k| a.resolvent(Complex64::new(0.0, c * (1.0 + k as f64))))
                .collect::<Result<Vec<_>>>()?;
            let spec = RademacherTrialSpec { seed: problem.seed, trials: 20, ..Default::default() };
            let r = estimate_r_bound(&fam, &spec, VectorNormSpec::euclidean())?;
            let sup = r.sup_norm.unwrap_or(f64::INFINITY);
            Ok(Measured { pass: r.estimate <= sup + 1e-8, measured: r.estimate, threshold: sup + 1e-8 })
        }
        other => Err(Error::InvalidParameter(format!("unknown check {other:?}"))),
    }
}
