//! Acceptance suite: one `criterion N: PASS|FAIL` line per criterion.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use opcontour_core::cauchy::{
    default_offset, double_contour_wave_apply, fourier_line_apply, inverse_composition_check, solve_schrodinger,
    solve_wave, wave_apply, CauchyProblem, ContourSpec, ProblemKind, Sign, Truncation,
};
use opcontour_core::classes::{
    balakrishnan_power, decomposition_residual, estimate_r_bound, log_log_slope, pv_projection, RBoundMode,
    RademacherTrialSpec, RayQuadrature,
};
use opcontour_core::linop::{matrix_function_oracle, ModelOperator, VectorNormSpec};
use opcontour_core::semilinear::{
    fixed_point_solve, ode_oracle, shrinking_horizon_search, stability_constant_sweep, Coefficient,
    FixedPointConfig, PolynomialNonlinearity,
};
use opcontour_core::time::{sobolev_seminorm, verify_brnd, GridFunction, SobolevParams, TimeGrid};
use opcontour_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String)>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn grid(t: f64) -> TimeGrid {
    TimeGrid::new(t, 512).unwrap()
}

fn unit_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// `V D V^{-1}` with `V = I + 0.3 G`.
fn similar(rng: &mut ChaCha8Rng, spectrum: &[Complex64]) -> Result<ModelOperator> {
    let n = spectrum.len();
    let entries: Vec<Complex64> = (0..n * n)
        .map(|k| if k / n == k % n { c(1.0, 0.0) } else { c(0.0, 0.0) } + unit_complex(rng) * 0.3)
        .collect();
    let v = ModelOperator::dense(n, &entries)?;
    let d = ModelOperator::diagonal(spectrum)?;
    ModelOperator::from_matrix(v.compose(&d).compose(&v.inverse()?).to_matrix())
}

/// Random operator with `||A|| <= 4` and a small imaginary spectral part.
fn random_operator(rng: &mut ChaCha8Rng) -> Result<ModelOperator> {
    let dim = rng.random_range(1..=3);
    let spec: Vec<Complex64> = (0..dim).map(|_| c(rng.random_range(0.0..2.5), rng.random_range(-0.3..0.3))).collect();
    let a = if rng.random::<bool>() { ModelOperator::diagonal(&spec)? } else { similar(rng, &spec)? };
    if a.norm2() > 4.0 {
        return Ok(a.scale(c(4.0 / a.norm2(), 0.0)));
    }
    Ok(a)
}

/// `t^2 (a + b t) e^{i w t}` per component.
fn random_forcing(rng: &mut ChaCha8Rng, g: TimeGrid, dim: usize) -> GridFunction {
    let coef: Vec<(Complex64, Complex64, f64)> =
        (0..dim).map(|_| (unit_complex(rng), unit_complex(rng), rng.random_range(-3.0..3.0))).collect();
    GridFunction::from_fn(g, dim, |t| coef.iter().map(|(a, b, w)| (a + b * t) * t * t * c(0.0, w * t).exp()).collect())
}

fn rel(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    let s = a.lp_norm(2.0).max(b.lp_norm(2.0));
    Ok(if s > 0.0 { a.sub(b)?.lp_norm(2.0) / s } else { 0.0 })
}

fn criterion_1() -> Outcome {
    let a = ModelOperator::real_diagonal(&[1.0, 4.0])?;
    let q = RayQuadrature::default();
    let mut worst: f64 = 0.0;
    let mut pows = Vec::new();
    for th in [0.25, 0.5, 0.75] {
        let p = balakrishnan_power(&a, th, &q)?.operator;
        worst = worst.max(p.distance(&matrix_function_oracle(&a, |z| z.powf(-th))?));
        pows.push(p);
    }
    let semigroup = pows[0].compose(&pows[1]).distance(&pows[2]);
    Ok((worst <= 1e-6 && semigroup <= 1e-6, format!("oracle_error={worst:.3e} semigroup_residual={semigroup:.3e}")))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q = RayQuadrature::default();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let dim = rng.random_range(1..=4);
        let spec: Vec<Complex64> =
            (0..dim).map(|_| Complex64::from_polar(rng.random_range(0.5..4.0), rng.random_range(-PI / 4.0..PI / 4.0))).collect();
        let a = similar(&mut rng, &spec)?;
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let lam = Complex64::from_polar(rng.random_range(0.5..5.0), sign * rng.random_range(0.3..PI / 2.0));
        let theta = rng.random_range(0.1..0.9);
        worst = worst.max(decomposition_residual(&a, lam, theta, &q)?);
    }
    Ok((worst <= 1e-6, format!("max_residual={worst:.3e} operators=50")))
}

fn criterion_3() -> Outcome {
    let one = c(1.0, 0.0);
    let cases = [
        (ModelOperator::real_diagonal(&[2.0])?, vec![one]),
        (ModelOperator::real_diagonal(&[1.0, 3.0])?, vec![one, one]),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (k, (a, u)) in cases.iter().enumerate() {
        let rs = [1e2, 1e3, 1e4];
        let errs = rs
            .iter()
            .map(|&r| {
                let v = pv_projection(a, 0.0, u, r, (4.0 * r) as usize)?;
                Ok(v.iter().zip(u).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt())
            })
            .collect::<Result<Vec<f64>>>()?;
        let slope = log_log_slope(&rs, &errs);
        ok &= errs[1] <= 1e-2 && (slope + 1.0).abs() <= 0.2;
        detail.push(format!("case{k}: err(1e3)={:.3e} slope={slope:.3}", errs[1]));
    }
    Ok((ok, detail.join(" ")))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = grid(1.0);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for _ in 0..100 {
        let lam = c(rng.random_range(-5.0..5.0), rng.random_range(-20.0..20.0));
        let r = verify_brnd(lam, g, 16, 2.0, rng.random())?;
        worst = worst.max(r.ratio);
        ok &= r.pass;
    }
    Ok((ok, format!("max_ratio={worst:.6} allowed={:.6}", 1.0 + 10.0 / 512.0)))
}

fn criterion_5() -> Outcome {
    let g = grid(1.0);
    let prm = SobolevParams::new(0.5, 0, 2.0)?;
    let s = sobolev_seminorm(&GridFunction::from_real_fn(g, |t| t), prm)?.value;
    let z = sobolev_seminorm(&GridFunction::from_real_fn(g, |_| 3.0), prm)?.value;
    Ok(((s - 1.0).abs() <= 0.02 && z == 0.0, format!("seminorm(t)={s:.6} seminorm(const)={z}")))
}

fn residual_of(r: Result<opcontour_core::cauchy::SolutionBundle>) -> Result<f64> {
    match r {
        Ok(b) => Ok(b.residual),
        Err(Error::ResidualTooLarge(b)) => Ok(b.residual),
        Err(e) => Err(e),
    }
}

fn criterion_6() -> Outcome {
    let g = grid(1.0);
    let one = ModelOperator::real_diagonal(&[1.0])?;
    let f = GridFunction::from_real_fn(g, |_| 1.0);
    let b = solve_schrodinger(&CauchyProblem::new(one, Sign::Plus, f, ProblemKind::Schrodinger, ContourSpec::auto())?)?;
    let oracle_err = (b.u.last()[0] - (c(0.0, -1.0).exp() - 1.0)).norm();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let a = random_operator(&mut rng)?;
        let f = random_forcing(&mut rng, g, a.dim());
        let sign = if k % 2 == 0 { Sign::Plus } else { Sign::Minus };
        let cp = CauchyProblem::new(a, sign, f, ProblemKind::Schrodinger, ContourSpec::auto())?;
        worst = worst.max(residual_of(solve_schrodinger(&cp))?);
    }
    Ok((oracle_err <= 1e-2 && worst <= 1e-3, format!("oracle_error={oracle_err:.3e} max_residual={worst:.3e} problems=10")))
}

fn criterion_7() -> Outcome {
    let g = grid(1.0);
    let wave = |a: ModelOperator, f: GridFunction| -> Result<opcontour_core::cauchy::SolutionBundle> {
        solve_wave(&CauchyProblem::new(a, Sign::Plus, f, ProblemKind::Wave, ContourSpec::auto())?)
    };
    let b = wave(ModelOperator::real_diagonal(&[1.0])?, GridFunction::from_real_fn(g, |_| 1.0))?;
    let scalar = (b.u.last()[0].re - 0.459698).abs();
    let b = wave(
        ModelOperator::real_diagonal(&[1.0, 2.0])?,
        GridFunction::from_fn(g, 2, |_| vec![c(1.0, 0.0); 2]),
    )?;
    let mut duhamel: f64 = 0.0;
    for j in 0..g.len() {
        let t = g.node(j);
        duhamel = duhamel
            .max((b.u.at(j)[0] - (1.0 - t.cos())).norm())
            .max((b.u.at(j)[1] - (1.0 - (2.0 * t).cos()) / 4.0).norm());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let a = random_operator(&mut rng)?;
        let f = random_forcing(&mut rng, g, a.dim());
        worst = worst.max(residual_of(wave(a, f))?);
    }
    Ok((
        scalar <= 1e-3 && duhamel <= 1e-3 && worst <= 1e-3,
        format!("u(1)_error={scalar:.3e} duhamel_error={duhamel:.3e} max_residual={worst:.3e} problems=10"),
    ))
}

fn criterion_8() -> Outcome {
    let g = grid(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let a = random_operator(&mut rng)?;
        let f = random_forcing(&mut rng, g, a.dim());
        let auto = ContourSpec::auto();
        let line = wave_apply(&a, &f, &auto)?.value;
        let double = double_contour_wave_apply(&a, &f, &auto, &auto)?.value;
        let gamma = default_offset(&a);
        let inner = fourier_line_apply(&a, Sign::Minus, &f, gamma, &Truncation::Adaptive)?.value;
        let fourier = fourier_line_apply(&a, Sign::Plus, &inner, gamma, &Truncation::Adaptive)?.value;
        worst = worst.max(rel(&line, &double)?).max(rel(&line, &fourier)?).max(rel(&double, &fourier)?);
    }
    Ok((worst <= 1e-3, format!("max_pairwise_relative={worst:.3e} problems=20")))
}

fn criterion_9() -> Outcome {
    let g = grid(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let a = random_operator(&mut rng)?;
        let f = random_forcing(&mut rng, g, a.dim());
        worst = worst.max(inverse_composition_check(&a, &f, &ContourSpec::auto())?);
    }
    Ok((worst <= 1e-3, format!("max_relative={worst:.3e} problems=10")))
}

fn poly(coeffs: &[f64]) -> Coefficient {
    Coefficient::poly(coeffs)
}

/// `c_0 = s t^2`, `c_k = a_k + b_k t` with `|a_k| + |b_k| <= 0.2`.
fn mild(rng: &mut ChaCha8Rng) -> PolynomialNonlinearity {
    let d = rng.random_range(1..=3);
    let terms = (0..d)
        .map(|_| {
            let a = rng.random_range(-0.1..0.1);
            let b = rng.random_range(-0.1..0.1);
            poly(&[a, b])
        })
        .collect();
    PolynomialNonlinearity::new(poly(&[0.0, 0.0, rng.random_range(0.5..1.0)]), terms)
}

fn mild_operator(rng: &mut ChaCha8Rng) -> Result<ModelOperator> {
    let dim = rng.random_range(1..=2);
    let spec: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..4.0)).collect();
    ModelOperator::real_diagonal(&spec)
}

fn criterion_10() -> Outcome {
    let cfg = FixedPointConfig::default();
    let auto = ContourSpec::auto();
    let one = ModelOperator::real_diagonal(&[1.0])?;
    let lin = PolynomialNonlinearity::new(poly(&[0.0, 0.0, 1.0]), vec![]);
    let (b, _) = fixed_point_solve(&one, &lin, &cfg, &auto, grid(1.0))?;
    let lin_err = (b.u.last()[0].re - 0.080605).abs();

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    let mut converged = 0;
    for _ in 0..6 {
        let a = mild_operator(&mut rng)?;
        let f = mild(&mut rng);
        let g = grid(rng.random_range(0.5..1.0));
        if let Ok((b, _)) = fixed_point_solve(&a, &f, &cfg, &auto, g) {
            let o = ode_oracle(&a, &f, g, 8)?;
            worst = worst.max(b.u.sub(&o)?.sup_norm() / (1.0 + b.u.sup_norm()));
            converged += 1;
        }
    }

    let mut stress_ok = true;
    let mut max_m = 0;
    let mut stress = Vec::new();
    for _ in 0..3 {
        let c2 = rng.random_range(20.0..50.0);
        let t = rng.random_range(2.5..4.0);
        let f = PolynomialNonlinearity::new(poly(&[0.0, 0.0, 1.0]), vec![poly(&[0.0]), poly(&[c2])]);
        let blew_up = matches!(ode_oracle(&one, &f, grid(t), 8), Err(Error::OverflowDetected { .. }));
        let exited = matches!(fixed_point_solve(&one, &f, &cfg, &auto, grid(t)), Err(e) if e.trace().is_some());
        let search = shrinking_horizon_search(&one, &f, &cfg, &auto, t, 512, 6)?;
        match search.converged {
            Some((m, _)) => max_m = max_m.max(m),
            None => stress_ok = false,
        }
        stress_ok &= blew_up && exited;
        stress.push(format!("(c2={c2:.1},T={t:.2},overflow={blew_up},trace_exit={exited})"));
    }
    Ok((
        lin_err <= 1e-3 && converged == 6 && worst <= 1e-3 && stress_ok,
        format!(
            "linear_u(1)_error={lin_err:.3e} converged={converged}/6 max_oracle_gap={worst:.3e} stress_ok={stress_ok} max_halvings={max_m} stress={}",
            stress.join("")
        ),
    ))
}

fn criterion_11() -> Outcome {
    let hs = [1.0, 0.5, 0.25, 0.125];
    let cfg = FixedPointConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cases = vec![(
        ModelOperator::real_diagonal(&[1.0])?,
        PolynomialNonlinearity::new(poly(&[0.0, 0.0, 1.0]), vec![]),
    )];
    for _ in 0..2 {
        cases.push((mild_operator(&mut rng)?, mild(&mut rng)));
    }
    let mut ok = true;
    let mut spreads = Vec::new();
    for (a, f) in &cases {
        let r = stability_constant_sweep(a, f, &hs, 512, &ContourSpec::auto(), &cfg)?;
        ok &= r.pass;
        spreads.push(format!("{:.3}", r.spread));
    }
    Ok((ok, format!("spreads=[{}] allowed=10", spreads.join(","))))
}

fn criterion_12() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut ok = true;
    let mut worst_low: f64 = f64::INFINITY;
    let mut worst_excess: f64 = f64::NEG_INFINITY;
    for k in 0..10 {
        let size = rng.random_range(1..=6);
        let fam = (0..size)
            .map(|_| {
                let dim = 2;
                let spec: Vec<Complex64> = (0..dim).map(|_| unit_complex(&mut rng) * 3.0).collect();
                similar(&mut rng, &spec)
            })
            .collect::<Result<Vec<_>>>()?;
        let n = if k % 2 == 0 { 4 } else { 12 };
        let spec = RademacherTrialSpec { n, trials: 20, seed: k, ..Default::default() };
        let r = estimate_r_bound(&fam, &spec, VectorNormSpec::euclidean())?;
        let sup = r.sup_norm.unwrap_or(f64::INFINITY);
        worst_excess = worst_excess.max(r.estimate - sup);
        ok &= r.estimate <= sup + 1e-8;
        if r.mode == RBoundMode::Exhaustive {
            worst_low = worst_low.min(r.estimate / sup);
            ok &= r.estimate >= 0.98 * sup;
        }
    }
    Ok((ok, format!("max(estimate-sup)={worst_excess:.3e} min_exhaustive_ratio={worst_low:.4}")))
}

fn criterion_13() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let bin = env!("CARGO_BIN_EXE_opcontour");
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let report = dir.path().join(format!("report_{threads}.txt"));
        let file = dir.path().join(format!("verify_{threads}.json"));
        let json = format!(
            r#"{{"operator": {{"kind": "dense", "dim": 2, "entries": [1, [0.5, 0.1], 0, 2]}},
                "problem": {{"kind": "wave", "T": 1.0, "N": 512}},
                "contour": "auto", "seed": 13,
                "output": {{"report": "{}"}}}}"#,
            report.display()
        );
        std::fs::write(&file, json).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let out = Command::new(bin)
            .args(["verify", file.to_str().unwrap(), "--threads", threads])
            .output()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let text = std::fs::read(&report).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        outputs.push((out.status.code(), out.stdout, text));
    }
    let same = outputs[0] == outputs[1];
    Ok((same && outputs[0].0 == Some(0), format!("identical={same} exit={:?}", outputs[0].0)))
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 13] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
        (13, criterion_13),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, f) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n}: {} {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
