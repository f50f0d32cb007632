use opcontour_core::cauchy::{
    j_operator_apply, solve_schrodinger, solve_wave, CauchyProblem, ContourSpec, ProblemKind, Sign,
};
use opcontour_core::linop::ModelOperator;
use opcontour_core::semilinear::{fixed_point_solve, ode_oracle, Coefficient, FixedPointConfig, PolynomialNonlinearity};
use opcontour_core::time::{b_inverse_apply, b_resolvent_apply, brnd_bound, GridFunction, TimeGrid};
use opcontour_core::{Complex64, Error};

fn grid(n: usize) -> TimeGrid {
    TimeGrid::new(1.0, n).unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `V diag(1, 2) V^{-1}` with a fixed non-normal `V`.
fn similar_pair() -> (ModelOperator, ModelOperator, ModelOperator) {
    let d = ModelOperator::real_diagonal(&[1.0, 2.0]).unwrap();
    let v = ModelOperator::dense(2, &[c(1.0, 0.0), c(0.5, 0.2), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let a = v.compose(&d).compose(&v.inverse().unwrap());
    (d, a, v)
}

fn forcing(g: TimeGrid) -> GridFunction {
    GridFunction::from_fn(g, 2, |t| vec![c(t * t, 0.0), c(0.0, t * t * t)])
}

#[test]
fn wave_solution_commutes_with_similarity() {
    let (d, a, v) = similar_pair();
    let g = grid(256);
    let f = forcing(g);
    let vinv = v.inverse().unwrap();
    let solve = |op: &ModelOperator, rhs: GridFunction| {
        let p = CauchyProblem::new(op.clone(), Sign::Plus, rhs, ProblemKind::Wave, ContourSpec::auto()).unwrap();
        solve_wave(&p).unwrap().u
    };
    let direct = solve(&a, f.clone());
    let via_diag = solve(&d, f.apply_operator(&vinv).unwrap()).apply_operator(&v).unwrap();
    assert!(direct.sub(&via_diag).unwrap().sup_norm() < 1e-6 * (1.0 + direct.sup_norm()));
}

#[test]
fn schrodinger_commutes_with_similarity() {
    let (d, a, v) = similar_pair();
    let g = grid(256);
    let f = forcing(g);
    let vinv = v.inverse().unwrap();
    let solve = |op: &ModelOperator, rhs: GridFunction| {
        let p = CauchyProblem::new(op.clone(), Sign::Minus, rhs, ProblemKind::Schrodinger, ContourSpec::auto()).unwrap();
        solve_schrodinger(&p).unwrap()
    };
    let direct = solve(&a, f.clone());
    assert!(direct.residual < 1e-3);
    let via_diag = solve(&d, f.apply_operator(&vinv).unwrap()).u.apply_operator(&v).unwrap();
    assert!(direct.u.sub(&via_diag).unwrap().sup_norm() < 1e-6 * (1.0 + direct.u.sup_norm()));
}

#[test]
fn j_operator_is_linear() {
    let (_, a, _) = similar_pair();
    let g = grid(128);
    let f1 = forcing(g);
    let f2 = GridFunction::from_fn(g, 2, |t| vec![c(t.sin(), 0.0), c(t, t)]);
    let (s1, s2) = (c(0.3, -1.2), c(2.0, 0.5));
    let contour = ContourSpec::fixed(0.5, 200.0, 4000).unwrap();
    let j = |f: &GridFunction| j_operator_apply(&a, Sign::Minus, f, &contour).unwrap().value;
    let lhs = j(&f1.scale(s1).axpy(s2, &f2).unwrap());
    let rhs = j(&f1).scale(s1).axpy(s2, &j(&f2)).unwrap();
    assert!(lhs.sub(&rhs).unwrap().sup_norm() < 1e-10 * (1.0 + lhs.sup_norm()));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (_, a, _) = similar_pair();
    let g = grid(128);
    let f = forcing(g);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            j_operator_apply(&a, Sign::Plus, &f, &ContourSpec::auto()).unwrap().value.into_values()
        })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn b_resolvent_oracles() {
    let g = grid(64);
    // (d/dt + 2) w = 1, w(0) = 0
    let w = b_resolvent_apply(c(2.0, 0.0), &GridFunction::from_real_fn(g, |_| 1.0));
    assert!((w.last()[0].re - (1.0 - (-2f64).exp()) / 2.0).abs() < 1e-12);
    let v = b_inverse_apply(&GridFunction::from_real_fn(g, |t| t));
    assert!((v.last()[0].re - 0.5).abs() < 1e-12);
    assert!((brnd_bound(c(2.0, 7.0), 1.0) - (1.0 - (-2f64).exp()) / 2.0).abs() < 1e-15);
    assert_eq!(brnd_bound(c(0.0, 3.0), 2.0), 2.0);
}

#[test]
fn csv_round_trip_is_exact() {
    let f = forcing(grid(33)).map(|z| z * c(1.0 / 3.0, std::f64::consts::PI));
    let back = GridFunction::from_csv(&f.to_csv()).unwrap();
    assert_eq!(back.values(), f.values());
    assert_eq!(back.grid().intervals(), 33);
}

#[test]
fn semilinear_agrees_with_oracle_on_dense_operator() {
    let (_, a, _) = similar_pair();
    let g = grid(256);
    let f = PolynomialNonlinearity::new(Coefficient::poly(&[0.0, 1.0]), vec![Coefficient::poly(&[0.0]), Coefficient::poly(&[0.2])]);
    let (b, trace) = fixed_point_solve(&a, &f, &FixedPointConfig::default(), &ContourSpec::auto(), g).unwrap();
    assert!(trace.converged);
    let o = ode_oracle(&a, &f, g, 8).unwrap();
    assert!(b.u.sub(&o).unwrap().sup_norm() < 1e-3 * (1.0 + o.sup_norm()));
}

#[test]
fn dimension_mismatch_is_reported() {
    let a = ModelOperator::real_diagonal(&[1.0, 2.0, 3.0]).unwrap();
    let f = forcing(grid(16));
    let r = CauchyProblem::new(a, Sign::Plus, f, ProblemKind::Wave, ContourSpec::auto());
    assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
}
