use std::time::Instant;

use opcontour_core::cauchy::{default_offset, solve_schrodinger, solve_wave, CauchyProblem, ProblemKind};
use opcontour_core::classes::{
    check_parabola, check_r_parabola, check_r_strip, check_sectorial, check_strip, check_strip_decay,
    strip_parabola_equivalence, ClassificationReport, ParabolaRegion, RademacherTrialSpec, SectorRegion,
    StripRegion,
};
use opcontour_core::linop::principal_sqrt;
use opcontour_core::semilinear::fixed_point_solve;
use opcontour_core::Error;

use crate::schema::{Problem, ProblemKindJson};
use crate::verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok,
    Warning,
    Failed,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Warning => "warning",
            Status::Failed => "failed",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Warning => 1,
            Status::Failed => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub allow_trace_warnings: bool,
}

/// Flattened outcome of one run. Timings are kept apart from `lines` so the
/// report itself stays reproducible.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub verb: &'static str,
    pub status: Status,
    pub lines: Vec<String>,
    pub csv: Option<String>,
    pub timings: Vec<(String, u128)>,
}

impl RunReport {
    fn new(verb: &'static str) -> Self {
        Self { verb, status: Status::Ok, lines: Vec::new(), csv: None, timings: Vec::new() }
    }

    fn raise(&mut self, s: Status) {
        self.status = self.status.max(s);
    }

    fn error(&mut self, prefix: &str, e: &Error) {
        self.lines.push(format!("{prefix}.error={e}"));
        self.raise(Status::Failed);
    }

    /// Report text: status first, then every sub-report line.
    pub fn render(&self) -> String {
        let mut out = format!("verb={}\nstatus={}\nexit_code={}\n", self.verb, self.status.name(), self.status.exit_code());
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        out
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let v = f();
        self.timings.push((stage.to_string(), start.elapsed().as_millis()));
        v
    }
}

pub fn run_classify(problem: &Problem) -> RunReport {
    let mut rep = RunReport::new("classify");
    let a = &problem.operator;
    let c = problem.c.unwrap_or_else(|| default_offset(a));
    let checks = problem.checks.clone().unwrap_or_else(|| vec!["strip".into()]);
    let trial = RademacherTrialSpec { seed: problem.seed, ..Default::default() };
    for name in &checks {
        let prefix = format!("classify.{name}");
        let outcome: Result<Vec<String>, Error> = rep.time(name, || match name.as_str() {
            "sectorial" => SectorRegion::default_for(a, problem.phi)
                .map(|r| report_lines(&check_sectorial(a, &r, problem.k_max), &prefix)),
            "strip" => StripRegion::default_for(a, c).map(|r| report_lines(&check_strip(a, &r, problem.k_max), &prefix)),
            "strip-decay" => {
                StripRegion::decay_ladder(a, c, 8).map(|r| report_lines(&check_strip_decay(a, &r), &prefix))
            }
            "parabola" => principal_sqrt(a).and_then(|root| {
                let r = ParabolaRegion::default_for(a, c)?;
                Ok(report_lines(&check_parabola(a, &r, problem.k_max, &root)?, &prefix))
            }),
            "r-strip" => StripRegion::with_density(a, c, 4)
                .and_then(|r| Ok(report_lines(&check_r_strip(a, &r, problem.k_max, &trial)?, &prefix))),
            "r-parabola" => ParabolaRegion::with_density(a, c, 4)
                .and_then(|r| Ok(report_lines(&check_r_parabola(a, &r, problem.k_max, &trial)?, &prefix))),
            "strip-parabola" => strip_parabola_equivalence(a, c, 32, problem.seed).map(|r| {
                vec![
                    format!("{prefix}.split_identity_defect={:.10e}", r.split_identity_defect),
                    format!("{prefix}.strip_constant={:.10e}", r.strip_constant),
                    format!("{prefix}.parabola_constant={:.10e}", r.parabola_constant),
                    format!("{prefix}.parabola_a_constant={:.10e}", r.parabola_a_constant),
                    format!("{prefix}.worst_ratio={:.10e}", r.worst_ratio),
                    format!("{prefix}.pass={}", r.holds),
                ]
            }),
            other => Err(Error::InvalidParameter(format!("unknown class check {other:?}"))),
        });
        match outcome {
            Ok(lines) => {
                if lines.iter().any(|l| l.ends_with(".pass=false")) {
                    rep.raise(Status::Failed);
                }
                rep.lines.extend(lines);
            }
            Err(e) => rep.error(&prefix, &e),
        }
    }
    rep
}

fn report_lines(r: &ClassificationReport, prefix: &str) -> Vec<String> {
    r.to_kv(prefix)
}

fn apply_warnings(rep: &mut RunReport, warnings: &[String], opts: RunOptions) {
    for (k, w) in warnings.iter().enumerate() {
        rep.lines.push(format!("warning_{k}={w}"));
    }
    let trace = warnings.iter().any(|w| w.starts_with("trace"));
    if trace && !opts.allow_trace_warnings {
        rep.lines.push("trace_warnings_allowed=false".into());
        rep.raise(Status::Failed);
    } else if !warnings.is_empty() {
        rep.raise(Status::Warning);
    }
}

pub fn run_solve(problem: &Problem, opts: RunOptions) -> RunReport {
    let mut rep = RunReport::new("solve");
    let a = &problem.operator;
    match problem.kind {
        ProblemKindJson::Classify => {
            rep.lines.push("solve.error=problem kind classify has nothing to solve".into());
            rep.raise(Status::Failed);
        }
        ProblemKindJson::Schrodinger | ProblemKindJson::Wave => {
            let kind =
                if problem.kind == ProblemKindJson::Wave { ProblemKind::Wave } else { ProblemKind::Schrodinger };
            let f = match problem_forcing(problem) {
                Ok(f) => f,
                Err(e) => {
                    rep.error("solve", &e);
                    return rep;
                }
            };
            let outcome = rep.time("solve", || {
                let cp = CauchyProblem::new(a.clone(), problem.sign, f, kind, problem.contour)?;
                match kind {
                    ProblemKind::Wave => solve_wave(&cp),
                    ProblemKind::Schrodinger => solve_schrodinger(&cp),
                }
            });
            match outcome {
                Ok(b) => {
                    rep.lines.extend(b.to_kv("solution"));
                    let warnings = b.warnings.clone();
                    rep.csv = Some(b.u.to_csv());
                    apply_warnings(&mut rep, &warnings, opts);
                }
                Err(Error::ResidualTooLarge(b)) => {
                    rep.lines.extend(b.to_kv("solution"));
                    rep.error("solve", &Error::ResidualTooLarge(b.clone()));
                }
                Err(e) => rep.error("solve", &e),
            }
        }
        ProblemKindJson::Semilinear => {
            let (f, cfg) = problem.nonlinearity.as_ref().expect("validated semilinear problem");
            let outcome = rep.time("fixed_point", || fixed_point_solve(a, f, cfg, &problem.contour, problem.grid));
            match outcome {
                Ok((b, trace)) => {
                    rep.lines.extend(b.to_kv("solution"));
                    rep.lines.extend(trace.to_kv("iteration"));
                    let warnings = b.warnings.clone();
                    rep.csv = Some(b.u.to_csv());
                    apply_warnings(&mut rep, &warnings, opts);
                }
                Err(e) => {
                    if let Some(t) = e.trace() {
                        rep.lines.extend(t.to_kv("iteration"));
                    }
                    if let Error::ResidualTooLarge(b) = &e {
                        rep.lines.extend(b.to_kv("solution"));
                    }
                    rep.error("solve", &e);
                }
            }
        }
    }
    if rep.status == Status::Failed && rep.lines.iter().any(|l| l == "trace_warnings_allowed=false") {
        rep.csv = None;
    }
    rep
}

fn problem_forcing(problem: &Problem) -> opcontour_core::Result<opcontour_core::time::GridFunction> {
    use opcontour_core::semilinear::PolynomialNonlinearity;
    PolynomialNonlinearity::new(problem.forcing.clone(), Vec::new()).forcing_on(problem.grid, problem.operator.dim())
}

pub fn run_verify(problem: &Problem) -> RunReport {
    let mut rep = RunReport::new("verify");
    let names: Vec<String> = problem
        .checks
        .clone()
        .unwrap_or_else(|| verify::SUITE.iter().map(|s| s.to_string()).collect());
    for name in &names {
        let res = rep.time(name, || verify::run_check(name, problem));
        match res {
            Ok(m) => {
                rep.lines.push(m.line(name));
                if !m.pass {
                    rep.raise(Status::Failed);
                }
            }
            Err(e) => {
                rep.lines.push(format!("check.{name}=fail error={e}"));
                rep.raise(Status::Failed);
            }
        }
    }
    rep
}
