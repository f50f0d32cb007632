//! Problem-file schema. Every object rejects unknown keys.

use num_complex::Complex64;
use opcontour_core::cauchy::{ContourSpec, Sign};
use opcontour_core::linop::ModelOperator;
use opcontour_core::semilinear::{Coefficient, FixedPointConfig, PolynomialNonlinearity};
use opcontour_core::time::{GridFunction, TimeGrid};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("malformed problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid problem file: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, SchemaError> {
    Err(SchemaError::Invalid(msg.into()))
}

/// A complex number written as `x` or `[re, im]`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum JsonComplex {
    Real(f64),
    Pair([f64; 2]),
}

impl From<JsonComplex> for Complex64 {
    fn from(z: JsonComplex) -> Self {
        match z {
            JsonComplex::Real(x) => Complex64::new(x, 0.0),
            JsonComplex::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

fn complexes(v: &[JsonComplex]) -> Vec<Complex64> {
    v.iter().map(|&z| z.into()).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub operator: OperatorJson,
    pub problem: ProblemJson,
    #[serde(default)]
    pub contour: Option<ContourJson>,
    #[serde(default)]
    pub nonlinearity: Option<NonlinearityJson>,
    #[serde(default)]
    pub checks: Option<Vec<String>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<OutputJson>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKindJson {
    Diagonal,
    Dense,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorJson {
    pub kind: OperatorKindJson,
    pub dim: usize,
    #[serde(default)]
    pub spectrum: Option<Vec<JsonComplex>>,
    /// Row-major entries.
    #[serde(default)]
    pub entries: Option<Vec<JsonComplex>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKindJson {
    Classify,
    Schrodinger,
    Wave,
    Semilinear,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemJson {
    pub kind: ProblemKindJson,
    #[serde(default)]
    pub sign: Option<String>,
    #[serde(default, rename = "T")]
    pub t: Option<f64>,
    #[serde(default, rename = "N")]
    pub n: Option<usize>,
    #[serde(default)]
    pub p: Option<f64>,
    /// Strip half-width or parabola parameter for `classify`.
    #[serde(default)]
    pub c: Option<f64>,
    /// Sector half-angle for `classify`.
    #[serde(default)]
    pub phi: Option<f64>,
    #[serde(default)]
    pub k_max: Option<f64>,
    #[serde(default)]
    pub forcing: Option<CoefficientJson>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ContourJson {
    Named(String),
    Line(LineJson),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineJson {
    pub c: f64,
    #[serde(default, rename = "R")]
    pub r: Option<f64>,
    #[serde(default, rename = "M")]
    pub m: Option<usize>,
}

/// `{"type": "poly-in-t", "coeffs": [...]}` or
/// `{"type": "samples", "dim": d, "values": [[...], ...]}` with one row per node.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum CoefficientJson {
    #[serde(rename = "poly-in-t")]
    PolyInT { coeffs: Vec<JsonComplex> },
    #[serde(rename = "samples")]
    Samples { dim: usize, values: Vec<Vec<JsonComplex>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityJson {
    /// `c_1, ..., c_d`.
    pub terms: Vec<CoefficientJson>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputJson {
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub report: Option<String>,
}

/// A validated problem file.
#[derive(Debug, Clone)]
pub struct Problem {
    pub operator: ModelOperator,
    pub kind: ProblemKindJson,
    pub sign: Sign,
    pub grid: TimeGrid,
    pub p: f64,
    pub c: Option<f64>,
    pub phi: f64,
    pub k_max: f64,
    pub forcing: Coefficient,
    pub contour: ContourSpec,
    pub nonlinearity: Option<(PolynomialNonlinearity, FixedPointConfig)>,
    pub checks: Option<Vec<String>>,
    pub seed: u64,
    pub output: OutputJson,
}

pub fn load(path: &str) -> Result<Problem, SchemaError> {
    let text = std::fs::read_to_string(path).map_err(|source| SchemaError::Io { path: path.into(), source })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Problem, SchemaError> {
    let file: ProblemFile = serde_json::from_str(text)?;
    validate(file)
}

fn operator(op: &OperatorJson) -> Result<ModelOperator, SchemaError> {
    if op.dim == 0 {
        return invalid("operator.dim must be positive");
    }
    let built = match (op.kind, &op.spectrum, &op.entries) {
        (OperatorKindJson::Diagonal, Some(s), None) => {
            if s.len() != op.dim {
                return invalid(format!("operator.spectrum has {} entries, dim is {}", s.len(), op.dim));
            }
            ModelOperator::diagonal(&complexes(s))
        }
        (OperatorKindJson::Dense, None, Some(e)) => {
            if e.len() != op.dim * op.dim {
                return invalid(format!("operator.entries has {} entries, need {}", e.len(), op.dim * op.dim));
            }
            ModelOperator::dense(op.dim, &complexes(e))
        }
        (OperatorKindJson::Diagonal, _, _) => return invalid("diagonal operator needs `spectrum` (and no `entries`)"),
        (OperatorKindJson::Dense, _, _) => return invalid("dense operator needs `entries` (and no `spectrum`)"),
    };
    built.map_err(|e| SchemaError::Invalid(e.to_string()))
}

fn coefficient(c: &CoefficientJson, grid: TimeGrid, what: &str) -> Result<Coefficient, SchemaError> {
    match c {
        CoefficientJson::PolyInT { coeffs } => {
            if coeffs.is_empty() {
                return invalid(format!("{what}: poly-in-t needs at least one coefficient"));
            }
            Ok(Coefficient::PolyInT(complexes(coeffs)))
        }
        CoefficientJson::Samples { dim, values } => {
            if values.len() != grid.len() {
                return invalid(format!("{what}: {} sample rows, grid has {} nodes", values.len(), grid.len()));
            }
            let mut flat = Vec::with_capacity(grid.len() * dim);
            for row in values {
                if row.len() != *dim {
                    return invalid(format!("{what}: sample row of length {}, expected {dim}", row.len()));
                }
                flat.extend(complexes(row));
            }
            GridFunction::from_values(grid, *dim, flat)
                .map(Coefficient::Sampled)
                .map_err(|e| SchemaError::Invalid(format!("{what}: {e}")))
        }
    }
}

fn contour(c: &Option<ContourJson>) -> Result<ContourSpec, SchemaError> {
    let spec = match c {
        None => Ok(ContourSpec::auto()),
        Some(ContourJson::Named(s)) if s == "auto" => Ok(ContourSpec::auto()),
        Some(ContourJson::Named(s)) => return invalid(format!("contour must be \"auto\" or an object, got {s:?}")),
        Some(ContourJson::Line(l)) => match (l.r, l.m) {
            (None, None) => ContourSpec::with_offset(l.c),
            (Some(r), Some(m)) => ContourSpec::fixed(l.c, r, m),
            _ => return invalid("contour needs both R and M, or neither"),
        },
    };
    spec.map_err(|e| SchemaError::Invalid(e.to_string()))
}

fn validate(f: ProblemFile) -> Result<Problem, SchemaError> {
    let op = operator(&f.operator)?;
    let pr = &f.problem;
    let t = pr.t.unwrap_or(1.0);
    let n = pr.n.unwrap_or(512);
    let grid = TimeGrid::new(t, n).map_err(|e| SchemaError::Invalid(format!("problem.T/N: {e}")))?;
    let p = pr.p.unwrap_or(2.0);
    if !(p >= 1.0 && p.is_finite()) {
        return invalid(format!("problem.p must be in [1, inf), got {p}"));
    }
    let sign = match pr.sign.as_deref() {
        None | Some("+") | Some("plus") => Sign::Plus,
        Some("-") | Some("minus") => Sign::Minus,
        Some(s) => return invalid(format!("problem.sign must be \"+\" or \"-\", got {s:?}")),
    };
    if let Some(c) = pr.c {
        if !(c > 0.0 && c.is_finite()) {
            return invalid(format!("problem.c must be positive, got {c}"));
        }
    }
    let forcing = match &pr.forcing {
        Some(c) => coefficient(c, grid, "problem.forcing")?,
        None => Coefficient::PolyInT(vec![Complex64::new(0.0, 0.0)]),
    };
    let nonlinearity = match (&f.nonlinearity, pr.kind) {
        (Some(nl), ProblemKindJson::Semilinear) => {
            let terms = nl
                .terms
                .iter()
                .enumerate()
                .map(|(k, c)| coefficient(c, grid, &format!("nonlinearity.terms[{k}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let mut cfg = FixedPointConfig::default();
            if let Some(t) = nl.tolerance {
                cfg.tolerance = t;
            }
            if let Some(m) = nl.max_iterations {
                cfg.max_iterations = m;
            }
            if let Some(r) = nl.radius {
                cfg.radius = r;
            }
            cfg.validate().map_err(|e| SchemaError::Invalid(format!("nonlinearity: {e}")))?;
            Some((PolynomialNonlinearity::new(forcing.clone(), terms), cfg))
        }
        (None, ProblemKindJson::Semilinear) => return invalid("semilinear problem needs `nonlinearity`"),
        (Some(_), _) => return invalid("`nonlinearity` is only allowed for semilinear problems"),
        (None, _) => None,
    };
    Ok(Problem {
        operator: op,
        kind: pr.kind,
        sign,
        grid,
        p,
        c: pr.c,
        phi: pr.phi.unwrap_or(std::f64::consts::FRAC_PI_2),
        k_max: pr.k_max.unwrap_or(f64::INFINITY),
        forcing,
        contour: contour(&f.contour)?,
        nonlinearity,
        checks: f.checks,
        seed: f.seed.unwrap_or(0),
        output: f.output.unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const OK: &str = r#"{
        "operator": {"kind": "diagonal", "dim": 2, "spectrum": [1, [2, 0]]},
        "problem": {"kind": "wave", "T": 1.0, "N": 64},
        "contour": "auto"
    }"#;

    #[test]
    fn parses_minimal_file() {
        let p = parse(OK).unwrap();
        assert_eq!(p.operator.dim(), 2);
        assert_eq!(p.grid.intervals(), 64);
        assert_eq!(p.seed, 0);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = OK.replace("\"contour\"", "\"contuor\"");
        assert!(parse(&bad).is_err());
        let bad = OK.replace("\"T\": 1.0", "\"T\": 1.0, \"extra\": 3");
        assert!(parse(&bad).is_err());
    }

    #[test]
    fn rejects_inconsistent_operator() {
        let bad = OK.replace("\"dim\": 2", "\"dim\": 3");
        assert!(matches!(parse(&bad), Err(SchemaError::Invalid(_))));
    }

    #[test]
    fn contour_forms() {
        let fixed = OK.replace("\"auto\"", "{\"c\": 1.0, \"R\": 100.0, \"M\": 2000}");
        assert!(parse(&fixed).is_ok());
        let half = OK.replace("\"auto\"", "{\"c\": 1.0, \"R\": 100.0}");
        assert!(parse(&half).is_err());
        let odd = OK.replace("\"auto\"", "{\"c\": 1.0, \"R\": 100.0, \"M\": 2001}");
        assert!(parse(&odd).is_err());
    }
}
