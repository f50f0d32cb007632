//! Vertical-line contour solvers for `i u' -+ A u = f` and `u'' + A^2 u = f`
//! on `[0, T]` with zero initial traces, plus independent cross-checks.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;

use crate::classes::{check_parabola, check_strip, ClassificationReport, ParabolaRegion, StripRegion};
use crate::linop::{principal_sqrt, ModelOperator};
use crate::sum::par_sum;
use crate::time::{b_inverse_apply, finite_diff_derivative, phi_psi, BStep, GridFunction};
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Aliasing margin: node spacing is `2 pi / (T + ALIAS / dist)`.
const ALIAS: f64 = 25.0;
/// Relative size of the last octave at which adaptive truncation stops. The
/// solution lines need the tighter value because residuals are taken with
/// second differences, which amplify the truncation ripple by `h^-2`.
const OCTAVE_TOL: f64 = 1e-8;
const FOURIER_OCTAVE_TOL: f64 = 1e-6;
const MAX_OCTAVES: usize = 10;

/// Selects the upper (`Plus`) or lower (`Minus`) sign in `+-iA`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Start at `R = 50 max(1, ||A||)` and double until the last octave
    /// contributes less than `1e-6` of the integral.
    Adaptive,
    /// Trapezoid on `[-R, R]` with `M` intervals.
    Fixed { r: f64, m: usize },
}

/// Line `Re lambda = -c` with its truncation rule. `offset = None` picks
/// `c = 1.5 max |Im spec A| + 0.5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub offset: Option<f64>,
    pub truncation: Truncation,
}

impl Default for ContourSpec {
    fn default() -> Self {
        Self::auto()
    }
}

impl ContourSpec {
    pub fn auto() -> Self {
        Self { offset: None, truncation: Truncation::Adaptive }
    }

    pub fn with_offset(c: f64) -> Result<Self> {
        check_offset(c)?;
        Ok(Self { offset: Some(c), truncation: Truncation::Adaptive })
    }

    pub fn fixed(c: f64, r: f64, m: usize) -> Result<Self> {
        check_offset(c)?;
        if !(r > 0.0 && r.is_finite()) || m == 0 || m % 2 != 0 {
            return Err(Error::InvalidContour(format!("need R > 0 and even M > 0, got R={r}, M={m}")));
        }
        Ok(Self { offset: Some(c), truncation: Truncation::Fixed { r, m } })
    }

    /// The offset in use for `a`.
    pub fn offset_for(&self, a: &ModelOperator) -> f64 {
        self.offset.unwrap_or_else(|| default_offset(a))
    }
}

fn check_offset(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidContour(format!("offset must be positive, got {c}")))
    }
}

/// `1.5 max |Im spec A| + 0.5`.
pub fn default_offset(a: &ModelOperator) -> f64 {
    1.5 * a.spectrum().iter().map(|m| m.im.abs()).fold(0.0, f64::max) + 0.5
}

/// Contour parameters actually used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedContour {
    pub c: f64,
    pub r: f64,
    pub nodes: usize,
    pub spacing: f64,
    pub adaptive: bool,
}

impl ResolvedContour {
    /// Fixed contour with the same node set.
    pub fn freeze(&self) -> ContourSpec {
        ContourSpec { offset: Some(self.c), truncation: Truncation::Fixed { r: self.r, m: self.nodes - 1 } }
    }

    pub fn to_kv(&self, prefix: &str) -> Vec<String> {
        vec![
            format!("{prefix}.c={:.10e}", self.c),
            format!("{prefix}.R={:.10e}", self.r),
            format!("{prefix}.nodes={}", self.nodes),
            format!("{prefix}.spacing={:.10e}", self.spacing),
            format!("{prefix}.adaptive={}", self.adaptive),
        ]
    }
}

/// Result of a contour evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LineOutput {
    pub value: GridFunction,
    /// Estimated absolute error (max-modulus) of the quadrature.
    pub quad_error: f64,
    pub contour: ResolvedContour,
    /// Largest relative defect of the split identity, when it was checked.
    pub split_defect: Option<f64>,
}

struct LineSum {
    sum: Vec<Complex64>,
    error: f64,
    r: f64,
    nodes: usize,
    spacing: f64,
}

fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn scaled(v: Vec<Complex64>, w: f64) -> Vec<Complex64> {
    v.into_iter().map(|z| z * w).collect()
}

/// `sum_k w_k node(y_k)` on a symmetric grid in `y`. `len` is the length of
/// each node vector.
fn line_sum<F>(len: usize, spacing: f64, r0: f64, trunc: &Truncation, tol: f64, node: &F) -> Result<LineSum>
where
    F: Fn(f64) -> Result<Vec<Complex64>> + Sync,
{
    let zero = vec![ZERO; len];
    match *trunc {
        Truncation::Adaptive => {
            let k0 = (r0 / spacing).ceil().max(1.0) as i64;
            let mut acc = par_sum((2 * k0 + 1) as usize, zero.clone(), |i| {
                Ok(scaled(node((i as i64 - k0) as f64 * spacing)?, spacing))
            })?;
            let mut k = k0;
            let mut last = f64::INFINITY;
            for _ in 0..MAX_OCTAVES {
                let lo = k;
                let ks: Vec<i64> = (lo + 1..=2 * lo).flat_map(|k| [-k, k]).collect();
                let oct = par_sum(ks.len(), zero.clone(), |i| Ok(scaled(node(ks[i] as f64 * spacing)?, spacing)))?;
                for (a, b) in acc.iter_mut().zip(&oct) {
                    *a += b;
                }
                k = 2 * lo;
                let size = max_abs(&oct);
                let total = max_abs(&acc);
                last = if total > 0.0 { size / total } else { 0.0 };
                if size <= tol * total {
                    let error = size + (-ALIAS).exp() * total;
                    return Ok(LineSum { sum: acc, error, r: k as f64 * spacing, nodes: (2 * k + 1) as usize, spacing });
                }
            }
            Err(Error::QuadratureNotConverged { change: last })
        }
        Truncation::Fixed { r, m } => {
            let h = 2.0 * r / m as f64;
            let both = par_sum(m + 1, vec![ZERO; 2 * len], |k| {
                let y = if k == m { r } else { -r + k as f64 * h };
                let v = node(y)?;
                let end = k == 0 || k == m;
                let wf = if end { 0.5 * h } else { h };
                let wc = if k % 2 == 1 { 0.0 } else if end { h } else { 2.0 * h };
                let mut out = Vec::with_capacity(2 * len);
                out.extend(v.iter().map(|z| z * wf));
                out.extend(v.iter().map(|z| z * wc));
                Ok(out)
            })?;
            let (full, coarse) = both.split_at(len);
            let diff = full.iter().zip(coarse).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            let edge = max_abs(&node(r)?).max(max_abs(&node(-r)?));
            Ok(LineSum { sum: full.to_vec(), error: diff + edge * r, r, nodes: m + 1, spacing: h })
        }
    }
}

/// Distance from the line `Re lambda = -c` to the poles, which must lie
/// strictly to its right.
fn pole_distance(poles: &[Complex64], c: f64) -> Result<f64> {
    let mut dist = f64::INFINITY;
    for p in poles {
        let d = p.re + c;
        if d <= 0.0 {
            return Err(Error::InvalidContour(format!("pole {p} is not to the right of Re lambda = {}", -c)));
        }
        dist = dist.min(d);
    }
    Ok(dist)
}

fn check_fixed(trunc: &Truncation, c: f64, a: &ModelOperator) -> Result<()> {
    if let Truncation::Fixed { r, .. } = *trunc {
        let need = 10.0 * c.max(a.norm2());
        if r < need {
            return Err(Error::InvalidContour(format!("R = {r} is below 10 max(c, ||A||) = {need}")));
        }
    }
    Ok(())
}

/// `(1/2 pi) int K(-c + iy) (B - c + iy)^{-1} g dy`.
fn kernel_line<K>(
    g: &GridFunction,
    scale: &ModelOperator,
    c: f64,
    poles: &[Complex64],
    trunc: &Truncation,
    kernel: K,
) -> Result<(GridFunction, f64, ResolvedContour)>
where
    K: Fn(Complex64) -> Result<ModelOperator> + Sync,
{
    check_fixed(trunc, c, scale)?;
    let dist = pole_distance(poles, c)?;
    let grid = *g.grid();
    let dim = g.dim();
    let len = grid.len() * dim;
    let spacing = 2.0 * PI / (grid.horizon() + ALIAS / dist);
    let r0 = 50.0 * scale.norm2().max(1.0);
    let h = grid.step();
    let node = |y: f64| -> Result<Vec<Complex64>> {
        let lambda = Complex64::new(-c, y);
        let k = kernel(lambda)?;
        let mut conv = vec![ZERO; len];
        BStep::new(lambda, h).apply(g.values(), dim, &mut conv);
        let mut out = vec![ZERO; len];
        for (src, dst) in conv.chunks(dim).zip(out.chunks_mut(dim)) {
            k.apply_into(src, dst);
        }
        Ok(out)
    };
    let s = if g.max_abs() == 0.0 {
        LineSum { sum: vec![ZERO; len], error: 0.0, r: r0, nodes: 0, spacing }
    } else {
        line_sum(len, spacing, r0, trunc, OCTAVE_TOL, &node)?
    };
    let value = GridFunction::from_values(grid, dim, scaled(s.sum, 1.0 / (2.0 * PI)))?;
    let contour = ResolvedContour {
        c,
        r: s.r,
        nodes: s.nodes,
        spacing: s.spacing,
        adaptive: matches!(trunc, Truncation::Adaptive),
    };
    Ok((value, s.error / (2.0 * PI), contour))
}

/// `(1/2 pi i) pv int_{iR-c} (M - lambda)^{-1} (B + lambda)^{-1} g d lambda`,
/// i.e. `(B - M)^{-1} g`, evaluated with the `-1/lambda` term split off
/// and integrated exactly.
fn resolvent_line(m: &ModelOperator, g: &GridFunction, c: f64, trunc: &Truncation, a: &ModelOperator) -> Result<LineOutput> {
    if m.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), actual: g.dim() });
    }
    let mut poles = m.spectrum();
    poles.push(ZERO);
    let neg = m.scale(Complex64::new(-1.0, 0.0));
    let (rest, err, contour) = kernel_line(g, a, c, &poles, trunc, |lambda| {
        // (1/lambda) M (M - lambda)^{-1} = -(1/lambda) M (-M + lambda)^{-1}
        Ok(m.compose(&neg.resolvent(lambda)?).scale(-lambda.inv()))
    })?;
    let value = b_inverse_apply(g).add(&rest)?;
    Ok(LineOutput { value, quad_error: err, contour, split_defect: None })
}

fn plus_minus_ia(a: &ModelOperator, sign: Sign) -> ModelOperator {
    a.scale(Complex64::new(0.0, sign.value()))
}

/// `J_+- g = (1/2 pi i) pv int_{iR-c} (+-iA - lambda)^{-1} (B + lambda)^{-1} g d lambda`.
pub fn j_operator_apply(a: &ModelOperator, sign: Sign, g: &GridFunction, contour: &ContourSpec) -> Result<LineOutput> {
    let c = contour.offset_for(a);
    resolvent_line(&plus_minus_ia(a, sign), g, c, &contour.truncation, a)
}

/// `L w = int_{iR-c} (A^2 + lambda^2)^{-1} (B + lambda)^{-1} w d lambda`. The
/// direct resolvent is checked against the split form at every node.
pub fn l_operator_apply(a: &ModelOperator, w: &GridFunction, contour: &ContourSpec) -> Result<LineOutput> {
    let mut out = wave_line(a, w, contour)?;
    out.value = out.value.scale(Complex64::new(0.0, 2.0 * PI));
    out.quad_error *= 2.0 * PI;
    Ok(out)
}

/// `(1/2 pi i) L w`.
fn wave_line(a: &ModelOperator, w: &GridFunction, contour: &ContourSpec) -> Result<LineOutput> {
    if a.dim() != w.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: w.dim() });
    }
    let c = contour.offset_for(a);
    let a2 = a.square();
    let ia = a.scale(I);
    let mia = a.scale(-I);
    let mut poles: Vec<Complex64> = a.spectrum().iter().flat_map(|m| [I * m, -I * m]).collect();
    poles.dedup();
    let defect = AtomicU64::new(0f64.to_bits());
    let (value, err, resolved) = kernel_line(w, a, c, &poles, &contour.truncation, |lambda| {
        let direct = a2.resolvent(lambda * lambda)?;
        let split = ia.resolvent(lambda)?.add(&mia.resolvent(lambda)?).scale(0.5 / lambda);
        let d = direct.distance(&split) / direct.norm2();
        defect.fetch_max(d.to_bits(), Ordering::Relaxed);
        if d > 1e-6 {
            return Err(Error::SplitIdentityViolation { discrepancy: d });
        }
        Ok(direct)
    })?;
    Ok(LineOutput { value, quad_error: err, contour: resolved, split_defect: Some(f64::from_bits(defect.into_inner())) })
}

/// `(1/(2 pi i)^2) double integral of G_{lambda,z} v`, inner line `Re lambda = -c`,
/// outer line `Re z = -r`. The integrand factors, so the double integral is
/// evaluated as two nested line integrals.
pub fn double_contour_wave_apply(
    a: &ModelOperator,
    v: &GridFunction,
    inner: &ContourSpec,
    outer: &ContourSpec,
) -> Result<LineOutput> {
    let c = inner.offset_for(a);
    let r = outer.offset.unwrap_or(2.5 * c);
    if r <= 2.0 * c {
        return Err(Error::ContourOrderViolation { c, r });
    }
    // (A + iz)^{-1} = i (iA - z)^{-1},  (A - i lambda)^{-1} = -i (-iA - lambda)^{-1}.
    let outer_out = resolvent_line(&a.scale(I), v, r, &outer.truncation, a)?;
    let w = outer_out.value.scale(I);
    let inner_out = resolvent_line(&a.scale(-I), &w, c, &inner.truncation, a)?;
    Ok(LineOutput {
        value: inner_out.value.scale(-I),
        quad_error: inner_out.quad_error + outer_out.quad_error,
        contour: inner_out.contour,
        split_defect: None,
    })
}

/// Fourier-line evaluation of `J_+-` with both derivative branches.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierOutput {
    /// Average of the two branches.
    pub value: GridFunction,
    /// Branch with `D_0 = -B`.
    pub branch0: GridFunction,
    /// Branch with `D_1 = +-iA`.
    pub branch1: GridFunction,
    /// Integral part of branch 1 minus that of branch 0; equals `-B^{-1} g`.
    pub branch_difference: GridFunction,
    pub quad_error: f64,
    pub s_max: f64,
    pub nodes: usize,
}

/// `J_+- g` as `e^{gamma t}` times an inverse Fourier integral along
/// `Re sigma = gamma`, using the exact Laplace transform of the piecewise
/// linear interpolant of `g` (zero outside `[0, T]`).
pub fn fourier_line_apply(
    a: &ModelOperator,
    sign: Sign,
    g: &GridFunction,
    gamma: f64,
    trunc: &Truncation,
) -> Result<FourierOutput> {
    if a.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: g.dim() });
    }
    let spec = a.spectrum();
    let strip = spec.iter().map(|m| m.im.abs()).fold(0.0, f64::max);
    if !(gamma > strip) {
        return Err(Error::GammaTooSmall { gamma, strip });
    }
    if let Truncation::Fixed { r, m } = *trunc {
        if !(r > 0.0) || m == 0 || m % 2 != 0 {
            return Err(Error::InvalidContour(format!("need S > 0 and even M, got S={r}, M={m}")));
        }
    }
    let sv = sign.value();
    let dist = spec.iter().map(|m| gamma - sv * m.im).fold(gamma, f64::min);
    let grid = *g.grid();
    let dim = g.dim();
    let n = grid.intervals();
    let h = grid.step();
    let len = grid.len() * dim;
    let pm_ia = plus_minus_ia(a, sign);
    let nodes_t = grid.nodes();
    let node = |s: f64| -> Result<Vec<Complex64>> {
        let sigma = Complex64::new(gamma, s);
        let (phi, psi) = phi_psi(sigma * h);
        let mut ghat = vec![ZERO; dim];
        let mut dhat = vec![ZERO; dim];
        let step = (-sigma * h).exp();
        let mut e = Complex64::new(h, 0.0);
        for j in 0..n {
            if j % 64 == 0 {
                e = (-sigma * nodes_t[j]).exp() * h;
            }
            let (g0, g1) = (g.at(j), g.at(j + 1));
            for k in 0..dim {
                ghat[k] += e * (g0[k] * (phi - psi) + g1[k] * psi);
                dhat[k] += e * phi * (g1[k] - g0[k]) / h;
            }
            e *= step;
        }
        let zeta = Complex64::new(sv * s, -sv * gamma);
        let kern = a.resolvent(zeta)?.scale(zeta.inv());
        let x0: Vec<Complex64> = dhat.iter().map(|v| -v).collect();
        let x1 = pm_ia.apply(&ghat);
        let y0 = kern.apply(&x0);
        let y1 = kern.apply(&x1);
        let mut out = vec![ZERO; 2 * len];
        let rot = Complex64::new(0.0, s * h).exp();
        let mut e = Complex64::new(1.0, 0.0);
        for (m, &t) in nodes_t.iter().enumerate() {
            if m % 64 == 0 {
                e = Complex64::new(0.0, s * t).exp();
            }
            for k in 0..dim {
                out[m * dim + k] = e * y0[k];
                out[len + m * dim + k] = e * y1[k];
            }
            e *= rot;
        }
        Ok(out)
    };
    let r0 = 50.0 * a.norm2().max(1.0);
    let spacing = 2.0 * PI / (grid.horizon() + ALIAS / dist);
    let s = if g.max_abs() == 0.0 {
        LineSum { sum: vec![ZERO; 2 * len], error: 0.0, r: r0, nodes: 0, spacing }
    } else {
        line_sum(2 * len, spacing, r0, trunc, FOURIER_OCTAVE_TOL, &node)?
    };
    let mut i0 = s.sum[..len].to_vec();
    let mut i1 = s.sum[len..].to_vec();
    let mut err_scale: f64 = 0.0;
    for (m, &t) in nodes_t.iter().enumerate() {
        let f = (gamma * t).exp() / (2.0 * PI);
        err_scale = err_scale.max(f);
        for k in 0..dim {
            i0[m * dim + k] *= f;
            i1[m * dim + k] *= f;
        }
    }
    let i0 = GridFunction::from_values(grid, dim, i0)?;
    let i1 = GridFunction::from_values(grid, dim, i1)?;
    let branch0 = i0.clone();
    let branch1 = b_inverse_apply(g).add(&i1)?;
    let value = branch0.add(&branch1)?.scale(Complex64::new(0.5, 0.0));
    Ok(FourierOutput {
        value,
        branch0,
        branch1,
        branch_difference: i1.sub(&i0)?,
        quad_error: s.error * err_scale,
        s_max: s.r,
        nodes: s.nodes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Schrodinger,
    Wave,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Schrodinger => "schrodinger",
            ProblemKind::Wave => "wave",
        }
    }
}

/// A linear Cauchy problem with zero initial traces.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyProblem {
    pub a: ModelOperator,
    pub sign: Sign,
    pub f: GridFunction,
    pub kind: ProblemKind,
    pub contour: ContourSpec,
    pub residual_tolerance: f64,
}

impl CauchyProblem {
    pub fn new(a: ModelOperator, sign: Sign, f: GridFunction, kind: ProblemKind, contour: ContourSpec) -> Result<Self> {
        if a.dim() != f.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), actual: f.dim() });
        }
        Ok(Self { a, sign, f, kind, contour, residual_tolerance: 1e-3 })
    }

    /// Strip admission for the contour offset, the parabola diagnostic for
    /// waves, and the `f(0) = 0` trace condition.
    pub fn admit(&self) -> Result<Admission> {
        let c = self.contour.offset_for(&self.a);
        let strip = check_strip(&self.a, &StripRegion::with_density(&self.a, c, 8)?, f64::INFINITY);
        if !strip.pass {
            return Err(Error::NotAdmissible(format!(
                "A is not strip-type with half-width {c}: resolvent singular at {}",
                strip.worst_point
            )));
        }
        let mut warnings = Vec::new();
        let tol = trace_tolerance(&self.f);
        let f0 = node_norm(&self.f, 0);
        if f0 > tol {
            warnings.push(format!("trace: forcing does not vanish at t=0 (|f(0)|={f0:.3e}); trace assumption relaxed"));
        }
        let parabola = if self.kind == ProblemKind::Wave {
            let a2 = self.a.square();
            match principal_sqrt(&a2) {
                Ok(root) => {
                    let region = ParabolaRegion::with_density(&a2, c, 8)?;
                    let rep = check_parabola(&a2, &region, f64::INFINITY, &root)?;
                    if !rep.pass {
                        warnings.push(format!("parabola: A^2 fails the parabola check near {}", rep.worst_point));
                    }
                    Some(rep)
                }
                Err(e) => {
                    warnings.push(format!("parabola: no principal square root of A^2 ({e})"));
                    None
                }
            }
        } else {
            None
        };
        Ok(Admission { strip, parabola, warnings })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Admission {
    pub strip: ClassificationReport,
    pub parabola: Option<ClassificationReport>,
    pub warnings: Vec<String>,
}

fn node_norm(u: &GridFunction, j: usize) -> f64 {
    u.at(j).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `10 N^{-2}` times the sup norm.
pub fn trace_tolerance(u: &GridFunction) -> f64 {
    10.0 / (u.grid().intervals() as f64).powi(2) * u.sup_norm()
}

/// Computed solution with its independently recomputed residual.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionBundle {
    pub kind: ProblemKind,
    pub sign: Sign,
    pub u: GridFunction,
    /// `||residual||_2 / ||f||_2` (absolute when `f = 0`).
    pub residual: f64,
    pub residual_abs: f64,
    pub tolerance: f64,
    pub trace_u0: f64,
    pub trace_du0: Option<f64>,
    pub quad_error: f64,
    pub contour: ResolvedContour,
    pub split_defect: Option<f64>,
    pub warnings: Vec<String>,
}

impl SolutionBundle {
    pub fn to_kv(&self, prefix: &str) -> Vec<String> {
        let mut out = vec![
            format!("{prefix}.kind={}", self.kind.name()),
            format!("{prefix}.sign={}", self.sign.symbol()),
            format!("{prefix}.residual={:.10e}", self.residual),
            format!("{prefix}.residual_abs={:.10e}", self.residual_abs),
            format!("{prefix}.residual_tolerance={:.3e}", self.tolerance),
            format!("{prefix}.trace_u0={:.10e}", self.trace_u0),
        ];
        if let Some(d) = self.trace_du0 {
            out.push(format!("{prefix}.trace_du0={d:.10e}"));
        }
        out.push(format!("{prefix}.quad_error={:.10e}", self.quad_error));
        if let Some(d) = self.split_defect {
            out.push(format!("{prefix}.split_defect={d:.10e}"));
        }
        out.extend(self.contour.to_kv(&format!("{prefix}.contour")));
        for (k, w) in self.warnings.iter().enumerate() {
            out.push(format!("{prefix}.warning_{k}={w}"));
        }
        out
    }
}

/// `i u' -+ A u - f` with `f` the forcing.
pub fn schrodinger_residual(a: &ModelOperator, sign: Sign, u: &GridFunction, f: &GridFunction) -> Result<GridFunction> {
    let du = finite_diff_derivative(u, 1)?;
    let au = u.apply_operator(a)?;
    du.scale(I).axpy(Complex64::new(-sign.value(), 0.0), &au)?.sub(f)
}

/// `u'' + A^2 u - f`.
pub fn wave_residual(a: &ModelOperator, u: &GridFunction, f: &GridFunction) -> Result<GridFunction> {
    let d2 = finite_diff_derivative(u, 2)?;
    d2.add(&u.apply_operator(&a.square())?)?.sub(f)
}

fn relative(res: &GridFunction, f: &GridFunction) -> (f64, f64) {
    let abs = res.lp_norm(2.0);
    let nf = f.lp_norm(2.0);
    (if nf > 0.0 { abs / nf } else { abs }, abs)
}

/// `u = (1/2 pi) int_{iR-c} int_0^t e^{lambda(x-t)} (-+iA + lambda)^{-1} f(x) dx d lambda`,
/// the solution of `i u' -+ A u = f`, `u(0) = 0`.
pub fn solve_schrodinger(problem: &CauchyProblem) -> Result<SolutionBundle> {
    if problem.kind != ProblemKind::Schrodinger {
        return Err(Error::InvalidParameter("problem kind is not schrodinger".into()));
    }
    let adm = problem.admit()?;
    let (u, out) = schrodinger_apply(&problem.a, problem.sign, &problem.f, &problem.contour)?;
    let res = schrodinger_residual(&problem.a, problem.sign, &u, &problem.f)?;
    let (residual, residual_abs) = relative(&res, &problem.f);
    finish_bundle(SolutionBundle {
        kind: ProblemKind::Schrodinger,
        sign: problem.sign,
        trace_u0: node_norm(&u, 0),
        trace_du0: None,
        u,
        residual,
        residual_abs,
        tolerance: problem.residual_tolerance,
        quad_error: out.quad_error,
        contour: out.contour,
        split_defect: None,
        warnings: adm.warnings,
    })
}

/// Solution operator of `i u' -+ A u = f` without admission or residual checks.
pub fn schrodinger_apply(
    a: &ModelOperator,
    sign: Sign,
    f: &GridFunction,
    contour: &ContourSpec,
) -> Result<(GridFunction, LineOutput)> {
    // The kernel (-+iA + lambda)^{-1} = -(M - lambda)^{-1} with M = +-iA, and
    // d lambda = i dy, so u = -i (1/2 pi i) int (M - lambda)^{-1} (B + lambda)^{-1} f d lambda.
    let out = j_operator_apply(a, sign, f, contour)?;
    let u = out.value.scale(-I);
    Ok((u, out))
}

/// `u = (1/2 pi i) int_{iR-c} int_0^t e^{lambda(x-t)} (A^2 + lambda^2)^{-1} f(x) dx d lambda`,
/// the solution of `u'' + A^2 u = f`, `u(0) = u'(0) = 0`.
pub fn solve_wave(problem: &CauchyProblem) -> Result<SolutionBundle> {
    if problem.kind != ProblemKind::Wave {
        return Err(Error::InvalidParameter("problem kind is not wave".into()));
    }
    let adm = problem.admit()?;
    let out = wave_apply(&problem.a, &problem.f, &problem.contour)?;
    let mut bundle = wave_bundle(&problem.a, &problem.f, out, problem.residual_tolerance)?;
    let mut warnings = adm.warnings;
    warnings.append(&mut bundle.warnings);
    bundle.warnings = warnings;
    finish_bundle(bundle)
}

/// Solution operator of `u'' + A^2 u = f` without admission or residual checks.
pub fn wave_apply(a: &ModelOperator, f: &GridFunction, contour: &ContourSpec) -> Result<LineOutput> {
    wave_line(a, f, contour)
}

/// Bundles a wave solution with its residual and traces.
pub fn wave_bundle(a: &ModelOperator, f: &GridFunction, out: LineOutput, tolerance: f64) -> Result<SolutionBundle> {
    let u = out.value;
    let res = wave_residual(a, &u, f)?;
    let (residual, residual_abs) = relative(&res, f);
    let du0 = node_norm(&finite_diff_derivative(&u, 1)?, 0);
    let mut warnings = Vec::new();
    if du0 > trace_tolerance(&u) {
        warnings.push(format!("trace: |u'(0)|={du0:.3e} exceeds 10 N^-2 ||u||"));
    }
    Ok(SolutionBundle {
        kind: ProblemKind::Wave,
        sign: Sign::Plus,
        trace_u0: node_norm(&u, 0),
        trace_du0: Some(du0),
        u,
        residual,
        residual_abs,
        tolerance,
        quad_error: out.quad_error,
        contour: out.contour,
        split_defect: out.split_defect,
        warnings,
    })
}

pub(crate) fn finish_bundle(b: SolutionBundle) -> Result<SolutionBundle> {
    if b.residual.is_finite() && b.residual <= b.tolerance {
        Ok(b)
    } else {
        Err(Error::ResidualTooLarge(Box::new(b)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ENormLevel {
    E0,
    E1,
    E2Partial,
}

/// Discrete surrogate of the `E` norms with finite-difference `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct ENormReport {
    pub level: ENormLevel,
    /// `E0`: `||v||`, `||(+-iA+B)v||`, `||(-+iA+B)(+-iA+B)v||`.
    /// `E1`: `||v||`, `||(-+iA+B)v||_{E0}`, `0`.
    /// `E2Partial`: `||v||_{E0}`, `||(-+iA+B)(+-iA+B)v||_{E0}`, `0`.
    pub components: [f64; 3],
    pub total: f64,
}

fn apply_sum(a: &ModelOperator, sign: Sign, v: &GridFunction) -> Result<GridFunction> {
    let dv = finite_diff_derivative(v, 1)?;
    dv.add(&v.apply_operator(&plus_minus_ia(a, sign))?)
}

fn e0(a: &ModelOperator, sign: Sign, v: &GridFunction, p: f64) -> Result<[f64; 3]> {
    let w = apply_sum(a, sign, v)?;
    let z = apply_sum(a, sign.flip(), &w)?;
    Ok([v.lp_norm(p), w.lp_norm(p), z.lp_norm(p)])
}

pub fn e_norm(a: &ModelOperator, sign: Sign, v: &GridFunction, level: ENormLevel, p: f64) -> Result<ENormReport> {
    if a.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: v.dim() });
    }
    let components = match level {
        ENormLevel::E0 => e0(a, sign, v, p)?,
        ENormLevel::E1 => {
            let w = apply_sum(a, sign.flip(), v)?;
            [v.lp_norm(p), e0(a, sign, &w, p)?.iter().sum(), 0.0]
        }
        ENormLevel::E2Partial => {
            let w = apply_sum(a, sign.flip(), &apply_sum(a, sign, v)?)?;
            [e0(a, sign, v, p)?.iter().sum(), e0(a, sign, &w, p)?.iter().sum(), 0.0]
        }
    };
    Ok(ENormReport { level, components, total: components.iter().sum() })
}

/// `||solve_wave(f) - J_+ J_- f||_2 / ||f||_2`.
pub fn inverse_composition_check(a: &ModelOperator, f: &GridFunction, contour: &ContourSpec) -> Result<f64> {
    let nf = f.lp_norm(2.0);
    if nf == 0.0 {
        return Ok(0.0);
    }
    let u = wave_apply(a, f, contour)?.value;
    let jm = j_operator_apply(a, Sign::Minus, f, contour)?.value;
    let jj = j_operator_apply(a, Sign::Plus, &jm, contour)?.value;
    Ok(u.sub(&jj)?.lp_norm(2.0) / nf)
}

/// `||A u'|| / (||u|| + ||u''|| + ||A^2 u||)`, zero for `u = 0`.
pub fn mixed_derivative_check(a: &ModelOperator, u: &GridFunction) -> Result<f64> {
    let num = finite_diff_derivative(u, 1)?.apply_operator(a)?.lp_norm(2.0);
    let den = u.lp_norm(2.0) + finite_diff_derivative(u, 2)?.lp_norm(2.0) + u.apply_operator(&a.square())?.lp_norm(2.0);
    Ok(if den > 0.0 { num / den } else { 0.0 })
}
