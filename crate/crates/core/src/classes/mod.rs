//! Sampled certification of sectorial, strip and parabola resolvent bounds,
//! R-bound estimates, fractional powers and principal-value projections.

mod fractional;
mod pv;
mod rbound;

pub use fractional::{
    balakrishnan_power, decomposition_residual, imaginary_power_norms, imaginary_power_oracle, q_operator,
    FractionalPower, RayQuadrature,
};
pub use pv::pv_projection;
pub use rbound::{estimate_r_bound, RBoundEstimate, RBoundMode, RademacherTrialSpec};

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::linop::{ModelOperator, VectorNormSpec};
use crate::{Error, Result};

/// Points per decade used by the default ladders.
pub const PER_DECADE: usize = 32;

/// `lo, ..., hi` spaced geometrically with `per_decade` points per decade.
pub fn geometric_ladder(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64).round().max(1.0) as usize;
    (0..=steps).map(|k| lo * 10f64.powf(decades * k as f64 / steps as f64)).collect()
}

fn scale_of(a: &ModelOperator) -> f64 {
    let s = a.norm2();
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassTag {
    Sectorial,
    Strip,
    StripDecay,
    Parabola,
    RStrip,
    RParabola,
}

impl ClassTag {
    pub fn name(&self) -> &'static str {
        match self {
            ClassTag::Sectorial => "sectorial",
            ClassTag::Strip => "strip",
            ClassTag::StripDecay => "strip-decay",
            ClassTag::Parabola => "parabola",
            ClassTag::RStrip => "r-strip",
            ClassTag::RParabola => "r-parabola",
        }
    }
}

/// Sampled evidence for class membership. `k_hat` is a sampled supremum,
/// hence a lower bound for the true class constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub class: ClassTag,
    pub k_hat: f64,
    pub worst_point: Complex64,
    pub k_max: f64,
    pub pass: bool,
    pub samples: usize,
    pub singular_at: Option<Complex64>,
    pub decay_exponent: Option<f64>,
    pub sampling: String,
}

impl ClassificationReport {
    /// `key=value` lines under `prefix`.
    pub fn to_kv(&self, prefix: &str) -> Vec<String> {
        let mut out = vec![
            format!("{prefix}.class={}", self.class.name()),
            format!("{prefix}.k_hat={:.10e}", self.k_hat),
            format!("{prefix}.k_hat_is_lower_bound=true"),
            format!("{prefix}.worst_point={:.10e}{:+.10e}i", self.worst_point.re, self.worst_point.im),
            format!("{prefix}.k_max={:.10e}", self.k_max),
            format!("{prefix}.samples={}", self.samples),
            format!("{prefix}.pass={}", self.pass),
        ];
        if let Some(s) = self.singular_at {
            out.push(format!("{prefix}.singular_at={:.10e}{:+.10e}i", s.re, s.im));
        }
        if let Some(a) = self.decay_exponent {
            out.push(format!("{prefix}.decay_exponent={a:.10e}"));
        }
        out.push(format!("{prefix}.sampling={}", self.sampling));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorRegion {
    pub angle: f64,
    pub radii: Vec<f64>,
    pub samples_per_arc: usize,
}

impl SectorRegion {
    pub fn new(angle: f64, radii: Vec<f64>, samples_per_arc: usize) -> Result<Self> {
        if !(0.0..PI).contains(&angle) {
            return Err(Error::InvalidParameter(format!("sector angle must lie in [0, pi), got {angle}")));
        }
        if radii.is_empty() || samples_per_arc == 0 || radii.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter("sector region needs nonnegative radii and samples".into()));
        }
        Ok(Self { angle, radii, samples_per_arc })
    }

    /// Radii `{0} U [1e-2, 1e4] * ||A||` at 32 per decade, 33 points per arc.
    pub fn default_for(a: &ModelOperator, angle: f64) -> Result<Self> {
        let s = scale_of(a);
        let mut radii = vec![0.0];
        radii.extend(geometric_ladder(1e-2 * s, 1e4 * s, PER_DECADE));
        Self::new(angle, radii, 33)
    }

    pub fn points(&self) -> Vec<Complex64> {
        let mut pts = Vec::new();
        for &r in &self.radii {
            if r == 0.0 {
                pts.push(Complex64::new(0.0, 0.0));
                continue;
            }
            let n = self.samples_per_arc;
            for k in 0..n {
                let theta = if n == 1 { 0.0 } else { -self.angle + 2.0 * self.angle * k as f64 / (n - 1) as f64 };
                pts.push(Complex64::from_polar(r, theta));
            }
        }
        pts
    }

    fn contains(&self, z: Complex64, tol: f64) -> bool {
        z.norm() <= tol || z.arg().abs() <= self.angle + 1e-12
    }

    fn describe(&self) -> String {
        format!(
            "sector angle={:.6e} radii={} ({}..{}) arc_points={}",
            self.angle,
            self.radii.len(),
            fmt_range_lo(&self.radii),
            fmt_range_hi(&self.radii),
            self.samples_per_arc
        )
    }
}

fn fmt_range_lo(v: &[f64]) -> String {
    format!("{:.3e}", v.iter().cloned().fold(f64::INFINITY, f64::min))
}

fn fmt_range_hi(v: &[f64]) -> String {
    format!("{:.3e}", v.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripRegion {
    pub c: f64,
    pub imag: Vec<f64>,
    pub real: Vec<f64>,
}

impl StripRegion {
    pub fn new(c: f64, imag: Vec<f64>, real: Vec<f64>) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("strip half-width must be positive, got {c}")));
        }
        if imag.is_empty() || real.is_empty() {
            return Err(Error::InvalidParameter("strip region needs samples".into()));
        }
        if let Some(y) = imag.iter().find(|y| y.abs() < c) {
            return Err(Error::InvalidParameter(format!("imaginary sample {y} lies inside the strip |Im| < {c}")));
        }
        Ok(Self { c, imag, real })
    }

    fn real_samples(a: &ModelOperator, s: f64, per_decade: usize) -> Vec<f64> {
        let mut real = vec![0.0];
        for x in geometric_ladder(1e-2 * s, 1e4 * s, per_decade) {
            real.push(x);
            real.push(-x);
        }
        real.extend(a.spectrum().iter().map(|m| -m.re));
        real
    }

    /// Imaginary parts `+-(c + [1e-2, 1e4] * scale)` plus `+-c`, real parts
    /// on a signed ladder plus the negated real parts of the spectrum.
    pub fn default_for(a: &ModelOperator, c: f64) -> Result<Self> {
        Self::with_density(a, c, PER_DECADE)
    }

    pub fn with_density(a: &ModelOperator, c: f64, per_decade: usize) -> Result<Self> {
        let s = scale_of(a).max(c);
        let mut imag = vec![c, -c];
        for y in geometric_ladder(1e-2 * s, 1e4 * s, per_decade) {
            imag.push(c + y);
            imag.push(-(c + y));
        }
        Self::new(c, imag, Self::real_samples(a, s, (per_decade / 4).max(2)))
    }

    /// Imaginary parts `+-2^k c` for `k = 0..=levels`.
    pub fn decay_ladder(a: &ModelOperator, c: f64, levels: u32) -> Result<Self> {
        let s = scale_of(a).max(c);
        let mut imag = Vec::new();
        for k in 0..=levels {
            let y = c * 2f64.powi(k as i32);
            imag.push(y);
            imag.push(-y);
        }
        Self::new(c, imag, Self::real_samples(a, s, 8))
    }

    pub fn points(&self) -> Vec<Complex64> {
        let mut pts = Vec::with_capacity(self.imag.len() * self.real.len());
        for &y in &self.imag {
            for &x in &self.real {
                pts.push(Complex64::new(x, y));
            }
        }
        pts
    }

    fn contains(&self, z: Complex64) -> bool {
        z.im.abs() >= self.c
    }

    fn describe(&self) -> String {
        format!(
            "strip c={:.6e} imag_samples={} real_samples={} real_range=[{},{}]",
            self.c,
            self.imag.len(),
            self.real.len(),
            fmt_range_lo(&self.real),
            fmt_range_hi(&self.real)
        )
    }
}

/// Samples of `Pi_c` at `z = c^2 - y^2 + 2icy + delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolaRegion {
    pub c: f64,
    pub y: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl ParabolaRegion {
    pub fn new(c: f64, y: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("parabola parameter must be positive, got {c}")));
        }
        if y.is_empty() || offsets.is_empty() || offsets.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::InvalidParameter("parabola region needs samples and nonnegative offsets".into()));
        }
        Ok(Self { c, y, offsets })
    }

    pub fn default_for(lambda: &ModelOperator, c: f64) -> Result<Self> {
        Self::with_density(lambda, c, PER_DECADE)
    }

    pub fn with_density(lambda: &ModelOperator, c: f64, per_decade: usize) -> Result<Self> {
        let s = scale_of(lambda).sqrt().max(c);
        let mut y = vec![0.0];
        for v in geometric_ladder(1e-2 * s, 1e4 * s, per_decade) {
            y.push(v);
            y.push(-v);
        }
        let mut offsets = vec![0.0];
        offsets.extend(geometric_ladder(1e-2 * s * s, 1e4 * s * s, 2));
        Self::new(c, y, offsets)
    }

    pub fn points(&self) -> Vec<Complex64> {
        let c = self.c;
        let mut pts = Vec::with_capacity(self.y.len() * self.offsets.len());
        for &y in &self.y {
            for &d in &self.offsets {
                pts.push(Complex64::new(c * c - y * y + d, 2.0 * c * y));
            }
        }
        pts
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let c2 = self.c * self.c;
        z.re >= c2 - z.im * z.im / (4.0 * c2) - 1e-12 * (1.0 + z.norm())
    }

    fn describe(&self) -> String {
        format!(
            "parabola c={:.6e} boundary_samples={} offsets={} offset_range=[{},{}]",
            self.c,
            self.y.len(),
            self.offsets.len(),
            fmt_range_lo(&self.offsets),
            fmt_range_hi(&self.offsets)
        )
    }
}

/// `||(A + lambda)^{-1}||_2`, or `None` at a numerical singularity.
pub(crate) fn resolvent_norm(a: &ModelOperator, lambda: Complex64) -> Option<f64> {
    let m = a.shift(lambda);
    let lo = m.min_singular();
    let hi = m.norm2();
    if !(lo > 1e-12 * hi) {
        return None;
    }
    Some(1.0 / lo)
}

struct Sweep {
    k_hat: f64,
    worst: Complex64,
    singular: Option<Complex64>,
}

/// Evaluates `q` on every point in parallel; reduction is in point order.
fn sweep<F>(points: &[Complex64], q: F) -> Sweep
where
    F: Fn(Complex64) -> Option<f64> + Sync,
{
    let vals: Vec<Option<f64>> = points.par_iter().map(|&z| q(z)).collect();
    let mut out = Sweep { k_hat: 0.0, worst: points.first().copied().unwrap_or_default(), singular: None };
    for (z, v) in points.iter().zip(vals) {
        match v {
            None => {
                if out.singular.is_none() {
                    out.singular = Some(*z);
                }
            }
            Some(v) if v > out.k_hat => {
                out.k_hat = v;
                out.worst = *z;
            }
            _ => {}
        }
    }
    out
}

fn finish(class: ClassTag, s: Sweep, k_max: f64, samples: usize, spectral_hit: Option<Complex64>, sampling: String) -> ClassificationReport {
    let singular = spectral_hit.or(s.singular);
    let worst = singular.unwrap_or(s.worst);
    let k_hat = if singular.is_some() { f64::INFINITY } else { s.k_hat };
    ClassificationReport {
        class,
        k_hat,
        worst_point: worst,
        k_max,
        pass: singular.is_none() && k_hat <= k_max,
        samples,
        singular_at: singular,
        decay_exponent: None,
        sampling,
    }
}

/// First `-mu`, `mu` in the spectrum, accepted by `inside`.
fn spectral_hit<F: Fn(Complex64) -> bool>(a: &ModelOperator, inside: F) -> Option<Complex64> {
    a.spectrum().into_iter().map(|m| -m).find(|&z| inside(z))
}

/// Samples `(1 + |lambda|) ||(A + lambda)^{-1}||` over the sector.
pub fn check_sectorial(a: &ModelOperator, region: &SectorRegion, k_max: f64) -> ClassificationReport {
    let pts = region.points();
    let s = sweep(&pts, |z| resolvent_norm(a, z).map(|n| (1.0 + z.norm()) * n));
    let tol = 1e-12 * scale_of(a);
    let hit = spectral_hit(a, |z| region.contains(z, tol));
    finish(ClassTag::Sectorial, s, k_max, pts.len(), hit, region.describe())
}

/// Samples `||(A + lambda)^{-1}||` over `|Im lambda| >= c`.
pub fn check_strip(a: &ModelOperator, region: &StripRegion, k_max: f64) -> ClassificationReport {
    let pts = region.points();
    let s = sweep(&pts, |z| resolvent_norm(a, z));
    let hit = spectral_hit(a, |z| region.contains(z));
    finish(ClassTag::Strip, s, k_max, pts.len(), hit, region.describe())
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Fits `max_x ||(A + x + iy)^{-1}|| ~ C |y|^{-alpha}` over the upper half
/// of the imaginary-part levels; passes when `alpha >= 0.9`.
pub fn check_strip_decay(a: &ModelOperator, region: &StripRegion) -> ClassificationReport {
    let mut levels: Vec<f64> = region.imag.iter().map(|y| y.abs()).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let pts = region.points();
    let s = sweep(&pts, |z| resolvent_norm(a, z));
    let hit = spectral_hit(a, |z| region.contains(z)).or(s.singular);
    let mut report = finish(ClassTag::StripDecay, s, f64::INFINITY, pts.len(), hit, region.describe());
    if hit.is_none() && levels.len() >= 2 {
        let per_level: Vec<f64> = levels
            .iter()
            .map(|&y| {
                region
                    .real
                    .iter()
                    .flat_map(|&x| [Complex64::new(x, y), Complex64::new(x, -y)])
                    .filter_map(|z| resolvent_norm(a, z))
                    .fold(0.0, f64::max)
            })
            .collect();
        let start = levels.len() / 2;
        let alpha = -log_log_slope(&levels[start..], &per_level[start..]);
        report.decay_exponent = Some(alpha);
        report.pass = alpha >= 0.9;
    } else {
        report.pass = false;
    }
    report
}

/// Samples `sqrt|z| ||(L + z)^{-1}||` and `||L^{1/2}(L + z)^{-1}||` over the
/// parabola region. `-L` must also keep `[0, inf)` free of spectrum.
pub fn check_parabola(
    lambda: &ModelOperator,
    region: &ParabolaRegion,
    k_max: f64,
    sqrt_lambda: &ModelOperator,
) -> Result<ClassificationReport> {
    if sqrt_lambda.dim() != lambda.dim() {
        return Err(Error::DimensionMismatch { expected: lambda.dim(), actual: sqrt_lambda.dim() });
    }
    let defect = sqrt_lambda.square().distance(lambda) / lambda.norm2().max(1.0);
    if defect > 1e-8 {
        return Err(Error::InconsistentSquareRoot { defect });
    }
    let pts = region.points();
    let s = sweep(&pts, |z| {
        let r = lambda.resolvent(z).ok()?;
        let hi = lambda.shift(z).norm2();
        let lo = lambda.shift(z).min_singular();
        if !(lo > 1e-12 * hi) {
            return None;
        }
        let q1 = z.norm().sqrt() / lo;
        let q2 = sqrt_lambda.compose(&r).norm2();
        Some(q1.max(q2))
    });
    let tol = 1e-12 * scale_of(lambda);
    let hit = spectral_hit(lambda, |z| region.contains(z) || (z.im.abs() <= tol && z.re >= -tol));
    Ok(finish(ClassTag::Parabola, s, k_max, pts.len(), hit, region.describe()))
}

/// R-bound of the sampled resolvent family over a strip region.
pub fn check_r_strip(
    a: &ModelOperator,
    region: &StripRegion,
    k_max: f64,
    spec: &RademacherTrialSpec,
) -> Result<ClassificationReport> {
    let pts = region.points();
    let hit = spectral_hit(a, |z| region.contains(z));
    r_family_report(ClassTag::RStrip, &pts, k_max, spec, hit, region.describe(), |z| a.resolvent(z).ok())
}

/// R-bound of `{sqrt(z) (L + z)^{-1}}` over a parabola region.
pub fn check_r_parabola(
    lambda: &ModelOperator,
    region: &ParabolaRegion,
    k_max: f64,
    spec: &RademacherTrialSpec,
) -> Result<ClassificationReport> {
    let pts = region.points();
    let tol = 1e-12 * scale_of(lambda);
    let hit = spectral_hit(lambda, |z| region.contains(z) || (z.im.abs() <= tol && z.re >= -tol));
    r_family_report(ClassTag::RParabola, &pts, k_max, spec, hit, region.describe(), |z| {
        lambda.resolvent(z).ok().map(|r| r.scale(z.sqrt()))
    })
}

fn r_family_report<F>(
    class: ClassTag,
    pts: &[Complex64],
    k_max: f64,
    spec: &RademacherTrialSpec,
    hit: Option<Complex64>,
    sampling: String,
    member: F,
) -> Result<ClassificationReport>
where
    F: Fn(Complex64) -> Option<ModelOperator> + Sync,
{
    // Thin the family to at most 256 members, keeping the region's order.
    let stride = pts.len().div_ceil(256).max(1);
    let chosen: Vec<Complex64> = pts.iter().step_by(stride).copied().collect();
    let members: Vec<Option<ModelOperator>> = chosen.par_iter().map(|&z| member(z)).collect();
    let mut family = Vec::new();
    let mut singular = hit;
    for (z, m) in chosen.iter().zip(members) {
        match m {
            Some(m) => family.push(m),
            None => {
                singular.get_or_insert(*z);
            }
        }
    }
    let sampling = format!("{sampling} family_members={} stride={stride}", family.len());
    if family.is_empty() {
        return Ok(finish(class, Sweep { k_hat: 0.0, worst: Complex64::default(), singular }, k_max, 0, None, sampling));
    }
    let est = estimate_r_bound(&family, spec, VectorNormSpec::euclidean())?;
    let k_hat = est.sup_norm.map_or(est.estimate, |s| s.max(est.estimate));
    let worst = chosen
        .iter()
        .zip(&family)
        .max_by(|a, b| a.1.norm2().total_cmp(&b.1.norm2()))
        .map(|(z, _)| *z)
        .unwrap_or_default();
    Ok(finish(class, Sweep { k_hat, worst, singular: None }, k_max, family.len(), singular, sampling))
}

/// Outcome of the strip/parabola equivalence check.
#[derive(Debug, Clone, PartialEq)]
pub struct StripParabolaReport {
    /// Largest relative defect of the split identity on random probes.
    pub split_identity_defect: f64,
    /// Sampled strip constant of `A` on `Z_c`.
    pub strip_constant: f64,
    /// Sampled `sqrt|z| ||(A^2+z)^{-1}||` over `Pi_c`.
    pub parabola_constant: f64,
    /// Sampled `||A (A^2+z)^{-1}||` over `Pi_c`.
    pub parabola_a_constant: f64,
    /// Largest ratio of a parabola quantity to the strip value at the image points.
    pub worst_ratio: f64,
    pub holds: bool,
}

/// Checks that strip bounds for `A` transfer to parabola bounds for `A^2`
/// through `z = lambda^2`, `Re lambda >= c`.
pub fn strip_parabola_equivalence(a: &ModelOperator, c: f64, probes: usize, seed: u64) -> Result<StripParabolaReport> {
    use rand::{Rng, SeedableRng};
    let i = Complex64::new(0.0, 1.0);
    let a2 = a.square();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut split_defect: f64 = 0.0;
    for _ in 0..probes {
        let lam = Complex64::new(c + rng.random::<f64>() * 10.0, (rng.random::<f64>() - 0.5) * 40.0);
        let direct = a2.resolvent(lam * lam)?;
        let split = a.scale(i).resolvent(lam)?.add(&a.scale(-i).resolvent(lam)?).scale(0.5 / lam);
        split_defect = split_defect.max(direct.distance(&split) / direct.norm2());
        let direct_a = a.compose(&direct);
        let split_a = a.scale(-i).resolvent(lam)?.sub(&a.scale(i).resolvent(lam)?).scale(0.5 / i);
        split_defect = split_defect.max(direct_a.distance(&split_a) / direct_a.norm2().max(1e-300));
    }
    let strip = check_strip(a, &StripRegion::with_density(a, c, 8)?, f64::INFINITY);
    let region = ParabolaRegion::with_density(&a2, c, 8)?;
    let pts = region.points();
    let vals: Vec<Option<(f64, f64, f64)>> = pts
        .par_iter()
        .map(|&z| {
            let lam = z.sqrt();
            let r = a2.resolvent(z).ok()?;
            let q1 = z.norm().sqrt() * r.norm2();
            let q2 = a.compose(&r).norm2();
            let k = resolvent_norm(a, -i * lam)?.max(resolvent_norm(a, i * lam)?);
            Some((q1, q2, q1.max(q2) / k))
        })
        .collect();
    let (mut p1, mut p2, mut worst): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut all = true;
    for v in vals {
        match v {
            Some((q1, q2, r)) => {
                p1 = p1.max(q1);
                p2 = p2.max(q2);
                worst = worst.max(r);
            }
            None => all = false,
        }
    }
    let holds = all && strip.pass && worst <= 1.0 + 1e-6 && split_defect <= 1e-8;
    Ok(StripParabolaReport {
        split_identity_defect: split_defect,
        strip_constant: strip.k_hat,
        parabola_constant: p1,
        parabola_a_constant: p2,
        worst_ratio: worst,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> ModelOperator {
        ModelOperator::real_diagonal(v).unwrap()
    }

    #[test]
    fn sectorial_examples() {
        let a = diag(&[1.0, 2.0]);
        let mut radii = vec![0.0];
        radii.extend(geometric_ladder(1e-2, 1e4, PER_DECADE));
        let r = check_sectorial(&a, &SectorRegion::new(0.0, radii, 1).unwrap(), 2.0);
        assert!((r.k_hat - 1.0).abs() < 1e-12 && r.pass);
        let i = ModelOperator::identity(1);
        let r = check_sectorial(&i, &SectorRegion::default_for(&i, PI / 2.0).unwrap(), 2.0);
        assert!(r.k_hat <= 2f64.sqrt() + 1e-6 && r.k_hat > 1.41);
        let r = check_sectorial(&diag(&[-1.0]), &SectorRegion::default_for(&i, 0.0).unwrap(), 1e9);
        assert!(!r.pass);
        assert_eq!(r.worst_point, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn strip_examples() {
        let a = diag(&[0.0]);
        let r = check_strip(&a, &StripRegion::default_for(&a, 1.0).unwrap(), 1.01);
        assert!((r.k_hat - 1.0).abs() < 1e-12 && r.pass);
        assert!((r.worst_point.im.abs() - 1.0).abs() < 1e-12);
        let b = ModelOperator::diagonal(&[Complex64::new(0.0, 10.0)]).unwrap();
        let r = check_strip(&b, &StripRegion::default_for(&b, 5.0).unwrap(), 1e9);
        assert!(!r.pass);
        assert_eq!(r.singular_at, Some(Complex64::new(-0.0, -10.0)));
        let d = diag(&[1.0, -1.0]);
        let r = check_strip(&d, &StripRegion::default_for(&d, 0.5).unwrap(), 3.0);
        assert!((r.k_hat - 2.0).abs() < 1e-12);
    }

    #[test]
    fn decay_examples() {
        for a in [diag(&[0.0]), diag(&[1.0, 2.0, 3.0])] {
            let r = check_strip_decay(&a, &StripRegion::decay_ladder(&a, 1.0, 24).unwrap());
            assert!((r.decay_exponent.unwrap() - 1.0).abs() < 0.05 && r.pass);
        }
        let b = ModelOperator::diagonal(&[Complex64::new(0.0, 4.0)]).unwrap();
        assert!(!check_strip_decay(&b, &StripRegion::decay_ladder(&b, 1.0, 24).unwrap()).pass);
    }

    #[test]
    fn parabola_examples() {
        let l = diag(&[1.0]);
        let r = check_parabola(&l, &ParabolaRegion::default_for(&l, 0.5).unwrap(), 1e3, &l).unwrap();
        assert!(r.pass && r.k_hat.is_finite());
        let c = 0.5;
        let l = diag(&[-1.1 * c * c]);
        let s = ModelOperator::diagonal(&[Complex64::new(-1.1 * c * c, 0.0).sqrt()]).unwrap();
        assert!(!check_parabola(&l, &ParabolaRegion::default_for(&l, c).unwrap(), 1e9, &s).unwrap().pass);
        let z = diag(&[0.0]);
        assert!(!check_parabola(&z, &ParabolaRegion::default_for(&z, c).unwrap(), 1e9, &z).unwrap().pass);
        let bad = diag(&[2.0]);
        assert!(matches!(
            check_parabola(&l, &ParabolaRegion::default_for(&l, c).unwrap(), 1.0, &bad),
            Err(Error::InconsistentSquareRoot { .. })
        ));
    }

    #[test]
    fn region_invariants() {
        let a = diag(&[1.0, 2.0]);
        let p = ParabolaRegion::default_for(&a, 0.7).unwrap();
        assert!(p.points().iter().all(|&z| p.contains(z)));
        let s = SectorRegion::default_for(&a, 0.3).unwrap();
        assert!(s.points().iter().all(|&z| z.norm() == 0.0 || z.arg().abs() <= 0.3 + 1e-12));
        assert!(StripRegion::new(1.0, vec![0.5], vec![0.0]).is_err());
    }

    #[test]
    fn equivalence_holds() {
        let a = ModelOperator::dense(
            2,
            &[Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0)],
        )
        .unwrap();
        let r = strip_parabola_equivalence(&a, 0.5, 20, 3).unwrap();
        assert!(r.holds, "{r:?}");
    }
}
