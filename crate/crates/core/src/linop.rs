//! Finite-dimensional model operators, resolvent solves and the
//! eigendecomposition oracle.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Dense,
    Diagonal,
}

/// A complex linear operator on `C^dim`.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelOperator {
    Dense(DMatrix<Complex64>),
    Diagonal(Vec<Complex64>),
}

impl ModelOperator {
    /// Builds a dense operator from row-major entries.
    pub fn dense(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be at least 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, actual: entries.len() });
        }
        Ok(Self::Dense(DMatrix::from_row_slice(dim, dim, entries)))
    }

    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::InvalidParameter(format!(
                "matrix must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::Dense(m))
    }

    pub fn diagonal(spectrum: &[Complex64]) -> Result<Self> {
        if spectrum.is_empty() {
            return Err(Error::InvalidParameter("dim must be at least 1".into()));
        }
        Ok(Self::Diagonal(spectrum.to_vec()))
    }

    pub fn real_diagonal(spectrum: &[f64]) -> Result<Self> {
        let s: Vec<Complex64> = spectrum.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        Self::diagonal(&s)
    }

    pub fn identity(dim: usize) -> Self {
        Self::Diagonal(vec![Complex64::new(1.0, 0.0); dim])
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Dense(m) => m.nrows(),
            Self::Diagonal(d) => d.len(),
        }
    }

    pub fn kind(&self) -> OperatorKind {
        match self {
            Self::Dense(_) => OperatorKind::Dense,
            Self::Diagonal(_) => OperatorKind::Diagonal,
        }
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        match self {
            Self::Dense(m) => m.clone(),
            Self::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_into(x, &mut out);
        out
    }

    /// Writes `A x` into `out`; both slices must have length `dim`.
    pub fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        match self {
            Self::Diagonal(d) => {
                for ((o, a), xi) in out.iter_mut().zip(d).zip(x) {
                    *o = a * xi;
                }
            }
            Self::Dense(m) => {
                let n = m.nrows();
                for (i, o) in out.iter_mut().enumerate().take(n) {
                    let mut s = Complex64::new(0.0, 0.0);
                    for (j, xj) in x.iter().enumerate().take(n) {
                        s += m[(i, j)] * xj;
                    }
                    *o = s;
                }
            }
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        match (self, other) {
            (Self::Diagonal(a), Self::Diagonal(b)) => {
                Self::Diagonal(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            _ => Self::Dense(self.to_matrix() * other.to_matrix()),
        }
    }

    pub fn square(&self) -> Self {
        self.compose(self)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        match self {
            Self::Diagonal(d) => Self::Diagonal(d.iter().map(|a| a * s).collect()),
            Self::Dense(m) => Self::Dense(m * s),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        match (self, other) {
            (Self::Diagonal(a), Self::Diagonal(b)) => {
                Self::Diagonal(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            _ => Self::Dense(self.to_matrix() + other.to_matrix()),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Returns `A + lambda I`.
    pub fn shift(&self, lambda: Complex64) -> Self {
        match self {
            Self::Diagonal(d) => Self::Diagonal(d.iter().map(|a| a + lambda).collect()),
            Self::Dense(m) => {
                let mut m = m.clone();
                for i in 0..m.nrows() {
                    m[(i, i)] += lambda;
                }
                Self::Dense(m)
            }
        }
    }

    /// Spectral norm.
    pub fn norm2(&self) -> f64 {
        match self {
            Self::Diagonal(d) => d.iter().map(|a| a.norm()).fold(0.0, f64::max),
            Self::Dense(m) => m.singular_values().max(),
        }
    }

    /// Smallest singular value.
    pub fn min_singular(&self) -> f64 {
        match self {
            Self::Diagonal(d) => d.iter().map(|a| a.norm()).fold(f64::INFINITY, f64::min),
            Self::Dense(m) => m.singular_values().min(),
        }
    }

    /// Eigenvalues from a complex Schur form (works for defective matrices).
    pub fn spectrum(&self) -> Vec<Complex64> {
        match self {
            Self::Diagonal(d) => d.clone(),
            Self::Dense(m) => {
                let (_, t) = m.clone().schur().unpack();
                (0..t.nrows()).map(|i| t[(i, i)]).collect()
            }
        }
    }

    /// Returns `(A + lambda)^{-1}` as an operator.
    pub fn resolvent(&self, lambda: Complex64) -> Result<Self> {
        match self {
            Self::Diagonal(d) => {
                let shifted: Vec<Complex64> = d.iter().map(|a| a + lambda).collect();
                let scale = shifted.iter().map(|s| s.norm()).fold(0.0, f64::max);
                let mut out = Vec::with_capacity(d.len());
                for s in shifted {
                    if s.norm() <= SINGULAR_TOL * scale {
                        return Err(Error::SingularResolvent { lambda });
                    }
                    out.push(s.inv());
                }
                Ok(Self::Diagonal(out))
            }
            Self::Dense(_) => {
                let m = self.shift(lambda).to_matrix();
                let lu = Lu::factor(&m).ok_or(Error::SingularResolvent { lambda })?;
                let n = m.nrows();
                let mut inv = DMatrix::zeros(n, n);
                let mut e = vec![Complex64::new(0.0, 0.0); n];
                for j in 0..n {
                    e.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
                    e[j] = Complex64::new(1.0, 0.0);
                    let col = lu.solve_refined(&m, &e);
                    for i in 0..n {
                        inv[(i, j)] = col[i];
                    }
                }
                Ok(Self::Dense(inv))
            }
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        self.resolvent(Complex64::new(0.0, 0.0))
    }

    /// Spectral norm of `self - other`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).norm2()
    }
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DMatrix<Complex64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Returns `None` when a pivot falls below `1e-12 * ||m||_F`.
    pub fn factor(m: &DMatrix<Complex64>) -> Option<Self> {
        let n = m.nrows();
        let scale = m.norm();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].norm();
            for i in k + 1..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= SINGULAR_TOL * scale || !best.is_finite() {
                return None;
            }
            if p != k {
                lu.swap_rows(p, k);
                perm.swap(p, k);
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / piv;
                lu[(i, k)] = l;
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= l * u;
                }
            }
        }
        Some(Self { lu, perm })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.nrows();
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    /// Solve followed by one step of iterative refinement against `m`.
    pub fn solve_refined(&self, m: &DMatrix<Complex64>, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = self.solve(b);
        let n = b.len();
        let r: Vec<Complex64> = (0..n)
            .map(|i| {
                let mut s = b[i];
                for (j, xj) in x.iter().enumerate() {
                    s -= m[(i, j)] * xj;
                }
                s
            })
            .collect();
        let d = self.solve(&r);
        for (xi, di) in x.iter_mut().zip(d) {
            *xi += di;
        }
        x
    }
}

/// Computes `(A + lambda)^{-1} f`.
pub fn resolvent_apply(a: &ModelOperator, lambda: Complex64, f: &[Complex64]) -> Result<Vec<Complex64>> {
    if f.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: f.len() });
    }
    match a {
        ModelOperator::Diagonal(_) => Ok(a.resolvent(lambda)?.apply(f)),
        ModelOperator::Dense(_) => {
            let m = a.shift(lambda).to_matrix();
            let lu = Lu::factor(&m).ok_or(Error::SingularResolvent { lambda })?;
            Ok(lu.solve_refined(&m, f))
        }
    }
}

/// Exponent of the vector norm on `C^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorNormSpec {
    p: f64,
}

impl Default for VectorNormSpec {
    fn default() -> Self {
        Self { p: 2.0 }
    }
}

impl VectorNormSpec {
    pub fn euclidean() -> Self {
        Self::default()
    }

    pub fn lp(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("norm exponent must lie in (1, inf), got {p}")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn is_euclidean(&self) -> bool {
        self.p == 2.0
    }

    pub fn norm(&self, x: &[Complex64]) -> f64 {
        if self.is_euclidean() {
            x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
        } else {
            x.iter().map(|v| v.norm().powf(self.p)).sum::<f64>().powf(1.0 / self.p)
        }
    }
}

/// Induced operator norm with its certified bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNorm {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Induced operator norm. Exact for `p = 2`; otherwise the value is the
/// best probe ratio, bracketed above by the Riesz-Thorin bound.
pub fn operator_norm(a: &ModelOperator, norm: VectorNormSpec) -> OperatorNorm {
    if norm.is_euclidean() {
        let v = a.norm2();
        return OperatorNorm { value: v, lower: v, upper: v };
    }
    let n = a.dim();
    let m = a.to_matrix();
    let col = (0..n).map(|j| (0..n).map(|i| m[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let row = (0..n).map(|i| (0..n).map(|j| m[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let p = norm.p();
    let upper = col.powf(1.0 / p) * row.powf(1.0 - 1.0 / p);

    let mut lower: f64 = 0.0;
    let mut probe = |x: &[Complex64]| {
        let nx = norm.norm(x);
        if nx > 0.0 {
            lower = lower.max(norm.norm(&a.apply(x)) / nx);
        }
    };
    for j in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[j] = Complex64::new(1.0, 0.0);
        probe(&e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..64 {
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        probe(&x);
    }
    OperatorNorm { value: lower, lower, upper: upper.max(lower) }
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<Complex64>,
    pub vectors: DMatrix<Complex64>,
    pub inverse: DMatrix<Complex64>,
    pub condition: f64,
}

impl EigenDecomposition {
    /// `||A V - V diag(lambda)||` relative to `||A||`.
    pub fn defect(&self, a: &ModelOperator) -> f64 {
        let av = a.to_matrix() * &self.vectors;
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eigenvalues));
        let vd = &self.vectors * d;
        (av - vd).singular_values().max() / a.norm2().max(f64::MIN_POSITIVE)
    }
}

/// Eigendecomposition with unit-norm eigenvectors.
pub fn eigendecompose(a: &ModelOperator) -> Result<EigenDecomposition> {
    match a {
        ModelOperator::Diagonal(d) => {
            let n = d.len();
            Ok(EigenDecomposition {
                eigenvalues: d.clone(),
                vectors: DMatrix::identity(n, n),
                inverse: DMatrix::identity(n, n),
                condition: 1.0,
            })
        }
        ModelOperator::Dense(m) => {
            let n = m.nrows();
            let (q, t) = m.clone().schur().unpack();
            let tiny = f64::EPSILON * t.norm().max(f64::MIN_POSITIVE);
            let mut y = DMatrix::<Complex64>::zeros(n, n);
            for k in 0..n {
                let lk = t[(k, k)];
                y[(k, k)] = Complex64::new(1.0, 0.0);
                for j in (0..k).rev() {
                    let mut s = Complex64::new(0.0, 0.0);
                    for l in j + 1..=k {
                        s += t[(j, l)] * y[(l, k)];
                    }
                    let mut den = t[(j, j)] - lk;
                    if den.norm() < tiny {
                        den = Complex64::new(tiny, 0.0);
                    }
                    y[(j, k)] = -s / den;
                }
            }
            let mut v = q * y;
            for k in 0..n {
                let nrm = v.column(k).norm();
                if !(nrm.is_finite() && nrm > 0.0) {
                    return Err(Error::IllConditioned { condition: f64::INFINITY });
                }
                v.column_mut(k).scale_mut(1.0 / nrm);
            }
            let sv = v.singular_values();
            let condition = sv.max() / sv.min();
            if !(condition.is_finite() && condition <= 1e8) {
                return Err(Error::IllConditioned { condition });
            }
            let inverse = ModelOperator::Dense(v.clone())
                .inverse()
                .map_err(|_| Error::IllConditioned { condition })?
                .to_matrix();
            Ok(EigenDecomposition { eigenvalues: (0..n).map(|i| t[(i, i)]).collect(), vectors: v, inverse, condition })
        }
    }
}

/// `V f(diag lambda) V^{-1}` through the eigendecomposition.
pub fn matrix_function_oracle<F>(a: &ModelOperator, f: F) -> Result<ModelOperator>
where
    F: Fn(Complex64) -> Complex64,
{
    let eig = eigendecompose(a)?;
    let mut vals = Vec::with_capacity(eig.eigenvalues.len());
    for &l in &eig.eigenvalues {
        let v = f(l);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::FunctionSingularOnSpectrum { eigenvalue: l });
        }
        vals.push(v);
    }
    match a {
        ModelOperator::Diagonal(_) => Ok(ModelOperator::Diagonal(vals)),
        ModelOperator::Dense(_) => {
            let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&vals));
            Ok(ModelOperator::Dense(&eig.vectors * d * &eig.inverse))
        }
    }
}

/// Principal square root.
pub fn principal_sqrt(a: &ModelOperator) -> Result<ModelOperator> {
    matrix_function_oracle(a, |z| z.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_resolvent() {
        let a = ModelOperator::real_diagonal(&[1.0, 2.0]).unwrap();
        let u = resolvent_apply(&a, c(1.0, 0.0), &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((u[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((u[1] - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn jordan_block_resolvent() {
        let a = ModelOperator::dense(2, &[c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]).unwrap();
        let u = resolvent_apply(&a, c(0.0, 0.0), &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((u[0] - c(0.5, 0.0)).norm() < 1e-14 && u[1].norm() < 1e-14);
        let u = resolvent_apply(&a, c(0.0, 0.0), &[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((u[0] - c(-0.25, 0.0)).norm() < 1e-14 && (u[1] - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn spectrum_hit_is_singular() {
        let a = ModelOperator::real_diagonal(&[1.0]).unwrap();
        assert!(matches!(resolvent_apply(&a, c(-1.0, 0.0), &[c(3.0, 0.0)]), Err(Error::SingularResolvent { .. })));
        let d = ModelOperator::Dense(a.to_matrix());
        assert!(matches!(resolvent_apply(&d, c(-1.0, 0.0), &[c(3.0, 0.0)]), Err(Error::SingularResolvent { .. })));
    }

    #[test]
    fn dimension_checked() {
        let a = ModelOperator::identity(2);
        assert!(matches!(resolvent_apply(&a, c(1.0, 0.0), &[c(1.0, 0.0)]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn norms() {
        let a = ModelOperator::real_diagonal(&[1.0, 2.0]).unwrap();
        assert_eq!(operator_norm(&a, VectorNormSpec::euclidean()).value, 2.0);
        let n = ModelOperator::dense(2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((operator_norm(&n, VectorNormSpec::euclidean()).value - 1.0).abs() < 1e-12);
        for p in [1.5, 3.0, 7.0] {
            let r = operator_norm(&ModelOperator::identity(3), VectorNormSpec::lp(p).unwrap());
            assert!((r.lower - 1.0).abs() < 1e-12 && (r.upper - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_examples() {
        let e = eigendecompose(&ModelOperator::real_diagonal(&[1.0, 4.0]).unwrap()).unwrap();
        assert_eq!(e.eigenvalues, vec![c(1.0, 0.0), c(4.0, 0.0)]);
        let rot = ModelOperator::dense(2, &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let e = eigendecompose(&rot).unwrap();
        let mut ims: Vec<f64> = e.eigenvalues.iter().map(|l| l.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 1.0).abs() < 1e-12 && (ims[1] - 1.0).abs() < 1e-12);
        assert!(e.defect(&rot) < 1e-8 * e.condition);
        let jordan = ModelOperator::dense(2, &[c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert!(matches!(eigendecompose(&jordan), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn oracle_examples() {
        let a = ModelOperator::real_diagonal(&[1.0, 4.0]).unwrap();
        let r = matrix_function_oracle(&a, |z| z.powf(-0.5)).unwrap();
        assert!(r.distance(&ModelOperator::real_diagonal(&[1.0, 0.5]).unwrap()) < 1e-15);
        let r = matrix_function_oracle(&a, |z| z.powc(c(0.0, 1.0))).unwrap();
        let expect = ModelOperator::diagonal(&[c(1.0, 0.0), Complex64::from_polar(1.0, 4f64.ln())]).unwrap();
        assert!(r.distance(&expect) < 1e-14);
        let dense = ModelOperator::dense(2, &[c(2.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(3.0, 0.0)]).unwrap();
        let back = matrix_function_oracle(&dense, |z| z).unwrap();
        assert!(back.distance(&dense) < 1e-8 * dense.norm2());
        let r = matrix_function_oracle(&ModelOperator::Dense(DMatrix::identity(3, 3)), |z| z * 5.0).unwrap();
        assert!(r.distance(&ModelOperator::identity(3).scale(c(5.0, 0.0))) < 1e-12);
        assert!(matches!(
            matrix_function_oracle(&ModelOperator::real_diagonal(&[0.0]).unwrap(), |z| z.inv()),
            Err(Error::FunctionSingularOnSpectrum { .. })
        ));
    }
}
