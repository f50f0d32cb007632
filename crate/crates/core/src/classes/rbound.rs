use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::linop::{ModelOperator, VectorNormSpec};
use crate::{Error, Result};

/// Largest number of sign patterns enumerated exactly.
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct RademacherTrialSpec {
    /// Operators drawn (with replacement) per trial.
    pub n: usize,
    pub trials: usize,
    /// Probe tuples per trial.
    pub probes: usize,
    /// Sign vectors per probe tuple when enumeration is too large.
    pub sign_samples: usize,
    pub seed: u64,
}

impl Default for RademacherTrialSpec {
    fn default() -> Self {
        Self { n: 4, trials: 100, probes: 16, sign_samples: 1 << 12, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RBoundMode {
    /// Every sign pattern enumerated.
    Exhaustive,
    /// Hilbert-space orthogonality: `E||sum e_k y_k||^2 = sum ||y_k||^2`.
    Orthogonal,
    /// Random sign vectors.
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RBoundEstimate {
    /// Largest observed Rademacher ratio; a lower bound for the R-bound.
    pub estimate: f64,
    /// `sup_k ||A_k||`, the exact R-bound when `p = 2`.
    pub sup_norm: Option<f64>,
    pub mode: RBoundMode,
    pub trials: usize,
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))).collect()
}

fn adjoint_apply(a: &ModelOperator, x: &[Complex64]) -> Vec<Complex64> {
    match a {
        ModelOperator::Diagonal(d) => d.iter().zip(x).map(|(a, v)| a.conj() * v).collect(),
        ModelOperator::Dense(m) => ModelOperator::Dense(m.adjoint()).apply(x),
    }
}

/// Rademacher average `(E ||sum eps_k y_k||^2)^{1/2}`.
fn average(ys: &[Vec<Complex64>], norm: VectorNormSpec, mode: RBoundMode, signs: &[Vec<f64>]) -> f64 {
    let dim = ys[0].len();
    match mode {
        RBoundMode::Orthogonal => ys.iter().map(|y| norm.norm(y).powi(2)).sum::<f64>().sqrt(),
        RBoundMode::Exhaustive => {
            let n = ys.len();
            let total = 1usize << n;
            let mut acc = 0.0;
            let mut s = vec![Complex64::new(0.0, 0.0); dim];
            for pat in 0..total {
                s.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                for (k, y) in ys.iter().enumerate() {
                    let e = if pat >> k & 1 == 1 { -1.0 } else { 1.0 };
                    for (a, b) in s.iter_mut().zip(y) {
                        *a += e * b;
                    }
                }
                acc += norm.norm(&s).powi(2);
            }
            (acc / total as f64).sqrt()
        }
        RBoundMode::Sampled => {
            let mut acc = 0.0;
            let mut s = vec![Complex64::new(0.0, 0.0); dim];
            for eps in signs {
                s.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                for (e, y) in eps.iter().zip(ys) {
                    for (a, b) in s.iter_mut().zip(y) {
                        *a += e * b;
                    }
                }
                acc += norm.norm(&s).powi(2);
            }
            (acc / signs.len() as f64).sqrt()
        }
    }
}

/// Monte-Carlo lower bound for the R-bound of `family`.
///
/// Each trial draws `n` members with replacement and `probes` tuples of
/// probe vectors with log-uniform scales in `[1e-3, 1e3]`, each aligned with
/// the dominant right singular direction by a few power steps.
pub fn estimate_r_bound(
    family: &[ModelOperator],
    spec: &RademacherTrialSpec,
    norm: VectorNormSpec,
) -> Result<RBoundEstimate> {
    let first = family.first().ok_or_else(|| Error::InvalidParameter("empty operator family".into()))?;
    let dim = first.dim();
    if let Some(bad) = family.iter().find(|a| a.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, actual: bad.dim() });
    }
    if spec.n == 0 || spec.trials == 0 || spec.probes == 0 {
        return Err(Error::InvalidParameter("trial spec needs n, trials and probes >= 1".into()));
    }
    let n = spec.n;
    let patterns = (spec.trials as u64).saturating_mul(1u64.checked_shl(n as u32).unwrap_or(u64::MAX));
    let mode = if n < 63 && patterns <= EXHAUSTIVE_LIMIT {
        RBoundMode::Exhaustive
    } else if norm.is_euclidean() {
        RBoundMode::Orthogonal
    } else {
        RBoundMode::Sampled
    };

    // Per-trial seeds are drawn sequentially so results do not depend on scheduling.
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let seeds: Vec<u64> = (0..spec.trials).map(|_| master.random()).collect();
    let ratios: Vec<f64> = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let members: Vec<&ModelOperator> = (0..n).map(|_| &family[rng.random_range(0..family.len())]).collect();
            let signs: Vec<Vec<f64>> = if mode == RBoundMode::Sampled {
                (0..spec.sign_samples)
                    .map(|_| (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect())
                    .collect()
            } else {
                Vec::new()
            };
            let mut best: f64 = 0.0;
            for _ in 0..spec.probes {
                let xs: Vec<Vec<Complex64>> = members
                    .iter()
                    .map(|a| {
                        let mut x = gaussian(&mut rng, dim);
                        for _ in 0..6 {
                            let y = adjoint_apply(a, &a.apply(&x));
                            let ny = VectorNormSpec::euclidean().norm(&y);
                            if ny > 0.0 {
                                x = y.iter().map(|v| v / ny).collect();
                            }
                        }
                        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
                        x.iter().map(|v| v * scale).collect()
                    })
                    .collect();
                let ys: Vec<Vec<Complex64>> = members.iter().zip(&xs).map(|(a, x)| a.apply(x)).collect();
                let den = average(&xs, norm, mode, &signs);
                if den > 0.0 {
                    best = best.max(average(&ys, norm, mode, &signs) / den);
                }
            }
            best
        })
        .collect();
    let estimate = ratios.iter().cloned().fold(0.0, f64::max);
    let sup_norm = norm.is_euclidean().then(|| family.iter().map(|a| a.norm2()).fold(0.0, f64::max));
    Ok(RBoundEstimate { estimate, sup_norm, mode, trials: spec.trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_identity() {
        let spec = RademacherTrialSpec { n: 3, trials: 20, ..Default::default() };
        let r = estimate_r_bound(&[ModelOperator::identity(2)], &spec, VectorNormSpec::euclidean()).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-12);
        let r = estimate_r_bound(&[ModelOperator::identity(2)], &spec, VectorNormSpec::lp(3.0).unwrap()).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hilbert_shortcut() {
        let fam = [ModelOperator::real_diagonal(&[1.0]).unwrap(), ModelOperator::real_diagonal(&[2.0]).unwrap()];
        let spec = RademacherTrialSpec { n: 4, trials: 100, ..Default::default() };
        let r = estimate_r_bound(&fam, &spec, VectorNormSpec::euclidean()).unwrap();
        assert_eq!(r.mode, RBoundMode::Exhaustive);
        assert_eq!(r.sup_norm, Some(2.0));
        assert!(r.estimate <= 2.0 + 1e-8 && r.estimate >= 0.98 * 2.0, "{}", r.estimate);
    }

    #[test]
    fn singleton_dense_reaches_norm() {
        let a = ModelOperator::dense(
            2,
            &[Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0)],
        )
        .unwrap();
        let spec = RademacherTrialSpec { n: 1, trials: 50, ..Default::default() };
        let r = estimate_r_bound(std::slice::from_ref(&a), &spec, VectorNormSpec::euclidean()).unwrap();
        assert!((r.estimate / a.norm2() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dimension_mismatch() {
        let fam = [ModelOperator::identity(1), ModelOperator::identity(2)];
        assert!(matches!(
            estimate_r_bound(&fam, &RademacherTrialSpec::default(), VectorNormSpec::euclidean()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
