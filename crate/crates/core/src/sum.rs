//! Thread-count independent parallel reductions.
//!
//! Terms are grouped into fixed chunks, each chunk is summed sequentially,
//! and the chunk partials are combined by a fixed binary tree.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::Result;

const CHUNK: usize = 16;

pub(crate) trait Accumulate: Clone + Send + Sync {
    fn accumulate(&mut self, other: &Self);
}

impl Accumulate for Vec<Complex64> {
    fn accumulate(&mut self, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += b;
        }
    }
}

impl Accumulate for DMatrix<Complex64> {
    fn accumulate(&mut self, other: &Self) {
        *self += other;
    }
}

fn tree<T: Accumulate>(parts: &[T]) -> T {
    if parts.len() == 1 {
        return parts[0].clone();
    }
    let mid = parts.len() / 2;
    let mut left = tree(&parts[..mid]);
    left.accumulate(&tree(&parts[mid..]));
    left
}

/// Sums `term(k)` over `k in 0..n`, starting from `zero`.
pub(crate) fn par_sum<T, F>(n: usize, zero: T, term: F) -> Result<T>
where
    T: Accumulate,
    F: Fn(usize) -> Result<T> + Sync,
{
    if n == 0 {
        return Ok(zero);
    }
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = zero.clone();
            for k in c * CHUNK..((c + 1) * CHUNK).min(n) {
                acc.accumulate(&term(k)?);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(tree(&parts))
}
