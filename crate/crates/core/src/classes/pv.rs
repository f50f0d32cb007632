use std::f64::consts::PI;

use num_complex::Complex64;

use crate::linop::ModelOperator;
use crate::sum::par_sum;
use crate::{Error, Result};

/// `(1/(i pi)) pv int_{iR + a} (A + lambda)^{-1} u d lambda`, truncated to
/// `|Im lambda| <= R` with an `M`-interval trapezoid rule.
pub fn pv_projection(a: &ModelOperator, shift: f64, u: &[Complex64], r: f64, m: usize) -> Result<Vec<Complex64>> {
    if u.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: u.len() });
    }
    if m == 0 || m % 2 != 0 || !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("need even M > 0 and R > 0, got M={m}, R={r}")));
    }
    for mu in a.spectrum() {
        if -mu.re >= shift {
            return Err(Error::SingularResolvent { lambda: -mu });
        }
    }
    if u.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Ok(u.to_vec());
    }
    let h = 2.0 * r / m as f64;
    let mut v = par_sum(m + 1, vec![Complex64::new(0.0, 0.0); u.len()], |k| {
        let y = if k == m { r } else { -r + k as f64 * h };
        let w = if k == 0 || k == m { 0.5 * h } else { h };
        let x = a.resolvent(Complex64::new(shift, y))?.apply(u);
        Ok(x.into_iter().map(|z| z * w).collect())
    })?;
    for z in &mut v {
        *z /= PI;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::log_log_slope;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn err(a: &ModelOperator, u: &[Complex64], r: f64) -> f64 {
        let v = pv_projection(a, 0.0, u, r, (4.0 * r) as usize).unwrap();
        v.iter().zip(u).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn scalar_and_diagonal() {
        let a = ModelOperator::real_diagonal(&[2.0]).unwrap();
        assert!(err(&a, &[one()], 1e3) < 1e-2);
        let b = ModelOperator::real_diagonal(&[1.0, 3.0]).unwrap();
        assert!(err(&b, &[one(), one()], 1e3) < 1e-2);
        let z = pv_projection(&b, 0.0, &[Complex64::default(); 2], 10.0, 10).unwrap();
        assert!(z.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn first_order_rate() {
        let b = ModelOperator::real_diagonal(&[1.0, 3.0]).unwrap();
        let rs = [1e2, 1e3, 1e4];
        let es: Vec<f64> = rs.iter().map(|&r| err(&b, &[one(), one()], r)).collect();
        let slope = log_log_slope(&rs, &es);
        assert!((slope + 1.0).abs() < 0.2, "{slope}");
    }
}
