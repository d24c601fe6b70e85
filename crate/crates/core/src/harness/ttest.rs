//! Two-tailed paired t-test on 0/1 correctness sequences.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    /// Infinite when the differences are constant and non-zero.
    pub t: f64,
    pub df: usize,
    pub critical: f64,
    pub significant: bool,
}

/// Two-tailed critical value of Student's t at level [`ALPHA`].
pub fn critical_value(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(1.0 - ALPHA / 2.0)
}

/// Compares the first `k` entries of two correctness sequences.
///
/// Constant differences are a convention: all zero gives `t = 0`, not
/// significant; a non-zero constant gives an infinite `t`, significant.
pub fn paired_t_test(a: &[bool], b: &[bool], k: usize) -> Result<TTest> {
    if k < 2 {
        return Err(Error::Input(format!("paired t-test needs k >= 2, got {k}")));
    }
    if a.len() < k || b.len() < k {
        return Err(Error::Input(format!(
            "sequences of length {} and {} are shorter than k = {k}",
            a.len(),
            b.len()
        )));
    }
    let sums = differences(a, b, k);
    Ok(from_sums(sums.0, sums.1, k, critical_value(k - 1)))
}

/// `(sum d, sum d^2)` over the first `k` differences.
pub(crate) fn differences(a: &[bool], b: &[bool], k: usize) -> (i64, i64) {
    a[..k].iter().zip(&b[..k]).fold((0, 0), |(s, q), (&x, &y)| {
        let d = x as i64 - y as i64;
        (s + d, q + d * d)
    })
}

pub(crate) fn from_sums(sum: i64, sum_sq: i64, k: usize, critical: f64) -> TTest {
    let kf = k as f64;
    let mean = sum as f64 / kf;
    // Sum of squared deviations, exact in integers: sum_sq - sum^2/k.
    let ss = (sum_sq * k as i64 - sum * sum) as f64 / kf;
    let (t, significant) = if ss <= 0.0 {
        if sum == 0 {
            (0.0, false)
        } else {
            (f64::INFINITY.copysign(mean), true)
        }
    } else {
        let sd = (ss / (kf - 1.0)).sqrt();
        let t = mean * kf.sqrt() / sd;
        (t, t.abs() > critical)
    };
    TTest { t, df: k - 1, critical, significant }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(xs: &[u8]) -> Vec<bool> {
        xs.iter().map(|&x| x == 1).collect()
    }

    #[test]
    fn identical_sequences() {
        let a = bits(&[1, 0, 1, 1, 0]);
        let t = paired_t_test(&a, &a, 5).unwrap();
        assert_eq!(t.t, 0.0);
        assert!(!t.significant);
    }

    #[test]
    fn alternating_differences() {
        let a = bits(&[1, 0, 1, 0]);
        let b = bits(&[0, 0, 0, 0]);
        let t = paired_t_test(&a, &b, 4).unwrap();
        // mean 1/2, sd sqrt(1/3): t = (1/2)(2)/sqrt(1/3) = sqrt(3)
        assert!((t.t - 3f64.sqrt()).abs() < 1e-12);
        assert!((t.t - 1.732).abs() < 5e-4);
        assert!((t.critical - 3.182).abs() < 5e-4);
        assert_eq!(t.df, 3);
        assert!(!t.significant);
    }

    #[test]
    fn swapping_negates() {
        let a = bits(&[1, 1, 0, 1, 1, 0, 1]);
        let b = bits(&[0, 1, 0, 0, 1, 1, 0]);
        let ab = paired_t_test(&a, &b, 7).unwrap();
        let ba = paired_t_test(&b, &a, 7).unwrap();
        assert_eq!(ab.t, -ba.t);
        assert_eq!(ab.significant, ba.significant);
    }

    #[test]
    fn constant_nonzero_difference_is_significant() {
        let t = paired_t_test(&bits(&[1, 1, 1]), &bits(&[0, 0, 0]), 3).unwrap();
        assert_eq!(t.t, f64::INFINITY);
        assert!(t.significant);
    }

    #[test]
    fn rejects_short_input() {
        let a = bits(&[1, 0]);
        assert!(matches!(paired_t_test(&a, &a, 1), Err(Error::Input(_))));
        assert!(matches!(paired_t_test(&a, &a, 3), Err(Error::Input(_))));
    }

    #[test]
    fn critical_values_match_tables() {
        for (df, v) in [(1, 12.706), (2, 4.303), (10, 2.228), (30, 2.042), (120, 1.980)] {
            assert!((critical_value(df) - v).abs() < 5e-4, "df {df}");
        }
    }
}
