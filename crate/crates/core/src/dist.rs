//! Moment-matched approximations of the posterior density of mutual
//! information on its support `[0, I_max]`, and the tail scaling exponents.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::special::beta_reg;

/// Approximating family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    Gamma,
    #[default]
    Beta,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Normal => "normal",
            Family::Gamma => "gamma",
            Family::Beta => "beta",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(Family::Normal),
            "gamma" => Ok(Family::Gamma),
            "beta" => Ok(Family::Beta),
            _ => Err(Error::Config(format!("unknown distribution family '{s}'"))),
        }
    }
}

/// A fitted distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistApprox {
    Normal { mean: f64, variance: f64 },
    Gamma { shape: f64, scale: f64 },
    /// Beta(alpha, beta) stretched onto `[0, scale]`, `scale = I_max`.
    Beta { alpha: f64, beta: f64, scale: f64 },
    PointMass { location: f64 },
}

/// Moment-matches `family` to `(mean, variance)` on `[0, i_max]`.
///
/// A zero variance, or a zero `i_max`, gives a point mass. An infeasible
/// Beta moment pair is an error here; [`fit_or_fallback`] degrades instead.
pub fn fit(family: Family, mean: f64, variance: f64, i_max: f64) -> Result<DistApprox> {
    if !mean.is_finite() || !variance.is_finite() || variance < 0.0 {
        return Err(Error::Domain(format!(
            "cannot fit mean {mean}, variance {variance}"
        )));
    }
    if i_max <= 0.0 {
        return Ok(DistApprox::PointMass { location: 0.0 });
    }
    if variance == 0.0 {
        return Ok(DistApprox::PointMass { location: mean });
    }
    match family {
        Family::Normal => Ok(DistApprox::Normal { mean, variance }),
        Family::Gamma => {
            if mean <= 0.0 {
                return Err(Error::Domain(format!("gamma fit needs a positive mean, got {mean}")));
            }
            Ok(DistApprox::Gamma {
                shape: mean * mean / variance,
                scale: variance / mean,
            })
        }
        Family::Beta => {
            if !(mean > 0.0 && mean < i_max) {
                return Err(Error::Domain(format!(
                    "beta fit needs a mean inside (0, {i_max}), got {mean}"
                )));
            }
            let bound = mean * (i_max - mean);
            if variance >= bound {
                return Err(Error::InfeasibleFit { variance, bound });
            }
            let m = mean / i_max;
            let v = variance / (i_max * i_max);
            let alpha = m * (m * (1.0 - m) / v - 1.0);
            Ok(DistApprox::Beta {
                alpha,
                beta: alpha * (1.0 - m) / m,
                scale: i_max,
            })
        }
    }
}

/// A fit that never aborts a filter run, with a note when it had to degrade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustFit {
    pub dist: DistApprox,
    pub fallback: Option<String>,
}

/// Like [`fit`], but an infeasible Beta falls back to a Gamma and a
/// non-positive mean to a point mass at zero.
pub fn fit_or_fallback(family: Family, mean: f64, variance: f64, i_max: f64) -> Result<RobustFit> {
    let mean = mean.clamp(0.0, i_max.max(0.0));
    if mean <= 0.0 && i_max > 0.0 && variance > 0.0 && family != Family::Normal {
        return Ok(RobustFit {
            dist: DistApprox::PointMass { location: 0.0 },
            fallback: Some(format!("{family} fit needs a positive mean; using a point mass at 0")),
        });
    }
    match fit(family, mean, variance, i_max) {
        Err(Error::InfeasibleFit { variance, bound }) => Ok(RobustFit {
            dist: fit(Family::Gamma, mean, variance, i_max)?,
            fallback: Some(format!(
                "beta moments infeasible (variance {variance:e} >= {bound:e}); using gamma"
            )),
        }),
        other => other.map(|dist| RobustFit { dist, fallback: None }),
    }
}

impl DistApprox {
    pub fn family_name(&self) -> &'static str {
        match self {
            DistApprox::Normal { .. } => "normal",
            DistApprox::Gamma { .. } => "gamma",
            DistApprox::Beta { .. } => "beta",
            DistApprox::PointMass { .. } => "point_mass",
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistApprox::Normal { mean, .. } => mean,
            DistApprox::Gamma { shape, scale } => shape * scale,
            DistApprox::Beta { alpha, beta, scale } => scale * alpha / (alpha + beta),
            DistApprox::PointMass { location } => location,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            DistApprox::Normal { variance, .. } => variance,
            DistApprox::Gamma { shape, scale } => shape * scale * scale,
            DistApprox::Beta { alpha, beta, scale } => {
                let t = alpha + beta;
                scale * scale * alpha * beta / (t * t * (t + 1.0))
            }
            DistApprox::PointMass { .. } => 0.0,
        }
    }

    /// Closed support interval.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            DistApprox::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            DistApprox::Gamma { .. } => (0.0, f64::INFINITY),
            DistApprox::Beta { scale, .. } => (0.0, scale),
            DistApprox::PointMass { location } => (location, location),
        }
    }

    /// `P(I <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DistApprox::Normal { mean, variance } => {
                0.5 * erfc(-(x - mean) / (2.0 * variance).sqrt())
            }
            DistApprox::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    gamma_lr(shape, x / scale)
                }
            }
            DistApprox::Beta { alpha, beta, scale } => beta_reg(alpha, beta, x / scale),
            DistApprox::PointMass { location } => {
                if x >= location {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `P(I < x)`; differs from [`cdf`](Self::cdf) only at a point mass.
    pub fn cdf_below(&self, x: f64) -> f64 {
        match *self {
            DistApprox::PointMass { location } => {
                if x > location {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.cdf(x),
        }
    }

    /// `P(I > eps)`.
    pub fn prob_exceeds(&self, eps: f64) -> f64 {
        1.0 - self.cdf(eps)
    }

    /// Smallest `x` with `cdf(x) >= q`, found by bisection to float resolution.
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let (lo, hi) = self.support();
        if let DistApprox::PointMass { location } = *self {
            return location;
        }
        if q == 0.0 {
            return lo;
        }
        if q == 1.0 {
            return hi;
        }
        let (mut lo, mut hi) = match *self {
            DistApprox::Normal { mean, variance } => {
                let sd = variance.sqrt();
                (mean - 40.0 * sd, mean + 40.0 * sd)
            }
            DistApprox::Gamma { .. } => {
                let mut hi = self.mean().max(f64::MIN_POSITIVE);
                while self.cdf(hi) < q {
                    hi *= 2.0;
                }
                (0.0, hi)
            }
            _ => (lo, hi),
        };
        loop {
            let mid = lo + 0.5 * (hi - lo);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if (self.cdf(lo) - q).abs() < (self.cdf(hi) - q).abs() {
            lo
        } else {
            hi
        }
    }
}

/// Power-law exponents of the posterior density near the ends of its support:
/// `p(I) ~ I^lower` as `I -> 0` and `p(I_max - d) ~ d^upper` as `d -> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailExponents {
    pub lower: f64,
    pub upper: f64,
}

pub fn tail_exponents(r: usize, s: usize) -> TailExponents {
    let dof = ((r.max(1) - 1) * (s.max(1) - 1)) as f64;
    TailExponents {
        lower: 0.5 * dof - 1.0,
        upper: (r.min(s) as f64 - 3.0) / 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_shape_one_is_exponential() {
        let d = fit(Family::Gamma, 2.0, 4.0, 10.0).unwrap();
        assert_eq!(d, DistApprox::Gamma { shape: 1.0, scale: 2.0 });
        assert!((d.cdf(3.0) - (1.0 - (-1.5f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn beta_fit_example() {
        let d = fit(Family::Beta, 0.25, 0.01, 1.0).unwrap();
        match d {
            DistApprox::Beta { alpha, beta, scale } => {
                assert!((alpha - 4.4375).abs() < 1e-12);
                assert!((beta - 13.3125).abs() < 1e-12);
                assert_eq!(scale, 1.0);
            }
            other => panic!("{other:?}"),
        }
        assert!((d.mean() - 0.25).abs() < 1e-15);
        assert!((d.variance() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn normal_fit_is_identity() {
        let d = fit(Family::Normal, 0.1, 0.002, 0.69).unwrap();
        assert_eq!(d, DistApprox::Normal { mean: 0.1, variance: 0.002 });
        assert_eq!(d.cdf(0.1), 0.5);
        assert!((d.prob_exceeds(0.1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_fits() {
        assert_eq!(
            fit(Family::Beta, 0.0, 0.0, 0.0).unwrap(),
            DistApprox::PointMass { location: 0.0 }
        );
        assert_eq!(
            fit(Family::Beta, 0.2, 0.0, 0.69).unwrap(),
            DistApprox::PointMass { location: 0.2 }
        );
        let p = DistApprox::PointMass { location: 0.0 };
        assert_eq!(p.prob_exceeds(0.003), 0.0);
        assert_eq!(p.cdf(-1.0), 0.0);
        assert_eq!(p.quantile(0.0), 0.0);
    }

    #[test]
    fn infeasible_beta() {
        let err = fit(Family::Beta, 0.3, 0.3, 1.0).unwrap_err();
        assert!(matches!(err, Error::InfeasibleFit { .. }));
        assert!(err.to_string().contains("mean*(i_max-mean)"));
        let rf = fit_or_fallback(Family::Beta, 0.3, 0.3, 1.0).unwrap();
        assert_eq!(rf.dist.family_name(), "gamma");
        assert!(rf.fallback.is_some());
        assert!(fit_or_fallback(Family::Beta, 0.3, 0.01, 1.0).unwrap().fallback.is_none());
    }

    #[test]
    fn support_clamps() {
        let b = DistApprox::Beta { alpha: 1.0, beta: 1.0, scale: 1.0 };
        assert!((b.cdf(0.3) - 0.3).abs() < 1e-15);
        assert_eq!(b.cdf(-1.0), 0.0);
        assert_eq!(b.cdf(2.0), 1.0);
        let g = fit(Family::Gamma, 0.1, 0.001, 0.69).unwrap();
        assert_eq!(g.cdf(-1.0), 0.0);
    }

    #[test]
    fn quantile_examples() {
        let n = DistApprox::Normal { mean: 0.0, variance: 1.0 };
        assert!(n.quantile(0.5).abs() < 1e-12);
        assert!((n.quantile(0.975) - 1.959963984540054).abs() < 1e-9);
        assert_eq!(n.quantile(0.0), f64::NEG_INFINITY);
        let b = fit(Family::Beta, 0.05, 0.0004, 2f64.ln()).unwrap();
        assert_eq!(b.quantile(0.0), 0.0);
        assert_eq!(b.quantile(1.0), 2f64.ln());
        assert!((b.cdf(b.quantile(0.95)) - 0.95).abs() <= 1e-8);
    }

    #[test]
    fn tail_exponent_examples() {
        assert_eq!(tail_exponents(2, 2), TailExponents { lower: -0.5, upper: -0.5 });
        assert_eq!(tail_exponents(3, 3), TailExponents { lower: 1.0, upper: 0.0 });
        assert_eq!(tail_exponents(2, 5), TailExponents { lower: 1.0, upper: -0.5 });
        assert_eq!(tail_exponents(5, 2), tail_exponents(2, 5));
    }

    #[test]
    fn family_parsing() {
        assert_eq!("Beta".parse::<Family>().unwrap(), Family::Beta);
        assert_eq!("gaussian".parse::<Family>().unwrap(), Family::Normal);
        assert!("cauchy".parse::<Family>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn moment_pair() -> impl Strategy<Value = (f64, f64, f64)> {
            (prop::sample::select(vec![2f64.ln(), 3f64.ln(), 1.0]), 0.05f64..0.95, 0.001f64..0.5)
                .prop_map(|(i_max, m, frac)| {
                    let mean = m * i_max;
                    (mean, frac * mean * (i_max - mean), i_max)
                })
        }

        fn step(x: f64, up: bool) -> f64 {
            if x == 0.0 {
                return if up { f64::from_bits(1) } else { -f64::from_bits(1) };
            }
            let bits = x.to_bits();
            f64::from_bits(if (x > 0.0) == up { bits + 1 } else { bits - 1 })
        }

        fn rel(a: f64, b: f64) -> f64 {
            (a - b).abs() / b.abs()
        }

        proptest! {
            #[test]
            fn moments_round_trip((mean, var, i_max) in moment_pair()) {
                for family in [Family::Normal, Family::Gamma, Family::Beta] {
                    let d = fit(family, mean, var, i_max).unwrap();
                    prop_assert!(rel(d.mean(), mean) <= 1e-10, "{family}");
                    prop_assert!(rel(d.variance(), var) <= 1e-10, "{family}");
                }
            }

            #[test]
            fn cdf_nondecreasing_and_quantile_inverts((mean, var, i_max) in moment_pair(), q in 0.001f64..0.999) {
                for family in [Family::Normal, Family::Gamma, Family::Beta] {
                    let d = fit(family, mean, var, i_max).unwrap();
                    let mut prev = 0.0;
                    for k in 0..=1000 {
                        let c = d.cdf(i_max * k as f64 / 1000.0);
                        prop_assert!(c >= prev && (0.0..=1.0).contains(&c));
                        prev = c;
                    }
                    if family != Family::Normal {
                        prop_assert_eq!(d.cdf(0.0), 0.0);
                    }
                    let x = d.quantile(q);
                    let (below, above) = (d.cdf(step(x, false)), d.cdf(step(x, true)));
                    prop_assert!(below <= q + 1e-12 && above >= q - 1e-12, "{family} q={q} x={x}");
                    // Near a support end with a small shape the cdf can step by more
                    // than 1e-8 between adjacent doubles.
                    if above - below <= 1e-9 {
                        prop_assert!((d.cdf(x) - q).abs() <= 1e-8, "{family} q={q} x={x}");
                    }
                }
                let b = fit(Family::Beta, mean, var, i_max).unwrap();
                prop_assert_eq!(b.cdf(i_max), 1.0);
            }
        }
    }
}
