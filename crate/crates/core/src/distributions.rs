//! One-dimensional probability measures that rules are built for.
//!
//! Every distribution carries an affine map between physical coordinates `x`
//! and a canonical coordinate `t = (x - center) / half_width`. For bounded
//! distributions the canonical support is `[-1, 1]`; for the normal
//! distribution `t` is the standard score. Moments of `t` have closed forms
//! for every family, which keeps Vandermonde right-hand sides exact.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// A moment-defined 1D probability measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRepr", into = "DistributionRepr")]
pub enum Distribution {
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Beta(a, b) mapped affinely onto `[lo, hi]`.
    Beta { a: f64, b: f64, lo: f64, hi: f64 },
    /// Normal with the given mean and standard deviation.
    Normal { mean: f64, stddev: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum DistributionRepr {
    Uniform {
        range: [f64; 2],
    },
    Beta {
        a: f64,
        b: f64,
        #[serde(default = "unit_range")]
        range: [f64; 2],
    },
    Normal {
        mean: f64,
        stddev: f64,
    },
}

fn unit_range() -> [f64; 2] {
    [0.0, 1.0]
}

impl TryFrom<DistributionRepr> for Distribution {
    type Error = Error;

    fn try_from(repr: DistributionRepr) -> Result<Self> {
        match repr {
            DistributionRepr::Uniform { range } => Distribution::uniform(range[0], range[1]),
            DistributionRepr::Beta { a, b, range } => {
                Distribution::beta_on(a, b, range[0], range[1])
            }
            DistributionRepr::Normal { mean, stddev } => Distribution::normal(mean, stddev),
        }
    }
}

impl From<Distribution> for DistributionRepr {
    fn from(dist: Distribution) -> Self {
        match dist {
            Distribution::Uniform { lo, hi } => DistributionRepr::Uniform { range: [lo, hi] },
            Distribution::Beta { a, b, lo, hi } => DistributionRepr::Beta {
                a,
                b,
                range: [lo, hi],
            },
            Distribution::Normal { mean, stddev } => DistributionRepr::Normal { mean, stddev },
        }
    }
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidDistribution(format!(
            "range [{lo}, {hi}] must be finite with lo < hi"
        )));
    }
    Ok(())
}

impl Distribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        check_range(lo, hi)?;
        Ok(Distribution::Uniform { lo, hi })
    }

    /// Beta(a, b) on `(0, 1)`.
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Self::beta_on(a, b, 0.0, 1.0)
    }

    pub fn beta_on(a: f64, b: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "beta shape parameters must be positive, got ({a}, {b})"
            )));
        }
        check_range(lo, hi)?;
        Ok(Distribution::Beta { a, b, lo, hi })
    }

    pub fn normal(mean: f64, stddev: f64) -> Result<Self> {
        if !(mean.is_finite() && stddev.is_finite() && stddev > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "normal requires finite mean and positive stddev, got ({mean}, {stddev})"
            )));
        }
        Ok(Distribution::Normal { mean, stddev })
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, Distribution::Normal { .. })
    }

    /// Closed support interval; infinite endpoints for the normal distribution.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Distribution::Uniform { lo, hi } | Distribution::Beta { lo, hi, .. } => (lo, hi),
            Distribution::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Origin of the canonical coordinate.
    pub fn center(&self) -> f64 {
        match *self {
            Distribution::Uniform { lo, hi } | Distribution::Beta { lo, hi, .. } => {
                0.5 * (lo + hi)
            }
            Distribution::Normal { mean, .. } => mean,
        }
    }

    /// Unit of the canonical coordinate.
    pub fn half_width(&self) -> f64 {
        match *self {
            Distribution::Uniform { lo, hi } | Distribution::Beta { lo, hi, .. } => {
                0.5 * (hi - lo)
            }
            Distribution::Normal { stddev, .. } => stddev,
        }
    }

    pub fn to_canonical(&self, x: f64) -> f64 {
        (x - self.center()) / self.half_width()
    }

    pub fn from_canonical(&self, t: f64) -> f64 {
        self.center() + self.half_width() * t
    }

    /// Center of mirror symmetry of the density, if there is one.
    pub fn symmetry_center(&self) -> Option<f64> {
        match *self {
            Distribution::Beta { a, b, .. } if a != b => None,
            _ => Some(self.center()),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Distribution::Beta { a, b, lo, hi } => {
                if !(lo..=hi).contains(&x) {
                    return 0.0;
                }
                let y = (x - lo) / (hi - lo);
                let log_norm = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
                y.powf(a - 1.0) * (1.0 - y).powf(b - 1.0) * log_norm.exp() / (hi - lo)
            }
            Distribution::Normal { mean, stddev } => {
                let z = (x - mean) / stddev;
                (-0.5 * z * z).exp() / (stddev * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }

    /// `E[t^j]` for the canonical coordinate `t`.
    pub fn canonical_moment(&self, j: usize) -> f64 {
        self.canonical_moments(j)[j]
    }

    /// `E[t^i]` for `i = 0..=max_order`.
    pub fn canonical_moments(&self, max_order: usize) -> Vec<f64> {
        let mut m = vec![0.0; max_order + 1];
        m[0] = 1.0;
        match *self {
            Distribution::Uniform { .. } => {
                for (j, mj) in m.iter_mut().enumerate().skip(2).step_by(2) {
                    *mj = 1.0 / (j as f64 + 1.0);
                }
            }
            Distribution::Beta { a, b, .. } => {
                // Pearson recurrence of the density (1+t)^(a-1) (1-t)^(b-1):
                // (a + b + k) m_{k+1} = (a - b) m_k + k m_{k-1}.
                let skew = if a == b { 0.0 } else { a - b };
                for k in 0..max_order {
                    let prev = if k == 0 { 0.0 } else { m[k - 1] };
                    m[k + 1] = (skew * m[k] + k as f64 * prev) / (a + b + k as f64);
                }
            }
            Distribution::Normal { .. } => {
                for j in (2..=max_order).step_by(2) {
                    m[j] = m[j - 2] * (j as f64 - 1.0);
                }
            }
        }
        m
    }

    /// `E[x^j]` in physical coordinates.
    pub fn raw_moment(&self, j: usize) -> Result<f64> {
        let value = match *self {
            Distribution::Beta { a, b, lo, hi } if a != b => {
                // Integrating d/dx[(x-lo)^a (hi-x)^b x^k] by parts gives
                // (a+b+k) M_{k+1} = (a hi + b lo + k (lo+hi)) M_k - k lo hi M_{k-1}.
                let (mut prev, mut cur) = (0.0, 1.0);
                for k in 0..j {
                    let kf = k as f64;
                    let next = ((a * hi + b * lo + kf * (lo + hi)) * cur - kf * lo * hi * prev) / (a + b + kf);
                    prev = cur;
                    cur = next;
                }
                cur
            }
            _ => {
                // Symmetric families: odd canonical moments vanish, so every
                // surviving term of the binomial expansion has the same sign.
                let c = self.center();
                let h = self.half_width();
                let m = self.canonical_moments(j);
                (0..=j)
                    .step_by(2)
                    .map(|i| binomial_f64(j, i) * c.powi((j - i) as i32) * h.powi(i as i32) * m[i])
                    .sum()
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::MomentOverflow { order: j })
        }
    }
}

pub(crate) fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Distribution::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
            Distribution::Beta { a, b, lo, hi } => write!(f, "beta:{a},{b}:{lo},{hi}"),
            Distribution::Normal { mean, stddev } => write!(f, "normal:{mean},{stddev}"),
        }
    }
}

/// Parses `uniform:LO,HI`, `beta:A,B[:LO,HI]` and `normal:MEAN,STDDEV`.
impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidDistribution(format!("cannot parse distribution spec '{s}'"));
        let pair = |part: &str| -> Result<(f64, f64)> {
            let (x, y) = part.split_once(',').ok_or_else(bad)?;
            Ok((
                x.trim().parse().map_err(|_| bad())?,
                y.trim().parse().map_err(|_| bad())?,
            ))
        };
        let mut parts = s.split(':');
        let kind = parts.next().ok_or_else(bad)?.trim().to_ascii_lowercase();
        let params: Vec<&str> = parts.collect();
        match (kind.as_str(), params.as_slice()) {
            ("uniform", [range]) => {
                let (lo, hi) = pair(range)?;
                Distribution::uniform(lo, hi)
            }
            ("uniform", []) => Distribution::uniform(0.0, 1.0),
            ("beta", [shape]) => {
                let (a, b) = pair(shape)?;
                Distribution::beta(a, b)
            }
            ("beta", [shape, range]) => {
                let (a, b) = pair(shape)?;
                let (lo, hi) = pair(range)?;
                Distribution::beta_on(a, b, lo, hi)
            }
            ("normal", [params]) => {
                let (mean, stddev) = pair(params)?;
                Distribution::normal(mean, stddev)
            }
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_moments() {
        let d = Distribution::uniform(-1.0, 1.0).unwrap();
        assert_eq!(d.raw_moment(0).unwrap(), 1.0);
        assert_eq!(d.raw_moment(1).unwrap(), 0.0);
        assert_relative_eq!(d.raw_moment(2).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn normal_fourth_moment_is_three() {
        let d = Distribution::normal(0.0, 1.0).unwrap();
        assert_relative_eq!(d.raw_moment(4).unwrap(), 3.0, epsilon = 1e-15);
        // shifted: E[(1 + 2 Z)^2] = 1 + 4
        let d = Distribution::normal(1.0, 2.0).unwrap();
        assert_relative_eq!(d.raw_moment(2).unwrap(), 5.0, epsilon = 1e-14);
    }

    #[test]
    fn beta_moments_match_product_formula() {
        let d = Distribution::beta(2.0, 5.0).unwrap();
        // E[X] = a/(a+b), E[X^2] = a(a+1)/((a+b)(a+b+1))
        assert_relative_eq!(d.raw_moment(1).unwrap(), 2.0 / 7.0, epsilon = 1e-15);
        assert_relative_eq!(d.raw_moment(2).unwrap(), 6.0 / 56.0, epsilon = 1e-15);
        // symmetric case goes through the canonical recurrence
        let d = Distribution::beta(4.0, 4.0).unwrap();
        assert_relative_eq!(d.raw_moment(1).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(d.raw_moment(2).unwrap(), 20.0 / 72.0, epsilon = 1e-15);
    }

    #[test]
    fn pdf_values() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.pdf(0.5), 1.0);
        assert_eq!(u.pdf(2.0), 0.0);
        let b = Distribution::beta(4.0, 4.0).unwrap();
        assert_relative_eq!(b.pdf(0.5), 35.0 / 16.0, epsilon = 1e-13);
        assert_eq!(b.pdf(-0.1), 0.0);
    }

    #[test]
    fn large_shape_beta_pdf_is_finite() {
        let b = Distribution::beta(300.0, 300.0).unwrap();
        let p = b.pdf(0.5);
        assert!(p.is_finite() && p > 0.0);
    }

    #[test]
    fn symmetry_centers() {
        assert_eq!(Distribution::uniform(-1.0, 1.0).unwrap().symmetry_center(), Some(0.0));
        let c = Distribution::beta_on(4.0, 4.0, 0.0038, 0.05)
            .unwrap()
            .symmetry_center()
            .unwrap();
        assert_relative_eq!(c, 0.0269, epsilon = 1e-15);
        assert_eq!(Distribution::beta(2.0, 5.0).unwrap().symmetry_center(), None);
    }

    #[test]
    fn moment_overflow_is_an_error() {
        let d = Distribution::normal(0.0, 1.0e10).unwrap();
        assert_eq!(d.raw_moment(400), Err(Error::MomentOverflow { order: 400 }));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Distribution::uniform(1.0, 1.0).is_err());
        assert!(Distribution::beta(0.0, 1.0).is_err());
        assert!(Distribution::normal(0.0, -1.0).is_err());
    }

    #[test]
    fn json_schema() {
        let d: Distribution =
            serde_json::from_str(r#"{"kind":"beta","a":4,"b":4,"range":[0.0038,0.05]}"#).unwrap();
        assert_eq!(d, Distribution::beta_on(4.0, 4.0, 0.0038, 0.05).unwrap());
        let d: Distribution = serde_json::from_str(r#"{"kind":"beta","a":2,"b":5}"#).unwrap();
        assert_eq!(d, Distribution::beta(2.0, 5.0).unwrap());
        let bad = serde_json::from_str::<Distribution>(r#"{"kind":"normal","mean":0,"stddev":0}"#);
        assert!(bad.is_err());
        let text = serde_json::to_string(&Distribution::normal(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(text, r#"{"kind":"normal","mean":0.0,"stddev":1.0}"#);
    }

    #[test]
    fn parse_spec_strings() {
        assert_eq!(
            "uniform:-1,1".parse::<Distribution>().unwrap(),
            Distribution::uniform(-1.0, 1.0).unwrap()
        );
        assert_eq!(
            "beta:3,3:0.5,1.5".parse::<Distribution>().unwrap(),
            Distribution::beta_on(3.0, 3.0, 0.5, 1.5).unwrap()
        );
        assert!("gamma:1,2".parse::<Distribution>().is_err());
        assert!("uniform:1".parse::<Distribution>().is_err());
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    /// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on `P_n`.
    fn legendre_oracle(n: usize) -> Vec<(f64, f64)> {
        (1..=n)
            .map(|i| {
                let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    }

    /// `(E[x^j], E[|x|^j])` by 200-node Gauss-Legendre on the (truncated) support.
    fn oracle_moment(dist: &Distribution, j: i32, rule: &[(f64, f64)]) -> (f64, f64) {
        let (lo, hi) = match *dist {
            Distribution::Normal { mean, stddev } => (mean - 12.0 * stddev, mean + 12.0 * stddev),
            _ => dist.support(),
        };
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        rule.iter().fold((0.0, 0.0), |(s, a), &(t, w)| {
            let x = c + h * t;
            let v = h * w * x.powi(j) * dist.pdf(x);
            (s + v, a + v.abs())
        })
    }

    fn any_distribution() -> impl Strategy<Value = Distribution> {
        prop_oneof![
            (-3.0..2.0f64, 0.2..4.0f64).prop_map(|(lo, w)| Distribution::uniform(lo, lo + w).unwrap()),
            // Integer parameters keep the density polynomial, which the oracle integrates exactly.
            (1u32..7, 1u32..7, -2.0..1.0f64, 0.5..3.0f64)
                .prop_map(|(a, b, lo, w)| Distribution::beta_on(a as f64, b as f64, lo, lo + w).unwrap()),
            (-2.0..2.0f64, 0.2..2.0f64).prop_map(|(m, s)| Distribution::normal(m, s).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn raw_moments_match_quadrature_oracle(dist in any_distribution()) {
            let rule = legendre_oracle(200);
            for j in 0..=40 {
                let exact = dist.raw_moment(j).unwrap();
                let (oracle, abs) = oracle_moment(&dist, j as i32, &rule);
                prop_assert!(
                    (exact - oracle).abs() <= 1e-10 * abs.max(oracle.abs()),
                    "{dist} j={j}: {exact} vs {oracle}"
                );
            }
        }

        #[test]
        fn odd_central_moments_vanish(dist in any_distribution()) {
            if let Some(c) = dist.symmetry_center() {
                let h = dist.half_width();
                for j in (1..=15).step_by(2) {
                    // Central moment from raw moments: sum_i C(j,i) E[x^i] (-c)^(j-i), scaled by h^j.
                    let central: f64 = (0..=j)
                        .map(|i| binomial_f64(j, i) * dist.raw_moment(i).unwrap() * (-c).powi((j - i) as i32))
                        .sum();
                    let scale: f64 = (0..=j)
                        .map(|i| (binomial_f64(j, i) * dist.raw_moment(i).unwrap() * c.powi((j - i) as i32)).abs())
                        .sum();
                    prop_assert!(central.abs() <= 1e-12 * scale.max(h.powi(j as i32)), "{dist} j={j}: {central}");
                }
                for j in (1..=15).step_by(2) {
                    prop_assert!(dist.canonical_moment(j).abs() <= 1e-12);
                }
            }
        }
    }
}
