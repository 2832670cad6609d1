//! Genz test integrands on the unit cube and convergence studies.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::cubature::{reduce, tensor_rule, CubatureRule, ReductionMode};
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::quadrature::{clenshaw_curtis_rule, gauss_rule};
use crate::reduce1d::{nested_family, ReductionCriterion};
use crate::smolyak::{level_size, smolyak_rule, ClenshawCurtisFamily, RuleFamily};

/// Required 2-norm of `a` in [`random_spec`].
pub const A_NORM: f64 = 2.5;

/// Required 2-norm of `u` in [`random_spec`].
pub const U_NORM: f64 = 1.0;

/// Largest dimension accepted by [`reference_integral`].
pub const REFERENCE_MAX_DIM: usize = 6;

const REFERENCE_NODES: usize = 30;
const REFERENCE_COARSE_NODES: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenzFamily {
    Oscillatory,
    ProductPeak,
    CornerPeak,
    Gaussian,
    Continuous,
    Discontinuous,
}

impl GenzFamily {
    pub const ALL: [GenzFamily; 6] = [
        GenzFamily::Oscillatory,
        GenzFamily::ProductPeak,
        GenzFamily::CornerPeak,
        GenzFamily::Gaussian,
        GenzFamily::Continuous,
        GenzFamily::Discontinuous,
    ];

    /// 1-based index, `f1` to `f6`.
    pub fn index(self) -> usize {
        GenzFamily::ALL.iter().position(|&f| f == self).unwrap() + 1
    }

    pub fn from_index(i: usize) -> Option<Self> {
        i.checked_sub(1).and_then(|k| GenzFamily::ALL.get(k).copied())
    }
}

impl fmt::Display for GenzFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.index())
    }
}

impl FromStr for GenzFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let by_name = match lower.as_str() {
            "oscillatory" => Some(GenzFamily::Oscillatory),
            "product_peak" | "product-peak" => Some(GenzFamily::ProductPeak),
            "corner_peak" | "corner-peak" => Some(GenzFamily::CornerPeak),
            "gaussian" => Some(GenzFamily::Gaussian),
            "continuous" | "c0" => Some(GenzFamily::Continuous),
            "discontinuous" => Some(GenzFamily::Discontinuous),
            _ => None,
        };
        by_name
            .or_else(|| {
                lower
                    .strip_prefix('f')
                    .and_then(|k| k.parse().ok())
                    .and_then(GenzFamily::from_index)
            })
            .ok_or_else(|| Error::InvalidArgument(format!("unknown Genz family `{s}`")))
    }
}

/// One Genz integrand: family, coefficients `a` and shifts `u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenzSpec {
    pub family: GenzFamily,
    pub a: Vec<f64>,
    pub u: Vec<f64>,
    pub seed: Option<u64>,
}

impl GenzSpec {
    /// Only lengths and finiteness are checked; see [`GenzSpec::is_normalized`].
    pub fn new(family: GenzFamily, a: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != u.len() {
            return Err(Error::InvalidArgument(format!(
                "coefficient lengths {} and {} do not match",
                a.len(),
                u.len()
            )));
        }
        if a.iter().chain(&u).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite Genz coefficient".into()));
        }
        if family == GenzFamily::CornerPeak && a.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidArgument("corner peak needs positive a".into()));
        }
        Ok(GenzSpec {
            family,
            a,
            u,
            seed: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Positive components with `|a| = 2.5` and `|u| = 1`.
    pub fn is_normalized(&self) -> bool {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.a.iter().chain(&self.u).all(|&v| v > 0.0)
            && (norm(&self.a) - A_NORM).abs() <= 1e-12
            && (norm(&self.u) - U_NORM).abs() <= 1e-12
    }
}

/// Value of the integrand at `x`.
pub fn evaluate(spec: &GenzSpec, x: &[f64]) -> f64 {
    let (a, u) = (&spec.a, &spec.u);
    match spec.family {
        GenzFamily::Oscillatory => {
            let s: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
            (2.0 * std::f64::consts::PI * u[0] + s).cos()
        }
        GenzFamily::ProductPeak => a
            .iter()
            .zip(u)
            .zip(x)
            .map(|((a, u), x)| 1.0 / (a.powi(-2) + (x - u).powi(2)))
            .product(),
        GenzFamily::CornerPeak => {
            let s: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
            (1.0 + s).powi(-(a.len() as i32 + 1))
        }
        GenzFamily::Gaussian => {
            let s: f64 = a
                .iter()
                .zip(u)
                .zip(x)
                .map(|((a, u), x)| (a * (x - u)).powi(2))
                .sum();
            (-s).exp()
        }
        GenzFamily::Continuous => {
            let s: f64 = a
                .iter()
                .zip(u)
                .zip(x)
                .map(|((a, u), x)| a * (x - u).abs())
                .sum();
            (-s).exp()
        }
        GenzFamily::Discontinuous => {
            if x[0] > u[0] || (x.len() > 1 && x[1] > u[1]) {
                0.0
            } else {
                a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>().exp()
            }
        }
    }
}

/// Integral over `[0, 1]^n` with the uniform density.
pub fn exact_integral_uniform(spec: &GenzSpec) -> f64 {
    let (a, u) = (&spec.a, &spec.u);
    match spec.family {
        GenzFamily::Oscillatory => {
            // Re( e^{i 2 pi u1} prod (e^{i a} - 1) / (i a) )
            let mut re = (2.0 * std::f64::consts::PI * u[0]).cos();
            let mut im = (2.0 * std::f64::consts::PI * u[0]).sin();
            for &aj in a {
                let (fr, fi) = if aj == 0.0 {
                    (1.0, 0.0)
                } else {
                    (aj.sin() / aj, (1.0 - aj.cos()) / aj)
                };
                (re, im) = (re * fr - im * fi, re * fi + im * fr);
            }
            re
        }
        GenzFamily::ProductPeak => a
            .iter()
            .zip(u)
            .map(|(a, u)| a * ((a * (1.0 - u)).atan() + (a * u).atan()))
            .product(),
        GenzFamily::CornerPeak => {
            let n = a.len();
            let mut sum = 0.0;
            for mask in 0u32..(1 << n) {
                let s: f64 = (0..n).filter(|j| mask >> j & 1 == 1).map(|j| a[j]).sum();
                let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                sum += sign / (1.0 + s);
            }
            let factorial: f64 = (1..=n).map(|k| k as f64).product();
            sum / (factorial * a.iter().product::<f64>())
        }
        GenzFamily::Gaussian => a
            .iter()
            .zip(u)
            .map(|(a, u)| {
                std::f64::consts::PI.sqrt() / (2.0 * a) * (erf(a * (1.0 - u)) + erf(a * u))
            })
            .product(),
        GenzFamily::Continuous => a
            .iter()
            .zip(u)
            .map(|(a, u)| (2.0 - (-a * u).exp() - (-a * (1.0 - u)).exp()) / a)
            .product(),
        GenzFamily::Discontinuous => a
            .iter()
            .enumerate()
            .map(|(j, &aj)| {
                let upper = if j < 2 { u[j].clamp(0.0, 1.0) } else { 1.0 };
                if aj == 0.0 {
                    upper
                } else {
                    (aj * upper).exp_m1() / aj
                }
            })
            .product(),
    }
}

/// Tensor-Gauss estimate of a Genz integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceIntegral {
    pub value: f64,
    /// Difference between the 30- and 25-node estimates.
    pub error_estimate: f64,
}

/// Integral of the integrand against the product of `dists`, from a tensor
/// Gauss grid with 30 nodes per axis.
pub fn reference_integral(spec: &GenzSpec, dists: &[Distribution]) -> Result<ReferenceIntegral> {
    let n = spec.dim();
    if dists.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} distributions for a {n}-dimensional integrand",
            dists.len()
        )));
    }
    if n > REFERENCE_MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "reference grids are limited to {REFERENCE_MAX_DIM} dimensions; \
             use exact_integral_uniform for uniform measures"
        )));
    }
    let fine = tensor_sum(spec, dists, REFERENCE_NODES)?;
    let coarse = tensor_sum(spec, dists, REFERENCE_COARSE_NODES)?;
    Ok(ReferenceIntegral {
        value: fine,
        error_estimate: (fine - coarse).abs(),
    })
}

fn tensor_sum(spec: &GenzSpec, dists: &[Distribution], m: usize) -> Result<f64> {
    let axes = dists
        .iter()
        .map(|d| gauss_rule(d, m))
        .collect::<Result<Vec<_>>>()?;
    let n = axes.len();
    let rest: usize = m.pow(n as u32 - 1);
    // Each first-axis node sums its slab sequentially, slabs are added in order.
    let slabs: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i0| {
            let mut x = vec![0.0; n];
            x[0] = axes[0].nodes[i0];
            let mut total = 0.0;
            for flat in 0..rest {
                let mut w = axes[0].weights[i0];
                let mut r = flat;
                for a in (1..n).rev() {
                    let k = r % m;
                    r /= m;
                    x[a] = axes[a].nodes[k];
                    w *= axes[a].weights[k];
                }
                total += w * evaluate(spec, &x);
            }
            total
        })
        .collect();
    Ok(slabs.iter().sum())
}

/// Random integrand with positive `a`, `u` of norms 2.5 and 1 (ChaCha8 stream).
pub fn random_spec(family: GenzFamily, n: usize, seed: u64) -> GenzSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |norm: f64| {
        let mut v: Vec<f64> = (0..n)
            .map(|_| loop {
                let x: f64 = rng.random();
                if x > 0.0 {
                    break x;
                }
            })
            .collect();
        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x *= norm / s);
        v
    };
    let a = draw(A_NORM);
    let u = draw(U_NORM);
    GenzSpec {
        family,
        a,
        u,
        seed: Some(seed),
    }
}

/// One line of a convergence table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub rule_name: String,
    #[serde(rename = "N_nodes")]
    pub nodes: usize,
    pub degree: usize,
    pub mean_error: f64,
}

/// Mean absolute error of each rule over `runs` random integrands with seeds
/// `seed, seed + 1, ...`.
///
/// All rules must share their axis distributions. Exact values are used for
/// the uniform measure on the unit cube, tensor-Gauss references otherwise.
pub fn convergence_study(
    rules: &[(String, CubatureRule)],
    family: GenzFamily,
    runs: usize,
    seed: u64,
) -> Result<Vec<StudyRow>> {
    let Some((_, first)) = rules.first() else {
        return Ok(Vec::new());
    };
    let dists = first.distributions().to_vec();
    if rules.iter().any(|(_, r)| r.distributions() != dists.as_slice()) {
        return Err(Error::InvalidArgument(
            "all rules of a study must share their distributions".into(),
        ));
    }
    let unit = dists
        .iter()
        .all(|d| matches!(d, Distribution::Uniform { lo, hi } if *lo == 0.0 && *hi == 1.0));
    let n = dists.len();

    let errors: Vec<Vec<f64>> = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let spec = random_spec(family, n, seed.wrapping_add(r));
            let exact = if unit {
                exact_integral_uniform(&spec)
            } else {
                reference_integral(&spec, &dists)?.value
            };
            Ok(rules
                .iter()
                .map(|(_, rule)| (rule.integrate(|x| evaluate(&spec, x)) - exact).abs())
                .collect())
        })
        .collect::<Result<_>>()?;

    Ok(rules
        .iter()
        .enumerate()
        .map(|(k, (name, rule))| StudyRow {
            rule_name: name.clone(),
            nodes: rule.len(),
            degree: rule.degree(),
            mean_error: errors.iter().map(|e| e[k]).sum::<f64>() / runs.max(1) as f64,
        })
        .collect())
}

/// Cubature constructions compared in convergence studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Gauss tensor grid.
    Tensor,
    /// Smolyak rule of Clenshaw-Curtis rules.
    SmolyakCc,
    /// Smolyak rule of a nested family reduced from a finer Clenshaw-Curtis rule.
    SmolyakReduced,
    /// Gauss tensor grid reduced once with positive symmetric weights.
    ReducedPositive,
    /// Gauss tensor grid reduced once with signed symmetric weights.
    ReducedNegative,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Tensor,
        Method::SmolyakCc,
        Method::SmolyakReduced,
        Method::ReducedPositive,
        Method::ReducedNegative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Tensor => "tensor",
            Method::SmolyakCc => "smolyak_cc",
            Method::SmolyakReduced => "smolyak_reduced",
            Method::ReducedPositive => "reduced_positive",
            Method::ReducedNegative => "reduced_negative",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().replace('-', "_"))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

/// Rule of total degree at least `degree` (odd) built with `method`.
pub fn method_rule(method: Method, dist: &Distribution, dim: usize, degree: usize) -> Result<CubatureRule> {
    if degree % 2 == 0 || dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "degree {degree} must be odd and dimension {dim} positive"
        )));
    }
    let gauss_tensor = || {
        let axis = gauss_rule(dist, degree.div_ceil(2))?;
        tensor_rule(&vec![axis; dim])
    };
    let level = dim + (degree - 1) / 2;
    match method {
        Method::Tensor => gauss_tensor(),
        Method::SmolyakCc => {
            let cc = ClenshawCurtisFamily::new(dist.clone())?;
            smolyak_rule(&[&cc as &dyn RuleFamily], level, dim)
        }
        Method::SmolyakReduced => {
            let top = level - dim + 1;
            let fine = level_size(top + 1);
            let start = if dist.is_bounded() {
                clenshaw_curtis_rule(dist, fine)?
            } else {
                gauss_rule(dist, fine)?
            };
            let family = nested_family(&start, ReductionCriterion::Prior)?;
            smolyak_rule(&[&family as &dyn RuleFamily], level, dim)
        }
        Method::ReducedPositive => {
            let tensor = gauss_tensor()?;
            // Small tensors may already have no symmetric kernel left.
            match reduce(&tensor, ReductionMode::Symmetric, degree, ReductionCriterion::Prior) {
                Err(Error::ReductionExhausted(_)) => Ok(tensor),
                other => other,
            }
        }
        Method::ReducedNegative => reduce(
            &gauss_tensor()?,
            ReductionMode::Negative,
            degree,
            ReductionCriterion::Prior,
        ),
    }
}

/// Rules of `method` for each degree, named `<method>_K<degree>`.
pub fn rule_ladder(
    method: Method,
    dist: &Distribution,
    dim: usize,
    degrees: &[usize],
) -> Result<Vec<(String, CubatureRule)>> {
    degrees
        .iter()
        .map(|&k| Ok((format!("{method}_K{k}"), method_rule(method, dist, dim, k)?)))
        .collect()
}
