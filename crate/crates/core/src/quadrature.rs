//! Baseline one-dimensional rules and degree verification.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::linalg::chebyshev_into;

/// Default size limit of [`weights_from_nodes`].
pub const WEIGHT_SOLVE_LIMIT: usize = 64;

/// Largest admissible Chebyshev-system residual of a weight solve.
const SOLVE_RESIDUAL: f64 = 1e-9;

/// Condition estimate above which a weight solve logs a warning.
const CONDITION_WARNING: f64 = 1e12;

/// How a rule was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Gauss,
    ClenshawCurtis,
    VandermondeSolve,
    Reduced,
}

/// A one-dimensional rule: sorted physical nodes, weights and a declared degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
    pub distribution: Distribution,
    pub provenance: Provenance,
}

impl QuadratureRule {
    /// Builds a rule from explicit nodes and weights, checking lengths and order.
    pub fn new(
        nodes: Vec<f64>,
        weights: Vec<f64>,
        degree: usize,
        distribution: Distribution,
        provenance: Provenance,
    ) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} nodes and {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if let Some(i) = nodes.windows(2).position(|p| p[0] >= p[1]) {
            return Err(Error::InvalidArgument(format!(
                "nodes must be strictly increasing (positions {} and {})",
                i,
                i + 1
            )));
        }
        if nodes.iter().chain(&weights).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite node or weight".into()));
        }
        Ok(QuadratureRule {
            nodes,
            weights,
            degree,
            distribution,
            provenance,
        })
    }

    /// Rule whose weights come from the moment equations for the given nodes.
    pub fn from_nodes(dist: &Distribution, mut nodes: Vec<f64>) -> Result<Self> {
        nodes.sort_by(f64::total_cmp);
        let weights = weights_from_nodes(dist, &nodes)?;
        let degree = nodes.len() - 1;
        QuadratureRule::new(nodes, weights, degree, dist.clone(), Provenance::VandermondeSolve)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in the distribution's canonical coordinate.
    pub fn canonical_nodes(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|&x| self.distribution.to_canonical(x))
            .collect()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn is_positive(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    /// Mirror invariance of the node set about the distribution's symmetry center.
    pub fn is_symmetric(&self) -> bool {
        if self.distribution.symmetry_center().is_none() {
            return false;
        }
        let t = self.canonical_nodes();
        let n = t.len();
        (0..n).all(|k| (t[k] + t[n - 1 - k]).abs() <= 1e-12)
    }

    /// `sum |w| / sum w`.
    pub fn condition_number(&self) -> f64 {
        condition_number(&self.weights)
    }
}

/// `sum |w| / sum w`.
pub fn condition_number(weights: &[f64]) -> f64 {
    let abs: f64 = weights.iter().map(|w| w.abs()).sum();
    abs / weights.iter().sum::<f64>()
}

/// Monic three-term recurrence coefficients of the canonical variable.
fn recurrence(dist: &Distribution, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    match *dist {
        Distribution::Normal { .. } => {
            for (k, b) in beta.iter_mut().enumerate() {
                *b = k as f64;
            }
        }
        Distribution::Uniform { .. } => {
            for (k, b) in beta.iter_mut().enumerate().skip(1) {
                let k2 = (k * k) as f64;
                *b = k2 / (4.0 * k2 - 1.0);
            }
        }
        Distribution::Beta { a, b, .. } => {
            // Jacobi weight (1 - t)^al (1 + t)^be.
            let (al, be) = (b - 1.0, a - 1.0);
            let s = al + be;
            for k in 0..n {
                let kf = k as f64;
                alpha[k] = if k == 0 {
                    (be - al) / (s + 2.0)
                } else if a == b {
                    0.0
                } else {
                    (be * be - al * al) / ((2.0 * kf + s) * (2.0 * kf + s + 2.0))
                };
                beta[k] = match k {
                    0 => 0.0,
                    1 => 4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + s).powi(2) * (3.0 + s)),
                    _ => {
                        let m = 2.0 * kf + s;
                        4.0 * kf * (kf + al) * (kf + be) * (kf + s) / (m * m * (m + 1.0) * (m - 1.0))
                    }
                };
            }
        }
    }
    (alpha, beta)
}

/// Sum of squares of the orthonormal `p_0..p_{n-1}` at `t`, then `p_n(t)` and `p_n'(t)`.
fn orthonormal_values(alpha: &[f64], beta: &[f64], t: f64, n: usize) -> (f64, f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0;
    let mut d_prev = 0.0;
    let mut d = 0.0;
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += p * p;
        let sb_next = beta[k + 1].sqrt();
        let sb = beta[k].sqrt();
        let p_next = ((t - alpha[k]) * p - sb * p_prev) / sb_next;
        let d_next = ((t - alpha[k]) * d + p - sb * d_prev) / sb_next;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (sum_sq, p, d)
}

/// Gauss nodes and weights in canonical coordinates, sorted ascending.
pub(crate) fn gauss_canonical(dist: &Distribution, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidArgument("a Gauss rule needs at least one node".into()));
    }
    let (alpha, beta) = recurrence(dist, n + 1);
    let mut jacobi = DMatrix::zeros(n, n);
    for k in 0..n {
        jacobi[(k, k)] = alpha[k];
        if k + 1 < n {
            let off = beta[k + 1].sqrt();
            jacobi[(k, k + 1)] = off;
            jacobi[(k + 1, k)] = off;
        }
    }
    let eigen = SymmetricEigen::try_new(jacobi, f64::EPSILON, 100 * n.max(10))
        .ok_or(Error::EigenNoConvergence { n })?;
    let mut t: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    t.sort_by(f64::total_cmp);
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenNoConvergence { n });
    }
    let mut w = Vec::with_capacity(n);
    for x in t.iter_mut() {
        for _ in 0..2 {
            let (_, p, d) = orthonormal_values(&alpha, &beta, *x, n);
            let step = p / d;
            if step.is_finite() && step.abs() < 1e-6 * (1.0 + x.abs()) {
                *x -= step;
            }
        }
        let (sum_sq, _, _) = orthonormal_values(&alpha, &beta, *x, n);
        w.push(if sum_sq.is_finite() { 1.0 / sum_sq } else { 0.0 });
    }
    if dist.symmetry_center().is_some() {
        symmetrize(&mut t, &mut w);
    }
    let total: f64 = w.iter().sum();
    for wi in &mut w {
        *wi /= total;
    }
    Ok((t, w))
}

/// Makes a sorted canonical node set exactly odd-symmetric with mirrored weights.
fn symmetrize(t: &mut [f64], w: &mut [f64]) {
    let n = t.len();
    for k in 0..n / 2 {
        let m = n - 1 - k;
        let tk = 0.5 * (t[m] - t[k]);
        let wk = 0.5 * (w[m] + w[k]);
        t[k] = -tk;
        t[m] = tk;
        w[k] = wk;
        w[m] = wk;
    }
    if n % 2 == 1 {
        t[n / 2] = 0.0;
    }
}

fn to_physical(dist: &Distribution, t: &[f64]) -> Vec<f64> {
    let c = dist.center();
    let h = dist.half_width();
    t.iter()
        .map(|&v| if v < 0.0 { c - h * (-v) } else { c + h * v })
        .collect()
}

/// `n`-node Gauss rule of degree `2n - 1` (Golub-Welsch).
pub fn gauss_rule(dist: &Distribution, n: usize) -> Result<QuadratureRule> {
    let (t, w) = gauss_canonical(dist, n)?;
    let nodes = to_physical(dist, &t);
    QuadratureRule::new(nodes, w, 2 * n - 1, dist.clone(), Provenance::Gauss)
}

/// Chebyshev extrema mapped onto the support, weights from the moment equations.
///
/// Node sets for sizes `2^(k-1) + 1` are nested bit for bit.
pub fn clenshaw_curtis_rule(dist: &Distribution, n: usize) -> Result<QuadratureRule> {
    if !dist.is_bounded() {
        return Err(Error::UnboundedSupport("Clenshaw-Curtis"));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("a Clenshaw-Curtis rule needs at least one node".into()));
    }
    let mut t = vec![0.0; n];
    if n > 1 {
        let denom = 2.0 * (n - 1) as f64;
        for (j, tj) in t.iter_mut().enumerate() {
            let m = 2.0 * j as f64 - (n - 1) as f64;
            *tj = (std::f64::consts::PI * m / denom).sin();
        }
    }
    let mut dummy = vec![0.0; n];
    symmetrize(&mut t, &mut dummy);
    let nodes = to_physical(dist, &t);
    let mut weights = weights_from_nodes_with_limit(dist, &nodes, usize::MAX)?;
    if dist.symmetry_center().is_some() {
        let mut t2 = t.clone();
        symmetrize(&mut t2, &mut weights);
    }
    QuadratureRule::new(nodes, weights, n - 1, dist.clone(), Provenance::ClenshawCurtis)
}

/// Scale mapping canonical coordinates into `[-1, 1]` for Chebyshev evaluation.
pub(crate) fn chebyshev_scale(dist: &Distribution, canonical: &[f64]) -> f64 {
    if dist.is_bounded() {
        1.0
    } else {
        canonical.iter().fold(1.0_f64, |m, t| m.max(t.abs()))
    }
}

/// `E[T_j(t / scale)]` for `j = 0..len`, exact through a Gauss rule.
pub(crate) fn chebyshev_moments(dist: &Distribution, scale: f64, len: usize) -> Result<Vec<f64>> {
    let (t, w) = gauss_canonical(dist, len / 2 + 1)?;
    let mut m = vec![0.0; len];
    let mut buf = vec![0.0; len];
    for (ti, wi) in t.iter().zip(&w) {
        chebyshev_into(ti / scale, &mut buf);
        for (mj, bj) in m.iter_mut().zip(&buf) {
            *mj += wi * bj;
        }
    }
    Ok(m)
}

fn check_distinct(canonical: &[f64], tol: f64) -> Result<()> {
    let mut order: Vec<usize> = (0..canonical.len()).collect();
    order.sort_by(|&a, &b| canonical[a].total_cmp(&canonical[b]));
    for pair in order.windows(2) {
        if canonical[pair[1]] - canonical[pair[0]] <= tol {
            let (first, second) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            return Err(Error::DuplicateNodes { first, second });
        }
    }
    Ok(())
}

/// Weights making the rule exact for polynomials of degree `nodes.len() - 1`.
pub fn weights_from_nodes(dist: &Distribution, nodes: &[f64]) -> Result<Vec<f64>> {
    weights_from_nodes_with_limit(dist, nodes, WEIGHT_SOLVE_LIMIT)
}

/// [`weights_from_nodes`] with an explicit size limit.
pub fn weights_from_nodes_with_limit(
    dist: &Distribution,
    nodes: &[f64],
    limit: usize,
) -> Result<Vec<f64>> {
    let n = nodes.len();
    if n == 0 {
        return Err(Error::InvalidArgument("no nodes".into()));
    }
    if n > limit {
        return Err(Error::TooManyNodes { n, limit });
    }
    let t: Vec<f64> = nodes.iter().map(|&x| dist.to_canonical(x)).collect();
    let scale = chebyshev_scale(dist, &t);
    check_distinct(&t, 1e-13 * 2.0 * scale)?;
    let moments = chebyshev_moments(dist, scale, n)?;
    let mut v = DMatrix::zeros(n, n);
    let mut buf = vec![0.0; n];
    for (k, tk) in t.iter().enumerate() {
        chebyshev_into(tk / scale, &mut buf);
        for (j, b) in buf.iter().enumerate() {
            v[(j, k)] = *b;
        }
    }
    let rhs = DVector::from_vec(moments);
    let lu = v.clone().lu();
    let w = lu.solve(&rhs).ok_or(Error::DuplicateNodes { first: 0, second: 1 })?;
    let residual = (&v * &w - &rhs).amax();
    let condition = if n <= 256 {
        lu.try_inverse()
            .map(|inv| one_norm(&v) * one_norm(&inv))
            .unwrap_or(f64::INFINITY)
    } else {
        f64::NAN
    };
    if residual > SOLVE_RESIDUAL || !w.iter().all(|x| x.is_finite()) {
        return Err(Error::IllConditioned {
            residual,
            tolerance: SOLVE_RESIDUAL,
            condition,
        });
    }
    if condition > CONDITION_WARNING {
        log::warn!("weight solve on {n} nodes has condition estimate {condition:.3e}");
    }
    Ok(w.iter().copied().collect())
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Moment check used by every degree audit.
///
/// `scale` is `sum |w_k m(t_k)|`, the size of the terms being summed; it
/// bounds the rounding error when the exact moment vanishes.
pub(crate) fn moment_matches(computed: f64, exact: f64, scale: f64) -> bool {
    (computed - exact).abs() <= (1e-8 * exact.abs()).max(1e-10 * scale)
}

/// Largest `K` such that every monomial of degree `<= K` is integrated exactly.
///
/// Monomials are taken in the canonical coordinate and checked up to the
/// declared degree plus two.
pub fn verify_degree(rule: &QuadratureRule) -> usize {
    let top = rule.degree + 2;
    let exact = rule.distribution.canonical_moments(top);
    let t = rule.canonical_nodes();
    let mut powers: Vec<f64> = rule.weights.clone();
    for (j, &mj) in exact.iter().enumerate() {
        if j > 0 {
            for (p, tk) in powers.iter_mut().zip(&t) {
                *p *= tk;
            }
        }
        let scale: f64 = powers.iter().map(|p| p.abs()).sum();
        if !moment_matches(powers.iter().sum(), mj, scale) {
            return j.saturating_sub(1);
        }
    }
    top
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn uniform() -> Distribution {
        Distribution::uniform(-1.0, 1.0).unwrap()
    }

    #[test]
    fn gauss_small_cases() {
        let r = gauss_rule(&uniform(), 1).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert_eq!(r.weights, vec![1.0]);

        let r = gauss_rule(&uniform(), 2).unwrap();
        assert_relative_eq!(r.nodes[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_eq!(r.nodes[0], -r.nodes[1]);
        assert_relative_eq!(r.weights[0], 0.5, epsilon = 1e-15);
        assert_eq!(verify_degree(&r), 3);

        let r = gauss_rule(&Distribution::normal(0.0, 1.0).unwrap(), 2).unwrap();
        assert_relative_eq!(r.nodes[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(r.nodes[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.weights[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn gauss_asymmetric_beta() {
        let d = Distribution::beta(2.0, 5.0).unwrap();
        for n in 1..=15 {
            let r = gauss_rule(&d, n).unwrap();
            assert!(r.is_positive());
            assert!(verify_degree(&r) >= 2 * n - 1, "n = {n}");
        }
    }

    #[test]
    fn clenshaw_curtis_simpson() {
        let r = clenshaw_curtis_rule(&uniform(), 3).unwrap();
        assert_eq!(r.nodes, vec![-1.0, 0.0, 1.0]);
        assert_relative_eq!(r.weights[0], 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(r.weights[1], 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(r.weights[0], r.weights[2]);
        assert_eq!(verify_degree(&r), 3);

        let r = clenshaw_curtis_rule(&uniform(), 1).unwrap();
        assert_eq!((r.nodes.clone(), r.weights.clone()), (vec![0.0], vec![1.0]));
        assert_eq!(verify_degree(&r), 1);
    }

    #[test]
    fn clenshaw_curtis_nesting_is_exact() {
        let d = Distribution::beta_on(3.0, 3.0, 0.5, 1.5).unwrap();
        let coarse = clenshaw_curtis_rule(&d, 5).unwrap();
        let fine = clenshaw_curtis_rule(&d, 9).unwrap();
        for x in &coarse.nodes {
            assert!(fine.nodes.contains(x), "{x} missing");
        }
    }

    #[test]
    fn clenshaw_curtis_unbounded_fails() {
        let d = Distribution::normal(0.0, 1.0).unwrap();
        assert_eq!(
            clenshaw_curtis_rule(&d, 3).unwrap_err(),
            Error::UnboundedSupport("Clenshaw-Curtis")
        );
    }

    #[test]
    fn weights_from_nodes_examples() {
        let w = weights_from_nodes(&uniform(), &[-1.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(w[0], 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(w[1], 2.0 / 3.0, epsilon = 1e-15);

        let d = Distribution::beta(4.0, 4.0).unwrap();
        assert_relative_eq!(weights_from_nodes(&d, &[0.5]).unwrap()[0], 1.0, epsilon = 1e-15);
        let w = weights_from_nodes(&d, &[0.25, 0.5, 0.75]).unwrap();
        let m1: f64 = w.iter().zip([0.25, 0.5, 0.75]).map(|(w, x)| w * x).sum();
        let m2: f64 = w.iter().zip([0.25, 0.5, 0.75]).map(|(w, x)| w * x * x).sum();
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(m1, d.raw_moment(1).unwrap(), epsilon = 1e-14);
        assert_relative_eq!(m2, d.raw_moment(2).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn weights_from_nodes_errors() {
        assert_eq!(
            weights_from_nodes(&uniform(), &[0.1, 0.2, 0.1]).unwrap_err(),
            Error::DuplicateNodes { first: 0, second: 2 }
        );
        let many: Vec<f64> = (0..65).map(|i| -1.0 + i as f64 / 32.0).collect();
        assert!(matches!(
            weights_from_nodes(&uniform(), &many),
            Err(Error::TooManyNodes { n: 65, limit: 64 })
        ));
    }

    #[test]
    fn single_node_at_mean_has_degree_one() {
        let d = Distribution::beta(2.0, 5.0).unwrap();
        let mean = d.raw_moment(1).unwrap();
        let r = QuadratureRule::from_nodes(&d, vec![mean]).unwrap();
        assert_eq!(verify_degree(&r), 1);
    }

    #[test]
    fn large_clenshaw_curtis_is_positive() {
        let r = clenshaw_curtis_rule(&uniform(), 1025).unwrap();
        assert!(r.is_positive());
        assert!(r.is_symmetric());
    }

    #[test]
    fn condition_number_examples() {
        assert_eq!(condition_number(&[0.25, 0.75]), 1.0);
        assert_eq!(condition_number(&[1.5, -0.5]), 2.0);
    }
}
