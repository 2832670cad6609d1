use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::multi_index::{dim_poly, random_with_total, with_total, MultiIndexSet};
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::quadrature::{self, moment_matches, QuadratureRule};

/// Largest number of multi-indices checked by [`verify_degree`] before sampling.
pub const AUDIT_LIMIT: usize = 20_000;

/// Seed of the sampled degree audit.
const AUDIT_SEED: u64 = 0x5EED_CAFE;

/// How a cubature rule was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubatureProvenance {
    Tensor,
    Smolyak,
    Reduced,
    SymmetricReduced,
    NegativeSymmetricReduced,
}

/// Nodes in `d` dimensions with weights, one distribution per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CubatureRepr", into = "CubatureRepr")]
pub struct CubatureRule {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    degree: usize,
    distributions: Vec<Distribution>,
    provenance: CubatureProvenance,
}

#[derive(Serialize, Deserialize)]
struct CubatureRepr {
    d: usize,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    degree: usize,
    distributions: Vec<Distribution>,
    provenance: CubatureProvenance,
}

impl TryFrom<CubatureRepr> for CubatureRule {
    type Error = Error;

    fn try_from(r: CubatureRepr) -> Result<Self> {
        if let Some(bad) = r.nodes.iter().position(|p| p.len() != r.d) {
            return Err(Error::InvalidArgument(format!(
                "node {bad} does not have {} coordinates",
                r.d
            )));
        }
        CubatureRule::new(
            r.d,
            r.nodes.concat(),
            r.weights,
            r.degree,
            r.distributions,
            r.provenance,
        )
    }
}

impl From<CubatureRule> for CubatureRepr {
    fn from(r: CubatureRule) -> Self {
        CubatureRepr {
            d: r.dim,
            nodes: r.nodes.chunks(r.dim).map(<[f64]>::to_vec).collect(),
            weights: r.weights,
            degree: r.degree,
            distributions: r.distributions,
            provenance: r.provenance,
        }
    }
}

impl CubatureRule {
    /// `nodes` holds the coordinates row by row.
    pub fn new(
        dim: usize,
        nodes: Vec<f64>,
        weights: Vec<f64>,
        degree: usize,
        distributions: Vec<Distribution>,
        provenance: CubatureProvenance,
    ) -> Result<Self> {
        if dim == 0 || distributions.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "dimension {dim} with {} axis distributions",
                distributions.len()
            )));
        }
        if weights.is_empty() || nodes.len() != weights.len() * dim {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates for {} weights in dimension {dim}",
                nodes.len(),
                weights.len()
            )));
        }
        if nodes.iter().chain(&weights).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite node or weight".into()));
        }
        Ok(CubatureRule {
            dim,
            nodes,
            weights,
            degree,
            distributions,
            provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.chunks(self.dim)
    }

    /// Coordinates row by row.
    pub fn flat_nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn distributions(&self) -> &[Distribution] {
        &self.distributions
    }

    pub fn provenance(&self) -> CubatureProvenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: CubatureProvenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree = degree;
        self
    }

    /// Coordinates mapped into each axis' canonical coordinate, row by row.
    pub fn canonical_nodes(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, &x)| self.distributions[i % self.dim].to_canonical(x))
            .collect()
    }

    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.nodes()
            .zip(&self.weights)
            .map(|(x, &w)| w * f(x))
            .sum()
    }

    /// Product density at a physical point.
    pub fn pdf(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.distributions)
            .map(|(&xi, d)| d.pdf(xi))
            .product()
    }

    pub fn is_positive(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    /// `sum |w| / sum w`.
    pub fn condition_number(&self) -> f64 {
        quadrature::condition_number(&self.weights)
    }

    /// Keeps the nodes whose `keep` flag is set.
    pub(crate) fn subset(&self, keep: &[bool], weights: &[f64]) -> Result<CubatureRule> {
        let mut nodes = Vec::new();
        let mut w = Vec::new();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                nodes.extend_from_slice(self.node(i));
                w.push(weights[i]);
            }
        }
        CubatureRule::new(
            self.dim,
            nodes,
            w,
            self.degree,
            self.distributions.clone(),
            self.provenance,
        )
    }
}

/// Full tensor product of one-dimensional rules; the last axis varies fastest.
pub fn tensor_rule(axes: &[QuadratureRule]) -> Result<CubatureRule> {
    if axes.is_empty() {
        return Err(Error::InvalidArgument("no axis rules".into()));
    }
    let dim = axes.len();
    let total: usize = axes.iter().map(QuadratureRule::len).product();
    let mut nodes = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut w = 1.0;
        for (axis, &i) in axes.iter().zip(&idx) {
            nodes.push(axis.nodes[i]);
            w *= axis.weights[i];
        }
        weights.push(w);
        for a in (0..dim).rev() {
            idx[a] += 1;
            if idx[a] < axes[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
    let degree = axes.iter().map(|r| r.degree).min().unwrap_or(0);
    CubatureRule::new(
        dim,
        nodes,
        weights,
        degree,
        axes.iter().map(|r| r.distribution.clone()).collect(),
        CubatureProvenance::Tensor,
    )
}

/// Exponent vectors checked by a degree audit up to `top`, grouped by total degree.
fn audit_indices(dim: usize, top: usize) -> Result<Vec<Vec<Vec<usize>>>> {
    let mut levels: Vec<Vec<Vec<usize>>> = vec![Vec::new(); top + 1];
    let full = dim_poly(top, dim).map(|v| v as usize <= AUDIT_LIMIT).unwrap_or(false);
    if full {
        for a in MultiIndexSet::new(dim, top)?.iter() {
            levels[a.iter().sum::<usize>()].push(a.to_vec());
        }
        return Ok(levels);
    }
    // Sample an equal share of each total degree, or the whole level when small.
    let mut rng = ChaCha8Rng::seed_from_u64(AUDIT_SEED);
    let share = AUDIT_LIMIT / (top + 1);
    for (k, level) in levels.iter_mut().enumerate() {
        let size = (dim_poly(k, dim)? - if k == 0 { 0 } else { dim_poly(k - 1, dim)? }) as usize;
        if size <= share {
            let mut all = Vec::new();
            let mut prefix = Vec::new();
            with_total(dim, k, &mut prefix, &mut all);
            *level = all;
        } else {
            *level = (0..share).map(|_| random_with_total(dim, k, &mut rng)).collect();
        }
    }
    Ok(levels)
}

/// Largest `K` such that every audited monomial of total degree `<= K` is
/// integrated exactly, checking up to `rule.degree() + 2`.
///
/// Monomials are products of canonical coordinates. All multi-indices are
/// audited when there are at most [`AUDIT_LIMIT`]; otherwise a fixed-seed
/// sample is used.
pub fn verify_degree(rule: &CubatureRule) -> usize {
    verify_degree_up_to(rule, rule.degree + 2)
}

/// [`verify_degree`] with an explicit top degree.
pub fn verify_degree_up_to(rule: &CubatureRule, top: usize) -> usize {
    let dim = rule.dim;
    let Ok(levels) = audit_indices(dim, top) else {
        return 0;
    };
    let moments: Vec<Vec<f64>> = rule
        .distributions
        .iter()
        .map(|d| d.canonical_moments(top))
        .collect();
    let t = rule.canonical_nodes();
    // powers[(k * dim + i) * (top + 1) + j] = t_{k,i}^j
    let stride = top + 1;
    let mut powers = vec![1.0; t.len() * stride];
    for (slot, &v) in t.iter().enumerate() {
        let row = &mut powers[slot * stride..(slot + 1) * stride];
        for j in 1..stride {
            row[j] = row[j - 1] * v;
        }
    }
    for (k, level) in levels.iter().enumerate() {
        let ok = level.par_iter().all(|alpha| {
            let exact: f64 = alpha
                .iter()
                .enumerate()
                .map(|(i, &e)| moments[i][e])
                .product();
            let (computed, scale) = rule.weights.iter().enumerate().fold(
                (0.0, 0.0),
                |(sum, abs), (n, &w)| {
                    let base = n * dim;
                    let term = alpha
                        .iter()
                        .enumerate()
                        .fold(w, |acc, (i, &e)| acc * powers[(base + i) * stride + e]);
                    (sum + term, abs + term.abs())
                },
            );
            moment_matches(computed, exact, scale)
        });
        if !ok {
            return k.saturating_sub(1);
        }
    }
    top
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{clenshaw_curtis_rule, gauss_rule};
    use approx::assert_relative_eq;

    #[test]
    fn simpson_tensor() {
        let u = Distribution::uniform(-1.0, 1.0).unwrap();
        let s = clenshaw_curtis_rule(&u, 3).unwrap();
        let t = tensor_rule(&[s.clone(), s]).unwrap();
        assert_eq!(t.len(), 9);
        assert_relative_eq!(t.weights()[0], 1.0 / 36.0, epsilon = 1e-16);
        assert_eq!(verify_degree(&t), 3);
    }

    #[test]
    fn single_node_axis_collapses() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        let t = tensor_rule(&[gauss_rule(&u, 1).unwrap(), gauss_rule(&u, 4).unwrap()]).unwrap();
        assert_eq!(t.len(), 4);
        assert!(t.nodes().all(|x| x[0] == 0.5));
    }

    #[test]
    fn beta_gauss_tensor_degree() {
        let a = Distribution::beta_on(4.0, 4.0, 0.0038, 0.05).unwrap();
        let b = Distribution::beta_on(3.0, 3.0, 0.5, 1.5).unwrap();
        let t = tensor_rule(&[gauss_rule(&a, 13).unwrap(), gauss_rule(&b, 13).unwrap()]).unwrap();
        assert_eq!(t.len(), 169);
        assert!(verify_degree(&t) >= 13);
    }

    #[test]
    fn json_round_trip() {
        let u = Distribution::uniform(-1.0, 1.0).unwrap();
        let t = tensor_rule(&[gauss_rule(&u, 2).unwrap(), gauss_rule(&u, 3).unwrap()]).unwrap();
        let text = serde_json::to_string(&t).unwrap();
        assert!(text.starts_with(r#"{"d":2,"nodes":[["#));
        let back: CubatureRule = serde_json::from_str(&text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn large_index_sets_are_sampled_per_level() {
        let levels = audit_indices(12, 7).unwrap();
        assert!(dim_poly(7, 12).unwrap() as usize > AUDIT_LIMIT);
        let total: usize = levels.iter().map(Vec::len).sum();
        assert!(total <= AUDIT_LIMIT);
        assert_eq!(levels[0], vec![vec![0; 12]]);
        assert_eq!(levels[1].len(), 12);
        for (k, level) in levels.iter().enumerate() {
            assert!(level.iter().all(|a| a.iter().sum::<usize>() == k));
        }
        assert_eq!(audit_indices(12, 7).unwrap(), levels);
    }
}
