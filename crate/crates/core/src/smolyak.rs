use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::cubature::{verify_degree_up_to, CubatureProvenance, CubatureRule};
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::quadrature::{clenshaw_curtis_rule, gauss_rule, QuadratureRule};
use crate::reduce1d::NestedFamily;

/// Merged nodes whose summed weight is at most this are removed.
pub const DROP_TOLERANCE: f64 = 1e-14;

/// Coordinate tolerance for merging nodes of non-nested families (canonical units).
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// Number of nodes at `level`: 1, 3, 5, 9, 17, ...
pub fn level_size(level: usize) -> usize {
    match level {
        0 => 0,
        1 => 1,
        k => (1usize << (k - 1)) + 1,
    }
}

/// Source of one-dimensional rules indexed by level (starting at 1).
pub trait RuleFamily: Sync {
    fn rule(&self, level: usize) -> Result<QuadratureRule>;

    /// Whether node sets of consecutive levels are exactly contained in each other.
    fn is_nested(&self) -> bool;

    fn distribution(&self) -> &Distribution;
}

#[derive(Clone, Debug)]
pub struct ClenshawCurtisFamily {
    dist: Distribution,
}

impl ClenshawCurtisFamily {
    pub fn new(dist: Distribution) -> Result<Self> {
        if !dist.is_bounded() {
            return Err(Error::UnboundedSupport("Clenshaw-Curtis"));
        }
        Ok(ClenshawCurtisFamily { dist })
    }
}

impl RuleFamily for ClenshawCurtisFamily {
    fn rule(&self, level: usize) -> Result<QuadratureRule> {
        clenshaw_curtis_rule(&self.dist, level_size(level))
    }

    fn is_nested(&self) -> bool {
        true
    }

    fn distribution(&self) -> &Distribution {
        &self.dist
    }
}

/// Gauss rules of sizes `level_size(level)`; not nested.
#[derive(Clone, Debug)]
pub struct GaussFamily {
    dist: Distribution,
}

impl GaussFamily {
    pub fn new(dist: Distribution) -> Self {
        GaussFamily { dist }
    }
}

impl RuleFamily for GaussFamily {
    fn rule(&self, level: usize) -> Result<QuadratureRule> {
        gauss_rule(&self.dist, level_size(level))
    }

    fn is_nested(&self) -> bool {
        false
    }

    fn distribution(&self) -> &Distribution {
        &self.dist
    }
}

impl RuleFamily for NestedFamily {
    fn rule(&self, level: usize) -> Result<QuadratureRule> {
        let n = level_size(level);
        self.member_with_size(n)
            .cloned()
            .ok_or(Error::FamilyTooShort {
                required_level: level,
                required_nodes: n,
            })
    }

    fn is_nested(&self) -> bool {
        true
    }

    fn distribution(&self) -> &Distribution {
        &self.rules()[0].distribution
    }
}

/// Bookkeeping of a Smolyak assembly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmolyakReport {
    /// Tensor products with a nonzero coefficient.
    pub terms: usize,
    /// Distinct nodes after merging, before dropping.
    pub merged: usize,
    /// Merged nodes removed because their weight cancelled.
    pub dropped: usize,
}

/// Smolyak rule of level `level` in `dim` dimensions.
///
/// `families` holds one family per axis, or a single family shared by all axes.
/// The declared degree is `2 (level - dim) + 1`.
pub fn smolyak_rule(families: &[&dyn RuleFamily], level: usize, dim: usize) -> Result<CubatureRule> {
    smolyak_rule_with_report(families, level, dim).map(|(rule, _)| rule)
}

/// [`smolyak_rule`] together with merge statistics.
pub fn smolyak_rule_with_report(
    families: &[&dyn RuleFamily],
    level: usize,
    dim: usize,
) -> Result<(CubatureRule, SmolyakReport)> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if families.len() != 1 && families.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "{} families for dimension {dim}",
            families.len()
        )));
    }
    if level < dim {
        return Err(Error::InvalidArgument(format!(
            "level {level} is below the dimension {dim}"
        )));
    }
    let family = |axis: usize| families[if families.len() == 1 { 0 } else { axis }];
    let top = level - dim + 1;

    let axes: Vec<AxisLevels> = (0..dim)
        .map(|a| AxisLevels::build(family(a), top))
        .collect::<Result<_>>()?;

    let terms: Vec<(Vec<usize>, f64)> = level_multi_indices(dim, level)
        .into_iter()
        .filter_map(|alpha| {
            let k = level - alpha.iter().sum::<usize>();
            let c = crate::distributions::binomial_f64(dim - 1, k);
            let c = if k % 2 == 0 { c } else { -c };
            (c != 0.0).then_some((alpha, c))
        })
        .collect();

    let partial: Vec<Vec<(Vec<u32>, f64)>> = terms
        .par_iter()
        .map(|(alpha, c)| tensor_term(&axes, alpha, *c))
        .collect();

    let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for term in partial {
        for (key, w) in term {
            *merged.entry(key).or_insert(0.0) += w;
        }
    }

    let total = merged.len();
    let mut nodes = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut dropped = 0;
    for (key, w) in merged {
        if w.abs() <= DROP_TOLERANCE {
            dropped += 1;
            continue;
        }
        nodes.extend(key.iter().enumerate().map(|(a, &id)| axes[a].values[id as usize]));
        weights.push(w);
    }
    let dists = (0..dim).map(|a| family(a).distribution().clone()).collect();
    let rule = CubatureRule::new(
        dim,
        nodes,
        weights,
        2 * (level - dim) + 1,
        dists,
        CubatureProvenance::Smolyak,
    )?;
    let report = SmolyakReport {
        terms: terms.len(),
        merged: total,
        dropped,
    };
    Ok((rule, report))
}

/// Whether `rule` integrates every audited monomial of total degree `2 (level - dim) + 1`.
pub fn smolyak_degree_check(rule: &CubatureRule, level: usize, dim: usize) -> bool {
    if level < dim || rule.dim() != dim {
        return false;
    }
    let required = 2 * (level - dim) + 1;
    verify_degree_up_to(rule, required) >= required
}

/// `sum |w| / sum w`.
pub fn condition_number(rule: &CubatureRule) -> f64 {
    rule.condition_number()
}

/// Levels `1..=top` of one axis, with node coordinates mapped to shared ids.
struct AxisLevels {
    rules: Vec<QuadratureRule>,
    ids: Vec<Vec<u32>>,
    values: Vec<f64>,
}

impl AxisLevels {
    fn build(family: &dyn RuleFamily, top: usize) -> Result<Self> {
        let rules: Vec<QuadratureRule> = (1..=top).map(|k| family.rule(k)).collect::<Result<_>>()?;
        let dist = family.distribution();
        let tol = if family.is_nested() { 0.0 } else { MERGE_TOLERANCE };

        let mut all: Vec<(f64, usize, usize)> = Vec::new();
        for (k, r) in rules.iter().enumerate() {
            for (i, &x) in r.nodes.iter().enumerate() {
                all.push((x, k, i));
            }
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut ids: Vec<Vec<u32>> = rules.iter().map(|r| vec![0; r.len()]).collect();
        let mut values: Vec<f64> = Vec::new();
        let mut anchor = f64::NAN;
        for (x, k, i) in all {
            let t = dist.to_canonical(x);
            if values.is_empty() || (t - anchor).abs() > tol {
                values.push(x);
                anchor = t;
            }
            ids[k][i] = (values.len() - 1) as u32;
        }
        Ok(AxisLevels { rules, ids, values })
    }
}

fn tensor_term(axes: &[AxisLevels], alpha: &[usize], coef: f64) -> Vec<(Vec<u32>, f64)> {
    let dim = alpha.len();
    let sizes: Vec<usize> = alpha.iter().enumerate().map(|(a, &k)| axes[a].rules[k - 1].len()).collect();
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut key = Vec::with_capacity(dim);
        let mut w = coef;
        for a in 0..dim {
            let k = alpha[a] - 1;
            key.push(axes[a].ids[k][idx[a]]);
            w *= axes[a].rules[k].weights[idx[a]];
        }
        out.push((key, w));
        for a in (0..dim).rev() {
            idx[a] += 1;
            if idx[a] < sizes[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    out
}

/// Multi-indices with entries `>= 1` and `level - dim + 1 <= |alpha| <= level`.
fn level_multi_indices(dim: usize, level: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, lo: usize, hi: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let used: usize = prefix.iter().sum();
        let left = dim - prefix.len();
        if left == 0 {
            if used >= lo && used <= hi {
                out.push(prefix.clone());
            }
            return;
        }
        // Remaining axes need at least one each.
        let max = hi - used - (left - 1);
        for k in 1..=max {
            prefix.push(k);
            rec(dim, lo, hi, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, level + 1 - dim, level, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::verify_degree;
    use crate::reduce1d::{nested_family, ReductionCriterion};

    fn uniform() -> Distribution {
        Distribution::uniform(-1.0, 1.0).unwrap()
    }

    #[test]
    fn level_sizes() {
        let s: Vec<usize> = (1..=6).map(level_size).collect();
        assert_eq!(s, vec![1, 3, 5, 9, 17, 33]);
    }

    #[test]
    fn multi_index_range() {
        let all = level_multi_indices(2, 4);
        assert!(all.iter().all(|a| (3..=4).contains(&a.iter().sum::<usize>())));
        assert_eq!(all.len(), 5);
    }

    #[test]
    fn one_dimension_is_the_level_rule() {
        let cc = ClenshawCurtisFamily::new(uniform()).unwrap();
        let rule = smolyak_rule(&[&cc], 4, 1).unwrap();
        let direct = clenshaw_curtis_rule(&uniform(), 9).unwrap();
        assert_eq!(rule.len(), 9);
        for (i, (x, w)) in direct.nodes.iter().zip(&direct.weights).enumerate() {
            assert_eq!(rule.node(i)[0], *x);
            assert!((rule.weights()[i] - w).abs() < 1e-15);
        }
    }

    #[test]
    fn clenshaw_curtis_two_dimensions() {
        let cc = ClenshawCurtisFamily::new(uniform()).unwrap();
        let counts: Vec<usize> = (2..=6)
            .map(|k| smolyak_rule(&[&cc], k, 2).unwrap().len())
            .collect();
        assert_eq!(counts, vec![1, 5, 13, 29, 65]);
    }

    #[test]
    fn clenshaw_curtis_five_dimensions_small_levels() {
        let cc = ClenshawCurtisFamily::new(uniform()).unwrap();
        assert_eq!(smolyak_rule(&[&cc], 7, 5).unwrap().len(), 61);
        assert_eq!(smolyak_rule(&[&cc], 8, 5).unwrap().len(), 241);
    }

    #[test]
    fn nested_beats_gauss() {
        let gauss = GaussFamily::new(uniform());
        let cc = ClenshawCurtisFamily::new(uniform()).unwrap();
        let g = smolyak_rule(&[&gauss], 6, 2).unwrap();
        let c = smolyak_rule(&[&cc], 6, 2).unwrap();
        assert!(c.len() < g.len());
        assert!(smolyak_degree_check(&g, 6, 2));
    }

    #[test]
    fn reduced_family_matches_clenshaw_curtis_count() {
        let base = gauss_rule(&uniform(), 17).unwrap();
        let family = nested_family(&base, ReductionCriterion::Prior).unwrap();
        let rule = smolyak_rule(&[&family], 6, 2).unwrap();
        assert_eq!(rule.len(), 65);
        assert!(smolyak_degree_check(&rule, 6, 2));
        assert!(verify_degree(family.member_with_size(5).unwrap()) >= 5);
    }

    #[test]
    fn short_family_names_level() {
        let base = gauss_rule(&uniform(), 5).unwrap();
        let family = nested_family(&base, ReductionCriterion::Prior).unwrap();
        let err = smolyak_rule(&[&family], 5, 2).unwrap_err();
        assert_eq!(
            err,
            Error::FamilyTooShort {
                required_level: 4,
                required_nodes: 9
            }
        );
    }

    #[test]
    fn weights_sum_to_one_and_degree_holds() {
        let cc = ClenshawCurtisFamily::new(Distribution::beta(4.0, 4.0).unwrap()).unwrap();
        for (k, d) in [(3, 2), (5, 3), (6, 4)] {
            let rule = smolyak_rule(&[&cc], k, d).unwrap();
            let s: f64 = rule.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-10);
            assert!(smolyak_degree_check(&rule, k, d));
        }
    }

    #[test]
    fn condition_of_signed_weights() {
        let cc = ClenshawCurtisFamily::new(uniform()).unwrap();
        let rule = smolyak_rule(&[&cc], 7, 5).unwrap();
        assert!(condition_number(&rule) > 1.0);
        let gauss = GaussFamily::new(uniform());
        let one = smolyak_rule(&[&gauss], 3, 1).unwrap();
        assert_eq!(condition_number(&one), 1.0);
    }

    #[test]
    fn unbounded_clenshaw_curtis_rejected() {
        assert!(ClenshawCurtisFamily::new(Distribution::normal(0.0, 1.0).unwrap()).is_err());
    }
}
