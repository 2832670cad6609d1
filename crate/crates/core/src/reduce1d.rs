//! Carathéodory reduction of one-dimensional rules and nested families.
//!
//! A reduction step adds a multiple of a Vandermonde null vector to the
//! weights, so that the moments below the top one (or two, for symmetric
//! rules) stay fixed while one node (or one mirrored pair) receives weight
//! zero and is dropped.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{chebyshev_into, smallest_singular_vector};
use crate::quadrature::{Provenance, QuadratureRule};

/// Relative size below which an updated weight is set to exactly zero.
pub const ZERO_SNAP: f64 = 1e-14;

/// Largest admissible `|V c| / |c|` of a null vector.
const NULL_RESIDUAL: f64 = 1e-10;

/// One of the two candidate weight updates of a reduction step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `w - alpha1 c` with `alpha1 = min { w_k / c_k : c_k > 0 }`.
    First,
    /// `w + alpha2 c` with `alpha2 = min { -w_k / c_k : c_k < 0 }`.
    Second,
}

/// How to choose between two admissible branches.
///
/// Ties under `Prior` go to the branch removing the node farthest from the
/// center, and remaining ties to [`Branch::First`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionCriterion {
    /// Remove the node with the lowest probability density.
    #[default]
    Prior,
    /// Keep the weights with the smallest spread `max w - min w`.
    Weight,
    /// Always take the given branch when both are admissible.
    Explicit(Branch),
}

impl fmt::Display for ReductionCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReductionCriterion::Prior => f.write_str("prior"),
            ReductionCriterion::Weight => f.write_str("weight"),
            ReductionCriterion::Explicit(Branch::First) => f.write_str("first"),
            ReductionCriterion::Explicit(Branch::Second) => f.write_str("second"),
        }
    }
}

impl FromStr for ReductionCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prior" => Ok(ReductionCriterion::Prior),
            "weight" => Ok(ReductionCriterion::Weight),
            "first" => Ok(ReductionCriterion::Explicit(Branch::First)),
            "second" => Ok(ReductionCriterion::Explicit(Branch::Second)),
            _ => Err(Error::InvalidArgument(format!(
                "unknown criterion '{s}' (expected prior, weight, first or second)"
            ))),
        }
    }
}

/// What a branch removes and what it leaves, as seen by the criteria.
#[derive(Clone, Copy, Debug)]
pub(crate) struct BranchScore {
    /// Largest density among removed nodes.
    pub pdf: f64,
    /// Largest distance of a removed node from the center.
    pub distance: f64,
    /// `max w - min w` over surviving weights.
    pub spread: f64,
}

pub(crate) fn decide(criterion: ReductionCriterion, first: &BranchScore, second: &BranchScore) -> Branch {
    let farther = || {
        let scale = first.distance.abs().max(second.distance.abs()).max(f64::MIN_POSITIVE);
        if (first.distance - second.distance).abs() <= 1e-12 * scale {
            Branch::First
        } else if second.distance > first.distance {
            Branch::Second
        } else {
            Branch::First
        }
    };
    match criterion {
        ReductionCriterion::Explicit(b) => b,
        ReductionCriterion::Prior => {
            let scale = first.pdf.max(second.pdf);
            if (first.pdf - second.pdf).abs() <= 1e-12 * scale || scale == 0.0 {
                farther()
            } else if second.pdf < first.pdf {
                Branch::Second
            } else {
                Branch::First
            }
        }
        ReductionCriterion::Weight => {
            if second.spread < first.spread {
                Branch::Second
            } else {
                Branch::First
            }
        }
    }
}

fn normalize_nodes(nodes: &[f64]) -> Result<Vec<f64>> {
    let lo = nodes.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = nodes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidArgument("non-finite node".into()));
    }
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
    for p in order.windows(2) {
        if nodes[p[1]] - nodes[p[0]] <= 1e-13 * (hi - lo) {
            return Err(Error::DuplicateNodes {
                first: p[0].min(p[1]),
                second: p[0].max(p[1]),
            });
        }
    }
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    Ok(nodes.iter().map(|&x| (x - mid) / half).collect())
}

/// `max_j |sum_k c_k u_k^j|` over `j < rows`.
fn monomial_residual(u: &[f64], c: &[f64], rows: usize) -> f64 {
    let mut p: Vec<f64> = c.to_vec();
    let mut worst: f64 = 0.0;
    for j in 0..rows {
        if j > 0 {
            for (pk, uk) in p.iter_mut().zip(u) {
                *pk *= uk;
            }
        }
        worst = worst.max(p.iter().sum::<f64>().abs());
    }
    worst
}

fn norm(c: &[f64]) -> f64 {
    c.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Nonzero `c` with `V_{-1} c = 0`: the Vandermonde matrix on `nodes` without
/// its last row.
pub fn null_vector_asymmetric(nodes: &[f64]) -> Result<Vec<f64>> {
    let n = nodes.len();
    if n < 2 {
        return Err(Error::InvalidArgument("a null vector needs at least two nodes".into()));
    }
    let u = normalize_nodes(nodes)?;
    let rows = n - 1;
    let mut v = DMatrix::zeros(rows, n);
    let mut buf = vec![0.0; rows];
    for (k, uk) in u.iter().enumerate() {
        chebyshev_into(*uk, &mut buf);
        for (j, b) in buf.iter().enumerate() {
            v[(j, k)] = *b;
        }
    }
    let (c, condition) = smallest_singular_vector(&v).ok_or(Error::NoKernel {
        residual: f64::NAN,
        condition: f64::INFINITY,
    })?;
    let mut c: Vec<f64> = c.iter().copied().collect();
    orient(&mut c);
    let residual = monomial_residual(&u, &c, rows);
    if !(residual <= NULL_RESIDUAL * norm(&c)) {
        return Err(Error::NoKernel { residual, condition });
    }
    Ok(c)
}

/// Mirror-symmetric `c` with `V_{-2} c = 0` and `c_k = c_{N-1-k}` exactly.
///
/// Built from the half-size system on the squared distances to the center:
/// one column per mirrored pair (counted twice) and, for odd `N`, one for the
/// middle node.
pub fn null_vector_symmetric(nodes: &[f64]) -> Result<Vec<f64>> {
    let n = nodes.len();
    if n < 2 {
        return Err(Error::InvalidArgument("a symmetric null vector needs at least two nodes".into()));
    }
    let u = normalize_nodes(nodes)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| u[i]).collect();
    if (0..n).any(|k| (sorted[k] + sorted[n - 1 - k]).abs() > 1e-12) {
        return Err(Error::NotSymmetric);
    }
    let pairs = n / 2;
    let odd = n % 2 == 1;
    let half_cols = pairs + usize::from(odd);
    // Even rows 0, 2, .. of V_{-2}.
    let rows = (n - 1) / 2;
    let half: Vec<f64> = (0..pairs)
        .map(|k| 0.5 * (sorted[n - 1 - k] - sorted[k]))
        .collect();
    let (c_half, condition): (Vec<f64>, f64) = if rows == 0 {
        (vec![1.0; half_cols], 1.0)
    } else {
        let mut a = DMatrix::zeros(rows, half_cols);
        let mut buf = vec![0.0; 2 * rows];
        for (k, s) in half.iter().enumerate() {
            chebyshev_into(*s, &mut buf);
            for i in 0..rows {
                a[(i, k)] = 2.0 * buf[2 * i];
            }
        }
        if odd {
            chebyshev_into(0.0, &mut buf);
            for i in 0..rows {
                a[(i, pairs)] = buf[2 * i];
            }
        }
        let (c, condition) = smallest_singular_vector(&a).ok_or(Error::NoKernel {
            residual: f64::NAN,
            condition: f64::INFINITY,
        })?;
        (c.iter().copied().collect(), condition)
    };
    let mut sorted_c = vec![0.0; n];
    for k in 0..pairs {
        sorted_c[k] = c_half[k];
        sorted_c[n - 1 - k] = c_half[k];
    }
    if odd {
        sorted_c[pairs] = c_half[pairs];
    }
    orient(&mut sorted_c);
    let mut c = vec![0.0; n];
    for (pos, &i) in order.iter().enumerate() {
        c[i] = sorted_c[pos];
    }
    let residual = monomial_residual(&u, &c, n.saturating_sub(2));
    if !(residual <= NULL_RESIDUAL * norm(&c)) {
        return Err(Error::NoKernel { residual, condition });
    }
    Ok(c)
}

/// Fixes the sign so the first entry of largest magnitude is positive.
fn orient(c: &mut [f64]) {
    let mut best = 0.0_f64;
    for &v in c.iter() {
        if v.abs() > best.abs() {
            best = v;
        }
    }
    if best < 0.0 {
        for v in c.iter_mut() {
            *v = -*v;
        }
    }
}

/// Both candidate updates `w - alpha1 c` and `w + alpha2 c`, zero-snapped.
pub(crate) fn branches(w: &[f64], c: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    branches_with_floor(w, c, 0.0)
}

/// [`branches`] where results below `floor * alpha * max |c|` also snap to
/// zero, for kernel vectors carrying rounding error of that absolute size.
pub(crate) fn branches_with_floor(w: &[f64], c: &[f64], floor: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let cmax = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let ratio = |sign: f64| {
        w.iter()
            .zip(c)
            .enumerate()
            .filter(|(_, (&wk, &ck))| wk != 0.0 && sign * ck > 0.0)
            .map(|(k, (&wk, &ck))| (wk / (sign * ck), k))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    };
    let (a1, k1) = ratio(1.0)?;
    let (a2, k2) = ratio(-1.0)?;
    let build = |alpha: f64, sign: f64, k: usize| {
        let mut out: Vec<f64> = w
            .iter()
            .zip(c)
            .map(|(&wk, &ck)| {
                let step = sign * alpha * ck;
                let v = wk - step;
                // Cancellation down to rounding level counts as a zero.
                if wk == 0.0
                    || v.abs() <= ZERO_SNAP * wk.abs().max(step.abs())
                    || v.abs() <= floor * alpha * cmax
                {
                    0.0
                } else {
                    v
                }
            })
            .collect();
        out[k] = 0.0;
        out
    };
    Some((build(a1, 1.0, k1), build(a2, -1.0, k2)))
}

fn removed(parent: &[f64], child: &[f64]) -> Vec<usize> {
    parent
        .iter()
        .zip(child)
        .enumerate()
        .filter(|(_, (&p, &c))| p != 0.0 && c == 0.0)
        .map(|(i, _)| i)
        .collect()
}

fn spread(w: &[f64]) -> f64 {
    let live = w.iter().filter(|&&v| v != 0.0);
    let max = live.clone().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = live.cloned().fold(f64::INFINITY, f64::min);
    if max.is_finite() {
        max - min
    } else {
        0.0
    }
}

fn score(rule: &QuadratureRule, branch: &[f64]) -> BranchScore {
    let dist = &rule.distribution;
    let center = dist.symmetry_center().unwrap_or_else(|| dist.center());
    let gone = removed(&rule.weights, branch);
    BranchScore {
        pdf: gone
            .iter()
            .map(|&i| dist.pdf(rule.nodes[i]))
            .fold(0.0, f64::max),
        distance: gone
            .iter()
            .map(|&i| (rule.nodes[i] - center).abs())
            .fold(0.0, f64::max),
        spread: spread(branch),
    }
}

/// Chooses between two admissible branches of a reduction of `rule`.
pub fn select_branch(
    w1: &[f64],
    w2: &[f64],
    criterion: ReductionCriterion,
    rule: &QuadratureRule,
) -> Branch {
    decide(criterion, &score(rule, w1), &score(rule, w2))
}

/// Whether the symmetric pathway applies: a symmetric distribution and a
/// mirror-invariant node set.
pub fn uses_symmetric_path(rule: &QuadratureRule) -> bool {
    rule.is_symmetric()
}

/// One reduction step: drops one node, or one mirrored pair for symmetric rules.
pub fn reduction_step(rule: &QuadratureRule, criterion: ReductionCriterion) -> Result<QuadratureRule> {
    if let Some((index, &weight)) = rule.weights.iter().enumerate().find(|(_, &w)| w <= 0.0) {
        return Err(Error::NonPositiveWeight { index, weight });
    }
    let n = rule.len();
    let symmetric = uses_symmetric_path(rule);
    if n < 2 || (symmetric && n < 3) {
        return Err(Error::ReductionExhausted(format!(
            "a {}{n}-node rule cannot be reduced further",
            if symmetric { "symmetric " } else { "" }
        )));
    }
    let t = rule.canonical_nodes();
    let c = if symmetric {
        null_vector_symmetric(&t)?
    } else {
        null_vector_asymmetric(&t)?
    };
    let (w1, w2) = branches(&rule.weights, &c).ok_or_else(|| {
        Error::ReductionExhausted("null vector entries all share one sign".into())
    })?;
    let required = if symmetric { 2 } else { 1 };
    let ok1 = removed(&rule.weights, &w1).len() >= required;
    let ok2 = removed(&rule.weights, &w2).len() >= required;
    let chosen = match (ok1, ok2) {
        (true, false) => w1,
        (false, true) => w2,
        (true, true) => match select_branch(&w1, &w2, criterion, rule) {
            Branch::First => w1,
            Branch::Second => w2,
        },
        (false, false) => {
            return Err(Error::ReductionExhausted(format!(
                "neither branch zeroes {required} weight(s) on {n} nodes"
            )))
        }
    };
    let preserved = if symmetric {
        // Moments up to n - 3 plus every odd moment.
        if n % 2 == 1 {
            n - 2
        } else {
            n - 3
        }
    } else {
        n - 2
    };
    let (nodes, weights): (Vec<f64>, Vec<f64>) = rule
        .nodes
        .iter()
        .zip(&chosen)
        .filter(|(_, &w)| w != 0.0)
        .map(|(&x, &w)| (x, w))
        .unzip();
    QuadratureRule::new(
        nodes,
        weights,
        preserved.min(rule.degree),
        rule.distribution.clone(),
        Provenance::Reduced,
    )
}

/// Rules with strictly decreasing sizes, each node set contained in the previous.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedFamily {
    rules: Vec<QuadratureRule>,
}

impl NestedFamily {
    /// Checks ordering, shared distribution and exact nesting.
    pub fn new(rules: Vec<QuadratureRule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::InvalidArgument("empty family".into()));
        }
        for pair in rules.windows(2) {
            let (big, small) = (&pair[0], &pair[1]);
            if small.len() >= big.len() {
                return Err(Error::InvalidArgument(
                    "family sizes must strictly decrease".into(),
                ));
            }
            if small.distribution != big.distribution {
                return Err(Error::InvalidArgument(
                    "family members must share one distribution".into(),
                ));
            }
            if let Some(x) = small.nodes.iter().find(|x| !big.nodes.contains(x)) {
                return Err(Error::InvalidArgument(format!(
                    "node {x} of a {}-node member is missing from the {}-node member",
                    small.len(),
                    big.len()
                )));
            }
        }
        Ok(NestedFamily { rules })
    }

    /// Members from largest to smallest.
    pub fn rules(&self) -> &[QuadratureRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.rules.iter().map(QuadratureRule::len).collect()
    }

    pub fn member_with_size(&self, n: usize) -> Option<&QuadratureRule> {
        self.rules.iter().find(|r| r.len() == n)
    }

    pub fn into_rules(self) -> Vec<QuadratureRule> {
        self.rules
    }
}

/// Repeated reduction down to one node (two for even symmetric rules).
pub fn nested_family(rule: &QuadratureRule, criterion: ReductionCriterion) -> Result<NestedFamily> {
    nested_family_to(rule, criterion, 1)
}

/// Repeated reduction until the size is at most `min_size` or no step applies.
pub fn nested_family_to(
    rule: &QuadratureRule,
    criterion: ReductionCriterion,
    min_size: usize,
) -> Result<NestedFamily> {
    let mut rules = vec![rule.clone()];
    loop {
        let last = rules.last().expect("family is never empty");
        let n = last.len();
        if n <= min_size.max(1) || (uses_symmetric_path(last) && n <= 2) {
            break;
        }
        let next = reduction_step(last, criterion)?;
        log::debug!("reduced {} -> {} nodes", n, next.len());
        rules.push(next);
    }
    NestedFamily::new(rules)
}
