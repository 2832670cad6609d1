//! Multi-dimensional Carathéodory reduction: the generic positive variant,
//! the symmetric positive variant and the symmetric variant that admits
//! negative weights.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::multi_index::MultiIndexSet;
use super::orbit::{
    basis_table, collapsed_matrix, normalized_nodes, orbit_partition, Basis, OrbitPartition,
    SymmetryType,
};
use super::rule::{verify_degree_up_to, CubatureProvenance, CubatureRule};
use crate::error::{Error, Result};
use crate::linalg::{kernel, ColumnwiseKernel};
use crate::reduce1d::{branches_with_floor, decide, Branch, BranchScore, ReductionCriterion};

/// Relative remainder below which a new column counts as dependent.
const DEPENDENCY_TOLERANCE: f64 = 1e-9;

/// Rounding level of eliminated kernel vectors relative to their largest entry.
const ELIMINATION_SNAP: f64 = 1e-13;

/// Relative singular value below which an orbit-matrix direction is a kernel vector.
const KERNEL_TOLERANCE: f64 = 1e-12;

/// Which reduction algorithm to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionMode {
    /// Node by node, positive weights, no symmetry.
    Positive,
    /// Orbit by orbit, positive weights.
    Symmetric,
    /// Orbit by orbit, largest orbit first, weights may turn negative.
    Negative,
}

impl fmt::Display for ReductionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReductionMode::Positive => "positive",
            ReductionMode::Symmetric => "symmetric",
            ReductionMode::Negative => "negative",
        })
    }
}

impl FromStr for ReductionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(ReductionMode::Positive),
            "symmetric" => Ok(ReductionMode::Symmetric),
            "negative" => Ok(ReductionMode::Negative),
            _ => Err(Error::InvalidArgument(format!(
                "unknown mode '{s}' (expected positive, symmetric or negative)"
            ))),
        }
    }
}

fn require_degree(rule: &CubatureRule, target: usize) -> Result<()> {
    let verified = verify_degree_up_to(rule, target);
    if verified < target {
        return Err(Error::InsufficientDegree {
            required: target,
            verified,
        });
    }
    Ok(())
}

fn require_positive(weights: &[f64]) -> Result<()> {
    match weights.iter().enumerate().find(|(_, &w)| w <= 0.0) {
        Some((index, &weight)) => Err(Error::NonPositiveWeight { index, weight }),
        None => Ok(()),
    }
}

/// Subtracts multiples of `pivot` so that entry `k` of every vector vanishes.
fn eliminate(vectors: &mut [Vec<f64>], pivot: &[f64], k: usize) {
    let pk = pivot[k];
    vectors.par_iter_mut().for_each(|v| {
        let f = v[k] / pk;
        if f != 0.0 {
            for (vi, pi) in v.iter_mut().zip(pivot) {
                *vi -= f * pi;
            }
        }
        v[k] = 0.0;
    });
}

fn amax(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Relative residual `|G c| / sum |c_k| |g_k|` above which the remaining
/// kernel vectors are recomputed on the surviving columns.
const DRIFT_TOLERANCE: f64 = 1e-10;

/// Columns of the matrix whose kernel drives a reduction.
struct KernelSource {
    columns: Vec<DVector<f64>>,
    norms: Vec<f64>,
    svd: bool,
}

impl KernelSource {
    /// Kernel vectors from dependent columns, in column order.
    fn columnwise(columns: Vec<DVector<f64>>) -> Self {
        Self::new(columns, false)
    }

    /// Kernel vectors from a singular value decomposition.
    fn singular(columns: Vec<DVector<f64>>) -> Self {
        Self::new(columns, true)
    }

    fn new(columns: Vec<DVector<f64>>, svd: bool) -> Self {
        let norms = columns.iter().map(|c| c.amax()).collect();
        KernelSource { columns, norms, svd }
    }

    fn residual(&self, c: &[f64]) -> f64 {
        let rows = self.columns.first().map_or(0, |v| v.len());
        let mut r = DVector::zeros(rows);
        let mut scale = 0.0;
        for (k, &ck) in c.iter().enumerate() {
            if ck != 0.0 {
                r.axpy(ck, &self.columns[k], 1.0);
                scale += ck.abs() * self.norms[k];
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            r.amax() / scale
        }
    }

    /// Kernel vectors supported on the columns with nonzero weight.
    fn rebuild(&self, weights: &[f64]) -> Result<Vec<Vec<f64>>> {
        let alive: Vec<usize> = (0..weights.len()).filter(|&k| weights[k] != 0.0).collect();
        let n = weights.len();
        let embed = |pairs: Vec<(usize, f64)>| {
            let mut dense = vec![0.0; n];
            for (i, v) in pairs {
                dense[alive[i]] = v;
            }
            dense
        };
        if self.svd {
            let rows = self.columns.first().map_or(0, |v| v.len());
            let g = DMatrix::from_fn(rows, alive.len(), |r, c| self.columns[alive[c]][r]);
            let k = kernel(&g, KERNEL_TOLERANCE).ok_or_else(|| {
                Error::ReductionExhausted("singular value decomposition did not converge".into())
            })?;
            Ok(k.vectors
                .into_iter()
                .map(|v| embed(v.iter().copied().enumerate().collect()))
                .collect())
        } else {
            let rows = self.columns.first().map_or(0, |v| v.len());
            let mut ck = ColumnwiseKernel::new(rows, DEPENDENCY_TOLERANCE);
            Ok(alive
                .iter()
                .filter_map(|&k| ck.push(&self.columns[k]))
                .map(embed)
                .collect())
        }
    }
}

/// Runs the kernel vectors in order. `step` maps the current weights and a
/// kernel vector to new weights and the entries it zeroed, or `None` to skip.
///
/// Elimination keeps removed entries at zero in the later vectors but can
/// lose accuracy; a vector that no longer lies in the kernel triggers a
/// fresh kernel of the surviving columns.
fn sweep<F>(
    weights: &mut Vec<f64>,
    mut vectors: Vec<Vec<f64>>,
    source: &KernelSource,
    mut step: F,
) -> Result<usize>
where
    F: FnMut(&[f64], &[f64]) -> Option<(Vec<f64>, Vec<usize>)>,
{
    let mut initial: Vec<f64> = vectors.iter().map(|v| amax(v)).collect();
    let mut removed = 0;
    let mut i = 0;
    let mut fresh_from = 0;
    while i < vectors.len() {
        let (head, tail) = vectors.split_at_mut(i + 1);
        let c = &mut head[i];
        for (ck, wk) in c.iter_mut().zip(weights.iter()) {
            if *wk == 0.0 {
                *ck = 0.0;
            }
        }
        if amax(c) <= 1e-10 * initial[i] {
            i += 1;
            continue;
        }
        if i >= fresh_from && source.residual(c) > DRIFT_TOLERANCE {
            log::debug!("kernel vector {i} drifted; recomputing the kernel");
            vectors.truncate(i);
            initial.truncate(i);
            let rebuilt = source.rebuild(weights)?;
            initial.extend(rebuilt.iter().map(|v| amax(v)));
            vectors.extend(rebuilt);
            // Freshly computed vectors are not checked again until one is used.
            fresh_from = i + 1;
            continue;
        }
        let Some((new_w, zeroed)) = step(weights, c) else {
            i += 1;
            continue;
        };
        *weights = new_w;
        removed += zeroed.len();
        let mut rest: &mut [Vec<f64>] = tail;
        let mut zeroed = zeroed.into_iter();
        if let Some(k) = zeroed.next() {
            eliminate(rest, c, k);
        }
        // Further zeros in the same step each consume one more kernel vector.
        for k in zeroed {
            let Some(j) = (0..rest.len()).max_by(|&a, &b| rest[a][k].abs().total_cmp(&rest[b][k].abs())) else {
                break;
            };
            if rest[j][k] == 0.0 {
                continue;
            }
            rest.swap(0, j);
            initial.swap(i + 1, i + 1 + j);
            let (p, others) = rest.split_at_mut(1);
            eliminate(others, &p[0], k);
            p[0].iter_mut().for_each(|v| *v = 0.0);
            rest = others;
            i += 1;
        }
        i += 1;
    }
    Ok(removed)
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
    let (lo, hi) = w
        .iter()
        .filter(|&&v| v != 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

/// Generalized Vandermonde matrix in the Chebyshev basis of normalized
/// coordinates, one column per node.
fn vandermonde_columns(rule: &CubatureRule, rows: &MultiIndexSet) -> Vec<DVector<f64>> {
    let dim = rule.dim();
    let top = rows.max_degree();
    let stride = top + 1;
    let table = basis_table(&normalized_nodes(rule), top, Basis::Chebyshev);
    (0..rule.len())
        .into_par_iter()
        .map(|k| {
            DVector::from_iterator(
                rows.len(),
                rows.iter().map(|alpha| {
                    alpha
                        .iter()
                        .enumerate()
                        .fold(1.0, |p, (i, &e)| p * table[(k * dim + i) * stride + e])
                }),
            )
        })
        .collect()
}

/// Positive reduction preserving every moment of total degree `<= target_degree`.
///
/// Kernel vectors of the generalized Vandermonde matrix are built column by
/// column; each one removes a node, and the remaining vectors are updated by
/// Gaussian elimination so removed nodes stay removed.
pub fn reduce_step_general(
    rule: &CubatureRule,
    target_degree: usize,
    criterion: ReductionCriterion,
) -> Result<CubatureRule> {
    require_positive(rule.weights())?;
    require_degree(rule, target_degree)?;
    let rows = MultiIndexSet::new(rule.dim(), target_degree)?;
    let columns = vandermonde_columns(rule, &rows);
    let n = rule.len();
    let mut ck = ColumnwiseKernel::new(rows.len(), DEPENDENCY_TOLERANCE);
    let mut vectors = Vec::new();
    for col in &columns {
        if let Some(sparse) = ck.push(col) {
            let mut dense = vec![0.0; n];
            for (i, v) in sparse {
                dense[i] = v;
            }
            vectors.push(dense);
        }
    }
    log::info!(
        "generalized Vandermonde: {} rows, {} columns, rank {}, kernel {}",
        rows.len(),
        n,
        ck.rank(),
        vectors.len()
    );
    if vectors.is_empty() {
        return Err(Error::ReductionExhausted(format!(
            "kernel is empty: rank {} of {n} columns",
            ck.rank()
        )));
    }
    let canonical = rule.canonical_nodes();
    let dim = rule.dim();
    let score = |parent: &[f64], child: &[f64]| {
        let gone = removed(parent, child);
        BranchScore {
            pdf: gone.iter().map(|&k| rule.pdf(rule.node(k))).fold(0.0, f64::max),
            distance: gone
                .iter()
                .map(|&k| canonical[k * dim..(k + 1) * dim].iter().map(|v| v * v).sum::<f64>().sqrt())
                .fold(0.0, f64::max),
            spread: spread(child),
        }
    };
    let source = KernelSource::columnwise(columns);
    let mut weights = rule.weights().to_vec();
    sweep(&mut weights, vectors, &source, |w, c| {
        let (w1, w2) = branches_with_floor(w, c, ELIMINATION_SNAP)?;
        let chosen = match decide(criterion, &score(w, &w1), &score(w, &w2)) {
            Branch::First => w1,
            Branch::Second => w2,
        };
        let zeroed = removed(w, &chosen);
        Some((chosen, zeroed))
    })?;
    let keep: Vec<bool> = weights.iter().map(|&w| w != 0.0).collect();
    Ok(rule
        .subset(&keep, &weights)?
        .with_degree(target_degree)
        .with_provenance(CubatureProvenance::Reduced))
}

/// Symmetry group the rule is invariant under, preferring sign flips with permutations.
pub fn symmetry_type(rule: &CubatureRule) -> Result<SymmetryType> {
    let dists = rule.distributions();
    if dists.iter().any(|d| d.symmetry_center().is_none()) {
        return Err(Error::NotSymmetric);
    }
    if dists.windows(2).all(|p| p[0] == p[1])
        && orbit_partition(rule, SymmetryType::Type12)
            .audit(rule.weights())
            .is_ok()
    {
        return Ok(SymmetryType::Type12);
    }
    orbit_partition(rule, SymmetryType::Type1).audit(rule.weights())?;
    Ok(SymmetryType::Type1)
}

struct OrbitSystem {
    partition: OrbitPartition,
    source: KernelSource,
    weights: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

fn orbit_system(rule: &CubatureRule, target_degree: usize) -> Result<OrbitSystem> {
    require_degree(rule, target_degree)?;
    let symmetry = symmetry_type(rule)?;
    let partition = orbit_partition(rule, symmetry);
    let rows = match symmetry {
        SymmetryType::Type12 => MultiIndexSet::even_sorted(rule.dim(), target_degree)?,
        SymmetryType::Type1 => MultiIndexSet::even(rule.dim(), target_degree)?,
    };
    let g = collapsed_matrix(rule, &partition, &rows, Basis::Chebyshev);
    let k = kernel(&g, KERNEL_TOLERANCE).ok_or_else(|| {
        Error::ReductionExhausted("singular value decomposition did not converge".into())
    })?;
    log::info!(
        "collapsed matrix: {} rows, {} orbits, kernel {}, condition {:.3e}",
        g.nrows(),
        g.ncols(),
        k.vectors.len(),
        k.condition
    );
    let weights = partition.orbit_weights(rule.weights());
    let source = KernelSource::singular(g.column_iter().map(|c| c.into_owned()).collect());
    Ok(OrbitSystem {
        partition,
        source,
        weights,
        vectors: k.vectors.into_iter().map(|v| v.as_slice().to_vec()).collect(),
    })
}

fn expand_rule(
    rule: &CubatureRule,
    partition: &OrbitPartition,
    orbit_weights: &[f64],
    target_degree: usize,
    provenance: CubatureProvenance,
) -> Result<CubatureRule> {
    let weights = partition.expand(orbit_weights);
    let keep: Vec<bool> = weights.iter().map(|&w| w != 0.0).collect();
    Ok(rule
        .subset(&keep, &weights)?
        .with_degree(target_degree)
        .with_provenance(provenance))
}

/// Symmetric positive reduction preserving moments of degree `<= target_degree`.
///
/// Works on orbit weights with kernel vectors of the collapsed matrix. Of the
/// two admissible updates per vector, the one removing the larger orbit wins;
/// equal sizes are settled by `criterion`.
pub fn reduce_step_symmetric(
    rule: &CubatureRule,
    target_degree: usize,
    criterion: ReductionCriterion,
) -> Result<CubatureRule> {
    require_positive(rule.weights())?;
    let OrbitSystem {
        partition,
        source,
        mut weights,
        vectors,
    } = orbit_system(rule, target_degree)?;
    if vectors.is_empty() {
        return Err(Error::ReductionExhausted(format!(
            "no symmetric kernel vector among {} orbits",
            partition.len()
        )));
    }
    let orbits = partition.orbits();
    let reps: Vec<Vec<f64>> = orbits
        .iter()
        .map(|o| rule.node(o.members[0]).to_vec())
        .collect();
    let score = |parent: &[f64], child: &[f64]| {
        let gone = removed(parent, child);
        let size = gone.iter().map(|&r| orbits[r].size).max().unwrap_or(0);
        let s = BranchScore {
            pdf: gone.iter().map(|&r| rule.pdf(&reps[r])).fold(0.0, f64::max),
            distance: gone
                .iter()
                .map(|&r| orbits[r].representative.iter().map(|v| v * v).sum::<f64>().sqrt())
                .fold(0.0, f64::max),
            spread: spread(child),
        };
        (size, s)
    };
    let removed_orbits = sweep(&mut weights, vectors, &source, |w, c| {
        let (w1, w2) = branches_with_floor(w, c, ELIMINATION_SNAP)?;
        let (size1, s1) = score(w, &w1);
        let (size2, s2) = score(w, &w2);
        let branch = if size1 != size2 {
            if size2 > size1 {
                Branch::Second
            } else {
                Branch::First
            }
        } else {
            decide(criterion, &s1, &s2)
        };
        let chosen = if branch == Branch::First { w1 } else { w2 };
        let zeroed = removed(w, &chosen);
        Some((chosen, zeroed))
    })?;
    log::info!("removed {removed_orbits} orbits");
    expand_rule(
        rule,
        &partition,
        &weights,
        target_degree,
        CubatureProvenance::SymmetricReduced,
    )
}

/// Symmetric reduction admitting negative weights.
///
/// Every kernel vector removes the largest orbit in its support, so orbits
/// on coordinate planes tend to survive. An empty kernel keeps every node;
/// the weights are still made exactly equal within each orbit.
pub fn reduce_step_negative(rule: &CubatureRule, target_degree: usize) -> Result<CubatureRule> {
    let OrbitSystem {
        partition,
        source,
        mut weights,
        vectors,
    } = orbit_system(rule, target_degree)?;
    let sizes: Vec<usize> = partition.orbits().iter().map(|o| o.size).collect();
    let removed_orbits = sweep(&mut weights, vectors, &source, |w, c| {
        let cmax = amax(c);
        let support = (0..c.len()).filter(|&r| w[r] != 0.0 && c[r].abs() > 1e-12 * cmax);
        let gamma = support.clone().map(|r| sizes[r]).max()?;
        let k0 = support.clone().find(|&r| sizes[r] == gamma)?;
        let alpha = w[k0] / c[k0];
        let mut out: Vec<f64> = w.iter().zip(c).map(|(wk, ck)| wk - alpha * ck).collect();
        out[k0] = 0.0;
        Some((out, vec![k0]))
    })?;
    log::info!("removed {removed_orbits} orbits");
    expand_rule(
        rule,
        &partition,
        &weights,
        target_degree,
        CubatureProvenance::NegativeSymmetricReduced,
    )
}

/// One reduction in the given mode.
pub fn reduce(
    rule: &CubatureRule,
    mode: ReductionMode,
    target_degree: usize,
    criterion: ReductionCriterion,
) -> Result<CubatureRule> {
    match mode {
        ReductionMode::Positive => reduce_step_general(rule, target_degree, criterion),
        ReductionMode::Symmetric => reduce_step_symmetric(rule, target_degree, criterion),
        ReductionMode::Negative => reduce_step_negative(rule, target_degree),
    }
}

/// Reductions to degrees `from_degree, from_degree - 1, ..., to_degree`, each
/// applied to the previous result.
pub fn reduce_sequence(
    rule: &CubatureRule,
    mode: ReductionMode,
    from_degree: usize,
    to_degree: usize,
    criterion: ReductionCriterion,
) -> Result<Vec<CubatureRule>> {
    if to_degree > from_degree {
        return Err(Error::InvalidArgument(format!(
            "target degree {to_degree} exceeds starting degree {from_degree}"
        )));
    }
    let mut out: Vec<CubatureRule> = Vec::new();
    for degree in (to_degree..=from_degree).rev() {
        let current = out.last().unwrap_or(rule);
        out.push(reduce(current, mode, degree, criterion)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubature::rule::{tensor_rule, verify_degree};
    use crate::distributions::Distribution;
    use crate::quadrature::{clenshaw_curtis_rule, gauss_rule};

    fn cc_tensor(n: usize) -> CubatureRule {
        let u = Distribution::uniform(-1.0, 1.0).unwrap();
        let r = clenshaw_curtis_rule(&u, n).unwrap();
        tensor_rule(&[r.clone(), r]).unwrap()
    }

    #[test]
    fn general_variant_on_cc_tensor() {
        let r = reduce_step_general(&cc_tensor(9), 9, ReductionCriterion::Prior).unwrap();
        // Ties may zero several weights in one step, so the count can drop below 55.
        assert!(r.len() <= 55, "{}", r.len());
        assert!(r.is_positive());
        assert!(verify_degree(&r) >= 9);
    }

    #[test]
    fn symmetric_variants_on_cc_tensor() {
        let t = cc_tensor(9);
        let pos = reduce_step_symmetric(&t, 9, ReductionCriterion::Prior).unwrap();
        assert!(pos.is_positive());
        assert!(verify_degree(&pos) >= 9);
        assert!(pos.len() <= 55);
        let neg = reduce_step_negative(&t, 9).unwrap();
        assert!(verify_degree(&neg) >= 9);
        assert!(neg.len() <= 45);
        orbit_partition(&neg, SymmetryType::Type12).audit(neg.weights()).unwrap();
    }

    #[test]
    fn insufficient_degree_is_reported() {
        let u = Distribution::uniform(-1.0, 1.0).unwrap();
        let g = gauss_rule(&u, 2).unwrap();
        let t = tensor_rule(&[g.clone(), g]).unwrap();
        assert_eq!(
            reduce_step_negative(&t, 5).unwrap_err(),
            Error::InsufficientDegree { required: 5, verified: 3 }
        );
    }

    #[test]
    fn asymmetric_rules_are_rejected_by_symmetric_modes() {
        let b = Distribution::beta(2.0, 5.0).unwrap();
        let g = gauss_rule(&b, 3).unwrap();
        let t = tensor_rule(&[g.clone(), g]).unwrap();
        assert_eq!(reduce_step_negative(&t, 3).unwrap_err(), Error::NotSymmetric);
    }
}
