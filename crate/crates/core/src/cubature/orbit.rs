//! Orbits of cubature nodes under coordinate sign flips (type 1) and, in
//! addition, coordinate permutations (type 2), and the collapsed Vandermonde
//! matrices whose columns are orbit sums.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::multi_index::MultiIndexSet;
use super::rule::CubatureRule;
use crate::error::{Error, Result};
use crate::linalg::chebyshev_into;
use crate::quadrature::chebyshev_scale;

/// Magnitudes closer than this (in canonical coordinates) are identified.
pub const ORBIT_TOLERANCE: f64 = 1e-12;

/// Symmetry group used to form orbits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryType {
    /// Sign flips of individual coordinates.
    Type1,
    /// Sign flips and permutations of coordinates.
    Type12,
}

/// One orbit of the node set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    /// Indices of the nodes in the orbit, in rule order.
    pub members: Vec<usize>,
    /// Size of the full orbit, `2^{nonzeros}` times the number of distinct
    /// permutations for type 1+2.
    pub size: usize,
    /// Canonical absolute coordinates of the first member, sorted ascending for type 1+2.
    pub representative: Vec<f64>,
    /// Some coordinate is zero.
    pub on_type1_plane: bool,
    /// Two coordinates share one magnitude.
    pub on_type2_plane: bool,
}

/// Grouping of a node set into orbits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitPartition {
    symmetry: SymmetryType,
    orbits: Vec<Orbit>,
    orbit_of: Vec<usize>,
}

/// Cluster ids of magnitudes; id 0 is reserved for zero.
fn cluster(values: &[f64]) -> (Vec<u32>, Vec<f64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ids = vec![0u32; values.len()];
    let mut centers = vec![0.0];
    let mut prev = f64::NAN;
    for &i in &order {
        let v = values[i];
        if v <= ORBIT_TOLERANCE {
            ids[i] = 0;
            continue;
        }
        if !(v - prev <= ORBIT_TOLERANCE) {
            centers.push(v);
        }
        ids[i] = (centers.len() - 1) as u32;
        prev = v;
    }
    (ids, centers)
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Orbit size of a point given its magnitude cluster ids (0 means zero).
pub fn orbit_size(ids: &[u32], symmetry: SymmetryType) -> usize {
    let nonzero = ids.iter().filter(|&&i| i != 0).count();
    let signs = 1u128 << nonzero;
    let perms = match symmetry {
        SymmetryType::Type1 => 1,
        SymmetryType::Type12 => {
            let mut counts: HashMap<u32, usize> = HashMap::new();
            for &i in ids {
                *counts.entry(i).or_default() += 1;
            }
            counts
                .values()
                .fold(factorial(ids.len()), |acc, &m| acc / factorial(m))
        }
    };
    usize::try_from(signs * perms).unwrap_or(usize::MAX)
}

impl OrbitPartition {
    /// Groups canonical coordinates (row by row, `dim` per node).
    pub fn from_canonical(coords: &[f64], dim: usize, symmetry: SymmetryType) -> Self {
        let n = coords.len() / dim;
        let abs: Vec<f64> = coords.iter().map(|v| v.abs()).collect();
        let ids: Vec<u32> = match symmetry {
            SymmetryType::Type12 => cluster(&abs).0,
            SymmetryType::Type1 => {
                let mut ids = vec![0u32; abs.len()];
                for axis in 0..dim {
                    let column: Vec<f64> = (0..n).map(|k| abs[k * dim + axis]).collect();
                    for (k, id) in cluster(&column).0.into_iter().enumerate() {
                        ids[k * dim + axis] = id;
                    }
                }
                ids
            }
        };
        let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
        let mut orbits: Vec<Orbit> = Vec::new();
        let mut orbit_of = Vec::with_capacity(n);
        for k in 0..n {
            let row = &ids[k * dim..(k + 1) * dim];
            let mut key = row.to_vec();
            if symmetry == SymmetryType::Type12 {
                key.sort_unstable();
            }
            let next = orbits.len();
            let o = *index.entry(key.clone()).or_insert(next);
            if o == next {
                let mut rep: Vec<f64> = abs[k * dim..(k + 1) * dim].to_vec();
                if symmetry == SymmetryType::Type12 {
                    rep.sort_by(f64::total_cmp);
                }
                let mut sorted = key.clone();
                sorted.sort_unstable();
                orbits.push(Orbit {
                    members: Vec::new(),
                    size: orbit_size(&key, symmetry),
                    representative: rep,
                    on_type1_plane: key.contains(&0),
                    on_type2_plane: sorted.windows(2).any(|p| p[0] == p[1]),
                });
            }
            orbits[o].members.push(k);
            orbit_of.push(o);
        }
        OrbitPartition {
            symmetry,
            orbits,
            orbit_of,
        }
    }

    pub fn symmetry(&self) -> SymmetryType {
        self.symmetry
    }

    pub fn orbits(&self) -> &[Orbit] {
        &self.orbits
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn orbit_of(&self, node: usize) -> usize {
        self.orbit_of[node]
    }

    /// Every orbit is complete and carries one weight (within `1e-12` relative).
    pub fn audit(&self, weights: &[f64]) -> Result<()> {
        let scale = weights.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
        for o in &self.orbits {
            if o.members.len() != o.size {
                return Err(Error::NotSymmetric);
            }
            let w0 = weights[o.members[0]];
            if o
                .members
                .iter()
                .any(|&k| (weights[k] - w0).abs() > 1e-12 * scale)
            {
                return Err(Error::NotSymmetric);
            }
        }
        Ok(())
    }

    /// Mean weight of each orbit.
    pub fn orbit_weights(&self, weights: &[f64]) -> Vec<f64> {
        self.orbits
            .iter()
            .map(|o| {
                if o.members.iter().all(|&k| weights[k] == weights[o.members[0]]) {
                    weights[o.members[0]]
                } else {
                    o.members.iter().map(|&k| weights[k]).sum::<f64>() / o.members.len() as f64
                }
            })
            .collect()
    }

    /// Per-node vector taking each orbit's value on all its members.
    pub fn expand(&self, per_orbit: &[f64]) -> Vec<f64> {
        self.orbit_of.iter().map(|&o| per_orbit[o]).collect()
    }
}

/// Orbits of a rule's nodes in canonical coordinates.
pub fn orbit_partition(rule: &CubatureRule, symmetry: SymmetryType) -> OrbitPartition {
    OrbitPartition::from_canonical(&rule.canonical_nodes(), rule.dim(), symmetry)
}

/// Polynomial basis of collapsed-matrix rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Basis {
    Monomial,
    Chebyshev,
}

/// Per-axis coordinates scaled into `[-1, 1]`, row by row.
pub(crate) fn normalized_nodes(rule: &CubatureRule) -> Vec<f64> {
    let dim = rule.dim();
    let t = rule.canonical_nodes();
    let n = rule.len();
    let scales: Vec<f64> = (0..dim)
        .map(|axis| {
            let column: Vec<f64> = (0..n).map(|k| t[k * dim + axis]).collect();
            chebyshev_scale(&rule.distributions()[axis], &column)
        })
        .collect();
    t.iter()
        .enumerate()
        .map(|(i, v)| v / scales[i % dim])
        .collect()
}

/// Per-axis basis values `table[(k * dim + i) * (top + 1) + j]`.
pub(crate) fn basis_table(u: &[f64], top: usize, basis: Basis) -> Vec<f64> {
    let stride = top + 1;
    let mut table = vec![0.0; u.len() * stride];
    for (slot, &v) in u.iter().enumerate() {
        let row = &mut table[slot * stride..(slot + 1) * stride];
        match basis {
            Basis::Chebyshev => chebyshev_into(v, row),
            Basis::Monomial => {
                row[0] = 1.0;
                for j in 1..stride {
                    row[j] = row[j - 1] * v;
                }
            }
        }
    }
    table
}

pub(crate) fn collapsed_matrix(
    rule: &CubatureRule,
    partition: &OrbitPartition,
    rows: &MultiIndexSet,
    basis: Basis,
) -> DMatrix<f64> {
    let dim = rule.dim();
    let top = rows.max_degree();
    let table = basis_table(&normalized_nodes(rule), top, basis);
    let stride = top + 1;
    let mut g = DMatrix::zeros(rows.len(), partition.len());
    for (col, orbit) in partition.orbits().iter().enumerate() {
        for (r, alpha) in rows.iter().enumerate() {
            let mut s = 0.0;
            for &k in &orbit.members {
                let mut p = 1.0;
                for (i, &e) in alpha.iter().enumerate() {
                    p *= table[(k * dim + i) * stride + e];
                }
                s += p;
            }
            g[(r, col)] = s;
        }
    }
    g
}

/// Orbit-sum matrix over even-exponent monomials of degree at most `max_degree`
/// for sign-flip orbits, in normalized coordinates.
pub fn collapsed_matrix_type1(
    rule: &CubatureRule,
    partition: &OrbitPartition,
    max_degree: usize,
) -> Result<DMatrix<f64>> {
    let rows = MultiIndexSet::even(rule.dim(), max_degree)?;
    Ok(collapsed_matrix(rule, partition, &rows, Basis::Monomial))
}

/// Orbit-sum matrix over sorted even-exponent monomials of degree at most
/// `max_degree` for sign-and-permutation orbits, in normalized coordinates.
pub fn collapsed_matrix_type12(
    rule: &CubatureRule,
    partition: &OrbitPartition,
    max_degree: usize,
) -> Result<DMatrix<f64>> {
    let rows = MultiIndexSet::even_sorted(rule.dim(), max_degree)?;
    Ok(collapsed_matrix(rule, partition, &rows, Basis::Monomial))
}
