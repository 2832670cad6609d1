//! Exponent sets for generalized Vandermonde matrices and their counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `binom(n, k)` in `u64`, failing on overflow.
pub fn binomial(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return Err(Error::Overflow);
        }
    }
    Ok(acc as u64)
}

/// Dimension of the polynomials of total degree at most `k` in `d` variables.
pub fn dim_poly(k: usize, d: usize) -> Result<u64> {
    binomial((k + d) as u64, d as u64)
}

/// Number of partitions of `l` into at most `d` parts.
pub fn restricted_partition_count(l: usize, d: usize) -> u64 {
    // p(l, d) = p(l, d - 1) + p(l - d, d)
    let mut table = vec![0u64; l + 1];
    table[0] = 1;
    for part in 1..=d {
        for total in part..=l {
            table[total] = table[total].saturating_add(table[total - part]);
        }
    }
    table[l]
}

/// `1 + sum_{l=1}^{b} p_d(l)`: weakly increasing nonnegative `d`-tuples with sum at most `b`.
pub fn cumulative_bound(b: usize, d: usize) -> u64 {
    (0..=b).map(|l| restricted_partition_count(l, d)).sum()
}

/// Multi-indices of total degree at most `max_degree`, in graded
/// lexicographic order: by total degree, then lexicographically descending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiIndexSet {
    dim: usize,
    max_degree: usize,
    indices: Vec<Vec<usize>>,
}

pub(crate) fn with_total(dim: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if dim == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        with_total(dim - 1, total - first, prefix, out);
        prefix.pop();
    }
}

impl MultiIndexSet {
    /// All multi-indices; there are `dim_poly(max_degree, dim)` of them.
    pub fn new(dim: usize, max_degree: usize) -> Result<Self> {
        Self::filtered(dim, max_degree, |_| true)
    }

    /// Indices with every exponent even.
    pub fn even(dim: usize, max_degree: usize) -> Result<Self> {
        Self::filtered(dim, max_degree, |a| a.iter().all(|e| e % 2 == 0))
    }

    /// Indices with every exponent even and exponents weakly increasing.
    pub fn even_sorted(dim: usize, max_degree: usize) -> Result<Self> {
        Self::filtered(dim, max_degree, |a| {
            a.iter().all(|e| e % 2 == 0) && a.windows(2).all(|p| p[0] <= p[1])
        })
    }

    fn filtered<F: Fn(&[usize]) -> bool>(dim: usize, max_degree: usize, keep: F) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let total = dim_poly(max_degree, dim)?;
        if total > 50_000_000 {
            return Err(Error::InvalidArgument(format!(
                "{total} multi-indices are too many to enumerate"
            )));
        }
        let mut indices = Vec::new();
        let mut prefix = Vec::with_capacity(dim);
        for k in 0..=max_degree {
            let mut level = Vec::new();
            with_total(dim, k, &mut prefix, &mut level);
            indices.extend(level.into_iter().filter(|a| keep(a)));
        }
        Ok(MultiIndexSet {
            dim,
            max_degree,
            indices,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.indices.iter().map(Vec::as_slice)
    }

    pub fn get(&self, i: usize) -> &[usize] {
        &self.indices[i]
    }
}

/// Uniformly random exponent vector of total degree `total` (stars and bars).
pub(crate) fn random_with_total<R: rand::Rng>(dim: usize, total: usize, rng: &mut R) -> Vec<usize> {
    let slots = total + dim - 1;
    let mut bars: Vec<usize> = rand::seq::index::sample(rng, slots, dim - 1).into_vec();
    bars.sort_unstable();
    // Exponents are the gaps between consecutive bars.
    let mut out = Vec::with_capacity(dim);
    let mut last: isize = -1;
    for &b in &bars {
        out.push((b as isize - last - 1) as usize);
        last = b as isize;
    }
    out.push((slots as isize - last - 1) as usize);
    out
}
