//! Dense kernels shared by the 1D and multi-dimensional reductions.

use nalgebra::{DMatrix, DVector};

/// Fills `out[j] = T_j(u)` for `j = 0..out.len()`.
pub(crate) fn chebyshev_into(u: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = u;
    }
    for j in 2..out.len() {
        out[j] = 2.0 * u * out[j - 1] - out[j - 2];
    }
}

/// Kernel of a matrix from a full singular value decomposition.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    /// Orthonormal kernel vectors, smallest singular value first.
    pub vectors: Vec<DVector<f64>>,
    /// Largest singular value over smallest retained one.
    pub condition: f64,
}

/// Right singular vectors whose singular value is at most `rel_tol * sigma_max`.
///
/// Wide matrices are padded with zero rows so the decomposition exposes the
/// full column space.
pub(crate) fn kernel(m: &DMatrix<f64>, rel_tol: f64) -> Option<Kernel> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Some(Kernel {
            vectors: Vec::new(),
            condition: 1.0,
        });
    }
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = nalgebra::SVD::try_new(padded, false, true, f64::EPSILON, 0)?;
    let v_t = svd.v_t.as_ref()?;
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
    let cut = rel_tol * sigma_max;
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[a].total_cmp(&sigma[b]));
    let mut vectors = Vec::new();
    let mut smallest_kept = sigma_max;
    for &i in &order {
        if sigma[i] <= cut || sigma_max == 0.0 {
            vectors.push(v_t.row(i).transpose());
        } else {
            smallest_kept = smallest_kept.min(sigma[i]);
        }
    }
    let condition = if smallest_kept > 0.0 {
        sigma_max / smallest_kept
    } else {
        f64::INFINITY
    };
    Some(Kernel { vectors, condition })
}

/// Singular direction of the smallest singular value, with its value and the
/// ratio `sigma_max / sigma_min` of the remaining spectrum.
pub(crate) fn smallest_singular_vector(m: &DMatrix<f64>) -> Option<(DVector<f64>, f64)> {
    let (rows, cols) = m.shape();
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = nalgebra::SVD::try_new(padded, false, true, f64::EPSILON, 0)?;
    let v_t = svd.v_t.as_ref()?;
    let sigma = &svd.singular_values;
    let (imin, _) = sigma
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
    let second = sigma
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != imin)
        .map(|(_, &s)| s)
        .fold(f64::INFINITY, f64::min);
    let condition = if second.is_finite() && second > 0.0 {
        sigma_max / second
    } else {
        1.0
    };
    Some((v_t.row(imin).transpose(), condition))
}

/// Kernel basis of a matrix assembled one column at a time.
///
/// Columns are orthogonalized against the span of the previously accepted
/// columns (modified Gram-Schmidt, applied twice). A column whose remainder
/// falls below `dep_tol` times its norm is dependent, and yields the kernel
/// vector expressing it through the accepted columns.
pub(crate) struct ColumnwiseKernel {
    rows: usize,
    q: Vec<DVector<f64>>,
    r: Vec<Vec<f64>>,
    pivots: Vec<usize>,
    dep_tol: f64,
    columns_seen: usize,
}

impl ColumnwiseKernel {
    pub fn new(rows: usize, dep_tol: f64) -> Self {
        ColumnwiseKernel {
            rows,
            q: Vec::new(),
            r: Vec::new(),
            pivots: Vec::new(),
            dep_tol,
            columns_seen: 0,
        }
    }

    pub fn rank(&self) -> usize {
        self.q.len()
    }

    /// Adds a column. Returns a kernel vector as sparse `(column, value)` pairs
    /// when the column is dependent on those before it.
    pub fn push(&mut self, column: &DVector<f64>) -> Option<Vec<(usize, f64)>> {
        debug_assert_eq!(column.len(), self.rows);
        let index = self.columns_seen;
        self.columns_seen += 1;
        let norm0 = column.norm();
        let mut g = column.clone();
        let mut h = vec![0.0; self.q.len()];
        for _ in 0..2 {
            for (i, qi) in self.q.iter().enumerate() {
                let coef = qi.dot(&g);
                g.axpy(-coef, qi, 1.0);
                h[i] += coef;
            }
        }
        let rem = g.norm();
        if norm0 == 0.0 || rem <= self.dep_tol * norm0 || self.q.len() == self.rows {
            // Solve R y = h by back substitution.
            let k = self.q.len();
            let mut y = vec![0.0; k];
            for i in (0..k).rev() {
                let mut s = h[i];
                for j in i + 1..k {
                    s -= self.r[j][i] * y[j];
                }
                y[i] = s / self.r[i][i];
            }
            let mut out: Vec<(usize, f64)> = self
                .pivots
                .iter()
                .zip(y)
                .filter(|(_, v)| *v != 0.0)
                .map(|(&p, v)| (p, v))
                .collect();
            out.push((index, -1.0));
            return Some(out);
        }
        g /= rem;
        self.q.push(g);
        h.push(rem);
        self.r.push(h);
        self.pivots.push(index);
        None
    }
}
