//! Sparse linear algebra: CSR storage, Jacobi-preconditioned conjugate
//! gradients, and a skyline (variable-band) LDL^T factorization used as the
//! direct solver for the reduced SPD systems.

use crate::error::{Result, WgError};
use crate::real::{real, to_f64, Real};

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix<T: Real> {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds a CSR matrix from (row, col, value) triplets, summing
    /// duplicates. Triplets are sorted, so assembly order does not affect
    /// the result beyond floating-point addition order, which is fixed by
    /// the deterministic element loop.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, T)>,
    ) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut count = vec![0usize; nrows];
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                count[r] += 1;
                last = Some((r, c));
            }
        }
        let mut indptr = vec![0usize; nrows + 1];
        for r in 0..nrows {
            indptr[r + 1] = indptr[r] + count[r];
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let range = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[range.clone()], &self.values[range])
    }

    /// y = A x.
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            let mut acc = T::zero();
            for (c, v) in cols.iter().zip(vals) {
                acc += *v * x[*c];
            }
            y[r] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.nrows];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            if let Some(pos) = cols.iter().position(|&c| c == r) {
                d[r] = vals[pos];
            }
        }
        d
    }

    /// Maximum absolute entry.
    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |a, &v| if v.abs() > a { v.abs() } else { a })
    }

    /// Maximum absolute asymmetry `max |A - A^T|`.
    pub fn max_asymmetry(&self) -> T {
        let t = self.transpose();
        let mut worst = T::zero();
        for r in 0..self.nrows {
            let (ca, va) = self.row(r);
            let (cb, vb) = t.row(r);
            // Merge-compare the two sorted rows.
            let (mut i, mut j) = (0usize, 0usize);
            while i < ca.len() || j < cb.len() {
                let diff = match (ca.get(i), cb.get(j)) {
                    (Some(&c1), Some(&c2)) if c1 == c2 => {
                        let d = (va[i] - vb[j]).abs();
                        i += 1;
                        j += 1;
                        d
                    }
                    (Some(&c1), Some(&c2)) if c1 < c2 => {
                        i += 1;
                        va[i - 1].abs()
                    }
                    (Some(_), Some(_)) => {
                        j += 1;
                        vb[j - 1].abs()
                    }
                    (Some(_), None) => {
                        i += 1;
                        va[i - 1].abs()
                    }
                    (None, Some(_)) => {
                        j += 1;
                        vb[j - 1].abs()
                    }
                    (None, None) => unreachable!(),
                };
                if diff > worst {
                    worst = diff;
                }
            }
        }
        worst
    }

    pub fn transpose(&self) -> CsrMatrix<T> {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                triplets.push((*c, r, *v));
            }
        }
        CsrMatrix::from_triplets(self.ncols, self.nrows, triplets)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<T> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                m[(r, *c)] = *v;
            }
        }
        m
    }
}

/// Conjugate gradient diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final relative residual `|b - A x| / |b|`.
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for SPD systems.
pub fn conjugate_gradient<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    tol: T,
    max_iter: usize,
) -> Result<(Vec<T>, SolveStats)> {
    let n = a.nrows;
    let norm = |v: &[T]| v.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    let b_norm = norm(b);
    if b_norm == T::zero() {
        return Ok((
            vec![T::zero(); n],
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let diag = a.diagonal();
    let inv_diag: Vec<T> = diag
        .iter()
        .map(|&d| if d.abs() > T::zero() { T::one() / d } else { T::one() })
        .collect();

    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = r.iter().zip(&z).fold(T::zero(), |s, (&a, &b)| s + a * b);
    let mut ap = vec![T::zero(); n];

    for it in 0..max_iter {
        a.matvec(&p, &mut ap);
        let pap = p.iter().zip(&ap).fold(T::zero(), |s, (&a, &b)| s + a * b);
        if pap <= T::zero() {
            return Err(WgError::IndefiniteSystem(format!(
                "p^T A p = {:.3e} at iteration {it}",
                to_f64(pap)
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = norm(&r) / b_norm;
        if res <= tol {
            return Ok((
                x,
                SolveStats {
                    iterations: it + 1,
                    relative_residual: to_f64(res),
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = r.iter().zip(&z).fold(T::zero(), |s, (&a, &b)| s + a * b);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(WgError::NoConvergence {
        iterations: max_iter,
        residual: to_f64(norm(&r) / b_norm),
    })
}

/// Skyline (variable-band) LDL^T factorization of a symmetric positive
/// definite matrix. Rows store the envelope from the first nonzero column
/// to the diagonal; fill-in stays inside the envelope.
pub struct SkylineLdl<T: Real> {
    first: Vec<usize>,
    rows: Vec<Vec<T>>,
    diag: Vec<T>,
}

impl<T: Real> SkylineLdl<T> {
    /// Factors the symmetric matrix given in CSR form (both triangles or
    /// lower triangle; only the lower triangle is read).
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.nrows;
        let mut first = vec![0usize; n];
        for r in 0..n {
            let (cols, _) = a.row(r);
            first[r] = cols.iter().copied().filter(|&c| c <= r).min().unwrap_or(r);
        }
        // Load envelope rows with the matrix entries.
        let mut rows: Vec<Vec<T>> = (0..n)
            .map(|r| vec![T::zero(); r - first[r] + 1])
            .collect();
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (c, v) in cols.iter().zip(vals) {
                if *c <= r {
                    rows[r][*c - first[r]] = *v;
                }
            }
        }
        let mut diag = vec![T::zero(); n];
        let tiny = real::<T>(1e-300);
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let start = fi.max(fj);
                let mut sum = rows[i][j - fi];
                for k in start..j {
                    sum -= rows[i][k - fi] * diag[k] * rows[j][k - fj];
                }
                if j < i {
                    rows[i][j - fi] = sum / diag[j];
                } else {
                    if sum <= tiny {
                        return Err(WgError::SingularSystem(format!(
                            "non-positive pivot {:.3e} at row {i}",
                            to_f64(sum)
                        )));
                    }
                    diag[i] = sum;
                    rows[i][j - fi] = T::one();
                }
            }
        }
        Ok(SkylineLdl { first, rows, diag })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.diag.len();
        let mut x = b.to_vec();
        // Forward: L y = b.
        for i in 0..n {
            let fi = self.first[i];
            let mut sum = x[i];
            for k in fi..i {
                sum -= self.rows[i][k - fi] * x[k];
            }
            x[i] = sum;
        }
        // Diagonal.
        for i in 0..n {
            x[i] /= self.diag[i];
        }
        // Backward: L^T x = y.
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = x[i];
            for k in fi..i {
                x[k] -= self.rows[i][k - fi] * xi;
            }
        }
        x
    }
}
