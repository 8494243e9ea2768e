//! Small self-contained linear-algebra kernels: a CSR sparse matrix for
//! generator application and cyclic Jacobi eigensolvers for Hermitian /
//! real-symmetric matrices.
//!
//! The matrices this crate diagonalizes are small (collective-spin sectors,
//! partially transposed few-emitter states), so a dependency-free Jacobi
//! routine is preferred over an external LAPACK binding: it is deterministic
//! across platforms and BLAS builds, which the reproducibility contract of
//! the output files relies on.

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Compressed sparse row matrix over complex numbers.
///
/// Only the two operations the solvers need are provided: construction from
/// triplets and `out = A * X` against a dense, row-major matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<C64>,
}

impl Csr {
    /// Build an `n x n` CSR matrix from (row, col, value) triplets.
    /// Duplicate entries are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut entries: Vec<(usize, usize, C64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < n && c < n);
            if let Some(last) = entries.last_mut() {
                if last.0 == r && last.1 == c {
                    last.2 += v;
                    continue;
                }
            }
            entries.push((r, c, v));
        }
        let mut row_ptr = vec![0usize; n + 1];
        for &(r, _, _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        let col = entries.iter().map(|e| e.1).collect();
        let val = entries.iter().map(|e| e.2).collect();
        Csr { n, row_ptr, col, val }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    /// `out = self * x` where `x` and `out` are dense `n x n`, row-major.
    pub fn mul_dense(&self, x: &ArrayView2<C64>, out: &mut Array2<C64>) {
        let n = self.n;
        debug_assert_eq!(x.dim(), (n, n));
        debug_assert_eq!(out.dim(), (n, n));
        let xs = x.as_slice().expect("x must be contiguous row-major");
        let os = out.as_slice_mut().expect("out must be contiguous row-major");
        os.fill(C64::new(0.0, 0.0));
        for r in 0..n {
            let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let orow = &mut os[r * n..(r + 1) * n];
            for k in lo..hi {
                let a = self.val[k];
                let xrow = &xs[self.col[k] * n..(self.col[k] + 1) * n];
                for (o, &xv) in orow.iter_mut().zip(xrow) {
                    *o += a * xv;
                }
            }
        }
    }
}

/// Max absolute deviation from Hermiticity, `max_ij |a_ij - conj(a_ji)|`.
pub fn hermiticity_error(a: &ArrayView2<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Frobenius norm.
pub fn frobenius(a: &ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvector columns. Only the Hermitian part of `a` is used.
pub fn eigh(a: &ArrayView2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "eigh expects a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    // Work on the Hermitian part so tiny asymmetries cannot bias the sweep.
    let mut m = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)].conj());
        }
    }
    let mut v = Array2::<C64>::eye(n);
    let scale: f64 = frobenius(&m.view()).max(1.0);
    let tol = 1e-14 * scale;

    let mut sweeps = 0;
    loop {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        let off = off.sqrt();
        if off <= tol {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::EigenNoConvergence { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let beta = apq.norm();
                if beta <= tol / (n as f64) {
                    continue;
                }
                let phase = apq / beta; // e^{i phi}
                let alpha = m[(p, p)].re;
                let delta = m[(q, q)].re;
                // zero the (p, q) element of U^dag M U with
                // U = [[c, s e^{i phi}], [-s e^{-i phi}, c]]
                let h = (alpha - delta) / (2.0 * beta);
                let t = if h >= 0.0 {
                    -1.0 / (h + (h * h + 1.0).sqrt())
                } else {
                    -1.0 / (h - (h * h + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let sp = phase * s; // s e^{i phi}
                let spc = sp.conj();

                // rows/cols r not in {p, q}
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let mrp = m[(r, p)];
                    let mrq = m[(r, q)];
                    let new_rp = c * mrp - spc * mrq;
                    let new_rq = sp * mrp + c * mrq;
                    m[(r, p)] = new_rp;
                    m[(r, q)] = new_rq;
                    m[(p, r)] = new_rp.conj();
                    m[(q, r)] = new_rq.conj();
                }
                let new_pp = alpha * c * c - 2.0 * beta * s * c + delta * s * s;
                let new_qq = alpha * s * s + 2.0 * beta * s * c + delta * c * c;
                m[(p, p)] = C64::new(new_pp, 0.0);
                m[(q, q)] = C64::new(new_qq, 0.0);
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);

                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - spc * vrq;
                    v[(r, q)] = sp * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap());
    let mut vals = Array1::<f64>::zeros(n);
    let mut vecs = Array2::<C64>::zeros((n, n));
    for (k, &i) in order.iter().enumerate() {
        vals[k] = m[(i, i)].re;
        for r in 0..n {
            vecs[(r, k)] = v[(r, i)];
        }
    }
    Ok((vals, vecs))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(a: &ArrayView2<C64>) -> Result<Array1<f64>> {
    eigh(a).map(|(vals, _)| vals)
}

/// Real-symmetric Jacobi eigendecomposition (ascending eigenvalues).
///
/// Used for collective-spin sector matrices, which are real in the
/// computational basis; avoids complex arithmetic in the hot path.
pub fn eigh_real(a: &ArrayView2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "eigh_real expects a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    let mut m = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    let mut v = Array2::<f64>::eye(n);
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let tol = 1e-14 * scale;

    let mut sweeps = 0;
    loop {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        let off = off.sqrt();
        if off <= tol {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::EigenNoConvergence { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let h = (m[(p, p)] - m[(q, q)]) / (2.0 * apq);
                let t = if h >= 0.0 {
                    -1.0 / (h + (h * h + 1.0).sqrt())
                } else {
                    -1.0 / (h - (h * h + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let mrp = m[(r, p)];
                    let mrq = m[(r, q)];
                    m[(r, p)] = c * mrp - s * mrq;
                    m[(r, q)] = s * mrp + c * mrq;
                    m[(p, r)] = m[(r, p)];
                    m[(q, r)] = m[(r, q)];
                }
                let alpha = m[(p, p)];
                let delta = m[(q, q)];
                m[(p, p)] = alpha * c * c - 2.0 * apq * s * c + delta * s * s;
                m[(q, q)] = alpha * s * s + 2.0 * apq * s * c + delta * c * c;
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let mut vals = Array1::<f64>::zeros(n);
    let mut vecs = Array2::<f64>::zeros((n, n));
    for (k, &i) in order.iter().enumerate() {
        vals[k] = m[(i, i)];
        for r in 0..n {
            vecs[(r, k)] = v[(r, i)];
        }
    }
    Ok((vals, vecs))
}
