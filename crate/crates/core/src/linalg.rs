//! Small dense linear-algebra kernels shared across the crate.
//!
//! The symmetric eigensolver is a Householder tridiagonalization followed by
//! an implicit-shift QL sweep, which is deterministic and accurate for the
//! matrix sizes this crate works with (mean-field Fock matrices, environment
//! blocks and sector Hamiltonians up to a few thousand rows).

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: max |a - a^T| = {asymmetry}")]
    NotSymmetric { asymmetry: f64 },
    #[error("QL iteration failed to converge for eigenvalue index {index}")]
    NoConvergence { index: usize },
    #[error("singular linear system")]
    Singular,
}

/// Eigendecomposition of a real symmetric matrix.
///
/// Eigenvalues ascend; `vectors` holds the matching eigenvectors as columns.
/// Column signs are fixed so the largest-magnitude component is positive,
/// which keeps downstream orbital choices reproducible.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    pub values: Array1<T>,
    pub vectors: Array2<T>,
}

pub fn sym_eigen<T: Scalar>(a: &Array2<T>) -> Result<SymEigen<T>, LinalgError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinalgError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if n == 0 {
        return Ok(SymEigen {
            values: Array1::zeros(0),
            vectors: Array2::zeros((0, 0)),
        });
    }
    let mut z = a.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut z, &mut d, &mut e);
    tql2(&mut z, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("finite eigenvalues"));

    let mut values = Array1::zeros(n);
    let mut vectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        values[col] = d[src];
        let mut pivot = 0;
        let mut best = T::zero();
        for row in 0..n {
            let v = z[[row, src]].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        let flip = z[[pivot, src]] < T::zero();
        for row in 0..n {
            let v = z[[row, src]];
            vectors[[row, col]] = if flip { -v } else { v };
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Householder reduction to tridiagonal form with accumulated transforms.
fn tred2<T: Scalar>(z: &mut Array2<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        if l > 0 {
            let mut scale = T::zero();
            for k in 0..=l {
                scale += z[[i, k]].abs();
            }
            if scale == T::zero() {
                e[i] = z[[i, l]];
            } else {
                for k in 0..=l {
                    let v = z[[i, k]] / scale;
                    z[[i, k]] = v;
                    h += v * v;
                }
                let f = z[[i, l]];
                let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[[i, l]] = f - g;
                let mut fsum = T::zero();
                for j in 0..=l {
                    z[[j, i]] = z[[i, j]] / h;
                    let mut g = T::zero();
                    for k in 0..=j {
                        g += z[[j, k]] * z[[i, k]];
                    }
                    for k in (j + 1)..=l {
                        g += z[[k, j]] * z[[i, k]];
                    }
                    e[j] = g / h;
                    fsum += e[j] * z[[i, j]];
                }
                let hh = fsum / (h + h);
                for j in 0..=l {
                    let f = z[[i, j]];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let upd = f * e[k] + g * z[[i, k]];
                        z[[j, k]] -= upd;
                    }
                }
            }
        } else {
            e[i] = z[[i, l]];
        }
        d[i] = h;
    }
    d[0] = T::zero();
    e[0] = T::zero();
    for i in 0..n {
        if d[i] != T::zero() {
            for j in 0..i {
                let mut g = T::zero();
                for k in 0..i {
                    g += z[[i, k]] * z[[k, j]];
                }
                for k in 0..i {
                    let upd = g * z[[k, i]];
                    z[[k, j]] -= upd;
                }
            }
        }
        d[i] = z[[i, i]];
        z[[i, i]] = T::one();
        for j in 0..i {
            z[[j, i]] = T::zero();
            z[[i, j]] = T::zero();
        }
    }
}

/// Implicit-shift QL iteration on the tridiagonal form produced by `tred2`.
fn tql2<T: Scalar>(z: &mut Array2<T>, d: &mut [T], e: &mut [T]) -> Result<(), LinalgError> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();

    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(LinalgError::NoConvergence { index: l });
            }
            let two = T::cast(2.0);
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let denom = g + if g >= T::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / denom;
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[[k, i + 1]];
                    z[[k, i + 1]] = s * z[[k, i]] + c * f;
                    z[[k, i]] = c * z[[k, i]] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// Intended for small systems (DIIS extrapolation and the like).
pub fn solve_dense<T: Scalar>(a: &Array2<T>, b: &Array1<T>) -> Result<Array1<T>, LinalgError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinalgError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let mut m = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let mut pivot = col;
        let mut best = m[[col, col]].abs();
        for row in (col + 1)..n {
            let v = m[[row, col]].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best <= T::cast(1e-300) {
            return Err(LinalgError::Singular);
        }
        if pivot != col {
            for k in 0..n {
                let tmp = m[[col, k]];
                m[[col, k]] = m[[pivot, k]];
                m[[pivot, k]] = tmp;
            }
            x.swap(col, pivot);
        }
        for row in (col + 1)..n {
            let factor = m[[row, col]] / m[[col, col]];
            if factor == T::zero() {
                continue;
            }
            for k in col..n {
                let upd = factor * m[[col, k]];
                m[[row, k]] -= upd;
            }
            let upd = factor * x[col];
            x[row] -= upd;
        }
    }
    for row in (0..n).rev() {
        let mut acc = x[row];
        for k in (row + 1)..n {
            acc -= m[[row, k]] * x[k];
        }
        x[row] = acc / m[[row, row]];
    }
    Ok(x)
}

/// Largest entrywise absolute difference between two matrices.
pub fn max_abs_diff<T: Scalar>(a: &Array2<T>, b: &Array2<T>) -> T {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (&x, &y)| acc.max((x - y).abs()))
}

/// Asserts symmetry within `tol` and returns the larger observed asymmetry.
pub fn check_symmetric<T: Scalar>(a: &Array2<T>, tol: T) -> Result<(), LinalgError> {
    let n = a.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    if worst > tol {
        return Err(LinalgError::NotSymmetric {
            asymmetry: worst.widen(),
        });
    }
    Ok(())
}
