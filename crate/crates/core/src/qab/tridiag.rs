//! Implicit QL iteration for symmetric tridiagonal matrices (EISPACK `tql2`).
//!
//! The eigenvector accumulation only ever mixes entries within a row, so the
//! caller picks which rows of the eigenvector matrix to track. Lanczos uses
//! this to get the bottom row (its residual estimates) in `O(m²)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Eigen-decomposition of a symmetric tridiagonal matrix, ascending order.
#[derive(Debug, Clone)]
pub struct TridiagEigen {
    pub values: Vec<f64>,
    /// `rows[r][j]` is component `r` (of the tracked rows) of eigenvector `j`.
    pub rows: Vec<Vec<f64>>,
}

/// Eigenvalues of the tridiagonal matrix with the given diagonal and
/// off-diagonal, tracking the rows of the eigenvector matrix listed in
/// `track` (indices into `0..n`).
pub fn tridiagonal_eigen(diag: &[f64], offdiag: &[f64], track: &[usize]) -> Result<TridiagEigen> {
    let n = diag.len();
    debug_assert!(n == 0 || offdiag.len() + 1 == n);
    let mut d = diag.to_vec();
    // e[i] couples i and i+1; e[n-1] = 0 terminates the split search
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&offdiag[..n.saturating_sub(1)]);
    let mut z: Vec<Vec<f64>> = track
        .iter()
        .map(|&r| {
            let mut row = vec![0.0; n];
            row[r] = 1.0;
            row
        })
        .collect();
    ql_implicit(&mut d, &mut e, &mut z)?;
    Ok(sort_pairs(d, z))
}

/// Core of `tql2`. `d` holds the diagonal, `e[i]` the coupling between `i` and
/// `i + 1` (with `e[n - 1] == 0`). On return `d` holds the eigenvalues in no
/// particular order and every row of `z` has been rotated alongside.
pub(crate) fn ql_implicit(d: &mut [f64], e: &mut [f64], z: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::EigensolverFailure("tridiagonal QL did not converge"));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in z.iter_mut() {
                        let h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn sort_pairs(values: Vec<f64>, rows: Vec<Vec<f64>>) -> TridiagEigen {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    TridiagEigen {
        values: order.iter().map(|&j| values[j]).collect(),
        rows: rows
            .into_iter()
            .map(|row| order.iter().map(|&j| row[j]).collect())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn second_difference_matrix() {
        // tridiag(-1, 2, -1) of size n: eigenvalues 2 - 2 cos(k pi / (n + 1))
        let n = 12;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let all: Vec<usize> = (0..n).collect();
        let eig = tridiagonal_eigen(&diag, &off, &all).unwrap();
        for (k, v) in eig.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * libm::cos((k + 1) as f64 * core::f64::consts::PI / (n + 1) as f64);
            assert_relative_eq!(*v, exact, epsilon = 1e-13);
        }
        // columns are unit eigenvectors
        for j in 0..n {
            let col: Vec<f64> = (0..n).map(|r| eig.rows[r][j]).collect();
            assert_relative_eq!(crate::linalg::norm2(&col), 1.0, epsilon = 1e-13);
            for r in 0..n {
                let mut av = 2.0 * col[r];
                if r > 0 {
                    av -= col[r - 1];
                }
                if r + 1 < n {
                    av -= col[r + 1];
                }
                assert!((av - eig.values[j] * col[r]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tracked_row_matches_full() {
        let diag = [4.0, -1.0, 3.5, 0.2, 7.0];
        let off = [0.5, 1.5, -0.7, 2.0];
        let full = tridiagonal_eigen(&diag, &off, &[0, 1, 2, 3, 4]).unwrap();
        let last = tridiagonal_eigen(&diag, &off, &[4]).unwrap();
        assert_eq!(full.values, last.values);
        assert_eq!(full.rows[4], last.rows[0]);
    }

    #[test]
    fn one_by_one() {
        let eig = tridiagonal_eigen(&[3.0], &[], &[0]).unwrap();
        assert_eq!(eig.values, vec![3.0]);
        assert_eq!(eig.rows, vec![vec![1.0]]);
    }
}
