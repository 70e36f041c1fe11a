//! Lanczos with full reorthogonalization for the low end of a sparse
//! symmetric spectrum.
//!
//! A single Krylov space only ever sees one direction of a degenerate
//! eigenspace, so the solver runs in passes: each pass starts from a fresh
//! deterministic vector orthogonal to everything already locked, and the
//! search ends when a pass turns up nothing new below the threshold.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::hamiltonian::SymmetricOperator;
use super::tridiag::tridiagonal_eigen;
use crate::linalg::{axpy, dot, norm2, scale};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LanczosOptions {
    /// Ritz pair `(θ, y)` is accepted once `‖Ay − θy‖ ≤ tol · max(1, |θ|)`.
    pub tol: f64,
    /// Ritz values are re-examined every this many Krylov steps.
    pub check_every: usize,
    /// Upper bound on restarts from fresh start vectors.
    pub max_passes: usize,
    /// Krylov dimension cap per pass; `None` means the full free dimension.
    pub max_krylov: Option<usize>,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            check_every: 20,
            max_passes: 16,
            max_krylov: None,
        }
    }
}

/// Ascending eigenvalues with their unit eigenvectors.
#[derive(Debug, Clone, Default)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// The eigenpairs of `a` with eigenvalue strictly below `cutoff`, at most
/// `cap` of them (the lowest ones). May return an empty set.
pub fn lowest_eigenpairs<A: SymmetricOperator>(
    a: &A,
    cutoff: f64,
    cap: usize,
    opts: &LanczosOptions,
) -> Result<Eigenpairs> {
    let n = a.dim();
    let mut locked = Eigenpairs::default();
    if n == 0 || cap == 0 {
        return Ok(locked);
    }
    for pass in 0..opts.max_passes {
        let threshold = if locked.values.len() >= cap {
            locked.values[cap - 1]
        } else {
            cutoff
        };
        let Some(start) = start_vector(n, pass as u64, &locked.vectors) else {
            // the locked vectors span the whole space
            return Ok(locked);
        };
        let found = krylov_pass(a, start, &locked.vectors, threshold, cap, opts)?;
        if found.values.is_empty() {
            return Ok(locked);
        }
        locked.values.extend(found.values);
        locked.vectors.extend(found.vectors);
        let mut order: Vec<usize> = (0..locked.values.len()).collect();
        order.sort_by(|&i, &j| locked.values[i].total_cmp(&locked.values[j]));
        order.truncate(cap);
        let mut vectors: Vec<Option<Vec<f64>>> = locked.vectors.into_iter().map(Some).collect();
        locked = Eigenpairs {
            values: order.iter().map(|&i| locked.values[i]).collect(),
            vectors: order.iter().map(|&i| vectors[i].take().expect("unique index")).collect(),
        };
    }
    Err(Error::EigensolverFailure("Lanczos restarts kept finding new eigenvalues"))
}

fn start_vector(n: usize, pass: u64, locked: &[Vec<f64>]) -> Option<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x51ab_0000 + pass);
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            1.0 + 0.25 * (2.0 * u - 1.0)
        })
        .collect();
    let before = norm2(&v);
    for _ in 0..2 {
        for q in locked {
            let c = dot(&v, q);
            axpy(-c, q, &mut v);
        }
    }
    let nv = norm2(&v);
    if nv <= 1e-10 * before {
        return None;
    }
    scale(1.0 / nv, &mut v);
    Some(v)
}

fn krylov_pass<A: SymmetricOperator>(
    a: &A,
    start: Vec<f64>,
    locked: &[Vec<f64>],
    threshold: f64,
    cap: usize,
    opts: &LanczosOptions,
) -> Result<Eigenpairs> {
    let n = a.dim();
    let free = n - locked.len();
    let m_max = opts.max_krylov.map_or(free, |m| m.min(free)).max(1);
    let check_every = opts.check_every.max(1);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_max.min(1024));
    basis.push(start);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut coeffs: Vec<f64> = Vec::new();
    let mut anorm: f64 = 0.0;

    loop {
        let j = basis.len() - 1;
        a.apply(&basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        let a_j = dot(&w, &basis[j]);
        axpy(-a_j, &basis[j], &mut w);
        // classical Gram-Schmidt, twice
        for _ in 0..2 {
            for set in [locked, basis.as_slice()] {
                coeffs.clear();
                coeffs.extend(set.iter().map(|q| dot(&w, q)));
                for (q, &c) in set.iter().zip(&coeffs) {
                    axpy(-c, q, &mut w);
                }
            }
        }
        let b_j = norm2(&w);
        alpha.push(a_j);
        anorm = anorm.max(a_j.abs() + b_j + beta.last().copied().unwrap_or(0.0));
        let m = alpha.len();
        let breakdown = b_j <= 1e-12 * anorm.max(1.0);
        let exhausted = breakdown || m >= m_max;

        if m.is_multiple_of(check_every) || exhausted {
            let ritz = tridiagonal_eigen(&alpha, &beta, &[m - 1])?;
            let residual = |i: usize| if breakdown { 0.0 } else { b_j * ritz.rows[0][i].abs() };
            let converged = |i: usize| residual(i) <= opts.tol * ritz.values[i].abs().max(1.0);
            let run = (0..m).take_while(|&i| converged(i)).count();
            let settled = run > 0 && (ritz.values[run - 1] >= threshold || run >= cap);
            if settled || exhausted {
                if !settled && !breakdown && m < free {
                    return Err(Error::EigensolverFailure("Krylov dimension cap reached before convergence"));
                }
                let wanted: Vec<usize> = (0..run)
                    .filter(|&i| ritz.values[i] < threshold)
                    .take(cap)
                    .collect();
                return ritz_pairs(&alpha, &beta, &basis, locked, &wanted);
            }
        }

        beta.push(b_j);
        scale(1.0 / b_j, &mut w);
        basis.push(w.clone());
    }
}

fn ritz_pairs(
    alpha: &[f64],
    beta: &[f64],
    basis: &[Vec<f64>],
    locked: &[Vec<f64>],
    wanted: &[usize],
) -> Result<Eigenpairs> {
    let m = alpha.len();
    if wanted.is_empty() {
        return Ok(Eigenpairs::default());
    }
    let all_rows: Vec<usize> = (0..m).collect();
    let full = tridiagonal_eigen(alpha, &beta[..m - 1], &all_rows)?;
    let n = basis[0].len();
    let mut out = Eigenpairs::default();
    for &i in wanted {
        let mut y = vec![0.0; n];
        for (r, q) in basis.iter().take(m).enumerate() {
            axpy(full.rows[r][i], q, &mut y);
        }
        for q in locked {
            let c = dot(&y, q);
            axpy(-c, q, &mut y);
        }
        let ny = norm2(&y);
        if !(ny > 0.5) {
            return Err(Error::EigensolverFailure("Ritz vector lost orthogonality"));
        }
        scale(1.0 / ny, &mut y);
        out.values.push(full.values[i]);
        out.vectors.push(y);
    }
    Ok(out)
}
