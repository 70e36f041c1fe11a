//! QAB denoiser: sparse projection onto the adaptive basis, attenuation by
//! energy rank, reconstruction.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::check_len;
use crate::image::Image;
use crate::linalg::{axpy, clamp_unit, dot};
use crate::qab::{assemble_hamiltonian, eigendecompose, prepare_potential, QabBasis, QabConfig};
use crate::{Error, Result};

/// Rank-dependent attenuation `τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSpec {
    /// Ranks `1..=s` pass unchanged.
    pub s: usize,
    /// Length of the linear roll-off after `s`.
    pub rho: f64,
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        Self { s: 280, rho: 30.0 }
    }
}

impl ThresholdSpec {
    pub fn new(s: usize, rho: f64) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidConfig("threshold.s must be at least 1"));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidConfig("threshold.rho must be positive"));
        }
        Ok(Self { s, rho })
    }

    /// Factor for the 1-based energy rank `i`.
    pub fn tau(&self, i: usize) -> f64 {
        if i <= self.s {
            return 1.0;
        }
        let t = 1.0 - (i - self.s) as f64 / self.rho;
        if t > 0.0 {
            t
        } else {
            0.0
        }
    }

    /// Number of ranks with a nonzero factor.
    pub fn active_ranks(&self) -> usize {
        let mut i = self.s;
        while self.tau(i + 1) > 0.0 {
            i += 1;
        }
        i
    }
}

/// Coefficients on a subset of basis indices (0-based, ascending).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseCoeffs {
    pub support: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseCoeffs {
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.support.binary_search(&index).ok().map(|k| self.values[k])
    }
}

/// Matching pursuit result with the residual norm after every selection.
#[derive(Debug, Clone, PartialEq)]
pub struct OmpTrace {
    pub coeffs: SparseCoeffs,
    /// Atoms in the order they were picked.
    pub order: Vec<usize>,
    pub residual_norms: Vec<f64>,
}

/// Row-major `T x T` Gram matrix of the basis.
pub fn gram_matrix(basis: &QabBasis) -> Vec<f64> {
    let t = basis.len();
    let mut g = vec![0.0; t * t];
    for i in 0..t {
        for j in i..t {
            let v = dot(basis.vector(i), basis.vector(j));
            g[i * t + j] = v;
            g[j * t + i] = v;
        }
    }
    g
}

/// Orthogonal matching pursuit over all `T` atoms of `basis`.
pub fn omp_project(v: &[f64], basis: &QabBasis) -> Result<SparseCoeffs> {
    Ok(omp_traced(v, basis, &gram_matrix(basis), basis.len())?.coeffs)
}

/// Matching pursuit with a precomputed Gram matrix, stopping after `steps`
/// selections. Correlations are updated from the Gram matrix and the
/// least-squares fit is kept as an incrementally grown Cholesky factor, so
/// no step touches the pixel domain.
pub fn omp_traced(v: &[f64], basis: &QabBasis, gram: &[f64], steps: usize) -> Result<OmpTrace> {
    let t = basis.len();
    check_len(basis.dim(), v.len())?;
    check_len(t * t, gram.len())?;
    if t == 0 {
        return Err(Error::EmptyBasis { cutoff: f64::NAN });
    }
    let steps = steps.min(t);
    let alpha0: Vec<f64> = basis.vectors().iter().map(|psi| dot(v, psi)).collect();
    let v_sq = dot(v, v);

    let mut corr = alpha0.clone();
    let mut chosen = vec![false; t];
    let mut order: Vec<usize> = Vec::with_capacity(steps);
    // lower-triangular factor, row-major, row k has k + 1 entries
    let mut chol: Vec<f64> = Vec::with_capacity(steps * (steps + 1) / 2);
    let mut a: Vec<f64> = Vec::new();
    let mut residual_norms = Vec::with_capacity(steps);
    let mut w = Vec::with_capacity(steps);

    for _ in 0..steps {
        let mut best = usize::MAX;
        let mut best_val = -1.0;
        for (j, c) in corr.iter().enumerate() {
            if !chosen[j] && c.abs() > best_val {
                best = j;
                best_val = c.abs();
            }
        }
        let k = best;
        let g_kk = gram[k * t + k];
        // w = L⁻¹ G[I, k]
        w.clear();
        let mut off = 0;
        for (r, &i) in order.iter().enumerate() {
            let row = &chol[off..off + r + 1];
            let mut acc = gram[i * t + k];
            for c in 0..r {
                acc -= row[c] * w[c];
            }
            w.push(acc / row[r]);
            off += r + 1;
        }
        let d2 = g_kk - dot(&w, &w);
        if !(d2 > 1e-12 * g_kk.max(f64::MIN_POSITIVE)) {
            return Err(Error::NumericalFailure("selected atoms are linearly dependent"));
        }
        chol.extend_from_slice(&w);
        chol.push(libm::sqrt(d2));
        chosen[k] = true;
        order.push(k);

        a = cholesky_solve(&chol, &order.iter().map(|&i| alpha0[i]).collect::<Vec<_>>());
        for (j, cj) in corr.iter_mut().enumerate() {
            let g_row = &gram[j * t..(j + 1) * t];
            let beta: f64 = order.iter().zip(&a).map(|(&i, ai)| g_row[i] * ai).sum();
            *cj = alpha0[j] - beta;
        }
        let fitted: f64 = order.iter().zip(&a).map(|(&i, ai)| alpha0[i] * ai).sum();
        residual_norms.push(libm::sqrt((v_sq - fitted).max(0.0)));
    }

    let mut pairs: Vec<(usize, f64)> = order.iter().copied().zip(a).collect();
    pairs.sort_by_key(|p| p.0);
    Ok(OmpTrace {
        coeffs: SparseCoeffs {
            support: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
        },
        order,
        residual_norms,
    })
}

// Solves L Lᵀ a = b for the packed lower factor.
fn cholesky_solve(chol: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut starts = Vec::with_capacity(n);
    let mut off = 0;
    for r in 0..n {
        starts.push(off);
        off += r + 1;
    }
    let mut y = vec![0.0; n];
    for r in 0..n {
        let row = &chol[starts[r]..starts[r] + r + 1];
        let mut acc = b[r];
        for c in 0..r {
            acc -= row[c] * y[c];
        }
        y[r] = acc / row[r];
    }
    for r in (0..n).rev() {
        let mut acc = y[r];
        for c in r + 1..n {
            acc -= chol[starts[c] + r] * y[c];
        }
        y[r] = acc / chol[starts[r] + r];
    }
    y
}

/// Plain inner products with every atom.
pub fn project_full(v: &[f64], basis: &QabBasis) -> Result<SparseCoeffs> {
    check_len(basis.dim(), v.len())?;
    Ok(SparseCoeffs {
        support: (0..basis.len()).collect(),
        values: basis.vectors().iter().map(|psi| dot(v, psi)).collect(),
    })
}

/// Scales the coefficient at basis index `i` by `τ(i + 1)` and drops those
/// whose factor is zero.
pub fn threshold(coeffs: &SparseCoeffs, spec: &ThresholdSpec) -> SparseCoeffs {
    let mut out = SparseCoeffs::default();
    for (&i, &c) in coeffs.support.iter().zip(&coeffs.values) {
        let tau = spec.tau(i + 1);
        if tau > 0.0 {
            out.support.push(i);
            out.values.push(tau * c);
        }
    }
    out
}

pub fn reconstruct(coeffs: &SparseCoeffs, basis: &QabBasis) -> Vec<f64> {
    let mut out = vec![0.0; basis.dim()];
    for (&i, &c) in coeffs.support.iter().zip(&coeffs.values) {
        axpy(c, basis.vector(i), &mut out);
    }
    out
}

/// Project, threshold, reconstruct; no clamping.
pub fn denoise_unclamped(v: &[f64], basis: &QabBasis, spec: &ThresholdSpec, use_omp: bool) -> Result<Vec<f64>> {
    let coeffs = if use_omp {
        omp_project(v, basis)?
    } else {
        project_full(v, basis)?
    };
    Ok(reconstruct(&threshold(&coeffs, spec), basis))
}

/// [`denoise_unclamped`] followed by clamping to `[0, 1]`.
pub fn denoise(v: &[f64], basis: &QabBasis, spec: &ThresholdSpec, use_omp: bool) -> Result<Vec<f64>> {
    let mut out = denoise_unclamped(v, basis, spec, use_omp)?;
    clamp_unit(&mut out);
    Ok(out)
}

/// Energy cutoff and vector cap of the basis a denoiser needs on an image of
/// `pixels` pixels. With pursuit the basis is every state below the energy
/// cutoff; the plain projection path keeps instead the lowest states that the
/// threshold leaves nonzero.
pub fn basis_request(cfg: &QabConfig, spec: &ThresholdSpec, use_omp: bool, pixels: usize) -> (f64, usize) {
    if use_omp {
        (cfg.energy_cutoff, cfg.max_vectors)
    } else {
        (f64::INFINITY, spec.active_ranks().min(cfg.max_vectors).min(pixels))
    }
}

/// Reusable denoiser holding the basis and, for the pursuit path, its Gram
/// matrix.
#[derive(Debug, Clone)]
pub struct QabDenoiser {
    basis: QabBasis,
    spec: ThresholdSpec,
    gram: Option<Vec<f64>>,
}

impl QabDenoiser {
    pub fn new(basis: QabBasis, spec: ThresholdSpec, use_omp: bool) -> Self {
        let gram = use_omp.then(|| gram_matrix(&basis));
        Self { basis, spec, gram }
    }

    /// Builds the basis from a noisy observation; see [`basis_request`].
    pub fn from_observation(observation: &Image, cfg: &QabConfig, spec: ThresholdSpec, use_omp: bool) -> Result<Self> {
        cfg.validate()?;
        let potential = prepare_potential(observation, cfg.sigma_smooth)?;
        let h = assemble_hamiltonian(&potential, cfg.planck)?;
        let (cutoff, cap) = basis_request(cfg, &spec, use_omp, observation.len());
        Ok(Self::new(eigendecompose(&h, cutoff, cap)?, spec, use_omp))
    }

    pub fn basis(&self) -> &QabBasis {
        &self.basis
    }

    pub fn spec(&self) -> &ThresholdSpec {
        &self.spec
    }

    pub fn uses_omp(&self) -> bool {
        self.gram.is_some()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let coeffs = match &self.gram {
            Some(g) => omp_traced(v, &self.basis, g, self.basis.len())?.coeffs,
            None => project_full(v, &self.basis)?,
        };
        let mut out = reconstruct(&threshold(&coeffs, &self.spec), &self.basis);
        clamp_unit(&mut out);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_branches() {
        let spec = ThresholdSpec::new(10, 5.0).unwrap();
        assert_eq!(spec.tau(3), 1.0);
        assert_eq!(spec.tau(10), 1.0);
        assert!((spec.tau(12) - 0.6).abs() < 1e-15);
        assert_eq!(spec.tau(15), 0.0);
        assert_eq!(spec.tau(40), 0.0);
        assert_eq!(spec.active_ranks(), 14);
    }

    #[test]
    fn threshold_drops_zeroed() {
        let spec = ThresholdSpec::new(1, 2.0).unwrap();
        let c = SparseCoeffs {
            support: vec![0, 1, 2],
            values: vec![4.0, 4.0, 4.0],
        };
        let t = threshold(&c, &spec);
        assert_eq!(t.support, vec![0, 1]);
        assert_eq!(t.values, vec![4.0, 2.0]);
    }

    #[test]
    fn reconstruct_empty_is_zero() {
        let basis = QabBasis::from_parts(2, 1, vec![0.0], vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(reconstruct(&SparseCoeffs::default(), &basis), vec![0.0, 0.0]);
    }

    #[test]
    fn cholesky_solve_small() {
        // L = [[2, 0], [1, 3]] so L Lᵀ = [[4, 2], [2, 10]]
        let chol = [2.0, 1.0, 3.0];
        let a = cholesky_solve(&chol, &[8.0, 22.0]);
        assert!((a[0] - 1.0).abs() < 1e-14 && (a[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(ThresholdSpec::new(0, 1.0).is_err());
        assert!(ThresholdSpec::new(1, 0.0).is_err());
    }
}
