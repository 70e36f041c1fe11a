//! Lanczos on a Chebyshev polynomial of the operator.
//!
//! With the spectrum inside `[lower, upper]`, the even polynomial
//! `p(E) = T_d((2E − a − upper) / (upper − a))` stays in `[−1, 1]` on
//! `[a, upper]` and grows monotonically as `E` drops below `a`. The low end
//! of the spectrum thus becomes the well separated top end of `p`, and the
//! Krylov dimension needed drops from thousands to a little above the number
//! of wanted pairs. A final Rayleigh-Ritz step with the operator itself
//! restores the energies.

use alloc::vec;
use alloc::vec::Vec;

use super::dense::symmetric_eigen;
use super::hamiltonian::SymmetricOperator;
use super::lanczos::{lowest_eigenpairs, Eigenpairs, LanczosOptions};
use crate::linalg::{axpy, dot};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOptions {
    /// Largest allowed `p(lower)`; bounds the dynamic range of the filtered
    /// spectrum and hence the polynomial degree.
    pub max_gain: f64,
    pub max_degree: usize,
    pub lanczos: LanczosOptions,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            max_gain: 1e8,
            max_degree: 120,
            lanczos: LanczosOptions {
                tol: 1e-12,
                ..LanczosOptions::default()
            },
        }
    }
}

/// `T_d(t)` for any real `t`.
pub fn chebyshev(t: f64, degree: usize) -> f64 {
    let d = degree as f64;
    if t.abs() <= 1.0 {
        libm::cos(d * libm::acos(t))
    } else {
        let mag = libm::cosh(d * libm::acosh(t.abs()));
        if t < 0.0 && degree % 2 == 1 {
            -mag
        } else {
            mag
        }
    }
}

/// `x ↦ −p(A) x`, so the wanted pairs are again the lowest ones.
struct NegFilter<'a, A> {
    a: &'a A,
    degree: usize,
    center: f64,
    half_width: f64,
}

impl<A: SymmetricOperator> SymmetricOperator for NegFilter<'_, A> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        let (c, e) = (self.center, self.half_width);
        let mut prev = x.to_vec();
        let mut cur = vec![0.0; n];
        let mut ax = vec![0.0; n];
        self.a.apply(x, &mut ax);
        for i in 0..n {
            cur[i] = (ax[i] - c * x[i]) / e;
        }
        for _ in 1..self.degree {
            self.a.apply(&cur, &mut ax);
            for i in 0..n {
                let next = 2.0 * (ax[i] - c * cur[i]) / e - prev[i];
                prev[i] = cur[i];
                cur[i] = next;
            }
        }
        for (o, v) in out.iter_mut().zip(&cur) {
            *o = -v;
        }
    }
}

/// Eigenpairs of `a` below `cutoff` (at most `cap`, the lowest), given a
/// spectral enclosure `[lower, upper]`. An infinite cutoff asks for the
/// `cap` lowest pairs.
pub fn filtered_lowest<A: SymmetricOperator>(
    a: &A,
    lower: f64,
    upper: f64,
    cutoff: f64,
    cap: usize,
    opts: &FilterOptions,
) -> Result<Eigenpairs> {
    let n = a.dim();
    let cap = cap.min(n);
    if n == 0 || cap == 0 || cutoff <= lower {
        return Ok(Eigenpairs::default());
    }
    let span = upper - lower;
    let mut edge = if cutoff.is_finite() {
        cutoff.min(upper)
    } else {
        // rough density of states: about n (E − lower) / span pairs below E
        lower + span * (1.6 * cap as f64 / n as f64).min(1.0)
    };
    loop {
        if edge >= lower + 0.7 * span {
            return lowest_eigenpairs(a, cutoff, cap, &opts.lanczos);
        }
        let a_lo = edge + 0.1 * (upper - edge);
        let map = |e: f64| (2.0 * e - a_lo - upper) / (upper - a_lo);
        let reach = libm::acosh(map(lower).abs()).max(1e-3);
        let mut degree = (libm::log(2.0 * opts.max_gain) / reach) as usize;
        degree = degree.clamp(2, opts.max_degree.max(2));
        degree -= degree % 2;
        let filter = NegFilter {
            a,
            degree,
            center: 0.5 * (a_lo + upper),
            half_width: 0.5 * (upper - a_lo),
        };
        let threshold = -chebyshev(map(edge), degree);
        let found = lowest_eigenpairs(&filter, threshold, cap, &opts.lanczos)?;
        let mut pairs = rayleigh_ritz(a, found.vectors)?;
        let keep = pairs.values.iter().take_while(|&&e| e < cutoff).count().min(cap);
        if keep >= cap || edge >= cutoff {
            pairs.values.truncate(keep);
            pairs.vectors.truncate(keep);
            return Ok(pairs);
        }
        edge = (lower + 1.5 * (edge - lower)).min(cutoff);
    }
}

/// Diagonalizes `a` on the span of the (orthonormal) `vectors`.
pub fn rayleigh_ritz<A: SymmetricOperator>(a: &A, vectors: Vec<Vec<f64>>) -> Result<Eigenpairs> {
    let k = vectors.len();
    if k == 0 {
        return Ok(Eigenpairs::default());
    }
    let n = a.dim();
    let mut av = vec![0.0; n];
    let mut b = vec![0.0; k * k];
    for j in 0..k {
        a.apply(&vectors[j], &mut av);
        for i in 0..=j {
            let v = dot(&vectors[i], &av);
            b[i * k + j] = v;
            b[j * k + i] = v;
        }
    }
    let eig = symmetric_eigen(&b, k)?;
    let mut out = Eigenpairs::default();
    for (value, coeffs) in eig.values.into_iter().zip(eig.vectors) {
        let mut y = vec![0.0; n];
        for (c, v) in coeffs.iter().zip(&vectors) {
            axpy(*c, v, &mut y);
        }
        out.values.push(value);
        out.vectors.push(y);
    }
    Ok(out)
}
