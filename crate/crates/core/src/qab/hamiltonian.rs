//! Discretized Schroedinger Hamiltonian `-(ħ²/2m)∇² + V` with the image as
//! the potential.
//!
//! Interior rows carry `V[i] + 4ħ²/2m` on the diagonal and `-ħ²/2m` towards
//! each 4-neighbor. Outside the grid nothing couples (zero padding), so edge
//! pixels get `3ħ²/2m`, corners `2ħ²/2m`, and horizontal neighbors never wrap
//! from the end of one row to the start of the next. In short:
//! `H[i][i] = V[i] + (in-grid neighbor count) * ħ²/2m`.

use alloc::vec;
use alloc::vec::Vec;

use crate::image::Image;
use crate::{Error, Result};

/// Symmetric operator exposed to the iterative eigensolver.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    /// `out = A x`
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

/// Sparse stencil form; at most five nonzeros per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    width: usize,
    height: usize,
    planck: f64,
    diag: Vec<f64>,
}

/// Builds the Hamiltonian of a `[0, 1]` potential with kinetic weight
/// `planck` (the `ħ²/2m` hyperparameter).
pub fn assemble_hamiltonian(potential: &Image, planck: f64) -> Result<Hamiltonian> {
    if !(planck > 0.0) || !planck.is_finite() {
        return Err(Error::InvalidConfig("planck (hbar^2/2m) must be positive"));
    }
    if potential.pixels().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::DomainError("potential must be normalized to [0, 1]"));
    }
    let (w, h) = (potential.width(), potential.height());
    let mut diag = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let neighbors = usize::from(r > 0) + usize::from(r + 1 < h) + usize::from(c > 0) + usize::from(c + 1 < w);
            diag[r * w + c] = potential.get(r, c) + neighbors as f64 * planck;
        }
    }
    Ok(Hamiltonian {
        width: w,
        height: h,
        planck,
        diag,
    })
}

impl Hamiltonian {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn planck(&self) -> f64 {
        self.planck
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Nonzero entries `(column, value)` of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> Vec<(usize, f64)> {
        let w = self.width;
        let (r, c) = (i / w, i % w);
        let mut out = Vec::with_capacity(5);
        if r > 0 {
            out.push((i - w, -self.planck));
        }
        if c > 0 {
            out.push((i - 1, -self.planck));
        }
        out.push((i, self.diag[i]));
        if c + 1 < w {
            out.push((i + 1, -self.planck));
        }
        if r + 1 < self.height {
            out.push((i + w, -self.planck));
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .into_iter()
            .find_map(|(col, v)| (col == j).then_some(v))
            .unwrap_or(0.0)
    }

    /// Interval containing the whole spectrum: the kinetic part is a
    /// positive semidefinite graph Laplacian, so the potential minimum
    /// bounds from below; Gershgorin bounds from above.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let w = self.width;
        let mut lower = f64::INFINITY;
        let mut upper = f64::NEG_INFINITY;
        for (i, &d) in self.diag.iter().enumerate() {
            let (r, c) = (i / w, i % w);
            let neighbors = usize::from(r > 0) + usize::from(r + 1 < self.height) + usize::from(c > 0) + usize::from(c + 1 < w);
            let kinetic = neighbors as f64 * self.planck;
            lower = lower.min(d - kinetic);
            upper = upper.max(d + kinetic);
        }
        (lower, upper)
    }

    /// Row-major dense copy; only sensible for small grids.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for (j, v) in self.row(i) {
                a[i * n + j] = v;
            }
        }
        a
    }
}

impl SymmetricOperator for Hamiltonian {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let (w, h, p) = (self.width, self.height, self.planck);
        for r in 0..h {
            let base = r * w;
            for c in 0..w {
                let i = base + c;
                let mut acc = self.diag[i] * x[i];
                if c > 0 {
                    acc -= p * x[i - 1];
                }
                if c + 1 < w {
                    acc -= p * x[i + 1];
                }
                if r > 0 {
                    acc -= p * x[i - w];
                }
                if r + 1 < h {
                    acc -= p * x[i + w];
                }
                out[i] = acc;
            }
        }
    }
}
