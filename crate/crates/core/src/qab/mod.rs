//! Quantum adaptive basis: the low-energy eigenstates of a Schroedinger
//! Hamiltonian whose potential is the (smoothed) observation.
//!
//! Construction: normalize the observation, low-pass it with a Gaussian of
//! width `sigma_smooth` (noise would otherwise localize the eigenstates),
//! assemble the Hamiltonian and keep every eigenpair below the energy cutoff.

pub mod dense;
pub mod filtered;
pub mod hamiltonian;
pub mod lanczos;
pub mod tridiag;

use alloc::vec::Vec;

pub use hamiltonian::{assemble_hamiltonian, Hamiltonian, SymmetricOperator};
pub use filtered::FilterOptions;
pub use lanczos::LanczosOptions;

use crate::blur::{BlurOperator, GaussianPsf};
use crate::image::Image;
use crate::linalg::{dist2, dot, norm2};
use crate::{Error, Result};

/// Largest Hamiltonian handled by the dense solver under [`Solver::Auto`].
pub const DENSE_LIMIT: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QabConfig {
    /// Kinetic weight `ħ²/2m`, in intensity units.
    pub planck: f64,
    /// Standard deviation of the pre-smoothing Gaussian, pixels.
    pub sigma_smooth: f64,
    /// Keep eigenpairs with energy strictly below this.
    pub energy_cutoff: f64,
    pub max_vectors: usize,
}

impl Default for QabConfig {
    fn default() -> Self {
        Self {
            planck: 4.0,
            sigma_smooth: 7.0,
            energy_cutoff: 4.1,
            max_vectors: 1024,
        }
    }
}

impl QabConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.planck > 0.0) || !self.planck.is_finite() {
            return Err(Error::InvalidConfig("qab.planck must be positive"));
        }
        if !(self.sigma_smooth > 0.0) || !self.sigma_smooth.is_finite() {
            return Err(Error::InvalidConfig("qab.sigma_smooth must be positive"));
        }
        if !(self.energy_cutoff > 0.0) {
            return Err(Error::InvalidConfig("qab.energy_cutoff must be positive"));
        }
        if self.max_vectors == 0 {
            return Err(Error::InvalidConfig("qab.max_vectors must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Solver {
    /// Dense below [`DENSE_LIMIT`] unknowns, filtered Lanczos above.
    Auto,
    Dense,
    /// Lanczos directly on the Hamiltonian.
    Lanczos(LanczosOptions),
    /// Lanczos on a Chebyshev filter of the Hamiltonian.
    Filtered(FilterOptions),
}

/// `T` orthonormal eigenvectors with ascending energies.
#[derive(Debug, Clone, PartialEq)]
pub struct QabBasis {
    width: usize,
    height: usize,
    energies: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

impl QabBasis {
    /// Reassembles a basis (e.g. from a cache). Checks shapes and ordering
    /// only; orthonormality is the caller's contract.
    pub fn from_parts(width: usize, height: usize, energies: Vec<f64>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        crate::error::check_len(energies.len(), vectors.len())?;
        for v in &vectors {
            crate::error::check_len(width * height, v.len())?;
        }
        if energies.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidConfig("basis energies must be ascending"));
        }
        Ok(Self {
            width,
            height,
            energies,
            vectors,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of retained eigenpairs `T`.
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.width * self.height
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// First `count` eigenpairs.
    pub fn truncated(&self, count: usize) -> QabBasis {
        let t = count.min(self.len());
        QabBasis {
            width: self.width,
            height: self.height,
            energies: self.energies[..t].to_vec(),
            vectors: self.vectors[..t].to_vec(),
        }
    }

    /// `max |⟨ψi, ψj⟩ − δij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(a, b) - target).abs());
            }
        }
        worst
    }

    /// `max_i ‖Hψi − Eiψi‖ / max(1, |Ei|)`.
    pub fn max_relative_residual(&self, h: &Hamiltonian) -> f64 {
        let mut hv = alloc::vec![0.0; self.dim()];
        let mut worst: f64 = 0.0;
        for (e, v) in self.energies.iter().zip(&self.vectors) {
            h.apply(v, &mut hv);
            let ev: Vec<f64> = v.iter().map(|x| e * x).collect();
            worst = worst.max(dist2(&hv, &ev) / e.abs().max(1.0));
        }
        worst
    }
}

/// Circular Gaussian low-pass with a unit-sum kernel of radius `ceil(3σ)`.
pub fn presmooth(img: &Image, sigma_smooth: f64) -> Result<Image> {
    let psf = GaussianPsf::with_three_sigma_support(sigma_smooth)?;
    let op = BlurOperator::new(psf, img.width(), img.height())?;
    Image::new(img.width(), img.height(), op.apply(img.pixels())?)
}

/// Potential used for the basis: the normalized observation, smoothed.
pub fn prepare_potential(observation: &Image, sigma_smooth: f64) -> Result<Image> {
    // smoothing a unit-range image stays in range up to rounding
    Ok(presmooth(&observation.normalize(), sigma_smooth)?.clamped())
}

/// The `min(cap, #{E < cutoff})` lowest eigenpairs of `h`.
pub fn eigendecompose(h: &Hamiltonian, cutoff: f64, cap: usize) -> Result<QabBasis> {
    eigendecompose_with(h, cutoff, cap, &Solver::Auto)
}

pub fn eigendecompose_with(h: &Hamiltonian, cutoff: f64, cap: usize, solver: &Solver) -> Result<QabBasis> {
    let n = h.dim();
    let auto_filtered;
    let solver = match solver {
        Solver::Auto if n <= DENSE_LIMIT => &Solver::Dense,
        Solver::Auto => {
            auto_filtered = Solver::Filtered(FilterOptions::default());
            &auto_filtered
        }
        other => other,
    };
    let (energies, vectors) = match solver {
        Solver::Lanczos(opts) => {
            let pairs = lanczos::lowest_eigenpairs(h, cutoff, cap, opts)?;
            (pairs.values, pairs.vectors)
        }
        Solver::Filtered(opts) => {
            let (lower, upper) = h.spectral_bounds();
            let pairs = filtered::filtered_lowest(h, lower, upper, cutoff, cap, opts)?;
            (pairs.values, pairs.vectors)
        }
        _ => {
            let eig = dense::symmetric_eigen(&h.to_dense(), n)?;
            let keep = eig.values.iter().take_while(|&&e| e < cutoff).count().min(cap);
            let mut vectors = eig.vectors;
            vectors.truncate(keep);
            (eig.values[..keep].to_vec(), vectors)
        }
    };
    if energies.is_empty() {
        return Err(Error::EmptyBasis { cutoff });
    }
    QabBasis::from_parts(h.width(), h.height(), energies, vectors)
}

/// Smooth, assemble and decompose in one go.
pub fn build_basis(observation: &Image, cfg: &QabConfig) -> Result<QabBasis> {
    cfg.validate()?;
    let potential = prepare_potential(observation, cfg.sigma_smooth)?;
    let h = assemble_hamiltonian(&potential, cfg.planck)?;
    eigendecompose(&h, cfg.energy_cutoff, cfg.max_vectors)
}

/// `‖v‖₂` of the projection residual `v − ΦΦᵀv`; handy in tests.
pub fn projection_residual(basis: &QabBasis, v: &[f64]) -> f64 {
    let mut r = v.to_vec();
    for psi in basis.vectors() {
        let c = dot(v, psi);
        crate::linalg::axpy(-c, psi, &mut r);
    }
    norm2(&r)
}
