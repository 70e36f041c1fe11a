//! Poisson image deconvolution by plug-and-play ADMM with a quantum adaptive
//! basis (QAB) denoiser.
//!
//! The crate is `no_std` and only needs `alloc`. Everything touching the file
//! system, threads or the command line lives in the `qabpnp` companion crate.
//!
//! Pipeline overview:
//!
//! * [`image`] holds the raster type and the deterministic test images.
//! * [`blur`] is the circulant Gaussian blur `H` and its adjoint.
//! * [`poisson`] synthesizes `y = P(Hx)` and evaluates the shifted
//!   negative log-likelihood and its gradient.
//! * [`qab`] assembles the Schroedinger Hamiltonian of a smoothed observation
//!   and extracts its low-energy eigenbasis.
//! * [`denoise`] projects onto that basis (matching pursuit), attenuates by
//!   energy rank and reconstructs.
//! * [`admm`] runs the outer loop, plus the TV baseline in [`tv`].
//! * [`diagnostics`] turns a run trace into the fixed-point convergence checks.
//! * [`metrics`] has PSNR / SSIM / RMSE / SNR.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod admm;
pub mod blur;
pub mod denoise;
pub mod diagnostics;
mod error;
pub mod image;
pub mod linalg;
pub mod metrics;
pub mod poisson;
pub mod qab;
pub mod tv;

pub use error::{Error, Result};
