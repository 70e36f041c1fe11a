//! Circulant (BCCB) Gaussian blur and its adjoint.
//!
//! Convolution wraps around both image axes. The kernel is applied directly
//! in the spatial domain since the PSFs involved are a handful of taps wide.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::check_len;
use crate::{Error, Result};

/// Truncated, unit-sum Gaussian kernel.
///
/// The kernel center sits at `(size / 2, size / 2)`. For odd sizes this is
/// the middle tap; for even sizes (e.g. 4x4) it is the lower-right tap of the
/// central 2x2 block.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPsf {
    size: usize,
    sigma: f64,
    weights: Vec<f64>,
}

impl GaussianPsf {
    pub fn new(size: usize, sigma: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidPsf("size must be at least 1"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidPsf("sigma must be positive and finite"));
        }
        let center = (size / 2) as f64;
        let mut weights = Vec::with_capacity(size * size);
        for a in 0..size {
            for b in 0..size {
                let dy = a as f64 - center;
                let dx = b as f64 - center;
                weights.push(libm::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)));
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self { size, sigma, weights })
    }

    /// Odd-sized kernel of radius `ceil(3 sigma)`.
    pub fn with_three_sigma_support(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidPsf("sigma must be positive and finite"));
        }
        let radius = libm::ceil(3.0 * sigma) as usize;
        Self::new(2 * radius + 1, sigma)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn center(&self) -> usize {
        self.size / 2
    }

    /// Row-major `size x size` weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.size + col]
    }
}

/// Plain-text dump: a header line then one row of weights per line.
impl fmt::Display for GaussianPsf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# gaussian psf size={} sigma={} center=({c},{c})", self.size, self.sigma, c = self.center())?;
        for row in self.weights.chunks(self.size) {
            let mut first = true;
            for w in row {
                if !first {
                    f.write_str(" ")?;
                }
                write!(f, "{w:.17e}")?;
                first = false;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlurOperator {
    psf: GaussianPsf,
    width: usize,
    height: usize,
}

impl BlurOperator {
    pub fn new(psf: GaussianPsf, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage("width and height must be positive"));
        }
        Ok(Self { psf, width, height })
    }

    pub fn psf(&self) -> &GaussianPsf {
        &self.psf
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Hx`: circular convolution, `out(p) = sum_q h(q) x(p - q)`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    /// `Hᵀy`: circular correlation, `out(p) = sum_q h(q) y(p + q)`.
    pub fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.apply_adjoint_into(y, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.correlate(x, out, -1)
    }

    pub fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        self.correlate(y, out, 1)
    }

    /// Upper bound on the spectral norm: `sqrt(‖H‖₁ ‖H‖∞)`, which for a
    /// circulant operator is the kernel's absolute sum.
    pub fn norm_bound(&self) -> f64 {
        self.psf.weights.iter().map(|w| w.abs()).sum()
    }

    // sign = -1 reads x(p - q) (convolution), sign = +1 reads x(p + q).
    fn correlate(&self, x: &[f64], out: &mut [f64], sign: isize) -> Result<()> {
        check_len(self.len(), x.len())?;
        check_len(self.len(), out.len())?;
        let (w, h) = (self.width as isize, self.height as isize);
        let k = self.psf.size;
        let c = self.psf.center() as isize;
        // per-tap wrapped column offsets, reused across rows
        let col_idx: Vec<Vec<usize>> = (0..k)
            .map(|b| {
                let dx = sign * (b as isize - c);
                (0..w).map(|col| (col + dx).rem_euclid(w) as usize).collect()
            })
            .collect();
        out.fill(0.0);
        for row in 0..h {
            let dst = &mut out[(row * w) as usize..((row + 1) * w) as usize];
            for a in 0..k {
                let src_row = (row + sign * (a as isize - c)).rem_euclid(h) as usize;
                let src = &x[src_row * self.width..(src_row + 1) * self.width];
                for (b, cols) in col_idx.iter().enumerate() {
                    let wt = self.psf.weights[a * k + b];
                    for (d, &sc) in dst.iter_mut().zip(cols) {
                        *d += wt * src[sc];
                    }
                }
            }
        }
        Ok(())
    }
}
