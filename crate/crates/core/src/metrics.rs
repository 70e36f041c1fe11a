//! Image quality metrics on unit-range images.
//!
//! PSNR uses a peak of 1.0. SSIM averages the local index over every 8x8
//! window (stride 1, uniform weights, population moments) with
//! `C1 = 0.01²`, `C2 = 0.03²`.

use crate::error::check_len;
use crate::image::Image;
use crate::Result;

pub const SSIM_WINDOW: usize = 8;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    /// `+inf` when the images are identical.
    pub psnr_db: f64,
    pub ssim: f64,
    pub rmse: f64,
}

impl QualityReport {
    pub fn compare(reference: &Image, test: &Image) -> Result<Self> {
        Ok(Self {
            psnr_db: psnr(reference, test)?,
            ssim: ssim(reference, test)?,
            rmse: rmse(reference.pixels(), test.pixels())?,
        })
    }
}

fn check_shape(a: &Image, b: &Image) -> Result<()> {
    check_len(a.width(), b.width())?;
    check_len(a.height(), b.height())
}

pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.len() as f64)
}

pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    mse(a, b).map(libm::sqrt)
}

/// `10 log10(1 / MSE)`; identical images give `f64::INFINITY`.
pub fn psnr(reference: &Image, test: &Image) -> Result<f64> {
    check_shape(reference, test)?;
    let m = mse(reference.pixels(), test.pixels())?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * libm::log10(m))
}

pub fn ssim(reference: &Image, test: &Image) -> Result<f64> {
    check_shape(reference, test)?;
    let (w, h) = (reference.width(), reference.height());
    let win_w = SSIM_WINDOW.min(w);
    let win_h = SSIM_WINDOW.min(h);
    let count = (win_w * win_h) as f64;
    let (a, b) = (reference.pixels(), test.pixels());
    let mut total = 0.0;
    let mut windows = 0usize;
    for r0 in 0..=(h - win_h) {
        for c0 in 0..=(w - win_w) {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for r in r0..r0 + win_h {
                for c in c0..c0 + win_w {
                    let (x, y) = (a[r * w + c], b[r * w + c]);
                    sa += x;
                    sb += y;
                    saa += x * x;
                    sbb += y * y;
                    sab += x * y;
                }
            }
            let (ma, mb) = (sa / count, sb / count);
            let va = saa / count - ma * ma;
            let vb = sbb / count - mb * mb;
            let cov = sab / count - ma * mb;
            let num = (2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let den = (ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2);
            total += num / den;
            windows += 1;
        }
    }
    Ok(total / windows as f64)
}

/// `20 log10(‖signal‖ / ‖noise‖)`; a zero noise vector gives `f64::INFINITY`.
pub fn snr_db(signal: &[f64], noise: &[f64]) -> Result<f64> {
    check_len(signal.len(), noise.len())?;
    let ns = crate::linalg::norm2(noise);
    if ns == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * libm::log10(crate::linalg::norm2(signal) / ns))
}
