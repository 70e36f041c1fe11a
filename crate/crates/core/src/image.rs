//! Grayscale raster container and deterministic test images.
//!
//! Pixels are stored row-major, which is also the lexicographic vectorization
//! used by every operator in the crate: element `i` is the pixel at row
//! `i / width`, column `i % width`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    /// Builds an image from row-major pixels. All intensities must be finite.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage("width and height must be positive"));
        }
        crate::error::check_len(width * height, pixels.len())?;
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidImage("non-finite pixel"));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0.0; width * height])
    }

    /// Evaluates `f(row, col)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(width, height, pixels)
    }

    /// Inverse of [`Image::vectorize`].
    pub fn devectorize(width: usize, height: usize, v: Vec<f64>) -> Result<Self> {
        Self::new(width, height, v)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Lexicographic (row-major) vector of the pixels.
    pub fn vectorize(&self) -> Vec<f64> {
        self.pixels.clone()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.pixels
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Affine rescale onto `[0, 1]`. A constant image maps to all zeros.
    ///
    /// The result is a fixed point: normalizing twice gives the same pixels.
    pub fn normalize(&self) -> Image {
        let (lo, hi) = self
            .pixels
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        let range = hi - lo;
        let pixels = if range > 0.0 {
            self.pixels.iter().map(|&p| (p - lo) / range).collect()
        } else {
            vec![0.0; self.pixels.len()]
        };
        Image {
            width: self.width,
            height: self.height,
            pixels,
        }
    }

    /// Copy with every pixel clamped to `[0, 1]`.
    pub fn clamped(&self) -> Image {
        let mut pixels = self.pixels.clone();
        crate::linalg::clamp_unit(&mut pixels);
        Image {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

pub const MIN_SYNTHETIC_SIDE: usize = 16;

/// Frequency-intensity coupled test image.
///
/// Intensity rises from left to right while the local oscillation frequency
/// falls, so dark regions carry fine detail and bright regions carry coarse
/// blobs. The oscillation amplitude grows with intensity. Closed form and
/// seedless, so it is bit-reproducible.
pub fn make_synthetic(n: usize) -> Result<Image> {
    if n < MIN_SYNTHETIC_SIDE {
        return Err(Error::TooSmall {
            got: n,
            min: MIN_SYNTHETIC_SIDE,
        });
    }
    // cycles per pixel at the dark (left) and bright (right) edges
    const F_DARK: f64 = 1.0 / 12.0;
    const F_BRIGHT: f64 = 1.0 / 36.0;
    let span = (n - 1) as f64;
    let img = Image::from_fn(n, n, |r, c| {
        let u = c as f64 / span;
        let base = 0.1 + 0.7 * u;
        let freq = F_DARK + (F_BRIGHT - F_DARK) * u;
        // phase is the running integral of the local frequency along the row
        let phase = 2.0 * PI * span * (F_DARK * u + 0.5 * (F_BRIGHT - F_DARK) * u * u);
        let amp = 0.12 + 0.12 * u;
        base + amp * libm::sin(phase) * libm::cos(2.0 * PI * freq * r as f64)
    })?;
    Ok(img.normalize())
}

/// The bundled test scenes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    /// [`make_synthetic`].
    Chirp,
    /// Piecewise-constant disks and a bar on a dark background.
    Shapes,
    /// Smooth radially modulated pattern resembling natural-image shading.
    Rings,
}

impl Fixture {
    pub const ALL: [Fixture; 3] = [Fixture::Chirp, Fixture::Shapes, Fixture::Rings];

    pub fn name(self) -> &'static str {
        match self {
            Fixture::Chirp => "chirp",
            Fixture::Shapes => "shapes",
            Fixture::Rings => "rings",
        }
    }

    pub fn from_name(name: &str) -> Option<Fixture> {
        Fixture::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn render(self, n: usize) -> Result<Image> {
        match self {
            Fixture::Chirp => make_synthetic(n),
            Fixture::Shapes => shapes(n),
            Fixture::Rings => rings(n),
        }
    }
}

fn shapes(n: usize) -> Result<Image> {
    if n < MIN_SYNTHETIC_SIDE {
        return Err(Error::TooSmall {
            got: n,
            min: MIN_SYNTHETIC_SIDE,
        });
    }
    let s = n as f64;
    let value_at = |y: f64, x: f64| -> f64 {
        let in_disk = |cy: f64, cx: f64, rad: f64| (y - cy) * (y - cy) + (x - cx) * (x - cx) <= rad * rad;
        if in_disk(0.35 * s, 0.35 * s, 0.2 * s) {
            0.85
        } else if in_disk(0.72 * s, 0.7 * s, 0.12 * s) {
            0.35
        } else if (0.6 * s..0.9 * s).contains(&x) && (0.15 * s..0.45 * s).contains(&y) {
            0.6
        } else {
            0.12
        }
    };
    // 4x4 supersampling for anti-aliased edges
    const SS: usize = 4;
    let img = Image::from_fn(n, n, |r, c| {
        let mut acc = 0.0;
        for i in 0..SS {
            for j in 0..SS {
                let y = r as f64 + (i as f64 + 0.5) / SS as f64;
                let x = c as f64 + (j as f64 + 0.5) / SS as f64;
                acc += value_at(y, x);
            }
        }
        acc / (SS * SS) as f64
    })?;
    Ok(img)
}

fn rings(n: usize) -> Result<Image> {
    if n < MIN_SYNTHETIC_SIDE {
        return Err(Error::TooSmall {
            got: n,
            min: MIN_SYNTHETIC_SIDE,
        });
    }
    let s = n as f64;
    let img = Image::from_fn(n, n, |r, c| {
        let y = (r as f64 + 0.5) / s - 0.45;
        let x = (c as f64 + 0.5) / s - 0.55;
        let rad = libm::sqrt(x * x + y * y);
        let shade = 0.5 + 0.3 * libm::cos(2.0 * PI * rad / 0.28) * libm::exp(-rad * rad / 0.18);
        shade + 0.15 * libm::sin(2.0 * PI * (0.6 * x + 0.9 * y)) - 0.2 * y
    })?;
    Ok(img.normalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_endpoints() {
        let img = Image::new(3, 1, vec![0.0, 128.0, 255.0]).unwrap();
        assert_eq!(img.normalize().pixels(), &[0.0, 128.0 / 255.0, 1.0]);
        let img = Image::new(2, 1, vec![0.2, 0.7]).unwrap();
        assert_eq!(img.normalize().pixels(), &[0.0, 1.0]);
    }

    #[test]
    fn constant_normalizes_to_zero() {
        let img = Image::new(3, 1, vec![5.0; 3]).unwrap();
        assert_eq!(img.normalize().pixels(), &[0.0; 3]);
    }

    #[test]
    fn rejects_non_finite() {
        assert_eq!(
            Image::new(2, 1, vec![0.0, f64::NAN]),
            Err(Error::InvalidImage("non-finite pixel"))
        );
        assert!(matches!(
            Image::new(2, 2, vec![0.0; 3]),
            Err(Error::DimensionError { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn row_major_vectorization() {
        let img = Image::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(img.get(0, 1), 2.0);
        assert_eq!(img.get(1, 0), 3.0);
        assert_eq!(img.vectorize(), vec![1.0, 2.0, 3.0, 4.0]);
        let row = Image::new(3, 1, vec![7.0, 8.0, 9.0]).unwrap();
        assert_eq!(row.vectorize(), vec![7.0, 8.0, 9.0]);
    }

    #[test]
    fn synthetic_too_small() {
        assert_eq!(make_synthetic(15), Err(Error::TooSmall { got: 15, min: 16 }));
        assert!(make_synthetic(16).is_ok());
    }

    #[test]
    fn fixtures_are_in_unit_range() {
        for f in Fixture::ALL {
            let img = f.render(32).unwrap();
            assert!(img.pixels().iter().all(|p| (0.0..=1.0).contains(p)), "{}", f.name());
            assert_eq!(Fixture::from_name(f.name()), Some(f));
        }
    }
}
