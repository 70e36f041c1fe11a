//! 8-bit grayscale files: binary PGM (P5) always, PNG behind the `png`
//! feature. Intensities map linearly `0..=255 ↔ [0, 1]`; writing clips to
//! `[0, 1]` and rounds half up.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use qabpnp_core::image::Image;

/// `round(clamp(v, 0, 1) * 255)`, halves rounding up.
pub fn quantize(v: f64) -> u8 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (v * 255.0 + 0.5).floor() as u8
}

pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.pixels().iter().map(|&v| quantize(v)));
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos)?;
    if magic != "P5" {
        bail!("not a binary PGM (magic {magic:?})");
    }
    let width: usize = next_token(bytes, &mut pos)?.parse().context("bad PGM width")?;
    let height: usize = next_token(bytes, &mut pos)?.parse().context("bad PGM height")?;
    let maxval: u32 = next_token(bytes, &mut pos)?.parse().context("bad PGM maxval")?;
    if maxval == 0 || maxval > 255 {
        bail!("only 8-bit PGM is supported (maxval {maxval})");
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let n = width.checked_mul(height).context("PGM size overflows")?;
    let data = bytes.get(pos..pos + n).context("PGM raster is truncated")?;
    let scale = maxval as f64;
    let pixels = data.iter().map(|&b| (b as f64 / scale).min(1.0)).collect();
    Ok(Image::new(width, height, pixels)?)
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => bail!("PGM header is truncated"),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn is_png(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Reads a PGM, or a PNG when the extension says so.
pub fn load_image(path: &Path) -> Result<Image> {
    if is_png(path) {
        return load_png(path);
    }
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_pgm(&bytes).with_context(|| format!("decoding {}", path.display()))
}

pub fn save_image(path: &Path, img: &Image) -> Result<()> {
    if is_png(path) {
        return save_png(path, img);
    }
    fs::write(path, encode_pgm(img)).with_context(|| format!("writing {}", path.display()))
}

#[cfg(feature = "png")]
fn load_png(path: &Path) -> Result<Image> {
    let luma = image::open(path)
        .with_context(|| format!("reading {}", path.display()))?
        .into_luma8();
    let (w, h) = luma.dimensions();
    let pixels = luma.as_raw().iter().map(|&b| b as f64 / 255.0).collect();
    Ok(Image::new(w as usize, h as usize, pixels)?)
}

#[cfg(feature = "png")]
fn save_png(path: &Path, img: &Image) -> Result<()> {
    let raw: Vec<u8> = img.pixels().iter().map(|&v| quantize(v)).collect();
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, raw).context("PNG buffer size")?;
    buf.save(path).with_context(|| format!("writing {}", path.display()))
}

#[cfg(not(feature = "png"))]
fn load_png(path: &Path) -> Result<Image> {
    bail!("{}: PNG support was not compiled in", path.display())
}

#[cfg(not(feature = "png"))]
fn save_png(path: &Path, _img: &Image) -> Result<()> {
    bail!("{}: PNG support was not compiled in", path.display())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_rounds_up() {
        assert_eq!(quantize(0.5), 128);
        assert_eq!(quantize(1.5 / 255.0), 2);
        assert_eq!(quantize(-0.2), 0);
        assert_eq!(quantize(7.0), 255);
    }

    #[test]
    fn header_with_comment() {
        let mut bytes = b"P5 # made by hand\n2 1\n# depth\n255\n".to_vec();
        bytes.extend([0u8, 255]);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!(img.pixels(), &[0.0, 1.0]);
    }

    #[test]
    fn truncated_raster() {
        assert!(decode_pgm(b"P5\n3 3\n255\n\x01\x02").is_err());
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
    }
}
