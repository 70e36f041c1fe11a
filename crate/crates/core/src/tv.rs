//! Isotropic total-variation proximal map by dual projection.
//!
//! Solves `argmin_z ½‖z − v‖² + θ TV(z)` with forward differences and
//! Neumann boundaries. The dual field `p` is updated with the fixed-point
//! scheme `p ← (p + τ∇(div p − v/θ)) / (1 + τ|∇(div p − v/θ)|)`, `τ = 1/8`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::check_len;
use crate::Result;

pub const TV_INNER_ITERS: usize = 20;
const TAU: f64 = 0.125;

/// TV prox of the `width x height` image `v` with weight `theta`.
pub fn tv_prox(v: &[f64], width: usize, height: usize, theta: f64, iters: usize) -> Result<Vec<f64>> {
    check_len(width * height, v.len())?;
    if !(theta > 0.0) {
        return Ok(v.to_vec());
    }
    let n = v.len();
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let mut div = vec![0.0; n];
    let mut term = vec![0.0; n];
    for _ in 0..iters {
        divergence(&px, &py, width, height, &mut div);
        for i in 0..n {
            term[i] = div[i] - v[i] / theta;
        }
        for r in 0..height {
            for c in 0..width {
                let i = r * width + c;
                let gx = if c + 1 < width { term[i + 1] - term[i] } else { 0.0 };
                let gy = if r + 1 < height { term[i + width] - term[i] } else { 0.0 };
                let mag = libm::sqrt(gx * gx + gy * gy);
                let denom = 1.0 + TAU * mag;
                px[i] = (px[i] + TAU * gx) / denom;
                py[i] = (py[i] + TAU * gy) / denom;
            }
        }
    }
    divergence(&px, &py, width, height, &mut div);
    Ok(v.iter().zip(&div).map(|(vi, di)| vi - theta * di).collect())
}

// Negative adjoint of the forward-difference gradient.
fn divergence(px: &[f64], py: &[f64], width: usize, height: usize, out: &mut [f64]) {
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            let mut d = 0.0;
            if c + 1 < width {
                d += px[i];
            }
            if c > 0 {
                d -= px[i - 1];
            }
            if r + 1 < height {
                d += py[i];
            }
            if r > 0 {
                d -= py[i - width];
            }
            out[i] = d;
        }
    }
}

/// Discrete isotropic total variation, same differences as the prox.
pub fn total_variation(v: &[f64], width: usize, height: usize) -> f64 {
    let mut tv = 0.0;
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            let gx = if c + 1 < width { v[i + 1] - v[i] } else { 0.0 };
            let gy = if r + 1 < height { v[i + width] - v[i] } else { 0.0 };
            tv += libm::sqrt(gx * gx + gy * gy);
        }
    }
    tv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weight_is_identity() {
        let v = [0.1, 0.5, 0.9, 0.3];
        assert_eq!(tv_prox(&v, 2, 2, 0.0, 20).unwrap(), v.to_vec());
    }

    #[test]
    fn constant_is_fixed_point() {
        let v = vec![0.4; 30];
        let z = tv_prox(&v, 6, 5, 0.3, 20).unwrap();
        assert!(z.iter().all(|x| (x - 0.4).abs() < 1e-14));
    }

    #[test]
    fn divergence_is_negative_adjoint() {
        let (w, h) = (5, 4);
        let u: Vec<f64> = (0..20).map(|i| libm::sin(i as f64 * 0.7)).collect();
        let px: Vec<f64> = (0..20).map(|i| libm::cos(i as f64 * 1.3)).collect();
        let py: Vec<f64> = (0..20).map(|i| libm::sin(i as f64 * 2.1 + 0.4)).collect();
        let mut div = vec![0.0; 20];
        divergence(&px, &py, w, h, &mut div);
        let mut lhs = 0.0;
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                let gx = if c + 1 < w { u[i + 1] - u[i] } else { 0.0 };
                let gy = if r + 1 < h { u[i + w] - u[i] } else { 0.0 };
                lhs += gx * px[i] + gy * py[i];
            }
        }
        let rhs: f64 = -u.iter().zip(&div).map(|(a, b)| a * b).sum::<f64>();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn prox_lowers_objective() {
        let v: Vec<f64> = (0..64).map(|i| if (i * 7) % 5 < 2 { 0.8 } else { 0.2 }).collect();
        let theta = 0.1;
        let z = tv_prox(&v, 8, 8, theta, 20).unwrap();
        let obj = |x: &[f64]| {
            0.5 * x.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + theta * total_variation(x, 8, 8)
        };
        assert!(obj(&z) < obj(&v));
    }
}
