//! Poisson observation model `y = P(Hx)`, the shifted negative
//! log-likelihood and its gradient.
//!
//! The likelihood is evaluated on intensities rescaled to the image range:
//! `f(x) = -yᵀ log(Hx + ε) + 1ᵀHx`. The `sum log(y!)` constant is dropped; it
//! never moves the minimizer or the gradient.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Poisson};

use crate::blur::BlurOperator;
use crate::error::check_len;
use crate::linalg::{dist2, norm2};
use crate::metrics::snr_db;
use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const MAX_EPSILON: f64 = 1e-3;

/// Half-width of the accepted band around the requested SNR, in dB.
pub const SNR_TOLERANCE_DB: f64 = 0.25;
pub const MIN_PHOTON_SCALE: f64 = 1.0;
pub const MAX_PHOTON_SCALE: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub target_snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(target_snr_db: f64, seed: u64) -> Result<Self> {
        if !target_snr_db.is_finite() {
            return Err(Error::InvalidConfig("target SNR must be finite"));
        }
        Ok(Self { target_snr_db, seed })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Degraded {
    /// Noisy counts divided by `scale`.
    pub y: Vec<f64>,
    pub achieved_snr_db: f64,
    /// Photons per unit intensity.
    pub scale: f64,
}

/// Draws `y = Poisson(c Hx) / c` for a fixed photon scale `c`.
///
/// The stream is fully determined by `seed`; pixels with zero mean stay zero.
pub fn sample_at_scale(blurred: &[f64], scale: f64, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    blurred
        .iter()
        .map(|&b| {
            let mean = scale * b;
            if mean <= 0.0 {
                return Ok(0.0);
            }
            let dist = Poisson::new(mean).map_err(|_| Error::NumericalFailure("invalid Poisson mean"))?;
            Ok(dist.sample(&mut rng) / scale)
        })
        .collect()
}

/// Blurs `x` and adds Poisson noise whose a-posteriori SNR lands within
/// [`SNR_TOLERANCE_DB`] of the request.
///
/// The photon scale is found by bisection on `log10 c` over
/// `[MIN_PHOTON_SCALE, MAX_PHOTON_SCALE]`; every trial reuses the same seed
/// so the measured SNR is a near-monotone function of the scale.
pub fn degrade(x: &[f64], op: &BlurOperator, spec: &NoiseSpec) -> Result<Degraded> {
    check_len(op.len(), x.len())?;
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::DomainError("clean image must lie in [0, 1]"));
    }
    let blurred = op.apply(x)?;
    let target = spec.target_snr_db;
    let measure = |log_scale: f64| -> Result<(f64, Vec<f64>)> {
        let c = libm::pow(10.0, log_scale);
        let y = sample_at_scale(&blurred, c, spec.seed)?;
        let noise: Vec<f64> = y.iter().zip(&blurred).map(|(a, b)| a - b).collect();
        Ok((snr_db(&blurred, &noise)?, y))
    };

    let (mut lo, mut hi) = (libm::log10(MIN_PHOTON_SCALE), libm::log10(MAX_PHOTON_SCALE));
    let (snr_hi, y_hi) = measure(hi)?;
    let (snr_lo, y_lo) = measure(lo)?;
    let mut best = if (snr_hi - target).abs() < (snr_lo - target).abs() {
        (snr_hi, y_hi, hi)
    } else {
        (snr_lo, y_lo, lo)
    };
    if snr_hi >= target - SNR_TOLERANCE_DB && snr_lo <= target + SNR_TOLERANCE_DB {
        for _ in 0..60 {
            if (best.0 - target).abs() <= 0.01 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let (snr, y) = measure(mid)?;
            if (snr - target).abs() < (best.0 - target).abs() {
                best = (snr, y, mid);
            }
            if snr < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    if (best.0 - target).abs() > SNR_TOLERANCE_DB {
        return Err(Error::SnrUnreachable { target_db: target });
    }
    Ok(Degraded {
        y: best.1,
        achieved_snr_db: best.0,
        scale: libm::pow(10.0, best.2),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonProblem {
    op: BlurOperator,
    y: Vec<f64>,
    epsilon: f64,
}

impl PoissonProblem {
    pub fn new(op: BlurOperator, y: Vec<f64>, epsilon: f64) -> Result<Self> {
        check_len(op.len(), y.len())?;
        if y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::DomainError("observation must be finite and nonnegative"));
        }
        if !(epsilon > 0.0 && epsilon <= MAX_EPSILON) {
            return Err(Error::InvalidConfig("epsilon must lie in (0, 1e-3]"));
        }
        Ok(Self { op, y, epsilon })
    }

    pub fn operator(&self) -> &BlurOperator {
        &self.op
    }

    pub fn observation(&self) -> &[f64] {
        &self.y
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        check_len(self.len(), x.len())?;
        if x.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::DomainError("likelihood needs x >= 0"));
        }
        Ok(())
    }

    /// `f(x) = -Σ y log(Hx + ε) + Σ Hx`.
    pub fn neg_log_likelihood(&self, x: &[f64]) -> Result<f64> {
        self.check_domain(x)?;
        let hx = self.op.apply(x)?;
        Ok(self.value_from_blurred(&hx))
    }

    /// `∇f(x) = -Hᵀ(y / (Hx + ε)) + Hᵀ1`, evaluated as `Hᵀ(1 - y / (Hx + ε))`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_and_gradient(x)?.1)
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_domain(x)?;
        let hx = self.op.apply(x)?;
        let value = self.value_from_blurred(&hx);
        let ratio: Vec<f64> = hx
            .iter()
            .zip(&self.y)
            .map(|(&b, &y)| 1.0 - y / (b + self.epsilon))
            .collect();
        Ok((value, self.op.apply_adjoint(&ratio)?))
    }

    fn value_from_blurred(&self, hx: &[f64]) -> f64 {
        hx.iter()
            .zip(&self.y)
            .map(|(&b, &y)| {
                let fit = if y == 0.0 { 0.0 } else { y * libm::log(b + self.epsilon) };
                b - fit
            })
            .sum()
    }

    /// Constants of the bounded-gradient argument: for every `x` in the unit
    /// box, `‖∇f(x)‖₂ ≤ delta1 / ε + delta2`.
    pub fn gradient_bound(&self) -> GradientBound {
        let ones = alloc::vec![1.0; self.len()];
        let ht_one = self.op.apply_adjoint(&ones).expect("length matches by construction");
        GradientBound {
            delta1: self.op.norm_bound() * norm2(&self.y),
            delta2: norm2(&ht_one),
            epsilon: self.epsilon,
        }
    }

    /// SNR of this observation against a known noiseless blur `Hx`.
    pub fn snr_against(&self, blurred: &[f64]) -> Result<f64> {
        check_len(self.len(), blurred.len())?;
        let noise = dist2(&self.y, blurred);
        if noise == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(20.0 * libm::log10(norm2(blurred) / noise))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientBound {
    /// `‖Hᵀ‖₂ ‖y‖₂` (operator norm replaced by its circulant bound).
    pub delta1: f64,
    /// `‖Hᵀ1‖₂`.
    pub delta2: f64,
    pub epsilon: f64,
}

impl GradientBound {
    pub fn value(&self) -> f64 {
        self.delta1 / self.epsilon + self.delta2
    }
}
