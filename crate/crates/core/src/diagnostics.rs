//! Per-iteration trace of an ADMM run and the empirical convergence checks
//! built on it.
//!
//! None of these checks stop a run. They estimate the constants of the
//! fixed-point argument from early iterations and report whether later
//! iterations respect the implied bounds.

use alloc::vec::Vec;

use crate::linalg::dist2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// RMSE of `xᵏ⁺¹` against the truth; NaN when no truth was given.
    pub rmse: f64,
    /// `‖xᵏ⁺¹ − xᵏ‖₂`
    pub primal_res: f64,
    /// `‖zᵏ⁺¹ − zᵏ‖₂`
    pub z_res: f64,
    /// `‖uᵏ⁺¹ − uᵏ‖₂`
    pub dual_res: f64,
    /// `‖D(xᵏ⁺¹ + uᵏ) − (xᵏ⁺¹ + uᵏ)‖₂ · λᵏ`
    pub denoiser_gap_times_lambda: f64,
    /// `f(xᵏ⁺¹)`
    pub f_value: f64,
    pub lambda: f64,
    /// `‖uᵏ⁺¹‖₂`
    pub u_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsTrace {
    pub records: Vec<IterationRecord>,
}

impl DiagnosticsTrace {
    pub fn push(&mut self, r: IterationRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

/// Outcome of one check: the observed worst ratio against its bound
/// (`≤ 1` passes) and whether it passed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub worst_ratio: f64,
    pub passed: bool,
}

impl Check {
    fn from_ratio(worst_ratio: f64) -> Self {
        Self {
            worst_ratio,
            passed: worst_ratio <= 1.0,
        }
    }

    fn vacuous() -> Self {
        Self {
            worst_ratio: 0.0,
            passed: true,
        }
    }
}

/// Largest relative deviation of the recorded `λᵏ` from `λ₀γᵏ`.
pub fn lambda_schedule_error(trace: &DiagnosticsTrace, lambda0: f64, gamma: f64) -> f64 {
    trace
        .records
        .iter()
        .map(|r| {
            let expect = lambda0 * libm::pow(gamma, r.iter as f64);
            (r.lambda - expect).abs() / expect
        })
        .fold(0.0, f64::max)
}

/// `‖xᵏ⁺¹ − xᵏ‖ λᵏ ≤ factor · max_{k<3}(‖xᵏ⁺¹ − xᵏ‖ λᵏ)`.
pub fn primal_scaled_bound(trace: &DiagnosticsTrace, factor: f64) -> Check {
    let scaled: Vec<f64> = trace.records.iter().map(|r| r.primal_res * r.lambda).collect();
    let c1 = scaled.iter().take(3).copied().fold(0.0, f64::max);
    ratio_against(&scaled, factor * c1)
}

/// `‖D(v) − v‖ λᵏ ≤ factor · (value at k = 0)`.
pub fn denoiser_gap_bound(trace: &DiagnosticsTrace, factor: f64) -> Check {
    let gaps: Vec<f64> = trace.records.iter().map(|r| r.denoiser_gap_times_lambda).collect();
    match gaps.first() {
        Some(&g0) => ratio_against(&gaps, factor * g0),
        None => Check::vacuous(),
    }
}

/// `‖zᵏ⁺¹ − zᵏ‖ ≤ C₂/λᵏ` with `C₂ = max_{k ≤ 1} ‖zᵏ⁺¹ − zᵏ‖ λᵏ`.
pub fn z_residual_bound(trace: &DiagnosticsTrace) -> Check {
    let scaled: Vec<f64> = trace.records.iter().map(|r| r.z_res * r.lambda).collect();
    let c2 = scaled.iter().take(2).copied().fold(0.0, f64::max);
    ratio_against(&scaled, c2)
}

/// `‖uᵏ⁺¹‖ ≤ M/λᵏ` with `M = factor · (denoiser gap · λ at k = 0)`.
pub fn dual_bound(trace: &DiagnosticsTrace, factor: f64) -> Check {
    let Some(first) = trace.records.first() else {
        return Check::vacuous();
    };
    let m = factor * first.denoiser_gap_times_lambda;
    let scaled: Vec<f64> = trace.records.iter().map(|r| r.u_norm * r.lambda).collect();
    ratio_against(&scaled, m)
}

/// Over the final half of the trace, each RMSE is at most `(1 + band)` times
/// its predecessor.
pub fn rmse_tail_monotone(trace: &DiagnosticsTrace, band: f64) -> Check {
    let rm: Vec<f64> = trace.records.iter().map(|r| r.rmse).collect();
    if rm.iter().any(|v| v.is_nan()) {
        return Check {
            worst_ratio: f64::NAN,
            passed: false,
        };
    }
    let start = rm.len() / 2;
    let mut worst: f64 = 0.0;
    for k in start.max(1)..rm.len() {
        worst = worst.max(rm[k] / (rm[k - 1] * (1.0 + band)));
    }
    if rm.len() < 2 {
        return Check::vacuous();
    }
    Check::from_ratio(worst)
}

/// Over the final half of the trace, the primal and dual residuals `lag`
/// iterations later are no larger than the current ones.
pub fn residual_tail_decay(trace: &DiagnosticsTrace, lag: usize) -> Check {
    let len = trace.len();
    let start = len / 2;
    if lag == 0 || start + lag >= len {
        return Check::vacuous();
    }
    let rec = &trace.records;
    let mut worst: f64 = 0.0;
    for k in start..len - lag {
        for (now, later) in [
            (rec[k].primal_res, rec[k + lag].primal_res),
            (rec[k].dual_res, rec[k + lag].dual_res),
        ] {
            let ratio = if now > 0.0 {
                later / now
            } else if later > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            worst = worst.max(ratio);
        }
    }
    Check::from_ratio(worst)
}

/// Cauchy test on stored iterates `x⁰, x¹, …`: for `k` in the final third
/// and every `n > k`, `‖xⁿ − xᵏ‖ ≤ Σ_{l=k}^{n−1} C₁/λˡ`, with `C₁` the largest
/// `‖xˡ⁺¹ − xˡ‖ λˡ` over the first three iterations, scaled by `factor`.
pub fn cauchy_bound(trace: &DiagnosticsTrace, iterates: &[Vec<f64>], factor: f64) -> Check {
    let iters = trace.len().min(iterates.len().saturating_sub(1));
    if iters < 3 {
        return Check::vacuous();
    }
    let c1 = factor
        * trace
            .records
            .iter()
            .take(3)
            .map(|r| r.primal_res * r.lambda)
            .fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for k in (2 * iters) / 3..iters {
        let mut bound = 0.0;
        for n in k + 1..=iters {
            bound += c1 / trace.records[n - 1].lambda;
            let observed = dist2(&iterates[n], &iterates[k]);
            if bound > 0.0 {
                worst = worst.max(observed / bound);
            } else if observed > 0.0 {
                worst = f64::INFINITY;
            }
        }
    }
    Check::from_ratio(worst)
}

fn ratio_against(values: &[f64], bound: f64) -> Check {
    if values.is_empty() {
        return Check::vacuous();
    }
    let worst = values.iter().copied().fold(0.0, f64::max);
    if bound > 0.0 {
        Check::from_ratio(worst / bound)
    } else if worst == 0.0 {
        Check::vacuous()
    } else {
        Check::from_ratio(f64::INFINITY)
    }
}

/// Everything above at the standard factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub lambda_error: f64,
    pub primal: Check,
    pub denoiser_gap: Check,
    pub z_residual: Check,
    pub dual: Check,
    pub rmse_tail: Check,
    pub residual_tail: Check,
}

pub const BOUND_FACTOR: f64 = 3.0;
pub const RMSE_BAND: f64 = 0.02;
pub const TAIL_LAG: usize = 5;

pub fn evaluate(trace: &DiagnosticsTrace, lambda0: f64, gamma: f64) -> ConvergenceReport {
    ConvergenceReport {
        lambda_error: lambda_schedule_error(trace, lambda0, gamma),
        primal: primal_scaled_bound(trace, BOUND_FACTOR),
        denoiser_gap: denoiser_gap_bound(trace, BOUND_FACTOR),
        z_residual: z_residual_bound(trace),
        dual: dual_bound(trace, BOUND_FACTOR),
        rmse_tail: rmse_tail_monotone(trace, RMSE_BAND),
        residual_tail: residual_tail_decay(trace, TAIL_LAG),
    }
}
