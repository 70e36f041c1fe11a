//! Plug-and-play ADMM for the Poisson likelihood.
//!
//! ```text
//! x ← argmin_{x ∈ [0,1]} f(x) + λ/2 ‖x − z + u‖²     (projected gradient)
//! z ← D(x + u)
//! u ← u + x − z
//! λ ← γ λ
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::denoise::{QabDenoiser, ThresholdSpec};
use crate::diagnostics::{DiagnosticsTrace, IterationRecord};
use crate::error::check_len;
use crate::image::Image;
use crate::linalg::{clamp_unit, dist2, dot, norm2};
use crate::metrics::rmse;
use crate::poisson::PoissonProblem;
use crate::qab::QabConfig;
use crate::tv::{tv_prox, TV_INNER_ITERS};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lambda0: f64,
    /// Penalty growth per iteration; must exceed 1.
    pub gamma: f64,
    pub max_iters: usize,
    /// Projected-gradient steps per x-update.
    pub xstep_iters: usize,
    /// First trial step of every x-update is `xstep_lr / λ`.
    pub xstep_lr: f64,
    /// Stop once `‖xᵏ⁺¹ − xᵏ‖ / ‖xᵏ‖` falls below this.
    pub stop_tol: f64,
    /// Keep every x iterate in the output (memory heavy).
    pub keep_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda0: 1.3,
            gamma: 1.01,
            max_iters: 50,
            xstep_iters: 20,
            xstep_lr: 1.0,
            stop_tol: 1e-4,
            keep_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0) || !self.lambda0.is_finite() {
            return Err(Error::InvalidConfig("solver.lambda0 must be positive"));
        }
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidConfig("solver.gamma must exceed 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("solver.max_iters must be positive"));
        }
        if self.xstep_iters == 0 {
            return Err(Error::InvalidConfig("solver.xstep_iters must be positive"));
        }
        if !(self.xstep_lr > 0.0) || !self.xstep_lr.is_finite() {
            return Err(Error::InvalidConfig("solver.xstep_lr must be positive"));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::InvalidConfig("solver.stop_tol must be nonnegative"));
        }
        Ok(())
    }

    /// `λᵏ = λ₀ γᵏ`.
    pub fn lambda_at(&self, k: usize) -> f64 {
        self.lambda0 * libm::pow(self.gamma, k as f64)
    }
}

/// The regularization step of the splitting.
pub trait Denoiser {
    fn denoise(&self, v: &[f64], lambda: f64) -> Result<Vec<f64>>;
}

impl Denoiser for QabDenoiser {
    fn denoise(&self, v: &[f64], _lambda: f64) -> Result<Vec<f64>> {
        self.apply(v)
    }
}

/// Returns its input untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityDenoiser;

impl Denoiser for IdentityDenoiser {
    fn denoise(&self, v: &[f64], _lambda: f64) -> Result<Vec<f64>> {
        Ok(v.to_vec())
    }
}

/// TV prox with weight `weight / λ`, clamped to the unit box.
#[derive(Debug, Clone, Copy)]
pub struct TvDenoiser {
    pub width: usize,
    pub height: usize,
    pub weight: f64,
}

impl Denoiser for TvDenoiser {
    fn denoise(&self, v: &[f64], lambda: f64) -> Result<Vec<f64>> {
        if self.weight == 0.0 {
            return Ok(v.to_vec());
        }
        let mut z = tv_prox(v, self.width, self.height, self.weight / lambda, TV_INNER_ITERS)?;
        clamp_unit(&mut z);
        Ok(z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub lambda: f64,
    pub k: usize,
}

impl AdmmState {
    /// `x = z = clamp(y)`, `u = 0`, `k = 0`.
    pub fn initial(y: &[f64], lambda0: f64) -> Self {
        let mut x = y.to_vec();
        clamp_unit(&mut x);
        Self {
            z: x.clone(),
            u: vec![0.0; y.len()],
            x,
            lambda: lambda0,
            k: 0,
        }
    }
}

/// Outcome of one x-update.
#[derive(Debug, Clone)]
pub struct XStepReport {
    pub x: Vec<f64>,
    /// Augmented objective at the start and after every accepted step.
    pub objective: Vec<f64>,
    pub initial_grad_norm: f64,
    pub final_grad_norm: f64,
}

/// Projected gradient on `L(x) = f(x) + λ/2 ‖x − target‖²` over the unit box.
///
/// The first trial step is `lr / λ`, later ones Barzilai-Borwein; every trial
/// is backtracked until the projected-gradient sufficient decrease holds, so
/// `L` never increases.
pub fn minimize_augmented(
    prob: &PoissonProblem,
    start: &[f64],
    target: &[f64],
    lambda: f64,
    iters: usize,
    lr: f64,
) -> Result<XStepReport> {
    check_len(prob.len(), start.len())?;
    check_len(prob.len(), target.len())?;
    let eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (f, mut g) = prob.value_and_gradient(x)?;
        let mut pen = 0.0;
        for ((gi, xi), ti) in g.iter_mut().zip(x).zip(target) {
            let d = xi - ti;
            pen += d * d;
            *gi += lambda * d;
        }
        let value = f + 0.5 * lambda * pen;
        if !value.is_finite() {
            return Err(Error::NumericalFailure("augmented objective is not finite"));
        }
        Ok((value, g))
    };

    let mut x = start.to_vec();
    clamp_unit(&mut x);
    let (mut value, mut grad) = eval(&x)?;
    let initial_grad_norm = norm2(&grad);
    let mut objective = vec![value];
    let mut step = lr / lambda;
    let mut trial = vec![0.0; x.len()];
    let mut d = vec![0.0; x.len()];

    for _ in 0..iters {
        let mut accepted = None;
        for _ in 0..60 {
            for i in 0..x.len() {
                trial[i] = (x[i] - step * grad[i]).clamp(0.0, 1.0);
                d[i] = trial[i] - x[i];
            }
            let dd = dot(&d, &d);
            if dd == 0.0 {
                break;
            }
            let (tv, tg) = eval(&trial)?;
            if tv <= value + dot(&grad, &d) + dd / (2.0 * step) {
                accepted = Some((tv, tg, dd));
                break;
            }
            step *= 0.5;
        }
        let Some((tv, tg, dd)) = accepted else {
            break;
        };
        // Barzilai-Borwein for the next trial step
        let gd: f64 = tg.iter().zip(&grad).zip(&d).map(|((a, b), di)| (a - b) * di).sum();
        step = if gd > 0.0 { (dd / gd).clamp(1e-10, 1e10) } else { step };
        core::mem::swap(&mut x, &mut trial);
        value = tv;
        grad = tg;
        objective.push(value);
    }
    Ok(XStepReport {
        x,
        final_grad_norm: norm2(&grad),
        objective,
        initial_grad_norm,
    })
}

pub fn x_step(state: &AdmmState, prob: &PoissonProblem, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let target: Vec<f64> = state.z.iter().zip(&state.u).map(|(z, u)| z - u).collect();
    Ok(minimize_augmented(prob, &state.x, &target, state.lambda, cfg.xstep_iters, cfg.xstep_lr)?.x)
}

/// `D(x + u)`
pub fn z_step<D: Denoiser + ?Sized>(x: &[f64], u: &[f64], lambda: f64, denoiser: &D) -> Result<Vec<f64>> {
    check_len(x.len(), u.len())?;
    let v: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + b).collect();
    denoiser.denoise(&v, lambda)
}

/// `u + x − z`
pub fn u_step(u: &[f64], x: &[f64], z: &[f64]) -> Vec<f64> {
    u.iter().zip(x).zip(z).map(|((ui, xi), zi)| ui + xi - zi).collect()
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub trace: DiagnosticsTrace,
    /// True when the relative-change test fired before `max_iters`.
    pub converged: bool,
    /// Size `T` of the adaptive basis, when one was used.
    pub basis_size: Option<usize>,
    /// `x⁰, x¹, …` when `keep_iterates` is set, else empty.
    pub iterates: Vec<Vec<f64>>,
}

impl RunOutput {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// The ADMM loop with an arbitrary denoiser.
pub fn run_pnp<D: Denoiser + ?Sized>(
    prob: &PoissonProblem,
    denoiser: &D,
    cfg: &SolverConfig,
    truth: Option<&[f64]>,
) -> Result<RunOutput> {
    cfg.validate()?;
    if let Some(t) = truth {
        check_len(prob.len(), t.len())?;
    }
    let mut state = AdmmState::initial(prob.observation(), cfg.lambda0);
    let mut trace = DiagnosticsTrace::default();
    let mut iterates = Vec::new();
    if cfg.keep_iterates {
        iterates.push(state.x.clone());
    }
    let mut converged = false;

    for k in 0..cfg.max_iters {
        state.k = k;
        state.lambda = cfg.lambda_at(k);
        let x_new = x_step(&state, prob, cfg)?;
        let v: Vec<f64> = x_new.iter().zip(&state.u).map(|(a, b)| a + b).collect();
        let z_new = denoiser.denoise(&v, state.lambda)?;
        let u_new = u_step(&state.u, &x_new, &z_new);

        let primal = dist2(&x_new, &state.x);
        let x_norm = norm2(&state.x);
        trace.push(IterationRecord {
            iter: k,
            rmse: match truth {
                Some(t) => rmse(&x_new, t)?,
                None => f64::NAN,
            },
            primal_res: primal,
            z_res: dist2(&z_new, &state.z),
            dual_res: dist2(&u_new, &state.u),
            denoiser_gap_times_lambda: dist2(&z_new, &v) * state.lambda,
            f_value: prob.neg_log_likelihood(&x_new)?,
            lambda: state.lambda,
            u_norm: norm2(&u_new),
        });
        state.x = x_new;
        state.z = z_new;
        state.u = u_new;
        if cfg.keep_iterates {
            iterates.push(state.x.clone());
        }
        let rel = if x_norm > 0.0 { primal / x_norm } else { primal };
        if rel < cfg.stop_tol {
            converged = true;
            break;
        }
    }
    Ok(RunOutput {
        x: state.x,
        z: state.z,
        u: state.u,
        trace,
        converged,
        basis_size: None,
        iterates,
    })
}

/// QAB-PnP: the basis is built once from the observation, then the ADMM
/// loop runs with the QAB denoiser.
pub fn run(
    prob: &PoissonProblem,
    qab: &QabConfig,
    spec: ThresholdSpec,
    use_omp: bool,
    cfg: &SolverConfig,
    truth: Option<&[f64]>,
) -> Result<RunOutput> {
    let op = prob.operator();
    let observation = Image::new(op.width(), op.height(), prob.observation().to_vec())?;
    let denoiser = QabDenoiser::from_observation(&observation, qab, spec, use_omp)?;
    run_with_denoiser(prob, &denoiser, cfg, truth)
}

/// QAB-PnP with a prebuilt (e.g. cached) denoiser.
pub fn run_with_denoiser(
    prob: &PoissonProblem,
    denoiser: &QabDenoiser,
    cfg: &SolverConfig,
    truth: Option<&[f64]>,
) -> Result<RunOutput> {
    let mut out = run_pnp(prob, denoiser, cfg, truth)?;
    out.basis_size = Some(denoiser.basis().len());
    Ok(out)
}

/// The same loop with an isotropic TV prox in place of the QAB denoiser.
pub fn run_tv_admm(prob: &PoissonProblem, cfg: &SolverConfig, tv_weight: f64, truth: Option<&[f64]>) -> Result<RunOutput> {
    if !(tv_weight >= 0.0) || !tv_weight.is_finite() {
        return Err(Error::InvalidConfig("tv_weight must be nonnegative"));
    }
    let op = prob.operator();
    let denoiser = TvDenoiser {
        width: op.width(),
        height: op.height(),
        weight: tv_weight,
    };
    run_pnp(prob, &denoiser, cfg, truth)
}
