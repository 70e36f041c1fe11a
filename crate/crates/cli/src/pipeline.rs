//! Degradation and restoration driven by a [`RunConfig`], shared by the
//! subcommands and usable from tests.

use std::path::{Path, PathBuf};
use std::thread;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use qabpnp_core::admm::{run_tv_admm, run_with_denoiser, RunOutput};
use qabpnp_core::blur::BlurOperator;
use qabpnp_core::image::Image;
use qabpnp_core::metrics::QualityReport;
use qabpnp_core::poisson::{degrade, Degraded, NoiseSpec, PoissonProblem};

use crate::cache::{cached_denoiser, CacheStatus};
use crate::config::{Method, RunConfig};
use crate::seed::sub_seed;

pub fn operator(cfg: &RunConfig, width: usize, height: usize) -> Result<BlurOperator> {
    Ok(BlurOperator::new(cfg.psf(), width, height)?)
}

/// Noise stream of realization `index`.
pub fn noise_seed(cfg: &RunConfig, index: u64) -> u64 {
    sub_seed(cfg.seed, "noise", index)
}

pub fn degrade_image(cfg: &RunConfig, clean: &Image, seed: u64) -> Result<Degraded> {
    let op = operator(cfg, clean.width(), clean.height())?;
    Ok(degrade(clean.pixels(), &op, &NoiseSpec::new(cfg.snr_db, seed)?)?)
}

#[derive(Debug, Clone)]
pub struct Restoration {
    pub output: RunOutput,
    pub cache: CacheStatus,
    pub wall_time_s: f64,
}

impl Restoration {
    pub fn image(&self, width: usize, height: usize) -> Result<Image> {
        Ok(Image::new(width, height, self.output.x.clone())?)
    }
}

/// Runs the configured method on the observation `y` (photon counts over
/// scale, not clipped). `truth` only feeds the RMSE column of the trace.
pub fn restore(cfg: &RunConfig, y: &Image, truth: Option<&Image>) -> Result<Restoration> {
    if let Some(t) = truth {
        if !t.same_shape(y) {
            bail!(
                "reference is {}x{} but the observation is {}x{}",
                t.width(),
                t.height(),
                y.width(),
                y.height()
            );
        }
    }
    let start = Instant::now();
    let op = operator(cfg, y.width(), y.height())?;
    let prob = PoissonProblem::new(op, y.pixels().to_vec(), cfg.epsilon)?;
    let truth = truth.map(|t| t.pixels());
    let (output, cache) = match cfg.method {
        Method::QabPnp => {
            let (den, status) = cached_denoiser(y, &cfg.qab, cfg.threshold, cfg.use_omp, cfg.cache_dir.as_deref())?;
            (run_with_denoiser(&prob, &den, &cfg.solver, truth)?, status)
        }
        Method::TvAdmm => (run_tv_admm(&prob, &cfg.solver, cfg.tv_weight, truth)?, CacheStatus::Disabled),
    };
    Ok(Restoration {
        output,
        cache,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationResult {
    pub index: usize,
    pub seed: u64,
    pub achieved_snr_db: f64,
    pub quality: QualityReport,
    pub iterations: usize,
    pub basis_size: Option<usize>,
}

fn one_realization(cfg: &RunConfig, clean: &Image, index: usize) -> Result<RealizationResult> {
    let seed = noise_seed(cfg, index as u64);
    let d = degrade_image(cfg, clean, seed)?;
    let y = Image::new(clean.width(), clean.height(), d.y)?;
    let r = restore(cfg, &y, Some(clean))?;
    let restored = r.image(clean.width(), clean.height())?;
    Ok(RealizationResult {
        index,
        seed,
        achieved_snr_db: d.achieved_snr_db,
        quality: QualityReport::compare(clean, &restored)?,
        iterations: r.output.iterations(),
        basis_size: r.output.basis_size,
    })
}

/// `cfg.realizations` independent degrade-and-restore runs of `clean`, one
/// worker thread per available core. Results come back in index order.
pub fn run_realizations(cfg: &RunConfig, clean: &Image) -> Result<Vec<RealizationResult>> {
    let total = cfg.realizations;
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(total).max(1);
    let mut results: Vec<RealizationResult> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || {
                    (w..total)
                        .step_by(workers)
                        .map(|i| one_realization(cfg, clean, i).with_context(|| format!("realization {i}")))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("realization worker panicked"))
            .collect::<Result<Vec<Vec<_>>>>()
    })?
    .into_iter()
    .flatten()
    .collect();
    results.sort_by_key(|r| r.index);
    Ok(results)
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Metadata written next to a degraded image.
#[derive(Debug, Clone, PartialEq)]
pub struct Sidecar {
    pub achieved_snr_db: f64,
    pub scale: f64,
    pub seed: u64,
    pub noise_seed: u64,
    /// The PGM stores `y / peak`; `peak ≥ 1` keeps bright noisy pixels from
    /// clipping.
    pub peak: f64,
    pub reference: Option<PathBuf>,
}

impl Sidecar {
    pub fn path_for(image: &Path) -> PathBuf {
        image.with_extension("meta")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "achieved_snr_db = {}\nscale = {}\nseed = {}\nnoise_seed = {}\npeak = {}\n",
            self.achieved_snr_db, self.scale, self.seed, self.noise_seed, self.peak
        );
        if let Some(r) = &self.reference {
            s.push_str(&format!("reference = {}\n", r.display()));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Sidecar {
            achieved_snr_db: f64::NAN,
            scale: f64::NAN,
            seed: 0,
            noise_seed: 0,
            peak: 1.0,
            reference: None,
        };
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line.split_once('=').with_context(|| format!("bad sidecar line {line:?}"))?;
            let v = v.trim();
            let bad = || format!("bad sidecar value for {}", k.trim());
            match k.trim() {
                "achieved_snr_db" => out.achieved_snr_db = v.parse().with_context(bad)?,
                "scale" => out.scale = v.parse().with_context(bad)?,
                "seed" => out.seed = v.parse().with_context(bad)?,
                "noise_seed" => out.noise_seed = v.parse().with_context(bad)?,
                "peak" => out.peak = v.parse().with_context(bad)?,
                "reference" => out.reference = Some(PathBuf::from(v)),
                _ => {}
            }
        }
        if !(out.peak > 0.0 && out.peak.is_finite()) {
            bail!("sidecar peak must be positive");
        }
        Ok(out)
    }
}
