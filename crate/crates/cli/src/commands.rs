//! The subcommands. Each writes its artifacts under the configured output
//! directory and echoes a short summary on stdout.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qabpnp_core::image::{Fixture, Image};
use qabpnp_core::metrics::{psnr, ssim, QualityReport};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::pgm::{load_image, save_image};
use crate::pipeline::{degrade_image, mean_std, noise_seed, restore, run_realizations, Sidecar};
use crate::trace::trace_csv;

pub const SUMMARY_HEADER: &str = "method,psnr,ssim,rmse,iterations,wall_time_s";
pub const SWEEP_HEADER: &str = "value,psnr,ssim,T,wall_time_s";
pub const REALIZATIONS_HEADER: &str = "realization,seed,achieved_snr_db,psnr,ssim,rmse,iterations,T";

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn prepare_dir(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))
}

fn require_input(cfg: &RunConfig) -> Result<&Path, CliError> {
    cfg.input
        .as_deref()
        .ok_or_else(|| CliError::Usage("no input image; pass --input or set `input`".into()))
}

fn fmt_metric(v: f64) -> String {
    format!("{v:.6}")
}

pub fn cmd_synth(cfg: &RunConfig, fixture: Fixture, size: usize, out: Option<PathBuf>) -> Result<(), CliError> {
    let img = fixture.render(size).map_err(|e| CliError::Usage(e.to_string()))?;
    let path = match out {
        Some(p) => p,
        None => {
            prepare_dir(cfg)?;
            cfg.output_dir.join(format!("{}.pgm", fixture.name()))
        }
    };
    save_image(&path, &img)?;
    println!("{}", path.display());
    Ok(())
}

pub fn cmd_degrade(cfg: &RunConfig) -> Result<(), CliError> {
    let input = require_input(cfg)?;
    let clean = load_image(input)?;
    prepare_dir(cfg)?;
    let seed = noise_seed(cfg, 0);
    let d = degrade_image(cfg, &clean, seed)?;
    let peak = d.y.iter().copied().fold(1.0, f64::max);
    let stored = Image::new(clean.width(), clean.height(), d.y.iter().map(|v| v / peak).collect())
        .context("building the degraded image")?;
    let clean_path = cfg.output_dir.join("clean.pgm");
    let degraded_path = cfg.output_dir.join("degraded.pgm");
    save_image(&clean_path, &clean)?;
    save_image(&degraded_path, &stored)?;
    let sidecar = Sidecar {
        achieved_snr_db: d.achieved_snr_db,
        scale: d.scale,
        seed: cfg.seed,
        noise_seed: seed,
        peak,
        reference: Some(PathBuf::from("clean.pgm")),
    };
    write(&Sidecar::path_for(&degraded_path), sidecar.to_text())?;
    write(&cfg.output_dir.join("psf.txt"), cfg.psf().to_string())?;
    write(&cfg.output_dir.join("config.txt"), cfg.to_text())?;
    println!("achieved_snr_db={:.4} scale={} seed={}", d.achieved_snr_db, d.scale, cfg.seed);
    Ok(())
}

/// Observation and, when known, the clean reference for a degraded file.
pub fn load_observation(cfg: &RunConfig, input: &Path) -> Result<(Image, Option<Image>)> {
    let stored = load_image(input)?;
    let meta_path = Sidecar::path_for(input);
    let meta = if meta_path.exists() {
        let text = fs::read_to_string(&meta_path).with_context(|| format!("reading {}", meta_path.display()))?;
        Some(Sidecar::parse(&text).with_context(|| format!("parsing {}", meta_path.display()))?)
    } else {
        None
    };
    let peak = meta.as_ref().map_or(1.0, |m| m.peak);
    let y = Image::new(stored.width(), stored.height(), stored.pixels().iter().map(|v| v * peak).collect())?;
    let reference = cfg.reference.clone().or_else(|| {
        let rel = meta.as_ref()?.reference.clone()?;
        Some(meta_path.parent().unwrap_or(Path::new(".")).join(rel))
    });
    let truth = reference.map(|p| load_image(&p)).transpose()?;
    Ok((y, truth))
}

fn quality_or_nan(truth: Option<&Image>, restored: &Image) -> Result<QualityReport> {
    match truth {
        Some(t) => Ok(QualityReport::compare(t, restored)?),
        None => Ok(QualityReport {
            psnr_db: f64::NAN,
            ssim: f64::NAN,
            rmse: f64::NAN,
        }),
    }
}

pub fn cmd_deconv(cfg: &RunConfig) -> Result<(), CliError> {
    let input = require_input(cfg)?;
    let (y, truth) = load_observation(cfg, input)?;
    if cfg.realizations > 1 && truth.is_none() {
        return Err(CliError::Usage("realizations > 1 needs a clean reference".into()));
    }
    prepare_dir(cfg)?;
    let r = restore(cfg, &y, truth.as_ref())?;
    let restored = r.image(y.width(), y.height())?;
    let q = quality_or_nan(truth.as_ref(), &restored)?;
    save_image(&cfg.output_dir.join("restored.pgm"), &restored)?;
    write(&cfg.output_dir.join("trace.csv"), trace_csv(&r.output.trace))?;
    write(&cfg.output_dir.join("config.txt"), cfg.to_text())?;
    let line = format!(
        "{},{},{},{},{},{:.3}",
        cfg.method,
        fmt_metric(q.psnr_db),
        fmt_metric(q.ssim),
        fmt_metric(q.rmse),
        r.output.iterations(),
        r.wall_time_s
    );
    write(&cfg.output_dir.join("summary.csv"), format!("{SUMMARY_HEADER}\n{line}\n"))?;
    println!("{line}");

    if cfg.realizations > 1 {
        let clean = truth.expect("checked above");
        let results = run_realizations(cfg, &clean)?;
        let mut csv = format!("{REALIZATIONS_HEADER}\n");
        for res in &results {
            let _ = writeln!(
                csv,
                "{},{},{:.4},{},{},{},{},{}",
                res.index,
                res.seed,
                res.achieved_snr_db,
                fmt_metric(res.quality.psnr_db),
                fmt_metric(res.quality.ssim),
                fmt_metric(res.quality.rmse),
                res.iterations,
                res.basis_size.map(|t| t.to_string()).unwrap_or_default()
            );
        }
        write(&cfg.output_dir.join("realizations.csv"), csv)?;
        let col = |f: fn(&QualityReport) -> f64| mean_std(&results.iter().map(|r| f(&r.quality)).collect::<Vec<_>>());
        let (pm, ps) = col(|q| q.psnr_db);
        let (sm, ss) = col(|q| q.ssim);
        let (rm, rs) = col(|q| q.rmse);
        let stats = format!(
            "method={} realizations={} psnr={pm:.2}±{ps:.2} ssim={sm:.4}±{ss:.4} rmse={rm:.5}±{rs:.5}\n",
            cfg.method,
            results.len()
        );
        write(&cfg.output_dir.join("summary_stats.txt"), &stats)?;
        print!("{stats}");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    #[value(name = "energy_cutoff")]
    EnergyCutoff,
    Planck,
    Lambda0,
    S,
    Rho,
}

impl SweepParam {
    pub fn key(self) -> &'static str {
        match self {
            SweepParam::EnergyCutoff => "qab.energy_cutoff",
            SweepParam::Planck => "qab.planck",
            SweepParam::Lambda0 => "solver.lambda0",
            SweepParam::S => "threshold.s",
            SweepParam::Rho => "threshold.rho",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::EnergyCutoff => "energy_cutoff",
            SweepParam::Planck => "planck",
            SweepParam::Lambda0 => "lambda0",
            SweepParam::S => "s",
            SweepParam::Rho => "rho",
        }
    }
}

pub fn cmd_sweep(cfg: &RunConfig, param: SweepParam, values: &[String]) -> Result<(), CliError> {
    let input = require_input(cfg)?;
    let mut configs = Vec::with_capacity(values.len());
    for v in values {
        let mut c = cfg.clone();
        c.set(param.key(), v)?;
        c.validate()?;
        configs.push(c);
    }
    let (y, truth) = load_observation(cfg, input)?;
    prepare_dir(cfg)?;
    let mut csv = format!("{SWEEP_HEADER}\n");
    println!("{SWEEP_HEADER}");
    for (v, c) in values.iter().zip(&configs) {
        let r = restore(c, &y, truth.as_ref())?;
        let restored = r.image(y.width(), y.height())?;
        let q = quality_or_nan(truth.as_ref(), &restored)?;
        let row = format!(
            "{},{},{},{},{:.3}",
            v.trim(),
            fmt_metric(q.psnr_db),
            fmt_metric(q.ssim),
            r.output.basis_size.map(|t| t.to_string()).unwrap_or_default(),
            r.wall_time_s
        );
        println!("{row}");
        csv.push_str(&row);
        csv.push('\n');
    }
    write(&cfg.output_dir.join(format!("sweep_{}.csv", param.name())), csv)?;
    Ok(())
}

pub fn cmd_metrics(reference: &Path, test: &Path) -> Result<(), CliError> {
    let a = load_image(reference)?;
    let b = load_image(test)?;
    if !a.same_shape(&b) {
        return Err(CliError::Runtime(anyhow::anyhow!("images differ in size")));
    }
    let p = psnr(&a, &b).map_err(anyhow::Error::from)?;
    let s = ssim(&a, &b).map_err(anyhow::Error::from)?;
    let r = QualityReport::compare(&a, &b).map_err(anyhow::Error::from)?.rmse;
    println!("{},{},{}", fmt_metric(p), fmt_metric(s), fmt_metric(r));
    Ok(())
}
