//! Run configuration in a flat `key = value` text format with dotted section
//! keys. Later assignments win, so a file can be followed by command-line
//! overrides. Every assignment is re-validated against the core crate's
//! constraints before anything runs.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use qabpnp_core::admm::SolverConfig;
use qabpnp_core::blur::GaussianPsf;
use qabpnp_core::denoise::ThresholdSpec;
use qabpnp_core::poisson::{NoiseSpec, DEFAULT_EPSILON, MAX_EPSILON};
use qabpnp_core::qab::QabConfig;

pub const OUTPUT_DIR_ENV: &str = "QABPNP_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    QabPnp,
    TvAdmm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::QabPnp => "qab_pnp",
            Method::TvAdmm => "tv_admm",
        }
    }
}

impl FromStr for Method {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "qab_pnp" => Ok(Method::QabPnp),
            "tv_admm" => Ok(Method::TvAdmm),
            _ => Err(()),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    /// Clean image for metrics; defaults to the one named by the sidecar.
    pub reference: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub psf_size: usize,
    pub psf_sigma: f64,
    pub snr_db: f64,
    pub seed: u64,
    pub epsilon: f64,
    pub qab: QabConfig,
    pub threshold: ThresholdSpec,
    pub use_omp: bool,
    /// Basis cache directory; no caching when unset.
    pub cache_dir: Option<PathBuf>,
    pub solver: SolverConfig,
    pub method: Method,
    pub tv_weight: f64,
    pub realizations: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            reference: None,
            output_dir: PathBuf::from("out"),
            psf_size: 4,
            psf_sigma: 3.0,
            snr_db: 20.0,
            seed: 0,
            epsilon: DEFAULT_EPSILON,
            qab: QabConfig::default(),
            threshold: ThresholdSpec::default(),
            use_omp: true,
            cache_dir: None,
            solver: SolverConfig::default(),
            method: Method::QabPnp,
            tv_weight: 0.05,
            realizations: 1,
        }
    }
}

pub const KEYS: &[&str] = &[
    "input",
    "reference",
    "output_dir",
    "psf.size",
    "psf.sigma",
    "noise.snr_db",
    "noise.seed",
    "noise.epsilon",
    "qab.planck",
    "qab.sigma_smooth",
    "qab.energy_cutoff",
    "qab.max_vectors",
    "qab.cache_dir",
    "threshold.s",
    "threshold.rho",
    "threshold.use_omp",
    "solver.lambda0",
    "solver.gamma",
    "solver.max_iters",
    "solver.xstep_iters",
    "solver.xstep_lr",
    "solver.stop_tol",
    "method",
    "tv_weight",
    "realizations",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        }),
    }
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl RunConfig {
    /// Assigns one key; does not validate cross-field constraints.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "input" => self.input = opt_path(v),
            "reference" => self.reference = opt_path(v),
            "output_dir" => self.output_dir = PathBuf::from(v),
            "psf.size" => self.psf_size = parse(key, v)?,
            "psf.sigma" => self.psf_sigma = parse(key, v)?,
            "noise.snr_db" => self.snr_db = parse(key, v)?,
            "noise.seed" => self.seed = parse(key, v)?,
            "noise.epsilon" => self.epsilon = parse(key, v)?,
            "qab.planck" => self.qab.planck = parse(key, v)?,
            "qab.sigma_smooth" => self.qab.sigma_smooth = parse(key, v)?,
            "qab.energy_cutoff" => self.qab.energy_cutoff = parse(key, v)?,
            "qab.max_vectors" => self.qab.max_vectors = parse(key, v)?,
            "qab.cache_dir" => self.cache_dir = opt_path(v),
            "threshold.s" => self.threshold.s = parse(key, v)?,
            "threshold.rho" => self.threshold.rho = parse(key, v)?,
            "threshold.use_omp" => self.use_omp = parse_bool(key, v)?,
            "solver.lambda0" => self.solver.lambda0 = parse(key, v)?,
            "solver.gamma" => self.solver.gamma = parse(key, v)?,
            "solver.max_iters" => self.solver.max_iters = parse(key, v)?,
            "solver.xstep_iters" => self.solver.xstep_iters = parse(key, v)?,
            "solver.xstep_lr" => self.solver.xstep_lr = parse(key, v)?,
            "solver.stop_tol" => self.solver.stop_tol = parse(key, v)?,
            "method" => self.method = parse(key, v)?,
            "tv_weight" => self.tv_weight = parse(key, v)?,
            "realizations" => self.realizations = parse(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// `key=value` as given on the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair.split_once('=').ok_or(ConfigError::Syntax { line: 0 })?;
        self.set(k, v)
    }

    /// Applies every assignment of a config file. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let wrap = |e: qabpnp_core::Error| ConfigError::Invalid(e.to_string());
        GaussianPsf::new(self.psf_size, self.psf_sigma).map_err(wrap)?;
        NoiseSpec::new(self.snr_db, self.seed).map_err(wrap)?;
        if !(self.epsilon > 0.0 && self.epsilon <= MAX_EPSILON) {
            return Err(ConfigError::Invalid(format!("noise.epsilon must lie in (0, {MAX_EPSILON}]")));
        }
        self.qab.validate().map_err(wrap)?;
        ThresholdSpec::new(self.threshold.s, self.threshold.rho).map_err(wrap)?;
        self.solver.validate().map_err(wrap)?;
        if !(self.tv_weight >= 0.0 && self.tv_weight.is_finite()) {
            return Err(ConfigError::Invalid("tv_weight must be nonnegative".into()));
        }
        if self.realizations == 0 {
            return Err(ConfigError::Invalid("realizations must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical text form; applying it to a default config reproduces `self`.
    pub fn to_text(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("input", path(&self.input));
        put("reference", path(&self.reference));
        put("output_dir", self.output_dir.display().to_string());
        put("psf.size", self.psf_size.to_string());
        put("psf.sigma", self.psf_sigma.to_string());
        put("noise.snr_db", self.snr_db.to_string());
        put("noise.seed", self.seed.to_string());
        put("noise.epsilon", self.epsilon.to_string());
        put("qab.planck", self.qab.planck.to_string());
        put("qab.sigma_smooth", self.qab.sigma_smooth.to_string());
        put("qab.energy_cutoff", self.qab.energy_cutoff.to_string());
        put("qab.max_vectors", self.qab.max_vectors.to_string());
        put("qab.cache_dir", path(&self.cache_dir));
        put("threshold.s", self.threshold.s.to_string());
        put("threshold.rho", self.threshold.rho.to_string());
        put("threshold.use_omp", self.use_omp.to_string());
        put("solver.lambda0", self.solver.lambda0.to_string());
        put("solver.gamma", self.solver.gamma.to_string());
        put("solver.max_iters", self.solver.max_iters.to_string());
        put("solver.xstep_iters", self.solver.xstep_iters.to_string());
        put("solver.xstep_lr", self.solver.xstep_lr.to_string());
        put("solver.stop_tol", self.solver.stop_tol.to_string());
        put("method", self.method.to_string());
        put("tv_weight", self.tv_weight.to_string());
        put("realizations", self.realizations.to_string());
        s
    }

    pub fn psf(&self) -> GaussianPsf {
        GaussianPsf::new(self.psf_size, self.psf_sigma).expect("validated PSF")
    }
}
