//! Acceptance suite. Every test prints one `PASS` / `FAIL` line (written
//! past the harness capture so it always shows) and then asserts.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use qabpnp::commands::load_observation;
use qabpnp::config::{Method, RunConfig};
use qabpnp::pgm::load_image;
use qabpnp::pipeline::{degrade_image, mean_std, noise_seed, restore, run_realizations};
use qabpnp::seed::sub_seed;
use qabpnp_core::blur::{BlurOperator, GaussianPsf};
use qabpnp_core::denoise::{denoise_unclamped, ThresholdSpec};
use qabpnp_core::diagnostics::{denoiser_gap_bound, primal_scaled_bound, rmse_tail_monotone};
use qabpnp_core::image::{make_synthetic, Image};
use qabpnp_core::metrics::psnr;
use qabpnp_core::poisson::PoissonProblem;
use qabpnp_core::qab::{
    assemble_hamiltonian, eigendecompose, eigendecompose_with, prepare_potential, FilterOptions, LanczosOptions,
    QabConfig, Solver,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const FIXTURES: [&str; 3] = ["chirp", "shapes", "rings"];

fn report(id: u32, name: &str, passed: bool, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[{tag}] acceptance {id}: {name} ({detail})");
    let _ = out.flush();
}

fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.pgm"))
}

fn observation(cfg: &RunConfig, clean: &Image, seed: u64) -> Image {
    let d = degrade_image(cfg, clean, seed).unwrap();
    Image::new(clean.width(), clean.height(), d.y).unwrap()
}

fn psnr_of(clean: &Image, x: &[f64]) -> f64 {
    psnr(clean, &Image::new(clean.width(), clean.height(), x.to_vec()).unwrap()).unwrap()
}

// ---------------------------------------------------------------- 1

fn projector_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let n = a.first().or(b.first()).map_or(0, |v| v.len());
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pa: f64 = a.iter().map(|v| v[i] * v[j]).sum();
            let pb: f64 = b.iter().map(|v| v[i] * v[j]).sum();
            acc += (pa - pb) * (pa - pb);
        }
    }
    acc.sqrt()
}

#[test]
fn criterion_1_eigensolver_oracle() {
    let cfg = QabConfig::default();
    let pot = prepare_potential(&make_synthetic(16).unwrap(), cfg.sigma_smooth).unwrap();
    let h = assemble_hamiltonian(&pot, cfg.planck).unwrap();
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(256, 256, &h.to_dense()));
    let mut order: Vec<usize> = (0..256).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors: Vec<Vec<f64>> = order.iter().map(|&j| eig.eigenvectors.column(j).iter().copied().collect()).collect();
    let below = values.iter().filter(|&&e| e < cfg.energy_cutoff).count();

    let mut passed = below > 0;
    let mut detail = format!("{below} pairs below cutoff");
    for (label, solver) in [
        ("lanczos", Solver::Lanczos(LanczosOptions::default())),
        ("filtered", Solver::Filtered(FilterOptions::default())),
    ] {
        let start = Instant::now();
        let basis = eigendecompose_with(&h, cfg.energy_cutoff, cfg.max_vectors, &solver).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let rel = basis
            .energies()
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        let dist = projector_distance(basis.vectors(), &vectors[..below]);
        passed &= basis.len() == below && rel <= 1e-8 && dist <= 1e-6 && secs < 5.0;
        detail += &format!("; {label}: T={} max rel err {rel:.1e}, projector dist {dist:.1e}, {secs:.2}s", basis.len());
    }
    report(1, "iterative eigenpairs match dense oracle", passed, &detail);
    assert!(passed, "{detail}");
}

// ---------------------------------------------------------------- 2

// potential i / 8 at pixel i (row-major), planck 4
#[rustfmt::skip]
const STENCIL_ORACLE: [[f64; 9]; 9] = [
    [ 8.0,   -4.0,    0.0,   -4.0,    0.0,   0.0,    0.0,    0.0,    0.0],
    [-4.0,   12.125, -4.0,    0.0,   -4.0,   0.0,    0.0,    0.0,    0.0],
    [ 0.0,   -4.0,    8.25,   0.0,    0.0,  -4.0,    0.0,    0.0,    0.0],
    [-4.0,    0.0,    0.0,   12.375, -4.0,   0.0,   -4.0,    0.0,    0.0],
    [ 0.0,   -4.0,    0.0,   -4.0,   16.5,  -4.0,    0.0,   -4.0,    0.0],
    [ 0.0,    0.0,   -4.0,    0.0,   -4.0,  12.625,  0.0,    0.0,   -4.0],
    [ 0.0,    0.0,    0.0,   -4.0,    0.0,   0.0,    8.75,  -4.0,    0.0],
    [ 0.0,    0.0,    0.0,    0.0,   -4.0,   0.0,   -4.0,   12.875, -4.0],
    [ 0.0,    0.0,    0.0,    0.0,    0.0,  -4.0,    0.0,   -4.0,    9.0],
];

#[test]
fn criterion_2_hamiltonian_stencil() {
    let pot = Image::from_fn(3, 3, |r, c| (r * 3 + c) as f64 / 8.0).unwrap();
    let dense = assemble_hamiltonian(&pot, 4.0).unwrap().to_dense();
    let mismatches = (0..81).filter(|&k| dense[k] != STENCIL_ORACLE[k / 9][k % 9]).count();
    let passed = mismatches == 0;
    report(2, "3x3 Hamiltonian equals hand-written oracle", passed, &format!("{mismatches} of 81 entries differ"));
    assert!(passed);
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_3_gradient() {
    let mut rng = StdRng::seed_from_u64(31);
    let mut worst_fd: f64 = 0.0;
    for _ in 0..10 {
        let op = BlurOperator::new(GaussianPsf::new(3, 1.1).unwrap(), 6, 6).unwrap();
        let y: Vec<f64> = (0..36).map(|_| rng.random_range(0.0..2.0)).collect();
        let x: Vec<f64> = (0..36).map(|_| rng.random_range(0.05..1.0)).collect();
        let prob = PoissonProblem::new(op, y, 1e-6).unwrap();
        let g = prob.gradient(&x).unwrap();
        let h = 1e-6;
        for i in 0..36 {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fd = (prob.neg_log_likelihood(&xp).unwrap() - prob.neg_log_likelihood(&xm).unwrap()) / (2.0 * h);
            worst_fd = worst_fd.max((fd - g[i]).abs() / g[i].abs().max(1.0));
        }
    }

    // nonnegative PSF summing to one: ‖H‖₂ = 1 and ‖Hᵀ1‖₂ = √n
    let n = 64;
    let op = BlurOperator::new(GaussianPsf::new(4, 3.0).unwrap(), 8, 8).unwrap();
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
    let eps = 1e-6;
    let bound = y.iter().map(|v| v * v).sum::<f64>().sqrt() / eps + (n as f64).sqrt();
    let prob = PoissonProblem::new(op, y, eps).unwrap();
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..100 {
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let g = prob.gradient(&x).unwrap();
        worst_ratio = worst_ratio.max(g.iter().map(|v| v * v).sum::<f64>().sqrt() / bound);
    }
    let passed = worst_fd <= 1e-5 && worst_ratio <= 1.0;
    report(
        3,
        "gradient vs central differences and norm bound",
        passed,
        &format!("worst FD rel err {worst_fd:.1e}, worst ‖∇f‖/bound {worst_ratio:.2e}"),
    );
    assert!(passed);
}

// ---------------------------------------------------------------- 4

#[test]
fn criterion_4_omp_equivalence() {
    let img = Image::from_fn(4, 4, |r, c| ((r * 5 + c * 3) % 7) as f64 / 7.0).unwrap();
    let cfg = QabConfig::default();
    let h = assemble_hamiltonian(&prepare_potential(&img, 1.0).unwrap(), cfg.planck).unwrap();
    let basis = eigendecompose(&h, f64::INFINITY, 16).unwrap();
    let keep_all = ThresholdSpec::new(16, 1.0).unwrap();
    let mut rng = StdRng::seed_from_u64(4);
    let v: Vec<f64> = (0..16).map(|_| rng.random::<f64>()).collect();
    let mut worst: f64 = 0.0;
    for use_omp in [false, true] {
        let out = denoise_unclamped(&v, &basis, &keep_all, use_omp).unwrap();
        worst = worst.max(out.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }

    let clean = make_synthetic(64).unwrap();
    let mut run = RunConfig::default();
    let y = observation(&run, &clean, noise_seed(&run, 0));
    run.use_omp = true;
    let with = psnr_of(&clean, &restore(&run, &y, Some(&clean)).unwrap().output.x);
    run.use_omp = false;
    let without = psnr_of(&clean, &restore(&run, &y, Some(&clean)).unwrap().output.x);
    let gap = (with - without).abs();
    let passed = basis.len() == 16 && worst <= 1e-8 && gap <= 1.7;
    report(
        4,
        "complete basis reproduces input; OMP vs full projection",
        passed,
        &format!("completeness err {worst:.1e}; PSNR with OMP {with:.2} dB, without {without:.2} dB, gap {gap:.2} dB"),
    );
    assert!(passed);
}

// ---------------------------------------------------------------- 5

#[test]
fn criterion_5_method_ordering() {
    let start = Instant::now();
    let clean = make_synthetic(64).unwrap();
    let base = RunConfig {
        realizations: 20,
        ..RunConfig::default()
    };

    // TV weight picked on a held-out noise draw
    let tune = observation(&base, &clean, sub_seed(base.seed, "tune", 0));
    let mut best = (f64::NEG_INFINITY, 0.0);
    for w in [0.03, 0.05, 0.07] {
        let cfg = RunConfig {
            method: Method::TvAdmm,
            tv_weight: w,
            ..base.clone()
        };
        let p = psnr_of(&clean, &restore(&cfg, &tune, Some(&clean)).unwrap().output.x);
        if p > best.0 {
            best = (p, w);
        }
    }

    let qab = run_realizations(&base, &clean).unwrap();
    let tv_cfg = RunConfig {
        method: Method::TvAdmm,
        tv_weight: best.1,
        ..base.clone()
    };
    let tv = run_realizations(&tv_cfg, &clean).unwrap();
    let (qm, qs) = mean_std(&qab.iter().map(|r| r.quality.psnr_db).collect::<Vec<_>>());
    let (tm, ts) = mean_std(&tv.iter().map(|r| r.quality.psnr_db).collect::<Vec<_>>());
    let secs = start.elapsed().as_secs_f64();
    let passed = qab.len() == 20 && tv.len() == 20 && qm - tm >= 1.0 && secs <= 600.0;
    report(
        5,
        "QAB-PnP beats TV-ADMM by at least 1 dB over 20 realizations",
        passed,
        &format!(
            "QAB {qm:.2}±{qs:.2} dB, TV (weight {}) {tm:.2}±{ts:.2} dB, margin {:.2} dB, {secs:.0}s",
            best.1,
            qm - tm
        ),
    );
    assert!(passed);
}

// ---------------------------------------------------------------- 6

#[test]
fn criterion_6_convergence_diagnostics() {
    let clean = make_synthetic(64).unwrap();
    let cfg = RunConfig::default();
    let y = observation(&cfg, &clean, noise_seed(&cfg, 0));
    let out = restore(&cfg, &y, Some(&clean)).unwrap().output;
    let trace = &out.trace;

    let mut lambda = cfg.solver.lambda0;
    let mut lambda_err: f64 = 0.0;
    for r in &trace.records {
        lambda_err = lambda_err.max((r.lambda - lambda).abs() / lambda);
        lambda *= cfg.solver.gamma;
    }
    let indexed = trace.records.iter().enumerate().all(|(k, r)| r.iter == k);
    let primal = primal_scaled_bound(trace, 3.0);
    let gap = denoiser_gap_bound(trace, 3.0);
    let tail = rmse_tail_monotone(trace, 0.02);
    // accumulated rounding of the running product stays within a few ulps per step
    let lambda_ok = indexed && lambda_err <= 1e-13;
    let passed = lambda_ok && primal.passed && gap.passed && tail.passed && trace.len() >= 2;
    report(
        6,
        "lambda schedule, primal / gap boundedness, RMSE tail",
        passed,
        &format!(
            "{} iterations; lambda rel err {lambda_err:.1e}; primal ratio {:.3}; gap ratio {:.3}; rmse tail ratio {:.3}",
            trace.len(),
            primal.worst_ratio,
            gap.worst_ratio,
            tail.worst_ratio
        ),
    );
    assert!(passed);
}

// ---------------------------------------------------------------- 7

#[test]
fn criterion_7_iteration_count() {
    let cfg = RunConfig::default();
    let mut passed = true;
    let mut detail = Vec::new();
    for name in FIXTURES {
        let clean = load_image(&fixture_path(name)).unwrap();
        let y = observation(&cfg, &clean, noise_seed(&cfg, 0));
        let out = restore(&cfg, &y, Some(&clean)).unwrap().output;
        passed &= out.converged && out.iterations() <= 30;
        detail.push(format!("{name} {} it{}", out.iterations(), if out.converged { "" } else { " (not converged)" }));
    }
    report(7, "default config converges in at most 30 iterations", passed, &detail.join(", "));
    assert!(passed);
}

// ---------------------------------------------------------------- 8

fn cli(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_qabpnp"))
        .args(args)
        .env_remove("QABPNP_OUTPUT_DIR")
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success(), "qabpnp {args:?} failed");
}

#[test]
fn criterion_8_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let fixture = fixture_path("rings");
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let deg = tmp.path().join(run).join("deg");
        let out = tmp.path().join(run).join("out");
        cli(&["degrade", "-i", fixture.to_str().unwrap(), "-o", deg.to_str().unwrap(), "--seed", "7"]);
        let degraded = deg.join("degraded.pgm");
        cli(&["deconv", "-i", degraded.to_str().unwrap(), "-o", out.to_str().unwrap(), "--seed", "7"]);
        let read = |p: PathBuf| std::fs::read(p).unwrap();
        files.push([read(degraded), read(out.join("restored.pgm")), read(out.join("trace.csv"))]);
    }
    let same = files[0] == files[1];
    let passed = same && !files[0][2].is_empty();
    report(8, "identical CLI runs give byte-identical outputs", passed, "degraded.pgm, restored.pgm, trace.csv");
    assert!(passed);

    // the observation read back from disk drives the run, not the in-memory one
    let cfg = RunConfig::default();
    let (y, truth) = load_observation(&cfg, &tmp.path().join("a/deg/degraded.pgm")).unwrap();
    assert!(truth.is_some());
    assert_eq!(y.width(), 64);
}

// ---------------------------------------------------------------- 9

#[test]
fn criterion_9_snr_targeting() {
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for name in FIXTURES {
        let clean = load_image(&fixture_path(name)).unwrap();
        for snr in [10.0, 15.0, 20.0] {
            let cfg = RunConfig {
                snr_db: snr,
                ..RunConfig::default()
            };
            let d = degrade_image(&cfg, &clean, noise_seed(&cfg, 0)).unwrap();
            // direct circular convolution from the PSF weights
            let psf = cfg.psf();
            let (w, h) = (clean.width() as isize, clean.height() as isize);
            let c = psf.center() as isize;
            let mut signal = 0.0;
            let mut noise = 0.0;
            for pr in 0..h {
                for pc in 0..w {
                    let mut b = 0.0;
                    for qr in 0..psf.size() {
                        for qc in 0..psf.size() {
                            let sr = (pr - (qr as isize - c)).rem_euclid(h);
                            let sc = (pc - (qc as isize - c)).rem_euclid(w);
                            b += psf.weight(qr, qc) * clean.get(sr as usize, sc as usize);
                        }
                    }
                    let yv = d.y[(pr * w + pc) as usize];
                    signal += b * b;
                    noise += (yv - b) * (yv - b);
                }
            }
            let measured = 10.0 * (signal / noise).log10();
            worst = worst.max((measured - snr).abs());
            detail.push(format!("{name}@{snr}: {measured:.3}"));
        }
    }
    let passed = worst <= 0.25;
    report(9, "degradation SNR within 0.25 dB of request", passed, &format!("worst |err| {worst:.3} dB; {}", detail.join(", ")));
    assert!(passed);
}
