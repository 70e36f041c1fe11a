use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use qabpnp_core::image::{make_synthetic, Fixture, Image};
use qabpnp_core::qab::{
    assemble_hamiltonian, build_basis, eigendecompose, eigendecompose_with, prepare_potential, FilterOptions, Hamiltonian,
    LanczosOptions, QabBasis, QabConfig, Solver,
};
use qabpnp_core::Error;

#[rustfmt::skip]
const FLAT_3X3_PLANCK_1: [[f64; 9]; 9] = [
    [ 2.0, -1.0,  0.0, -1.0,  0.0,  0.0,  0.0,  0.0,  0.0],
    [-1.0,  3.0, -1.0,  0.0, -1.0,  0.0,  0.0,  0.0,  0.0],
    [ 0.0, -1.0,  2.0,  0.0,  0.0, -1.0,  0.0,  0.0,  0.0],
    [-1.0,  0.0,  0.0,  3.0, -1.0,  0.0, -1.0,  0.0,  0.0],
    [ 0.0, -1.0,  0.0, -1.0,  4.0, -1.0,  0.0, -1.0,  0.0],
    [ 0.0,  0.0, -1.0,  0.0, -1.0,  3.0,  0.0,  0.0, -1.0],
    [ 0.0,  0.0,  0.0, -1.0,  0.0,  0.0,  2.0, -1.0,  0.0],
    [ 0.0,  0.0,  0.0,  0.0, -1.0,  0.0, -1.0,  3.0, -1.0],
    [ 0.0,  0.0,  0.0,  0.0,  0.0, -1.0,  0.0, -1.0,  2.0],
];

// potential i / 8 at pixel i, planck 4
#[rustfmt::skip]
const RAMP_3X3_PLANCK_4: [[f64; 9]; 9] = [
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

fn assert_matches(h: &Hamiltonian, oracle: &[[f64; 9]; 9]) {
    let dense = h.to_dense();
    for i in 0..9 {
        for j in 0..9 {
            assert_eq!(dense[i * 9 + j], oracle[i][j], "entry ({i}, {j})");
            assert_eq!(h.get(i, j), oracle[i][j]);
        }
    }
}

#[test]
fn three_by_three_flat_stencil() {
    let h = assemble_hamiltonian(&Image::zeros(3, 3).unwrap(), 1.0).unwrap();
    assert_matches(&h, &FLAT_3X3_PLANCK_1);
}

#[test]
fn three_by_three_ramp_stencil() {
    let pot = Image::from_fn(3, 3, |r, c| (r * 3 + c) as f64 / 8.0).unwrap();
    let h = assemble_hamiltonian(&pot, 4.0).unwrap();
    assert_matches(&h, &RAMP_3X3_PLANCK_4);
}

#[test]
fn sparsity_and_symmetry_on_rectangle() {
    let pot = Image::from_fn(7, 5, |r, c| ((r * 7 + c) % 5) as f64 / 4.0).unwrap();
    let h = assemble_hamiltonian(&pot, 2.5).unwrap();
    let n = 35;
    let dense = h.to_dense();
    for i in 0..n {
        assert!(h.row(i).len() <= 5);
        for j in 0..n {
            assert_eq!(dense[i * n + j], dense[j * n + i]);
            if i != j {
                assert!(dense[i * n + j] == 0.0 || dense[i * n + j] == -2.5);
            }
        }
    }
}

fn nalgebra_eigen(h: &Hamiltonian) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = h.width() * h.height();
    let m = DMatrix::from_row_slice(n, n, &h.to_dense());
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = order.iter().map(|&j| eig.eigenvectors.column(j).iter().copied().collect()).collect();
    (values, vectors)
}

fn projector_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let n = a[0].len();
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

fn check_against_oracle(h: &Hamiltonian, cutoff: f64, solver: &Solver) -> QabBasis {
    let (values, vectors) = nalgebra_eigen(h);
    let basis = eigendecompose_with(h, cutoff, usize::MAX, solver).unwrap();
    let expected = values.iter().take_while(|&&e| e < cutoff).count();
    assert_eq!(basis.len(), expected);
    for (got, want) in basis.energies().iter().zip(&values) {
        assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "{got} vs {want}");
    }
    assert!(projector_distance(basis.vectors(), &vectors[..expected]) <= 1e-6);
    assert!(basis.orthonormality_error() <= 1e-8);
    assert!(basis.max_relative_residual(h) <= 1e-8);
    basis
}

fn sixteen_square() -> Hamiltonian {
    let pot = prepare_potential(&make_synthetic(16).unwrap(), 2.0).unwrap();
    assemble_hamiltonian(&pot, 1.0).unwrap()
}

#[test]
fn every_solver_matches_dense_oracle() {
    let h = sixteen_square();
    // a cutoff well inside a spectral gap
    let (values, _) = nalgebra_eigen(&h);
    let k = values.iter().position(|&e| e > 1.5).unwrap();
    let cutoff = 0.5 * (values[k - 1] + values[k]);
    check_against_oracle(&h, cutoff, &Solver::Dense);
    check_against_oracle(&h, cutoff, &Solver::Lanczos(LanczosOptions::default()));
    check_against_oracle(&h, cutoff, &Solver::Filtered(FilterOptions::default()));
}

#[test]
fn lanczos_on_eight_by_eight() {
    let pot = Fixture::Rings.render(16).unwrap();
    let small = Image::from_fn(8, 8, |r, c| pot.get(2 * r, 2 * c)).unwrap();
    let h = assemble_hamiltonian(&small, 0.7).unwrap();
    let (values, _) = nalgebra_eigen(&h);
    let cutoff = 0.5 * (values[20] + values[21]);
    check_against_oracle(&h, cutoff, &Solver::Lanczos(LanczosOptions::default()));
}

#[test]
fn flat_ground_state() {
    let h = assemble_hamiltonian(&Image::zeros(4, 4).unwrap(), 1.0).unwrap();
    let (values, vectors) = nalgebra_eigen(&h);
    assert!(values[0].abs() < 1e-12);
    let sign = vectors[0][0].signum();
    assert!(vectors[0].iter().all(|v| (v * sign - 0.25).abs() < 1e-12));
    let basis = eigendecompose(&h, 0.1, 16).unwrap();
    assert_eq!(basis.len(), 1);
    assert!(basis.energies()[0].abs() < 1e-12);
}

#[test]
fn cutoff_below_spectrum() {
    let h = sixteen_square();
    let (lower, _) = h.spectral_bounds();
    let cutoff = lower.min(0.0) - 0.1;
    assert_eq!(
        eigendecompose_with(&h, cutoff, 10, &Solver::Lanczos(LanczosOptions::default())),
        Err(Error::EmptyBasis { cutoff })
    );
    assert_eq!(eigendecompose(&h, cutoff, 10), Err(Error::EmptyBasis { cutoff }));
}

#[test]
fn degenerate_flat_spectrum_subspaces() {
    // the flat square has exactly repeated eigenvalues (k, l) and (l, k)
    let h = assemble_hamiltonian(&Image::zeros(12, 12).unwrap(), 1.0).unwrap();
    let (values, vectors) = nalgebra_eigen(&h);
    let k = values.iter().position(|&e| e > 0.9).unwrap();
    let cutoff = 0.5 * (values[k - 1] + values[k]);
    let basis = eigendecompose_with(&h, cutoff, usize::MAX, &Solver::Lanczos(LanczosOptions::default())).unwrap();
    assert_eq!(basis.len(), k);
    assert!(projector_distance(basis.vectors(), &vectors[..k]) <= 1e-6);
}

#[test]
fn planck_doubling_does_not_grow_basis() {
    let img = make_synthetic(32).unwrap();
    for planck in [0.5, 1.0, 2.0] {
        let t1 = build_basis(&img, &QabConfig { planck, sigma_smooth: 3.0, energy_cutoff: 1.5, max_vectors: 1024 })
            .unwrap()
            .len();
        let t2 = build_basis(&img, &QabConfig { planck: 2.0 * planck, sigma_smooth: 3.0, energy_cutoff: 1.5, max_vectors: 1024 })
            .map(|b| b.len())
            .unwrap_or(0);
        assert!(t2 <= t1, "planck {planck}: {t1} -> {t2}");
    }
}

#[test]
fn full_size_basis_invariants() {
    let img = make_synthetic(64).unwrap();
    let cfg = QabConfig::default();
    let basis = build_basis(&img, &cfg).unwrap();
    assert!(basis.len() > 100);
    assert!(basis.energies().windows(2).all(|w| w[0] <= w[1]));
    assert!(*basis.energies().last().unwrap() < cfg.energy_cutoff);
    assert!(basis.orthonormality_error() <= 1e-8);
    let pot = prepare_potential(&img, cfg.sigma_smooth).unwrap();
    let h = assemble_hamiltonian(&pot, cfg.planck).unwrap();
    assert!(basis.max_relative_residual(&h) <= 1e-8);
}

#[test]
fn cap_keeps_lowest_pairs() {
    let h = sixteen_square();
    let (values, _) = nalgebra_eigen(&h);
    let basis = eigendecompose_with(&h, f64::INFINITY, 7, &Solver::Filtered(FilterOptions::default())).unwrap();
    assert_eq!(basis.len(), 7);
    for (g, w) in basis.energies().iter().zip(&values) {
        assert!((g - w).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn basis_size_monotone_in_cutoff(a in 0.05f64..3.0, b in 0.05f64..3.0) {
        let pot = prepare_potential(&make_synthetic(16).unwrap(), 1.5).unwrap();
        let small = Image::from_fn(8, 8, |r, c| pot.get(2 * r, 2 * c)).unwrap();
        let h = assemble_hamiltonian(&small, 0.6).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let count = |c: f64| eigendecompose(&h, c, 1024).map(|b| b.len()).unwrap_or(0);
        prop_assert!(count(lo) <= count(hi));
    }
}
