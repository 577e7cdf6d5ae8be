use nalgebra::DMatrix;
use proptest::prelude::*;

use rydchain::classical::classical_energy;
use rydchain::eigen::lowest_eigenpairs;
use rydchain::hamiltonian::{ising_couplings, ising_map_shift};
use rydchain::{Configuration, DiagonalCache, HamiltonianParams, LatticeSpec};

fn cache(n: usize) -> DiagonalCache {
    DiagonalCache::new(&LatticeSpec::standard(n).unwrap()).unwrap()
}

/// H assembled from single-site operators with Kronecker products; site 0 is
/// the least significant factor.
fn kronecker_hamiltonian(spec: &LatticeSpec, params: HamiltonianParams) -> DMatrix<f64> {
    let n = spec.n_sites;
    let site = |j: usize, op: &DMatrix<f64>| {
        (0..n).rev().fold(DMatrix::identity(1, 1), |m, k| {
            m.kronecker(&if k == j { op.clone() } else { DMatrix::identity(2, 2) })
        })
    };
    let number = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
    let flip = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let dim = 1 << n;
    let mut h = DMatrix::zeros(dim, dim);
    for j in 0..n {
        h -= site(j, &number) * params.detuning + site(j, &flip) * params.rabi;
        for i in 0..j {
            let u = spec.c6 / (spec.lattice_constant * (j - i) as f64).powi(6);
            h += site(i, &number) * site(j, &number) * u;
        }
    }
    h
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn dense_matches_kronecker_construction() {
    for n in 1..=6 {
        let c = cache(n);
        let params = HamiltonianParams::new(1.7, -3.2).unwrap();
        let diff = (c.dense(params) - kronecker_hamiltonian(c.spec(), params)).abs().max();
        assert!(diff < 1e-12, "N = {n}: {diff}");
    }
}

#[test]
fn ising_form_has_the_same_spectrum_up_to_a_shift() {
    let z = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
    let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    for n in 1..=4 {
        let c = cache(n);
        let spec = c.spec();
        for (rabi, detuning) in [(0.5, -4.0), (2.0, 30.0), (1.0, 120.0)] {
            let site = |j: usize, op: &DMatrix<f64>| {
                (0..n).rev().fold(DMatrix::identity(1, 1), |m, k| {
                    m.kronecker(&if k == j { op.clone() } else { DMatrix::identity(2, 2) })
                })
            };
            let ising = ising_couplings(spec, detuning);
            let dim = 1 << n;
            let mut h = DMatrix::zeros(dim, dim);
            for j in 0..n {
                h -= site(j, &z) * (0.5 * ising.longitudinal[j]) + site(j, &x) * rabi;
                for i in 0..j {
                    h += site(i, &z) * site(j, &z) * ising.zz[i][j];
                }
            }
            let shift = ising_map_shift(spec, detuning);
            let direct = sorted(
                c.dense(HamiltonianParams::new(rabi, detuning).unwrap())
                    .symmetric_eigenvalues()
                    .iter()
                    .copied()
                    .collect(),
            );
            let mapped = sorted(h.symmetric_eigenvalues().iter().map(|e| e + shift).collect());
            for (a, b) in direct.iter().zip(&mapped) {
                assert!((a - b).abs() < 1e-10, "N = {n}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn undriven_spectrum_is_classical() {
    for n in [3, 5] {
        let c = cache(n);
        let detuning = 40.0;
        let pairs = lowest_eigenpairs(&c, HamiltonianParams::new(0.0, detuning).unwrap(), c.dim(), &[]).unwrap();
        let classical = sorted(
            (0..c.dim() as u32)
                .map(|b| classical_energy(c.spec(), Configuration(b), detuning))
                .collect(),
        );
        for (a, b) in pairs.values.iter().zip(&classical) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

fn reflect_vector(v: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (b, x) in v.iter().enumerate() {
        out[Configuration(b as u32).reflect(n).index()] = *x;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn apply_is_symmetric(n in 1usize..=6, rabi in 0.0..4.0f64, detuning in -20.0..60.0f64, seed in any::<u64>()) {
        let c = cache(n);
        let params = HamiltonianParams::new(rabi, detuning).unwrap();
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let x: Vec<f64> = (0..c.dim()).map(|_| next()).collect();
        let y: Vec<f64> = (0..c.dim()).map(|_| next()).collect();
        let hx = c.apply_new(params, &x).unwrap();
        let hy = c.apply_new(params, &y).unwrap();
        let lhs: f64 = x.iter().zip(&hy).map(|(a, b)| a * b).sum();
        let rhs: f64 = hx.iter().zip(&y).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn apply_commutes_with_reflection(n in 1usize..=7, rabi in 0.0..4.0f64, detuning in -20.0..60.0f64, seed in any::<u64>()) {
        let c = cache(n);
        let params = HamiltonianParams::new(rabi, detuning).unwrap();
        let x: Vec<f64> = (0..c.dim()).map(|i| ((i as u64 ^ seed).wrapping_mul(0x9E3779B97F4A7C15) >> 40) as f64).collect();
        let direct = reflect_vector(&c.apply_new(params, &x).unwrap(), n);
        let mirrored = c.apply_new(params, &reflect_vector(&x, n)).unwrap();
        for (a, b) in direct.iter().zip(&mirrored) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }
}
