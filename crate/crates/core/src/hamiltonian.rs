//! Matrix-free many-body Hamiltonian
//!
//! ```text
//! H = -Δ Σ_j n_j + Σ_{i<j} U_ij n_i n_j - Ω Σ_j (σ_rg^j + σ_gr^j)
//! ```
//!
//! in the configuration basis. The diagonal is precomputed once per lattice;
//! the drive term is generated on the fly by flipping one bit at a time.
//! Energies are in 2π·MHz. Every matrix element is real, so the same apply
//! routine serves real eigensolver vectors and complex state vectors.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::LatticeSpec;
use crate::error::{domain, Result};

/// Below this dimension the apply loop runs on the calling thread.
const PARALLEL_MIN_DIM: usize = 1 << 12;

/// Instantaneous control values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HamiltonianParams {
    /// Ω in 2π·MHz, non-negative.
    pub rabi: f64,
    /// Δ in 2π·MHz.
    pub detuning: f64,
}

impl HamiltonianParams {
    pub fn new(rabi: f64, detuning: f64) -> Result<Self> {
        if !(rabi >= 0.0 && rabi.is_finite()) || !detuning.is_finite() {
            return domain(format!("invalid drive (rabi = {rabi}, detuning = {detuning}); rabi must be >= 0"));
        }
        Ok(Self { rabi, detuning })
    }
}

/// Scalar types the Hamiltonian can act on.
pub trait Amplitude: Copy + Send + Sync + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl Amplitude for f64 {}
impl Amplitude for Complex64 {}

/// Diagonal data shared by every H(t) on one lattice.
#[derive(Debug, Clone)]
pub struct DiagonalCache {
    spec: LatticeSpec,
    interaction_energy: Vec<f64>,
    excitation_count: Vec<u8>,
}

impl DiagonalCache {
    pub fn new(spec: &LatticeSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n_sites;
        let dim = spec.dim();
        let couplings: Vec<f64> = (0..n).map(|d| if d == 0 { 0.0 } else { spec.coupling_at(d) }).collect();
        let mut interaction_energy = vec![0.0; dim];
        let mut excitation_count = vec![0u8; dim];
        // Peel off the lowest excited site: E[c] = E[c without it] + Σ U(low, rest).
        for c in 1..dim {
            let low = c.trailing_zeros() as usize;
            let rest = c & (c - 1);
            let mut extra = 0.0;
            let mut bits = rest;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                extra += couplings[j - low];
                bits &= bits - 1;
            }
            interaction_energy[c] = interaction_energy[rest] + extra;
            excitation_count[c] = excitation_count[rest] + 1;
        }
        Ok(Self {
            spec: *spec,
            interaction_energy,
            excitation_count,
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn n_sites(&self) -> usize {
        self.spec.n_sites
    }

    pub fn dim(&self) -> usize {
        self.interaction_energy.len()
    }

    pub fn interaction_energy(&self) -> &[f64] {
        &self.interaction_energy
    }

    pub fn excitation_count(&self) -> &[u8] {
        &self.excitation_count
    }

    /// Diagonal of H at the given detuning.
    pub fn diagonal(&self, detuning: f64) -> Vec<f64> {
        self.interaction_energy
            .iter()
            .zip(&self.excitation_count)
            .map(|(&u, &n)| u - detuning * n as f64)
            .collect()
    }

    /// `out = H psi`.
    pub fn apply<T: Amplitude>(&self, params: HamiltonianParams, psi: &[T], out: &mut [T]) -> Result<()> {
        self.apply_terms(1.0, params.detuning, params.rabi, psi, out)
    }

    /// `out = (∂_t H) psi` for control rates `dΩ/dt` and `dΔ/dt`.
    ///
    /// Interactions are static, so only the detuning and drive operators
    /// survive, each scaled by its rate.
    pub fn apply_rate<T: Amplitude>(&self, rabi_rate: f64, detuning_rate: f64, psi: &[T], out: &mut [T]) -> Result<()> {
        self.apply_terms(0.0, detuning_rate, rabi_rate, psi, out)
    }

    /// `out[c] = (w·U[c] - Δ·n[c]) psi[c] - Ω Σ_j psi[c ^ 2^j]`.
    fn apply_terms<T: Amplitude>(&self, interaction_weight: f64, detuning: f64, rabi: f64, psi: &[T], out: &mut [T]) -> Result<()> {
        let dim = self.dim();
        if psi.len() != dim || out.len() != dim {
            return domain(format!(
                "dimension mismatch: Hamiltonian has {dim}, input {}, output {}",
                psi.len(),
                out.len()
            ));
        }
        let n = self.n_sites();
        let row = |c: usize| -> T {
            let diag = interaction_weight * self.interaction_energy[c] - detuning * self.excitation_count[c] as f64;
            let mut flips = T::default();
            for j in 0..n {
                flips = flips + psi[c ^ (1 << j)];
            }
            psi[c] * diag - flips * rabi
        };
        if dim >= PARALLEL_MIN_DIM {
            out.par_chunks_mut(1024).enumerate().for_each(|(chunk, slice)| {
                let base = chunk * 1024;
                for (offset, value) in slice.iter_mut().enumerate() {
                    *value = row(base + offset);
                }
            });
        } else {
            for (c, value) in out.iter_mut().enumerate() {
                *value = row(c);
            }
        }
        Ok(())
    }

    /// Convenience wrapper returning a fresh vector.
    pub fn apply_new<T: Amplitude>(&self, params: HamiltonianParams, psi: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::default(); psi.len()];
        self.apply(params, psi, &mut out)?;
        Ok(out)
    }

    /// Dense real matrix of H. Intended for small chains.
    pub fn dense(&self, params: HamiltonianParams) -> DMatrix<f64> {
        let dim = self.dim();
        let diag = self.diagonal(params.detuning);
        let mut m = DMatrix::zeros(dim, dim);
        for c in 0..dim {
            m[(c, c)] = diag[c];
            for j in 0..self.n_sites() {
                m[(c, c ^ (1 << j))] = -params.rabi;
            }
        }
        m
    }

    /// Upper bound on the spectral radius (Gershgorin).
    pub fn norm_bound(&self, params: HamiltonianParams) -> f64 {
        let off = params.rabi.abs() * self.n_sites() as f64;
        self.interaction_energy
            .iter()
            .zip(&self.excitation_count)
            .map(|(&u, &n)| (u - params.detuning * n as f64).abs() + off)
            .fold(0.0, f64::max)
    }
}

/// Constant offset between the spectrum of H and its spin-1/2 Ising form:
/// `-ΔN/2 + Σ_{i<j} U_ij / 4`.
pub fn ising_map_shift(spec: &LatticeSpec, detuning: f64) -> f64 {
    -0.5 * detuning * spec.n_sites as f64 + 0.25 * total_pair_interaction(spec)
}

pub fn total_pair_interaction(spec: &LatticeSpec) -> f64 {
    let n = spec.n_sites;
    (1..n).map(|d| (n - d) as f64 * spec.coupling_at(d)).sum()
}

/// Couplings of the equivalent Ising model
/// `-½ Σ h_j σ_z^j + Σ_{i<j} V_ij σ_z^i σ_z^j - Ω Σ σ_x^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingCouplings {
    /// h_j = Δ - ½ Σ_{i≠j} U_ij.
    pub longitudinal: Vec<f64>,
    /// V_ij = U_ij / 4, stored as a full symmetric matrix with zero diagonal.
    pub zz: Vec<Vec<f64>>,
}

pub fn ising_couplings(spec: &LatticeSpec, detuning: f64) -> IsingCouplings {
    let n = spec.n_sites;
    let u = |i: usize, j: usize| if i == j { 0.0 } else { spec.coupling_at(i.abs_diff(j)) };
    let longitudinal = (0..n).map(|j| detuning - 0.5 * (0..n).map(|i| u(i, j)).sum::<f64>()).collect();
    let zz = (0..n).map(|i| (0..n).map(|j| 0.25 * u(i, j)).collect()).collect();
    IsingCouplings { longitudinal, zz }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Configuration;
    use crate::classical::classical_energy;

    fn cache(n: usize) -> DiagonalCache {
        DiagonalCache::new(&LatticeSpec::standard(n).unwrap()).unwrap()
    }

    #[test]
    fn diagonal_cache_matches_direct_sum() {
        let c = cache(8);
        let spec = *c.spec();
        for bits in 0..c.dim() {
            let config = Configuration(bits as u32);
            let direct = spec.interaction_energy(config);
            assert!((c.interaction_energy()[bits] - direct).abs() < 1e-12);
            assert_eq!(c.excitation_count()[bits] as usize, config.excitation_count());
            let mirrored = c.interaction_energy()[config.reflect(8).index()];
            assert!((c.interaction_energy()[bits] - mirrored).abs() < 1e-12);
        }
        assert_eq!(c.interaction_energy()[0], 0.0);
    }

    #[test]
    fn zero_drive_is_classical() {
        let c = cache(5);
        let params = HamiltonianParams::new(0.0, 1.7).unwrap();
        for bits in [0usize, 1, 5, 21, 31] {
            let mut psi = vec![0.0; c.dim()];
            psi[bits] = 1.0;
            let out = c.apply_new(params, &psi).unwrap();
            let expected = classical_energy(c.spec(), Configuration(bits as u32), 1.7);
            for (idx, v) in out.iter().enumerate() {
                let want = if idx == bits { expected } else { 0.0 };
                assert!((v - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_atom_flip() {
        let c = cache(1);
        let out = c
            .apply_new(
                HamiltonianParams::new(1.0, 0.0).unwrap(),
                &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            )
            .unwrap();
        assert_eq!(out, vec![Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let c = cache(3);
        let mut out = vec![0.0; 8];
        assert!(c.apply(HamiltonianParams::default(), &[0.0; 4], &mut out).is_err());
        assert!(HamiltonianParams::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn shift_examples() {
        let one = LatticeSpec::standard(1).unwrap();
        assert_eq!(ising_map_shift(&one, 3.0), -1.5);
        let two = LatticeSpec::standard(2).unwrap();
        assert!((ising_map_shift(&two, 0.0) - 53.0 / 4.0).abs() < 1e-12);
        let seven = LatticeSpec::standard(7).unwrap();
        let mut direct = 0.0;
        for i in 1..=7 {
            for j in i + 1..=7 {
                direct += seven.pair_interaction(i, j).unwrap();
            }
        }
        assert!((ising_map_shift(&seven, 0.0) - direct / 4.0).abs() < 1e-12);
    }

    #[test]
    fn dense_matches_apply() {
        let c = cache(4);
        let params = HamiltonianParams::new(1.3, -0.4).unwrap();
        let psi: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let direct = c.apply_new(params, &psi).unwrap();
        let dense = c.dense(params) * nalgebra::DVector::from_vec(psi);
        for (a, b) in direct.iter().zip(dense.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_operator_has_no_interactions() {
        let c = cache(3);
        let mut psi = vec![0.0; 8];
        psi[0b101] = 1.0;
        let mut out = vec![0.0; 8];
        c.apply_rate(0.0, 2.0, &psi, &mut out).unwrap();
        assert!((out[0b101] + 4.0).abs() < 1e-15);
    }
}
