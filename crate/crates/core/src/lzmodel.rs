//! Two-level Landau-Zener model with constant Ω and Δ(t) = b (t − T/2).
//!
//! States are written on the basis (|g⟩, |e⟩) with
//!
//! ```text
//! H_LZ = [[ Δ/2, −Ω ],
//!         [ −Ω,  −Δ/2 ]].
//! ```
//!
//! A single-atom chain has H = H_LZ − Δ/2: same eigenvectors, energies
//! shifted by −Δ/2.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{LatticeSpec, StateVector};
use crate::error::{domain, Result};
use crate::hamiltonian::DiagonalCache;
use crate::ode::Tolerances;
use crate::propagate::{evolve, EvolveOptions};
use crate::pulse::LinearSweep;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLevelParams {
    /// Ω in 2π·MHz.
    pub rabi: f64,
    /// b in 2π·MHz/μs.
    pub slope: f64,
    /// T in μs.
    pub duration: f64,
}

impl TwoLevelParams {
    pub fn new(rabi: f64, slope: f64, duration: f64) -> Result<Self> {
        let p = Self { rabi, slope, duration };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if !ok(self.rabi) || !ok(self.slope) || !ok(self.duration) {
            return domain(format!(
                "two-level parameters must be positive (rabi = {}, slope = {}, duration = {})",
                self.rabi, self.slope, self.duration
            ));
        }
        Ok(())
    }

    /// Sweep of duration T through ±`half_range` around resonance.
    pub fn spanning(rabi: f64, half_range: f64, duration: f64) -> Result<Self> {
        Self::new(rabi, 2.0 * half_range / duration, duration)
    }

    pub fn detuning(&self, t: f64) -> f64 {
        self.slope * (t - 0.5 * self.duration)
    }

    pub fn sweep(&self) -> Result<LinearSweep> {
        LinearSweep::new(self.rabi, self.slope, self.duration)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.duration).contains(&t) {
            return domain(format!("t = {t} outside [0, {}]", self.duration));
        }
        Ok(())
    }
}

/// One instantaneous eigenstate on (|g⟩, |e⟩).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelState {
    pub energy: f64,
    pub vector: [f64; 2],
}

/// Ground and excited eigenstates of H_LZ at time `t`:
/// E = ∓R with R = √(Δ²/4 + Ω²) and |α⟩ ∝ (Δ/2 ∓ R) |g⟩ − Ω |e⟩.
pub fn analytic_eigenstates(params: &TwoLevelParams, t: f64) -> Result<[TwoLevelState; 2]> {
    params.check_time(t)?;
    let delta = params.detuning(t);
    let omega = params.rabi;
    let r = (0.25 * delta * delta + omega * omega).sqrt();
    let make = |energy: f64, top: f64| {
        let m = (top * top + omega * omega).sqrt();
        TwoLevelState {
            energy,
            vector: [top / m, -omega / m],
        }
    };
    Ok([make(-r, 0.5 * delta - r), make(r, 0.5 * delta + r)])
}

/// η = bΩ / (8 (Δ²/4 + Ω²)^{3/2}), divided by 2π to turn the rate in
/// 2π·MHz/μs against energies in 2π·MHz into a dimensionless amplitude.
pub fn dressing_coefficient(params: &TwoLevelParams, t: f64) -> Result<f64> {
    params.check_time(t)?;
    let delta = params.detuning(t);
    let r2 = 0.25 * delta * delta + params.rabi * params.rabi;
    Ok(params.slope * params.rabi / (8.0 * r2.powf(1.5)) / (2.0 * PI))
}

/// (|α₀⟩ + iη|α₁⟩) / √(1 + η²).
pub fn dressed_state(params: &TwoLevelParams, t: f64) -> Result<[Complex64; 2]> {
    let [ground, excited] = analytic_eigenstates(params, t)?;
    let eta = dressing_coefficient(params, t)?;
    let norm = (1.0 + eta * eta).sqrt();
    Ok([0, 1].map(|i| Complex64::new(ground.vector[i], eta * excited.vector[i]) / norm))
}

/// Populations along an exact two-level run started in |g⟩.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoLevelRun {
    pub times: Vec<f64>,
    pub ground_energy: Vec<f64>,
    pub excited_energy: Vec<f64>,
    /// |⟨α₀|ψ⟩|².
    pub adiabatic: Vec<f64>,
    /// |⟨α₀′|ψ⟩|².
    pub dressed: Vec<f64>,
}

impl TwoLevelRun {
    /// 1 − |⟨α₀|ψ⟩|² at the avoided crossing t = T/2, linearly interpolated
    /// between the neighbouring samples.
    pub fn dip_depth(&self) -> f64 {
        let mid = 0.5 * self.times.last().copied().unwrap_or(0.0);
        let i = self.times.partition_point(|&t| t < mid).clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = if t1 > t0 { (mid - t0) / (t1 - t0) } else { 1.0 };
        1.0 - ((1.0 - w) * self.adiabatic[i - 1] + w * self.adiabatic[i])
    }
}

pub fn simulate_two_level(params: &TwoLevelParams, samples: usize) -> Result<TwoLevelRun> {
    params.validate()?;
    let cache = DiagonalCache::new(&LatticeSpec::new(1, 1.0, 1.0)?)?;
    let options = EvolveOptions {
        sample_count: samples,
        tolerances: Tolerances {
            rtol: 1e-12,
            atol: 1e-14,
            ..Tolerances::default()
        },
    };
    let traj = evolve(&cache, &params.sweep()?, &StateVector::ground(1), &options)?;
    let mut run = TwoLevelRun {
        times: traj.times.clone(),
        ground_energy: Vec::with_capacity(samples),
        excited_energy: Vec::with_capacity(samples),
        adiabatic: Vec::with_capacity(samples),
        dressed: Vec::with_capacity(samples),
    };
    for (&t, state) in traj.times.iter().zip(&traj.states) {
        let [ground, excited] = analytic_eigenstates(params, t)?;
        let psi = state.amplitudes();
        let dressed = dressed_state(params, t)?;
        run.ground_energy.push(ground.energy);
        run.excited_energy.push(excited.energy);
        run.adiabatic
            .push((psi[0] * ground.vector[0] + psi[1] * ground.vector[1]).norm_sqr());
        run.dressed
            .push((dressed[0].conj() * psi[0] + dressed[1].conj() * psi[1]).norm_sqr());
    }
    Ok(run)
}
