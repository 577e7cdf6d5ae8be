//! Observables and estimators built on top of trajectories and spectra.

use std::collections::HashSet;
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{enumerate_subspace, symmetric_single_excitation, Configuration, LatticeSpec, StateVector};
use crate::classical::{min_energy_config, target_excitations};
use crate::eigen::lowest_eigenpairs;
use crate::error::{domain, Result};
use crate::hamiltonian::{DiagonalCache, HamiltonianParams};
use crate::ode::Tolerances;
use crate::propagate::{evolve_final, Trajectory};
use crate::pulse::PulseSchedule;
use crate::spectrum::GapReport;

/// Relative Rabi frequency used in place of Ω = 0 in phase scans.
pub const CLASSICAL_LIMIT_RABI: f64 = 1e-6;

/// P_n(t): total population with exactly n excitations, indexed `[n][sample]`.
pub fn excitation_class_populations(trajectory: &Trajectory) -> Vec<Vec<f64>> {
    let n_sites = trajectory.n_sites();
    let mut out = vec![Vec::with_capacity(trajectory.states.len()); n_sites + 1];
    for state in &trajectory.states {
        let mut classes = vec![0.0; n_sites + 1];
        for (c, a) in state.amplitudes().iter().enumerate() {
            classes[c.count_ones() as usize] += a.norm_sqr();
        }
        for (series, p) in out.iter_mut().zip(classes) {
            series.push(p);
        }
    }
    out
}

/// Summed population of a set of distinct configurations at every sample.
pub fn path_populations(trajectory: &Trajectory, path: &[Configuration]) -> Result<Vec<f64>> {
    let mut seen = HashSet::with_capacity(path.len());
    let dim = trajectory.final_state().dim();
    for c in path {
        if !seen.insert(c.bits()) {
            return domain(format!("configuration {c} appears twice in the path"));
        }
        if c.index() >= dim {
            return domain(format!("configuration {c} does not fit a {dim}-dimensional basis"));
        }
    }
    Ok(trajectory
        .states
        .iter()
        .map(|s| path.iter().map(|&c| s.population(c)).sum())
        .collect())
}

/// Empty chain, every single excitation, then the minimal-energy
/// configuration of each n up to (N+1)/2.
pub fn lowest_energy_path(spec: &LatticeSpec) -> Result<Vec<Configuration>> {
    let mut path = vec![Configuration::EMPTY];
    path.extend(enumerate_subspace(spec, 1)?);
    for n in 2..=target_excitations(spec) {
        let c = min_energy_config(spec, n)?;
        if !path.contains(&c) {
            path.push(c);
        }
    }
    Ok(path)
}

/// Every configuration with excitations only on odd sites (1, 3, 5, ...) and
/// at most (N+1)/2 of them, including the empty chain.
pub fn odd_site_path(spec: &LatticeSpec) -> Result<Vec<Configuration>> {
    let odd_mask: u32 = (0..spec.n_sites).step_by(2).map(|j| 1u32 << j).sum();
    let mut path = Vec::new();
    for n in 0..=target_excitations(spec) {
        path.extend(enumerate_subspace(spec, n)?.into_iter().filter(|c| c.bits() & !odd_mask == 0));
    }
    Ok(path)
}

/// ⟨σ_rr^j⟩(t) for sites j = 1..N, indexed `[j - 1][sample]`.
pub fn rydberg_density(trajectory: &Trajectory) -> Vec<Vec<f64>> {
    let n_sites = trajectory.n_sites();
    let mut out = vec![Vec::with_capacity(trajectory.states.len()); n_sites];
    for state in &trajectory.states {
        let mut density = vec![0.0; n_sites];
        for (c, a) in state.amplitudes().iter().enumerate() {
            let p = a.norm_sqr();
            let mut bits = c;
            while bits != 0 {
                density[bits.trailing_zeros() as usize] += p;
                bits &= bits - 1;
            }
        }
        for (series, d) in out.iter_mut().zip(density) {
            series.push(d);
        }
    }
    out
}

/// Landau-Zener estimate `1 - exp(-2π·2π (δE/2)² / |Ė01|)` with δE in 2π·MHz
/// and the slope in 2π·MHz/μs.
pub fn lz_fidelity(min_gap: f64, slope: f64) -> Result<f64> {
    if !(slope > 0.0) || !slope.is_finite() {
        return domain(format!("gap slope must be positive, got {slope}"));
    }
    if !(min_gap >= 0.0) || !min_gap.is_finite() {
        return domain(format!("minimal gap must be non-negative, got {min_gap}"));
    }
    let half = 0.5 * min_gap;
    Ok(-(-TAU * TAU * half * half / slope).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityReport {
    pub n_sites: usize,
    pub duration: f64,
    pub n_target: usize,
    /// |⟨target|ψ(T)⟩|².
    pub exact_fidelity: f64,
    pub lz_fidelity: f64,
    pub min_gap: f64,
    pub slope: f64,
}

/// The alternating target configuration with (N+1)/2 excitations.
pub fn target_configuration(spec: &LatticeSpec) -> Result<Configuration> {
    min_energy_config(spec, target_excitations(spec))
}

/// Exact and Landau-Zener fidelities for one schedule, given its gap report.
pub fn fidelity_report(
    cache: &DiagonalCache,
    schedule: &PulseSchedule,
    gap: &GapReport,
    tolerances: &Tolerances,
) -> Result<FidelityReport> {
    let spec = cache.spec();
    let target = target_configuration(spec)?;
    let psi = evolve_final(cache, schedule, &StateVector::ground(spec.n_sites), tolerances)?;
    Ok(FidelityReport {
        n_sites: spec.n_sites,
        duration: schedule.total_duration,
        n_target: target.excitation_count(),
        exact_fidelity: psi.population(target),
        lz_fidelity: lz_fidelity(gap.min_gap, gap.slope)?,
        min_gap: gap.min_gap,
        slope: gap.slope,
    })
}

/// Fidelity reports over several durations of one schedule shape. The gap
/// trace is computed once (for `gap`'s duration) and rescaled to each T.
pub fn fidelity_sweep(
    cache: &DiagonalCache,
    schedule: &PulseSchedule,
    gap: &GapReport,
    durations: &[f64],
    tolerances: &Tolerances,
) -> Result<Vec<FidelityReport>> {
    durations
        .par_iter()
        .map(|&t| {
            let s = schedule.with_duration(t)?;
            fidelity_report(cache, &s, &gap.rescaled(t), tolerances)
        })
        .collect()
}

/// A named probe state for phase scans.
#[derive(Debug, Clone)]
pub struct Probe {
    pub label: String,
    pub state: StateVector,
}

/// |0⟩, the symmetric single excitation, the minimal configuration of each
/// n = 2..=(N+1)/2, and the fully excited chain.
pub fn default_probes(spec: &LatticeSpec) -> Result<Vec<Probe>> {
    let n_sites = spec.n_sites;
    let mut probes = vec![
        Probe {
            label: "empty".into(),
            state: StateVector::ground(n_sites),
        },
        Probe {
            label: "sym1".into(),
            state: symmetric_single_excitation(spec),
        },
    ];
    for n in 2..=target_excitations(spec) {
        let c = min_energy_config(spec, n)?;
        probes.push(Probe {
            label: format!("min{n}:{}", c.to_bitstring(n_sites)),
            state: StateVector::basis(n_sites, c),
        });
    }
    let full = Configuration::full(n_sites);
    if !probes.iter().any(|p| p.state.population(full) > 0.5) {
        probes.push(Probe {
            label: "full".into(),
            state: StateVector::basis(n_sites, full),
        });
    }
    Ok(probes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseScanPoint {
    pub rabi: f64,
    pub detuning: f64,
    /// |⟨probe|α₀⟩|² in probe order.
    pub overlaps: Vec<f64>,
}

/// Ground-state overlaps with each probe over a Ω × Δ grid (Ω outer).
///
/// Rabi values below `CLASSICAL_LIMIT_RABI · max(Ω)` are raised to that floor
/// so the ground state stays unique.
pub fn phase_scan(cache: &DiagonalCache, rabi_grid: &[f64], detuning_grid: &[f64], probes: &[Probe]) -> Result<Vec<PhaseScanPoint>> {
    if rabi_grid.is_empty() || detuning_grid.is_empty() {
        return domain("phase scan grids must be non-empty");
    }
    if let Some(p) = probes.iter().find(|p| p.state.dim() != cache.dim()) {
        return domain(format!(
            "probe {} has dimension {}, expected {}",
            p.label,
            p.state.dim(),
            cache.dim()
        ));
    }
    let rabi_max = rabi_grid.iter().fold(0.0f64, |m, &x| m.max(x));
    let floor = if rabi_max > 0.0 {
        CLASSICAL_LIMIT_RABI * rabi_max
    } else {
        CLASSICAL_LIMIT_RABI
    };
    let points: Vec<(f64, f64)> = rabi_grid.iter().flat_map(|&r| detuning_grid.iter().map(move |&d| (r, d))).collect();
    points
        .par_iter()
        .map(|&(rabi, detuning)| {
            let params = HamiltonianParams::new(rabi.max(floor), detuning)?;
            let ground = lowest_eigenpairs(cache, params, 1, &[])?;
            let v = &ground.vectors[0];
            let overlaps = probes
                .iter()
                .map(|p| {
                    p.state
                        .amplitudes()
                        .iter()
                        .zip(v)
                        .map(|(a, &x)| a.conj() * x)
                        .sum::<num_complex::Complex64>()
                        .norm_sqr()
                })
                .collect();
            Ok(PhaseScanPoint { rabi, detuning, overlaps })
        })
        .collect()
}

/// δE/(2Ω_max) ≈ prefactor / N^exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub prefactor: f64,
    pub exponent: f64,
    pub n_values: Vec<usize>,
    /// RMS residual of log(δE/(2Ω_max)).
    pub residual: f64,
}

/// Least-squares fit of log(δE/(2Ω_max)) against log N.
pub fn fit_gap_scaling(points: &[(usize, f64)], rabi_max: f64) -> Result<ScalingFit> {
    if points.len() < 3 {
        return domain(format!("gap scaling fit needs at least 3 points, got {}", points.len()));
    }
    if !(rabi_max > 0.0) {
        return domain(format!("rabi_max must be positive, got {rabi_max}"));
    }
    if let Some((n, g)) = points.iter().find(|(n, g)| !(*g > 0.0) || *n == 0) {
        return domain(format!("gap point (N = {n}, gap = {g}) must have N >= 1 and a positive gap"));
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, g)| (g / (2.0 * rabi_max)).ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return domain("gap scaling fit needs at least two distinct N");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / m).sqrt();
    Ok(ScalingFit {
        prefactor: intercept.exp(),
        exponent: -slope,
        n_values: points.iter().map(|(n, _)| *n).collect(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lz_limits() {
        assert_eq!(lz_fidelity(0.0, 3.0).unwrap(), 0.0);
        assert!((lz_fidelity(1.0, 1e-9).unwrap() - 1.0).abs() < 1e-15);
        assert!(lz_fidelity(1.0, 0.0).is_err());
        assert!(lz_fidelity(1.0, -1.0).is_err());
        assert!(lz_fidelity(-1.0, 1.0).is_err());
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let points: Vec<(usize, f64)> = [5, 7, 9, 11, 13, 15]
            .iter()
            .map(|&n| (n, 4.0 * 2.2182 / (n as f64).powf(0.8014)))
            .collect();
        let fit = fit_gap_scaling(&points, 2.0).unwrap();
        assert!((fit.exponent - 0.8014).abs() < 1e-6);
        assert!((fit.prefactor - 2.2182).abs() < 1e-6);
        assert!(fit.residual < 1e-12);
        assert!(fit_gap_scaling(&points[..2], 2.0).is_err());
        let mut bad = points.clone();
        bad[0].1 = 0.0;
        assert!(fit_gap_scaling(&bad, 2.0).is_err());
    }

    #[test]
    fn paths_for_seven_sites() {
        let spec = LatticeSpec::standard(7).unwrap();
        let low = lowest_energy_path(&spec).unwrap();
        assert_eq!(low.len(), 1 + 7 + 3);
        assert!(low.contains(&Configuration::from_sites(7, &[1, 4, 7]).unwrap()));
        let odd = odd_site_path(&spec).unwrap();
        // C(4,0) + C(4,1) + C(4,2) + C(4,3) + C(4,4)
        assert_eq!(odd.len(), 16);
        assert!(odd.iter().all(|c| c.sites().all(|s| s % 2 == 1)));
    }

    #[test]
    fn probes_cover_the_ladder() {
        let spec = LatticeSpec::standard(7).unwrap();
        let labels: Vec<String> = default_probes(&spec).unwrap().into_iter().map(|p| p.label).collect();
        assert_eq!(
            labels,
            vec!["empty", "sym1", "min2:rgggggr", "min3:rggrggr", "min4:rgrgrgr", "full"]
        );
    }
}
