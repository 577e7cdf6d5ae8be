//! The Ω → 0 limit: a classical Ising ladder of excitation configurations.
//!
//! Without drive every configuration is an eigenstate with energy
//! `-Δ·n + Σ_{i<j excited} U_ij`. Sweeping Δ upward makes the lowest-energy
//! configuration of each excitation number the ground state in turn, with
//! level crossings at the detunings returned by [`crossing_detuning`].

use serde::Serialize;

use crate::basis::{enumerate_subspace, Configuration, LatticeSpec};
use crate::error::{domain, Error, Result};

/// Relative tolerance under which two classical energies count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// One configuration's classical energy at a given detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalLevel {
    pub n: usize,
    pub config: Configuration,
    pub energy: f64,
    /// Lowest energy within its excitation-number subspace.
    pub is_minimal: bool,
}

pub fn classical_energy(spec: &LatticeSpec, config: Configuration, detuning: f64) -> f64 {
    -detuning * config.excitation_count() as f64 + spec.interaction_energy(config)
}

fn energy_scale(spec: &LatticeSpec) -> f64 {
    spec.nearest_neighbor().max(1.0)
}

/// Pick `candidate` over `best` if strictly lower, or tied with a smaller mask.
fn prefer(best: Option<(Configuration, f64)>, candidate: (Configuration, f64), scale: f64) -> Option<(Configuration, f64)> {
    match best {
        None => Some(candidate),
        Some((cfg, e)) => {
            let tol = TIE_TOLERANCE * scale;
            if candidate.1 < e - tol || ((candidate.1 - e).abs() <= tol && candidate.0 < cfg) {
                Some(candidate)
            } else {
                Some((cfg, e))
            }
        }
    }
}

/// Lowest-interaction configuration with `n` excitations.
///
/// Convex repulsion pushes the outermost excitations onto the chain ends and
/// spreads the rest so that neighbouring gaps differ by at most one site.
/// Only the orderings of the long and short gaps remain, and those are
/// compared by their exact energies. Ties go to the smallest bit mask.
pub fn min_energy_config(spec: &LatticeSpec, n: usize) -> Result<Configuration> {
    let n_sites = spec.n_sites;
    if n > n_sites {
        return domain(format!("excitation count {n} exceeds n_sites = {n_sites}"));
    }
    match n {
        0 => return Ok(Configuration::EMPTY),
        // All single excitations are degenerate at Ω = 0.
        1 => return Ok(Configuration(1)),
        _ => {}
    }
    let gaps = n - 1;
    let span = n_sites - 1;
    let short = span / gaps;
    let long_count = span % gaps;

    let mut best = None;
    let scale = energy_scale(spec);
    for_each_combination(gaps, long_count, |long_slots| {
        let mut site = 0usize;
        let mut bits = 1u32;
        let mut next_long = long_slots.iter().peekable();
        for slot in 0..gaps {
            let is_long = next_long.peek().is_some_and(|&&s| s == slot);
            if is_long {
                next_long.next();
            }
            site += short + usize::from(is_long);
            bits |= 1 << site;
        }
        let config = Configuration(bits);
        best = prefer(best, (config, spec.interaction_energy(config)), scale);
    });
    Ok(best.expect("at least one gap arrangement").0)
}

/// Calls `f` with every ascending `k`-subset of `0..n`.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

/// Both forms of the continuum estimate for E_n^min.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinEnergyEstimate {
    /// `-nΔ + (C6/l^6)(n-1)^6 Σ_{k=1}^{n-1} k/(n-k)^6`, excitations equally spaced by l/(n-1).
    pub equidistant_sum: f64,
    /// `-nΔ + (C6/a^6)(n-1)^7/(N-1)^6`, nearest excited neighbours only.
    pub nearest_neighbor: f64,
}

pub fn min_energy_formula(spec: &LatticeSpec, n: usize, detuning: f64) -> Result<MinEnergyEstimate> {
    if n < 1 {
        return domain("equidistant estimate needs n >= 1");
    }
    if spec.n_sites < 2 {
        return domain("equidistant estimate needs at least two sites");
    }
    let bare = -(n as f64) * detuning;
    let nm1 = (n - 1) as f64;
    let sum: f64 = (1..n).map(|k| k as f64 / ((n - k) as f64).powi(6)).sum();
    let length = spec.length();
    let equidistant = spec.c6 / length.powi(6) * nm1.powi(6) * sum;
    let nearest = spec.c6 / spec.lattice_constant.powi(6) * nm1.powi(7) / ((spec.n_sites - 1) as f64).powi(6);
    Ok(MinEnergyEstimate {
        equidistant_sum: bare + equidistant,
        nearest_neighbor: bare + nearest,
    })
}

/// Largest excitation number whose minimal configuration avoids nearest
/// neighbours: (N + 1) / 2.
pub fn target_excitations(spec: &LatticeSpec) -> usize {
    spec.n_sites.div_ceil(2)
}

/// Detuning at which the minimal n- and (n+1)-excitation levels cross.
///
/// Solved by bisection on `[0, 4·C6/a^6]` to 1e-10 relative tolerance.
pub fn crossing_detuning(spec: &LatticeSpec, n: usize) -> Result<f64> {
    let top = target_excitations(spec);
    if n >= top {
        return domain(format!("crossing index {n} must be below (N+1)/2 = {top}"));
    }
    let lower = min_energy_config(spec, n)?;
    let upper = min_energy_config(spec, n + 1)?;
    let diff = |d: f64| classical_energy(spec, lower, d) - classical_energy(spec, upper, d);

    let (mut lo, mut hi) = (0.0, 4.0 * spec.nearest_neighbor());
    let (f_lo, f_hi) = (diff(lo), diff(hi));
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Domain(format!(
            "no crossing between {n} and {} excitations inside [0, {hi}]",
            n + 1
        )));
    }
    let tol = 1e-10 * hi;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if diff(mid).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Classical ground configuration by exhaustive search over all 2^N masks.
pub fn ground_config_at(spec: &LatticeSpec, detuning: f64) -> Configuration {
    let scale = energy_scale(spec).max(detuning.abs() * spec.n_sites as f64);
    let mut best = None;
    for bits in 0..spec.dim() as u32 {
        let config = Configuration(bits);
        best = prefer(best, (config, classical_energy(spec, config, detuning)), scale);
    }
    best.expect("non-empty basis").0
}

/// Every configuration's classical level at `detuning`, grouped by n.
pub fn levels_at(spec: &LatticeSpec, detuning: f64) -> Result<Vec<ClassicalLevel>> {
    let mut out = Vec::with_capacity(spec.dim());
    for n in 0..=spec.n_sites {
        let minimal = min_energy_config(spec, n)?;
        for config in enumerate_subspace(spec, n)? {
            out.push(ClassicalLevel {
                n,
                config,
                energy: classical_energy(spec, config, detuning),
                is_minimal: config == minimal,
            });
        }
    }
    Ok(out)
}

/// One rung of the minimal-configuration ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderRung {
    pub n: usize,
    pub config: Configuration,
    /// Classical energy at Δ = 0.
    pub energy_at_zero: f64,
    /// Crossing into the next rung; `None` for the top rung.
    pub crossing_to_next: Option<f64>,
}

/// Rungs n = 0 ..= (N+1)/2 of the minimal-energy staircase.
pub fn ladder(spec: &LatticeSpec) -> Result<Vec<LadderRung>> {
    let top = target_excitations(spec);
    (0..=top)
        .map(|n| {
            let config = min_energy_config(spec, n)?;
            let crossing_to_next = if n < top { Some(crossing_detuning(spec, n)?) } else { None };
            Ok(LadderRung {
                n,
                config,
                energy_at_zero: classical_energy(spec, config, 0.0),
                crossing_to_next,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> LatticeSpec {
        LatticeSpec::standard(n).unwrap()
    }

    fn sites(n: usize, s: &[usize]) -> Configuration {
        Configuration::from_sites(n, s).unwrap()
    }

    #[test]
    fn energies_of_simple_configurations() {
        let spec = chain(7);
        assert_eq!(classical_energy(&spec, Configuration::EMPTY, 3.7), 0.0);
        for site in 1..=7 {
            assert_eq!(classical_energy(&spec, sites(7, &[site]), 2.5), -2.5);
        }
        let e17 = classical_energy(&spec, sites(7, &[1, 7]), 0.0);
        assert!((e17 - 53.0 / 6f64.powi(6)).abs() < 1e-15);
        assert!((e17 - spec.pair_interaction(1, 7).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn level_slope_is_minus_n() {
        let spec = chain(5);
        for level in levels_at(&spec, 1.3).unwrap() {
            let at_zero = classical_energy(&spec, level.config, 0.0);
            assert!((level.energy - (at_zero - level.n as f64 * 1.3)).abs() < 1e-12);
        }
    }

    #[test]
    fn minimal_configurations_for_seven_sites() {
        let spec = chain(7);
        assert_eq!(min_energy_config(&spec, 2).unwrap(), sites(7, &[1, 7]));
        assert_eq!(min_energy_config(&spec, 3).unwrap(), sites(7, &[1, 4, 7]));
        assert_eq!(min_energy_config(&spec, 4).unwrap(), sites(7, &[1, 3, 5, 7]));
        assert_eq!(min_energy_config(&spec, 7).unwrap(), Configuration::full(7));
        assert!(min_energy_config(&spec, 8).is_err());
    }

    #[test]
    fn even_chain_tie_breaks_to_smallest_mask() {
        // N = 6, n = 3: {1,3,6} and {1,4,6} are mirror images.
        let spec = chain(6);
        assert_eq!(min_energy_config(&spec, 3).unwrap(), sites(6, &[1, 3, 6]));
        assert!(sites(6, &[1, 3, 6]) < sites(6, &[1, 4, 6]));
    }

    #[test]
    fn formula_matches_closed_forms() {
        let spec = chain(7);
        let l6 = spec.length().powi(6);
        let one = min_energy_formula(&spec, 1, 4.0).unwrap();
        assert_eq!(one.equidistant_sum, -4.0);
        assert_eq!(one.nearest_neighbor, -4.0);
        let two = min_energy_formula(&spec, 2, 0.0).unwrap();
        assert!((two.equidistant_sum - spec.c6 / l6).abs() < 1e-12);
        let three = min_energy_formula(&spec, 3, 0.0).unwrap();
        let expected = spec.c6 / l6 + 2.0 * spec.c6 / (spec.length() / 2.0).powi(6);
        assert!((three.equidistant_sum - expected).abs() < 1e-12 * expected);
        assert!(min_energy_formula(&spec, 0, 0.0).is_err());
        assert!(min_energy_formula(&chain(1), 1, 0.0).is_err());
    }

    #[test]
    fn crossings_match_closed_form() {
        let spec = chain(7);
        assert!(crossing_detuning(&spec, 0).unwrap().abs() < 1e-8);
        let u17 = spec.pair_interaction(1, 7).unwrap();
        let c1 = crossing_detuning(&spec, 1).unwrap();
        assert!((c1 - u17).abs() <= 1e-10 * 4.0 * 53.0);
        assert!(crossing_detuning(&spec, 4).is_err());
    }

    #[test]
    fn antiferromagnetic_window() {
        let spec = chain(7);
        let u2 = spec.coupling_at(2);
        let last = crossing_detuning(&spec, 3).unwrap();
        assert!(last <= 3.0 * u2);
        assert_eq!(ground_config_at(&spec, 3.0 * u2), Configuration::antiferromagnetic(7));
        assert_eq!(ground_config_at(&spec, -1.0), Configuration::EMPTY);
        assert_eq!(ground_config_at(&spec, 1000.0), Configuration::full(7));
    }

    #[test]
    fn ladder_rows() {
        let rungs = ladder(&chain(7)).unwrap();
        assert_eq!(rungs.len(), 5);
        assert_eq!(rungs[4].config, Configuration::antiferromagnetic(7));
        assert!(rungs[4].crossing_to_next.is_none());
        let crossings: Vec<f64> = rungs.iter().filter_map(|r| r.crossing_to_next).collect();
        assert!(crossings.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn combinations_enumerated() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, |c| seen.push(c.to_vec()));
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut empty = 0;
        for_each_combination(3, 0, |c| {
            assert!(c.is_empty());
            empty += 1;
        });
        assert_eq!(empty, 1);
    }
}
