//! Time-dependent Schrödinger equation i dψ/dt = 2π H(t) ψ.

use std::f64::consts::TAU;
use std::io::{self, Read, Write};

use num_complex::Complex64;

use crate::basis::{norm, Configuration, StateVector};
use crate::error::{domain, Error, Result};
use crate::hamiltonian::DiagonalCache;
use crate::ode::{integrate, Tolerances};
use crate::pulse::{Drive, Reversed};

/// Default number of stored snapshots over [0, T].
pub const DEFAULT_SAMPLES: usize = 400;

/// Largest norm deviation tolerated at any stored sample.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub sample_count: usize,
    pub tolerances: Tolerances,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            sample_count: DEFAULT_SAMPLES,
            tolerances: Tolerances::default(),
        }
    }
}

impl EvolveOptions {
    pub fn with_samples(sample_count: usize) -> Self {
        Self {
            sample_count,
            ..Self::default()
        }
    }
}

/// Sampled solution of the Schrödinger equation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// Largest |‖ψ‖ - 1| over the stored samples.
    pub max_norm_drift: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory holds at least two samples")
    }

    pub fn n_sites(&self) -> usize {
        self.final_state().n_sites()
    }
}

/// `count` equally spaced times covering [0, duration], endpoints exact.
pub fn sample_times(duration: f64, count: usize) -> Vec<f64> {
    let last = count.saturating_sub(1).max(1) as f64;
    (0..count)
        .map(|i| if i + 1 == count { duration } else { duration * i as f64 / last })
        .collect()
}

/// Integrate from `psi0` at t = 0 to t = T, storing `sample_count` snapshots.
pub fn evolve<D: Drive + ?Sized>(cache: &DiagonalCache, drive: &D, psi0: &StateVector, options: &EvolveOptions) -> Result<Trajectory> {
    if options.sample_count < 2 {
        return domain(format!("sample_count must be at least 2, got {}", options.sample_count));
    }
    let times = sample_times(drive.duration(), options.sample_count);
    let mut states = Vec::with_capacity(times.len());
    propagate_through(cache, drive, psi0, &times, &options.tolerances, |t, y| {
        states.push(StateVector::from_raw(y.to_vec(), t));
        Ok(())
    })?;
    let max_norm_drift = states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max);
    Ok(Trajectory {
        times,
        states,
        max_norm_drift,
    })
}

/// Final state only; nothing but the endpoint is stored.
pub fn evolve_final<D: Drive + ?Sized>(
    cache: &DiagonalCache,
    drive: &D,
    psi0: &StateVector,
    tolerances: &Tolerances,
) -> Result<StateVector> {
    let duration = drive.duration();
    let amplitudes = propagate_through(cache, drive, psi0, &[0.0, duration], tolerances, |_, _| Ok(()))?;
    Ok(StateVector::from_raw(amplitudes, duration))
}

/// Undo an evolution: given ψ(T), return ψ(0).
///
/// Since H is real, conj(ψ(T - s)) obeys the forward equation under the
/// reversed controls, so the backward run is a forward run on the conjugate.
pub fn evolve_backward<D: Drive>(
    cache: &DiagonalCache,
    drive: &D,
    psi_final: &StateVector,
    tolerances: &Tolerances,
) -> Result<StateVector> {
    let conj: Vec<Complex64> = psi_final.amplitudes().iter().map(|a| a.conj()).collect();
    let start = StateVector::from_raw(conj, 0.0);
    let end = evolve_final(cache, &Reversed(drive), &start, tolerances)?;
    let back: Vec<Complex64> = end.amplitudes().iter().map(|a| a.conj()).collect();
    Ok(StateVector::from_raw(back, 0.0))
}

fn propagate_through<D, O>(
    cache: &DiagonalCache,
    drive: &D,
    psi0: &StateVector,
    times: &[f64],
    tolerances: &Tolerances,
    mut observe: O,
) -> Result<Vec<Complex64>>
where
    D: Drive + ?Sized,
    O: FnMut(f64, &[Complex64]) -> Result<()>,
{
    if psi0.dim() != cache.dim() {
        return domain(format!("initial state has dimension {}, Hamiltonian {}", psi0.dim(), cache.dim()));
    }
    let initial_norm = psi0.norm();
    if (initial_norm - 1.0).abs() > crate::basis::NORM_TOLERANCE {
        return domain(format!("initial state norm {initial_norm} deviates from 1"));
    }
    let rhs = |t: f64, y: &[Complex64], out: &mut [Complex64]| -> Result<()> {
        cache.apply(drive.controls(t).params(), y, out)?;
        for v in out.iter_mut() {
            *v = Complex64::new(v.im, -v.re) * TAU;
        }
        Ok(())
    };
    let scale = cache.norm_bound(drive.controls(0.0).params()).max(1.0) * TAU;
    integrate(rhs, psi0.amplitudes().to_vec(), times, tolerances, 0.1 / scale, |t, y| {
        let drift = (norm(y) - 1.0).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::Integration {
                time: t,
                reason: format!("norm drifted by {drift:e}"),
            });
        }
        observe(t, y)
    })
}

/// Population of each listed configuration at every sample.
pub fn checkpoint_populations(trajectory: &Trajectory, configs: &[Configuration]) -> Result<Vec<Vec<f64>>> {
    let dim = trajectory.final_state().dim();
    if let Some(bad) = configs.iter().find(|c| c.index() >= dim) {
        return domain(format!("configuration {bad} does not fit a {dim}-dimensional basis"));
    }
    Ok(configs
        .iter()
        .map(|&c| trajectory.states.iter().map(|s| s.population(c)).collect())
        .collect())
}

/// Write all snapshots in little-endian binary:
/// `u32 N`, `u32 sample_count`, then per sample 2^N pairs of `f64` (re, im).
pub fn write_snapshots<W: Write>(trajectory: &Trajectory, mut out: W) -> io::Result<()> {
    let n = trajectory.n_sites() as u32;
    out.write_all(&n.to_le_bytes())?;
    out.write_all(&(trajectory.states.len() as u32).to_le_bytes())?;
    for state in &trajectory.states {
        for a in state.amplitudes() {
            out.write_all(&a.re.to_le_bytes())?;
            out.write_all(&a.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Inverse of [`write_snapshots`]: returns N and the amplitude vectors.
pub fn read_snapshots<R: Read>(mut input: R) -> io::Result<(usize, Vec<Vec<Complex64>>)> {
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let count = u32::from_le_bytes(word) as usize;
    if n > crate::basis::MAX_SITES {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("N = {n} exceeds the supported chain length"),
        ));
    }
    let dim = 1usize << n;
    let mut buf = [0u8; 8];
    let mut snapshots = Vec::with_capacity(count);
    for _ in 0..count {
        let mut amps = Vec::with_capacity(dim);
        for _ in 0..dim {
            input.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf);
            input.read_exact(&mut buf)?;
            amps.push(Complex64::new(re, f64::from_le_bytes(buf)));
        }
        snapshots.push(amps);
    }
    Ok((n, snapshots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::LatticeSpec;
    use crate::pulse::{ControlPoint, Frozen};

    fn frozen(rabi: f64, detuning: f64, duration: f64) -> Frozen {
        Frozen {
            point: ControlPoint { rabi, detuning },
            total_duration: duration,
        }
    }

    #[test]
    fn dark_atom_stays_put() {
        let spec = LatticeSpec::standard(1).unwrap();
        let cache = DiagonalCache::new(&spec).unwrap();
        let traj = evolve(
            &cache,
            &frozen(0.0, -3.0, 1.0),
            &StateVector::ground(1),
            &EvolveOptions::with_samples(5),
        )
        .unwrap();
        assert_eq!(traj.times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!((traj.final_state().population(Configuration(0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resonant_rabi_period() {
        // Ω/2π = 2 MHz on resonance: P_r = sin²(2π Ω t), period 0.25 μs.
        let spec = LatticeSpec::standard(1).unwrap();
        let cache = DiagonalCache::new(&spec).unwrap();
        let traj = evolve(
            &cache,
            &frozen(2.0, 0.0, 0.25),
            &StateVector::ground(1),
            &EvolveOptions::with_samples(11),
        )
        .unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let expected = (TAU * 2.0 * t).sin().powi(2);
            assert!((s.population(Configuration(1)) - expected).abs() < 1e-8, "t = {t}");
        }
        assert!(traj.final_state().population(Configuration(0)) > 1.0 - 1e-8);
    }

    #[test]
    fn snapshot_round_trip() {
        let spec = LatticeSpec::standard(2).unwrap();
        let cache = DiagonalCache::new(&spec).unwrap();
        let traj = evolve(
            &cache,
            &frozen(1.0, 0.5, 0.3),
            &StateVector::ground(2),
            &EvolveOptions::with_samples(3),
        )
        .unwrap();
        let mut bytes = Vec::new();
        write_snapshots(&traj, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 8 + 3 * 4 * 16);
        assert_eq!(&bytes[..4], &2u32.to_le_bytes());
        let (n, snaps) = read_snapshots(bytes.as_slice()).unwrap();
        assert_eq!(n, 2);
        for (s, a) in traj.states.iter().zip(&snaps) {
            assert_eq!(s.amplitudes(), a.as_slice());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let cache = DiagonalCache::new(&LatticeSpec::standard(2).unwrap()).unwrap();
        let drive = frozen(1.0, 0.0, 1.0);
        assert!(evolve(&cache, &drive, &StateVector::ground(2), &EvolveOptions::with_samples(1)).is_err());
        assert!(evolve(&cache, &drive, &StateVector::ground(3), &EvolveOptions::default()).is_err());
        let traj = evolve(&cache, &drive, &StateVector::ground(2), &EvolveOptions::with_samples(2)).unwrap();
        assert!(checkpoint_populations(&traj, &[Configuration(4)]).is_err());
    }
}
