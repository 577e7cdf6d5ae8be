//! Instantaneous eigenbasis of H(t): energies, tracked eigenvectors, the
//! ground-to-first-excited gap, and the first-order dressed ground state.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::StateVector;
use crate::eigen::{lowest_eigenpairs, EigenPairs};
use crate::error::{domain, Error, Result};
use crate::hamiltonian::{DiagonalCache, HamiltonianParams};
use crate::propagate::{sample_times, Trajectory};
use crate::pulse::{ControlPoint, Drive, PulseSchedule};

/// Levels closer than this are treated as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;

/// Default number of retained instantaneous eigenstates.
pub const DEFAULT_LEVELS: usize = 6;

/// Default half-width of the slope window, as a fraction of T.
pub const DEFAULT_SLOPE_WINDOW: f64 = 0.15;

/// Overlap below which consecutive eigenvectors are reported as discontinuous.
pub const CONTINUITY_THRESHOLD: f64 = 0.5;

/// Samples solved sequentially with warm starts before handing off to another worker.
const CHUNK: usize = 16;

/// Lowest `k` instantaneous eigenpairs at fixed controls.
pub fn instantaneous_eigenpairs(cache: &DiagonalCache, params: HamiltonianParams, k: usize) -> Result<EigenPairs> {
    lowest_eigenpairs(cache, params, k, &[])
}

/// Eigen-decomposition sampled along a drive.
#[derive(Debug, Clone)]
pub struct SpectrumTrace {
    pub times: Vec<f64>,
    /// `energies[i][k]`, ascending in `k`.
    pub energies: Vec<Vec<f64>>,
    /// `vectors[i][k]`, with Re⟨α_k(t_{i-1})|α_k(t_i)⟩ ≥ 0.
    pub vectors: Vec<Vec<Vec<f64>>>,
    pub levels: usize,
    /// (sample, level) pairs whose overlap with the previous sample fell
    /// below [`CONTINUITY_THRESHOLD`]. Labels always follow energy order.
    pub discontinuities: Vec<(usize, usize)>,
}

impl SpectrumTrace {
    pub fn gaps(&self) -> Vec<f64> {
        self.energies.iter().map(|e| if e.len() > 1 { e[1] - e[0] } else { 0.0 }).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigenpairs at every time in `times`, computed in fixed-size chunks so the
/// result does not depend on the number of worker threads.
fn eigenpairs_along<D: Drive + ?Sized>(cache: &DiagonalCache, drive: &D, times: &[f64], k: usize) -> Result<Vec<EigenPairs>> {
    let chunks: Vec<Result<Vec<EigenPairs>>> = times
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut out: Vec<EigenPairs> = Vec::with_capacity(chunk.len());
            for &t in chunk {
                let warm = out.last().map(|p| p.vectors.as_slice()).unwrap_or(&[]);
                let pairs = lowest_eigenpairs(cache, drive.controls(t).params(), k, warm)?;
                out.push(pairs);
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(times.len());
    for c in chunks {
        all.extend(c?);
    }
    Ok(all)
}

/// Eigenpairs along `drive` at the given times, with sign-continuous vectors.
pub fn spectrum_trace<D: Drive + ?Sized>(cache: &DiagonalCache, drive: &D, times: &[f64], k: usize) -> Result<SpectrumTrace> {
    if times.is_empty() {
        return domain("spectrum trace needs at least one time");
    }
    let pairs = eigenpairs_along(cache, drive, times, k)?;
    let mut energies = Vec::with_capacity(times.len());
    let mut vectors: Vec<Vec<Vec<f64>>> = Vec::with_capacity(times.len());
    let mut discontinuities = Vec::new();
    for (i, p) in pairs.into_iter().enumerate() {
        let mut current = p.vectors;
        if let Some(prev) = vectors.last() {
            for (level, v) in current.iter_mut().enumerate() {
                let overlap = dot(&prev[level], v);
                if overlap < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                if overlap.abs() < CONTINUITY_THRESHOLD {
                    discontinuities.push((i, level));
                }
            }
        }
        energies.push(p.values);
        vectors.push(current);
    }
    Ok(SpectrumTrace {
        times: times.to_vec(),
        energies,
        vectors,
        levels: k,
        discontinuities,
    })
}

/// Minimal gap between the two lowest levels and the sweep rate through it.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// δE in 2π·MHz.
    pub min_gap: f64,
    /// Time of the minimum in μs.
    pub t_min: f64,
    /// Mean |dE01/dt| at t_min ± window·T, in 2π·MHz/μs.
    pub slope: f64,
    pub times: Vec<f64>,
    pub gaps: Vec<f64>,
}

impl GapReport {
    /// The same gap structure for a schedule of identical shape but duration
    /// `duration`: times scale with T and the slope with 1/T.
    pub fn rescaled(&self, duration: f64) -> GapReport {
        let t0 = self.times.last().copied().unwrap_or(1.0);
        let f = duration / t0;
        GapReport {
            min_gap: self.min_gap,
            t_min: self.t_min * f,
            slope: self.slope / f,
            times: self.times.iter().map(|t| t * f).collect(),
            gaps: self.gaps.clone(),
        }
    }
}

fn gap_at(cache: &DiagonalCache, params: HamiltonianParams, warm: &[Vec<f64>]) -> Result<f64> {
    let p = lowest_eigenpairs(cache, params, 2, warm)?;
    Ok(p.values[1] - p.values[0])
}

/// E01(t) on `sample_count` points over [0, T], the refined minimum, and the
/// slope |dE01/dt| averaged over t_min ± window·T. The minimum is searched
/// on the constant-Rabi plateau only; at the pulse ends Ω vanishes and the
/// gap closes on any classically degenerate level.
pub fn gap_trace(cache: &DiagonalCache, schedule: &PulseSchedule, sample_count: usize, window: f64) -> Result<GapReport> {
    if sample_count < 50 {
        return domain(format!("gap trace needs at least 50 samples, got {sample_count}"));
    }
    if cache.dim() < 2 {
        return domain("gap trace needs at least two levels");
    }
    schedule.validate()?;
    let duration = schedule.total_duration;
    let times = sample_times(duration, sample_count);
    let pairs = eigenpairs_along(cache, schedule, &times, 2)?;
    let gaps: Vec<f64> = pairs.iter().map(|p| p.values[1] - p.values[0]).collect();
    let (plateau_start, plateau_end) = schedule.constant_rabi_window().unwrap_or((0.0, duration));
    let plateau: Vec<usize> = (0..times.len())
        .filter(|&i| times[i] >= plateau_start && times[i] <= plateau_end)
        .collect();
    let argmin = plateau.iter().copied().min_by(|&a, &b| gaps[a].total_cmp(&gaps[b])).unwrap_or(0);
    if plateau.len() < 3 || argmin == plateau[0] || argmin == plateau[plateau.len() - 1] {
        return Err(Error::Config(format!(
            "E01 has no interior minimum on the constant-Rabi plateau [{plateau_start:.4}, {plateau_end:.4}] us; \
             the two lowest levels approach each other up to t = {:.4} us",
            times[argmin]
        )));
    }

    let lo = times[argmin.saturating_sub(1)];
    let hi = times[(argmin + 1).min(times.len() - 1)];
    let warm = pairs[argmin].vectors.clone();
    let (t_min, min_gap) = golden_minimum(|t| gap_at(cache, schedule.controls(t).params(), &warm), lo, hi, 1e-10 * duration)?;

    let h = 1e-4 * duration;
    let mut slopes = [0.0; 2];
    for (slot, sign) in [-1.0, 1.0].into_iter().enumerate() {
        let center = t_min + sign * window * duration;
        if center - h < plateau_start || center + h > plateau_end {
            return Err(Error::Config(format!(
                "slope point t = {center:.4} us lies outside the constant-Rabi plateau [{plateau_start:.4}, {plateau_end:.4}] us; \
                 shorten the ramps or reduce the slope window"
            )));
        }
        let up = gap_at(cache, schedule.controls(center + h).params(), &warm)?;
        let down = gap_at(cache, schedule.controls(center - h).params(), &warm)?;
        slopes[slot] = ((up - down) / (2.0 * h)).abs();
    }
    Ok(GapReport {
        min_gap,
        t_min,
        slope: 0.5 * (slopes[0] + slopes[1]),
        times,
        gaps,
    })
}

/// Golden-section search for a minimum of `f` on [lo, hi].
fn golden_minimum<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// |⟨α_k(t)|ψ(t)⟩|² for every retained level, indexed `[k][sample]`.
pub fn adiabatic_populations(trajectory: &Trajectory, trace: &SpectrumTrace) -> Result<Vec<Vec<f64>>> {
    if trajectory.times.len() != trace.times.len()
        || trajectory
            .times
            .iter()
            .zip(&trace.times)
            .any(|(a, b)| (a - b).abs() > 1e-12 * b.abs().max(1.0))
    {
        return domain("trajectory and spectrum trace use different time grids");
    }
    let mut out = vec![Vec::with_capacity(trace.times.len()); trace.levels];
    for (state, vectors) in trajectory.states.iter().zip(&trace.vectors) {
        for (level, v) in vectors.iter().enumerate() {
            out[level].push(real_overlap(v, state.amplitudes()).norm_sqr());
        }
    }
    Ok(out)
}

fn real_overlap(v: &[f64], psi: &[Complex64]) -> Complex64 {
    v.iter().zip(psi).map(|(a, b)| b * *a).sum()
}

/// ⟨a|∂_t H|b⟩ for real vectors.
fn rate_element(cache: &DiagonalCache, rates: ControlPoint, a: &[f64], b: &[f64]) -> Result<f64> {
    let mut hb = vec![0.0; b.len()];
    cache.apply_rate(rates.rabi, rates.detuning, b, &mut hb)?;
    Ok(dot(a, &hb))
}

/// First-order dressed ground state at time `t`:
/// |α₀⟩ − i Σ_{k=1..k_max} ⟨α₀|∂_t H|α_k⟩ / (2π (E₀ − E_k)²) |α_k⟩, normalized.
///
/// The 2π converts the squared energy difference from 2π·MHz to angular
/// frequency units against a rate in 2π·MHz/μs.
pub fn dressed_ground_state<D: Drive + ?Sized>(cache: &DiagonalCache, drive: &D, t: f64, k_max: usize) -> Result<StateVector> {
    if !(0.0..=drive.duration()).contains(&t) {
        return domain(format!("t = {t} outside [0, {}]", drive.duration()));
    }
    if k_max == 0 {
        return domain("k_max must be at least 1");
    }
    let levels = (k_max + 1).min(cache.dim());
    let pairs = lowest_eigenpairs(cache, drive.controls(t).params(), levels, &[])?;
    dress(cache, drive.rates(t), &pairs, t)
}

/// Dressing from a precomputed eigen-decomposition (levels beyond the ground
/// state are all used).
pub fn dress(cache: &DiagonalCache, rates: ControlPoint, pairs: &EigenPairs, t: f64) -> Result<StateVector> {
    let ground = &pairs.vectors[0];
    let mut amplitudes: Vec<Complex64> = ground.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    for k in 1..pairs.len() {
        let separation = pairs.values[0] - pairs.values[k];
        if separation.abs() < DEGENERACY_TOLERANCE {
            return Err(Error::Degenerate {
                first: 0,
                second: k,
                separation: separation.abs(),
            });
        }
        let c = rate_element(cache, rates, ground, &pairs.vectors[k])? / (TAU * separation * separation);
        for (a, &x) in amplitudes.iter_mut().zip(&pairs.vectors[k]) {
            *a -= Complex64::new(0.0, c * x);
        }
    }
    StateVector::normalized(amplitudes, t)
}

/// ⟨α_m|∂_t α_n⟩ = ⟨α_m|∂_t H|α_n⟩ / (E_n − E_m), in 1/μs, for eigenvectors in
/// the gauge of [`lowest_eigenpairs`].
pub fn nonadiabatic_coupling(cache: &DiagonalCache, params: HamiltonianParams, rates: ControlPoint, m: usize, n: usize) -> Result<f64> {
    if m == n {
        return domain("coupling needs two distinct levels");
    }
    let pairs = lowest_eigenpairs(cache, params, m.max(n) + 1, &[])?;
    let separation = pairs.values[n] - pairs.values[m];
    if separation.abs() < DEGENERACY_TOLERANCE {
        return Err(Error::Degenerate {
            first: m.min(n),
            second: m.max(n),
            separation: separation.abs(),
        });
    }
    Ok(rate_element(cache, rates, &pairs.vectors[m], &pairs.vectors[n])? / separation)
}

/// Integrates the amplitude equations in the full instantaneous eigenbasis,
///
/// ```text
/// dc_n/dt = −i 2π E_n c_n − Σ_{m≠n} ⟨α_n|∂_t α_m⟩ c_m,
/// ```
///
/// with fixed-step RK4 (`steps` steps over [0, T]) and eigenvectors followed
/// through crossings by maximal overlap. Starts in the instantaneous ground
/// state and returns `[level][sample]` populations at `sample_count` equally
/// spaced times, with levels labelled by their energy order at t = 0.
pub fn evolve_adiabatic_amplitudes<D: Drive + ?Sized>(
    cache: &DiagonalCache,
    drive: &D,
    sample_count: usize,
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    let dim = cache.dim();
    if sample_count < 2 || steps < sample_count - 1 || !steps.is_multiple_of(sample_count - 1) {
        return domain(format!(
            "steps ({steps}) must be a positive multiple of sample_count - 1 ({})",
            sample_count.saturating_sub(1)
        ));
    }
    let duration = drive.duration();
    let h = duration / steps as f64;

    // Basis at every half step, tracked by overlap with the previous one.
    let mut frames: Vec<Frame> = Vec::with_capacity(2 * steps + 1);
    for i in 0..=2 * steps {
        let t = 0.5 * h * i as f64;
        let pairs = lowest_eigenpairs(cache, drive.controls(t).params(), dim, &[])?;
        let frame = match frames.last() {
            None => Frame::new(pairs),
            Some(prev) => prev.follow(pairs),
        };
        frames.push(frame);
    }
    let generator = |frame: &Frame, t: f64| -> Result<Vec<Vec<f64>>> {
        let rates = drive.rates(t);
        let mut a = vec![vec![0.0; dim]; dim];
        for m in 0..dim {
            let mut hm = vec![0.0; dim];
            cache.apply_rate(rates.rabi, rates.detuning, &frame.vectors[m], &mut hm)?;
            for n in 0..dim {
                if n == m {
                    continue;
                }
                let gap = frame.energies[m] - frame.energies[n];
                if gap.abs() > 1e-9 {
                    a[n][m] = dot(&frame.vectors[n], &hm) / gap;
                }
            }
        }
        Ok(a)
    };
    let derivs: Vec<Vec<Vec<f64>>> = frames
        .iter()
        .enumerate()
        .map(|(i, f)| generator(f, 0.5 * h * i as f64))
        .collect::<Result<_>>()?;

    let rhs = |frame: &Frame, a: &[Vec<f64>], c: &[Complex64]| -> Vec<Complex64> {
        (0..dim)
            .map(|n| {
                let mut v = Complex64::new(0.0, -TAU * frame.energies[n]) * c[n];
                for m in 0..dim {
                    v -= c[m] * a[n][m];
                }
                v
            })
            .collect()
    };

    let mut c = vec![Complex64::new(0.0, 0.0); dim];
    c[0] = Complex64::new(1.0, 0.0);
    let stride = steps / (sample_count - 1);
    let mut out = vec![Vec::with_capacity(sample_count); dim];
    let record = |c: &[Complex64], out: &mut Vec<Vec<f64>>| {
        for (series, a) in out.iter_mut().zip(c) {
            series.push(a.norm_sqr());
        }
    };
    record(&c, &mut out);
    for step in 0..steps {
        let (f0, f1, f2) = (&frames[2 * step], &frames[2 * step + 1], &frames[2 * step + 2]);
        let (a0, a1, a2) = (&derivs[2 * step], &derivs[2 * step + 1], &derivs[2 * step + 2]);
        let k1 = rhs(f0, a0, &c);
        let mid: Vec<Complex64> = c.iter().zip(&k1).map(|(x, k)| x + k * (0.5 * h)).collect();
        let k2 = rhs(f1, a1, &mid);
        let mid: Vec<Complex64> = c.iter().zip(&k2).map(|(x, k)| x + k * (0.5 * h)).collect();
        let k3 = rhs(f1, a1, &mid);
        let end: Vec<Complex64> = c.iter().zip(&k3).map(|(x, k)| x + k * h).collect();
        let k4 = rhs(f2, a2, &end);
        for n in 0..dim {
            c[n] += (k1[n] + (k2[n] + k3[n]) * 2.0 + k4[n]) * (h / 6.0);
        }
        if (step + 1) % stride == 0 {
            record(&c, &mut out);
        }
    }
    Ok(out)
}

/// Full eigenbasis with labels carried over from an earlier frame.
struct Frame {
    energies: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

impl Frame {
    fn new(pairs: EigenPairs) -> Self {
        Self {
            energies: pairs.values,
            vectors: pairs.vectors,
        }
    }

    /// Assign each new eigenvector to the previous label it overlaps most,
    /// greedily by decreasing overlap, and align its sign.
    fn follow(&self, pairs: EigenPairs) -> Self {
        let dim = pairs.len();
        let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(dim * dim);
        for (old, u) in self.vectors.iter().enumerate() {
            for (new, v) in pairs.vectors.iter().enumerate() {
                candidates.push((dot(u, v).abs(), old, new));
            }
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut taken_old = vec![false; dim];
        let mut taken_new = vec![false; dim];
        let mut energies = vec![0.0; dim];
        let mut vectors = vec![Vec::new(); dim];
        for (_, old, new) in candidates {
            if taken_old[old] || taken_new[new] {
                continue;
            }
            taken_old[old] = true;
            taken_new[new] = true;
            let mut v = pairs.vectors[new].clone();
            if dot(&self.vectors[old], &v) < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            energies[old] = pairs.values[new];
            vectors[old] = v;
        }
        Self { energies, vectors }
    }
}
