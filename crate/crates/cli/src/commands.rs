//! Subcommands. Each one reads the resolved config, calls the library and
//! writes its tables through [`Output`].

use rydchain::analysis::{
    default_probes, excitation_class_populations, fidelity_sweep as sweep_fidelity, fit_gap_scaling, lowest_energy_path, lz_fidelity,
    odd_site_path, path_populations, phase_scan as scan_phases, rydberg_density, target_configuration,
};
use rydchain::basis::symmetric_single_excitation;
use rydchain::classical::{ladder, levels_at};
use rydchain::eigen::EigenPairs;
use rydchain::lzmodel::{simulate_two_level, TwoLevelParams, TwoLevelRun};
use rydchain::ode::Tolerances;
use rydchain::propagate::{checkpoint_populations, evolve as propagate, sample_times, write_snapshots, EvolveOptions, Trajectory};
use rydchain::pulse::Drive;
use rydchain::spectrum::{adiabatic_populations, dress, gap_trace, spectrum_trace, GapReport, SpectrumTrace};
use rydchain::{DiagonalCache, StateVector};
use serde::Serialize;

use crate::config::{linear_spaced, RunConfig};
use crate::error::{CliError, Context};
use crate::output::{Output, Row};

fn tolerances(cfg: &RunConfig) -> Tolerances {
    Tolerances {
        rtol: cfg.analysis.rtol,
        atol: cfg.analysis.atol,
        ..Tolerances::default()
    }
}

fn cache_for(cfg: &RunConfig, n_sites: usize) -> Result<DiagonalCache, CliError> {
    DiagonalCache::new(&cfg.lattice_spec_for(n_sites)?).within("hamiltonian")
}

fn trajectory(cfg: &RunConfig, cache: &DiagonalCache) -> Result<Trajectory, CliError> {
    let options = EvolveOptions {
        sample_count: cfg.analysis.samples,
        tolerances: tolerances(cfg),
    };
    propagate(cache, &cfg.schedule, &StateVector::ground(cache.n_sites()), &options).within("propagate")
}

fn indexed(prefix: &str, count: usize, suffix: &str) -> Vec<String> {
    (0..count).map(|k| format!("{prefix}{k}{suffix}")).collect()
}

fn header(first: &[&str], rest: Vec<String>) -> Vec<String> {
    first.iter().map(|s| s.to_string()).chain(rest).collect()
}

/// Rows of `t` followed by one value per series.
fn time_series<'a>(times: &'a [f64], series: &'a [Vec<f64>]) -> impl Iterator<Item = Row> + 'a {
    times
        .iter()
        .enumerate()
        .map(move |(i, &t)| Row::new().num(t).nums(series.iter().map(|s| s[i])))
}

pub fn evolve(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let spec = cfg.lattice_spec()?;
    let cache = cache_for(cfg, spec.n_sites)?;
    out.progress(format!("evolving N = {} over T = {} us", spec.n_sites, cfg.schedule.total_duration));
    let traj = trajectory(cfg, &cache)?;
    let n = spec.n_sites;

    let classes = excitation_class_populations(&traj);
    out.csv(
        "populations.csv",
        &header(&["t_us"], indexed("P_", n + 1, "")),
        time_series(&traj.times, &classes),
    )?;
    let density = rydberg_density(&traj);
    let sites: Vec<String> = (1..=n).map(|j| format!("rho_{j}")).collect();
    out.csv("density.csv", &header(&["t_us"], sites), time_series(&traj.times, &density))?;

    if !cfg.evolve.checkpoints.is_empty() {
        let configs = cfg
            .evolve
            .checkpoints
            .iter()
            .map(|c| cfg.parse_checkpoint(c))
            .collect::<Result<Vec<_>, _>>()?;
        let pops = checkpoint_populations(&traj, &configs).within("propagate")?;
        let labels = cfg.evolve.checkpoints.iter().map(|c| format!("P_{c}")).collect();
        out.csv("checkpoints.csv", &header(&["t_us"], labels), time_series(&traj.times, &pops))?;
    }

    let target = target_configuration(&spec).within("analysis")?;
    let last = traj.final_state();
    let terminal = Row::new()
        .int(n)
        .num(cfg.schedule.total_duration)
        .text(target.to_bitstring(n))
        .num(last.population(target))
        .num(traj.max_norm_drift)
        .nums(classes.iter().map(|p| *p.last().unwrap()));
    out.csv(
        "terminal.csv",
        &header(&["N", "T_us", "target", "F_target", "norm_drift"], indexed("P_", n + 1, "")),
        [terminal],
    )?;

    if cfg.evolve.dump_states {
        out.binary("states.bin", |w| write_snapshots(&traj, w))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct GapSummary {
    n_sites: usize,
    min_gap_mhz: f64,
    t_min_us: f64,
    slope_mhz_per_us: f64,
    lz_fidelity: f64,
}

impl GapSummary {
    fn new(n_sites: usize, gap: &GapReport) -> Result<Self, CliError> {
        Ok(Self {
            n_sites,
            min_gap_mhz: gap.min_gap,
            t_min_us: gap.t_min,
            slope_mhz_per_us: gap.slope,
            lz_fidelity: lz_fidelity(gap.min_gap, gap.slope).within("analysis")?,
        })
    }
}

fn write_spectrum(out: &mut Output, name: &str, trace: &SpectrumTrace) -> Result<(), CliError> {
    let k = trace.levels;
    let rows = trace
        .times
        .iter()
        .zip(&trace.energies)
        .map(|(&t, e)| Row::new().num(t).nums(e.iter().copied()).num(e[1] - e[0]));
    out.csv(
        name,
        &header(&["t_us"], [indexed("E", k, "_mhz"), vec!["E01_mhz".into()]].concat()),
        rows,
    )
}

fn levels_for(cfg: &RunConfig, cache: &DiagonalCache, wanted: usize) -> usize {
    wanted.max(2).min(cache.dim()).max(cfg.analysis.levels.min(cache.dim()))
}

pub fn spectrum(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let n = cfg.lattice.n_sites;
    let cache = cache_for(cfg, n)?;
    let times = sample_times(cfg.schedule.total_duration, cfg.analysis.samples);
    out.progress(format!("diagonalizing N = {n} at {} times", times.len()));
    let trace = spectrum_trace(&cache, &cfg.schedule, &times, levels_for(cfg, &cache, 2)).within("spectrum")?;
    write_spectrum(out, "spectrum.csv", &trace)?;
    let gap = gap_trace(&cache, &cfg.schedule, cfg.analysis.gap_samples, cfg.analysis.slope_window).within("spectrum")?;
    out.json("gap.json", &GapSummary::new(n, &gap)?)
}

pub fn classical_ladder(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let spec = cfg.lattice_spec()?;
    let rungs = ladder(&spec).within("classical")?;
    let rows = rungs.iter().map(|r| {
        Row::new()
            .int(r.n)
            .text(r.config.to_bitstring(spec.n_sites))
            .num(r.energy_at_zero)
            .text(r.crossing_to_next.map_or(String::new(), |d| d.to_string()))
    });
    out.csv(
        "ladder.csv",
        &["n", "config", "E_at_zero_detuning_mhz", "crossing_to_next_mhz"],
        rows,
    )
}

/// Classical energies of every configuration on a detuning grid spanning the ladder.
pub fn classical_levels(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let spec = cfg.lattice_spec()?;
    let crossings: Vec<f64> = ladder(&spec)
        .within("classical")?
        .iter()
        .filter_map(|r| r.crossing_to_next)
        .collect();
    let lo = crossings.iter().copied().fold(0.0, f64::min);
    let hi = crossings.iter().copied().fold(0.0, f64::max);
    let margin = 0.25 * (hi - lo).max(1.0);
    let mut rows = Vec::new();
    for d in linear_spaced(lo - margin, hi + margin, 201) {
        for level in levels_at(&spec, d).within("classical")? {
            rows.push(
                Row::new()
                    .num(d)
                    .int(level.n)
                    .text(level.config.to_bitstring(spec.n_sites))
                    .num(level.energy)
                    .int(usize::from(level.is_minimal)),
            );
        }
    }
    out.csv("levels.csv", &["detuning_mhz", "n", "config", "energy_mhz", "minimal"], rows)
}

pub fn phase_scan(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let spec = cfg.lattice_spec()?;
    let cache = cache_for(cfg, spec.n_sites)?;
    let p = &cfg.phase_scan;
    let rabi = linear_spaced(0.0, p.rabi_max_mhz, p.rabi_points);
    let detuning = linear_spaced(p.detuning_min_mhz, p.detuning_max_mhz, p.detuning_points);
    let probes = default_probes(&spec).within("analysis")?;
    out.progress(format!("scanning {} ground states", rabi.len() * detuning.len()));
    let points = scan_phases(&cache, &rabi, &detuning, &probes).within("analysis")?;
    let labels = probes.iter().map(|p| format!("overlap_{}", p.label)).collect();
    let rows = points
        .iter()
        .map(|pt| Row::new().num(pt.rabi).num(pt.detuning).nums(pt.overlaps.iter().copied()));
    out.csv("phase_scan.csv", &header(&["rabi_mhz", "detuning_mhz"], labels), rows)
}

pub fn fidelity_sweep(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let durations = cfg.fidelity_durations();
    let mut rows = Vec::new();
    for &n in &cfg.fidelity_sweep.sites {
        let cache = cache_for(cfg, n)?;
        out.progress(format!("N = {n}: gap trace and {} runs", durations.len()));
        let gap = gap_trace(&cache, &cfg.schedule, cfg.analysis.gap_samples, cfg.analysis.slope_window).within("spectrum")?;
        for r in sweep_fidelity(&cache, &cfg.schedule, &gap, &durations, &tolerances(cfg)).within("analysis")? {
            rows.push(
                Row::new()
                    .int(r.n_sites)
                    .num(r.duration)
                    .num(r.exact_fidelity)
                    .num(r.lz_fidelity)
                    .num(r.min_gap)
                    .num(r.slope),
            );
        }
    }
    out.csv(
        "fidelity.csv",
        &["N", "T_us", "F_exact", "F_LZ", "min_gap_mhz", "slope_mhz_per_us"],
        rows,
    )
}

fn two_level_runs(cfg: &RunConfig, durations: &[f64]) -> Result<Vec<(TwoLevelParams, TwoLevelRun)>, CliError> {
    let l = &cfg.lz_demo;
    durations
        .iter()
        .map(|&t| {
            let params = TwoLevelParams::spanning(l.rabi_mhz, l.half_range_mhz, t).within("lzmodel")?;
            let run = simulate_two_level(&params, l.samples).within("lzmodel")?;
            Ok((params, run))
        })
        .collect()
}

fn two_level_rows(runs: &[(TwoLevelParams, TwoLevelRun)]) -> Vec<Row> {
    let mut rows = Vec::new();
    for (params, run) in runs {
        for i in 0..run.times.len() {
            let t = run.times[i];
            rows.push(
                Row::new()
                    .num(params.duration)
                    .num(t)
                    .num(params.rabi)
                    .num(params.detuning(t))
                    .num(run.ground_energy[i])
                    .num(run.excited_energy[i])
                    .num(run.adiabatic[i])
                    .num(run.dressed[i]),
            );
        }
    }
    rows
}

const TWO_LEVEL_HEADER: [&str; 8] = [
    "T_us",
    "t_us",
    "rabi_mhz",
    "detuning_mhz",
    "E0_mhz",
    "E1_mhz",
    "P_adiabatic",
    "P_dressed",
];

pub fn lz_demo(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let runs = two_level_runs(cfg, &cfg.lz_demo.durations_us)?;
    out.csv("lz_demo.csv", &TWO_LEVEL_HEADER, two_level_rows(&runs))?;
    let dips = runs.iter().map(|(p, r)| Row::new().num(p.duration).num(r.dip_depth()));
    out.csv("dip_depth.csv", &["T_us", "dip_depth"], dips)
}

/// Single two-level run at the first configured duration.
pub fn lz_single(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let runs = two_level_runs(cfg, &cfg.lz_demo.durations_us[..1])?;
    out.csv("lz_demo.csv", &TWO_LEVEL_HEADER, two_level_rows(&runs))
}

pub fn controls(cfg: &RunConfig, out: &mut Output, name: &str) -> Result<(), CliError> {
    let times = sample_times(cfg.schedule.total_duration, cfg.analysis.samples);
    let rows = times.iter().map(|&t| {
        let c = cfg.schedule.controls(t);
        Row::new().num(t).num(c.rabi).num(c.detuning)
    });
    out.csv(name, &["t_us", "rabi_mhz", "detuning_mhz"], rows)
}

/// Excitation-class populations, the states of both excitation paths, the
/// Rydberg density and the summed path populations.
pub fn configuration_dynamics(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let spec = cfg.lattice_spec()?;
    let n = spec.n_sites;
    let cache = cache_for(cfg, n)?;
    out.progress(format!("evolving N = {n}"));
    let traj = trajectory(cfg, &cache)?;

    let lowest = lowest_energy_path(&spec).within("analysis")?;
    let odd = odd_site_path(&spec).within("analysis")?;
    let sym = symmetric_single_excitation(&spec);

    let mut labels = indexed("P_", n + 1, "");
    let mut series = excitation_class_populations(&traj);
    labels.push("P_sym1".into());
    series.push(traj.states.iter().map(|s| s.fidelity(&sym)).collect());
    for &c in lowest.iter().filter(|c| c.excitation_count() != 1) {
        labels.push(format!("P_{}", c.to_bitstring(n)));
        series.push(traj.states.iter().map(|s| s.population(c)).collect());
    }
    let top = odd.iter().map(|c| c.excitation_count()).max().unwrap_or(0);
    for k in 1..top {
        let group: Vec<_> = odd.iter().copied().filter(|c| c.excitation_count() == k).collect();
        labels.push(format!("P_odd_sites_{k}"));
        series.push(path_populations(&traj, &group).within("analysis")?);
    }
    out.csv("populations.csv", &header(&["t_us"], labels), time_series(&traj.times, &series))?;

    let density = rydberg_density(&traj);
    let sites: Vec<String> = (1..=n).map(|j| format!("rho_{j}")).collect();
    out.csv("density.csv", &header(&["t_us"], sites), time_series(&traj.times, &density))?;

    let paths = [
        path_populations(&traj, &lowest).within("analysis")?,
        path_populations(&traj, &odd).within("analysis")?,
    ];
    out.csv(
        "paths.csv",
        &["t_us", "path_lowest_energy", "path_odd_sites"],
        time_series(&traj.times, &paths),
    )
}

/// Instantaneous spectrum along the run plus adiabatic and dressed populations.
pub fn adiabatic_dynamics(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let n = cfg.lattice.n_sites;
    let cache = cache_for(cfg, n)?;
    out.progress(format!("evolving N = {n}"));
    let traj = trajectory(cfg, &cache)?;
    let levels = levels_for(cfg, &cache, cfg.analysis.dressing_levels + 1);
    out.progress(format!("tracking {levels} instantaneous eigenstates"));
    let trace = spectrum_trace(&cache, &cfg.schedule, &traj.times, levels).within("spectrum")?;
    write_spectrum(out, "spectrum.csv", &trace)?;

    let pops = adiabatic_populations(&traj, &trace).within("spectrum")?;
    let keep = (cfg.analysis.dressing_levels + 1).min(levels);
    let mut dressed = Vec::with_capacity(traj.times.len());
    for (i, &t) in traj.times.iter().enumerate() {
        let pairs = EigenPairs {
            values: trace.energies[i][..keep].to_vec(),
            vectors: trace.vectors[i][..keep].to_vec(),
        };
        let state = dress(&cache, cfg.schedule.rates(t), &pairs, t).within("spectrum")?;
        dressed.push(traj.states[i].fidelity(&state));
    }
    let mut series = pops.clone();
    series.push(pops[0].iter().zip(&pops[1]).map(|(a, b)| a + b).collect());
    series.push(dressed);
    let labels = [
        indexed("P_alpha", levels, ""),
        vec!["P_alpha0_plus_alpha1".into(), "P_dressed".into()],
    ]
    .concat();
    out.csv("adiabatic.csv", &header(&["t_us"], labels), time_series(&traj.times, &series))?;

    let gap = gap_trace(&cache, &cfg.schedule, cfg.analysis.gap_samples, cfg.analysis.slope_window).within("spectrum")?;
    out.json("gap.json", &GapSummary::new(n, &gap)?)
}

#[derive(Serialize)]
struct FitSummary {
    prefactor: f64,
    exponent: f64,
    rms_log_residual: f64,
    n_values: Vec<usize>,
}

/// E01(t/T) for every chain length in the fit list, the per-N gap summary and
/// the power-law fit of δE/(2Ω_max).
pub fn gap_scaling(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let duration = cfg.schedule.total_duration;
    let mut traces = Vec::new();
    let mut summaries = Vec::new();
    let mut points = Vec::new();
    for &n in &cfg.analysis.fit_sites {
        let cache = cache_for(cfg, n)?;
        out.progress(format!("gap trace for N = {n}"));
        let gap = gap_trace(&cache, &cfg.schedule, cfg.analysis.gap_samples, cfg.analysis.slope_window).within("spectrum")?;
        for (t, g) in gap.times.iter().zip(&gap.gaps) {
            traces.push(Row::new().int(n).num(t / duration).num(*g));
        }
        summaries.push(
            Row::new()
                .int(n)
                .num(gap.min_gap)
                .num(gap.min_gap / (2.0 * cfg.schedule.rabi_max))
                .num(gap.t_min / duration)
                .num(gap.slope),
        );
        points.push((n, gap.min_gap));
    }
    out.csv("gaps.csv", &["N", "t_over_T", "E01_mhz"], traces)?;
    out.csv(
        "gap_summary.csv",
        &["N", "min_gap_mhz", "min_gap_over_2rabi", "t_min_over_T", "slope_mhz_per_us"],
        summaries,
    )?;
    let fit = fit_gap_scaling(&points, cfg.schedule.rabi_max).within("analysis")?;
    out.json(
        "fit.json",
        &FitSummary {
            prefactor: fit.prefactor,
            exponent: fit.exponent,
            rms_log_residual: fit.residual,
            n_values: fit.n_values,
        },
    )
}
