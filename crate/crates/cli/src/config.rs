//! Run configuration: a TOML file whose sections all default to the standard
//! N = 7 chain and chirped pulse. Unknown keys are rejected.

use std::fs;
use std::path::Path;

use rydchain::pulse::standard_schedule;
use rydchain::{Configuration, LatticeSpec, PulseSchedule};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    pub schedule: PulseSchedule,
    pub analysis: AnalysisConfig,
    pub evolve: EvolveConfig,
    pub phase_scan: PhaseScanConfig,
    pub fidelity_sweep: FidelitySweepConfig,
    pub lz_demo: LzDemoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeConfig::default(),
            schedule: standard_schedule(),
            analysis: AnalysisConfig::default(),
            evolve: EvolveConfig::default(),
            phase_scan: PhaseScanConfig::default(),
            fidelity_sweep: FidelitySweepConfig::default(),
            lz_demo: LzDemoConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    pub n_sites: usize,
    pub lattice_constant_um: f64,
    /// U between neighbours, divided by 2π.
    pub nearest_neighbor_mhz: f64,
    /// Largest interacting |i - j|; all pairs interact when absent.
    pub interaction_range: Option<usize>,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            n_sites: 7,
            lattice_constant_um: 5.0,
            nearest_neighbor_mhz: 53.0,
            interaction_range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Time samples along a trajectory, including both ends.
    pub samples: usize,
    /// Instantaneous eigenstates retained in spectra.
    pub levels: usize,
    /// Excited states used when dressing the ground state.
    pub dressing_levels: usize,
    pub gap_samples: usize,
    /// Slope stencil offset from t_min, as a fraction of T.
    pub slope_window: f64,
    /// Chain lengths for the gap-scaling fit.
    pub fit_sites: Vec<usize>,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            samples: 400,
            levels: 6,
            dressing_levels: 6,
            gap_samples: 200,
            slope_window: 0.15,
            fit_sites: vec![5, 7, 9, 11, 13, 15],
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    /// Configurations (g/r strings, site 1 first) whose populations are tracked.
    pub checkpoints: Vec<String>,
    /// Write every sampled state vector to `states.bin`.
    pub dump_states: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseScanConfig {
    pub rabi_max_mhz: f64,
    pub rabi_points: usize,
    pub detuning_min_mhz: f64,
    pub detuning_max_mhz: f64,
    pub detuning_points: usize,
}

impl Default for PhaseScanConfig {
    fn default() -> Self {
        Self {
            rabi_max_mhz: 4.0,
            rabi_points: 41,
            detuning_min_mhz: -10.0,
            detuning_max_mhz: 20.0,
            detuning_points: 121,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FidelitySweepConfig {
    pub sites: Vec<usize>,
    pub duration_min_us: f64,
    pub duration_max_us: f64,
    /// Log-spaced durations between the two limits.
    pub duration_points: usize,
}

impl Default for FidelitySweepConfig {
    fn default() -> Self {
        Self {
            sites: vec![1, 3, 5, 7, 9],
            duration_min_us: 0.1,
            duration_max_us: 10.0,
            duration_points: 13,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LzDemoConfig {
    pub rabi_mhz: f64,
    /// Δ runs from -half_range to +half_range.
    pub half_range_mhz: f64,
    /// The first entry is used for the single-run figure.
    pub durations_us: Vec<f64>,
    pub samples: usize,
}

impl Default for LzDemoConfig {
    fn default() -> Self {
        Self {
            rabi_mhz: 1.0,
            half_range_mhz: 40.0,
            durations_us: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            samples: 400,
        }
    }
}

/// Maximum chain length for which state dumps are allowed.
pub const MAX_DUMP_SITES: usize = 15;

fn invalid(section: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Schema(format!("[{section}] {message}"))
}

fn positive(section: &str, key: &str, value: f64) -> Result<(), CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(section, format!("{key} must be > 0, got {value}")))
    }
}

impl RunConfig {
    /// Reads a TOML config, or the `config` object of a JSON run manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        let config: Self = if path.extension().is_some_and(|e| e == "json") {
            let manifest: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
            let echo = manifest
                .get("config")
                .ok_or_else(|| CliError::Schema(format!("{}: manifest has no `config` object", path.display())))?;
            serde_json::from_value(echo.clone()).map_err(|e| CliError::Schema(format!("{}: config: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::Schema(toml_diagnostic(path, &text, &e)))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.lattice_spec()?;
        self.schedule.validate().map_err(|e| invalid("schedule", e))?;

        let a = &self.analysis;
        if a.samples < 2 {
            return Err(invalid("analysis", format!("samples must be >= 2, got {}", a.samples)));
        }
        if a.levels < 2 {
            return Err(invalid("analysis", format!("levels must be >= 2, got {}", a.levels)));
        }
        if a.dressing_levels < 1 {
            return Err(invalid("analysis", "dressing_levels must be >= 1"));
        }
        if a.gap_samples < 50 {
            return Err(invalid("analysis", format!("gap_samples must be >= 50, got {}", a.gap_samples)));
        }
        if !(a.slope_window > 0.0 && a.slope_window < 0.5) {
            return Err(invalid(
                "analysis",
                format!("slope_window must satisfy 0 < slope_window < 0.5, got {}", a.slope_window),
            ));
        }
        positive("analysis", "rtol", a.rtol)?;
        positive("analysis", "atol", a.atol)?;
        check_sites("analysis", "fit_sites", &a.fit_sites, 2)?;
        if a.fit_sites.len() < 3 {
            return Err(invalid("analysis", "fit_sites needs at least 3 chain lengths"));
        }

        for label in &self.evolve.checkpoints {
            self.parse_checkpoint(label)?;
        }
        if self.evolve.dump_states && self.lattice.n_sites > MAX_DUMP_SITES {
            return Err(invalid(
                "evolve",
                format!(
                    "dump_states is limited to n_sites <= {MAX_DUMP_SITES}, got {}",
                    self.lattice.n_sites
                ),
            ));
        }

        let p = &self.phase_scan;
        positive("phase_scan", "rabi_max_mhz", p.rabi_max_mhz)?;
        if p.rabi_points < 1 || p.detuning_points < 1 {
            return Err(invalid("phase_scan", "rabi_points and detuning_points must be >= 1"));
        }
        if !(p.detuning_min_mhz <= p.detuning_max_mhz) {
            return Err(invalid("phase_scan", "detuning_min_mhz must not exceed detuning_max_mhz"));
        }

        let f = &self.fidelity_sweep;
        check_sites("fidelity_sweep", "sites", &f.sites, 1)?;
        positive("fidelity_sweep", "duration_min_us", f.duration_min_us)?;
        if !(f.duration_max_us >= f.duration_min_us) || !f.duration_max_us.is_finite() {
            return Err(invalid("fidelity_sweep", "duration_max_us must be >= duration_min_us"));
        }
        if f.duration_points < 1 {
            return Err(invalid("fidelity_sweep", "duration_points must be >= 1"));
        }

        let l = &self.lz_demo;
        positive("lz_demo", "rabi_mhz", l.rabi_mhz)?;
        positive("lz_demo", "half_range_mhz", l.half_range_mhz)?;
        if l.durations_us.is_empty() {
            return Err(invalid("lz_demo", "durations_us must not be empty"));
        }
        for &t in &l.durations_us {
            positive("lz_demo", "durations_us entry", t)?;
        }
        if l.samples < 2 {
            return Err(invalid("lz_demo", "samples must be >= 2"));
        }
        Ok(())
    }

    pub fn lattice_spec(&self) -> Result<LatticeSpec, CliError> {
        self.lattice_spec_for(self.lattice.n_sites)
    }

    /// The configured lattice with a different number of sites.
    pub fn lattice_spec_for(&self, n_sites: usize) -> Result<LatticeSpec, CliError> {
        let l = &self.lattice;
        LatticeSpec::with_nearest_neighbor(n_sites, l.lattice_constant_um, l.nearest_neighbor_mhz)
            .and_then(|s| s.with_cutoff(l.interaction_range))
            .map_err(|e| invalid("lattice", e))
    }

    pub fn parse_checkpoint(&self, label: &str) -> Result<Configuration, CliError> {
        let config = Configuration::parse_bitstring(label).map_err(|e| invalid("evolve", format!("checkpoint {label:?}: {e}")))?;
        if label.len() != self.lattice.n_sites {
            return Err(invalid(
                "evolve",
                format!(
                    "checkpoint {label:?} has {} sites, lattice has {}",
                    label.len(),
                    self.lattice.n_sites
                ),
            ));
        }
        Ok(config)
    }

    pub fn fidelity_durations(&self) -> Vec<f64> {
        let f = &self.fidelity_sweep;
        log_spaced(f.duration_min_us, f.duration_max_us, f.duration_points)
    }
}

fn check_sites(section: &str, key: &str, sites: &[usize], min_len: usize) -> Result<(), CliError> {
    if sites.len() < min_len {
        return Err(invalid(section, format!("{key} needs at least {min_len} entries")));
    }
    if let Some(n) = sites.iter().find(|&&n| n == 0 || n > rydchain::basis::MAX_SITES) {
        return Err(invalid(
            section,
            format!("{key} entry {n} outside 1..={}", rydchain::basis::MAX_SITES),
        ));
    }
    Ok(())
}

pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).collect()
}

pub fn linear_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

/// `path:line:column: message` for a TOML parse or schema error.
fn toml_diagnostic(path: &Path, text: &str, err: &toml::de::Error) -> String {
    let location = err.span().map(|span| {
        let before = &text[..span.start.min(text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
        format!("{line}:{column}")
    });
    match location {
        Some(loc) => format!("{}:{loc}: {}", path.display(), err.message()),
        None => format!("{}: {}", path.display(), err.message()),
    }
}
