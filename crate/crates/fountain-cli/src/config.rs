//! Experiment configuration: versioned JSON in, fully resolved echo out.
//!
//! Configs are strict: unknown keys are hard errors so a typo in a physics
//! parameter cannot silently fall back to a default. Every run writes the
//! resolved configuration, with all defaults materialized and the launch
//! converted to a concrete speed, next to its outputs; a run is fully
//! described by that echo plus the seed.

use serde::{Deserialize, Serialize};
use std::path::Path;

use fountain_core::ballistics::{
    launch_speed_for_apogee, launch_speed_from_aom_offset, LaunchConfig,
};
use fountain_core::detection::{DetectionConfig, NormalizationMode};
use fountain_core::interrogation::RamseyConfig;

use crate::CliError;

/// Supported schema version of the config files.
pub const SCHEMA_VERSION: u32 = 1;

/// Clock-state fraction of a one-laser-selected cloud, the default scale
/// between the two-level transition probability and the detected signal.
pub const DEFAULT_M0_FRACTION: f64 = 0.156;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Fringe,
    Leakage,
    PumpScan,
    AngleScan,
    Servo,
    Strengths,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::Fringe => "fringe",
            Self::Leakage => "leakage",
            Self::PumpScan => "pump_scan",
            Self::AngleScan => "angle_scan",
            Self::Servo => "servo",
            Self::Strengths => "strengths",
        };
        f.write_str(name)
    }
}

/// A config file as written by the user; blocks irrelevant to the chosen
/// experiment must be absent.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub launch: Option<LaunchBlock>,
    #[serde(default)]
    pub interrogation: Option<InterrogationBlock>,
    #[serde(default)]
    pub grid: Option<GridBlock>,
    #[serde(default)]
    pub detection: Option<DetectionBlock>,
    #[serde(default)]
    pub leakage: Option<LeakageBlock>,
    #[serde(default)]
    pub pump_scan: Option<PumpScanBlock>,
    #[serde(default)]
    pub angle_scan: Option<AngleScanBlock>,
    #[serde(default)]
    pub servo: Option<ServoBlock>,
    #[serde(default)]
    pub dump_transits: Option<bool>,
}

/// Launch geometry; exactly one of the three speed forms must be given.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaunchBlock {
    pub launch_speed_mps: Option<f64>,
    pub apogee_above_cavity_m: Option<f64>,
    pub aom_offset_hz: Option<f64>,
    pub cavity_height_m: Option<f64>,
    pub aperture_radius_m: Option<f64>,
    pub interaction_length_m: Option<f64>,
    pub cloud_sigma_pos_m: Option<f64>,
    pub temperature_k: Option<f64>,
    pub n_atoms: Option<u64>,
    pub trap_atoms: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterrogationBlock {
    pub pulse_area_rad: Option<f64>,
    pub leak_ratio: Option<f64>,
    pub leak_phase_rad: Option<f64>,
    pub velocity_sigma_mps: Option<f64>,
    pub m0_fraction: Option<f64>,
}

/// Symmetric detuning grid: `points` samples spanning +-`span_hz`.
#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub span_hz: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionBlock {
    pub collection_efficiency: Option<f64>,
    pub photons_per_atom: Option<f64>,
    pub arrival_jitter_frac: Option<f64>,
    pub arrival_number_coupling: Option<f64>,
    pub jitter_common_fraction: Option<f64>,
    pub normalization_mode: Option<NormalizationMode>,
    pub snr_cycles: Option<usize>,
    pub snr_repeats: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeakageBlock {
    pub leak_ratios: Vec<f64>,
    pub leak_phases_rad: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpScanBlock {
    pub theta_rad: Option<f64>,
    pub duration: Option<f64>,
    pub dt: Option<f64>,
    pub record_stride: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleScanBlock {
    pub photon_budget: Option<f64>,
    pub n_angles: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServoBlock {
    pub modulation_hz: Option<f64>,
    pub gain_hz: Option<f64>,
    pub cycle_time_s: Option<f64>,
    pub n_cycles: Option<u64>,
    pub initial_offset_hz: Option<f64>,
    pub n_detected: Option<u64>,
    pub allan_factors: Option<Vec<usize>>,
}

/// Launch block with every default materialized.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolvedLaunch {
    pub launch_speed_mps: f64,
    pub cavity_height_m: f64,
    pub aperture_radius_m: f64,
    pub interaction_length_m: f64,
    pub cloud_sigma_pos_m: f64,
    pub temperature_k: f64,
    pub n_atoms: u64,
    pub trap_atoms: f64,
}

impl ResolvedLaunch {
    pub fn to_launch_config(self) -> LaunchConfig {
        LaunchConfig {
            launch_speed: self.launch_speed_mps,
            cavity_height: self.cavity_height_m,
            aperture_radius: self.aperture_radius_m,
            interaction_length: self.interaction_length_m,
            cloud_sigma_pos: self.cloud_sigma_pos_m,
            temperature: self.temperature_k,
            n_atoms: self.n_atoms,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolvedInterrogation {
    pub pulse_area_rad: f64,
    pub leak_ratio: f64,
    pub leak_phase_rad: f64,
    pub velocity_sigma_mps: f64,
    pub m0_fraction: f64,
}

impl ResolvedInterrogation {
    pub fn to_ramsey_config(self) -> RamseyConfig {
        RamseyConfig {
            pulse_area_rad: self.pulse_area_rad,
            leak_ratio: self.leak_ratio,
            leak_phase_rad: self.leak_phase_rad,
            velocity_sigma_mps: self.velocity_sigma_mps,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolvedDetection {
    pub collection_efficiency: f64,
    pub photons_per_atom: f64,
    pub arrival_jitter_frac: f64,
    pub arrival_number_coupling: f64,
    pub jitter_common_fraction: f64,
    pub normalization_mode: NormalizationMode,
    pub snr_cycles: usize,
    pub snr_repeats: usize,
}

impl ResolvedDetection {
    pub fn to_detection_config(self) -> DetectionConfig {
        DetectionConfig {
            collection_efficiency: self.collection_efficiency,
            photons_per_atom: self.photons_per_atom,
            arrival_jitter_frac: self.arrival_jitter_frac,
            arrival_number_coupling: self.arrival_number_coupling,
            jitter_common_fraction: self.jitter_common_fraction,
            normalization_mode: self.normalization_mode,
        }
    }

    /// The same chain with the other normalization mode.
    pub fn with_mode(self, normalization_mode: NormalizationMode) -> DetectionConfig {
        DetectionConfig {
            normalization_mode,
            ..self.to_detection_config()
        }
    }
}

pub fn load(path: &Path, expected: ExperimentKind) -> Result<RunConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: RunConfigFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
    if config.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            config.schema_version
        )));
    }
    if config.experiment != expected {
        return Err(CliError::Config(format!(
            "config declares experiment '{}' but the '{expected}' command was invoked",
            config.experiment
        )));
    }
    Ok(config)
}

pub fn resolve_launch(block: &Option<LaunchBlock>) -> Result<ResolvedLaunch, CliError> {
    let block = block
        .as_ref()
        .ok_or_else(|| CliError::Config("missing 'launch' block".into()))?;
    let defaults = LaunchConfig::default();
    let cavity_height = block.cavity_height_m.unwrap_or(defaults.cavity_height);
    let speeds = [
        block.launch_speed_mps,
        block
            .apogee_above_cavity_m
            .map(|a| launch_speed_for_apogee(a, cavity_height)),
        block.aom_offset_hz.map(launch_speed_from_aom_offset),
    ];
    let mut given = speeds.iter().flatten();
    let (Some(&launch_speed), None) = (given.next(), given.next()) else {
        return Err(CliError::Config(
            "give exactly one of launch_speed_mps, apogee_above_cavity_m, aom_offset_hz".into(),
        ));
    };
    let resolved = ResolvedLaunch {
        launch_speed_mps: launch_speed,
        cavity_height_m: cavity_height,
        aperture_radius_m: block.aperture_radius_m.unwrap_or(defaults.aperture_radius),
        interaction_length_m: block
            .interaction_length_m
            .unwrap_or(defaults.interaction_length),
        cloud_sigma_pos_m: block.cloud_sigma_pos_m.unwrap_or(defaults.cloud_sigma_pos),
        temperature_k: block.temperature_k.unwrap_or(defaults.temperature),
        n_atoms: block.n_atoms.unwrap_or(defaults.n_atoms),
        trap_atoms: block.trap_atoms.unwrap_or(1e7),
    };
    for (name, value) in [
        ("cavity_height_m", resolved.cavity_height_m),
        ("aperture_radius_m", resolved.aperture_radius_m),
        ("interaction_length_m", resolved.interaction_length_m),
        ("trap_atoms", resolved.trap_atoms),
    ] {
        if value <= 0.0 {
            return Err(CliError::Config(format!(
                "{name} must be positive, got {value}"
            )));
        }
    }
    for (name, value) in [
        ("cloud_sigma_pos_m", resolved.cloud_sigma_pos_m),
        ("temperature_k", resolved.temperature_k),
    ] {
        if value < 0.0 {
            return Err(CliError::Config(format!(
                "{name} must be non-negative, got {value}"
            )));
        }
    }
    if resolved.n_atoms == 0 {
        return Err(CliError::Config("n_atoms must be at least 1".into()));
    }
    Ok(resolved)
}

pub fn resolve_interrogation(
    block: &Option<InterrogationBlock>,
) -> Result<ResolvedInterrogation, CliError> {
    let defaults = RamseyConfig::default();
    let block = block.unwrap_or(InterrogationBlock {
        pulse_area_rad: None,
        leak_ratio: None,
        leak_phase_rad: None,
        velocity_sigma_mps: None,
        m0_fraction: None,
    });
    let resolved = ResolvedInterrogation {
        pulse_area_rad: block.pulse_area_rad.unwrap_or(defaults.pulse_area_rad),
        leak_ratio: block.leak_ratio.unwrap_or(defaults.leak_ratio),
        leak_phase_rad: block.leak_phase_rad.unwrap_or(defaults.leak_phase_rad),
        velocity_sigma_mps: block
            .velocity_sigma_mps
            .unwrap_or(defaults.velocity_sigma_mps),
        m0_fraction: block.m0_fraction.unwrap_or(DEFAULT_M0_FRACTION),
    };
    if resolved.pulse_area_rad <= 0.0 {
        return Err(CliError::Config("pulse_area_rad must be positive".into()));
    }
    if resolved.velocity_sigma_mps < 0.0 {
        return Err(CliError::Config(
            "velocity_sigma_mps must be non-negative".into(),
        ));
    }
    if resolved.leak_ratio < 0.0 {
        return Err(CliError::Config("leak_ratio must be non-negative".into()));
    }
    if !(resolved.m0_fraction > 0.0 && resolved.m0_fraction <= 1.0) {
        return Err(CliError::Config("m0_fraction must lie in (0, 1]".into()));
    }
    Ok(resolved)
}

pub fn resolve_detection(block: &Option<DetectionBlock>) -> Result<ResolvedDetection, CliError> {
    let defaults = DetectionConfig::default();
    let block = block.unwrap_or(DetectionBlock {
        collection_efficiency: None,
        photons_per_atom: None,
        arrival_jitter_frac: None,
        arrival_number_coupling: None,
        jitter_common_fraction: None,
        normalization_mode: None,
        snr_cycles: None,
        snr_repeats: None,
    });
    let resolved = ResolvedDetection {
        collection_efficiency: block
            .collection_efficiency
            .unwrap_or(defaults.collection_efficiency),
        photons_per_atom: block.photons_per_atom.unwrap_or(defaults.photons_per_atom),
        arrival_jitter_frac: block
            .arrival_jitter_frac
            .unwrap_or(defaults.arrival_jitter_frac),
        arrival_number_coupling: block
            .arrival_number_coupling
            .unwrap_or(defaults.arrival_number_coupling),
        jitter_common_fraction: block
            .jitter_common_fraction
            .unwrap_or(defaults.jitter_common_fraction),
        normalization_mode: block
            .normalization_mode
            .unwrap_or(defaults.normalization_mode),
        snr_cycles: block.snr_cycles.unwrap_or(10),
        snr_repeats: block.snr_repeats.unwrap_or(8),
    };
    if resolved.snr_cycles < 2 || resolved.snr_repeats == 0 {
        return Err(CliError::Config(
            "snr_cycles must be at least 2 and snr_repeats at least 1".into(),
        ));
    }
    Ok(resolved)
}

/// The detuning grid described by a [`GridBlock`].
pub fn grid_points(grid: &Option<GridBlock>) -> Result<(GridBlock, Vec<f64>), CliError> {
    let grid = grid.ok_or_else(|| CliError::Config("missing 'grid' block".into()))?;
    if grid.points < 2 || grid.span_hz <= 0.0 {
        return Err(CliError::Config(
            "grid needs at least 2 points and a positive span_hz".into(),
        ));
    }
    let n = grid.points;
    let step = 2.0 * grid.span_hz / (n - 1) as f64;
    let detunings = (0..n).map(|i| -grid.span_hz + i as f64 * step).collect();
    Ok((grid, detunings))
}

/// Requires a block that the experiment cannot run without.
pub fn require<T>(block: &Option<T>, name: &str) -> Result<T, CliError>
where
    T: Clone,
{
    block
        .as_ref()
        .cloned()
        .ok_or_else(|| CliError::Config(format!("missing '{name}' block")))
}
