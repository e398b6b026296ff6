//! Ramsey fringe scan: cloud-averaged transition probability on a detuning
//! grid, fringe metrics, and the detected signal-to-noise both probe
//! normalizations would reach at the measured survival.

use serde::Serialize;
use std::path::Path;

use fountain_core::ballistics::survival;
use fountain_core::detection::{snr_estimate, NormalizationMode, SnrEstimate};
use fountain_core::interrogation::{
    fringe_metrics, pattern, sample_interrogation_atom, FringeMetrics, FringePattern,
};

use crate::config::{
    self, ExperimentKind, GridBlock, ResolvedDetection, ResolvedInterrogation, ResolvedLaunch,
    RunConfigFile,
};
use crate::output::{float_cell, out_path, write_csv, write_echo, write_json};
use crate::CliError;

#[derive(Serialize)]
struct Params {
    launch: ResolvedLaunch,
    interrogation: ResolvedInterrogation,
    grid: GridBlock,
    detection: ResolvedDetection,
    dump_transits: bool,
}

#[derive(Serialize)]
struct SnrOut {
    snr: f64,
    amplitude: f64,
    noise: f64,
    unbounded: bool,
}

impl From<SnrEstimate> for SnrOut {
    fn from(e: SnrEstimate) -> Self {
        Self {
            snr: e.snr,
            amplitude: e.amplitude,
            noise: e.noise,
            unbounded: e.unbounded,
        }
    }
}

#[derive(Serialize)]
struct MetricsOut {
    fwhm_hz: f64,
    central_amplitude: f64,
    adjacent_amplitude: f64,
    adjacent_to_central_ratio: f64,
    nominal_tau_s: f64,
    nominal_big_t_s: f64,
    n_atoms: usize,
    n_survivors: usize,
    survival_fraction: f64,
    n_detected: u64,
    m0_fraction: f64,
    signal_amplitude: f64,
    snr_single_probe: SnrOut,
    snr_dual_probe: SnrOut,
}

pub fn run(file: &RunConfigFile, seed: u64, out: &Path) -> Result<(), CliError> {
    let launch = config::resolve_launch(&file.launch)?;
    let interrogation = config::resolve_interrogation(&file.interrogation)?;
    let detection = config::resolve_detection(&file.detection)?;
    let (grid, detunings) = config::grid_points(&file.grid)?;
    let dump_transits = file.dump_transits.unwrap_or(false);

    let launch_cfg = launch.to_launch_config();
    let ramsey = interrogation.to_ramsey_config();
    let fringe = pattern(
        &ramsey,
        &launch_cfg,
        &detunings,
        launch.n_atoms as usize,
        seed,
    )?;
    let metrics = fringe_metrics(&fringe)?;

    write_pattern_csv(&out_path(out, "_pattern.csv"), &fringe)?;
    write_metrics(
        out,
        &launch,
        &interrogation,
        &detection,
        &fringe,
        &metrics,
        seed,
    )?;
    if dump_transits {
        write_transits_csv(
            &out_path(out, "_transits.csv"),
            &launch,
            &interrogation,
            seed,
        )?;
    }
    write_echo(
        out,
        ExperimentKind::Fringe,
        seed,
        Params {
            launch,
            interrogation,
            grid,
            detection,
            dump_transits,
        },
    )
}

fn write_pattern_csv(path: &Path, fringe: &FringePattern) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = fringe
        .detunings_hz
        .iter()
        .zip(&fringe.probabilities)
        .map(|(&d, &p)| vec![float_cell(d), float_cell(p)])
        .collect();
    write_csv(path, &["detuning_hz", "transition_probability"], &rows)
}

fn write_metrics(
    out: &Path,
    launch: &ResolvedLaunch,
    interrogation: &ResolvedInterrogation,
    detection: &ResolvedDetection,
    fringe: &FringePattern,
    metrics: &FringeMetrics,
    seed: u64,
) -> Result<(), CliError> {
    let survival_fraction = fringe.n_survivors as f64 / fringe.n_atoms as f64;
    // The interrogated sample stands in for the full trap load; the
    // detected atom number scales up by the configured trap population.
    let n_detected = ((launch.trap_atoms * survival_fraction).round() as u64).max(1);
    let signal_amplitude = interrogation.m0_fraction * metrics.central_amplitude;
    let snr_single = snr_estimate(
        &detection.with_mode(NormalizationMode::SingleProbe),
        signal_amplitude,
        n_detected,
        detection.snr_cycles,
        detection.snr_repeats,
        seed,
    )?;
    let snr_dual = snr_estimate(
        &detection.with_mode(NormalizationMode::DualProbe),
        signal_amplitude,
        n_detected,
        detection.snr_cycles,
        detection.snr_repeats,
        seed,
    )?;
    let out_metrics = MetricsOut {
        fwhm_hz: metrics.fwhm_hz,
        central_amplitude: metrics.central_amplitude,
        adjacent_amplitude: metrics.adjacent_amplitude,
        adjacent_to_central_ratio: metrics.adjacent_to_central_ratio,
        nominal_tau_s: fringe.nominal_tau_s,
        nominal_big_t_s: fringe.nominal_big_t_s,
        n_atoms: fringe.n_atoms,
        n_survivors: fringe.n_survivors,
        survival_fraction,
        n_detected,
        m0_fraction: interrogation.m0_fraction,
        signal_amplitude,
        snr_single_probe: snr_single.into(),
        snr_dual_probe: snr_dual.into(),
    };
    write_json(&out_path(out, "_metrics.json"), &out_metrics)
}

fn write_transits_csv(
    path: &Path,
    launch: &ResolvedLaunch,
    interrogation: &ResolvedInterrogation,
    seed: u64,
) -> Result<(), CliError> {
    let launch_cfg = launch.to_launch_config();
    let header = [
        "atom_id",
        "x0_m",
        "y0_m",
        "z0_m",
        "vx_mps",
        "vy_mps",
        "vz_mps",
        "t1_s",
        "tau_s",
        "big_t_s",
        "v_cavity_mps",
        "detected",
    ];
    let mut rows = Vec::with_capacity(launch.n_atoms as usize);
    for id in 0..launch.n_atoms {
        let atom =
            sample_interrogation_atom(&launch_cfg, interrogation.velocity_sigma_mps, seed, id);
        let mut row = vec![
            id.to_string(),
            float_cell(atom.position[0]),
            float_cell(atom.position[1]),
            float_cell(atom.position[2]),
            float_cell(atom.velocity[0]),
            float_cell(atom.velocity[1]),
            float_cell(atom.velocity[2]),
        ];
        match survival(&atom, &launch_cfg) {
            Ok(record) => {
                row.extend([
                    float_cell(record.t1),
                    float_cell(record.tau),
                    float_cell(record.big_t),
                    float_cell(record.v_cavity),
                    u8::from(record.detected()).to_string(),
                ]);
            }
            // Atom never reaches the cavity: kinematics stay blank.
            Err(_) => row.extend([
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "0".into(),
            ]),
        }
        rows.push(row);
    }
    write_csv(path, &header, &rows)
}
