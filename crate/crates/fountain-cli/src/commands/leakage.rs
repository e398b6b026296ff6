//! Microwave-leakage sweep: the fringe pattern is recomputed for every
//! (leak amplitude, leak phase) pair with the same seed and cloud, so the
//! only thing that changes between points is the leakage field. The
//! summary compares the central fringe against its neighbours: an
//! undamped pattern keeps the ratio at or above one, leakage during free
//! flight pushes it below one.

use serde::Serialize;
use std::path::Path;

use fountain_core::interrogation::{fringe_metrics, pattern, FringePattern};

use crate::config::{
    self, ExperimentKind, GridBlock, LeakageBlock, ResolvedInterrogation, ResolvedLaunch,
    RunConfigFile,
};
use crate::output::{float_cell, out_path, write_csv, write_echo};
use crate::CliError;

#[derive(Serialize)]
struct Params {
    launch: ResolvedLaunch,
    interrogation: ResolvedInterrogation,
    grid: GridBlock,
    leak_ratios: Vec<f64>,
    leak_phases_rad: Vec<f64>,
}

pub fn run(file: &RunConfigFile, seed: u64, out: &Path) -> Result<(), CliError> {
    let launch = config::resolve_launch(&file.launch)?;
    let interrogation = config::resolve_interrogation(&file.interrogation)?;
    let (grid, detunings) = config::grid_points(&file.grid)?;
    let sweep: LeakageBlock = config::require(&file.leakage, "leakage")?;
    if sweep.leak_ratios.is_empty() || sweep.leak_phases_rad.is_empty() {
        return Err(CliError::Config(
            "leakage sweep needs at least one leak_ratio and one leak_phase_rad".into(),
        ));
    }
    if sweep.leak_ratios.iter().any(|&r| r < 0.0) {
        return Err(CliError::Config("leak_ratios must be non-negative".into()));
    }

    let launch_cfg = launch.to_launch_config();
    let mut summary_rows = Vec::new();
    for (ri, &leak_ratio) in sweep.leak_ratios.iter().enumerate() {
        for (pi, &leak_phase) in sweep.leak_phases_rad.iter().enumerate() {
            let mut ramsey = interrogation.to_ramsey_config();
            ramsey.leak_ratio = leak_ratio;
            ramsey.leak_phase_rad = leak_phase;
            let fringe = pattern(
                &ramsey,
                &launch_cfg,
                &detunings,
                launch.n_atoms as usize,
                seed,
            )?;
            let metrics = fringe_metrics(&fringe)?;

            let point_path = out_path(out, &format!("_pattern_r{ri}_p{pi}.csv"));
            write_pattern_csv(&point_path, &fringe)?;
            let file_name = point_path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            summary_rows.push(vec![
                float_cell(leak_ratio),
                float_cell(leak_phase),
                float_cell(metrics.fwhm_hz),
                float_cell(metrics.central_amplitude),
                float_cell(metrics.adjacent_amplitude),
                float_cell(metrics.central_amplitude / metrics.adjacent_amplitude),
                file_name,
            ]);
        }
    }
    write_csv(
        &out_path(out, "_summary.csv"),
        &[
            "leak_ratio",
            "leak_phase_rad",
            "fwhm_hz",
            "central_amplitude",
            "adjacent_amplitude",
            "central_to_adjacent_ratio",
            "pattern_file",
        ],
        &summary_rows,
    )?;
    write_echo(
        out,
        ExperimentKind::Leakage,
        seed,
        Params {
            launch,
            interrogation,
            grid,
            leak_ratios: sweep.leak_ratios,
            leak_phases_rad: sweep.leak_phases_rad,
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
