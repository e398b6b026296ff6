//! Repumper polarization-angle scan: the clock-state yield of the
//! two-laser selection, under a fixed repumper photon budget, as the
//! angle between the repumper polarization and the bias field turns from
//! 0 to pi/2. The first row is the one-laser baseline the enhancement is
//! measured against. The fringe amplitude column scales the noiseless
//! central-fringe swing of the nominal trajectory by the clock-state
//! fraction, so the scan's ordering carries no sampling noise.

use serde::Serialize;
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use fountain_core::angular::Sublevel;
use fountain_core::ballistics::transit;
use fountain_core::interrogation::ramsey_probability;
use fountain_core::pumping::{
    one_laser_select, two_laser_select, GroundPopulations, COMPLETION_DURATION, PUMP_SATURATION,
};

use crate::config::{
    self, AngleScanBlock, ExperimentKind, ResolvedInterrogation, ResolvedLaunch, RunConfigFile,
};
use crate::output::{float_cell, out_path, write_csv, write_echo};
use crate::CliError;

#[derive(Serialize)]
struct Params {
    launch: ResolvedLaunch,
    interrogation: ResolvedInterrogation,
    photon_budget: f64,
    n_angles: usize,
    angles_rad: Vec<f64>,
    unit_fringe_amplitude: f64,
}

pub fn run(file: &RunConfigFile, seed: u64, out: &Path) -> Result<(), CliError> {
    let launch = config::resolve_launch(&file.launch)?;
    let interrogation = config::resolve_interrogation(&file.interrogation)?;
    let block = file.angle_scan.unwrap_or(AngleScanBlock {
        photon_budget: None,
        n_angles: None,
    });
    let photon_budget = block.photon_budget.unwrap_or(2.0);
    let n_angles = block.n_angles.unwrap_or(10);
    if n_angles < 2 {
        return Err(CliError::Config("n_angles must be at least 2".into()));
    }
    if photon_budget < 0.0 {
        return Err(CliError::Config(
            "photon_budget must be non-negative".into(),
        ));
    }
    let angles: Vec<f64> = (0..n_angles)
        .map(|i| FRAC_PI_2 * i as f64 / (n_angles - 1) as f64)
        .collect();

    let unit_amplitude = unit_fringe_amplitude(&launch, &interrogation)?;
    let clock = Sublevel::new(3, 0).expect("clock state exists");

    // Stage one of the pipeline: the hyperfine pump empties F=4 of the
    // isotropic cloud. Every scan point starts from this same state.
    let prepared = one_laser_select(
        &GroundPopulations::uniform(),
        PUMP_SATURATION,
        COMPLETION_DURATION,
    )?;
    let p_clock_baseline = prepared.populations.get(clock);

    let header = [
        "kind",
        "theta_rad",
        "p_clock",
        "enhancement",
        "fringe_amplitude",
        "stage_photons",
        "selection_photons",
        "total_photons",
    ];
    let mut rows = vec![vec![
        "baseline".to_string(),
        String::new(),
        float_cell(p_clock_baseline),
        float_cell(1.0),
        float_cell(p_clock_baseline * unit_amplitude),
        float_cell(0.0),
        float_cell(0.0),
        float_cell(prepared.mean_photons),
    ]];
    for &theta in &angles {
        let outcome = two_laser_select(&prepared.populations, theta, photon_budget)?;
        let p_clock = outcome.selected.populations.get(clock);
        rows.push(vec![
            "scan".to_string(),
            float_cell(theta),
            float_cell(p_clock),
            float_cell(outcome.enhancement),
            float_cell(p_clock * unit_amplitude),
            float_cell(outcome.selected.mean_photons),
            float_cell(outcome.selection_photons),
            float_cell(prepared.mean_photons + outcome.selected.mean_photons),
        ]);
    }
    write_csv(&out_path(out, "_scan.csv"), &header, &rows)?;
    write_echo(
        out,
        ExperimentKind::AngleScan,
        seed,
        Params {
            launch,
            interrogation,
            photon_budget,
            n_angles,
            angles_rad: angles,
            unit_fringe_amplitude: unit_amplitude,
        },
    )
}

/// Peak-to-valley swing of the noiseless central fringe for an atom that
/// carries unit clock-state population through the nominal trajectory.
fn unit_fringe_amplitude(
    launch: &ResolvedLaunch,
    interrogation: &ResolvedInterrogation,
) -> Result<f64, CliError> {
    let launch_cfg = launch.to_launch_config();
    let nominal = transit(launch_cfg.launch_speed, &launch_cfg)?;
    let rabi = interrogation.pulse_area_rad / nominal.tau;
    let half_period = 1.0 / (2.0 * nominal.big_t);
    let n = 33;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let detuning_hz = -half_period + 2.0 * half_period * i as f64 / (n - 1) as f64;
        let p = ramsey_probability(
            2.0 * std::f64::consts::PI * detuning_hz,
            rabi,
            nominal.tau,
            nominal.big_t,
            0.0,
            0.0,
        );
        lo = lo.min(p);
        hi = hi.max(p);
    }
    Ok(hi - lo)
}
