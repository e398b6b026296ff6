//! Closed-loop clock run: square-wave modulation around the central
//! fringe, integrating frequency corrections, and the overlapping Allan
//! deviation of the locked fractional frequency record. A detection block
//! in the config attaches the photon-counting chain to every probe;
//! without one the loop is noiseless.

use serde::Serialize;
use std::path::Path;

use fountain_core::ballistics::transit;
use fountain_core::clockloop::{
    allan_deviation, error_signal, run_servo, DetectionSetup, FringeModel, ServoConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{
    self, ExperimentKind, ResolvedDetection, ResolvedInterrogation, ResolvedLaunch, RunConfigFile,
    ServoBlock,
};
use crate::output::{float_cell, out_path, write_csv, write_echo, write_json};
use crate::CliError;

#[derive(Serialize)]
struct Params {
    launch: ResolvedLaunch,
    interrogation: ResolvedInterrogation,
    modulation_hz: f64,
    gain_hz: f64,
    cycle_time_s: f64,
    n_cycles: u64,
    initial_offset_hz: f64,
    allan_factors: Vec<usize>,
    detection: Option<ResolvedDetection>,
    n_detected: Option<u64>,
}

#[derive(Serialize)]
struct MetricsOut {
    final_offset_hz: f64,
    fwhm_hz: f64,
    modulation_hz: f64,
    gain_hz: f64,
    error_slope_per_hz: f64,
    nominal_tau_s: f64,
    nominal_big_t_s: f64,
    sample_period_s: f64,
    noisy: bool,
}

pub fn run(file: &RunConfigFile, seed: u64, out: &Path) -> Result<(), CliError> {
    let launch = config::resolve_launch(&file.launch)?;
    let interrogation = config::resolve_interrogation(&file.interrogation)?;
    let block = file.servo.clone().unwrap_or(ServoBlock {
        modulation_hz: None,
        gain_hz: None,
        cycle_time_s: None,
        n_cycles: None,
        initial_offset_hz: None,
        n_detected: None,
        allan_factors: None,
    });

    let launch_cfg = launch.to_launch_config();
    let nominal = transit(launch_cfg.launch_speed, &launch_cfg)?;
    let fwhm = 1.0 / (2.0 * nominal.big_t);
    let modulation = block.modulation_hz.unwrap_or(fwhm / 2.0);

    let mut model = FringeModel {
        rabi_rad_s: interrogation.pulse_area_rad / nominal.tau,
        tau_s: nominal.tau,
        big_t_s: nominal.big_t,
        leak_ratio: interrogation.leak_ratio,
        leak_phase_rad: interrogation.leak_phase_rad,
        p_scale: interrogation.m0_fraction,
        detection: None,
    };
    // Small-signal error slope of the noiseless loop; half its inverse is
    // a well-damped default gain.
    let slope = {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = 1e-6;
        let (_, _, error) = error_signal(&model, h, modulation, &mut rng)?;
        -error / h
    };
    // A NaN slope means the fringe evaluation itself broke down, which is
    // just as fatal as a wrong-signed one.
    if slope.is_nan() || slope <= 0.0 {
        return Err(CliError::Physics(format!(
            "error signal does not pull toward resonance at modulation {modulation} Hz"
        )));
    }
    let gain = block.gain_hz.unwrap_or(0.5 / slope);
    if gain == 0.0 {
        eprintln!("warning: gain_hz is 0, the servo will track but never correct");
    }

    let noisy = file.detection.is_some();
    let detection = if noisy {
        Some(config::resolve_detection(&file.detection)?)
    } else {
        None
    };
    let n_detected = detection
        .as_ref()
        .map(|_| block.n_detected.unwrap_or(100_000));
    if let (Some(det), Some(n)) = (&detection, n_detected) {
        model.detection = Some(DetectionSetup {
            config: det.to_detection_config(),
            n_detected: n,
        });
    }

    let servo_cfg = ServoConfig {
        modulation_hz: modulation,
        gain_hz: gain,
        cycle_time_s: block.cycle_time_s.unwrap_or(1.0),
        n_cycles: block.n_cycles.unwrap_or(400),
        initial_offset_hz: block.initial_offset_hz.unwrap_or(0.0),
    };
    let run = run_servo(&model, &servo_cfg, seed)?;

    let factors = match &block.allan_factors {
        Some(list) => list.clone(),
        None => default_factors(run.fractional_offsets.len()),
    };
    let allan = allan_deviation(&run.fractional_offsets, run.sample_period_s, &factors)?;

    let clock_rows: Vec<Vec<String>> = run
        .records
        .iter()
        .map(|r| {
            vec![
                r.cycle.to_string(),
                r.side.to_string(),
                float_cell(r.detuning_hz),
                float_cell(r.signal),
                r.error.map(float_cell).unwrap_or_default(),
                r.correction_hz.map(float_cell).unwrap_or_default(),
                float_cell(r.offset_hz),
            ]
        })
        .collect();
    write_csv(
        &out_path(out, "_clockrun.csv"),
        &[
            "cycle",
            "side",
            "detuning_hz",
            "signal",
            "error",
            "correction_hz",
            "offset_hz",
        ],
        &clock_rows,
    )?;

    let allan_rows: Vec<Vec<String>> = allan
        .taus_s
        .iter()
        .zip(&allan.adev)
        .zip(&allan.n_terms)
        .map(|((&tau, &dev), &terms)| vec![float_cell(tau), float_cell(dev), terms.to_string()])
        .collect();
    write_csv(
        &out_path(out, "_allan.csv"),
        &["tau_s", "adev", "n_terms"],
        &allan_rows,
    )?;

    write_json(
        &out_path(out, "_metrics.json"),
        &MetricsOut {
            final_offset_hz: run.final_offset_hz,
            fwhm_hz: fwhm,
            modulation_hz: modulation,
            gain_hz: gain,
            error_slope_per_hz: slope,
            nominal_tau_s: nominal.tau,
            nominal_big_t_s: nominal.big_t,
            sample_period_s: run.sample_period_s,
            noisy,
        },
    )?;
    write_echo(
        out,
        ExperimentKind::Servo,
        seed,
        Params {
            launch,
            interrogation,
            modulation_hz: modulation,
            gain_hz: gain,
            cycle_time_s: servo_cfg.cycle_time_s,
            n_cycles: servo_cfg.n_cycles,
            initial_offset_hz: servo_cfg.initial_offset_hz,
            allan_factors: factors,
            detection,
            n_detected,
        },
    )
}

/// Powers of two up to a quarter of the record, so every Allan point
/// still averages a healthy number of differences.
fn default_factors(len: usize) -> Vec<usize> {
    let cap = (len / 4).max(1);
    let mut factors = Vec::new();
    let mut m = 1;
    while m <= cap {
        factors.push(m);
        m *= 2;
    }
    factors
}
