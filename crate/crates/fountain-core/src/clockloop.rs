//! Frequency lock of the interrogation oscillator and its stability.
//!
//! The servo probes the central Ramsey fringe alternately at plus and
//! minus the modulation depth. The difference of the two signals is an
//! odd function of the frequency offset, near zero it is linear with a
//! negative slope times the offset, so adding gain times error to the
//! offset pulls the loop toward resonance. Each correction pair responds
//! as offset_{k+1} = (1 - gain * slope) * offset_k plus detection noise:
//! noiseless convergence is geometric, and too much loop gain (the factor
//! beyond 2) turns the recursion unstable until the lock is lost.
//!
//! The stability analysis is the overlapping Allan deviation of the
//! locked fractional frequency record. White frequency noise averages as
//! tau^(-1/2), which is the signature slope of a shot-noise-limited
//! fountain.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ballistics::PhysicalConstants;
use crate::detection::{measure_cycle_rng, DetectionConfig, DetectionError};
use crate::interrogation::ramsey_probability;

/// The fringe the servo probes: nominal Ramsey parameters plus the scale
/// the two-level probability is read out at (the clock-state fraction of
/// the detected cloud). With `detection` set, every probe goes through a
/// simulated detection cycle; without it the servo sees the noiseless
/// fringe.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FringeModel {
    /// Cavity Rabi rate during the pulses, rad/s.
    pub rabi_rad_s: f64,
    /// Pulse length, s.
    pub tau_s: f64,
    /// Free-flight time between pulses, s.
    pub big_t_s: f64,
    /// Microwave leakage amplitude relative to the pulse Rabi rate.
    pub leak_ratio: f64,
    /// Leakage phase, rad.
    pub leak_phase_rad: f64,
    /// Fraction of detected atoms in the clock state; scales the fringe.
    pub p_scale: f64,
    /// Detection chain and detected atom number, when noise is simulated.
    pub detection: Option<DetectionSetup>,
}

/// Detection chain attached to a servo run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DetectionSetup {
    pub config: DetectionConfig,
    pub n_detected: u64,
}

impl FringeModel {
    /// Noise-free model with optimal pulses: Rabi rate set for a pi/2
    /// area, no leakage, no detection chain.
    pub fn ideal(tau_s: f64, big_t_s: f64, p_scale: f64) -> Self {
        Self {
            rabi_rad_s: std::f64::consts::FRAC_PI_2 / tau_s,
            tau_s,
            big_t_s,
            leak_ratio: 0.0,
            leak_phase_rad: 0.0,
            p_scale,
            detection: None,
        }
    }

    /// Width of the central fringe, the scale lock loss is judged by.
    pub fn fwhm_hz(&self) -> f64 {
        1.0 / (2.0 * self.big_t_s)
    }

    /// One probe of the fringe at `detuning_hz` from resonance.
    pub fn probe(&self, detuning_hz: f64, rng: &mut ChaCha8Rng) -> Result<f64, ClockLoopError> {
        let p = self.p_scale
            * ramsey_probability(
                std::f64::consts::TAU * detuning_hz,
                self.rabi_rad_s,
                self.tau_s,
                self.big_t_s,
                self.leak_ratio,
                self.leak_phase_rad,
            );
        match &self.detection {
            None => Ok(p),
            Some(setup) => Ok(measure_cycle_rng(p, setup.n_detected, &setup.config, rng)?.signal),
        }
    }
}

/// Servo loop parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ServoConfig {
    /// Modulation depth, Hz; FWHM/2 puts the probes on the steepest slope.
    pub modulation_hz: f64,
    /// Offset correction per unit error signal, Hz.
    pub gain_hz: f64,
    /// Wall-clock duration of one launch, s; a correction cycle is two.
    pub cycle_time_s: f64,
    /// Number of correction cycles (modulation pairs) to run.
    pub n_cycles: u64,
    /// Frequency offset the oscillator starts at, Hz.
    pub initial_offset_hz: f64,
}

/// Both probes of one correction cycle and the applied update.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ServoCycle {
    /// Correction cycle index.
    pub cycle: u64,
    /// +1 for the high-side probe, -1 for the low side.
    pub side: i8,
    /// Absolute detuning the probe ran at, Hz.
    pub detuning_hz: f64,
    /// Detected fringe signal.
    pub signal: f64,
    /// high minus low signal; set on the closing row of the cycle.
    pub error: Option<f64>,
    /// gain times error, the offset change just applied, Hz.
    pub correction_hz: Option<f64>,
    /// Oscillator offset after this row's action, Hz.
    pub offset_hz: f64,
}

/// Full record of a servo run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ServoRun {
    /// Two rows per correction cycle, in time order.
    pub records: Vec<ServoCycle>,
    /// Offset after each correction cycle, Hz.
    pub offsets_hz: Vec<f64>,
    /// The same series as fractional frequency of the caesium transition.
    pub fractional_offsets: Vec<f64>,
    /// Time between entries of `offsets_hz`, s.
    pub sample_period_s: f64,
    pub final_offset_hz: f64,
}

/// Overlapping Allan deviation at the requested averaging factors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AllanSeries {
    /// Averaging times m * tau0, s.
    pub taus_s: Vec<f64>,
    /// Overlapping Allan deviation at each averaging time.
    pub adev: Vec<f64>,
    /// Number of squared differences averaged at each point.
    pub n_terms: Vec<usize>,
}

#[derive(Debug, Error)]
pub enum ClockLoopError {
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error("invalid servo config: {0}")]
    InvalidConfig(&'static str),
    #[error("lock lost at cycle {cycle}: offset {offset_hz:.3} Hz beyond 3 linewidths")]
    LockLost { cycle: u64, offset_hz: f64 },
    #[error("need at least {needed} samples for averaging factor {m}, got {got}")]
    InsufficientData { m: usize, needed: usize, got: usize },
}

/// One correction cycle's error signal: the fringe probed at offset plus
/// and minus the modulation, and their difference (high minus low).
pub fn error_signal(
    model: &FringeModel,
    offset_hz: f64,
    modulation_hz: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64, f64), ClockLoopError> {
    let high = model.probe(offset_hz + modulation_hz, rng)?;
    let low = model.probe(offset_hz - modulation_hz, rng)?;
    Ok((high, low, high - low))
}

/// Runs the frequency lock for `cfg.n_cycles` correction cycles.
///
/// Every cycle probes both modulation sides, applies the correction
/// gain * (high - low) to the offset, and records both probes. The loop
/// declares the lock lost, and returns the error, once the offset leaves
/// three linewidths.
pub fn run_servo(
    model: &FringeModel,
    cfg: &ServoConfig,
    seed: u64,
) -> Result<ServoRun, ClockLoopError> {
    if cfg.modulation_hz <= 0.0 {
        return Err(ClockLoopError::InvalidConfig(
            "modulation_hz must be positive",
        ));
    }
    if cfg.cycle_time_s <= 0.0 {
        return Err(ClockLoopError::InvalidConfig(
            "cycle_time_s must be positive",
        ));
    }
    if cfg.n_cycles == 0 {
        return Err(ClockLoopError::InvalidConfig("n_cycles must be at least 1"));
    }
    if !(model.p_scale > 0.0 && model.p_scale <= 1.0) {
        return Err(ClockLoopError::InvalidConfig("p_scale must lie in (0, 1]"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offset = cfg.initial_offset_hz;
    let capture_hz = 3.0 * model.fwhm_hz();
    let mut records = Vec::with_capacity(2 * cfg.n_cycles as usize);
    let mut offsets = Vec::with_capacity(cfg.n_cycles as usize);
    for cycle in 0..cfg.n_cycles {
        let (high, low, error) = error_signal(model, offset, cfg.modulation_hz, &mut rng)?;
        records.push(ServoCycle {
            cycle,
            side: 1,
            detuning_hz: offset + cfg.modulation_hz,
            signal: high,
            error: None,
            correction_hz: None,
            offset_hz: offset,
        });
        let correction = cfg.gain_hz * error;
        offset += correction;
        records.push(ServoCycle {
            cycle,
            side: -1,
            detuning_hz: offset - correction - cfg.modulation_hz,
            signal: low,
            error: Some(error),
            correction_hz: Some(correction),
            offset_hz: offset,
        });
        offsets.push(offset);
        if offset.abs() > capture_hz {
            return Err(ClockLoopError::LockLost {
                cycle,
                offset_hz: offset,
            });
        }
    }

    let nu0 = PhysicalConstants::default().hyperfine_hz;
    let fractional = offsets.iter().map(|o| o / nu0).collect();
    Ok(ServoRun {
        records,
        fractional_offsets: fractional,
        sample_period_s: 2.0 * cfg.cycle_time_s,
        final_offset_hz: offset,
        offsets_hz: offsets,
    })
}

/// Overlapping Allan deviation of the fractional frequency series `y`
/// sampled every `tau0` seconds, at averaging factors `ms`.
pub fn allan_deviation(y: &[f64], tau0: f64, ms: &[usize]) -> Result<AllanSeries, ClockLoopError> {
    if tau0 <= 0.0 {
        return Err(ClockLoopError::InvalidConfig("tau0 must be positive"));
    }
    let mut taus = Vec::with_capacity(ms.len());
    let mut adev = Vec::with_capacity(ms.len());
    let mut n_terms = Vec::with_capacity(ms.len());
    for &m in ms {
        if m == 0 {
            return Err(ClockLoopError::InvalidConfig(
                "averaging factor must be positive",
            ));
        }
        if y.len() < 2 * m {
            return Err(ClockLoopError::InsufficientData {
                m,
                needed: 2 * m,
                got: y.len(),
            });
        }
        let terms = y.len() - 2 * m + 1;
        let mut acc = 0.0;
        for j in 0..terms {
            let mut diff = 0.0;
            for k in j..j + m {
                diff += y[k + m] - y[k];
            }
            acc += diff * diff;
        }
        let var = acc / (2.0 * (m as f64).powi(2) * terms as f64);
        taus.push(m as f64 * tau0);
        adev.push(var.sqrt());
        n_terms.push(terms);
    }
    Ok(AllanSeries {
        taus_s: taus,
        adev,
        n_terms,
    })
}
