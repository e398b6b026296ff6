//! Fluorescence detection of the returning cloud.
//!
//! After interrogation each detected atom is in F=4 with probability p.
//! The readout sees three noise sources stacked on the binomial
//! projection of n atoms: photon shot noise of the collected fluorescence,
//! and cloud arrival jitter that modulates how much of the cloud overlaps
//! the probe during the gate. Arrival jitter acts as a multiplicative
//! factor on the detected number; the fraction of it common to the F=4
//! and F=3 readouts decides how much survives in the normalized signal
//! n4 / (n4 + n3).
//!
//! A single probe reads the two levels in sequence, so their gates see
//! partially different arrival fluctuations and the normalization cancels
//! only the common part. A dual probe reads both levels on the same
//! falling cloud, the jitter is fully common, and the signal is left with
//! projection and photon shot noise only. That ordering, dual strictly
//! quieter than single, is the point of normalized detection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How the normalization denominator is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// One probe beam, sequential readout of F=4 and F=3.
    SingleProbe,
    /// Two stacked probes read both levels on the same cloud pass.
    DualProbe,
}

/// Detection chain parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DetectionConfig {
    /// Fraction of scattered photons reaching the photodetector.
    pub collection_efficiency: f64,
    /// Photons scattered per atom during the detection gate.
    pub photons_per_atom: f64,
    /// RMS fractional arrival-time jitter of the cloud.
    pub arrival_jitter_frac: f64,
    /// Conversion from fractional arrival jitter to fractional detected
    /// number: the cloud edge slews through the gate this many times
    /// faster than the gate itself.
    pub arrival_number_coupling: f64,
    /// Fraction of the arrival-number variance common to both level
    /// readouts when a single probe reads them in sequence.
    pub jitter_common_fraction: f64,
    pub normalization_mode: NormalizationMode,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            collection_efficiency: 0.05,
            photons_per_atom: 200.0,
            arrival_jitter_frac: 0.01,
            arrival_number_coupling: 10.0,
            jitter_common_fraction: 0.5,
            normalization_mode: NormalizationMode::SingleProbe,
        }
    }
}

impl DetectionConfig {
    /// Detected photons per atom, the gain that sets photon shot noise.
    pub fn photons_per_detected_atom(&self) -> f64 {
        self.photons_per_atom * self.collection_efficiency
    }

    fn validate(&self) -> Result<(), DetectionError> {
        let fields = [
            ("collection_efficiency", self.collection_efficiency),
            ("photons_per_atom", self.photons_per_atom),
            ("arrival_jitter_frac", self.arrival_jitter_frac),
            ("arrival_number_coupling", self.arrival_number_coupling),
        ];
        for (name, value) in fields {
            if !value.is_finite() || value < 0.0 {
                return Err(DetectionError::InvalidConfig { field: name, value });
            }
        }
        if self.photons_per_detected_atom() <= 0.0 {
            return Err(DetectionError::InvalidConfig {
                field: "photons_per_detected_atom",
                value: self.photons_per_detected_atom(),
            });
        }
        if !(0.0..=1.0).contains(&self.jitter_common_fraction) {
            return Err(DetectionError::InvalidConfig {
                field: "jitter_common_fraction",
                value: self.jitter_common_fraction,
            });
        }
        Ok(())
    }
}

/// One launch's readout, in atom-equivalent units.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CycleMeasurement {
    /// F=4 fluorescence divided by the per-atom photon gain.
    pub n4_counts: f64,
    /// Total fluorescence of both levels in the same units.
    pub ntotal_counts: f64,
    /// Normalized transition signal n4 / (n4 + n3).
    pub signal: f64,
}

/// Fringe signal-to-noise estimated by repeated simulated cycles.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SnrEstimate {
    /// Fringe amplitude over RMS mid-fringe noise.
    pub snr: f64,
    /// Mean signal swing between fringe top and bottom.
    pub amplitude: f64,
    /// RMS signal noise at mid-fringe.
    pub noise: f64,
    /// True when no noise was observed (the estimate has no upper bound).
    pub unbounded: bool,
}

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("transition probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("cannot detect an empty ensemble")]
    EmptyEnsemble,
    #[error("invalid detection config: {field} = {value}")]
    InvalidConfig { field: &'static str, value: f64 },
    #[error("snr estimation needs at least 2 cycles and 1 repeat")]
    TooFewCycles,
}

/// Simulates one detection cycle for `n` atoms in F=4 with probability
/// `p`, drawing from `rng`.
pub fn measure_cycle_rng(
    p: f64,
    n: u64,
    cfg: &DetectionConfig,
    rng: &mut impl Rng,
) -> Result<CycleMeasurement, DetectionError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(DetectionError::InvalidProbability(p));
    }
    if n == 0 {
        return Err(DetectionError::EmptyEnsemble);
    }
    cfg.validate()?;

    let n4 = Binomial::new(n, p).expect("validated p").sample(rng) as f64;
    let n3 = n as f64 - n4;

    // Arrival jitter as multiplicative gate-overlap factors, one per level
    // readout, sharing a common component.
    let jitter = cfg.arrival_jitter_frac * cfg.arrival_number_coupling;
    let common_fraction = match cfg.normalization_mode {
        NormalizationMode::SingleProbe => cfg.jitter_common_fraction,
        NormalizationMode::DualProbe => 1.0,
    };
    let g_common: f64 = rng.sample(StandardNormal);
    let g_four: f64 = rng.sample(StandardNormal);
    let g_three: f64 = rng.sample(StandardNormal);
    let mix = |own: f64| common_fraction.sqrt() * g_common + (1.0 - common_fraction).sqrt() * own;
    let factor_four = (1.0 + jitter * mix(g_four)).max(0.0);
    let factor_three = (1.0 + jitter * mix(g_three)).max(0.0);

    let gain = cfg.photons_per_detected_atom();
    let mut photons = |mean: f64| -> f64 {
        if mean > 0.0 {
            Poisson::new(mean).expect("positive mean").sample(rng)
        } else {
            0.0
        }
    };
    let n4_counts = photons(n4 * factor_four * gain) / gain;
    let n3_counts = photons(n3 * factor_three * gain) / gain;

    let ntotal_counts = n4_counts + n3_counts;
    let signal = if ntotal_counts > 0.0 {
        n4_counts / ntotal_counts
    } else {
        0.0
    };
    Ok(CycleMeasurement {
        n4_counts,
        ntotal_counts,
        signal,
    })
}

/// [`measure_cycle_rng`] with a self-contained seeded generator.
pub fn measure_cycle(
    p: f64,
    n: u64,
    cfg: &DetectionConfig,
    seed: u64,
) -> Result<CycleMeasurement, DetectionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    measure_cycle_rng(p, n, cfg, &mut rng)
}

/// Estimates the fringe signal-to-noise ratio of the detection chain:
/// the signal swing between fringe top (`p_peak`) and bottom (0) divided
/// by the RMS noise of repeated mid-fringe measurements. Each repeat uses
/// its own RNG stream and the estimates are averaged.
pub fn snr_estimate(
    cfg: &DetectionConfig,
    p_peak: f64,
    n_detected: u64,
    n_cycles: usize,
    n_repeats: usize,
    seed: u64,
) -> Result<SnrEstimate, DetectionError> {
    if n_cycles < 2 || n_repeats == 0 {
        return Err(DetectionError::TooFewCycles);
    }
    if !(0.0..=1.0).contains(&p_peak) {
        return Err(DetectionError::InvalidProbability(p_peak));
    }

    let mut snr_sum = 0.0;
    let mut amplitude_sum = 0.0;
    let mut noise_sum = 0.0;
    let mut unbounded = false;
    for repeat in 0..n_repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(repeat as u64);
        let mut top = 0.0;
        let mut bottom = 0.0;
        let mut mid = Vec::with_capacity(n_cycles);
        for _ in 0..n_cycles {
            top += measure_cycle_rng(p_peak, n_detected, cfg, &mut rng)?.signal;
            bottom += measure_cycle_rng(0.0, n_detected, cfg, &mut rng)?.signal;
            mid.push(measure_cycle_rng(p_peak / 2.0, n_detected, cfg, &mut rng)?.signal);
        }
        let amplitude = (top - bottom) / n_cycles as f64;
        let mean: f64 = mid.iter().sum::<f64>() / mid.len() as f64;
        let var: f64 = mid.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (mid.len() - 1) as f64;
        let noise = var.sqrt();
        amplitude_sum += amplitude;
        noise_sum += noise;
        if noise == 0.0 {
            unbounded = true;
        } else {
            snr_sum += amplitude / noise;
        }
    }

    let n = n_repeats as f64;
    Ok(SnrEstimate {
        snr: if unbounded {
            f64::INFINITY
        } else {
            snr_sum / n
        },
        amplitude: amplitude_sum / n,
        noise: noise_sum / n,
        unbounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn quiet_config(mode: NormalizationMode) -> DetectionConfig {
        DetectionConfig {
            arrival_jitter_frac: 0.0,
            normalization_mode: mode,
            ..DetectionConfig::default()
        }
    }

    #[test]
    fn signal_tracks_probability_for_large_ensembles() {
        let cfg = quiet_config(NormalizationMode::DualProbe);
        for (i, p) in [0.1, 0.3, 0.5, 0.9].into_iter().enumerate() {
            let m = measure_cycle(p, 1_000_000, &cfg, 100 + i as u64).unwrap();
            // Projection plus shot noise at n = 1e6 stays below 1e-3.
            assert_abs_diff_eq!(m.signal, p, epsilon = 5e-3);
        }
    }

    #[test]
    fn empty_upper_level_reads_exactly_zero() {
        let cfg = DetectionConfig::default();
        let m = measure_cycle(0.0, 10_000, &cfg, 3).unwrap();
        assert_eq!(m.n4_counts, 0.0);
        assert_eq!(m.signal, 0.0);
        assert!(m.ntotal_counts > 0.0);
    }

    #[test]
    fn jitter_free_variance_matches_projection_plus_shot_noise() {
        // var(signal) = p (1 - p) (1 + 1/g) / n for quiet detection:
        // binomial projection plus Poisson gain noise on both channels.
        let cfg = quiet_config(NormalizationMode::SingleProbe);
        let (p, n, cycles) = (0.3, 10_000u64, 10_000usize);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let samples: Vec<f64> = (0..cycles)
            .map(|_| measure_cycle_rng(p, n, &cfg, &mut rng).unwrap().signal)
            .collect();
        let mean: f64 = samples.iter().sum::<f64>() / cycles as f64;
        let var: f64 =
            samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (cycles - 1) as f64;
        let g = cfg.photons_per_detected_atom();
        let expected = p * (1.0 - p) * (1.0 + 1.0 / g) / n as f64;
        assert_relative_eq!(var, expected, max_relative = 0.10);
    }

    #[test]
    fn dual_probe_normalization_is_unbiased_under_jitter() {
        let cfg = DetectionConfig {
            normalization_mode: NormalizationMode::DualProbe,
            ..DetectionConfig::default()
        };
        let (p, n, cycles) = (0.4, 100_000u64, 4000usize);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mean: f64 = (0..cycles)
            .map(|_| measure_cycle_rng(p, n, &cfg, &mut rng).unwrap().signal)
            .sum::<f64>()
            / cycles as f64;
        // Common-mode jitter cancels in the ratio; the residual noise is
        // projection-limited, so the mean must sit within a few sigma.
        let sigma = (p * (1.0 - p) * 1.1 / n as f64).sqrt() / (cycles as f64).sqrt();
        assert_abs_diff_eq!(mean, p, epsilon = 5.0 * sigma);
    }

    #[test]
    fn default_single_probe_snr_sits_in_the_working_band() {
        let cfg = DetectionConfig::default();
        let est = snr_estimate(&cfg, 0.156, 1_000_000, 400, 4, 5).unwrap();
        assert!(!est.unbounded);
        assert!(
            est.snr > 15.0 && est.snr < 60.0,
            "single-probe snr {} outside working band",
            est.snr
        );
    }

    #[test]
    fn dual_probe_beats_single_probe() {
        let single = DetectionConfig::default();
        let dual = DetectionConfig {
            normalization_mode: NormalizationMode::DualProbe,
            ..DetectionConfig::default()
        };
        let s = snr_estimate(&single, 0.156, 1_000_000, 400, 4, 5).unwrap();
        let d = snr_estimate(&dual, 0.156, 1_000_000, 400, 4, 5).unwrap();
        assert!(
            d.snr > s.snr,
            "dual probe must be quieter: dual {} vs single {}",
            d.snr,
            s.snr
        );
    }

    #[test]
    fn measurements_are_deterministic_in_seed() {
        let cfg = DetectionConfig::default();
        let a = measure_cycle(0.3, 10_000, &cfg, 9).unwrap();
        let b = measure_cycle(0.3, 10_000, &cfg, 9).unwrap();
        let c = measure_cycle(0.3, 10_000, &cfg, 10).unwrap();
        assert_eq!(a.signal, b.signal);
        assert_ne!(a.signal, c.signal);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let cfg = DetectionConfig::default();
        assert!(matches!(
            measure_cycle(1.5, 100, &cfg, 1),
            Err(DetectionError::InvalidProbability(_))
        ));
        assert!(matches!(
            measure_cycle(0.5, 0, &cfg, 1),
            Err(DetectionError::EmptyEnsemble)
        ));
        let bad = DetectionConfig {
            collection_efficiency: -0.1,
            ..DetectionConfig::default()
        };
        assert!(matches!(
            measure_cycle(0.5, 100, &bad, 1),
            Err(DetectionError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn zero_amplitude_fringe_reports_unbounded_snr() {
        let cfg = DetectionConfig::default();
        let est = snr_estimate(&cfg, 0.0, 1000, 16, 2, 1).unwrap();
        assert!(est.unbounded);
        assert!(est.snr.is_infinite());
    }
}
