//! Launch kinematics and fountain geometry.
//!
//! Atoms leave the molasses region with the moving-molasses velocity, climb
//! through the microwave cavity, turn over above it, and fall back through
//! the cavity a second time before reaching the detection region near the
//! trap. Everything here is free flight under gravity: the cavity passages
//! give the pulse separation T and transit time tau, transverse drift
//! against the cavity aperture and the probe beam decides which atoms are
//! ever detected.
//!
//! Monte Carlo cloud sampling is counter-based: every atom derives its own
//! RNG stream from (seed, atom id), so ensembles are reproducible and
//! independent of evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Standard gravitational acceleration, m/s^2.
pub const GRAVITY: f64 = 9.81;
/// Boltzmann constant, J/K (exact SI value).
pub const K_BOLTZMANN: f64 = 1.380649e-23;
/// Radius of the detection probe beam, m (6 mm diameter).
pub const PROBE_RADIUS: f64 = 0.003;

/// Fixed physical constants of the caesium atom and its clock transition.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Gravitational acceleration, m/s^2.
    pub g: f64,
    /// Mass of a Cs-133 atom, kg.
    pub cs_mass: f64,
    /// D2 line wavelength, m.
    pub lambda_d2: f64,
    /// Ground-state hyperfine splitting, Hz (exact SI definition).
    pub hyperfine_hz: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            g: GRAVITY,
            cs_mass: 2.207e-25,
            lambda_d2: 852.35e-9,
            hyperfine_hz: 9_192_631_770.0,
        }
    }
}

/// Fountain geometry and cloud parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LaunchConfig {
    /// Vertical launch speed at the trap centre, m/s.
    pub launch_speed: f64,
    /// Height of the cavity midplane above the trap centre, m.
    pub cavity_height: f64,
    /// Radius of the cavity aperture, m (12 mm hole).
    pub aperture_radius: f64,
    /// Length of the microwave interaction region along the flight, m.
    pub interaction_length: f64,
    /// Gaussian position spread of the cloud per axis, m.
    pub cloud_sigma_pos: f64,
    /// Cloud temperature, K; sets the thermal velocity spread per axis.
    pub temperature: f64,
    /// Number of Monte Carlo atoms to sample.
    pub n_atoms: u64,
}

impl Default for LaunchConfig {
    fn default() -> Self {
        Self {
            launch_speed: 2.0,
            cavity_height: 0.040,
            aperture_radius: 0.006,
            interaction_length: 0.010,
            cloud_sigma_pos: 0.002,
            temperature: 3e-6,
            n_atoms: 10_000,
        }
    }
}

impl LaunchConfig {
    /// Thermal velocity spread per axis, sqrt(kB T / m), m/s.
    pub fn velocity_sigma_thermal(&self) -> f64 {
        (K_BOLTZMANN * self.temperature / PhysicalConstants::default().cs_mass).sqrt()
    }
}

/// Cavity passage times for one atom (or the nominal mean atom).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TransitRecord {
    /// Time of first cavity arrival after launch, s.
    pub t1: f64,
    /// Transit duration through the interaction region per pass, s.
    pub tau: f64,
    /// Free-evolution interval between the two passes, s.
    pub big_t: f64,
    /// Vertical speed at the cavity, equal on both passes, m/s.
    pub v_cavity: f64,
    /// Atom fits through the aperture on the way up.
    pub survived_cavity_up: bool,
    /// Atom fits through the aperture on the way down.
    pub survived_cavity_down: bool,
    /// Atom crosses the probe beam at detection time.
    pub survived_detection: bool,
}

impl TransitRecord {
    /// True when the atom passes every aperture and reaches the probe.
    pub fn detected(&self) -> bool {
        self.survived_cavity_up && self.survived_cavity_down && self.survived_detection
    }
}

/// One sampled atom of the launched cloud.
#[derive(Clone, Copy, Debug)]
pub struct AtomSample {
    /// Position relative to the trap centre at launch, m.
    pub position: [f64; 3],
    /// Velocity at launch, m/s; index 2 is vertical.
    pub velocity: [f64; 3],
    /// Index used to derive the atom's RNG stream.
    pub id: u64,
}

#[derive(Debug, Error)]
pub enum BallisticsError {
    /// The launch is too slow for the atom to reach the cavity.
    #[error(
        "fountain too low: launch speed {v0:.4} m/s cannot reach the cavity \
         ({required:.4} m/s needed)"
    )]
    FountainTooLow { v0: f64, required: f64 },
}

/// Moving-molasses launch speed from the per-beam AOM frequency offset:
/// v = 2 lambda delta, the Doppler balance of counter-propagating vertical
/// beams detuned by +-delta around their common carrier.
pub fn launch_speed_from_aom_offset(delta_hz: f64) -> f64 {
    assert!(delta_hz >= 0.0, "AOM offset must be non-negative");
    2.0 * PhysicalConstants::default().lambda_d2 * delta_hz
}

/// Launch speed whose apogee lies `apogee_above_cavity` metres above the
/// cavity midplane at `cavity_height`.
pub fn launch_speed_for_apogee(apogee_above_cavity: f64, cavity_height: f64) -> f64 {
    (2.0 * GRAVITY * (cavity_height + apogee_above_cavity)).sqrt()
}

/// Cavity passage kinematics for a vertical launch at `v0` from height
/// `z0` relative to the trap centre. Survival flags default to true; only
/// [`survival`] evaluates the transverse geometry.
pub fn transit_from(
    v0: f64,
    z0: f64,
    cfg: &LaunchConfig,
) -> Result<TransitRecord, BallisticsError> {
    let drop = cfg.cavity_height - z0;
    let v_sq = v0 * v0 - 2.0 * GRAVITY * drop;
    if v0 <= 0.0 || v_sq <= 0.0 {
        return Err(BallisticsError::FountainTooLow {
            v0,
            required: (2.0 * GRAVITY * drop).max(0.0).sqrt(),
        });
    }
    let v_cavity = v_sq.sqrt();
    Ok(TransitRecord {
        t1: (v0 - v_cavity) / GRAVITY,
        tau: cfg.interaction_length / v_cavity,
        big_t: 2.0 * v_cavity / GRAVITY,
        v_cavity,
        survived_cavity_up: true,
        survived_cavity_down: true,
        survived_detection: true,
    })
}

/// Cavity passage kinematics for the nominal atom launched from the trap
/// centre at `v0`.
pub fn transit(v0: f64, cfg: &LaunchConfig) -> Result<TransitRecord, BallisticsError> {
    transit_from(v0, 0.0, cfg)
}

/// Samples the launched cloud. Positions are Gaussian about the trap
/// centre, velocities Maxwell-Boltzmann about the vertical launch speed.
/// Deterministic in `seed`; atom `i` always receives the same draw.
pub fn sample_cloud(cfg: &LaunchConfig, seed: u64) -> Vec<AtomSample> {
    (0..cfg.n_atoms)
        .map(|id| sample_atom(cfg, seed, id))
        .collect()
}

/// Draws the single atom `id` of the cloud for `seed`.
pub fn sample_atom(cfg: &LaunchConfig, seed: u64, id: u64) -> AtomSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    let pos = Normal::new(0.0, cfg.cloud_sigma_pos).expect("valid position spread");
    let vel = Normal::new(0.0, cfg.velocity_sigma_thermal()).expect("valid velocity spread");
    AtomSample {
        position: [
            pos.sample(&mut rng),
            pos.sample(&mut rng),
            pos.sample(&mut rng),
        ],
        velocity: [
            vel.sample(&mut rng),
            vel.sample(&mut rng),
            cfg.launch_speed + vel.sample(&mut rng),
        ],
        id,
    }
}

/// Full transit record for one sampled atom: kinematics from its vertical
/// motion, survival flags from transverse drift through the cavity
/// aperture (both passes) and the probe beam at detection. Detection
/// happens on the way down at the atom's own launch height.
pub fn survival(atom: &AtomSample, cfg: &LaunchConfig) -> Result<TransitRecord, BallisticsError> {
    let vz = atom.velocity[2];
    let mut record = transit_from(vz, atom.position[2], cfg)?;

    let radius_at = |t: f64| -> f64 {
        let x = atom.position[0] + atom.velocity[0] * t;
        let y = atom.position[1] + atom.velocity[1] * t;
        x.hypot(y)
    };

    record.survived_cavity_up = radius_at(record.t1) <= cfg.aperture_radius;
    record.survived_cavity_down = radius_at(record.t1 + record.big_t) <= cfg.aperture_radius;
    // The atom returns to its launch height at 2 vz / g.
    let t_detect = 2.0 * vz / GRAVITY;
    record.survived_detection = radius_at(t_detect) <= PROBE_RADIUS;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn aom_offset_maps_to_launch_speed() {
        assert_eq!(launch_speed_from_aom_offset(0.0), 0.0);
        assert_abs_diff_eq!(launch_speed_from_aom_offset(1e6), 1.7047, epsilon = 1e-4);
    }

    #[test]
    fn half_second_fountain_needs_apogee_0_3066() {
        let cfg = LaunchConfig::default();
        let v0 = launch_speed_for_apogee(0.3066, cfg.cavity_height);
        let record = transit(v0, &cfg).unwrap();
        assert_abs_diff_eq!(record.big_t, 0.500, epsilon = 1e-3);
    }

    #[test]
    fn aom_offset_for_a_half_second_flight() {
        // 1.439 MHz maps to g T / 2 for T = 0.5 s, the launch speed of a
        // half-second flight when cavity and launch height coincide.
        let v = launch_speed_from_aom_offset(1.439e6);
        assert_abs_diff_eq!(v, 2.4525, epsilon = 1e-3);
        assert_abs_diff_eq!(v, GRAVITY * 0.5 / 2.0, epsilon = 1e-3);
    }

    #[test]
    fn eleven_cm_apogee_predicts_1_7_hz_fringe() {
        let cfg = LaunchConfig::default();
        let v0 = launch_speed_for_apogee(0.110, cfg.cavity_height);
        let record = transit(v0, &cfg).unwrap();
        assert_abs_diff_eq!(record.big_t, 0.2995, epsilon = 1e-4);
        let fwhm = 1.0 / (2.0 * record.big_t);
        assert_relative_eq!(fwhm, 1.7, max_relative = 0.02);
    }

    #[test]
    fn apogee_below_cavity_is_rejected() {
        let cfg = LaunchConfig::default();
        let v0 = (2.0 * GRAVITY * 0.039).sqrt();
        assert!(matches!(
            transit(v0, &cfg),
            Err(BallisticsError::FountainTooLow { .. })
        ));
    }

    #[test]
    fn cavity_speed_conserves_energy() {
        let cfg = LaunchConfig::default();
        let v0 = 2.6;
        let record = transit(v0, &cfg).unwrap();
        // Speed when falling back to cavity height equals the upward pass.
        let v_down = v0 - GRAVITY * (record.t1 + record.big_t);
        assert_abs_diff_eq!(v_down.abs(), record.v_cavity, epsilon = 1e-12);
        assert_abs_diff_eq!(
            record.v_cavity * record.v_cavity,
            v0 * v0 - 2.0 * GRAVITY * cfg.cavity_height,
            epsilon = 1e-12
        );
    }

    #[test]
    fn thermal_spread_at_3_microkelvin() {
        let cfg = LaunchConfig {
            temperature: 3e-6,
            ..LaunchConfig::default()
        };
        assert_abs_diff_eq!(cfg.velocity_sigma_thermal(), 0.0137, epsilon = 1e-4);
    }

    #[test]
    fn cloud_sampling_is_deterministic_and_cold_cloud_degenerate() {
        let cfg = LaunchConfig {
            n_atoms: 64,
            ..LaunchConfig::default()
        };
        let a = sample_cloud(&cfg, 7);
        let b = sample_cloud(&cfg, 7);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.position, y.position);
            assert_eq!(x.velocity, y.velocity);
        }
        let point = LaunchConfig {
            temperature: 0.0,
            cloud_sigma_pos: 0.0,
            n_atoms: 16,
            ..LaunchConfig::default()
        };
        let cloud = sample_cloud(&point, 3);
        for atom in &cloud {
            assert_eq!(atom.position, [0.0; 3]);
            assert_eq!(atom.velocity, [0.0, 0.0, point.launch_speed]);
        }
    }

    #[test]
    fn cloud_velocity_variance_matches_temperature() {
        let cfg = LaunchConfig {
            n_atoms: 100_000,
            ..LaunchConfig::default()
        };
        let cloud = sample_cloud(&cfg, 11);
        let expected = K_BOLTZMANN * cfg.temperature / PhysicalConstants::default().cs_mass;
        for axis in 0..2 {
            let mean: f64 =
                cloud.iter().map(|a| a.velocity[axis]).sum::<f64>() / cloud.len() as f64;
            let var: f64 = cloud
                .iter()
                .map(|a| (a.velocity[axis] - mean).powi(2))
                .sum::<f64>()
                / cloud.len() as f64;
            assert_relative_eq!(var, expected, max_relative = 0.05);
        }
    }

    #[test]
    fn transverse_drift_misses_second_pass() {
        // 13.7 mm/s of transverse drift walks 8.2 mm by the second passage
        // of a half-second fountain, outside the 6 mm aperture radius.
        let cfg = LaunchConfig::default();
        let v0 = launch_speed_for_apogee(0.3066, cfg.cavity_height);
        let atom = AtomSample {
            position: [0.0; 3],
            velocity: [0.0137, 0.0, v0],
            id: 0,
        };
        let record = survival(&atom, &cfg).unwrap();
        assert!(record.survived_cavity_up);
        assert!(!record.survived_cavity_down);
        let centred = AtomSample {
            position: [0.0; 3],
            velocity: [0.0, 0.0, v0],
            id: 0,
        };
        let record = survival(&centred, &cfg).unwrap();
        assert!(record.detected());
    }

    #[test]
    fn survival_fraction_decreases_with_temperature() {
        let mut fractions = Vec::new();
        for temperature in [1e-6, 3e-6, 9e-6] {
            let cfg = LaunchConfig {
                launch_speed: launch_speed_for_apogee(0.3066, 0.040),
                temperature,
                n_atoms: 4000,
                ..LaunchConfig::default()
            };
            let cloud = sample_cloud(&cfg, 5);
            let detected = cloud
                .iter()
                .filter(|a| survival(a, &cfg).map(|r| r.detected()).unwrap_or(false))
                .count();
            fractions.push(detected as f64 / cloud.len() as f64);
        }
        assert!(
            fractions[0] > fractions[1] && fractions[1] > fractions[2],
            "survival fractions not decreasing: {fractions:?}"
        );
    }

    proptest! {
        #[test]
        fn big_t_increases_with_launch_speed(
            v0 in 1.0f64..5.0,
            dv in 0.01f64..0.5,
        ) {
            let cfg = LaunchConfig::default();
            let lo = transit(v0, &cfg).unwrap();
            let hi = transit(v0 + dv, &cfg).unwrap();
            prop_assert!(hi.big_t > lo.big_t);
        }

        #[test]
        fn pass_speeds_equal_for_any_reachable_launch(v0 in 0.9f64..6.0) {
            let cfg = LaunchConfig::default();
            let record = transit(v0, &cfg).unwrap();
            let v_down = (v0 - GRAVITY * (record.t1 + record.big_t)).abs();
            prop_assert!((v_down - record.v_cavity).abs() < 1e-12);
        }
    }
}
