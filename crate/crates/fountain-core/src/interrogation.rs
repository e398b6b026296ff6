//! Two-level Ramsey interrogation of the clock transition.
//!
//! The clock states form an effective two-level system driven by the
//! cavity field. In the frame rotating at the microwave frequency a
//! constant drive segment with Rabi rate b, detuning delta, and phase phi
//! evolves the amplitudes (c_g, c_e) by the exact SU(2) propagator
//!
//!   U = [[ C + i S delta/W,  -i S (b/W) e^{-i phi} ],
//!        [ -i S (b/W) e^{i phi},  C - i S delta/W  ]]
//!
//! with W = sqrt(b^2 + delta^2), C = cos(W t / 2), S = sin(W t / 2). The
//! S/W ratio is evaluated through a sinc to stay finite as W -> 0.
//! Composing pulse, free (or leaking) flight, and pulse gives the Ramsey
//! transition probability; averaging it over a thermal cloud of ballistic
//! trajectories gives the fringe pattern an actual fountain records.
//! Residual microwave leakage during the flight is modeled as a weak
//! drive of relative amplitude epsilon at a fixed phase, which damps the
//! side fringes where the accumulated free phase makes the leak rotation
//! interfere destructively.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ballistics::{survival, transit, AtomSample, BallisticsError, LaunchConfig};

/// Pulse area of an optimal Ramsey pulse, rad.
pub const DEFAULT_PULSE_AREA: f64 = std::f64::consts::FRAC_PI_2;

// Atoms per parallel work unit; chunk results are reduced in index order
// so the sum is identical for any thread count.
const ATOM_CHUNK: usize = 256;

/// Amplitudes of the two clock states; |c_g|^2 + |c_e|^2 = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinState {
    pub c_g: Complex64,
    pub c_e: Complex64,
}

impl SpinState {
    /// All population in the lower clock state.
    pub fn ground() -> Self {
        Self {
            c_g: Complex64::new(1.0, 0.0),
            c_e: Complex64::new(0.0, 0.0),
        }
    }

    /// Transition probability |c_e|^2.
    pub fn excited_probability(&self) -> f64 {
        self.c_e.norm_sqr()
    }

    /// Total population, exactly 1 for unitary evolution.
    pub fn norm_sqr(&self) -> f64 {
        self.c_g.norm_sqr() + self.c_e.norm_sqr()
    }
}

/// One interval of constant drive in the rotating frame.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DriveSegment {
    /// Rabi rate b, rad/s; zero means free evolution.
    pub rabi_rad_s: f64,
    /// Detuning delta of the drive from the atomic resonance, rad/s.
    pub detuning_rad_s: f64,
    /// Drive phase phi, rad.
    pub phase_rad: f64,
    /// Segment length, s.
    pub duration_s: f64,
}

/// sin(x)/x with the series limit at small argument.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Exact propagator of one segment as a row-major 2x2 matrix acting on
/// (c_g, c_e).
fn segment_matrix(seg: &DriveSegment) -> [Complex64; 4] {
    let b = seg.rabi_rad_s;
    let delta = seg.detuning_rad_s;
    let omega = (b * b + delta * delta).sqrt();
    let half = 0.5 * seg.duration_s;
    let c = (omega * half).cos();
    // S / W, finite at W = 0 where the matrix is the identity.
    let s_over_omega = half * sinc(omega * half);
    let i = Complex64::i();
    let phase = Complex64::from_polar(1.0, seg.phase_rad);
    let diag = i * s_over_omega * delta;
    let off = -i * s_over_omega * b;
    [c + diag, off * phase.conj(), off * phase, c - diag]
}

/// Applies the drive segments to `state` in order.
pub fn propagate(state: SpinState, segments: &[DriveSegment]) -> SpinState {
    let mut s = state;
    for seg in segments {
        let m = segment_matrix(seg);
        s = SpinState {
            c_g: m[0] * s.c_g + m[1] * s.c_e,
            c_e: m[2] * s.c_g + m[3] * s.c_e,
        };
    }
    s
}

/// Ramsey transition probability for one atom: a pulse of length `tau_s`,
/// a flight of length `big_t_s`, and a second pulse, all at detuning
/// `delta_rad_s` and pulse Rabi rate `rabi_rad_s`. During the flight a
/// leakage field of relative amplitude `leak_ratio` and phase
/// `leak_phase_rad` keeps driving the atom; zero ratio is free flight.
pub fn ramsey_probability(
    delta_rad_s: f64,
    rabi_rad_s: f64,
    tau_s: f64,
    big_t_s: f64,
    leak_ratio: f64,
    leak_phase_rad: f64,
) -> f64 {
    let pulse = DriveSegment {
        rabi_rad_s,
        detuning_rad_s: delta_rad_s,
        phase_rad: 0.0,
        duration_s: tau_s,
    };
    let flight = DriveSegment {
        rabi_rad_s: leak_ratio * rabi_rad_s,
        detuning_rad_s: delta_rad_s,
        phase_rad: leak_phase_rad,
        duration_s: big_t_s,
    };
    propagate(SpinState::ground(), &[pulse, flight, pulse]).excited_probability()
}

/// Interrogation parameters on top of a launch geometry.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RamseyConfig {
    /// Area b * tau of each cavity pulse, rad.
    pub pulse_area_rad: f64,
    /// Leakage amplitude relative to the pulse Rabi rate.
    pub leak_ratio: f64,
    /// Phase of the leakage field, rad.
    pub leak_phase_rad: f64,
    /// Spread of the vertical launch speed, m/s. The moving-molasses
    /// launch sets this independently of the transverse temperature.
    pub velocity_sigma_mps: f64,
}

impl Default for RamseyConfig {
    fn default() -> Self {
        Self {
            pulse_area_rad: DEFAULT_PULSE_AREA,
            leak_ratio: 0.0,
            leak_phase_rad: 0.0,
            velocity_sigma_mps: 0.010,
        }
    }
}

/// Cloud-averaged Ramsey fringe pattern on a detuning grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FringePattern {
    /// Detuning grid, Hz.
    pub detunings_hz: Vec<f64>,
    /// Mean transition probability of the surviving atoms at each point.
    pub probabilities: Vec<f64>,
    /// Atoms launched.
    pub n_atoms: usize,
    /// Atoms that cleared the cavity twice and returned to the probe.
    pub n_survivors: usize,
    /// Seed the cloud was sampled with.
    pub seed: u64,
    /// Pulse length of the nominal (mean-speed) trajectory, s.
    pub nominal_tau_s: f64,
    /// Flight time of the nominal trajectory, s.
    pub nominal_big_t_s: f64,
}

/// Amplitude measures of a fringe pattern.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FringeMetrics {
    /// Full width at half maximum of the central fringe, Hz.
    pub fwhm_hz: f64,
    /// Peak-to-valley amplitude within the central lobe.
    pub central_amplitude: f64,
    /// Peak-to-valley amplitude of the stronger first side lobe.
    pub adjacent_amplitude: f64,
    /// adjacent_amplitude / central_amplitude; 1 for an undamped pattern,
    /// below 1 when leakage or velocity spread wash out the side fringes.
    pub adjacent_to_central_ratio: f64,
}

#[derive(Debug, Error)]
pub enum InterrogationError {
    #[error(transparent)]
    Ballistics(#[from] BallisticsError),
    #[error("no atoms survived to detection")]
    NoSurvivors,
    #[error("detuning grid is empty or not strictly increasing")]
    BadGrid,
    #[error("grid spacing {spacing_hz} Hz exceeds {limit_hz} Hz needed to resolve the fringe")]
    GridTooCoarse { spacing_hz: f64, limit_hz: f64 },
    #[error("grid must span at least +-{required_hz} Hz, got {span_hz} Hz")]
    GridTooNarrow { span_hz: f64, required_hz: f64 },
    #[error("pattern has no central fringe to measure")]
    FlatPattern,
}

/// Samples atom `id` of the interrogation cloud: position from the trap,
/// transverse velocity from the molasses temperature, vertical velocity
/// from the launch speed and its spread. Stream-per-atom keeps every atom
/// reproducible independently of batching.
pub fn sample_interrogation_atom(
    launch: &LaunchConfig,
    velocity_sigma: f64,
    seed: u64,
    id: u64,
) -> AtomSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    let pos = Normal::new(0.0, launch.cloud_sigma_pos).expect("finite sigma");
    let transverse = Normal::new(0.0, launch.velocity_sigma_thermal()).expect("finite sigma");
    let vertical = Normal::new(launch.launch_speed, velocity_sigma).expect("finite sigma");
    let position = [
        pos.sample(&mut rng),
        pos.sample(&mut rng),
        pos.sample(&mut rng),
    ];
    let velocity = [
        transverse.sample(&mut rng),
        transverse.sample(&mut rng),
        vertical.sample(&mut rng),
    ];
    AtomSample {
        position,
        velocity,
        id,
    }
}

/// Computes the cloud-averaged fringe pattern over `detunings_hz`.
///
/// Every atom flies its own ballistic trajectory: its pulse length and
/// flight time follow from its vertical speed while the Rabi rate is the
/// cavity's, fixed by the nominal trajectory's pulse area. Atoms that
/// miss an aperture or the probe beam, or fail to reach the cavity, drop
/// out of the average. The reduction over atoms is performed in a fixed
/// order, so results are byte-identical for any thread count.
pub fn pattern(
    cfg: &RamseyConfig,
    launch: &LaunchConfig,
    detunings_hz: &[f64],
    n_atoms: usize,
    seed: u64,
) -> Result<FringePattern, InterrogationError> {
    if detunings_hz.is_empty() || detunings_hz.windows(2).any(|w| w[1] <= w[0]) {
        return Err(InterrogationError::BadGrid);
    }
    let nominal = transit(launch.launch_speed, launch)?;
    let rabi = cfg.pulse_area_rad / nominal.tau;

    let ids: Vec<u64> = (0..n_atoms as u64).collect();
    let chunks: Vec<(Vec<f64>, usize)> = ids
        .par_chunks(ATOM_CHUNK)
        .map(|chunk| {
            let mut sum = vec![0.0; detunings_hz.len()];
            let mut survivors = 0usize;
            for &id in chunk {
                let atom = sample_interrogation_atom(launch, cfg.velocity_sigma_mps, seed, id);
                let Ok(record) = survival(&atom, launch) else {
                    continue;
                };
                if !record.detected() {
                    continue;
                }
                survivors += 1;
                for (slot, &delta_hz) in sum.iter_mut().zip(detunings_hz) {
                    *slot += ramsey_probability(
                        std::f64::consts::TAU * delta_hz,
                        rabi,
                        record.tau,
                        record.big_t,
                        cfg.leak_ratio,
                        cfg.leak_phase_rad,
                    );
                }
            }
            (sum, survivors)
        })
        .collect();

    let mut probabilities = vec![0.0; detunings_hz.len()];
    let mut n_survivors = 0usize;
    for (sum, survivors) in &chunks {
        for (total, x) in probabilities.iter_mut().zip(sum) {
            *total += x;
        }
        n_survivors += survivors;
    }
    if n_survivors == 0 {
        return Err(InterrogationError::NoSurvivors);
    }
    for p in &mut probabilities {
        *p /= n_survivors as f64;
    }

    Ok(FringePattern {
        detunings_hz: detunings_hz.to_vec(),
        probabilities,
        n_atoms,
        n_survivors,
        seed,
        nominal_tau_s: nominal.tau,
        nominal_big_t_s: nominal.big_t,
    })
}

/// Peak-to-valley amplitude over an index window, None when empty.
fn window_amplitude(p: &[f64], idx: impl Iterator<Item = usize>) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut any = false;
    for i in idx {
        lo = lo.min(p[i]);
        hi = hi.max(p[i]);
        any = true;
    }
    any.then_some((hi, lo))
}

/// Measures the central fringe and its first side lobes.
///
/// The central lobe is |delta| <= 1/(2T), the side lobes the adjacent
/// half-period windows on either side. The half-maximum width is found by
/// walking outward from the central peak and interpolating the crossings
/// linearly; the grid must be finer than 1/(8T) and reach past 3/(2T) on
/// both sides for these measures to be meaningful.
pub fn fringe_metrics(pattern: &FringePattern) -> Result<FringeMetrics, InterrogationError> {
    let grid = &pattern.detunings_hz;
    let p = &pattern.probabilities;
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(InterrogationError::BadGrid);
    }
    let half_period = 1.0 / (2.0 * pattern.nominal_big_t_s);
    let limit = half_period / 4.0;
    let spacing = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if spacing > limit * (1.0 + 1e-9) {
        return Err(InterrogationError::GridTooCoarse {
            spacing_hz: spacing,
            limit_hz: limit,
        });
    }
    let required = 3.0 * half_period;
    let span = grid.last().unwrap().min(-grid[0]);
    if span < required * (1.0 - 1e-9) {
        return Err(InterrogationError::GridTooNarrow {
            span_hz: span,
            required_hz: required,
        });
    }

    let in_window = |lo: f64, hi: f64| {
        grid.iter()
            .enumerate()
            .filter(move |(_, &d)| d >= lo && d <= hi)
            .map(|(i, _)| i)
    };
    // Window boundaries sit on the pattern nulls by construction, and the
    // nominal period never matches the grid exactly; padding by half a
    // step lets adjacent windows share their boundary null instead of
    // assigning it to one side by rounding.
    let pad = spacing / 2.0;
    let (central_hi, central_lo) =
        window_amplitude(p, in_window(-half_period - pad, half_period + pad)).ok_or(
            InterrogationError::GridTooCoarse {
                spacing_hz: spacing,
                limit_hz: limit,
            },
        )?;
    let central_amplitude = central_hi - central_lo;
    if central_amplitude <= 0.0 {
        return Err(InterrogationError::FlatPattern);
    }
    let side = [
        window_amplitude(p, in_window(half_period - pad, 3.0 * half_period + pad)),
        window_amplitude(p, in_window(-3.0 * half_period - pad, -half_period + pad)),
    ];
    let adjacent_amplitude = side
        .iter()
        .flatten()
        .map(|(hi, lo)| hi - lo)
        .fold(0.0, f64::max);

    // Half-maximum crossings, walking outward from the central peak.
    let peak = in_window(-half_period, half_period)
        .max_by(|&a, &b| p[a].total_cmp(&p[b]))
        .expect("central window verified non-empty");
    let level = central_lo + central_amplitude / 2.0;
    let cross = |mut i: usize, step: isize| -> Option<f64> {
        loop {
            let j = i.checked_add_signed(step)?;
            if j >= grid.len() {
                return None;
            }
            if p[j] < level {
                let f = (p[i] - level) / (p[i] - p[j]);
                return Some(grid[i] + f * (grid[j] - grid[i]));
            }
            i = j;
        }
    };
    let right = cross(peak, 1).ok_or(InterrogationError::FlatPattern)?;
    let left = cross(peak, -1).ok_or(InterrogationError::FlatPattern)?;

    Ok(FringeMetrics {
        fwhm_hz: right - left,
        central_amplitude,
        adjacent_amplitude,
        adjacent_to_central_ratio: adjacent_amplitude / central_amplitude,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    /// Closed form of the Ramsey probability without leakage, used as an
    /// independent check on the matrix product.
    fn closed_form(delta: f64, b: f64, tau: f64, big_t: f64) -> f64 {
        let omega = (b * b + delta * delta).sqrt();
        if omega == 0.0 {
            return 0.0;
        }
        let (sp, cp) = (omega * tau / 2.0).sin_cos();
        let (sf, cf) = (delta * big_t / 2.0).sin_cos();
        let inner = cp * cf - (delta / omega) * sp * sf;
        4.0 * (b * b / (omega * omega)) * sp * sp * inner * inner
    }

    fn fast_launch() -> LaunchConfig {
        // Apogee 110 mm above the cavity: the half-second-class fountain
        // used throughout the fringe tests.
        LaunchConfig {
            launch_speed: crate::ballistics::launch_speed_for_apogee(0.110, 0.040),
            ..LaunchConfig::default()
        }
    }

    fn grid(span: f64, step: f64) -> Vec<f64> {
        let n = (span / step).round() as i64;
        (-n..=n).map(|i| i as f64 * step).collect()
    }

    #[test]
    fn resonant_pi_pulse_inverts() {
        let seg = DriveSegment {
            rabi_rad_s: PI / 1e-3,
            detuning_rad_s: 0.0,
            phase_rad: 0.0,
            duration_s: 1e-3,
        };
        let out = propagate(SpinState::ground(), &[seg]);
        assert_abs_diff_eq!(out.excited_probability(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn free_evolution_only_rotates_phases() {
        let seg = DriveSegment {
            rabi_rad_s: 0.0,
            detuning_rad_s: 123.0,
            phase_rad: 0.7,
            duration_s: 0.01,
        };
        let start = SpinState {
            c_g: Complex64::new(0.6, 0.0),
            c_e: Complex64::new(0.0, 0.8),
        };
        let out = propagate(start, &[seg]);
        assert_abs_diff_eq!(out.c_g.norm(), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(out.c_e.norm(), 0.8, epsilon = 1e-12);
        let phase = 123.0 * 0.01 / 2.0;
        assert_abs_diff_eq!((out.c_g / start.c_g).arg(), phase, epsilon = 1e-12);
    }

    #[test]
    fn norm_preserved_over_many_random_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut state = SpinState::ground();
        for _ in 0..10_000 {
            let seg = DriveSegment {
                rabi_rad_s: rng.random_range(0.0..2e4),
                detuning_rad_s: rng.random_range(-2e4..2e4),
                phase_rad: rng.random_range(0.0..TAU),
                duration_s: rng.random_range(0.0..2e-3),
            };
            state = propagate(state, &[seg]);
        }
        assert_abs_diff_eq!(state.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn matrix_matches_ode_integration() {
        // RK4 on i dc/dt = H c with H = [[-d/2, (b/2)e^{-i phi}],
        // [(b/2)e^{i phi}, d/2]], the Hamiltonian whose exponential the
        // segment matrix claims to be.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let seg = DriveSegment {
                rabi_rad_s: rng.random_range(0.0..1e4),
                detuning_rad_s: rng.random_range(-1e4..1e4),
                phase_rad: rng.random_range(0.0..TAU),
                duration_s: rng.random_range(1e-5..1e-2),
            };
            let omega = (seg.rabi_rad_s.powi(2) + seg.detuning_rad_s.powi(2)).sqrt();
            let steps = (4000.0_f64).max(omega * seg.duration_s * 400.0) as usize;
            let dt = seg.duration_s / steps as f64;
            let h01 = Complex64::from_polar(seg.rabi_rad_s / 2.0, -seg.phase_rad);
            let h = [
                Complex64::new(-seg.detuning_rad_s / 2.0, 0.0),
                h01,
                h01.conj(),
                Complex64::new(seg.detuning_rad_s / 2.0, 0.0),
            ];
            let deriv = |c: [Complex64; 2]| {
                let i = Complex64::i();
                [
                    -i * (h[0] * c[0] + h[1] * c[1]),
                    -i * (h[2] * c[0] + h[3] * c[1]),
                ]
            };
            let mut c = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
            for _ in 0..steps {
                let k1 = deriv(c);
                let k2 = deriv([c[0] + 0.5 * dt * k1[0], c[1] + 0.5 * dt * k1[1]]);
                let k3 = deriv([c[0] + 0.5 * dt * k2[0], c[1] + 0.5 * dt * k2[1]]);
                let k4 = deriv([c[0] + dt * k3[0], c[1] + dt * k3[1]]);
                c = [
                    c[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                    c[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                ];
            }
            let exact = propagate(SpinState::ground(), &[seg]);
            assert_abs_diff_eq!(exact.c_g.re, c[0].re, epsilon = 1e-8);
            assert_abs_diff_eq!(exact.c_g.im, c[0].im, epsilon = 1e-8);
            assert_abs_diff_eq!(exact.c_e.re, c[1].re, epsilon = 1e-8);
            assert_abs_diff_eq!(exact.c_e.im, c[1].im, epsilon = 1e-8);
        }
    }

    #[test]
    fn ramsey_probability_is_even_in_detuning() {
        for delta_hz in [0.3, 1.1, 2.7, 5.0] {
            let d = TAU * delta_hz;
            let b = FRAC_PI_2 / 0.002;
            let plus = ramsey_probability(d, b, 0.002, 0.5, 0.0, 0.0);
            let minus = ramsey_probability(-d, b, 0.002, 0.5, 0.0, 0.0);
            assert_abs_diff_eq!(plus, minus, epsilon = 1e-10);
        }
    }

    #[test]
    fn resonant_leak_at_zero_phase_extends_the_rotation() {
        // At zero detuning every segment rotates about the same axis, so
        // areas add: pi/2 + eps*b*T + pi/2 with eps*b*T = pi/4 gives
        // P = sin^2(5 pi / 8).
        let tau = 0.002;
        let big_t = 0.5;
        let b = FRAC_PI_2 / tau;
        let eps = PI / 4.0 / (b * big_t);
        let p = ramsey_probability(0.0, b, tau, big_t, eps, 0.0);
        assert_abs_diff_eq!(p, (5.0 * PI / 8.0).sin().powi(2), epsilon = 1e-12);
        // Quadrature leak tilts the second rotation so the pi/2 pulses
        // still complete the inversion exactly.
        let p_quad = ramsey_probability(0.0, b, tau, big_t, eps, FRAC_PI_2);
        assert_abs_diff_eq!(p_quad, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pattern_matches_closed_form_for_a_cold_pointlike_cloud() {
        let mut launch = fast_launch();
        launch.temperature = 0.0;
        launch.cloud_sigma_pos = 0.0;
        let cfg = RamseyConfig {
            velocity_sigma_mps: 0.0,
            ..RamseyConfig::default()
        };
        let detunings = grid(6.0, 0.2);
        let pat = pattern(&cfg, &launch, &detunings, 64, 3).unwrap();
        assert_eq!(pat.n_survivors, 64);
        let b = DEFAULT_PULSE_AREA / pat.nominal_tau_s;
        for (&d, &p) in pat.detunings_hz.iter().zip(&pat.probabilities) {
            let expect = closed_form(TAU * d, b, pat.nominal_tau_s, pat.nominal_big_t_s);
            assert_abs_diff_eq!(p, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn central_fringe_width_tracks_flight_time() {
        let launch = fast_launch();
        let cfg = RamseyConfig::default();
        let detunings = grid(8.0, 0.1);
        let pat = pattern(&cfg, &launch, &detunings, 2000, 5).unwrap();
        let metrics = fringe_metrics(&pat).unwrap();
        let expect = 1.0 / (2.0 * pat.nominal_big_t_s);
        assert_abs_diff_eq!(metrics.fwhm_hz, expect, epsilon = 0.05 * expect);
        assert!(metrics.adjacent_to_central_ratio < 1.0);
        assert!(metrics.adjacent_to_central_ratio > 0.5);
    }

    #[test]
    fn fwhm_is_exact_on_an_ideal_cosine_pattern() {
        // cos^2(pi delta T) with tau -> 0: the half maximum falls exactly
        // on the quarter-period grid points, so interpolation is exact.
        let big_t = 0.5;
        let step = 1.0 / (8.0 * big_t);
        let detunings = grid(4.0, step);
        let probabilities = detunings
            .iter()
            .map(|d| (PI * d * big_t).cos().powi(2))
            .collect();
        let pat = FringePattern {
            detunings_hz: detunings,
            probabilities,
            n_atoms: 1,
            n_survivors: 1,
            seed: 0,
            nominal_tau_s: 1e-9,
            nominal_big_t_s: big_t,
        };
        let metrics = fringe_metrics(&pat).unwrap();
        assert_abs_diff_eq!(metrics.fwhm_hz, 1.0 / (2.0 * big_t), epsilon = 1e-12);
        assert_abs_diff_eq!(metrics.adjacent_to_central_ratio, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn metrics_reject_coarse_and_narrow_grids() {
        let launch = fast_launch();
        let cfg = RamseyConfig::default();
        let coarse = pattern(&cfg, &launch, &grid(8.0, 1.0), 64, 5).unwrap();
        assert!(matches!(
            fringe_metrics(&coarse),
            Err(InterrogationError::GridTooCoarse { .. })
        ));
        let narrow = pattern(&cfg, &launch, &grid(2.0, 0.1), 64, 5).unwrap();
        assert!(matches!(
            fringe_metrics(&narrow),
            Err(InterrogationError::GridTooNarrow { .. })
        ));
    }

    #[test]
    fn velocity_spread_washes_out_side_fringes() {
        let launch = fast_launch();
        let detunings = grid(8.0, 0.1);
        let ratio = |sigma: f64| {
            let cfg = RamseyConfig {
                velocity_sigma_mps: sigma,
                ..RamseyConfig::default()
            };
            let pat = pattern(&cfg, &launch, &detunings, 1500, 9).unwrap();
            fringe_metrics(&pat).unwrap().adjacent_to_central_ratio
        };
        let tight = ratio(0.005);
        let loose = ratio(0.020);
        assert!(
            loose < tight,
            "side fringes must fade with velocity spread: {loose} vs {tight}"
        );
    }

    #[test]
    fn no_survivors_is_an_error() {
        let mut launch = fast_launch();
        launch.aperture_radius = 1e-9;
        let cfg = RamseyConfig::default();
        let result = pattern(&cfg, &launch, &grid(4.0, 0.2), 32, 1);
        assert!(matches!(result, Err(InterrogationError::NoSurvivors)));
    }

    #[test]
    fn unreachable_cavity_is_an_error() {
        let mut launch = fast_launch();
        launch.launch_speed = 0.1;
        let cfg = RamseyConfig::default();
        let result = pattern(&cfg, &launch, &grid(4.0, 0.2), 32, 1);
        assert!(matches!(result, Err(InterrogationError::Ballistics(_))));
    }

    #[test]
    fn pattern_is_deterministic_in_seed() {
        let launch = fast_launch();
        let cfg = RamseyConfig::default();
        let detunings = grid(4.0, 0.2);
        let a = pattern(&cfg, &launch, &detunings, 300, 42).unwrap();
        let b = pattern(&cfg, &launch, &detunings, 300, 42).unwrap();
        let c = pattern(&cfg, &launch, &detunings, 300, 43).unwrap();
        assert_eq!(a.probabilities, b.probabilities);
        assert_ne!(a.probabilities, c.probabilities);
    }

    #[test]
    fn pattern_is_identical_across_thread_counts() {
        let launch = fast_launch();
        let cfg = RamseyConfig::default();
        let detunings = grid(4.0, 0.2);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| pattern(&cfg, &launch, &detunings, 700, 8).unwrap())
        };
        let single = run(1);
        let multi = run(4);
        assert_eq!(single.probabilities, multi.probabilities);
        assert_eq!(single.n_survivors, multi.n_survivors);
    }

    proptest! {
        #[test]
        fn closed_form_agrees_with_matrix_product(
            delta_hz in -20.0f64..20.0,
            area in 0.1f64..3.0,
            tau in 1e-4f64..5e-3,
            big_t in 0.05f64..1.0,
        ) {
            let b = area / tau;
            let delta = TAU * delta_hz;
            let matrix = ramsey_probability(delta, b, tau, big_t, 0.0, 0.0);
            let explicit = closed_form(delta, b, tau, big_t);
            prop_assert!((matrix - explicit).abs() < 1e-10);
        }

        #[test]
        fn segment_composition_is_associative(
            b in 0.0f64..1e4,
            delta in -1e4f64..1e4,
            phase in 0.0f64..TAU,
            t1 in 0.0f64..2e-3,
            t2 in 0.0f64..2e-3,
        ) {
            let seg = |duration_s: f64| DriveSegment {
                rabi_rad_s: b,
                detuning_rad_s: delta,
                phase_rad: phase,
                duration_s,
            };
            let whole = propagate(SpinState::ground(), &[seg(t1 + t2)]);
            let split = propagate(SpinState::ground(), &[seg(t1), seg(t2)]);
            prop_assert!((whole.c_g - split.c_g).norm() < 1e-12);
            prop_assert!((whole.c_e - split.c_e).norm() < 1e-12);
        }
    }
}
