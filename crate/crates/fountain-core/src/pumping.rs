//! Optical pumping rate equations over the 16 ground sublevels.
//!
//! Excited states are adiabatically eliminated: a laser excites a ground
//! sublevel at a rate proportional to its saturation and the polarization-
//! weighted dipole strength, and the excitation immediately redistributes
//! over the ground manifold through the spontaneous-decay weights. The
//! state is the 16-entry population vector; integration is explicit Euler
//! with an enforced step bound, and time is measured in units of the
//! (symbolic) scattering-rate scale, so only dimensionless products matter
//! for end states.
//!
//! Two selection schemes are built on this engine. The one-laser scheme
//! empties F=4 through the 4 -> 4' transition, costing each transferred
//! atom an average of exactly 12/5 scattered photons (the inverse 4' -> 3
//! branching fraction). The two-laser scheme adds a linearly polarized
//! repumper on 3 -> 3'; at polarization angle 0 the only state it cannot
//! excite is (3, 0), so population funnels into that dark state. Its
//! photon budget counts repumper scatters: the hyperfine pump runs on
//! molasses light whose scattering is part of the cooling cycle, while the
//! repumper cycles are the ones that heat previously selected atoms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angular::{
    decay_distribution, dipole_strength, ExcitedSublevel, Sublevel, GROUND_COUNT,
};

/// Photon recoil speed of the D2 line, m/s (h / (m lambda)).
pub const RECOIL_SPEED: f64 = 3.52e-3;
/// Hard ceiling on max scattering rate times Euler step.
pub const MAX_RATE_DT: f64 = 0.1;
/// Default saturation of the hyperfine pump (4 -> 4').
pub const PUMP_SATURATION: f64 = 3.0;
/// Default saturation of the dark-state repumper (3 -> 3').
pub const REPUMP_SATURATION: f64 = 1.0;
/// Default polarization angle of the hyperfine pump. The pump is molasses
/// light whose linear polarization lies perpendicular to the horizontal
/// bias field, giving an equal sigma+/sigma- mix with no pi component, so
/// no F=4 sublevel is dark and the level empties completely.
pub const PUMP_POLARIZATION_ANGLE: f64 = std::f64::consts::FRAC_PI_2;
/// Integration horizon that lets any of the schemes here run to their
/// stationary state; evolution stops early once scattering ceases.
pub const COMPLETION_DURATION: f64 = 1e6;

// Total scattering rate below which the distribution is stationary for
// every purpose here; lets run-to-completion calls return early.
const RATE_FLOOR: f64 = 1e-13;
// Step bound used when this module picks its own dt.
const INTERNAL_RATE_DT: f64 = 0.02;

/// Population distribution over the 16 ground sublevels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundPopulations {
    p: [f64; GROUND_COUNT],
}

impl GroundPopulations {
    /// Uniform distribution over all 16 sublevels.
    pub fn uniform() -> Self {
        Self {
            p: [1.0 / GROUND_COUNT as f64; GROUND_COUNT],
        }
    }

    /// Uniform distribution over the 9 sublevels of F=4.
    pub fn uniform_f4() -> Self {
        let mut p = [0.0; GROUND_COUNT];
        for g in Sublevel::all() {
            if g.f().twice() == 8 {
                p[g.index()] = 1.0 / 9.0;
            }
        }
        Self { p }
    }

    /// Everything in a single sublevel.
    pub fn pure(g: Sublevel) -> Self {
        let mut p = [0.0; GROUND_COUNT];
        p[g.index()] = 1.0;
        Self { p }
    }

    /// Builds from raw entries; rejects negatives and non-unit totals.
    pub fn from_array(p: [f64; GROUND_COUNT]) -> Result<Self, PumpingError> {
        let pops = Self { p };
        pops.validate()?;
        Ok(pops)
    }

    /// Population of one sublevel.
    pub fn get(&self, g: Sublevel) -> f64 {
        self.p[g.index()]
    }

    /// All entries in [`Sublevel::index`] order.
    pub fn as_array(&self) -> &[f64; GROUND_COUNT] {
        &self.p
    }

    /// Total population in hyperfine level F (3 or 4).
    pub fn level_total(&self, f: i32) -> f64 {
        match f {
            3 => self.p[..7].iter().sum(),
            4 => self.p[7..].iter().sum(),
            _ => panic!("ground hyperfine level must be 3 or 4"),
        }
    }

    fn validate(&self) -> Result<(), PumpingError> {
        let total: f64 = self.p.iter().sum();
        if self.p.iter().any(|&x| x < -1e-12) || (total - 1.0).abs() > 1e-9 {
            return Err(PumpingError::InvalidPopulations { total });
        }
        Ok(())
    }
}

/// One resonant pump laser, defined by the hyperfine transition it drives
/// and its linear polarization angle against the quantization axis.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PumpLaser {
    /// Ground hyperfine level the laser is resonant with (3 or 4); the
    /// other level is a hyperfine splitting away and scatters nothing.
    pub ground_f: i32,
    /// Excited hyperfine level addressed (2..=5).
    pub excited_f: i32,
    /// Dimensionless saturation s0; detuning is folded into this value.
    pub saturation: f64,
    /// Angle between the linear polarization and the quantization axis:
    /// weights are w_pi = cos^2, w_sigma+- = sin^2 / 2.
    pub polarization_angle_rad: f64,
}

impl PumpLaser {
    pub fn new(
        ground_f: i32,
        excited_f: i32,
        saturation: f64,
        polarization_angle_rad: f64,
    ) -> Result<Self, PumpingError> {
        if !(ground_f == 3 || ground_f == 4)
            || !(2..=5).contains(&excited_f)
            || (excited_f - ground_f).abs() > 1
        {
            return Err(PumpingError::InvalidTransition {
                ground_f,
                excited_f,
            });
        }
        if saturation < 0.0 {
            return Err(PumpingError::NegativeSaturation(saturation));
        }
        Ok(Self {
            ground_f,
            excited_f,
            saturation,
            polarization_angle_rad,
        })
    }

    /// Polarization weights [sigma-, pi, sigma+]; they sum to 1.
    pub fn polarization_weights(&self) -> [f64; 3] {
        let (sin, cos) = self.polarization_angle_rad.sin_cos();
        let sigma = sin * sin / 2.0;
        [sigma, cos * cos, sigma]
    }

    /// The default hyperfine pump on 4 -> 4'.
    pub fn hyperfine_pump(saturation: f64) -> Self {
        Self::new(4, 4, saturation, PUMP_POLARIZATION_ANGLE).expect("valid pump transition")
    }

    /// The dark-state repumper on 3 -> 3' at polarization angle theta.
    pub fn repumper(saturation: f64, theta: f64) -> Self {
        Self::new(3, 3, saturation, theta).expect("valid repumper transition")
    }
}

/// Outcome of an evolution: final populations plus photon and recoil
/// accounting.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PumpResult {
    pub populations: GroundPopulations,
    /// Mean photons scattered per atom, all lasers combined.
    pub mean_photons: f64,
    /// Isotropic random-walk recoil estimate per axis,
    /// v_recoil sqrt(mean_photons / 3), m/s.
    pub mean_recoil_speed_addition: f64,
}

/// Outcome of the two-laser dark-state selection.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TwoLaserOutcome {
    /// State after the budgeted two-laser phase.
    pub selected: PumpResult,
    /// One-laser selection of the same input, run to completion.
    pub baseline: PumpResult,
    /// p(3,0) of `selected` over p(3,0) of `baseline`.
    pub enhancement: f64,
    /// Photons scattered on the repumping transition alone; this is the
    /// quantity the photon budget limits.
    pub selection_photons: f64,
}

/// One recorded point of a population trajectory.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrajectorySample {
    /// Elapsed time in scattering-rate units.
    pub time: f64,
    pub populations: [f64; GROUND_COUNT],
    /// Cumulative mean photons scattered per atom.
    pub photons: f64,
}

#[derive(Debug, Error)]
pub enum PumpingError {
    #[error("saturation must be non-negative, got {0}")]
    NegativeSaturation(f64),
    #[error("no dipole-allowed transition from F={ground_f} to F'={excited_f}")]
    InvalidTransition { ground_f: i32, excited_f: i32 },
    #[error("populations must be non-negative and sum to 1, total {total}")]
    InvalidPopulations { total: f64 },
    #[error("step too large: max rate times dt is {0}, limit {MAX_RATE_DT}")]
    StepTooLarge(f64),
    #[error("photon budget must be non-negative, got {0}")]
    NegativeBudget(f64),
}

/// Per-sublevel excitation rates and the ground-to-ground transfer matrix
/// for a fixed laser set. `transfer[g][g2]` is the rate contribution of
/// population flowing g -> g2 via excitation and decay; its row sums equal
/// `rates`, which keeps Euler steps population-conserving.
struct RateNetwork {
    rates: [f64; GROUND_COUNT],
    transfer: [[f64; GROUND_COUNT]; GROUND_COUNT],
    /// Excitation rates of the budget-tracked laser, when one is tagged.
    tagged_rates: [f64; GROUND_COUNT],
}

fn build_network(lasers: &[PumpLaser], tagged: Option<usize>) -> Result<RateNetwork, PumpingError> {
    let mut rates = [0.0; GROUND_COUNT];
    let mut tagged_rates = [0.0; GROUND_COUNT];
    let mut transfer = [[0.0; GROUND_COUNT]; GROUND_COUNT];
    for (li, laser) in lasers.iter().enumerate() {
        if laser.saturation < 0.0 {
            return Err(PumpingError::NegativeSaturation(laser.saturation));
        }
        PumpLaser::new(
            laser.ground_f,
            laser.excited_f,
            laser.saturation,
            laser.polarization_angle_rad,
        )?;
        let weights = laser.polarization_weights();
        for g in Sublevel::all() {
            if g.f().as_int() != Some(laser.ground_f) {
                continue;
            }
            for (qi, q) in [-1i32, 0, 1].into_iter().enumerate() {
                let m = g.m().as_int().expect("ground m is whole");
                let Some(e) = ExcitedSublevel::new(laser.excited_f, m + q) else {
                    continue;
                };
                let rate = 0.5 * laser.saturation * weights[qi] * dipole_strength(g, q, e);
                if rate == 0.0 {
                    continue;
                }
                rates[g.index()] += rate;
                if tagged == Some(li) {
                    tagged_rates[g.index()] += rate;
                }
                let decay = decay_distribution(e);
                for (g2, w) in decay.iter().enumerate() {
                    transfer[g.index()][g2] += rate * w;
                }
            }
        }
    }
    Ok(RateNetwork {
        rates,
        transfer,
        tagged_rates,
    })
}

/// Per-sublevel photon scattering rates (units of the rate scale) for the
/// given laser set. The rates are population-independent; `pop` is taken
/// for validation symmetry with [`evolve`].
pub fn scattering_rates(
    pop: &GroundPopulations,
    lasers: &[PumpLaser],
) -> Result<[f64; GROUND_COUNT], PumpingError> {
    pop.validate()?;
    Ok(build_network(lasers, None)?.rates)
}

struct EvolveOutcome {
    populations: GroundPopulations,
    photons: f64,
    tagged_photons: f64,
    trajectory: Vec<TrajectorySample>,
}

/// Core Euler loop. Stops at `duration`, at the tagged-photon budget, or
/// when scattering has ceased. A budget stop lands exactly on the budget
/// by shortening the final step.
fn evolve_inner(
    pop: &GroundPopulations,
    network: &RateNetwork,
    duration: f64,
    dt: f64,
    budget: Option<f64>,
    record_stride: Option<usize>,
) -> Result<EvolveOutcome, PumpingError> {
    pop.validate()?;
    let max_rate = network.rates.iter().cloned().fold(0.0, f64::max);
    if max_rate * dt > MAX_RATE_DT {
        return Err(PumpingError::StepTooLarge(max_rate * dt));
    }

    let mut p = pop.p;
    let mut photons = 0.0;
    let mut tagged_photons = 0.0;
    let mut t = 0.0;
    let mut trajectory = Vec::new();
    let mut step_index = 0usize;
    let mut record = |t: f64, p: &[f64; GROUND_COUNT], photons: f64| {
        trajectory.push(TrajectorySample {
            time: t,
            populations: *p,
            photons,
        });
    };
    if record_stride.is_some() {
        record(0.0, &p, 0.0);
    }

    while t < duration {
        let mut step = dt.min(duration - t);
        let mut flux = [0.0; GROUND_COUNT];
        let mut total_rate = 0.0;
        let mut tagged_rate = 0.0;
        for g in 0..GROUND_COUNT {
            flux[g] = network.rates[g] * p[g];
            total_rate += flux[g];
            tagged_rate += network.tagged_rates[g] * p[g];
        }
        if total_rate < RATE_FLOOR {
            break;
        }
        let mut budget_hit = false;
        if let Some(budget) = budget {
            if tagged_photons >= budget {
                break;
            }
            let remaining = budget - tagged_photons;
            if tagged_rate * step > remaining {
                // Shorten the step so the tagged photon count lands on the
                // budget exactly (the rates are frozen within a step); the
                // product being positive guarantees tagged_rate > 0.
                step = remaining / tagged_rate;
                budget_hit = true;
            }
        }
        let mut next = [0.0; GROUND_COUNT];
        for g in 0..GROUND_COUNT {
            let inflow: f64 = network
                .transfer
                .iter()
                .zip(&p)
                .map(|(row, pop)| row[g] * pop)
                .sum();
            next[g] = p[g] + step * (inflow - flux[g]);
        }
        p = next;
        photons += total_rate * step;
        tagged_photons += tagged_rate * step;
        t += step;
        step_index += 1;
        if let Some(stride) = record_stride {
            if step_index % stride == 0 {
                record(t, &p, photons);
            }
        }
        if budget_hit {
            break;
        }
    }
    if let Some(stride) = record_stride {
        if step_index % stride != 0 {
            record(t, &p, photons);
        }
    }

    Ok(EvolveOutcome {
        populations: GroundPopulations { p },
        photons,
        tagged_photons,
        trajectory,
    })
}

fn pump_result(out: &EvolveOutcome) -> PumpResult {
    PumpResult {
        populations: out.populations,
        mean_photons: out.photons,
        mean_recoil_speed_addition: RECOIL_SPEED * (out.photons / 3.0).sqrt(),
    }
}

/// Integrates the rate equations for `duration` with explicit Euler steps
/// of `dt` (in rate units). Errors when `dt` violates the step bound or
/// the input is not a population distribution.
pub fn evolve(
    pop: &GroundPopulations,
    lasers: &[PumpLaser],
    duration: f64,
    dt: f64,
) -> Result<PumpResult, PumpingError> {
    let network = build_network(lasers, None)?;
    let out = evolve_inner(pop, &network, duration, dt, None, None)?;
    Ok(pump_result(&out))
}

/// Like [`evolve`], additionally recording the population trajectory every
/// `record_stride` steps (first and last points always included).
pub fn evolve_trajectory(
    pop: &GroundPopulations,
    lasers: &[PumpLaser],
    duration: f64,
    dt: f64,
    record_stride: usize,
) -> Result<(PumpResult, Vec<TrajectorySample>), PumpingError> {
    let network = build_network(lasers, None)?;
    let out = evolve_inner(
        pop,
        &network,
        duration,
        dt,
        None,
        Some(record_stride.max(1)),
    )?;
    Ok((pump_result(&out), out.trajectory))
}

fn internal_dt(network: &RateNetwork) -> f64 {
    let max_rate = network.rates.iter().cloned().fold(0.0, f64::max);
    if max_rate > 0.0 {
        INTERNAL_RATE_DT / max_rate
    } else {
        1.0
    }
}

/// One-laser hyperfine pumping: the 4 -> 4' pump alone, run for
/// `duration`. With [`COMPLETION_DURATION`] the F=4 level drains
/// completely and each atom that started there scatters 12/5 photons on
/// average.
pub fn one_laser_select(
    pop: &GroundPopulations,
    saturation: f64,
    duration: f64,
) -> Result<PumpResult, PumpingError> {
    let lasers = [PumpLaser::hyperfine_pump(saturation)];
    let network = build_network(&lasers, None)?;
    let dt = internal_dt(&network);
    let out = evolve_inner(pop, &network, duration, dt, None, None)?;
    Ok(pump_result(&out))
}

/// Two-laser dark-state selection: hyperfine pump plus the 3 -> 3'
/// repumper at polarization angle `theta`, run until the mean number of
/// photons scattered on the repumping transition reaches `photon_budget`.
/// The baseline for the reported enhancement is the one-laser selection of
/// the same input run to completion; feeding this function the output of
/// [`one_laser_select`] therefore gives enhancement exactly 1 at budget 0.
pub fn two_laser_select(
    pop: &GroundPopulations,
    theta: f64,
    photon_budget: f64,
) -> Result<TwoLaserOutcome, PumpingError> {
    if photon_budget < 0.0 {
        return Err(PumpingError::NegativeBudget(photon_budget));
    }
    let baseline = one_laser_select(pop, PUMP_SATURATION, COMPLETION_DURATION)?;

    let lasers = [
        PumpLaser::hyperfine_pump(PUMP_SATURATION),
        PumpLaser::repumper(REPUMP_SATURATION, theta),
    ];
    let network = build_network(&lasers, Some(1))?;
    let dt = internal_dt(&network);
    let out = evolve_inner(
        pop,
        &network,
        COMPLETION_DURATION,
        dt,
        Some(photon_budget),
        None,
    )?;

    let dark = Sublevel::new(3, 0).expect("clock sublevel");
    let p_base = baseline.populations.get(dark);
    let p_sel = out.populations.get(dark);
    Ok(TwoLaserOutcome {
        selected: pump_result(&out),
        baseline,
        enhancement: p_sel / p_base,
        selection_photons: out.tagged_photons,
    })
}
