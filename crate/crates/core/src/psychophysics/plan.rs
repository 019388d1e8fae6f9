use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::retinal_sim::FixationOrbit;

pub const TRIALS_PER_CONDITION: usize = 15;
pub const TRIALS_PER_SESSION: usize = 225;

pub const DETECTION_ABSOLUTE_D: [f64; 3] = [1.0, 2.0, 3.0];
pub const DETECTION_RELATIVE_D: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

pub const DISCRIMINATION_OFFSETS_D: [f64; 3] = [1.0, 2.0, 3.0];
/// Increments for the 1 D and 2 D pedestals.
pub const DISCRIMINATION_STEPS_SMALL_D: [f64; 5] = [0.0, 0.45, 0.9, 1.35, 1.8];
/// Increments for the 3 D pedestal.
pub const DISCRIMINATION_STEPS_LARGE_D: [f64; 5] = [0.0, 0.7, 1.4, 2.1, 2.8];

pub fn discrimination_steps(offset_d: f64) -> &'static [f64; 5] {
    if offset_d >= 3.0 {
        &DISCRIMINATION_STEPS_LARGE_D
    } else {
        &DISCRIMINATION_STEPS_SMALL_D
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Detection,
    Discrimination,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Detection => "detection",
            Experiment::Discrimination => "discrimination",
        })
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "detection" => Ok(Experiment::Detection),
            "discrimination" => Ok(Experiment::Discrimination),
            _ => Err(invalid(format!("unknown experiment '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interval {
    First,
    Second,
}

impl Interval {
    pub fn other(self) -> Interval {
        match self {
            Interval::First => Interval::Second,
            Interval::Second => Interval::First,
        }
    }
}

/// Per-trial fixation target motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitAssignment {
    pub orbit: FixationOrbit,
    pub clockwise: bool,
    pub start_phase_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialCondition {
    pub experiment: Experiment,
    /// Back surface, diopters.
    pub absolute_d: f64,
    /// Pedestal separation (discrimination only), diopters.
    pub offset_d: f64,
    /// Tested increment, diopters.
    pub relative_d: f64,
    /// Interval holding the parallax signal (detection) or the larger
    /// separation (discrimination).
    pub interval_with_effect: Interval,
    /// Ocular parallax rendering enabled in both intervals.
    pub parallax_both_intervals: bool,
    pub fixation: OrbitAssignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub experiment: Experiment,
    pub trials: Vec<TrialCondition>,
    pub rng_seed: u64,
}

impl SessionPlan {
    /// Distinct `(absolute_d, offset_d, relative_d)` triples with their
    /// trial counts, in first-appearance order.
    pub fn condition_counts(&self) -> Vec<((f64, f64, f64), usize)> {
        let mut out: Vec<((f64, f64, f64), usize)> = Vec::new();
        for t in &self.trials {
            let key = (t.absolute_d, t.offset_d, t.relative_d);
            match out.iter_mut().find(|(k, _)| *k == key) {
                Some((_, n)) => *n += 1,
                None => out.push((key, 1)),
            }
        }
        out
    }
}

fn build_plan(
    experiment: Experiment,
    grid: Vec<(f64, f64, f64)>,
    both: bool,
    seed: u64,
) -> SessionPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut conds: Vec<(f64, f64, f64)> = grid
        .iter()
        .flat_map(|c| std::iter::repeat_n(*c, TRIALS_PER_CONDITION))
        .collect();
    conds.shuffle(&mut rng);
    let trials = conds
        .into_iter()
        .map(|(absolute_d, offset_d, relative_d)| TrialCondition {
            experiment,
            absolute_d,
            offset_d,
            relative_d,
            interval_with_effect: if rng.random_bool(0.5) {
                Interval::First
            } else {
                Interval::Second
            },
            parallax_both_intervals: both,
            fixation: OrbitAssignment {
                orbit: FixationOrbit::DETECTION,
                clockwise: rng.random_bool(0.5),
                start_phase_deg: rng.random_range(0.0..360.0),
            },
        })
        .collect();
    SessionPlan {
        experiment,
        trials,
        rng_seed: seed,
    }
}

/// 3 back-surface distances x 5 separations x 15 trials, shuffled.
pub fn plan_detection_session(seed: u64) -> SessionPlan {
    let grid = DETECTION_ABSOLUTE_D
        .iter()
        .flat_map(|&a| DETECTION_RELATIVE_D.iter().map(move |&r| (a, 0.0, r)))
        .collect();
    build_plan(Experiment::Detection, grid, false, seed)
}

/// Back surface at 0 D, pedestals of 1, 2, 3 D with their increment sets.
pub fn plan_discrimination_session(seed: u64) -> SessionPlan {
    let grid = DISCRIMINATION_OFFSETS_D
        .iter()
        .flat_map(|&o| discrimination_steps(o).iter().map(move |&r| (0.0, o, r)))
        .collect();
    build_plan(Experiment::Discrimination, grid, true, seed)
}

pub fn plan_session(experiment: Experiment, seed: u64) -> SessionPlan {
    match experiment {
        Experiment::Detection => plan_detection_session(seed),
        Experiment::Discrimination => plan_discrimination_session(seed),
    }
}
