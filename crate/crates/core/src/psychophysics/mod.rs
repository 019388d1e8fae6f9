//! Two-interval forced-choice experiments: session plans, a simulated
//! observer, psychometric fitting and threshold extraction.

mod fit;
mod observer;
mod plan;
mod stats;

pub use fit::{
    fit_psychometric, fit_psychometric_in, log_likelihood, merge_levels, normal_cdf,
    normal_quantile, FitBounds, LevelData, PsychometricFit, PsychometricParams, GUESS_RATE,
};
pub use observer::{simulate_response, SimulatedObserver, TrialResponse, MAX_LAPSE};
pub use plan::{
    discrimination_steps, plan_detection_session, plan_discrimination_session, plan_session,
    Experiment, Interval, OrbitAssignment, SessionPlan, TrialCondition,
    DETECTION_ABSOLUTE_D, DETECTION_RELATIVE_D, DISCRIMINATION_OFFSETS_D,
    DISCRIMINATION_STEPS_LARGE_D, DISCRIMINATION_STEPS_SMALL_D, TRIALS_PER_CONDITION,
    TRIALS_PER_SESSION,
};
pub use stats::{binomial_test, proportion_correct};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of a results table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub absolute_d: f64,
    pub offset_d: f64,
    pub relative_d: f64,
    pub correct: bool,
}

pub const RESULTS_HEADER: &str = "trial_index,absolute_d,offset_d,relative_d,correct";

/// Derives a per-replication seed so replications are independent of
/// evaluation order.
pub fn replication_seed(seed: u64, replication: u64) -> u64 {
    let mut z = seed ^ replication.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn simulate_session(plan: &SessionPlan, obs: &SimulatedObserver, seed: u64) -> Vec<TrialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    plan.trials
        .iter()
        .enumerate()
        .map(|(i, c)| TrialRecord {
            trial_index: i,
            absolute_d: c.absolute_d,
            offset_d: c.offset_d,
            relative_d: c.relative_d,
            correct: simulate_response(c, obs, &mut rng).correct,
        })
        .collect()
}

/// Runs `replications` seeded sessions and concatenates their trials with a
/// running trial index.
pub fn simulate_experiment(
    experiment: Experiment,
    obs: &SimulatedObserver,
    seed: u64,
    replications: u64,
) -> Result<Vec<TrialRecord>> {
    obs.validate()?;
    if replications == 0 {
        return Err(Error::InvalidInput("replications must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(replications as usize * TRIALS_PER_SESSION);
    for r in 0..replications {
        let s = replication_seed(seed, r);
        let plan = plan_session(experiment, s);
        let resp_seed = replication_seed(s ^ obs.rng_seed, u64::MAX - r);
        for mut rec in simulate_session(&plan, obs, resp_seed) {
            rec.trial_index = out.len();
            out.push(rec);
        }
    }
    Ok(out)
}

pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut s = String::with_capacity(records.len() * 24 + RESULTS_HEADER.len() + 1);
    s.push_str(RESULTS_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.trial_index, r.absolute_d, r.offset_d, r.relative_d, r.correct as u8
        ));
    }
    s
}

pub fn records_from_csv(text: &str) -> Result<Vec<TrialRecord>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::InvalidInput("empty results file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let idx = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::InvalidInput(format!("missing column '{name}'")))
    };
    let (ti, ai, oi, ri, ci) = (
        idx("trial_index")?,
        idx("absolute_d")?,
        idx("offset_d")?,
        idx("relative_d")?,
        idx("correct")?,
    );
    lines
        .enumerate()
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |what: &str| Error::InvalidInput(format!("row {}: bad {what}", n + 1));
            let get = |i: usize, what: &str| f.get(i).copied().ok_or_else(|| bad(what));
            let num = |i: usize, what: &str| -> Result<f64> {
                get(i, what)?.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad(what))
            };
            Ok(TrialRecord {
                trial_index: get(ti, "trial_index")?.parse().map_err(|_| bad("trial_index"))?,
                absolute_d: num(ai, "absolute_d")?,
                offset_d: num(oi, "offset_d")?,
                relative_d: num(ri, "relative_d")?,
                correct: match get(ci, "correct")? {
                    "1" | "true" => true,
                    "0" | "false" => false,
                    _ => return Err(bad("correct")),
                },
            })
        })
        .collect()
}

/// Experiment inferred from the records: any nonzero pedestal means
/// discrimination.
pub fn infer_experiment(records: &[TrialRecord]) -> Experiment {
    if records.iter().any(|r| r.offset_d != 0.0) {
        Experiment::Discrimination
    } else {
        Experiment::Detection
    }
}

/// Groups records by back-surface distance (detection) or pedestal
/// (discrimination) and counts correct answers per increment.
pub fn aggregate_levels(records: &[TrialRecord], experiment: Experiment) -> Vec<(f64, Vec<LevelData>)> {
    let mut groups: Vec<(f64, Vec<LevelData>)> = Vec::new();
    for r in records {
        let key = match experiment {
            Experiment::Detection => r.absolute_d,
            Experiment::Discrimination => r.offset_d,
        };
        let levels = match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, l)) => l,
            None => {
                groups.push((key, Vec::new()));
                &mut groups.last_mut().unwrap().1
            }
        };
        let row = LevelData {
            relative_d: r.relative_d,
            n_trials: 1,
            n_correct: r.correct as u64,
        };
        match levels.iter_mut().find(|l| l.relative_d == r.relative_d) {
            Some(l) => {
                l.n_trials += 1;
                l.n_correct += row.n_correct;
            }
            None => levels.push(row),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (_, levels) in &mut groups {
        levels.sort_by(|a, b| a.relative_d.total_cmp(&b.relative_d));
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept_d: f64,
}

/// Ordinary least squares of threshold on pedestal.
pub fn discrimination_linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 distinct pedestals".into()));
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::InvalidInput("non-finite threshold or pedestal".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept_d: my - slope * mx,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFit {
    /// Back-surface distance or pedestal, diopters.
    pub group_d: f64,
    pub levels: Vec<LevelData>,
    pub fit: PsychometricFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentFits {
    pub experiment: Experiment,
    pub groups: Vec<GroupFit>,
    /// Threshold-versus-pedestal line, discrimination only.
    pub linear: Option<LinearFit>,
}

pub fn analyze_records(records: &[TrialRecord]) -> Result<ExperimentFits> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no trials".into()));
    }
    let experiment = infer_experiment(records);
    let groups = aggregate_levels(records, experiment)
        .into_iter()
        .map(|(group_d, levels)| {
            let fit = fit_psychometric(&levels)?;
            Ok(GroupFit { group_d, levels, fit })
        })
        .collect::<Result<Vec<_>>>()?;
    let linear = match experiment {
        Experiment::Discrimination if groups.len() >= 2 => Some(discrimination_linear_fit(
            &groups.iter().map(|g| (g.group_d, g.fit.threshold75)).collect::<Vec<_>>(),
        )?),
        _ => None,
    };
    Ok(ExperimentFits {
        experiment,
        groups,
        linear,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 3.0].iter().map(|&p| (p, 0.11 * p + 0.38)).collect();
        let f = discrimination_linear_fit(&pts).unwrap();
        assert!((f.slope - 0.11).abs() < 1e-12);
        assert!((f.intercept_d - 0.38).abs() < 1e-12);
        let flat = discrimination_linear_fit(&[(1.0, 0.5), (2.0, 0.5), (3.0, 0.5)]).unwrap();
        assert!(flat.slope.abs() < 1e-15);
        assert!(discrimination_linear_fit(&[(1.0, 0.5), (1.0, 0.6)]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let recs = simulate_experiment(Experiment::Discrimination, &SimulatedObserver::default(), 7, 2).unwrap();
        assert_eq!(recs.len(), 450);
        assert!(recs.iter().enumerate().all(|(i, r)| r.trial_index == i));
        let csv = records_to_csv(&recs);
        assert!(csv.starts_with(RESULTS_HEADER));
        assert_eq!(records_from_csv(&csv).unwrap(), recs);
        assert!(records_from_csv("trial_index,absolute_d\n1,2\n").is_err());
        assert!(records_from_csv(&format!("{RESULTS_HEADER}\n0,1,0,0.5,yes\n")).is_err());
    }

    #[test]
    fn simulation_is_seeded() {
        let o = SimulatedObserver::default();
        let a = simulate_experiment(Experiment::Detection, &o, 3, 3).unwrap();
        assert_eq!(a, simulate_experiment(Experiment::Detection, &o, 3, 3).unwrap());
        assert_ne!(a, simulate_experiment(Experiment::Detection, &o, 4, 3).unwrap());
        // Extending the run leaves earlier replications untouched.
        let longer = simulate_experiment(Experiment::Detection, &o, 3, 5).unwrap();
        assert_eq!(&longer[..a.len()], &a[..]);
    }

    #[test]
    fn analysis_groups() {
        let o = SimulatedObserver::default();
        let recs = simulate_experiment(Experiment::Detection, &o, 1, 40).unwrap();
        let fits = analyze_records(&recs).unwrap();
        assert_eq!(fits.experiment, Experiment::Detection);
        assert_eq!(fits.groups.iter().map(|g| g.group_d).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0]);
        assert!(fits.groups.iter().all(|g| g.levels.iter().all(|l| l.n_trials == 600)));
        assert!(fits.linear.is_none());
        for g in &fits.groups {
            assert!((g.fit.threshold75 - 0.36).abs() < 0.08, "{g:?}");
        }
    }
}
