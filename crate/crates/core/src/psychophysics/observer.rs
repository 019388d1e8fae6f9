use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fit::PsychometricParams;
use super::plan::{Experiment, Interval, TrialCondition};
use crate::error::{invalid, Result};

pub const MAX_LAPSE: f64 = 0.06;

/// Generative 2AFC observer used to validate the analysis pipeline.
///
/// Thresholds are 75%-correct points: the observer answers correctly with
/// probability exactly 0.75 when the stimulus equals its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulatedObserver {
    #[serde(alias = "threshold")]
    pub detection_threshold_d: f64,
    /// Cumulative-Gaussian spread, diopters.
    #[serde(alias = "spread", alias = "psychometric_slope")]
    pub spread_d: f64,
    #[serde(alias = "lapse")]
    pub lapse_rate: f64,
    /// Discrimination threshold growth per diopter of pedestal.
    #[serde(alias = "weber")]
    pub weber_fraction: f64,
    #[serde(alias = "intercept")]
    pub discrimination_intercept_d: f64,
    #[serde(alias = "seed")]
    pub rng_seed: u64,
}

impl Default for SimulatedObserver {
    fn default() -> Self {
        SimulatedObserver {
            detection_threshold_d: 0.36,
            spread_d: 0.15,
            lapse_rate: 0.02,
            weber_fraction: 0.11,
            discrimination_intercept_d: 0.38,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResponse {
    pub chosen_interval: Interval,
    pub correct: bool,
}

impl SimulatedObserver {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=MAX_LAPSE).contains(&self.lapse_rate) {
            return Err(invalid(format!("lapse rate must be in [0, {MAX_LAPSE}]")));
        }
        if !(self.detection_threshold_d > 0.0 && self.spread_d > 0.0) {
            return Err(invalid("threshold and spread must be positive"));
        }
        if !(self.discrimination_intercept_d > 0.0 && self.weber_fraction >= 0.0) {
            return Err(invalid("discrimination intercept must be positive, weber fraction >= 0"));
        }
        Ok(())
    }

    /// 75% point for the trial's experiment and pedestal.
    pub fn effective_threshold(&self, cond: &TrialCondition) -> f64 {
        match cond.experiment {
            Experiment::Detection => self.detection_threshold_d,
            Experiment::Discrimination => {
                self.discrimination_intercept_d + self.weber_fraction * cond.offset_d
            }
        }
    }

    pub fn psychometric(&self, threshold75: f64) -> PsychometricParams {
        PsychometricParams::from_threshold75(threshold75, self.spread_d, self.lapse_rate)
    }

    /// Probability of a correct answer. With no increment both intervals are
    /// physically identical and performance is at chance.
    pub fn p_correct(&self, cond: &TrialCondition) -> f64 {
        if cond.relative_d <= 0.0 {
            return 0.5;
        }
        self.psychometric(self.effective_threshold(cond)).psi(cond.relative_d)
    }
}

pub fn simulate_response<R: Rng + ?Sized>(
    cond: &TrialCondition,
    obs: &SimulatedObserver,
    rng: &mut R,
) -> TrialResponse {
    let correct = rng.random::<f64>() < obs.p_correct(cond);
    let chosen_interval = if correct {
        cond.interval_with_effect
    } else {
        cond.interval_with_effect.other()
    };
    TrialResponse {
        chosen_interval,
        correct,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psychophysics::plan::plan_detection_session;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cond(relative_d: f64) -> TrialCondition {
        let mut c = plan_detection_session(1).trials[0];
        c.relative_d = relative_d;
        c
    }

    #[test]
    fn generative_probabilities() {
        let obs = SimulatedObserver::default();
        assert_eq!(obs.p_correct(&cond(0.0)), 0.5);
        let no_lapse = SimulatedObserver {
            lapse_rate: 0.0,
            ..obs
        };
        assert!((no_lapse.p_correct(&cond(1e3)) - 1.0).abs() < 1e-12);
        assert!((no_lapse.p_correct(&cond(0.36)) - 0.75).abs() < 1e-15);
        assert!((obs.p_correct(&cond(0.36)) - 0.75).abs() < 1e-12);
        assert!((obs.p_correct(&cond(50.0)) - 0.98).abs() < 1e-12);
    }

    #[test]
    fn responses_are_consistent() {
        let obs = SimulatedObserver::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = cond(0.5);
        let mut hits = 0;
        for _ in 0..20_000 {
            let r = simulate_response(&c, &obs, &mut rng);
            assert_eq!(r.correct, r.chosen_interval == c.interval_with_effect);
            hits += r.correct as usize;
        }
        let p = obs.p_correct(&c);
        let se = (p * (1.0 - p) / 20_000.0).sqrt();
        assert!((hits as f64 / 20_000.0 - p).abs() < 4.0 * se);
    }

    #[test]
    fn observer_json_aliases() {
        let o: SimulatedObserver = serde_json::from_str(r#"{"threshold":0.5,"lapse":0.0,"seed":3}"#).unwrap();
        assert_eq!(o.detection_threshold_d, 0.5);
        assert_eq!(o.lapse_rate, 0.0);
        assert_eq!(o.rng_seed, 3);
        assert_eq!(o.spread_d, 0.15);
        assert!(SimulatedObserver { lapse_rate: 0.1, ..o }.validate().is_err());
    }
}
