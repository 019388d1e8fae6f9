use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::SQRT_2;

use super::observer::MAX_LAPSE;
use crate::error::{Error, Result};

pub const GUESS_RATE: f64 = 0.5;
const P_FLOOR: f64 = 1e-300;

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

pub fn normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// `psi(x) = 0.5 + (0.5 - lapse) * Phi((x - alpha) / beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsychometricParams {
    pub alpha: f64,
    pub beta: f64,
    pub lapse: f64,
}

impl PsychometricParams {
    /// Standard-normal quantile at which the curve reaches 75% correct.
    fn z75(lapse: f64) -> f64 {
        normal_quantile(0.25 / (0.5 - lapse))
    }

    pub fn from_threshold75(threshold75: f64, beta: f64, lapse: f64) -> Self {
        PsychometricParams {
            alpha: threshold75 - beta * Self::z75(lapse),
            beta,
            lapse,
        }
    }

    pub fn threshold75(&self) -> f64 {
        self.alpha + self.beta * Self::z75(self.lapse)
    }

    pub fn psi(&self, x: f64) -> f64 {
        GUESS_RATE + (0.5 - self.lapse) * normal_cdf((x - self.alpha) / self.beta)
    }

    /// `(psi, 1 - psi)`, the second computed without cancellation.
    fn psi_pair(&self, x: f64) -> (f64, f64) {
        let z = (x - self.alpha) / self.beta;
        let up = normal_cdf(z);
        let p = GUESS_RATE + (0.5 - self.lapse) * up;
        let q = 0.5 * normal_cdf(-z) + self.lapse * up;
        (p, q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelData {
    pub relative_d: f64,
    pub n_trials: u64,
    pub n_correct: u64,
}

impl LevelData {
    pub fn proportion(&self) -> f64 {
        self.n_correct as f64 / self.n_trials as f64
    }
}

/// Bernoulli log-likelihood of the counts (binomial coefficients omitted).
pub fn log_likelihood(params: &PsychometricParams, data: &[LevelData]) -> f64 {
    data.iter()
        .map(|l| {
            let (p, q) = params.psi_pair(l.relative_d);
            let k = l.n_correct as f64;
            let m = (l.n_trials - l.n_correct) as f64;
            let mut s = 0.0;
            if k > 0.0 {
                s += k * p.max(P_FLOOR).ln();
            }
            if m > 0.0 {
                s += m * q.max(P_FLOOR).ln();
            }
            s
        })
        .sum()
}

/// Search box for the fit. With uniform priors over this box the posterior
/// mode coincides with the constrained maximum-likelihood estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    pub lapse: (f64, f64),
}

impl FitBounds {
    /// `alpha` spans the tested range widened by half of it on each side,
    /// `beta` runs from 1% to 200% of the range.
    pub fn for_levels(data: &[LevelData]) -> Self {
        let lo = data.iter().map(|l| l.relative_d).fold(f64::INFINITY, f64::min);
        let hi = data.iter().map(|l| l.relative_d).fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        FitBounds {
            alpha: (lo - 0.5 * span, hi + 0.5 * span),
            beta: (0.01 * span, 2.0 * span),
            lapse: (0.0, MAX_LAPSE),
        }
    }

    fn clamp(&self, v: [f64; 3]) -> [f64; 3] {
        [
            v[0].clamp(self.alpha.0, self.alpha.1),
            v[1].clamp(self.beta.0.ln(), self.beta.1.ln()),
            v[2].clamp(self.lapse.0, self.lapse.1),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsychometricFit {
    pub alpha: f64,
    pub beta: f64,
    pub guess_rate: f64,
    pub lapse: f64,
    pub log_likelihood: f64,
    pub threshold75: f64,
    /// False when the data carry no usable signal (flat at chance, flat at
    /// ceiling) or the threshold falls outside the tested range.
    pub reliable: bool,
}

impl PsychometricFit {
    pub fn params(&self) -> PsychometricParams {
        PsychometricParams {
            alpha: self.alpha,
            beta: self.beta,
            lapse: self.lapse,
        }
    }
}

/// Sums counts at identical stimulus levels and sorts by level.
pub fn merge_levels(data: &[LevelData]) -> Vec<LevelData> {
    let mut out: Vec<LevelData> = Vec::new();
    for l in data {
        match out.iter_mut().find(|o| o.relative_d == l.relative_d) {
            Some(o) => {
                o.n_trials += l.n_trials;
                o.n_correct += l.n_correct;
            }
            None => out.push(*l),
        }
    }
    out.sort_by(|a, b| a.relative_d.total_cmp(&b.relative_d));
    out
}

fn validate_levels(data: &[LevelData]) -> Result<Vec<LevelData>> {
    for l in data {
        if !l.relative_d.is_finite() {
            return Err(Error::InvalidInput("stimulus levels must be finite".into()));
        }
        if l.n_correct > l.n_trials {
            return Err(Error::InvalidInput(format!(
                "{} correct out of {} trials",
                l.n_correct, l.n_trials
            )));
        }
    }
    let merged: Vec<LevelData> = merge_levels(data).into_iter().filter(|l| l.n_trials > 0).collect();
    if merged.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 distinct stimulus levels, got {}",
            merged.len()
        )));
    }
    let total: u64 = merged.iter().map(|l| l.n_trials).sum();
    if total < 30 {
        return Err(Error::InsufficientData(format!(
            "need at least 30 trials, got {total}"
        )));
    }
    Ok(merged)
}

/// Nelder-Mead minimisation inside a box; vertices are clamped to the box.
fn nelder_mead<F: Fn([f64; 3]) -> f64>(
    f: &F,
    start: [f64; 3],
    step: [f64; 3],
    bounds: &FitBounds,
    max_iter: usize,
) -> ([f64; 3], f64) {
    let mut simplex: Vec<([f64; 3], f64)> = (0..4)
        .map(|i| {
            let mut v = start;
            if i > 0 {
                v[i - 1] += step[i - 1];
                let c = bounds.clamp(v);
                if c[i - 1] == start[i - 1] {
                    v[i - 1] = start[i - 1] - step[i - 1];
                }
            }
            let v = bounds.clamp(v);
            (v, f(v))
        })
        .collect();

    let lerp = |a: &[f64; 3], b: &[f64; 3], t: f64| -> [f64; 3] {
        bounds.clamp([
            a[0] + t * (b[0] - a[0]),
            a[1] + t * (b[1] - a[1]),
            a[2] + t * (b[2] - a[2]),
        ])
    };

    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[3].1);
        if (worst - best).abs() <= 1e-13 * (1.0 + best.abs()) {
            let size = (1..4)
                .map(|i| (0..3).map(|j| (simplex[i].0[j] - simplex[0].0[j]).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if size < 1e-10 {
                break;
            }
        }
        let mut centroid = [0.0; 3];
        for v in &simplex[..3] {
            for (c, x) in centroid.iter_mut().zip(v.0) {
                *c += x / 3.0;
            }
        }
        let xw = simplex[3].0;
        let xr = lerp(&centroid, &xw, -1.0);
        let fr = f(xr);
        if fr < simplex[0].1 {
            let xe = lerp(&centroid, &xw, -2.0);
            let fe = f(xe);
            simplex[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[3].1 {
                let xc = lerp(&centroid, &xr, 0.5);
                (xc, f(xc))
            } else {
                let xc = lerp(&centroid, &xw, 0.5);
                (xc, f(xc))
            };
            if fc < simplex[3].1.min(fr) {
                simplex[3] = (xc, fc);
            } else {
                let x0 = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let p = lerp(&x0, &v.0, 0.5);
                    *v = (p, f(p));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

pub fn fit_psychometric(data: &[LevelData]) -> Result<PsychometricFit> {
    let merged = validate_levels(data)?;
    let bounds = FitBounds::for_levels(&merged);
    fit_psychometric_in(&merged, &bounds)
}

/// Constrained maximum-likelihood fit over an explicit box.
pub fn fit_psychometric_in(data: &[LevelData], bounds: &FitBounds) -> Result<PsychometricFit> {
    let merged = validate_levels(data)?;
    let lo = merged[0].relative_d;
    let hi = merged[merged.len() - 1].relative_d;
    let span = hi - lo;

    let objective = |v: [f64; 3]| -> f64 {
        let p = PsychometricParams {
            alpha: v[0],
            beta: v[1].exp(),
            lapse: v[2],
        };
        -log_likelihood(&p, &merged)
    };

    // Starting points spread over the tested range and plausible spreads.
    let mut best: Option<([f64; 3], f64)> = None;
    for frac in [0.1, 0.35, 0.6, 0.9] {
        for beta_frac in [0.05, 0.3] {
            for lapse in [0.0, 0.03] {
                let start = bounds.clamp([lo + frac * span, (beta_frac * span).ln(), lapse]);
                let step = [0.25 * span, 0.7, 0.02];
                let mut r = nelder_mead(&objective, start, step, bounds, 3000);
                // Restart from the optimum to escape premature collapse.
                r = nelder_mead(&objective, r.0, [0.05 * span, 0.2, 0.01], bounds, 3000);
                if best.is_none_or(|b| r.1 < b.1) {
                    best = Some(r);
                }
            }
        }
    }
    let (v, neg_ll) = best.expect("at least one start");
    let params = PsychometricParams {
        alpha: v[0],
        beta: v[1].exp(),
        lapse: v[2],
    };
    let threshold75 = params.threshold75();
    let crosses = merged.iter().any(|l| l.proportion() >= 0.75)
        && merged.iter().any(|l| l.proportion() < 0.75);
    let reliable = crosses && threshold75.is_finite() && threshold75 >= lo && threshold75 <= hi;
    Ok(PsychometricFit {
        alpha: params.alpha,
        beta: params.beta,
        guess_rate: GUESS_RATE,
        lapse: params.lapse,
        log_likelihood: -neg_ll,
        threshold75,
        reliable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent log-likelihood for the oracle.
    fn oracle_ll(alpha: f64, beta: f64, lapse: f64, data: &[LevelData]) -> f64 {
        let mut s = 0.0;
        for l in data {
            let phi = 0.5 * (1.0 + series_erf((l.relative_d - alpha) / (beta * 2f64.sqrt())));
            let p = 0.5 + (0.5 - lapse) * phi;
            let q = 0.5 * (1.0 - phi) + lapse * phi;
            if l.n_correct > 0 {
                s += l.n_correct as f64 * p.max(1e-300).ln();
            }
            if l.n_trials > l.n_correct {
                s += (l.n_trials - l.n_correct) as f64 * q.max(1e-300).ln();
            }
        }
        s
    }

    /// erf from its Taylor series / continued fraction, accurate to ~1e-15.
    fn series_erf(x: f64) -> f64 {
        let ax = x.abs();
        let r = if ax < 2.5 {
            let mut term = ax;
            let mut sum = ax;
            let mut n = 0.0;
            loop {
                n += 1.0;
                term *= -ax * ax / n;
                let add = term / (2.0 * n + 1.0);
                sum += add;
                if add.abs() < 1e-17 * sum.abs() {
                    break;
                }
            }
            sum * 2.0 / std::f64::consts::PI.sqrt()
        } else {
            // Lentz continued fraction for erfc.
            let mut f = ax;
            let mut c = ax;
            let mut d = 0.0;
            for k in 1..200 {
                let a = k as f64 / 2.0;
                d = 1.0 / (ax + a * d);
                c = ax + a / c;
                f *= c * d;
            }
            1.0 - (-ax * ax).exp() / (f * std::f64::consts::PI.sqrt())
        };
        r.copysign(x)
    }

    fn grid_best(data: &[LevelData]) -> f64 {
        let b = FitBounds::for_levels(&merge_levels(data));
        let mut best = f64::NEG_INFINITY;
        for i in 0..100 {
            let a = b.alpha.0 + (b.alpha.1 - b.alpha.0) * i as f64 / 99.0;
            for j in 0..100 {
                let beta = b.beta.0 * (b.beta.1 / b.beta.0).powf(j as f64 / 99.0);
                for k in 0..13 {
                    let ll = oracle_ll(a, beta, 0.005 * k as f64, data);
                    best = best.max(ll);
                }
            }
        }
        best
    }

    fn exact_levels(p: &PsychometricParams, xs: &[f64], n: u64) -> Vec<LevelData> {
        xs.iter()
            .map(|&x| {
                let prob = if x == 0.0 { 0.5 } else { p.psi(x) };
                LevelData {
                    relative_d: x,
                    n_trials: n,
                    n_correct: (prob * n as f64).round() as u64,
                }
            })
            .collect()
    }

    const DETECTION_X: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

    #[test]
    fn quantile_and_threshold() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((series_erf(0.7) - 0.677_801_193_837_418_5).abs() < 1e-14);
        assert!((series_erf(3.0) - 0.999_977_909_503_001_4).abs() < 1e-14);
        for lapse in [0.0, 0.02, 0.06] {
            let p = PsychometricParams::from_threshold75(0.36, 0.15, lapse);
            assert!((p.psi(p.threshold75()) - 0.75).abs() < 1e-14);
            assert!((p.threshold75() - 0.36).abs() < 1e-14);
        }
    }

    #[test]
    fn large_n_round_trip() {
        let p = PsychometricParams::from_threshold75(0.36, 0.15, 0.02);
        let data = exact_levels(&p, &DETECTION_X, 100_000);
        let fit = fit_psychometric(&data).unwrap();
        assert!((fit.threshold75 - 0.36).abs() < 0.01, "{fit:?}");
        assert!(fit.reliable);
        assert!((fit.params().psi(fit.threshold75) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn matches_grid_oracle() {
        let cases = [
            exact_levels(&PsychometricParams::from_threshold75(0.36, 0.15, 0.02), &DETECTION_X, 15),
            exact_levels(&PsychometricParams::from_threshold75(0.6, 0.3, 0.0), &DETECTION_X, 40),
            exact_levels(&PsychometricParams::from_threshold75(0.9, 0.4, 0.05), &[0.0, 0.45, 0.9, 1.35, 1.8], 25),
            vec![
                LevelData { relative_d: 0.0, n_trials: 15, n_correct: 9 },
                LevelData { relative_d: 0.25, n_trials: 15, n_correct: 6 },
                LevelData { relative_d: 0.5, n_trials: 15, n_correct: 13 },
                LevelData { relative_d: 0.75, n_trials: 15, n_correct: 15 },
                LevelData { relative_d: 1.0, n_trials: 15, n_correct: 14 },
            ],
        ];
        for data in &cases {
            let fit = fit_psychometric(data).unwrap();
            let grid = grid_best(data);
            let ll = oracle_ll(fit.alpha, fit.beta, fit.lapse, data);
            assert!(ll >= grid - 1e-6, "fit {ll} grid {grid}");
            assert!((ll - fit.log_likelihood).abs() < 1e-9);
        }
    }

    #[test]
    fn flat_data_is_unreliable() {
        let chance: Vec<LevelData> = DETECTION_X
            .iter()
            .map(|&x| LevelData { relative_d: x, n_trials: 20, n_correct: 10 })
            .collect();
        assert!(!fit_psychometric(&chance).unwrap().reliable);
        let ceiling: Vec<LevelData> = DETECTION_X
            .iter()
            .map(|&x| LevelData { relative_d: x, n_trials: 20, n_correct: 20 })
            .collect();
        assert!(!fit_psychometric(&ceiling).unwrap().reliable);
    }

    #[test]
    fn rejects_bad_input() {
        let two = [
            LevelData { relative_d: 0.0, n_trials: 50, n_correct: 25 },
            LevelData { relative_d: 1.0, n_trials: 50, n_correct: 45 },
        ];
        assert!(matches!(fit_psychometric(&two), Err(Error::InsufficientData(_))));
        let few: Vec<LevelData> = DETECTION_X
            .iter()
            .map(|&x| LevelData { relative_d: x, n_trials: 5, n_correct: 3 })
            .collect();
        assert!(matches!(fit_psychometric(&few), Err(Error::InsufficientData(_))));
        let bad = [LevelData { relative_d: 0.0, n_trials: 5, n_correct: 6 }];
        assert!(matches!(fit_psychometric(&bad), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn error_shrinks_with_n() {
        use rand::{Rng, SeedableRng};
        let p = PsychometricParams::from_threshold75(0.36, 0.15, 0.02);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let mut rms = Vec::new();
        for n in [100u64, 1_000, 10_000] {
            let mut sq = 0.0;
            let reps = 40;
            for _ in 0..reps {
                let data: Vec<LevelData> = DETECTION_X
                    .iter()
                    .map(|&x| {
                        let prob = if x == 0.0 { 0.5 } else { p.psi(x) };
                        let k = (0..n).filter(|_| rng.random::<f64>() < prob).count() as u64;
                        LevelData { relative_d: x, n_trials: n, n_correct: k }
                    })
                    .collect();
                let t = fit_psychometric(&data).unwrap().threshold75;
                sq += (t - 0.36).powi(2);
            }
            rms.push((sq / reps as f64).sqrt());
        }
        assert!(rms[1] < rms[0] && rms[2] < rms[1], "{rms:?}");
        // Ten-fold more data should cut the error by roughly sqrt(10).
        assert!(rms[0] / rms[2] > 4.0, "{rms:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn duplicating_rows_keeps_threshold(
            t in 0.2f64..0.8, beta in 0.08f64..0.4, lapse in 0.0f64..0.06, n in 10u64..60
        ) {
            let p = PsychometricParams::from_threshold75(t, beta, lapse);
            let data = exact_levels(&p, &DETECTION_X, n);
            let doubled: Vec<LevelData> = data.iter().chain(data.iter()).copied().collect();
            let a = fit_psychometric(&data).unwrap();
            let b = fit_psychometric(&doubled).unwrap();
            prop_assert!((a.threshold75 - b.threshold75).abs() < 1e-9);
            prop_assert!((2.0 * a.log_likelihood - b.log_likelihood).abs() < 1e-9 * a.log_likelihood.abs());
        }
    }
}
