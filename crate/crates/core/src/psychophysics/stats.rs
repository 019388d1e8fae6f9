use statrs::distribution::{Binomial, Discrete, DiscreteCDF};

use crate::error::{invalid, Result};

pub fn proportion_correct(responses: &[bool]) -> Result<f64> {
    if responses.is_empty() {
        return Err(invalid("no responses"));
    }
    Ok(responses.iter().filter(|&&c| c).count() as f64 / responses.len() as f64)
}

/// Exact binomial test of `successes` out of `trials` against `p0`.
///
/// One-tailed returns `P(X >= successes)`. Two-tailed sums the probabilities
/// of all outcomes no more likely than the observed one.
pub fn binomial_test(successes: u64, trials: u64, p0: f64, one_tailed: bool) -> Result<f64> {
    if trials == 0 {
        return Err(invalid("binomial test needs at least one trial"));
    }
    if successes > trials {
        return Err(invalid(format!("{successes} successes out of {trials} trials")));
    }
    if !(0.0..=1.0).contains(&p0) {
        return Err(invalid("p0 must be in [0, 1]"));
    }
    let dist = Binomial::new(p0, trials).map_err(|e| invalid(e.to_string()))?;
    if one_tailed {
        if successes == 0 {
            return Ok(1.0);
        }
        return Ok(dist.sf(successes - 1).clamp(0.0, 1.0));
    }
    let observed = dist.pmf(successes);
    let tol = observed * (1.0 + 1e-7);
    let p: f64 = (0..=trials).map(|k| dist.pmf(k)).filter(|&q| q <= tol).sum();
    Ok(p.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn choose(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn tail_examples() {
        let oracle: f64 = (10..=20).map(|k| choose(20, k)).sum::<f64>() / 2f64.powi(20);
        let p = binomial_test(10, 20, 0.5, true).unwrap();
        assert!((p - oracle).abs() < 1e-12);
        assert!((p - 0.588).abs() < 5e-4);
        assert!((binomial_test(20, 20, 0.5, true).unwrap() - 2f64.powi(-20)).abs() < 1e-18);
        assert_eq!(binomial_test(0, 20, 0.5, true).unwrap(), 1.0);
        assert!((binomial_test(10, 20, 0.5, false).unwrap() - 1.0).abs() < 1e-12);
        let two = binomial_test(15, 20, 0.5, false).unwrap();
        let one = binomial_test(15, 20, 0.5, true).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-12);
    }

    #[test]
    fn errors_and_proportions() {
        assert!(binomial_test(21, 20, 0.5, true).is_err());
        assert!(binomial_test(0, 0, 0.5, true).is_err());
        assert!(proportion_correct(&[]).is_err());
        assert_eq!(proportion_correct(&[true, false, true, true]).unwrap(), 0.75);
    }

    proptest! {
        #[test]
        fn one_tailed_monotone(n in 1u64..200, p0 in 0.05f64..0.95) {
            let mut prev = 1.0 + 1e-12;
            for k in 0..=n {
                let p = binomial_test(k, n, p0, true).unwrap();
                prop_assert!(p <= prev + 1e-12);
                prev = p;
            }
        }
    }
}
