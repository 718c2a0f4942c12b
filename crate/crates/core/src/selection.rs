//! Marginal-likelihood estimates from posterior log-likelihood draws, and the
//! Bayes-factor decision between two fitted models.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of draws accepted by the estimators.
pub const MIN_DRAWS: usize = 100;
const NR_TOLERANCE: f64 = 1e-8;
const NR_MAX_ITER: usize = 500;
const LAMBDA_CAP: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    NewtonRaftery,
    ShiftedGamma,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::NewtonRaftery => "newton-raftery",
            Estimator::ShiftedGamma => "shifted-gamma",
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "newton-raftery" | "nr" => Ok(Estimator::NewtonRaftery),
            "shifted-gamma" | "sg" => Ok(Estimator::ShiftedGamma),
            other => Err(Error::Config(format!("unknown estimator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalLikelihood {
    pub log_value: f64,
    pub estimator: Estimator,
    /// Damping `d` (Newton-Raftery) or fitted gamma scale (shifted gamma).
    pub d_or_lambda: f64,
    pub iterations_used: usize,
    /// False when the fixed-point iteration hit its cap; the last iterate
    /// is reported.
    pub converged: bool,
    /// True when the shifted-gamma scale had to be capped below 1, or the
    /// sample was degenerate.
    pub at_boundary: bool,
}

fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn check_draws(logliks: &[f64]) -> Result<()> {
    if logliks.len() < MIN_DRAWS {
        return Err(Error::NotEnoughData { needed: MIN_DRAWS, got: logliks.len() });
    }
    if let Some(i) = logliks.iter().position(|l| !l.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    Ok(())
}

/// Log of the harmonic mean of the likelihoods.
pub fn log_harmonic_mean(logliks: &[f64]) -> f64 {
    let m = logliks.len() as f64;
    -(log_sum_exp(logliks.iter().map(|l| -l)) - m.ln())
}

/// Newton-Raftery estimator with damping `d`, solved by fixed-point
/// iteration in log space starting from the harmonic mean.
pub fn newton_raftery(logliks: &[f64], d: f64) -> Result<MarginalLikelihood> {
    check_draws(logliks)?;
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::Domain(format!("d must lie in (0, 1), got {d}")));
    }
    let m = logliks.len() as f64;
    let ln_d = d.ln();
    let ln_1md = (1.0 - d).ln();
    let a = (d * m / (1.0 - d)).ln();
    let mut lp = log_harmonic_mean(logliks);
    let mut den = vec![0.0; logliks.len()];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < NR_MAX_ITER {
        iterations += 1;
        for (dst, &l) in den.iter_mut().zip(logliks) {
            *dst = log_add_exp(ln_d + lp, ln_1md + l);
        }
        let num = log_add_exp(a, log_sum_exp(logliks.iter().zip(&den).map(|(l, g)| l - g)));
        let dnm = log_add_exp(a - lp, log_sum_exp(den.iter().map(|g| -g)));
        let next = num - dnm;
        let step = (next - lp).abs();
        lp = next;
        if step < NR_TOLERANCE {
            converged = true;
            break;
        }
    }
    Ok(MarginalLikelihood {
        log_value: lp,
        estimator: Estimator::NewtonRaftery,
        d_or_lambda: d,
        iterations_used: iterations,
        converged,
        at_boundary: false,
    })
}

/// Shifted-gamma estimator: `l_max - l_k` is modelled as gamma with shape
/// `n_params / 2` and scale `lambda < 1`, giving
/// `log p = l_max + (n_params / 2) ln(1 - lambda)`.
pub fn shifted_gamma(logliks: &[f64], n_params: usize) -> Result<MarginalLikelihood> {
    check_draws(logliks)?;
    if n_params == 0 {
        return Err(Error::Domain("n_params must be positive".into()));
    }
    let alpha = 0.5 * n_params as f64;
    let n = logliks.len() as f64;
    let max = logliks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = logliks.iter().copied().fold(f64::INFINITY, f64::min);
    if max == min {
        return Ok(MarginalLikelihood {
            log_value: max,
            estimator: Estimator::ShiftedGamma,
            d_or_lambda: 0.0,
            iterations_used: 0,
            converged: true,
            at_boundary: true,
        });
    }
    let mean = logliks.iter().sum::<f64>() / n;
    let var = logliks.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / (n - 1.0);
    let l_max = (mean + var).max(max);
    // the gamma MLE of the scale with the shape held fixed is mean / shape
    let mut lambda = logliks.iter().map(|l| l_max - l).sum::<f64>() / n / alpha;
    let at_boundary = lambda >= LAMBDA_CAP;
    if at_boundary {
        lambda = LAMBDA_CAP;
    }
    Ok(MarginalLikelihood {
        log_value: l_max + alpha * (-lambda).ln_1p(),
        estimator: Estimator::ShiftedGamma,
        d_or_lambda: lambda,
        iterations_used: 1,
        converged: true,
        at_boundary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    AcceptM1,
    AcceptM2,
}

/// Evidence bands for `2 ln B12`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evidence {
    /// `B12 < 1`: the evidence favours model 2.
    Negative,
    BareMention,
    Positive,
    Strong,
    VeryStrong,
}

impl Evidence {
    pub fn from_log_b12(log_b12: f64) -> Self {
        let x = 2.0 * log_b12;
        if x < 0.0 {
            Evidence::Negative
        } else if x < 2.0 {
            Evidence::BareMention
        } else if x < 6.0 {
            Evidence::Positive
        } else if x < 10.0 {
            Evidence::Strong
        } else {
            Evidence::VeryStrong
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Evidence::Negative => "Negative (supports model 2)",
            Evidence::BareMention => "Not worth more than a bare mention",
            Evidence::Positive => "Positive",
            Evidence::Strong => "Strong",
            Evidence::VeryStrong => "Very strong",
        }
    }
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesDecision {
    pub log_b12: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub evidence: Evidence,
}

/// Chooses model 1 iff `B12 > threshold`; the exact threshold keeps model 2.
pub fn decide(log_b12: f64, threshold: f64) -> Result<BayesDecision> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::Domain(format!("threshold must be positive, got {threshold}")));
    }
    if log_b12.is_nan() {
        return Err(Error::Domain("log Bayes factor is NaN".into()));
    }
    let verdict = if log_b12 > threshold.ln() { Verdict::AcceptM1 } else { Verdict::AcceptM2 };
    Ok(BayesDecision {
        log_b12,
        threshold,
        verdict,
        evidence: Evidence::from_log_b12(log_b12),
    })
}

/// Bayes test with losses `k1`, `k2` and prior probabilities `p1`, `p2`;
/// the threshold on `B12` is `k2 p2 / (k1 p1)`.
pub fn bayes_test(
    ml1: &MarginalLikelihood,
    ml2: &MarginalLikelihood,
    k1: f64,
    k2: f64,
    p1: f64,
    p2: f64,
) -> Result<BayesDecision> {
    if !(k1 > 0.0 && k2 > 0.0) {
        return Err(Error::Domain("losses must be positive".into()));
    }
    if !(p1 > 0.0 && p2 > 0.0) || ((p1 + p2) - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("prior probabilities must be positive and sum to 1, got {p1} and {p2}")));
    }
    decide(ml1.log_value - ml2.log_value, k2 * p2 / (k1 * p1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma};

    fn ml(v: f64) -> MarginalLikelihood {
        MarginalLikelihood {
            log_value: v,
            estimator: Estimator::NewtonRaftery,
            d_or_lambda: 0.01,
            iterations_used: 1,
            converged: true,
            at_boundary: false,
        }
    }

    #[test]
    fn constant_logliks() {
        let l = vec![-42.5; 200];
        for d in [0.01, 0.3, 0.9] {
            let r = newton_raftery(&l, d).unwrap();
            assert!((r.log_value + 42.5).abs() < 1e-12);
            assert!(r.converged);
        }
        let sg = shifted_gamma(&l, 4).unwrap();
        assert_eq!(sg.log_value, -42.5);
        assert!(sg.at_boundary);
    }

    #[test]
    fn shifted_gamma_recovers_known_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Gamma::new(2.0, 0.5).unwrap();
        let l_max = -100.0;
        let l: Vec<f64> = (0..10_000).map(|_| l_max - g.sample(&mut rng)).collect();
        let r = shifted_gamma(&l, 4).unwrap();
        let truth = l_max + 2.0 * 0.5f64.ln();
        assert!((r.log_value - truth).abs() < 0.05, "{} vs {truth}", r.log_value);
    }

    #[test]
    fn input_checks() {
        assert!(newton_raftery(&[0.0; 50], 0.01).is_err());
        assert!(newton_raftery(&[0.0; 150], 1.0).is_err());
        let mut l = vec![0.0; 150];
        l[3] = f64::NAN;
        assert!(matches!(shifted_gamma(&l, 2), Err(Error::NonFinite { index: 3 })));
    }

    #[test]
    fn decision_rule_and_labels() {
        let tie = bayes_test(&ml(0.0), &ml(0.0), 1.0, 1.0, 0.5, 0.5).unwrap();
        assert_eq!(tie.verdict, Verdict::AcceptM2);
        assert_eq!(Evidence::from_log_b12(25f64.ln()), Evidence::Strong);
        assert_eq!(Evidence::from_log_b12(2f64.ln()), Evidence::BareMention);
        assert_eq!(Evidence::from_log_b12(-1.0), Evidence::Negative);
        assert_eq!(Evidence::from_log_b12(10.0), Evidence::VeryStrong);
        let d = decide(3f64.ln() + 1e-9, 3.0).unwrap();
        assert_eq!(d.verdict, Verdict::AcceptM1);
        assert_eq!(decide(3f64.ln(), 3.0).unwrap().verdict, Verdict::AcceptM2);
        assert!(bayes_test(&ml(0.0), &ml(0.0), 1.0, 1.0, 0.5, 0.6).is_err());
    }

    fn sample_logliks() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-30.0f64..0.0, 100..300)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn translation_shifts_estimates(l in sample_logliks(), c in -500.0f64..500.0) {
            let shifted: Vec<f64> = l.iter().map(|v| v + c).collect();
            let a = newton_raftery(&l, 0.01).unwrap().log_value;
            let b = newton_raftery(&shifted, 0.01).unwrap().log_value;
            prop_assert!((b - a - c).abs() < 1e-9);
            let a = shifted_gamma(&l, 5).unwrap().log_value;
            let b = shifted_gamma(&shifted, 5).unwrap().log_value;
            prop_assert!((b - a - c).abs() < 1e-9);
        }

        #[test]
        fn permutation_invariance(l in sample_logliks()) {
            let mut r = l.clone();
            r.reverse();
            let a = newton_raftery(&l, 0.01).unwrap().log_value;
            let b = newton_raftery(&r, 0.01).unwrap().log_value;
            prop_assert!((a - b).abs() < 1e-9);
            prop_assert!((shifted_gamma(&l, 3).unwrap().log_value - shifted_gamma(&r, 3).unwrap().log_value).abs() < 1e-9);
        }

        #[test]
        fn swapping_models_flips_decision(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let d12 = bayes_test(&ml(a), &ml(b), 1.0, 1.0, 0.5, 0.5).unwrap();
            let d21 = bayes_test(&ml(b), &ml(a), 1.0, 1.0, 0.5, 0.5).unwrap();
            prop_assert_eq!(d12.log_b12, -d21.log_b12);
            prop_assert_ne!(d12.verdict, d21.verdict);
        }
    }
}
