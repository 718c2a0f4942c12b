//! Prior densities, the likelihood pathology check and the joint
//! log-posterior.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    conditional_loglik_terms, gaussian_loglik_sum, recursion_trimmed,
    student_t_loglik_sum, FilterOutput, ModelSpec, ParamState,
};
use crate::special::{ln_gamma, trigamma_unchecked};

/// Prior on the degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum NuPrior {
    IndependentJeffreys,
    /// Exponential on `nu - 2` with the given rate. Kept as a comparison
    /// baseline; it cannot repair a likelihood that is monotone in `nu`.
    Exponential { rate: f64 },
}

/// Optional upper bounds that truncate the flat priors to a compact set.
/// All `None` by default (improper flat priors).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SupportBounds {
    pub omega0_max: Option<f64>,
    /// Bound on `omega0` as a multiple of the sample variance of the series
    /// being fitted. Combined with `omega0_max` by taking the smaller.
    #[serde(default)]
    pub omega0_max_rel: Option<f64>,
    pub lambda_max: Option<f64>,
    pub gamma_max: Option<f64>,
    pub nu_max: Option<f64>,
    /// Bound on `|mu|`, `|phi_j|`, `|theta_j|` and `|delta|`.
    pub coef_abs_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    /// Location of the Cauchy-type prior on the transition slope.
    pub gamma0: f64,
    pub nu_prior: NuPrior,
    #[serde(default)]
    pub bounds: SupportBounds,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            gamma0: 5.0,
            nu_prior: NuPrior::IndependentJeffreys,
            bounds: SupportBounds::default(),
        }
    }
}

impl PriorConfig {
    /// Flat priors truncated to `omega0 <= 1` and `lambda <= 5`, used by the
    /// simulation study. Under Student-t errors the untruncated posterior is
    /// improper: with `c = (nu-2)/nu`, the likelihood tends to a finite limit
    /// along `nu -> 2`, `lambda = l/c`, `omega0 = o/c`, and the flat prior
    /// gives that ridge mass growing like `1/c^2`.
    pub fn study() -> Self {
        PriorConfig {
            bounds: SupportBounds { omega0_max: Some(1.0), lambda_max: Some(5.0), ..SupportBounds::default() },
            ..PriorConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 0.0) {
            return Err(Error::Config(format!("gamma0 must be > 0, got {}", self.gamma0)));
        }
        let b = &self.bounds;
        for (name, v) in [
            ("omega0_max", b.omega0_max),
            ("omega0_max_rel", b.omega0_max_rel),
            ("lambda_max", b.lambda_max),
            ("gamma_max", b.gamma_max),
            ("coef_abs_max", b.coef_abs_max),
        ] {
            if v.is_some_and(|v| !(v > 0.0)) {
                return Err(Error::Config(format!("{name} must be > 0")));
            }
        }
        if b.nu_max.is_some_and(|v| !(v > 2.0)) {
            return Err(Error::Config("nu_max must be > 2".into()));
        }
        if let NuPrior::Exponential { rate } = self.nu_prior {
            if !(rate > 0.0) {
                return Err(Error::Config(format!("nu prior rate must be > 0, got {rate}")));
            }
        }
        Ok(())
    }

    /// Turns data-relative bounds into absolute ones for the series `y`.
    pub fn resolve(&self, y: &[f64]) -> PriorConfig {
        let mut out = *self;
        if let Some(k) = self.bounds.omega0_max_rel {
            let n = y.len().max(1) as f64;
            let mean = y.iter().sum::<f64>() / n;
            let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let m = k * var;
            out.bounds.omega0_max = Some(self.bounds.omega0_max.map_or(m, |a| a.min(m)));
            out.bounds.omega0_max_rel = None;
        }
        out
    }

    /// Log prior density of `nu` under the configured prior and bounds.
    pub fn log_nu_prior(&self, nu: f64) -> f64 {
        if !(nu > 2.0) || self.bounds.nu_max.is_some_and(|m| nu > m) {
            return f64::NEG_INFINITY;
        }
        match self.nu_prior {
            NuPrior::IndependentJeffreys => log_jeffreys_nu(nu).unwrap_or(f64::NEG_INFINITY),
            NuPrior::Exponential { rate } => rate.ln() - rate * (nu - 2.0),
        }
    }

    /// Flat prior on the mean and variance blocks, restricted to the support
    /// and to any configured bounds: 0 inside, minus infinity outside.
    pub fn flat_logprior(&self, state: &ParamState, spec: &ModelSpec) -> f64 {
        let inside = flat_block_logprior(state, spec) == 0.0;
        let b = &self.bounds;
        let within = |v: f64, max: Option<f64>| max.map_or(true, |m| v <= m);
        let coef_ok = b.coef_abs_max.map_or(true, |m| {
            let mut all = state.phi.iter().chain(&state.theta);
            all.all(|c| c.abs() <= m)
                && (!spec.include_mu || state.mu.abs() <= m)
                && (!spec.include_m_term || state.delta.abs() <= m)
        });
        let asym = !spec.transition.is_none();
        if inside
            && coef_ok
            && within(state.omega0, b.omega0_max)
            && (!asym || within(state.lambda, b.lambda_max))
            && (!asym || within(state.gamma, b.gamma_max))
        {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// `B(nu) = psi'(nu/2) - psi'((nu+1)/2) - 2(nu+3) / (nu (nu+1)^2)`.
///
/// The three terms cancel to `O(nu^-4)`; above `BRACKET_SERIES_FROM` the
/// asymptotic expansion in `1/nu` is used instead.
fn jeffreys_bracket(nu: f64) -> f64 {
    const BRACKET_SERIES_FROM: f64 = 200.0;
    // Coefficients of nu^-4 .. nu^-15.
    const SERIES: [f64; 12] = [
        6.0, -12.0, 14.0, -12.0, 22.0, -60.0, 30.0, 276.0, 38.0, -4188.0, 46.0, 76404.0,
    ];
    if nu > BRACKET_SERIES_FROM {
        let e = 1.0 / nu;
        let mut acc = 0.0;
        for c in SERIES.iter().rev() {
            acc = acc * e + c;
        }
        acc * e.powi(4)
    } else {
        let np1 = nu + 1.0;
        trigamma_unchecked(0.5 * nu)
            - trigamma_unchecked(0.5 * np1)
            - 2.0 * (nu + 3.0) / (nu * np1 * np1)
    }
}

/// Unnormalized log of the independent Jeffreys prior for `nu`.
///
/// Decays like `nu^-2`, so the prior is proper on `(2, inf)`.
pub fn log_jeffreys_nu(nu: f64) -> Result<f64> {
    if !(nu > 2.0) {
        return Err(Error::Domain(format!("nu must be > 2, got {nu}")));
    }
    if nu.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let bracket = jeffreys_bracket(nu);
    if !(bracket > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(0.5 * (nu / (nu + 3.0)).ln() + 0.5 * bracket.ln())
}

/// Unnormalized log prior `-ln(1 + (gamma - gamma0)^2)` on `gamma > 0`.
pub fn log_gamma_prior(gamma: f64, gamma0: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("gamma must be > 0, got {gamma}")));
    }
    let d = gamma - gamma0;
    Ok(-(d * d).ln_1p())
}

/// Flat prior on the mean and variance blocks: 0 on the support, minus
/// infinity off it.
pub fn flat_block_logprior(state: &ParamState, spec: &ModelSpec) -> f64 {
    let mut check = state.clone();
    // latent weights are not part of this block
    check.w.clear();
    if !spec.error_family.is_student_t() {
        check.nu = f64::INFINITY;
    }
    match check.check_support(spec) {
        Ok(()) => 0.0,
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Outcome of the residual-kurtosis check on the Student-t likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LikelihoodShape {
    /// The likelihood in `nu` has no interior maximum.
    IllBehaved,
    NoEvidence,
}

/// Flags an ill-behaved likelihood when `sum((z^2 - 1)^2) < 2n`, where `z`
/// are residuals standardized under a Gaussian fit.
pub fn likelihood_wellbehaved_test(zhat: &[f64]) -> LikelihoodShape {
    let n = zhat.len() as f64;
    let stat: f64 = zhat.iter().map(|z| (z * z - 1.0).powi(2)).sum();
    if stat < 2.0 * n {
        LikelihoodShape::IllBehaved
    } else {
        LikelihoodShape::NoEvidence
    }
}

/// `u_t / sqrt(h_t)` from a filter pass.
pub fn standardized_residuals(filt: &FilterOutput) -> Vec<f64> {
    filt.u.iter().zip(&filt.h).map(|(u, h)| u / h.sqrt()).collect()
}

/// Sufficient statistics of the mixing weights for the inverse-gamma prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct MixingStats {
    pub n: f64,
    pub sum_ln_w: f64,
    pub sum_inv_w: f64,
}

impl MixingStats {
    pub fn from_weights(w: &[f64]) -> Self {
        MixingStats {
            n: w.len() as f64,
            sum_ln_w: w.iter().map(|v| v.ln()).sum(),
            sum_inv_w: w.iter().map(|v| 1.0 / v).sum(),
        }
    }

    /// `sum_t ln IG(w_t; nu/2, nu/2)`.
    pub fn log_ig(&self, nu: f64) -> f64 {
        let a = 0.5 * nu;
        self.n * (a * a.ln() - ln_gamma(a)) - (a + 1.0) * self.sum_ln_w - a * self.sum_inv_w
    }
}

/// Term-by-term breakdown of the log-posterior.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PosteriorTerms {
    pub loglik: f64,
    pub mixing: f64,
    pub nu_prior: f64,
    pub gamma_prior: f64,
    pub flat: f64,
}

impl PosteriorTerms {
    pub fn total(&self) -> f64 {
        let t = self.loglik + self.mixing + self.nu_prior + self.gamma_prior + self.flat;
        if t.is_nan() {
            f64::NEG_INFINITY
        } else {
            t
        }
    }
}

/// Computes the log-posterior terms given already-filtered `u` and `h`.
pub(crate) fn posterior_terms_from(
    spec: &ModelSpec,
    state: &ParamState,
    prior: &PriorConfig,
    u: &[f64],
    h: &[f64],
) -> PosteriorTerms {
    let mut t = PosteriorTerms {
        flat: prior.flat_logprior(state, spec),
        ..Default::default()
    };
    if !spec.transition.is_none() {
        t.gamma_prior = log_gamma_prior(state.gamma, prior.gamma0).unwrap_or(f64::NEG_INFINITY);
    }
    if spec.error_family.is_student_t() {
        t.nu_prior = prior.log_nu_prior(state.nu);
        if state.w.is_empty() {
            t.loglik = student_t_loglik_sum(u, h, state.nu);
        } else {
            t.loglik = conditional_loglik_terms(u, h, &state.w, state.nu);
            t.mixing = MixingStats::from_weights(&state.w).log_ig(state.nu);
        }
    } else {
        t.loglik = gaussian_loglik_sum(u, h);
    }
    t
}

/// Term-by-term log-posterior; all terms minus infinity off the support.
pub fn posterior_terms(
    y: &[f64],
    spec: &ModelSpec,
    state: &ParamState,
    prior: &PriorConfig,
) -> PosteriorTerms {
    let off = PosteriorTerms {
        flat: f64::NEG_INFINITY,
        ..Default::default()
    };
    let prior = &prior.resolve(y);
    if state.check_support(spec).is_err() || prior.flat_logprior(state, spec) == f64::NEG_INFINITY {
        return off;
    }
    let Ok((u, h)) = recursion_trimmed(y, spec, state) else {
        return PosteriorTerms {
            loglik: f64::NEG_INFINITY,
            ..Default::default()
        };
    };
    if spec.error_family.is_student_t() && !state.w.is_empty() && state.w.len() != u.len() {
        return off;
    }
    posterior_terms_from(spec, state, prior, &u, &h)
}

/// Joint log-posterior up to a constant.
///
/// Under the Student-t family this is the augmented posterior: the
/// likelihood conditional on `state.w` plus the inverse-gamma log density of
/// the weights. If `state.w` is empty the weights are integrated out
/// instead. Never returns NaN.
pub fn log_posterior(y: &[f64], spec: &ModelSpec, state: &ParamState, prior: &PriorConfig) -> f64 {
    posterior_terms(y, spec, state, prior).total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{filter, logpdf_gaussian, ErrorFamily, PresampleVariance, Transition};

    /// mpmath at 40 digits, with the `(nu+1)^2` denominator.
    const JEFFREYS_REFERENCE: [(f64, f64); 14] = [
        (2.0000001, -1.391_679_123_946_351_4),
        (2.5, -1.695_779_189_976_186_1),
        (3.0, -1.957_662_554_482_348_5),
        (5.0, -2.750_308_555_245_305_3),
        (10.0, -3.938_717_874_406_249),
        (30.0, -5.987_316_961_673_803_8),
        (100.0, -8.339_223_360_663_264_4),
        (199.0, -9.703_232_267_434_787_2),
        (201.0, -9.723_108_622_773_747),
        (1000.0, -12.922_128_411_172_343),
        (1e4, -17.525_050_985_176_17),
        (1e5, -22.129_996_195_084_767),
        (1e6, -26.735_143_881_312_104),
        (1e8, -35.945_481_778_290_703),
    ];

    #[test]
    fn jeffreys_matches_high_precision_reference() {
        for &(nu, expected) in &JEFFREYS_REFERENCE {
            let got = log_jeffreys_nu(nu).unwrap();
            // direct branch loses ~nu^3 eps relative to the bracket near the switch
            let tol = if nu < 300.0 { 1e-8 } else { 1e-11 };
            assert!((got - expected).abs() < tol, "nu={nu}: {got} vs {expected}");
        }
    }

    #[test]
    fn jeffreys_domain_and_tail() {
        assert!(log_jeffreys_nu(2.0).is_err());
        assert!(log_jeffreys_nu(f64::NAN).is_err());
        let drop = log_jeffreys_nu(1e3).unwrap() - log_jeffreys_nu(1e4).unwrap();
        // nu^-2 tail
        assert!((drop - 2.0 * 10f64.ln()).abs() < 0.01 * 2.0 * 10f64.ln());
    }

    #[test]
    fn series_and_direct_branches_agree_near_switch() {
        for nu in [150.0f64, 199.0, 201.0, 260.0] {
            let e = 1.0 / nu;
            let series: f64 = [6.0, -12.0, 14.0, -12.0, 22.0, -60.0, 30.0]
                .iter()
                .enumerate()
                .map(|(k, c)| c * e.powi(k as i32 + 4))
                .sum();
            let direct = trigamma_unchecked(0.5 * nu) - trigamma_unchecked(0.5 * (nu + 1.0))
                - 2.0 * (nu + 3.0) / (nu * (nu + 1.0) * (nu + 1.0));
            assert!(((series - direct) / series).abs() < 1e-6, "nu={nu}");
        }
    }

    #[test]
    fn gamma_prior_values() {
        assert_eq!(log_gamma_prior(5.0, 5.0).unwrap(), 0.0);
        assert!((log_gamma_prior(6.0, 5.0).unwrap() + 2f64.ln()).abs() < 1e-15);
        assert!((log_gamma_prior(8.0, 5.0).unwrap() + 10f64.ln()).abs() < 1e-15);
        assert!(log_gamma_prior(0.0, 5.0).is_err());
    }

    #[test]
    fn flat_prior_support() {
        let spec = ModelSpec::study(ErrorFamily::Gaussian);
        let truth = ParamState::study_truth(&spec, None);
        assert_eq!(flat_block_logprior(&truth, &spec), 0.0);
        let mut s = truth.clone();
        s.alpha[0] = 0.6;
        s.beta[0] = 0.5;
        assert_eq!(flat_block_logprior(&s, &spec), f64::NEG_INFINITY);
        let mut s = truth;
        s.omega0 = -0.1;
        assert_eq!(flat_block_logprior(&s, &spec), f64::NEG_INFINITY);
    }

    #[test]
    fn bounds_truncate_flat_prior() {
        let spec = ModelSpec::study(ErrorFamily::Gaussian);
        let truth = ParamState::study_truth(&spec, None);
        let mut prior = PriorConfig::default();
        prior.bounds.lambda_max = Some(0.5);
        assert_eq!(prior.flat_logprior(&truth, &spec), f64::NEG_INFINITY);
        prior.bounds.lambda_max = Some(2.0);
        prior.bounds.coef_abs_max = Some(0.5);
        assert_eq!(prior.flat_logprior(&truth, &spec), f64::NEG_INFINITY);
        prior.bounds.coef_abs_max = Some(1.0);
        assert_eq!(prior.flat_logprior(&truth, &spec), 0.0);
    }

    #[test]
    fn wellbehaved_test_cases() {
        assert_eq!(likelihood_wellbehaved_test(&[1.0; 7]), LikelihoodShape::IllBehaved);
        assert_eq!(likelihood_wellbehaved_test(&[-1.0; 1]), LikelihoodShape::IllBehaved);
        assert_eq!(likelihood_wellbehaved_test(&[2.0, 2.0, 2.0]), LikelihoodShape::NoEvidence);
        let z = [0.1, -2.5, 0.7, 1.9, -0.3];
        let mut rev = z;
        rev.reverse();
        assert_eq!(likelihood_wellbehaved_test(&z), likelihood_wellbehaved_test(&rev));
    }

    #[test]
    fn posterior_outside_support() {
        let spec = ModelSpec::study(ErrorFamily::StudentT);
        let mut s = ParamState::study_truth(&spec, Some(4.0));
        s.beta[0] = 0.6;
        let y = vec![0.1; 30];
        assert_eq!(log_posterior(&y, &spec, &s, &PriorConfig::default()), f64::NEG_INFINITY);
    }

    #[test]
    fn gaussian_posterior_is_loglik_plus_gamma_prior() {
        let spec = ModelSpec::study(ErrorFamily::Gaussian);
        let mut state = ParamState::study_truth(&spec, None);
        state.gamma = 3.0;
        let y: Vec<f64> = (0..40).map(|i| ((i * 13 % 17) as f64 - 8.0) / 4.0).collect();
        let prior = PriorConfig::default();
        let f = filter(&y, &spec, &state).unwrap();
        let expected = f.loglik + log_gamma_prior(3.0, 5.0).unwrap();
        assert_eq!(log_posterior(&y, &spec, &state, &prior), expected);
    }

    #[test]
    fn student_t_posterior_matches_hand_assembly() {
        let spec = ModelSpec::garch(1, 1)
            .with_arma(1, 0)
            .with_transition(Transition::Logistic)
            .with_family(ErrorFamily::StudentT)
            .with_presample(PresampleVariance::Fixed(1.0));
        let mut state = ParamState::neutral(&spec);
        state.phi = vec![0.3];
        state.omega0 = 0.4;
        state.alpha = vec![0.2];
        state.beta = vec![0.3];
        state.lambda = 0.5;
        state.gamma = 2.0;
        state.nu = 7.0;
        let y = [0.5, -1.0, 0.3, 2.2, -0.4, 0.1, -1.7, 0.8, 0.05, 1.1];
        state.w = vec![0.8, 1.2, 0.6, 2.5, 1.0, 0.9, 1.4, 0.7, 1.1];

        // independent assembly: explicit recursion and textbook densities
        let nu: f64 = 7.0;
        let c = (nu - 2.0) / nu;
        let mut u_prev: f64 = 0.0;
        let mut h_prev = 1.0;
        let mut total = 0.0;
        for t in 1..y.len() {
            let f = 1.0 / (1.0 + (-2.0 * u_prev).exp());
            let h = 0.4 + 0.5 * u_prev * u_prev * f + 0.3 * h_prev + 0.2 * u_prev * u_prev;
            let u = y[t] - 0.3 * y[t - 1];
            let w = state.w[t - 1];
            total += logpdf_gaussian(u, w * c * h).unwrap();
            let a = nu / 2.0;
            total += a * a.ln() - ln_gamma(a) - (a + 1.0) * w.ln() - a / w;
            u_prev = u;
            h_prev = h;
        }
        total += log_jeffreys_nu(nu).unwrap();
        total += -(1.0f64 + 9.0).ln();
        let got = log_posterior(&y, &spec, &state, &PriorConfig::default());
        assert!((got - total).abs() < 1e-10, "{got} vs {total}");
    }

    #[test]
    fn explosive_filter_maps_to_minus_infinity() {
        let spec = ModelSpec::garch(1, 1).with_transition(Transition::Exponential);
        let mut state = ParamState::neutral(&spec);
        state.lambda = 1e307;
        let y = [10.0; 6];
        assert_eq!(log_posterior(&y, &spec, &state, &PriorConfig::default()), f64::NEG_INFINITY);
    }
}
