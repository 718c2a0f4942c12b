use serde::{Deserialize, Serialize};

use super::{density, transition, ModelSpec, ParamState, PresampleVariance};
use crate::error::{Error, Result};

/// Residuals and conditional variances implied by a series and a parameter
/// state, aligned to the modelled observations `t = p+1..N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutput {
    pub u: Vec<f64>,
    pub h: Vec<f64>,
    /// Log-likelihood with the mixing weights integrated out.
    pub loglik: f64,
}

/// Variance assigned to every pre-sample time point.
pub(crate) fn presample_variance(y: &[f64], spec: &ModelSpec, state: &ParamState) -> f64 {
    match spec.presample {
        PresampleVariance::SampleVariance => {
            let n = y.len() as f64;
            let mean = y.iter().sum::<f64>() / n;
            y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
        }
        PresampleVariance::Unconditional => state.omega0 / (1.0 - state.persistence()),
        PresampleVariance::Fixed(v) => v,
    }
}

/// Conditional variance at absolute time `t` given residuals and variances
/// for all earlier times. Times before 0 use `u = 0` and `h = h0`.
#[inline]
pub(crate) fn variance_step(
    spec: &ModelSpec,
    state: &ParamState,
    u: &[f64],
    h: &[f64],
    t: usize,
    h0: f64,
) -> f64 {
    let lag_u = |j: usize| if t >= j { u[t - j] } else { 0.0 };
    let lag_h = |j: usize| if t >= j { h[t - j] } else { h0 };
    let mut v = state.omega0;
    if !spec.transition.is_none() {
        let u1 = lag_u(1);
        v += state.lambda * u1 * u1 * transition(spec.transition, u1, state.gamma);
    }
    for (j, b) in state.beta.iter().enumerate() {
        v += b * lag_h(j + 1);
    }
    for (j, a) in state.alpha.iter().enumerate() {
        let x = lag_u(j + 1);
        v += a * x * x;
    }
    v
}

/// Runs the joint mean/variance recursion over the full series.
///
/// Returns full-length `u` and `h` buffers indexed by absolute time; the
/// first `p` entries hold the pre-sample values (`u = 0`, `h = h0`).
pub(crate) fn recursion(
    y: &[f64],
    spec: &ModelSpec,
    state: &ParamState,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    let p = spec.p;
    if n <= p {
        return Err(Error::NotEnoughData { needed: p, got: n });
    }
    let h0 = presample_variance(y, spec, state);
    let mut u = vec![0.0; n];
    let mut h = vec![h0; n];
    for t in p..n {
        let ht = variance_step(spec, state, &u, &h, t, h0);
        let mut mean = state.mu;
        for (j, phi) in state.phi.iter().enumerate() {
            mean += phi * y[t - j - 1];
        }
        for (j, theta) in state.theta.iter().enumerate() {
            if t > j {
                mean += theta * u[t - j - 1];
            }
        }
        if spec.include_m_term {
            mean += state.delta * ht.sqrt();
        }
        let ut = y[t] - mean;
        if !(ht.is_finite() && ht > 0.0 && ut.is_finite()) {
            return Err(Error::NonFinite { index: t });
        }
        h[t] = ht;
        u[t] = ut;
    }
    Ok((u, h))
}

/// `recursion` with the pre-sample entries removed.
pub(crate) fn recursion_trimmed(
    y: &[f64],
    spec: &ModelSpec,
    state: &ParamState,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut u, mut h) = recursion(y, spec, state)?;
    u.drain(..spec.p);
    h.drain(..spec.p);
    Ok((u, h))
}

/// Filters `y` through the model at `state`.
///
/// Errors with `NonFinite` when the recursion leaves the finite reals,
/// which callers treat as a log-likelihood of minus infinity.
pub fn filter(y: &[f64], spec: &ModelSpec, state: &ParamState) -> Result<FilterOutput> {
    let (u, h) = recursion_trimmed(y, spec, state)?;
    let loglik = density::marginal_loglik(spec, state, &u, &h)?;
    Ok(FilterOutput { u, h, loglik })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ErrorFamily, Transition};

    #[test]
    fn zero_series_collapses_to_intercept() {
        let spec = ModelSpec::garch(1, 1).with_presample(PresampleVariance::Fixed(1.0));
        let state = ParamState::neutral(&spec);
        let y = vec![0.0; 25];
        let out = filter(&y, &spec, &state).unwrap();
        assert!(out.h.iter().all(|&h| h == 1.0));
        assert!(out.u.iter().all(|&u| u == 0.0));
        // default presample is the sample variance (0 here); h still equals omega0
        let spec = ModelSpec::garch(1, 1);
        let out = filter(&y, &spec, &state).unwrap();
        assert!(out.h.iter().all(|&h| h == 1.0));
    }

    #[test]
    fn single_step_hand_case() {
        let spec = ModelSpec::garch(1, 1).with_transition(Transition::Exponential);
        let mut state = ParamState::neutral(&spec);
        state.omega0 = 0.2;
        state.alpha = vec![0.3];
        state.beta = vec![0.4];
        state.lambda = 0.7;
        state.gamma = 2.0;
        let y = [0.9, -1.3, 0.4];
        let out = filter(&y, &spec, &state).unwrap();
        // p = q = 0 and no M-term: u_t = y_t
        assert_eq!(out.u, y.to_vec());
        let h1 = out.h[0];
        let u1: f64 = y[0];
        let h2 = 0.2 + 0.7 * u1 * u1 * (1.0 - (-2.0 * u1 * u1).exp()) + 0.4 * h1 + 0.3 * u1 * u1;
        assert!((out.h[1] - h2).abs() < 1e-15);
        // h_1 from the presample sample variance with u_0 = 0
        let mean = y.iter().sum::<f64>() / 3.0;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
        assert!((h1 - (0.2 + 0.4 * var)).abs() < 1e-15);
    }

    #[test]
    fn arma_m_recursion_by_hand() {
        let spec = ModelSpec::garch(1, 1)
            .with_arma(1, 1)
            .with_m_term(true)
            .with_mu(true)
            .with_presample(PresampleVariance::Fixed(0.5));
        let mut state = ParamState::neutral(&spec);
        state.mu = 0.1;
        state.phi = vec![0.5];
        state.theta = vec![0.2];
        state.delta = 0.3;
        state.omega0 = 0.1;
        state.alpha = vec![0.2];
        state.beta = vec![0.6];
        let y = [1.0, 2.0, -1.0];
        let out = filter(&y, &spec, &state).unwrap();
        let h2: f64 = 0.1 + 0.6 * 0.5; // u_1 presample = 0, h_1 presample = 0.5
        let u2 = 2.0 - 0.1 - 0.5 * 1.0 - 0.3 * h2.sqrt();
        let h3: f64 = 0.1 + 0.6 * h2 + 0.2 * u2 * u2;
        let u3 = -1.0 - 0.1 - 0.5 * 2.0 - 0.2 * u2 - 0.3 * h3.sqrt();
        assert!((out.h[0] - h2).abs() < 1e-15 && (out.u[0] - u2).abs() < 1e-15);
        assert!((out.h[1] - h3).abs() < 1e-15 && (out.u[1] - u3).abs() < 1e-15);
    }

    #[test]
    fn explosive_point_is_non_finite() {
        let spec = ModelSpec::garch(1, 1).with_transition(Transition::Exponential);
        let mut state = ParamState::neutral(&spec);
        state.lambda = 1e307;
        let y = [10.0, 10.0, 10.0, 10.0];
        assert!(matches!(filter(&y, &spec, &state), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn variance_floor_and_determinism() {
        let spec = ModelSpec::study(ErrorFamily::StudentT);
        let state = ParamState::study_truth(&spec, Some(4.0));
        let y: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64 / 50.0 - 1.0) * 2.0).collect();
        let a = filter(&y, &spec, &state).unwrap();
        let b = filter(&y, &spec, &state).unwrap();
        assert_eq!(a, b);
        assert!(a.h.iter().all(|&h| h >= state.omega0));
        assert_eq!(a.u.len(), y.len() - spec.p);
    }

    #[test]
    fn not_enough_data() {
        let spec = ModelSpec::garch(1, 1).with_arma(3, 0);
        let state = ParamState::neutral(&spec);
        assert!(matches!(
            filter(&[1.0, 2.0, 3.0], &spec, &state),
            Err(Error::NotEnoughData { .. })
        ));
    }
}
