//! Unconstrained coordinates for the variance block.
//!
//! `omega0`, `lambda` and `gamma` go through logs. The ARCH/GARCH
//! coefficients together with the slack `1 - sum(alpha) - sum(beta)` lie on
//! a simplex and are mapped by additive log-ratios against the slack.

use crate::model::{ModelSpec, ParamState};

pub(crate) fn dim(spec: &ModelSpec) -> usize {
    1 + spec.r + spec.s + if spec.transition.is_none() { 0 } else { 2 }
}

pub(crate) fn to_unconstrained(spec: &ModelSpec, state: &ParamState) -> Vec<f64> {
    let slack = 1.0 - state.persistence();
    let mut x = Vec::with_capacity(dim(spec));
    x.push(state.omega0.ln());
    x.extend(state.alpha.iter().chain(&state.beta).map(|a| (a / slack).ln()));
    if !spec.transition.is_none() {
        x.push(state.lambda.ln());
        x.push(state.gamma.ln());
    }
    x
}

/// Writes the constrained values of `x` into `state`.
pub(crate) fn apply(spec: &ModelSpec, x: &[f64], state: &mut ParamState) {
    state.omega0 = x[0].exp();
    let ratios = &x[1..1 + spec.s + spec.r];
    // softmax with the slack as reference category
    let m = ratios.iter().copied().fold(0.0f64, f64::max);
    let denom = (-m).exp() + ratios.iter().map(|r| (r - m).exp()).sum::<f64>();
    for (j, a) in state.alpha.iter_mut().enumerate() {
        *a = (ratios[j] - m).exp() / denom;
    }
    for (j, b) in state.beta.iter_mut().enumerate() {
        *b = (ratios[spec.s + j] - m).exp() / denom;
    }
    if !spec.transition.is_none() {
        state.lambda = x[1 + spec.s + spec.r].exp();
        state.gamma = x[2 + spec.s + spec.r].exp();
    }
}

/// `ln |d(constrained) / d(unconstrained)|` at `state`.
pub(crate) fn log_jacobian(spec: &ModelSpec, state: &ParamState) -> f64 {
    let slack = 1.0 - state.persistence();
    let mut j = state.omega0.ln() + slack.ln();
    j += state.alpha.iter().chain(&state.beta).map(|a| a.ln()).sum::<f64>();
    if !spec.transition.is_none() {
        j += state.lambda.ln() + state.gamma.ln();
    }
    j
}
