use std::f64::consts::PI;

use super::{filter::recursion, ModelSpec, ParamState};
use crate::error::{Error, Result};
use crate::special::ln_gamma;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ln Γ(x + 1/2) - ln Γ(x)`, stable for large `x`.
pub(crate) fn ln_gamma_half_ratio(x: f64) -> f64 {
    if x < 20.0 {
        return ln_gamma(x + 0.5) - ln_gamma(x);
    }
    let e = 1.0 / x;
    let e2 = e * e;
    let series = e
        * (-1.0 / 8.0
            + e2 * (1.0 / 192.0
                + e2 * (-1.0 / 640.0 + e2 * (17.0 / 14336.0 + e2 * (-31.0 / 18432.0)))));
    0.5 * x.ln() + series
}

/// Log-normalizer of the variance-standardized Student-t density with unit
/// variance scale: `ln Γ((ν+1)/2) - ln Γ(ν/2) - ½ ln(π (ν-2))`.
#[inline]
fn student_t_log_norm(nu: f64) -> f64 {
    ln_gamma_half_ratio(0.5 * nu) - 0.5 * (PI * (nu - 2.0)).ln()
}

/// Log density of the Student-t with `nu` degrees of freedom scaled so that
/// its variance is `h`.
pub fn logpdf_student_t(u: f64, nu: f64, h: f64) -> Result<f64> {
    if !(nu > 2.0) {
        return Err(Error::Domain(format!("nu must be > 2, got {nu}")));
    }
    if !(h > 0.0) {
        return Err(Error::Domain(format!("h must be > 0, got {h}")));
    }
    let scale = (nu - 2.0) * h;
    Ok(student_t_log_norm(nu) - 0.5 * h.ln() - 0.5 * (nu + 1.0) * (u * u / scale).ln_1p())
}

/// Log density of `N(0, h)` at `u`.
pub fn logpdf_gaussian(u: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("h must be > 0, got {h}")));
    }
    Ok(-0.5 * (LN_2PI + h.ln() + u * u / h))
}

pub(crate) fn gaussian_loglik_sum(u: &[f64], h: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&ut, &ht) in u.iter().zip(h) {
        acc += ht.ln() + ut * ut / ht;
    }
    -0.5 * (u.len() as f64 * LN_2PI + acc)
}

pub(crate) fn student_t_loglik_sum(u: &[f64], h: &[f64], nu: f64) -> f64 {
    let n = u.len() as f64;
    let nm2 = nu - 2.0;
    let mut acc = 0.0;
    for (&ut, &ht) in u.iter().zip(h) {
        acc += 0.5 * ht.ln() + 0.5 * (nu + 1.0) * (ut * ut / (nm2 * ht)).ln_1p();
    }
    n * student_t_log_norm(nu) - acc
}

/// Sum of per-observation log densities given filtered `u` and `h`,
/// with the mixing weights integrated out. NaN maps to minus infinity.
pub fn marginal_loglik(spec: &ModelSpec, state: &ParamState, u: &[f64], h: &[f64]) -> Result<f64> {
    let ll = if spec.error_family.is_student_t() {
        if !(state.nu > 2.0) {
            return Err(Error::Domain(format!("nu must be > 2, got {}", state.nu)));
        }
        student_t_loglik_sum(u, h, state.nu)
    } else {
        gaussian_loglik_sum(u, h)
    };
    Ok(if ll.is_nan() { f64::NEG_INFINITY } else { ll })
}

/// Gaussian log-likelihood of residuals `u` with diagonal covariance
/// `w_t (ν-2)/ν h_t`, including the `-(n/2) ln 2π` constant.
pub(crate) fn conditional_loglik_terms(u: &[f64], h: &[f64], w: &[f64], nu: f64) -> f64 {
    let c = (nu - 2.0) / nu;
    let mut acc = 0.0;
    for ((&ut, &ht), &wt) in u.iter().zip(h).zip(w) {
        let var = wt * c * ht;
        acc += var.ln() + ut * ut / var;
    }
    -0.5 * (u.len() as f64 * LN_2PI + acc)
}

/// Log-likelihood conditional on the latent mixing weights `state.w`.
///
/// The covariance is diagonal so this is a linear-time sum. Under the
/// Gaussian family the weights are ignored and the plain Gaussian
/// log-likelihood is returned.
pub fn conditional_loglik(y: &[f64], spec: &ModelSpec, state: &ParamState) -> Result<f64> {
    let (u, h) = recursion(y, spec, state)?;
    let (u, h) = (&u[spec.p..], &h[spec.p..]);
    if !spec.error_family.is_student_t() {
        return Ok(gaussian_loglik_sum(u, h));
    }
    if !(state.nu > 2.0) {
        return Err(Error::Domain(format!("nu must be > 2, got {}", state.nu)));
    }
    if state.w.len() != u.len() {
        return Err(Error::Domain(format!(
            "expected {} mixing weights, got {}",
            u.len(),
            state.w.len()
        )));
    }
    let ll = conditional_loglik_terms(u, h, &state.w, state.nu);
    Ok(if ll.is_nan() { f64::NEG_INFINITY } else { ll })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ErrorFamily, PresampleVariance};
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn gaussian_reference_values() {
        assert!((logpdf_gaussian(0.0, 1.0).unwrap() + 0.918_938_533_204_672_7).abs() < 1e-15);
        assert!((logpdf_gaussian(1.0, 1.0).unwrap() + 1.418_938_533_204_672_7).abs() < 1e-15);
        // -0.5 ln(2π·4) - 0.5
        assert!((logpdf_gaussian(2.0, 4.0).unwrap() + 2.112_085_713_764_618).abs() < 1e-12);
        assert!(logpdf_gaussian(0.0, 0.0).is_err());
    }

    #[test]
    fn student_t_domain() {
        assert!(matches!(logpdf_student_t(0.0, 2.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(logpdf_student_t(0.0, 5.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn student_t_gaussian_limit() {
        for k in -5..=5 {
            let u = k as f64;
            let t = logpdf_student_t(u, 1e6, 1.0).unwrap();
            let g = logpdf_gaussian(u, 1.0).unwrap();
            assert!((t - g).abs() < 1e-3, "u={u}: {t} vs {g}");
        }
    }

    #[test]
    fn half_ratio_matches_direct_evaluation() {
        for &x in &[20.0, 25.0, 60.0, 300.0] {
            let direct = ln_gamma(x + 0.5) - ln_gamma(x);
            assert!((ln_gamma_half_ratio(x) - direct).abs() < 1e-12);
        }
    }

    fn instance() -> (Vec<f64>, ModelSpec, ParamState) {
        let spec = ModelSpec::garch(1, 1)
            .with_arma(1, 0)
            .with_family(ErrorFamily::StudentT)
            .with_presample(PresampleVariance::Fixed(0.8));
        let mut state = ParamState::neutral(&spec);
        state.phi = vec![0.4];
        state.omega0 = 0.3;
        state.alpha = vec![0.2];
        state.beta = vec![0.5];
        state.nu = 6.0;
        state.w = vec![0.7, 1.3, 0.9, 2.1, 1.1];
        let y = vec![0.3, -0.8, 1.7, 0.2, -2.4, 0.9];
        (y, spec, state)
    }

    #[test]
    fn conditional_loglik_matches_dense_formula() {
        let (y, spec, state) = instance();
        let out = filter_for(&y, &spec, &state);
        let n = out.0.len();
        let c = (state.nu - 2.0) / state.nu;
        let hmat = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                state.w[i] * c * out.1[i]
            } else {
                0.0
            }
        });
        let z = DVector::from_column_slice(&out.0);
        let quad = (z.transpose() * hmat.clone().try_inverse().unwrap() * &z)[(0, 0)];
        let dense = -0.5 * hmat.determinant().ln() - 0.5 * quad - 0.5 * n as f64 * LN_2PI;
        let fast = conditional_loglik(&y, &spec, &state).unwrap();
        assert!((fast - dense).abs() < 1e-10, "{fast} vs {dense}");
    }

    fn filter_for(y: &[f64], spec: &ModelSpec, state: &ParamState) -> (Vec<f64>, Vec<f64>) {
        let out = crate::model::filter(y, spec, state).unwrap();
        (out.u, out.h)
    }

    #[test]
    fn unit_weights_equal_scaled_gaussian() {
        let (y, spec, mut state) = instance();
        state.w = vec![1.0; 5];
        let (u, h) = filter_for(&y, &spec, &state);
        let c = (state.nu - 2.0) / state.nu;
        let scaled: Vec<f64> = h.iter().map(|v| v * c).collect();
        let g = gaussian_loglik_sum(&u, &scaled);
        assert!((conditional_loglik(&y, &spec, &state).unwrap() - g).abs() < 1e-12);
        // and in the nu -> infinity limit it approaches the plain Gaussian likelihood
        state.nu = 1e12;
        let limit = conditional_loglik(&y, &spec, &state).unwrap();
        assert!((limit - gaussian_loglik_sum(&u, &h)).abs() < 1e-8);
    }

    #[test]
    fn single_term() {
        let spec = ModelSpec::garch(1, 1)
            .with_family(ErrorFamily::StudentT)
            .with_presample(PresampleVariance::Fixed(2.0));
        let mut state = ParamState::neutral(&spec);
        state.w = vec![1.7];
        state.nu = 5.0;
        // y = 0 gives z = 0; beta = 0 so h_1 = omega0 = 1
        let ll = conditional_loglik(&[0.0], &spec, &state).unwrap();
        let expected = -0.5 * (1.7 * 0.6 * 1.0f64).ln() - 0.5 * LN_2PI;
        assert!((ll - expected).abs() < 1e-14);
    }

    #[test]
    fn wrong_weight_length() {
        let (y, spec, mut state) = instance();
        state.w.pop();
        assert!(conditional_loglik(&y, &spec, &state).is_err());
    }
}
