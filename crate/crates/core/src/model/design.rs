use nalgebra::DMatrix;

use super::{FilterOutput, ModelSpec, ParamState};

/// Regression form of the mean equation, `y = X phi + A theta + H~ psi + u`,
/// with `H` the diagonal covariance of `u`. Diagonal matrices are stored as
/// their diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    /// `(N-p) x p` lagged observations; row `k` is `(y_{t-1}, ..., y_{t-p})`
    /// for `t = p + k` (0-based).
    pub x: DMatrix<f64>,
    /// `(N-p) x q` lagged residuals with pre-sample zeros.
    pub a: DMatrix<f64>,
    /// Diagonal of `H~`, i.e. `sqrt(h_t)`.
    pub htilde: Vec<f64>,
    /// Diagonal of `H`: `w_t (nu-2)/nu h_t` (Student-t) or `h_t` (Gaussian).
    pub hdiag: Vec<f64>,
    /// Response `(y_{p+1}, ..., y_N)`.
    pub target: Vec<f64>,
}

impl DesignMatrices {
    /// Builds the design at the residuals and variances in `filt`.
    ///
    /// Under the Student-t family `state.w` must hold one weight per
    /// modelled observation; missing weights count as 1.
    pub fn build(y: &[f64], spec: &ModelSpec, state: &ParamState, filt: &FilterOutput) -> Self {
        Self::from_parts(y, spec, state, &filt.u, &filt.h)
    }

    /// As [`build`](Self::build), from trimmed residual and variance series.
    pub(crate) fn from_parts(
        y: &[f64],
        spec: &ModelSpec,
        state: &ParamState,
        u: &[f64],
        h: &[f64],
    ) -> Self {
        let p = spec.p;
        let n = y.len() - p;
        let x = DMatrix::from_fn(n, p, |k, j| y[p + k - j - 1]);
        let a = DMatrix::from_fn(n, spec.q, |k, j| if k > j { u[k - j - 1] } else { 0.0 });
        let htilde = h.iter().map(|h| h.sqrt()).collect();
        let hdiag = if spec.error_family.is_student_t() {
            let c = (state.nu - 2.0) / state.nu;
            h.iter()
                .enumerate()
                .map(|(k, h)| state.w.get(k).copied().unwrap_or(1.0) * c * h)
                .collect()
        } else {
            h.to_vec()
        };
        DesignMatrices {
            x,
            a,
            htilde,
            hdiag,
            target: y[p..].to_vec(),
        }
    }

    /// `X` with a leading column of ones when the level `mu` is modelled.
    pub fn mean_design(&self, include_mu: bool) -> DMatrix<f64> {
        if include_mu {
            self.x.clone().insert_column(0, 1.0)
        } else {
            self.x.clone()
        }
    }

    pub fn n_obs(&self) -> usize {
        self.target.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{filter, ErrorFamily, PresampleVariance};

    #[test]
    fn layout_matches_lag_structure() {
        let spec = ModelSpec::garch(1, 1)
            .with_arma(2, 2)
            .with_family(ErrorFamily::StudentT)
            .with_presample(PresampleVariance::Fixed(1.0));
        let mut state = ParamState::neutral(&spec);
        state.phi = vec![0.3, 0.1];
        state.theta = vec![0.2, -0.1];
        state.alpha = vec![0.1];
        state.nu = 5.0;
        state.w = vec![1.0, 2.0, 0.5, 1.5];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let f = filter(&y, &spec, &state).unwrap();
        let d = DesignMatrices::build(&y, &spec, &state, &f);
        assert_eq!(d.x.nrows(), 4);
        assert_eq!((d.x[(0, 0)], d.x[(0, 1)]), (2.0, 1.0));
        assert_eq!((d.x[(3, 0)], d.x[(3, 1)]), (5.0, 4.0));
        assert_eq!((d.a[(0, 0)], d.a[(0, 1)]), (0.0, 0.0));
        assert_eq!((d.a[(1, 0)], d.a[(1, 1)]), (f.u[0], 0.0));
        assert_eq!((d.a[(3, 0)], d.a[(3, 1)]), (f.u[2], f.u[1]));
        for k in 0..4 {
            assert_eq!(d.htilde[k], f.h[k].sqrt());
            assert!((d.hdiag[k] - state.w[k] * 0.6 * f.h[k]).abs() < 1e-15);
        }
        assert_eq!(d.target, y[2..].to_vec());
        let with_mu = d.mean_design(true);
        assert_eq!(with_mu.ncols(), 3);
        assert_eq!(with_mu[(2, 0)], 1.0);
    }
}
