use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{recursion_trimmed, DesignMatrices, ModelSpec, ParamState};

const MAX_CONDITION: f64 = 1e12;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Coefficient blocks of the mean equation that have Gaussian conditionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MeanBlock {
    /// `(mu, phi_1..phi_p)`, with `mu` only when the level is modelled.
    Phi,
    Theta,
    /// The in-mean coefficient `delta`.
    Psi,
}

impl MeanBlock {
    pub fn dim(self, spec: &ModelSpec) -> usize {
        match self {
            MeanBlock::Phi => spec.p + usize::from(spec.include_mu),
            MeanBlock::Theta => spec.q,
            MeanBlock::Psi => usize::from(spec.include_m_term),
        }
    }

    pub fn get(self, spec: &ModelSpec, state: &ParamState) -> Vec<f64> {
        match self {
            MeanBlock::Phi => {
                let mut v = Vec::with_capacity(self.dim(spec));
                if spec.include_mu {
                    v.push(state.mu);
                }
                v.extend(&state.phi);
                v
            }
            MeanBlock::Theta => state.theta.clone(),
            MeanBlock::Psi => vec![state.delta],
        }
    }

    pub fn set(self, spec: &ModelSpec, state: &mut ParamState, v: &[f64]) {
        match self {
            MeanBlock::Phi => {
                let off = usize::from(spec.include_mu);
                if spec.include_mu {
                    state.mu = v[0];
                }
                state.phi.copy_from_slice(&v[off..]);
            }
            MeanBlock::Theta => state.theta.copy_from_slice(v),
            MeanBlock::Psi => state.delta = v[0],
        }
    }
}

/// Gaussian law `N(P^-1 b, P^-1)` held through the Cholesky factor of the
/// precision `P`.
#[derive(Debug, Clone)]
pub struct GaussianConditional {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det_precision: f64,
}

impl GaussianConditional {
    /// Generalized least squares: regress `target` on `design` with
    /// independent errors of variance `hdiag`.
    pub fn gls(design: &DMatrix<f64>, target: &[f64], hdiag: &[f64]) -> Result<Self> {
        let k = design.ncols();
        let mut precision = DMatrix::zeros(k, k);
        let mut b = DVector::zeros(k);
        for (t, (&yt, &ht)) in target.iter().zip(hdiag).enumerate() {
            let row = design.row(t);
            let wt = 1.0 / ht;
            for i in 0..k {
                let xi = row[i] * wt;
                b[i] += xi * yt;
                for j in 0..=i {
                    precision[(i, j)] += xi * row[j];
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                precision[(j, i)] = precision[(i, j)];
            }
        }
        Self::from_precision(precision, b)
    }

    /// `N(P^-1 b, P^-1)`; fails when `P` is not positive definite or its
    /// condition number exceeds 1e12.
    pub fn from_precision(precision: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let eig = SymmetricEigen::new(precision.clone()).eigenvalues;
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::SingularDesign { condition });
        }
        let chol = Cholesky::new(precision).ok_or(Error::SingularDesign { condition })?;
        let mean = chol.solve(&b);
        let log_det_precision = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(GaussianConditional {
            mean,
            chol,
            log_det_precision,
        })
    }

    /// Conditional of `block` given every other parameter in `state`,
    /// with the residuals and variances evaluated at `state`.
    pub fn for_block(
        block: MeanBlock,
        y: &[f64],
        spec: &ModelSpec,
        state: &ParamState,
    ) -> Result<Self> {
        let (u, h) = recursion_trimmed(y, spec, state)?;
        Self::for_block_at(block, y, spec, state, &u, &h)
    }

    pub(crate) fn for_block_at(
        block: MeanBlock,
        y: &[f64],
        spec: &ModelSpec,
        state: &ParamState,
        u: &[f64],
        h: &[f64],
    ) -> Result<Self> {
        let d = DesignMatrices::from_parts(y, spec, state, u, h);
        let n = d.n_obs();
        let mut target = d.target.clone();
        let lagged = |t: usize, m: &DMatrix<f64>, coef: &[f64]| -> f64 {
            coef.iter().enumerate().map(|(j, c)| c * m[(t, j)]).sum()
        };
        for t in 0..n {
            if block != MeanBlock::Phi {
                target[t] -= state.mu + lagged(t, &d.x, &state.phi);
            } else if !spec.include_mu {
                target[t] -= state.mu;
            }
            if block != MeanBlock::Theta {
                target[t] -= lagged(t, &d.a, &state.theta);
            }
            if block != MeanBlock::Psi && spec.include_m_term {
                target[t] -= state.delta * d.htilde[t];
            }
        }
        let design = match block {
            MeanBlock::Phi => d.mean_design(spec.include_mu),
            MeanBlock::Theta => d.a.clone(),
            MeanBlock::Psi => DMatrix::from_column_slice(n, 1, &d.htilde),
        };
        Self::gls(&design, &target, &d.hdiag)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    /// `mean + L^-T z` with `z` standard normal, where `P = L L^T`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let l = self.chol.l();
        let x = l.transpose().solve_upper_triangular(&z).expect("cholesky factor has positive diagonal");
        &self.mean + x
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d = DVector::from_column_slice(x) - &self.mean;
        let lt_d = self.chol.l().transpose() * &d;
        0.5 * self.log_det_precision - 0.5 * self.dim() as f64 * LN_2PI - 0.5 * lt_d.norm_squared()
    }
}

fn draw_block<R: Rng + ?Sized>(
    block: MeanBlock,
    y: &[f64],
    spec: &ModelSpec,
    state: &ParamState,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if block.dim(spec) == 0 {
        return Ok(Vec::new());
    }
    let cond = GaussianConditional::for_block(block, y, spec, state)?;
    Ok(cond.draw(rng).iter().copied().collect())
}

/// One draw of `(mu, phi)` (`mu` first, when modelled) from its Gaussian
/// conditional with residuals and variances held at `state`.
pub fn draw_phi<R: Rng + ?Sized>(
    y: &[f64],
    spec: &ModelSpec,
    state: &ParamState,
    rng: &mut R,
) -> Result<Vec<f64>> {
    draw_block(MeanBlock::Phi, y, spec, state, rng)
}

/// One draw of the MA coefficients from their Gaussian conditional.
pub fn draw_theta<R: Rng + ?Sized>(
    y: &[f64],
    spec: &ModelSpec,
    state: &ParamState,
    rng: &mut R,
) -> Result<Vec<f64>> {
    draw_block(MeanBlock::Theta, y, spec, state, rng)
}

/// One draw of `delta` from its Gaussian conditional; `None` when the
/// in-mean term is off.
pub fn draw_psi<R: Rng + ?Sized>(
    y: &[f64],
    spec: &ModelSpec,
    state: &ParamState,
    rng: &mut R,
) -> Result<Option<f64>> {
    if !spec.include_m_term {
        return Ok(None);
    }
    Ok(draw_block(MeanBlock::Psi, y, spec, state, rng)?.first().copied())
}
