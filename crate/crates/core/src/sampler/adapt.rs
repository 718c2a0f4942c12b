use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Covariance estimates need this many samples per dimension before the
/// proposal shape switches from the initial diagonal.
const MIN_SAMPLES_PER_DIM: usize = 20;
const RESHAPE_EVERY: usize = 50;

/// Robbins-Monro gain for the `k`-th adaptation step.
fn gain(k: usize) -> f64 {
    (k as f64 + 1.0).powf(-0.6)
}

/// Random-walk proposal on a scalar with a Robbins-Monro tuned step.
#[derive(Debug, Clone)]
pub(crate) struct ScalarWalk {
    pub log_scale: f64,
    target: f64,
    steps: usize,
}

impl ScalarWalk {
    pub fn new(scale: f64, target: f64) -> Self {
        ScalarWalk {
            log_scale: scale.ln(),
            target,
            steps: 0,
        }
    }

    pub fn propose<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        x + self.log_scale.exp() * rng.sample::<f64, _>(StandardNormal)
    }

    pub fn adapt(&mut self, accept_prob: f64) {
        self.log_scale += gain(self.steps) * (accept_prob - self.target);
        self.log_scale = self.log_scale.clamp(-12.0, 5.0);
        self.steps += 1;
    }
}

/// Multivariate random walk whose shape follows the running covariance of
/// the chain and whose overall scale is tuned toward a target acceptance.
#[derive(Debug, Clone)]
pub(crate) struct AdaptiveWalk {
    dim: usize,
    log_scale: f64,
    target: f64,
    steps: usize,
    shape: DMatrix<f64>,
    reshaped: bool,
    n: usize,
    mean: DVector<f64>,
    scatter: DMatrix<f64>,
}

impl AdaptiveWalk {
    pub fn new(dim: usize, scale: f64, target: f64) -> Self {
        AdaptiveWalk {
            dim,
            log_scale: scale.ln(),
            target,
            steps: 0,
            shape: DMatrix::identity(dim, dim),
            reshaped: false,
            n: 0,
            mean: DVector::zeros(dim),
            scatter: DMatrix::zeros(dim, dim),
        }
    }

    pub fn propose<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Vec<f64> {
        let z = DVector::from_fn(self.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let step = &self.shape * z * self.log_scale.exp();
        x.iter().zip(step.iter()).map(|(a, b)| a + b).collect()
    }

    /// Records the post-step position and the step's acceptance probability.
    pub fn adapt(&mut self, accept_prob: f64, x: &[f64]) {
        self.log_scale += gain(self.steps) * (accept_prob - self.target);
        self.log_scale = self.log_scale.clamp(-12.0, 5.0);
        self.steps += 1;

        let xv = DVector::from_column_slice(x);
        self.n += 1;
        let delta = &xv - &self.mean;
        self.mean += &delta / self.n as f64;
        let delta2 = &xv - &self.mean;
        self.scatter += &delta * delta2.transpose();

        if self.n >= MIN_SAMPLES_PER_DIM * self.dim && self.n % RESHAPE_EVERY == 0 {
            let mut cov = &self.scatter / (self.n - 1) as f64;
            cov = (&cov + cov.transpose()) * 0.5;
            for i in 0..self.dim {
                cov[(i, i)] += 1e-10;
            }
            if let Some(chol) = cov.cholesky() {
                self.shape = chol.l();
                if !self.reshaped {
                    self.log_scale = (2.38 / (self.dim as f64).sqrt()).ln();
                    self.reshaped = true;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_walk_moves_toward_target() {
        let mut w = ScalarWalk::new(1.0, 0.3);
        for _ in 0..100 {
            w.adapt(0.0);
        }
        assert!(w.log_scale < 0.0);
        let mut w = ScalarWalk::new(1.0, 0.3);
        for _ in 0..100 {
            w.adapt(1.0);
        }
        assert!(w.log_scale > 0.0);
    }

    #[test]
    fn walk_learns_covariance_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut w = AdaptiveWalk::new(2, 0.1, 0.3);
        for _ in 0..2000 {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            w.adapt(0.3, &[3.0 * a, 3.0 * a + 0.1 * b]);
        }
        let cov = &w.shape * w.shape.transpose();
        assert!((cov[(0, 0)] / 9.0 - 1.0).abs() < 0.15);
        assert!((cov[(0, 1)] / cov[(0, 0)] - 1.0).abs() < 0.05);
    }
}
