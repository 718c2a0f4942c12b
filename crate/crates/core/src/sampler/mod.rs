//! Metropolis-within-Gibbs sampler over the mean blocks, the variance block,
//! the latent mixing weights and the degrees of freedom.
//!
//! The Gaussian conditionals of the mean blocks are exact only when the
//! residuals and variances do not move with the block. They do move here
//! (through the MA, ARCH and in-mean terms), so each such draw is used as an
//! independence-type proposal and corrected with a Metropolis-Hastings step
//! that re-evaluates the conditional at the proposed point.

mod adapt;
mod chain;
mod gaussian;
mod transform;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use chain::{quantile_sorted, Chain, ParamSummary};
pub use gaussian::{draw_phi, draw_psi, draw_theta, GaussianConditional, MeanBlock};

use crate::error::{Error, Result};
use crate::model::{
    conditional_loglik_terms, gaussian_loglik_sum, recursion_trimmed, student_t_loglik_sum,
    ModelSpec, ParamState,
};
use crate::priors::{log_gamma_prior, MixingStats, PriorConfig};
use adapt::{AdaptiveWalk, ScalarWalk};

/// Updatable parts of the parameter state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Block {
    Phi,
    Theta,
    Psi,
    Variance,
    Weights,
    Nu,
}

impl Block {
    pub fn as_str(self) -> &'static str {
        match self {
            Block::Phi => "phi",
            Block::Theta => "theta",
            Block::Psi => "psi",
            Block::Variance => "variance",
            Block::Weights => "w",
            Block::Nu => "nu",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    /// Total sweeps, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Independent chains; chain `k` uses a seed derived from `seed` and `k`.
    pub chains: usize,
    /// Initial random-walk scales for the `variance` and `nu` blocks.
    pub proposal_scales: BTreeMap<String, f64>,
    /// Acceptance band the burn-in adaptation aims at (its midpoint).
    pub adapt_target: (f64, f64),
    /// Metropolis updates of `nu` per sweep; each one is O(1).
    pub nu_updates: usize,
    /// Leading burn-in sweeps in which the mean-block conditional draws are
    /// taken without the Hastings correction, to move quickly from a poor
    /// starting point. Capped at `burn_in`.
    pub warmup: usize,
    /// Keep the mixing weights in every stored draw.
    pub keep_latent: bool,
    /// Blocks held at their initial values.
    pub fixed: BTreeSet<Block>,
    /// Starting point; a data-driven default is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<ParamState>,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iterations: 6000,
            burn_in: 2000,
            thin: 2,
            seed: 42,
            chains: 1,
            proposal_scales: BTreeMap::from([("nu".to_string(), 0.5), ("variance".to_string(), 0.1)]),
            adapt_target: (0.2, 0.4),
            nu_updates: 5,
            warmup: 300,
            keep_latent: false,
            fixed: BTreeSet::new(),
            initial: None,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return bad(format!(
                "need 0 <= burn_in < iterations, got {} and {}",
                self.burn_in, self.iterations
            ));
        }
        if self.thin == 0 || self.chains == 0 {
            return bad("thin and chains must be positive".into());
        }
        if let Some((k, v)) = self.proposal_scales.iter().find(|(_, v)| !(**v > 0.0)) {
            return bad(format!("proposal scale '{k}' must be > 0, got {v}"));
        }
        let (lo, hi) = self.adapt_target;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return bad(format!("bad acceptance band ({lo}, {hi})"));
        }
        Ok(())
    }

    fn scale(&self, key: &str, default: f64) -> f64 {
        self.proposal_scales.get(key).copied().unwrap_or(default)
    }

    fn target(&self) -> f64 {
        0.5 * (self.adapt_target.0 + self.adapt_target.1)
    }

    /// Seed of chain `k`.
    pub fn chain_seed(&self, k: usize) -> u64 {
        if k == 0 {
            self.seed
        } else {
            self.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        }
    }
}

/// Accepts with probability `min(1, exp(log_ratio))`. NaN never accepts.
pub fn metropolis_accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

fn accept_prob(log_ratio: f64) -> f64 {
    if log_ratio.is_nan() {
        0.0
    } else {
        log_ratio.min(0.0).exp()
    }
}

/// Log target shared by the mean and variance blocks: the likelihood
/// (conditional on `w` when weights are present), the transition-slope prior
/// and the flat prior. Terms that only involve `w` and `nu` are omitted.
fn block_log_target(spec: &ModelSpec, prior: &PriorConfig, state: &ParamState, u: &[f64], h: &[f64]) -> f64 {
    if prior.flat_logprior(state, spec) == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut lp = if !spec.error_family.is_student_t() {
        gaussian_loglik_sum(u, h)
    } else if state.w.len() == u.len() {
        conditional_loglik_terms(u, h, &state.w, state.nu)
    } else {
        student_t_loglik_sum(u, h, state.nu)
    };
    if !spec.transition.is_none() {
        lp += log_gamma_prior(state.gamma, prior.gamma0).unwrap_or(f64::NEG_INFINITY);
    }
    if lp.is_nan() {
        f64::NEG_INFINITY
    } else {
        lp
    }
}

/// A state with its residuals, variances and block log target.
#[derive(Debug, Clone)]
struct Point {
    state: ParamState,
    u: Vec<f64>,
    h: Vec<f64>,
    lp: f64,
}

impl Point {
    fn evaluate(y: &[f64], spec: &ModelSpec, prior: &PriorConfig, state: ParamState) -> Point {
        if state.check_support(spec).is_err() {
            return Point { state, u: Vec::new(), h: Vec::new(), lp: f64::NEG_INFINITY };
        }
        match recursion_trimmed(y, spec, &state) {
            Ok((u, h)) => {
                let lp = block_log_target(spec, prior, &state, &u, &h);
                Point { state, u, h, lp }
            }
            Err(_) => Point { state, u: Vec::new(), h: Vec::new(), lp: f64::NEG_INFINITY },
        }
    }

    fn valid(&self) -> bool {
        self.lp > f64::NEG_INFINITY
    }
}

/// Outcome of one Metropolis-Hastings update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhOutcome {
    pub accepted: bool,
    /// `min(1, exp(log_ratio))`.
    pub accept_prob: f64,
}

fn mean_block_mh<R: Rng + ?Sized>(
    block: MeanBlock,
    y: &[f64],
    spec: &ModelSpec,
    prior: &PriorConfig,
    cur: &mut Point,
    uncorrected: bool,
    rng: &mut R,
) -> Result<MhOutcome> {
    let reject = MhOutcome { accepted: false, accept_prob: 0.0 };
    if !cur.valid() {
        return Ok(reject);
    }
    let fwd = GaussianConditional::for_block_at(block, y, spec, &cur.state, &cur.u, &cur.h)?;
    let x_old = block.get(spec, &cur.state);
    let x_new: Vec<f64> = fwd.draw(rng).iter().copied().collect();
    let mut proposed = cur.state.clone();
    block.set(spec, &mut proposed, &x_new);
    let prop = Point::evaluate(y, spec, prior, proposed);
    if !prop.valid() {
        return Ok(reject);
    }
    if uncorrected {
        *cur = prop;
        return Ok(MhOutcome { accepted: true, accept_prob: 1.0 });
    }
    let Ok(rev) = GaussianConditional::for_block_at(block, y, spec, &prop.state, &prop.u, &prop.h) else {
        return Ok(reject);
    };
    let log_ratio = prop.lp - cur.lp + rev.log_density(&x_old) - fwd.log_density(&x_new);
    let accepted = metropolis_accept(log_ratio, rng);
    if accepted {
        *cur = prop;
    }
    Ok(MhOutcome { accepted, accept_prob: accept_prob(log_ratio) })
}

/// Metropolis-Hastings update of the variance block from unconstrained
/// coordinates `x_new`.
fn variance_mh<R: Rng + ?Sized>(
    x_new: &[f64],
    y: &[f64],
    spec: &ModelSpec,
    prior: &PriorConfig,
    cur: &mut Point,
    rng: &mut R,
) -> MhOutcome {
    let mut proposed = cur.state.clone();
    transform::apply(spec, x_new, &mut proposed);
    let prop = Point::evaluate(y, spec, prior, proposed);
    let log_ratio = if prop.valid() {
        prop.lp + transform::log_jacobian(spec, &prop.state)
            - cur.lp
            - transform::log_jacobian(spec, &cur.state)
    } else {
        f64::NEG_INFINITY
    };
    let accepted = prop.valid() && metropolis_accept(log_ratio, rng);
    let out = MhOutcome { accepted, accept_prob: accept_prob(log_ratio) };
    if accepted {
        *cur = prop;
    }
    out
}

/// What the `nu` step conditions on.
enum NuStats {
    /// Given the weights: O(1) per evaluation.
    Weighted {
        n: f64,
        /// `sum u^2 / (w h)`.
        scaled_sq: f64,
        mixing: MixingStats,
    },
    /// Weights integrated out: O(n) per evaluation.
    Marginal { u: Vec<f64>, h: Vec<f64> },
}

impl NuStats {
    fn new(u: &[f64], h: &[f64], w: &[f64]) -> Self {
        let scaled_sq = u.iter().zip(h).zip(w).map(|((u, h), w)| u * u / (w * h)).sum();
        NuStats::Weighted { n: u.len() as f64, scaled_sq, mixing: MixingStats::from_weights(w) }
    }

    fn marginal(u: &[f64], h: &[f64]) -> Self {
        NuStats::Marginal { u: u.to_vec(), h: h.to_vec() }
    }

    /// Log conditional density of `nu`, up to a constant.
    fn log_target(&self, nu: f64, prior: &PriorConfig) -> f64 {
        if !(nu > 2.0) || !nu.is_finite() {
            return f64::NEG_INFINITY;
        }
        let lp = match self {
            NuStats::Weighted { n, scaled_sq, mixing } => {
                let c = (nu - 2.0) / nu;
                -0.5 * n * c.ln() - 0.5 * scaled_sq / c + mixing.log_ig(nu)
            }
            NuStats::Marginal { u, h } => student_t_loglik_sum(u, h, nu),
        } + prior.log_nu_prior(nu);
        if lp.is_nan() {
            f64::NEG_INFINITY
        } else {
            lp
        }
    }
}

fn nu_mh<R: Rng + ?Sized>(stats: &NuStats, prior: &PriorConfig, nu: &mut f64, step: f64, rng: &mut R) -> MhOutcome {
    let x_old = (*nu - 2.0).ln();
    let x_new = x_old + step;
    let nu_new = 2.0 + x_new.exp();
    // random walk on log(nu - 2): Jacobian nu - 2
    let log_ratio = stats.log_target(nu_new, prior) + x_new - stats.log_target(*nu, prior) - x_old;
    let accepted = metropolis_accept(log_ratio, rng);
    if accepted {
        *nu = nu_new;
    }
    MhOutcome { accepted, accept_prob: accept_prob(log_ratio) }
}

fn sample_weights<R: Rng + ?Sized>(u: &[f64], h: &[f64], nu: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(nu > 2.0) {
        return Err(Error::Domain(format!("nu must be > 2, got {nu}")));
    }
    let c = (nu - 2.0) / nu;
    let shape = 0.5 * (nu + 1.0);
    u.iter()
        .zip(h)
        .map(|(&ut, &ht)| {
            let rate = 0.5 * (nu + ut * ut / (c * ht));
            let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::Domain(e.to_string()))?;
            Ok(1.0 / g.sample(rng))
        })
        .collect()
}

/// Draws every mixing weight from its inverse-gamma conditional
/// `IG((nu+1)/2, (nu + u_t^2 nu / ((nu-2) h_t)) / 2)`.
pub fn draw_mixing_weights<R: Rng + ?Sized>(
    y: &[f64],
    spec: &ModelSpec,
    state: &ParamState,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !spec.error_family.is_student_t() {
        return Err(Error::InvalidSpec("mixing weights need the Student-t family".into()));
    }
    let (u, h) = recursion_trimmed(y, spec, state)?;
    sample_weights(&u, &h, state.nu, rng)
}

/// One random-walk Metropolis update of `(omega0, alpha, beta, lambda,
/// gamma)` on unconstrained coordinates with isotropic step `scale`.
/// Returns the new state and whether the move was accepted.
pub fn draw_variance_block<R: Rng + ?Sized>(
    y: &[f64],
    spec: &ModelSpec,
    state: &ParamState,
    prior: &PriorConfig,
    scale: f64,
    rng: &mut R,
) -> (ParamState, MhOutcome) {
    let mut cur = Point::evaluate(y, spec, prior, state.clone());
    if !cur.valid() {
        return (state.clone(), MhOutcome { accepted: false, accept_prob: 0.0 });
    }
    let x: Vec<f64> = transform::to_unconstrained(spec, state)
        .into_iter()
        .map(|v| v + scale * rng.sample::<f64, _>(rand_distr::StandardNormal))
        .collect();
    let out = variance_mh(&x, y, spec, prior, &mut cur, rng);
    (cur.state, out)
}

/// One random-walk Metropolis update of `log(nu - 2)` with step `scale`,
/// targeting the conditional of `nu` given the weights in `state.w`.
pub fn draw_nu<R: Rng + ?Sized>(
    y: &[f64],
    spec: &ModelSpec,
    state: &ParamState,
    prior: &PriorConfig,
    scale: f64,
    rng: &mut R,
) -> Result<(f64, MhOutcome)> {
    if !spec.error_family.is_student_t() {
        return Err(Error::InvalidSpec("nu is only defined for the Student-t family".into()));
    }
    let (u, h) = recursion_trimmed(y, spec, state)?;
    if state.w.len() != u.len() {
        return Err(Error::Domain(format!("expected {} mixing weights, got {}", u.len(), state.w.len())));
    }
    let stats = NuStats::new(&u, &h, &state.w);
    let mut nu = state.nu;
    let step = scale * rng.sample::<f64, _>(rand_distr::StandardNormal);
    let out = nu_mh(&stats, prior, &mut nu, step, rng);
    Ok((nu, out))
}

/// Data-driven starting point: zero mean dynamics, moderate persistence,
/// intercept matched to the sample variance.
pub fn initial_state(y: &[f64], spec: &ModelSpec, prior: &PriorConfig) -> ParamState {
    let n = y.len().max(1) as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let var = if var > 0.0 && var.is_finite() { var } else { 1.0 };
    let mut s = ParamState::neutral(spec);
    if spec.include_mu {
        s.mu = mean;
    }
    let a = if spec.r > 0 { 0.15 } else { 0.3 };
    let b = if spec.s > 0 { 0.55 } else { 0.6 };
    for v in s.alpha.iter_mut() {
        *v = a / spec.s as f64;
    }
    for v in s.beta.iter_mut() {
        *v = b / spec.r as f64;
    }
    s.omega0 = var * (1.0 - s.persistence()) * 0.8;
    if let Some(m) = prior.bounds.omega0_max {
        s.omega0 = s.omega0.min(0.5 * m);
    }
    if !spec.transition.is_none() {
        s.lambda = 0.1;
        if let Some(m) = prior.bounds.lambda_max {
            s.lambda = s.lambda.min(0.5 * m);
        }
        s.gamma = prior.gamma0;
        if let Some(m) = prior.bounds.gamma_max {
            s.gamma = s.gamma.min(0.5 * m);
        }
    }
    if spec.error_family.is_student_t() {
        s.nu = 10.0;
        if let Some(m) = prior.bounds.nu_max {
            s.nu = s.nu.min(0.5 * (2.0 + m));
        }
    }
    s
}

/// One systematic-scan Gibbs sampler. `sweep` may be called with a
/// different data vector each time, which the joint-distribution tests rely
/// on.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    spec: ModelSpec,
    prior: PriorConfig,
    state: ParamState,
    fixed: BTreeSet<Block>,
    variance_walk: AdaptiveWalk,
    nu_walk: ScalarWalk,
    nu_updates: usize,
    adapting: bool,
    warming_up: bool,
    counts: BTreeMap<&'static str, (u64, u64)>,
}

impl GibbsSampler {
    pub fn new(spec: &ModelSpec, prior: &PriorConfig, cfg: &McmcConfig, initial: ParamState) -> Result<Self> {
        spec.validate()?;
        prior.validate()?;
        cfg.validate()?;
        let mut state = initial;
        if !spec.error_family.is_student_t() {
            state.nu = f64::INFINITY;
            state.w.clear();
        }
        state.check_support(spec)?;
        if prior.flat_logprior(&state, spec) == f64::NEG_INFINITY {
            return Err(Error::OutsideSupport("initial state violates the prior bounds".into()));
        }
        if !cfg.fixed.contains(&Block::Variance)
            && state.alpha.iter().chain(&state.beta).any(|&v| v == 0.0)
        {
            return Err(Error::OutsideSupport(
                "variance-block updates need strictly positive alpha and beta".into(),
            ));
        }
        let target = cfg.target();
        Ok(GibbsSampler {
            spec: spec.clone(),
            prior: *prior,
            state,
            fixed: cfg.fixed.clone(),
            variance_walk: AdaptiveWalk::new(transform::dim(spec), cfg.scale("variance", 0.1), target),
            nu_walk: ScalarWalk::new(cfg.scale("nu", 0.5), target),
            nu_updates: cfg.nu_updates.max(1),
            adapting: true,
            warming_up: false,
            counts: BTreeMap::new(),
        })
    }

    pub fn state(&self) -> &ParamState {
        &self.state
    }

    pub fn set_adapting(&mut self, on: bool) {
        self.adapting = on;
    }

    /// Takes mean-block conditional draws without the Hastings correction
    /// while on. The chain does not target the posterior in this mode.
    pub fn set_warming_up(&mut self, on: bool) {
        self.warming_up = on;
    }

    pub fn reset_counts(&mut self) {
        self.counts.clear();
    }

    /// Acceptance rate of each Metropolis block since the last reset.
    pub fn acceptance(&self) -> BTreeMap<String, f64> {
        self.counts
            .iter()
            .map(|(k, (tries, acc))| (k.to_string(), *acc as f64 / (*tries).max(1) as f64))
            .collect()
    }

    fn record(&mut self, block: Block, out: MhOutcome) {
        let e = self.counts.entry(block.as_str()).or_insert((0, 0));
        e.0 += 1;
        e.1 += u64::from(out.accepted);
    }

    fn active(&self, block: Block) -> bool {
        !self.fixed.contains(&block)
    }

    /// One full scan. Returns the log-likelihood of the new state with the
    /// mixing weights integrated out.
    pub fn sweep<R: Rng + ?Sized>(&mut self, y: &[f64], rng: &mut R) -> Result<f64> {
        let spec = self.spec.clone();
        let prior = self.prior.resolve(y);
        let student = spec.error_family.is_student_t();
        let mut cur = Point::evaluate(y, &spec, &prior, self.state.clone());
        if student && cur.valid() && cur.state.w.len() != cur.u.len() {
            cur.state.w = vec![1.0; cur.u.len()];
            cur.lp = block_log_target(&spec, &prior, &cur.state, &cur.u, &cur.h);
        }

        for (block, mean_block) in [
            (Block::Phi, MeanBlock::Phi),
            (Block::Theta, MeanBlock::Theta),
            (Block::Psi, MeanBlock::Psi),
        ] {
            if mean_block.dim(&spec) > 0 && self.active(block) {
                let out = mean_block_mh(mean_block, y, &spec, &prior, &mut cur, self.warming_up, rng)?;
                self.record(block, out);
            }
        }

        // With the weights free, the variance and nu steps integrate them out
        // and the weights are redrawn right after nu.
        let collapse = student && self.active(Block::Weights);
        if collapse && cur.valid() {
            cur.state.w.clear();
            cur.lp = block_log_target(&spec, &prior, &cur.state, &cur.u, &cur.h);
        }

        if self.active(Block::Variance) && cur.valid() {
            let x = transform::to_unconstrained(&spec, &cur.state);
            let x_new = self.variance_walk.propose(&x, rng);
            let out = variance_mh(&x_new, y, &spec, &prior, &mut cur, rng);
            if self.adapting {
                let x_now = transform::to_unconstrained(&spec, &cur.state);
                self.variance_walk.adapt(out.accept_prob, &x_now);
            }
            self.record(Block::Variance, out);
        }

        if !cur.valid() {
            return Err(Error::NonFinite { index: 0 });
        }

        if student {
            if self.active(Block::Nu) {
                let stats = if collapse {
                    NuStats::marginal(&cur.u, &cur.h)
                } else {
                    NuStats::new(&cur.u, &cur.h, &cur.state.w)
                };
                for _ in 0..self.nu_updates {
                    let step = self.nu_walk.propose(0.0, rng);
                    let out = nu_mh(&stats, &prior, &mut cur.state.nu, step, rng);
                    if self.adapting {
                        self.nu_walk.adapt(out.accept_prob);
                    }
                    self.record(Block::Nu, out);
                }
            }
            if collapse {
                cur.state.w = sample_weights(&cur.u, &cur.h, cur.state.nu, rng)?;
            }
        }

        let ll = if student {
            student_t_loglik_sum(&cur.u, &cur.h, cur.state.nu)
        } else {
            gaussian_loglik_sum(&cur.u, &cur.h)
        };
        self.state = cur.state;
        Ok(if ll.is_nan() { f64::NEG_INFINITY } else { ll })
    }
}

/// Runs one chain with `cfg.seed`.
pub fn run_chain(y: &[f64], spec: &ModelSpec, prior: &PriorConfig, cfg: &McmcConfig) -> Result<Chain> {
    run_chain_seeded(y, spec, prior, cfg, cfg.seed)
}

fn run_chain_seeded(
    y: &[f64],
    spec: &ModelSpec,
    prior: &PriorConfig,
    cfg: &McmcConfig,
    seed: u64,
) -> Result<Chain> {
    let needed = spec.p + 11;
    if y.len() < needed {
        return Err(Error::NotEnoughData { needed, got: y.len() });
    }
    let prior = &prior.resolve(y);
    let initial = cfg.initial.clone().unwrap_or_else(|| initial_state(y, spec, prior));
    let mut sampler = GibbsSampler::new(spec, prior, cfg, initial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kept = (cfg.iterations - cfg.burn_in).div_ceil(cfg.thin);
    let mut draws = Vec::with_capacity(kept);
    let mut logliks = Vec::with_capacity(kept);
    let warmup = cfg.warmup.min(cfg.burn_in);
    sampler.set_warming_up(warmup > 0);
    for it in 0..cfg.iterations {
        if it == warmup {
            sampler.set_warming_up(false);
        }
        if it == cfg.burn_in {
            sampler.set_adapting(false);
            sampler.reset_counts();
        }
        let ll = sampler.sweep(y, &mut rng)?;
        if it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 {
            let mut d = sampler.state().clone();
            if !cfg.keep_latent {
                d.w = Vec::new();
            }
            draws.push(d);
            logliks.push(ll);
        }
    }
    Ok(Chain {
        spec: spec.clone(),
        draws,
        logliks,
        acceptance: sampler.acceptance(),
        seed,
    })
}

/// Runs `cfg.chains` chains in parallel.
pub fn run_chains(y: &[f64], spec: &ModelSpec, prior: &PriorConfig, cfg: &McmcConfig) -> Result<Vec<Chain>> {
    (0..cfg.chains)
        .into_par_iter()
        .map(|k| run_chain_seeded(y, spec, prior, cfg, cfg.chain_seed(k)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ErrorFamily, PresampleVariance, Transition};
    use crate::priors::log_posterior;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn metropolis_identity_and_rejection() {
        let mut r = rng(1);
        assert!((0..1000).all(|_| metropolis_accept(0.0, &mut r)));
        assert!((0..1000).all(|_| !metropolis_accept(f64::NEG_INFINITY, &mut r)));
        assert!((0..1000).all(|_| !metropolis_accept(f64::NAN, &mut r)));
    }

    fn toy() -> (Vec<f64>, ModelSpec, ParamState) {
        let spec = ModelSpec::garch(1, 1)
            .with_transition(Transition::Exponential)
            .with_family(ErrorFamily::StudentT);
        let y: Vec<f64> = (0..60).map(|i| ((i * 29 % 23) as f64 - 11.0) / 6.0).collect();
        let mut s = initial_state(&y, &spec, &PriorConfig::default());
        s.w = vec![1.0; 60];
        (y, spec, s)
    }

    #[test]
    fn zero_step_variance_move_is_accepted() {
        let (y, spec, s) = toy();
        let mut r = rng(2);
        for _ in 0..50 {
            let (next, out) = draw_variance_block(&y, &spec, &s, &PriorConfig::default(), 0.0, &mut r);
            assert!(out.accepted);
            assert!((next.omega0 - s.omega0).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_support_variance_move_is_rejected() {
        let (y, spec, s) = toy();
        let mut prior = PriorConfig::default();
        prior.bounds.omega0_max = Some(s.omega0 * 1.0000001);
        let mut cur = Point::evaluate(&y, &spec, &prior, s.clone());
        let mut x = transform::to_unconstrained(&spec, &s);
        x[0] += 1.0;
        let out = variance_mh(&x, &y, &spec, &prior, &mut cur, &mut rng(3));
        assert!(!out.accepted);
        assert_eq!(cur.state, s);
    }

    #[test]
    fn nu_zero_step_is_accepted() {
        let (y, spec, s) = toy();
        let mut r = rng(4);
        let (nu, out) = draw_nu(&y, &spec, &s, &PriorConfig::default(), 0.0, &mut r).unwrap();
        assert!(out.accepted);
        assert!((nu - s.nu).abs() < 1e-12);
    }

    #[test]
    fn nu_target_matches_log_posterior_differences() {
        let (y, spec, mut s) = toy();
        s.w = (0..60).map(|i| 0.5 + (i % 5) as f64 * 0.3).collect();
        let prior = PriorConfig::default();
        let (u, h) = recursion_trimmed(&y, &spec, &s).unwrap();
        let stats = NuStats::new(&u, &h, &s.w);
        let at = |nu: f64| {
            let mut t = s.clone();
            t.nu = nu;
            log_posterior(&y, &spec, &t, &prior)
        };
        let d_full = at(7.5) - at(4.0);
        let d_fast = stats.log_target(7.5, &prior) - stats.log_target(4.0, &prior);
        assert!((d_full - d_fast).abs() < 1e-9, "{d_full} vs {d_fast}");
    }

    #[test]
    fn weight_conditional_is_a_slice_of_the_posterior() {
        let (y, spec, mut s) = toy();
        s.nu = 5.0;
        let prior = PriorConfig::default();
        let (u, h) = recursion_trimmed(&y, &spec, &s).unwrap();
        let t = 7;
        let c = 0.6;
        let a = 3.0;
        let b = 0.5 * (5.0 + u[t] * u[t] / (c * h[t]));
        let ig = |w: f64| -(a + 1.0) * w.ln() - b / w;
        let slice = |w: f64| {
            let mut st = s.clone();
            st.w[t] = w;
            log_posterior(&y, &spec, &st, &prior)
        };
        let base = slice(1.0) - ig(1.0);
        for k in 1..40 {
            let w = 0.05 * k as f64 * k as f64;
            let diff = slice(w) - ig(w) - base;
            assert!(diff.abs() < 1e-8, "w={w}: {diff}");
        }
    }

    #[test]
    fn weights_have_inverse_gamma_mean() {
        // zero residuals: IG((nu+1)/2, nu/2) with mean nu/(nu-1)
        let nu = 6.0;
        let n = 100_000;
        let mut r = rng(5);
        let w = sample_weights(&vec![0.0; n], &vec![1.0; n], nu, &mut r).unwrap();
        let mean = w.iter().sum::<f64>() / n as f64;
        let a: f64 = 3.5;
        let b: f64 = 3.0;
        let sd = (b * b / ((a - 1.0).powi(2) * (a - 2.0))).sqrt();
        assert!((mean - nu / (nu - 1.0)).abs() < 4.0 * sd / (n as f64).sqrt());
        assert!(sample_weights(&[0.0], &[1.0], 2.0, &mut r).is_err());
    }

    #[test]
    fn outlier_weights_grow_with_residual() {
        let nu = 5.0;
        let c = 0.6;
        // conditional mean b / (a - 1) is linear in u^2
        let mean = |u: f64| 0.5 * (nu + u * u / c) / (0.5 * (nu + 1.0) - 1.0);
        let mut r = rng(6);
        for &u in &[0.0, 5.0, 20.0] {
            let n = 20_000;
            let w = sample_weights(&vec![u; n], &vec![1.0; n], nu, &mut r).unwrap();
            let m = w.iter().sum::<f64>() / n as f64;
            assert!((m / mean(u) - 1.0).abs() < 0.05, "u={u}: {m} vs {}", mean(u));
        }
    }

    #[test]
    fn chain_is_reproducible_and_stays_in_support() {
        let spec = ModelSpec::study(ErrorFamily::StudentT);
        let y: Vec<f64> = (0..120).map(|i| ((i * 37 % 53) as f64 - 26.0) / 13.0).collect();
        let cfg = McmcConfig { iterations: 300, burn_in: 100, thin: 1, ..Default::default() };
        let a = run_chain(&y, &spec, &PriorConfig::default(), &cfg).unwrap();
        let b = run_chain(&y, &spec, &PriorConfig::default(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 200);
        assert_eq!(a.logliks.len(), a.len());
        for d in &a.draws {
            d.check_support(&spec).unwrap();
        }
        for rate in a.acceptance.values() {
            assert!((0.0..=1.0).contains(rate));
        }
    }

    #[test]
    fn fixed_blocks_do_not_move() {
        let spec = ModelSpec::garch(1, 1).with_arma(1, 0).with_presample(PresampleVariance::Fixed(1.0));
        let y: Vec<f64> = (0..50).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let mut cfg = McmcConfig { iterations: 50, burn_in: 10, thin: 1, ..Default::default() };
        cfg.fixed.insert(Block::Variance);
        let chain = run_chain(&y, &spec, &PriorConfig::default(), &cfg).unwrap();
        let first = chain.draws[0].omega0;
        assert!(chain.draws.iter().all(|d| d.omega0 == first));
        assert!(chain.column("phi_1").windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn config_validation() {
        let mut cfg = McmcConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.burn_in = cfg.iterations;
        assert!(cfg.validate().is_err());
        let mut cfg = McmcConfig::default();
        cfg.proposal_scales.insert("nu".into(), 0.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn too_short_series() {
        let spec = ModelSpec::garch(1, 1);
        let r = run_chain(&[0.1; 8], &spec, &PriorConfig::default(), &McmcConfig::default());
        assert!(matches!(r, Err(Error::NotEnoughData { .. })));
    }
}
