//! Data generation from the model and the Monte Carlo study comparing
//! Gaussian and Student-t fits.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::predict_variance;
use crate::model::{variance_step, ErrorFamily, ModelSpec, ParamState, PresampleVariance};
use crate::priors::PriorConfig;
use crate::sampler::{run_chain, McmcConfig};
use crate::selection::{decide, newton_raftery, shifted_gamma, Estimator, Verdict};

/// Default number of discarded leading steps.
pub const DEFAULT_BURN_IN: usize = 200;
const MAX_ATTEMPTS: usize = 10;
/// Paths whose variance exceeds this are treated as explosive.
const VARIANCE_CEILING: f64 = 1e100;

/// A generated series with its innovations, variances and mixing weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub h: Vec<f64>,
    /// Empty under Gaussian errors.
    pub w: Vec<f64>,
}

/// Variance before the first step: the configured fixed value, otherwise
/// the unconditional variance `omega0 / (1 - sum(alpha) - sum(beta))`.
fn initial_variance(spec: &ModelSpec, state: &ParamState) -> f64 {
    match spec.presample {
        PresampleVariance::Fixed(v) => v,
        _ => state.omega0 / (1.0 - state.persistence()),
    }
}

/// Core generator. The first `spec.p` points are a zero pre-sample with
/// `u = 0` and `h = h0`, exactly as the filter treats them, so that with
/// `burn_in = 0` filtering the output at `state` reproduces `u` and `h`.
fn generate<R: Rng + ?Sized>(
    spec: &ModelSpec,
    state: &ParamState,
    n: usize,
    burn_in: usize,
    weights: Option<&[f64]>,
    rng: &mut R,
) -> Result<SimulatedPath> {
    let p = spec.p;
    let total = burn_in + n;
    let student = spec.error_family.is_student_t();
    let h0 = initial_variance(spec, state);
    let c = if student { (state.nu - 2.0) / state.nu } else { 1.0 };
    let mixing = if student && weights.is_none() {
        Some(Gamma::new(0.5 * state.nu, 2.0 / state.nu).map_err(|e| Error::Domain(e.to_string()))?)
    } else {
        None
    };
    let mut y = vec![0.0; total];
    let mut u = vec![0.0; total];
    let mut h = vec![h0; total];
    let mut w = if student { vec![1.0; total] } else { Vec::new() };
    for t in p..total {
        let ht = variance_step(spec, state, &u, &h, t, h0);
        if !(ht.is_finite() && ht <= VARIANCE_CEILING) {
            return Err(Error::NonFinite { index: t });
        }
        let eps: f64 = rng.sample(StandardNormal);
        let ut = if student {
            let wt = match (weights, &mixing) {
                (Some(given), _) => given[t - p],
                (None, Some(g)) => 1.0 / g.sample(rng),
                (None, None) => unreachable!("mixing law exists when weights are absent"),
            };
            w[t] = wt;
            eps * (c * ht * wt).sqrt()
        } else {
            eps * ht.sqrt()
        };
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
        h[t] = ht;
        u[t] = ut;
        y[t] = mean + ut;
        if !y[t].is_finite() {
            return Err(Error::NonFinite { index: t });
        }
    }
    let keep = |v: Vec<f64>| v[burn_in..].to_vec();
    Ok(SimulatedPath {
        y: keep(y),
        u: keep(u),
        h: keep(h),
        w: if student { keep(w) } else { Vec::new() },
    })
}

/// Simulates `n` observations after discarding `burn_in` steps.
///
/// With `burn_in = 0` the first `spec.p` observations are zeros (the
/// pre-sample), and the filter at `state` recovers `u` and `h` exactly.
pub fn simulate_path<R: Rng + ?Sized>(
    spec: &ModelSpec,
    state: &ParamState,
    n: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<SimulatedPath> {
    spec.validate()?;
    state.check_support(spec)?;
    generate(spec, state, n, burn_in, None, rng)
}

/// Simulates with given mixing weights, one per modelled observation
/// (`n - spec.p` of them) and no burn-in.
pub fn simulate_given_weights<R: Rng + ?Sized>(
    spec: &ModelSpec,
    state: &ParamState,
    n: usize,
    w: &[f64],
    rng: &mut R,
) -> Result<SimulatedPath> {
    spec.validate()?;
    if !spec.error_family.is_student_t() {
        return Err(Error::InvalidSpec("mixing weights need the Student-t family".into()));
    }
    if w.len() + spec.p != n {
        return Err(Error::Domain(format!("expected {} weights, got {}", n - spec.p, w.len())));
    }
    generate(spec, state, n, 0, Some(w), rng)
}

/// Seeded dataset with the default burn-in. Explosive draws are retried on
/// fresh streams of the same seed, up to 10 attempts.
pub fn simulate_dataset(spec: &ModelSpec, state: &ParamState, n: usize, seed: u64) -> Result<Vec<f64>> {
    simulate_dataset_with_burn_in(spec, state, n, DEFAULT_BURN_IN, seed).map(|p| p.y)
}

pub fn simulate_dataset_with_burn_in(
    spec: &ModelSpec,
    state: &ParamState,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<SimulatedPath> {
    spec.validate()?;
    state.check_support(spec)?;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        match generate(spec, state, n, burn_in, None, &mut rng) {
            Ok(path) => return Ok(path),
            Err(Error::NonFinite { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ExplosivePath { attempts: MAX_ATTEMPTS })
}

/// Data-generating process of a study cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum Dgp {
    Gaussian,
    StudentT { nu: f64 },
}

impl Dgp {
    pub fn family(self) -> ErrorFamily {
        match self {
            Dgp::Gaussian => ErrorFamily::Gaussian,
            Dgp::StudentT { .. } => ErrorFamily::StudentT,
        }
    }

    pub fn nu(self) -> Option<f64> {
        match self {
            Dgp::Gaussian => None,
            Dgp::StudentT { nu } => Some(nu),
        }
    }

    /// Short label such as `gaussian` or `t3`.
    pub fn label(self) -> String {
        match self {
            Dgp::Gaussian => "gaussian".into(),
            Dgp::StudentT { nu } => format!("t{nu}"),
        }
    }

    pub fn parse(s: &str) -> Result<Dgp> {
        let s = s.trim();
        if s == "gaussian" || s == "normal" {
            return Ok(Dgp::Gaussian);
        }
        s.strip_prefix('t')
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|nu| *nu > 2.0)
            .map(|nu| Dgp::StudentT { nu })
            .ok_or_else(|| Error::Config(format!("unknown data-generating process '{s}'")))
    }
}

impl fmt::Display for Dgp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub n_reps: usize,
    pub sample_sizes: Vec<usize>,
    pub dgps: Vec<Dgp>,
    pub seed: u64,
    pub burn_in: usize,
    /// Estimator behind the Bayes-factor decision.
    pub estimator: Estimator,
    /// Damping of the Newton-Raftery estimator.
    pub damping: f64,
    /// The Student-t model is chosen when `B(t, Gaussian)` exceeds this.
    pub threshold: f64,
    /// A cell fails when more than this share of its replications fail.
    pub max_failure_rate: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_reps: 20,
            sample_sizes: vec![150, 500],
            dgps: vec![Dgp::Gaussian, Dgp::StudentT { nu: 3.0 }, Dgp::StudentT { nu: 6.0 }],
            seed: 2024,
            burn_in: DEFAULT_BURN_IN,
            estimator: Estimator::NewtonRaftery,
            damping: 0.01,
            threshold: 3.0,
            max_failure_rate: 0.2,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_reps == 0 {
            return Err(Error::Config("n_reps must be at least 1".into()));
        }
        if let Some(n) = self.sample_sizes.iter().find(|&&n| n <= 20) {
            return Err(Error::Config(format!("sample sizes must exceed 20, got {n}")));
        }
        if self.sample_sizes.is_empty() || self.dgps.is_empty() {
            return Err(Error::Config("need at least one sample size and one process".into()));
        }
        Ok(())
    }
}

/// Parameters whose posterior means are scored.
pub const SCORED_PARAMS: [&str; 4] = ["alpha_1", "beta_1", "lambda", "gamma"];

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of one replication; independent of execution order.
pub fn replication_seed(seed: u64, dgp: Dgp, n: usize, rep: usize) -> u64 {
    let mut s = splitmix(seed);
    for b in dgp.label().bytes() {
        s = splitmix(s ^ u64::from(b));
    }
    s = splitmix(s ^ n as u64);
    splitmix(s ^ rep as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub model: ErrorFamily,
    pub posterior_means: BTreeMap<String, f64>,
    /// Posterior median of `nu` (Student-t model only).
    pub nu_median: Option<f64>,
    pub log_ml_newton_raftery: f64,
    pub log_ml_shifted_gamma: f64,
    pub predicted_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub dgp: Dgp,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub fits: Vec<ModelFit>,
    /// `y_{n+1}^2`, the realized proxy for the predicted variance.
    pub realized_proxy: f64,
    /// `ln B` of the Student-t model against the Gaussian model.
    pub log_bayes_factor: f64,
    pub selected: ErrorFamily,
    pub correct: bool,
}

impl Replication {
    pub fn fit(&self, model: ErrorFamily) -> Option<&ModelFit> {
        self.fits.iter().find(|f| f.model == model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCell {
    pub model: ErrorFamily,
    /// Mean squared error of the posterior mean, per scored parameter.
    pub mse: BTreeMap<String, f64>,
    /// Average over replications of the posterior median of `nu`.
    pub mean_nu_median: Option<f64>,
    pub pred_mse_mean: f64,
    pub pred_mse_median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub rep: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub dgp: Dgp,
    pub n: usize,
    pub completed: usize,
    pub failures: Vec<ReplicationFailure>,
    pub failed: bool,
    /// Share of completed replications whose decision picked the true family.
    pub decision_rate: f64,
    pub models: Vec<ModelCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub cells: Vec<CellReport>,
    pub replications: Vec<Replication>,
}

impl StudyReport {
    pub fn cell(&self, dgp: Dgp, n: usize) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.dgp == dgp && c.n == n)
    }

    pub fn mse(&self, dgp: Dgp, n: usize, model: ErrorFamily, param: &str) -> Option<f64> {
        self.cell(dgp, n)?
            .models
            .iter()
            .find(|m| m.model == model)?
            .mse
            .get(param)
            .copied()
    }

    pub fn decision_rate(&self, dgp: Dgp, n: usize) -> Option<f64> {
        self.cell(dgp, n).map(|c| c.decision_rate)
    }

    /// Errors with the first cell that exceeded the failure budget.
    pub fn check(&self) -> Result<()> {
        match self.cells.iter().find(|c| c.failed) {
            Some(c) => Err(Error::CellFailed {
                cell: format!("{}/n={}", c.dgp, c.n),
                failed: c.failures.len(),
                total: c.failures.len() + c.completed,
            }),
            None => Ok(()),
        }
    }
}

fn fit_model(
    y: &[f64],
    model: ErrorFamily,
    prior: &PriorConfig,
    mcmc: &McmcConfig,
    damping: f64,
) -> Result<ModelFit> {
    let spec = ModelSpec::study(model);
    let chain = run_chain(y, &spec, prior, mcmc)?;
    let posterior_means = SCORED_PARAMS.iter().map(|p| (p.to_string(), chain.mean(p))).collect();
    Ok(ModelFit {
        model,
        posterior_means,
        nu_median: model.is_student_t().then(|| chain.median("nu")),
        log_ml_newton_raftery: newton_raftery(&chain.logliks, damping)?.log_value,
        log_ml_shifted_gamma: shifted_gamma(&chain.logliks, spec.n_params())?.log_value,
        predicted_variance: predict_variance(&chain, y, &spec)?,
    })
}

/// Simulates one dataset of the cell and fits both families to it.
pub fn run_replication(
    cfg: &StudyConfig,
    mcmc: &McmcConfig,
    prior: &PriorConfig,
    dgp: Dgp,
    n: usize,
    rep: usize,
) -> Result<Replication> {
    let seed = replication_seed(cfg.seed, dgp, n, rep);
    let truth_spec = ModelSpec::study(dgp.family());
    let truth = ParamState::study_truth(&truth_spec, dgp.nu());
    let path = simulate_dataset_with_burn_in(&truth_spec, &truth, n + 1, cfg.burn_in, seed)?;
    let (y, next) = path.y.split_at(n);
    let mut chain_cfg = mcmc.clone();
    chain_cfg.seed = splitmix(seed ^ 0xF17);
    chain_cfg.chains = 1;
    let fits = [ErrorFamily::Gaussian, ErrorFamily::StudentT]
        .into_iter()
        .map(|m| fit_model(y, m, prior, &chain_cfg, cfg.damping))
        .collect::<Result<Vec<_>>>()?;
    let log_ml = |f: &ModelFit| match cfg.estimator {
        Estimator::NewtonRaftery => f.log_ml_newton_raftery,
        Estimator::ShiftedGamma => f.log_ml_shifted_gamma,
    };
    let log_bayes_factor = log_ml(&fits[1]) - log_ml(&fits[0]);
    let selected = match decide(log_bayes_factor, cfg.threshold)?.verdict {
        Verdict::AcceptM1 => ErrorFamily::StudentT,
        Verdict::AcceptM2 => ErrorFamily::Gaussian,
    };
    Ok(Replication {
        dgp,
        n,
        rep,
        seed,
        fits,
        realized_proxy: next[0] * next[0],
        log_bayes_factor,
        selected,
        correct: selected == dgp.family(),
    })
}

fn summarize_cell(cfg: &StudyConfig, dgp: Dgp, n: usize, results: Vec<(usize, Result<Replication>)>) -> (CellReport, Vec<Replication>) {
    let mut reps = Vec::new();
    let mut failures = Vec::new();
    for (rep, r) in results {
        match r {
            Ok(x) => reps.push(x),
            Err(e) => failures.push(ReplicationFailure {
                rep,
                error: Error::Replication { rep, source: Box::new(e) }.to_string(),
            }),
        }
    }
    let total = reps.len() + failures.len();
    let failed = failures.len() as f64 > cfg.max_failure_rate * total as f64;
    let truth = ParamState::study_truth(&ModelSpec::study(dgp.family()), dgp.nu());
    let count = reps.len() as f64;
    let models = [ErrorFamily::Gaussian, ErrorFamily::StudentT]
        .into_iter()
        .map(|model| {
            let fits: Vec<(&ModelFit, f64)> =
                reps.iter().filter_map(|r| r.fit(model).map(|f| (f, r.realized_proxy))).collect();
            let mse = SCORED_PARAMS
                .iter()
                .map(|p| {
                    let t = truth.get(p).unwrap_or(f64::NAN);
                    let s: f64 = fits.iter().map(|(f, _)| (f.posterior_means[*p] - t).powi(2)).sum();
                    (p.to_string(), s / count)
                })
                .collect();
            let mut pred: Vec<f64> = fits.iter().map(|(f, r)| (f.predicted_variance - r).powi(2)).collect();
            pred.sort_by(f64::total_cmp);
            let nus: Vec<f64> = fits.iter().filter_map(|(f, _)| f.nu_median).collect();
            ModelCell {
                model,
                mse,
                mean_nu_median: (!nus.is_empty()).then(|| nus.iter().sum::<f64>() / nus.len() as f64),
                pred_mse_mean: pred.iter().sum::<f64>() / count,
                pred_mse_median: crate::sampler::quantile_sorted(&pred, 0.5),
            }
        })
        .collect();
    let decision_rate = reps.iter().filter(|r| r.correct).count() as f64 / count;
    (
        CellReport { dgp, n, completed: reps.len(), failures, failed, decision_rate, models },
        reps,
    )
}

/// Runs every (process, sample size, replication) job in parallel and
/// assembles the report in a fixed order.
pub fn run_study(cfg: &StudyConfig, mcmc: &McmcConfig, prior: &PriorConfig) -> Result<StudyReport> {
    cfg.validate()?;
    mcmc.validate()?;
    prior.validate()?;
    let mut jobs = Vec::new();
    for &dgp in &cfg.dgps {
        for &n in &cfg.sample_sizes {
            for rep in 0..cfg.n_reps {
                jobs.push((dgp, n, rep));
            }
        }
    }
    let results: Vec<Result<Replication>> = jobs
        .par_iter()
        .map(|&(dgp, n, rep)| run_replication(cfg, mcmc, prior, dgp, n, rep))
        .collect();
    let mut by_cell: Vec<((Dgp, usize), Vec<(usize, Result<Replication>)>)> = Vec::new();
    for (&(dgp, n, rep), r) in jobs.iter().zip(results) {
        match by_cell.last_mut() {
            Some((key, v)) if *key == (dgp, n) => v.push((rep, r)),
            _ => by_cell.push(((dgp, n), vec![(rep, r)])),
        }
    }
    let mut report = StudyReport { config: cfg.clone(), cells: Vec::new(), replications: Vec::new() };
    for ((dgp, n), results) in by_cell {
        let (cell, reps) = summarize_cell(cfg, dgp, n, results);
        report.cells.push(cell);
        report.replications.extend(reps);
    }
    Ok(report)
}
