//! One-step-ahead variance prediction, rolling re-estimation and the
//! windowed squared-error ratio between two models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{presample_variance, recursion, variance_step, ModelSpec, ParamState};
use crate::priors::PriorConfig;
use crate::sampler::{run_chain, Chain, McmcConfig};

/// Largest share of draws that may be skipped as non-finite.
const MAX_SKIPPED: f64 = 0.05;

/// Conditional variance of the observation after the end of `y`.
pub fn one_step_variance(y: &[f64], spec: &ModelSpec, state: &ParamState) -> Result<f64> {
    let (u, h) = recursion(y, spec, state)?;
    let h0 = presample_variance(y, spec, state);
    let next = variance_step(spec, state, &u, &h, y.len(), h0);
    if next.is_finite() && next > 0.0 {
        Ok(next)
    } else {
        Err(Error::NonFinite { index: y.len() })
    }
}

/// Posterior mean of the one-step-ahead conditional variance.
///
/// Under Student-t errors `h` is already the innovation variance, so no
/// rescaling is applied. Draws whose filter fails are skipped; more than 5%
/// skipped is an error.
pub fn predict_variance(chain: &Chain, y: &[f64], spec: &ModelSpec) -> Result<f64> {
    if chain.is_empty() {
        return Err(Error::Domain("empty chain".into()));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for d in &chain.draws {
        if let Ok(h) = one_step_variance(y, spec, d) {
            sum += h;
            used += 1;
        }
    }
    let total = chain.len();
    let skipped = total - used;
    if used == 0 || skipped as f64 > MAX_SKIPPED * total as f64 {
        return Err(Error::TooManySkipped { skipped, total });
    }
    Ok(sum / used as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    /// Index of the predicted observation.
    pub t: usize,
    pub model_tag: String,
    pub h_hat: f64,
    /// Squared realized return.
    pub realized_proxy: f64,
}

/// How the model is re-estimated as the window grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Refit {
    /// A fresh chain with the full configuration at every step.
    Full,
    /// The first step uses the full configuration; later steps start from
    /// the previous chain's last draw with a shorter run.
    WarmStart { iterations: usize, burn_in: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFailure {
    pub t: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingForecast {
    pub records: Vec<ForecastRecord>,
    pub failures: Vec<StepFailure>,
}

/// For each `t` in `split..y.len()`: fit on `y[..t]`, predict the variance
/// of `y[t]` and record it against `y[t]^2`. Step `k` uses seed
/// `mcmc.seed + k`. Failed steps are recorded, not fatal.
pub fn rolling_forecast(
    y: &[f64],
    split: usize,
    spec: &ModelSpec,
    prior: &PriorConfig,
    mcmc: &McmcConfig,
    refit: Refit,
    model_tag: &str,
) -> Result<RollingForecast> {
    if split <= spec.p + 30 {
        return Err(Error::NotEnoughData { needed: spec.p + 31, got: split });
    }
    if split >= y.len() {
        return Err(Error::Domain(format!("split {split} leaves nothing to forecast in {} points", y.len())));
    }
    let mut out = RollingForecast { records: Vec::new(), failures: Vec::new() };
    let mut warm: Option<ParamState> = None;
    for (k, t) in (split..y.len()).enumerate() {
        let mut cfg = mcmc.clone();
        cfg.seed = mcmc.seed.wrapping_add(k as u64);
        if let (Refit::WarmStart { iterations, burn_in }, Some(start)) = (refit, &warm) {
            cfg.iterations = iterations;
            cfg.burn_in = burn_in;
            cfg.initial = Some(start.clone());
        }
        let window = &y[..t];
        let step = run_chain(window, spec, prior, &cfg).and_then(|chain| {
            let h_hat = predict_variance(&chain, window, spec)?;
            Ok((chain, h_hat))
        });
        match step {
            Ok((chain, h_hat)) => {
                if matches!(refit, Refit::WarmStart { .. }) {
                    warm = chain.draws.last().map(|d| {
                        let mut s = d.clone();
                        s.w.clear();
                        s
                    });
                }
                out.records.push(ForecastRecord {
                    t,
                    model_tag: model_tag.to_string(),
                    h_hat,
                    realized_proxy: y[t] * y[t],
                });
            }
            Err(e) => out.failures.push(StepFailure { t, error: e.to_string() }),
        }
    }
    Ok(out)
}

/// Sliding-window ratio of the Gaussian model's squared prediction errors
/// to the Student-t model's. Values above 1 favour the Student-t model; a
/// zero Student-t error gives `+inf`.
pub fn mse_ratio(gaussian: &[ForecastRecord], student: &[ForecastRecord], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::Domain("window must be positive".into()));
    }
    if gaussian.len() != student.len() {
        return Err(Error::Domain(format!(
            "record sequences differ in length: {} vs {}",
            gaussian.len(),
            student.len()
        )));
    }
    if gaussian.len() < window {
        return Err(Error::NotEnoughData { needed: window, got: gaussian.len() });
    }
    if let Some((g, s)) = gaussian.iter().zip(student).find(|(g, s)| g.t != s.t) {
        return Err(Error::Domain(format!("records are not aligned: t={} vs t={}", g.t, s.t)));
    }
    let sq = |r: &ForecastRecord| (r.h_hat - r.realized_proxy).powi(2);
    let eg: Vec<f64> = gaussian.iter().map(sq).collect();
    let es: Vec<f64> = student.iter().map(sq).collect();
    Ok(eg
        .windows(window)
        .zip(es.windows(window))
        .map(|(g, s)| {
            let den: f64 = s.iter().sum();
            if den == 0.0 {
                f64::INFINITY
            } else {
                g.iter().sum::<f64>() / den
            }
        })
        .collect())
}

/// Mean of the realized proxies over each window, aligned with
/// [`mse_ratio`].
pub fn window_mean_proxy(records: &[ForecastRecord], window: usize) -> Vec<f64> {
    if window == 0 {
        return Vec::new();
    }
    records
        .windows(window)
        .map(|w| w.iter().map(|r| r.realized_proxy).sum::<f64>() / window as f64)
        .collect()
}

/// Pearson correlation over the pairs where both values are finite.
pub fn correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    let n = pairs.len() as f64;
    if pairs.len() < 2 {
        return None;
    }
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        None
    } else {
        Some(sab / (saa * sbb).sqrt())
    }
}
