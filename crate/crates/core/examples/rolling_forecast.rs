//! Rolling one-step variance forecasts with both error families, and the
//! windowed ratio of their squared errors.
//!
//! cargo run --release --example rolling_forecast

use stgarch::forecast::{correlation, mse_ratio, rolling_forecast, window_mean_proxy, Refit};
use stgarch::model::{ErrorFamily, ModelSpec, ParamState};
use stgarch::priors::PriorConfig;
use stgarch::sampler::McmcConfig;
use stgarch::simulate::simulate_dataset;

fn main() -> stgarch::Result<()> {
    let spec = ModelSpec::study(ErrorFamily::StudentT);
    let y = simulate_dataset(&spec, &ParamState::study_truth(&spec, Some(4.0)), 330, 8)?;
    let split = 300;
    let mcmc = McmcConfig { iterations: 1500, burn_in: 500, ..McmcConfig::default() };
    let prior = PriorConfig::study();

    let g = rolling_forecast(&y, split, &spec.clone().with_family(ErrorFamily::Gaussian), &prior, &mcmc, Refit::Full, "gaussian")?;
    let t = rolling_forecast(&y, split, &spec, &prior, &mcmc, Refit::Full, "student-t")?;
    println!("failures: gaussian {}, student-t {}", g.failures.len(), t.failures.len());
    for (a, b) in g.records.iter().zip(&t.records).take(5) {
        println!("t={} y^2={:8.3}  h gaussian={:8.3}  h student-t={:8.3}", a.t, a.realized_proxy, a.h_hat, b.h_hat);
    }

    let window = 5;
    let ratio = mse_ratio(&g.records, &t.records, window)?;
    let proxy = window_mean_proxy(&g.records, window);
    let above = ratio.iter().filter(|r| **r > 1.0).count();
    println!("{above} of {} windows favour the Student-t model", ratio.len());
    if let Some(c) = correlation(&ratio, &proxy) {
        println!("correlation with the window mean of y^2: {c:.3}");
    }
    Ok(())
}
