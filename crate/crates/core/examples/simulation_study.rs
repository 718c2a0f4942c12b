//! A small Monte Carlo study: Gaussian and Student-t fits to data from
//! three generating processes, with parameter MSEs and selection rates.
//!
//! cargo run --release --example simulation_study [reps]

use stgarch::model::ErrorFamily;
use stgarch::priors::PriorConfig;
use stgarch::sampler::McmcConfig;
use stgarch::simulate::{run_study, StudyConfig};

fn main() -> stgarch::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let cfg = StudyConfig { n_reps: reps, sample_sizes: vec![300], ..StudyConfig::default() };
    let mcmc = McmcConfig { iterations: 3000, burn_in: 1000, ..McmcConfig::default() };
    let report = run_study(&cfg, &mcmc, &PriorConfig::study())?;
    for c in &report.cells {
        println!("{} n={}: {} done, correct selection {:.2}", c.dgp.label(), c.n, c.completed, c.decision_rate);
        for family in [ErrorFamily::Gaussian, ErrorFamily::StudentT] {
            let mse = |p| report.mse(c.dgp, c.n, family, p).unwrap_or(f64::NAN);
            println!(
                "   {:<10} MSE alpha {:.4}  lambda {:.4}  gamma {:.3}",
                family.as_str(),
                mse("alpha_1"),
                mse("lambda"),
                mse("gamma")
            );
        }
    }
    Ok(())
}
