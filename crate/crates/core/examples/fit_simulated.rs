//! Simulate a Student-t series from the study model, then sample the
//! posterior and print a summary.
//!
//! cargo run --release --example fit_simulated

use stgarch::model::{ErrorFamily, ModelSpec, ParamState};
use stgarch::priors::PriorConfig;
use stgarch::sampler::{run_chains, Chain, McmcConfig};
use stgarch::simulate::simulate_dataset;

fn main() -> stgarch::Result<()> {
    let spec = ModelSpec::study(ErrorFamily::StudentT);
    let truth = ParamState::study_truth(&spec, Some(5.0));
    let y = simulate_dataset(&spec, &truth, 500, 11)?;

    let mcmc = McmcConfig { iterations: 4000, burn_in: 1500, chains: 2, ..McmcConfig::default() };
    let chains = run_chains(&y, &spec, &PriorConfig::study(), &mcmc)?;
    let chain = Chain::pooled(&chains).expect("at least one chain");

    println!("{} draws from {} chains", chain.len(), chains.len());
    println!("{:<10} {:>9} {:>9} {:>9} {:>9}", "param", "truth", "mean", "2.5%", "97.5%");
    for name in ParamState::scalar_names(&spec) {
        println!(
            "{:<10} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
            name,
            truth.get(&name).unwrap_or(f64::NAN),
            chain.mean(&name),
            chain.quantile(&name, 0.025),
            chain.quantile(&name, 0.975),
        );
    }
    for (block, rate) in &chain.acceptance {
        println!("acceptance {block:<9} {rate:.2}");
    }
    Ok(())
}
