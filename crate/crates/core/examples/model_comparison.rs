//! Fit Gaussian and Student-t versions of the same model to heavy-tailed
//! data and decide between them with the Bayes test.
//!
//! cargo run --release --example model_comparison

use stgarch::model::{ErrorFamily, ModelSpec, ParamState};
use stgarch::priors::PriorConfig;
use stgarch::sampler::{run_chains, Chain, McmcConfig};
use stgarch::selection::{bayes_test, newton_raftery, shifted_gamma};
use stgarch::simulate::simulate_dataset;

fn main() -> stgarch::Result<()> {
    let student = ModelSpec::study(ErrorFamily::StudentT);
    let y = simulate_dataset(&student, &ParamState::study_truth(&student, Some(3.0)), 500, 5)?;
    let prior = PriorConfig::study();
    let mcmc = McmcConfig { iterations: 4000, burn_in: 1500, ..McmcConfig::default() };

    let mut fits = Vec::new();
    for family in [ErrorFamily::StudentT, ErrorFamily::Gaussian] {
        let spec = student.clone().with_family(family);
        let chain = Chain::pooled(&run_chains(&y, &spec, &prior, &mcmc)?).expect("one chain");
        let nr = newton_raftery(&chain.logliks, 0.01)?;
        let sg = shifted_gamma(&chain.logliks, spec.n_params())?;
        println!("{:<10} NR {:>10.3}   shifted gamma {:>10.3}", family.as_str(), nr.log_value, sg.log_value);
        fits.push(nr);
    }

    // Equal losses and prior odds: choose the Student-t model when B12 > 1.
    let d = bayes_test(&fits[0], &fits[1], 1.0, 1.0, 0.5, 0.5)?;
    println!("log B12 = {:.3} ({}), verdict {:?}", d.log_b12, d.evidence.label(), d.verdict);
    Ok(())
}
