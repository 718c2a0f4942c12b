//! Student-t log-likelihood over a (gamma, nu) grid for a Gaussian and a
//! heavy-tailed series. With Gaussian data the nu profile typically keeps
//! rising towards the top of the grid.
//!
//! cargo run --release --example likelihood_surface

use stgarch::model::{ErrorFamily, ModelSpec, ParamState};
use stgarch::simulate::simulate_dataset;
use stgarch::surface::{likelihood_surface, log_grid};

fn main() -> stgarch::Result<()> {
    let t = ModelSpec::study(ErrorFamily::StudentT);
    let gammas = log_grid(0.1, 100.0, 25);
    let nus = log_grid(2.1, 200.0, 30);
    for (label, dgp, nu) in [("gaussian", ErrorFamily::Gaussian, None), ("t3", ErrorFamily::StudentT, Some(3.0))] {
        let gen = t.clone().with_family(dgp);
        let y = simulate_dataset(&gen, &ParamState::study_truth(&gen, nu), 150, 21)?;
        let base = ParamState::study_truth(&t, Some(10.0));
        let s = likelihood_surface(&y, &t, &base, &gammas, &nus)?;
        let (i, j) = s.argmax().expect("finite cell");
        println!(
            "{label:<9} shape {:?}, nu profile peak {:?}, max at gamma={:.2} nu={:.2}",
            s.shape,
            s.profile_peak(),
            s.gamma[i],
            s.nu[j]
        );
        let profile: Vec<String> = s.nu_profile().iter().step_by(5).map(|v| format!("{:.1}", v.unwrap_or(f64::NAN))).collect();
        println!("          profile every 5th nu: {}", profile.join(" "));
    }
    Ok(())
}
