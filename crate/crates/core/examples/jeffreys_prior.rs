//! The Jeffreys prior on the Student-t degrees of freedom: its shape, its
//! nu^-2 tail, and its normalizing constant by quadrature.
//!
//! cargo run --release --example jeffreys_prior

use stgarch::priors::log_jeffreys_nu;

fn main() -> stgarch::Result<()> {
    for nu in [2.1, 2.5, 3.0, 4.0, 6.0, 10.0, 30.0, 100.0, 1000.0] {
        let lp = log_jeffreys_nu(nu)?;
        println!("nu {nu:>7.1}  prior {:>12.6e}  nu^2 * prior {:>8.5}", lp.exp(), nu * nu * lp.exp());
    }

    // Mass on (2, inf) via nu = 2 + x / (1 - x), midpoint rule on (0, 1).
    let m = 200_000;
    let mut mass = 0.0;
    for k in 0..m {
        let x = (k as f64 + 0.5) / m as f64;
        let nu = 2.0 + x / (1.0 - x);
        mass += log_jeffreys_nu(nu)?.exp() / ((1.0 - x) * (1.0 - x));
    }
    println!("total mass {:.6}", mass / m as f64);
    Ok(())
}
