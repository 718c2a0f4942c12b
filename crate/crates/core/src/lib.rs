//! Bayesian estimation of smooth-transition ARMA-GARCH-in-mean models with
//! Gaussian or Student-t errors.

pub mod cli;
pub mod error;
pub mod forecast;
pub mod io;
pub mod model;
pub mod priors;
pub mod sampler;
pub mod selection;
pub mod simulate;
pub mod special;
pub mod surface;

pub use error::{Error, Result};
