use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::ModelSpec;
use crate::sampler::{Chain, ParamSummary};
use crate::selection::{newton_raftery, shifted_gamma, Estimator, MarginalLikelihood};

/// Bumped whenever a field of [`FitSummary`] changes meaning or goes away.
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogMarginal {
    pub newton_raftery: MarginalLikelihood,
    pub shifted_gamma: MarginalLikelihood,
}

impl LogMarginal {
    pub fn get(&self, estimator: Estimator) -> &MarginalLikelihood {
        match estimator {
            Estimator::NewtonRaftery => &self.newton_raftery,
            Estimator::ShiftedGamma => &self.shifted_gamma,
        }
    }
}

/// Posterior summary of one fitted model, as written by `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub schema_version: u32,
    pub spec: ModelSpec,
    pub seed: u64,
    pub draws: usize,
    pub params: Vec<ParamSummary>,
    pub acceptance: BTreeMap<String, f64>,
    pub log_marginal: LogMarginal,
    /// Run configuration that produced the chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<serde_json::Value>,
}

impl FitSummary {
    /// `damping` is the Newton-Raftery `d`.
    pub fn from_chain(chain: &Chain, damping: f64) -> Result<Self> {
        Ok(FitSummary {
            schema_version: SUMMARY_SCHEMA_VERSION,
            spec: chain.spec.clone(),
            seed: chain.seed,
            draws: chain.len(),
            params: chain.summary(),
            acceptance: chain.acceptance.clone(),
            log_marginal: LogMarginal {
                newton_raftery: newton_raftery(&chain.logliks, damping)?,
                shifted_gamma: shifted_gamma(&chain.logliks, chain.spec.n_params())?,
            },
            manifest: None,
        })
    }

    pub fn param(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }
}
