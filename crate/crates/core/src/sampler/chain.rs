use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{ModelSpec, ParamState};

/// Posterior draws kept after burn-in and thinning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub spec: ModelSpec,
    pub draws: Vec<ParamState>,
    /// Log-likelihood of each draw with the mixing weights integrated out.
    pub logliks: Vec<f64>,
    /// Post burn-in acceptance rate of each Metropolis block.
    pub acceptance: BTreeMap<String, f64>,
    pub seed: u64,
}

/// Mean, median and central 95% interval of one scalar parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub median: f64,
    pub lower_95: f64,
    pub upper_95: f64,
}

/// Linear-interpolation quantile of already sorted values.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

impl Chain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Draws of a named scalar parameter (see [`ParamState::scalar_names`]).
    pub fn column(&self, name: &str) -> Vec<f64> {
        self.draws.iter().filter_map(|d| d.get(name)).collect()
    }

    pub fn mean(&self, name: &str) -> f64 {
        let c = self.column(name);
        c.iter().sum::<f64>() / c.len() as f64
    }

    pub fn quantile(&self, name: &str, q: f64) -> f64 {
        let mut c = self.column(name);
        c.sort_by(f64::total_cmp);
        quantile_sorted(&c, q)
    }

    pub fn median(&self, name: &str) -> f64 {
        self.quantile(name, 0.5)
    }

    /// Summaries of the free parameters of the spec.
    pub fn summary(&self) -> Vec<ParamSummary> {
        self.spec
            .free_param_names()
            .into_iter()
            .map(|name| {
                let mut c = self.column(&name);
                c.sort_by(f64::total_cmp);
                ParamSummary {
                    mean: c.iter().sum::<f64>() / c.len() as f64,
                    median: quantile_sorted(&c, 0.5),
                    lower_95: quantile_sorted(&c, 0.025),
                    upper_95: quantile_sorted(&c, 0.975),
                    name,
                }
            })
            .collect()
    }

    /// State whose scalars are the posterior means (`w` left empty).
    pub fn posterior_mean_state(&self) -> ParamState {
        let k = ParamState::scalar_names(&self.spec).len();
        let mut acc = vec![0.0; k];
        for d in &self.draws {
            for (a, v) in acc.iter_mut().zip(d.to_scalars()) {
                *a += v;
            }
        }
        let n = self.draws.len() as f64;
        let means: Vec<f64> = acc.iter().map(|a| a / n).collect();
        ParamState::from_scalars(&self.spec, &means).expect("scalar layout comes from the same spec")
    }

    /// Concatenates chains of the same spec; acceptance rates are averaged
    /// and the seed of the first chain is kept.
    pub fn pooled(chains: &[Chain]) -> Option<Chain> {
        let first = chains.first()?;
        let mut out = Chain {
            spec: first.spec.clone(),
            draws: Vec::new(),
            logliks: Vec::new(),
            acceptance: BTreeMap::new(),
            seed: first.seed,
        };
        for c in chains {
            out.draws.extend(c.draws.iter().cloned());
            out.logliks.extend(&c.logliks);
            for (k, v) in &c.acceptance {
                *out.acceptance.entry(k.clone()).or_insert(0.0) += v / chains.len() as f64;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ErrorFamily;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
    }

    #[test]
    fn summaries_and_pooling() {
        let spec = ModelSpec::garch(1, 1).with_family(ErrorFamily::StudentT);
        let mut draws = Vec::new();
        for k in 0..5 {
            let mut s = ParamState::neutral(&spec);
            s.omega0 = 1.0 + k as f64;
            draws.push(s);
        }
        let chain = Chain {
            spec: spec.clone(),
            draws,
            logliks: vec![0.0; 5],
            acceptance: BTreeMap::from([("variance".to_string(), 0.3)]),
            seed: 1,
        };
        assert_eq!(chain.mean("omega0"), 3.0);
        assert_eq!(chain.median("omega0"), 3.0);
        assert_eq!(chain.posterior_mean_state().omega0, 3.0);
        let names: Vec<_> = chain.summary().into_iter().map(|s| s.name).collect();
        assert_eq!(names, spec.free_param_names());
        let pooled = Chain::pooled(&[chain.clone(), chain]).unwrap();
        assert_eq!(pooled.len(), 10);
        assert!((pooled.acceptance["variance"] - 0.3).abs() < 1e-15);
    }
}
