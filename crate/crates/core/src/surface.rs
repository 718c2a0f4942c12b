//! Log-likelihood over a `(gamma, nu)` grid with the other parameters held
//! fixed, for contour plots and for spotting a likelihood without an
//! interior maximum in `nu`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{recursion_trimmed, student_t_loglik_sum, ModelSpec, ParamState};
use crate::priors::{likelihood_wellbehaved_test, LikelihoodShape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub gamma: Vec<f64>,
    pub nu: Vec<f64>,
    /// `loglik[i][j]` at `(gamma[i], nu[j])`; `None` where the filter fails.
    pub loglik: Vec<Vec<Option<f64>>>,
    /// Residual-kurtosis verdict at the base state.
    pub shape: LikelihoodShape,
}

/// Where the maximum of the `nu` profile sits on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfilePeak {
    Lower,
    Interior,
    Upper,
}

fn check_grid(name: &str, g: &[f64]) -> Result<()> {
    if g.is_empty() {
        return Err(Error::Domain(format!("{name} grid is empty")));
    }
    if g.iter().any(|v| !v.is_finite()) || g.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(format!("{name} grid must be finite and strictly increasing")));
    }
    Ok(())
}

/// Evaluates the Student-t marginal log-likelihood of `y` on the grid,
/// every other parameter taken from `base`.
pub fn likelihood_surface(
    y: &[f64],
    spec: &ModelSpec,
    base: &ParamState,
    grid_gamma: &[f64],
    grid_nu: &[f64],
) -> Result<Surface> {
    spec.validate()?;
    if !spec.error_family.is_student_t() || spec.transition.is_none() {
        return Err(Error::InvalidSpec("the surface needs Student-t errors and a transition".into()));
    }
    check_grid("gamma", grid_gamma)?;
    check_grid("nu", grid_nu)?;
    if grid_nu[0] <= 2.0 {
        return Err(Error::Domain(format!("nu grid must lie above 2, got {}", grid_nu[0])));
    }
    let (u, h) = recursion_trimmed(y, spec, base)?;
    let z: Vec<f64> = u.iter().zip(&h).map(|(u, h)| u / h.sqrt()).collect();
    let shape = likelihood_wellbehaved_test(&z);
    let loglik = grid_gamma
        .iter()
        .map(|&g| {
            let mut s = base.clone();
            s.gamma = g;
            s.w.clear();
            match recursion_trimmed(y, spec, &s) {
                Ok((u, h)) => grid_nu
                    .iter()
                    .map(|&nu| Some(student_t_loglik_sum(&u, &h, nu)).filter(|v| v.is_finite()))
                    .collect(),
                Err(_) => vec![None; grid_nu.len()],
            }
        })
        .collect();
    Ok(Surface { gamma: grid_gamma.to_vec(), nu: grid_nu.to_vec(), loglik, shape })
}

impl Surface {
    /// Maximum over `gamma` at each `nu`.
    pub fn nu_profile(&self) -> Vec<Option<f64>> {
        (0..self.nu.len())
            .map(|j| {
                self.loglik
                    .iter()
                    .filter_map(|row| row[j])
                    .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
            })
            .collect()
    }

    /// Grid index of the largest finite value, first in row-major order.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for (i, row) in self.loglik.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if let Some(v) = *v {
                    if best.is_none_or(|(_, b)| v > b) {
                        best = Some(((i, j), v));
                    }
                }
            }
        }
        best.map(|(ij, _)| ij)
    }

    pub fn profile_peak(&self) -> Option<ProfilePeak> {
        let prof = self.nu_profile();
        let mut best: Option<(usize, f64)> = None;
        for (j, v) in prof.iter().enumerate() {
            if let Some(v) = *v {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
        }
        let (j, _) = best?;
        Some(if j + 1 == prof.len() {
            ProfilePeak::Upper
        } else if j == 0 {
            ProfilePeak::Lower
        } else {
            ProfilePeak::Interior
        })
    }

    /// Matrix CSV: first column `gamma`, one column per `nu` value; failed
    /// cells are empty.
    pub fn to_csv(&self, comments: &[(&str, String)]) -> Result<String> {
        let mut header = vec!["gamma".to_string()];
        header.extend(self.nu.iter().map(|v| format!("nu={v:?}")));
        let rows: Vec<Vec<String>> = self
            .gamma
            .iter()
            .zip(&self.loglik)
            .map(|(g, row)| {
                std::iter::once(format!("{g:?}"))
                    .chain(row.iter().map(|v| v.map_or(String::new(), |v| format!("{v:?}"))))
                    .collect()
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        crate::io::table_csv(comments, &header, &rows)
    }
}

/// `n` points evenly spaced in `ln` between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()).collect(),
    }
}
