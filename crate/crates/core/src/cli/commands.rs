use std::path::{Path, PathBuf};

use serde_json::json;

use super::manifest::{CommandKind, RunManifest};
use crate::error::{Error, Result};
use crate::forecast::{correlation, mse_ratio, rolling_forecast, window_mean_proxy, ForecastRecord};
use crate::io::{ingest_returns, table_csv, write_atomic, write_chain_csv, FitSummary, SUMMARY_SCHEMA_VERSION};
use crate::model::{ErrorFamily, ParamState};
use crate::sampler::{run_chains, Chain};
use crate::selection::decide;
use crate::simulate::{run_study, simulate_dataset_with_burn_in};
use crate::surface::likelihood_surface;

/// Runs a resolved manifest and writes its outputs.
pub fn execute(m: &RunManifest) -> Result<()> {
    match m.command {
        CommandKind::Fit => fit(m),
        CommandKind::Simulate => simulate(m),
        CommandKind::Study => study(m),
        CommandKind::Compare => compare(m),
        CommandKind::Forecast => forecast(m),
        CommandKind::Surface => surface(m),
    }
}

struct Outputs {
    dir: PathBuf,
    manifest_line: String,
    manifest_json: serde_json::Value,
}

impl Outputs {
    fn new(m: &RunManifest) -> Result<Self> {
        let manifest_json = m.to_json()?;
        let out = Outputs {
            dir: PathBuf::from(&m.output),
            manifest_line: serde_json::to_string(&manifest_json)?,
            manifest_json,
        };
        write_atomic(out.dir.join("manifest.toml"), m.to_toml()?.as_bytes())?;
        Ok(out)
    }

    fn comments(&self) -> Vec<(&'static str, String)> {
        vec![("manifest", self.manifest_line.clone())]
    }

    fn text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        write_atomic(&p, text.as_bytes())?;
        Ok(p)
    }

    fn json(&self, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.text(name, &s)
    }
}

fn load_input(m: &RunManifest) -> Result<Vec<f64>> {
    let path = m
        .input
        .as_deref()
        .ok_or_else(|| Error::Config(format!("`{}` needs --input", m.command)))?;
    ingest_returns(path, m.column.as_deref(), m.transform)
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn fit(m: &RunManifest) -> Result<()> {
    let y = load_input(m)?;
    let chains = run_chains(&y, &m.spec, &m.prior, &m.mcmc)?;
    let chain = Chain::pooled(&chains).ok_or_else(|| Error::Domain("no chains were run".into()))?;
    let out = Outputs::new(m)?;
    out.text("chain.csv", &write_chain_csv(&chain, &out.comments())?)?;
    let mut summary = FitSummary::from_chain(&chain, m.damping)?;
    summary.manifest = Some(out.manifest_json.clone());
    out.json("summary.json", &serde_json::to_value(&summary)?)?;

    println!("{} draws from {} chain(s), spec {}", chain.len(), chains.len(), m.spec);
    println!("{:<10} {:>12} {:>12} {:>12} {:>12}", "param", "mean", "median", "2.5%", "97.5%");
    for p in &summary.params {
        println!("{:<10} {:>12.5} {:>12.5} {:>12.5} {:>12.5}", p.name, p.mean, p.median, p.lower_95, p.upper_95);
    }
    for (k, v) in &summary.acceptance {
        println!("acceptance {k}: {v:.3}");
    }
    println!("log marginal likelihood (Newton-Raftery): {:.4}", summary.log_marginal.newton_raftery.log_value);
    println!("log marginal likelihood (shifted gamma):  {:.4}", summary.log_marginal.shifted_gamma.log_value);
    println!("wrote {}", out.dir.display());
    Ok(())
}

fn simulate(m: &RunManifest) -> Result<()> {
    let settings = m.simulate.clone().unwrap_or_default();
    let params = settings.params.clone().unwrap_or_else(|| ParamState::study_truth(&m.spec, None));
    let path = simulate_dataset_with_burn_in(&m.spec, &params, settings.n, settings.burn_in, m.seed)?;
    let student = m.spec.error_family.is_student_t();
    let mut header = vec!["t", "u", "h"];
    if student {
        header.push("w");
    }
    header.push("y");
    let rows: Vec<Vec<String>> = (0..path.y.len())
        .map(|t| {
            let mut r = vec![t.to_string(), num(path.u[t]), num(path.h[t])];
            if student {
                r.push(num(path.w[t]));
            }
            r.push(num(path.y[t]));
            r
        })
        .collect();
    let out = Outputs::new(m)?;
    let p = out.text("series.csv", &table_csv(&out.comments(), &header, &rows)?)?;
    println!("simulated {} points from {}", path.y.len(), m.spec);
    println!("wrote {}", p.display());
    Ok(())
}

fn study(m: &RunManifest) -> Result<()> {
    let cfg = m.study.clone().ok_or_else(|| Error::Config("missing [study] settings".into()))?;
    let report = run_study(&cfg, &m.mcmc, &m.prior)?;
    let out = Outputs::new(m)?;
    let mut rows = Vec::new();
    for c in &report.cells {
        let key = |model: &str, q: &str, v: f64| vec![c.dgp.label(), c.n.to_string(), model.to_string(), q.to_string(), num(v)];
        rows.push(key("-", "decision_rate", c.decision_rate));
        rows.push(key("-", "completed", c.completed as f64));
        for mc in &c.models {
            let model = mc.model.as_str();
            for (p, v) in &mc.mse {
                rows.push(key(model, &format!("mse_{p}"), *v));
            }
            rows.push(key(model, "pred_mse_mean", mc.pred_mse_mean));
            rows.push(key(model, "pred_mse_median", mc.pred_mse_median));
            if let Some(nu) = mc.mean_nu_median {
                rows.push(key(model, "mean_nu_median", nu));
            }
        }
    }
    out.text("study.csv", &table_csv(&out.comments(), &["dgp", "n", "model", "quantity", "value"], &rows)?)?;
    out.json(
        "study.json",
        &json!({ "schema_version": SUMMARY_SCHEMA_VERSION, "manifest": out.manifest_json, "report": report }),
    )?;
    for c in &report.cells {
        println!(
            "{:>8} n={:<5} completed={:<3} correct selection={:.2}",
            c.dgp.label(),
            c.n,
            c.completed,
            c.decision_rate
        );
        for mc in &c.models {
            let mse: Vec<String> = mc.mse.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
            println!("{:>14} MSE {}", mc.model.as_str(), mse.join(" "));
        }
    }
    println!("wrote {}", out.dir.display());
    report.check()
}

fn read_summary(path: &str) -> Result<FitSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
    let s: FitSummary = serde_json::from_str(&text)?;
    if s.schema_version != SUMMARY_SCHEMA_VERSION {
        return Err(Error::Parse { line: 1, message: format!("{path}: unsupported schema {}", s.schema_version) });
    }
    Ok(s)
}

fn compare(m: &RunManifest) -> Result<()> {
    let c = m.compare.clone().ok_or_else(|| Error::Config("missing [compare] settings".into()))?;
    if c.model1.is_empty() || c.model2.is_empty() {
        return Err(Error::Config("compare needs two summary files".into()));
    }
    let (s1, s2) = (read_summary(&c.model1)?, read_summary(&c.model2)?);
    let (ml1, ml2) = (s1.log_marginal.get(c.estimator), s2.log_marginal.get(c.estimator));
    let d = decide(ml1.log_value - ml2.log_value, c.threshold)?;
    let out = Outputs::new(m)?;
    out.json(
        "compare.json",
        &json!({
            "schema_version": SUMMARY_SCHEMA_VERSION,
            "manifest": out.manifest_json,
            "model1": { "spec": s1.spec.to_string(), "log_marginal": ml1 },
            "model2": { "spec": s2.spec.to_string(), "log_marginal": ml2 },
            "decision": d,
        }),
    )?;
    println!("model 1: {}", s1.spec);
    println!("model 2: {}", s2.spec);
    println!("estimator: {}", c.estimator.as_str());
    println!("log B12 = {:.4}, 2 log B12 = {:.4}", d.log_b12, 2.0 * d.log_b12);
    println!("evidence: {}", d.evidence);
    println!(
        "decision at B12 > {}: {}",
        c.threshold,
        match d.verdict {
            crate::selection::Verdict::AcceptM1 => "model 1",
            crate::selection::Verdict::AcceptM2 => "model 2",
        }
    );
    Ok(())
}

fn forecast(m: &RunManifest) -> Result<()> {
    let y = load_input(m)?;
    let settings = m.forecast.clone().unwrap_or_default();
    let split = settings.split.unwrap_or_else(|| y.len().saturating_sub(20));
    let mut runs = Vec::new();
    for family in [ErrorFamily::Gaussian, ErrorFamily::StudentT] {
        let spec = m.spec.clone().with_family(family);
        runs.push(rolling_forecast(&y, split, &spec, &m.prior, &m.mcmc, settings.refit, family.as_str())?);
    }
    let out = Outputs::new(m)?;
    let rows: Vec<Vec<String>> = runs
        .iter()
        .flat_map(|r| &r.records)
        .map(|r| vec![r.t.to_string(), r.model_tag.clone(), num(r.h_hat), num(r.realized_proxy)])
        .collect();
    out.text("forecast.csv", &table_csv(&out.comments(), &["t", "model_tag", "h_hat", "realized_proxy"], &rows)?)?;

    // Only steps where both models produced a forecast are compared.
    let common = |a: &[ForecastRecord], b: &[ForecastRecord]| -> Vec<ForecastRecord> {
        a.iter().filter(|r| b.iter().any(|s| s.t == r.t)).cloned().collect()
    };
    let g = common(&runs[0].records, &runs[1].records);
    let s = common(&runs[1].records, &runs[0].records);
    let (ratio, proxy) = if g.len() >= settings.window {
        (mse_ratio(&g, &s, settings.window)?, window_mean_proxy(&g, settings.window))
    } else {
        (Vec::new(), Vec::new())
    };
    let ratio_rows: Vec<Vec<String>> = ratio
        .iter()
        .zip(&proxy)
        .enumerate()
        .map(|(k, (r, p))| vec![g[k + settings.window - 1].t.to_string(), num(*r), num(*p)])
        .collect();
    out.text("ratio.csv", &table_csv(&out.comments(), &["t_end", "mse_ratio", "mean_proxy"], &ratio_rows)?)?;
    let corr = correlation(&ratio, &proxy);
    out.json(
        "forecast.json",
        &json!({
            "schema_version": SUMMARY_SCHEMA_VERSION,
            "manifest": out.manifest_json,
            "split": split,
            "window": settings.window,
            "failures": { "gaussian": runs[0].failures, "student-t": runs[1].failures },
            "ratio_above_one": ratio.iter().filter(|r| **r > 1.0).count(),
            "windows": ratio.len(),
            "correlation_with_mean_proxy": corr,
        }),
    )?;
    println!(
        "{} steps from t={split}: {} and {} forecasts, {} windows of {}",
        y.len() - split,
        runs[0].records.len(),
        runs[1].records.len(),
        ratio.len(),
        settings.window
    );
    if let Some(c) = corr {
        println!("correlation of the MSE ratio with the window mean squared return: {c:.3}");
    }
    println!("wrote {}", out.dir.display());
    Ok(())
}

fn surface(m: &RunManifest) -> Result<()> {
    let y = load_input(m)?;
    let settings = m.surface.clone().unwrap_or_default();
    let base = settings.base.clone().unwrap_or_else(|| ParamState::study_truth(&m.spec, None));
    base.check_support(&m.spec)?;
    let s = likelihood_surface(&y, &m.spec, &base, &settings.gamma, &settings.nu)?;
    let out = Outputs::new(m)?;
    out.text("surface.csv", &s.to_csv(&out.comments())?)?;
    let peak = s.argmax().map(|(i, j)| json!({ "gamma": s.gamma[i], "nu": s.nu[j], "loglik": s.loglik[i][j] }));
    out.json(
        "surface.json",
        &json!({
            "schema_version": SUMMARY_SCHEMA_VERSION,
            "manifest": out.manifest_json,
            "shape": s.shape,
            "argmax": peak,
            "nu_profile_peak": s.profile_peak(),
            "nu": s.nu,
            "nu_profile": s.nu_profile(),
        }),
    )?;
    let verdict = match s.shape {
        crate::priors::LikelihoodShape::IllBehaved => "ill-behaved: expect no interior maximum in nu",
        crate::priors::LikelihoodShape::NoEvidence => "no evidence of an ill-behaved likelihood",
    };
    println!("residual check: {verdict}");
    if let Some((i, j)) = s.argmax() {
        println!("grid maximum at gamma={:.4}, nu={:.4}", s.gamma[i], s.nu[j]);
    }
    println!("wrote {}", Path::new(&m.output).join("surface.csv").display());
    Ok(())
}
