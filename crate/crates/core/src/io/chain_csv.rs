use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{comment_lines, split_comments};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, ParamState};
use crate::sampler::Chain;

#[derive(Serialize, Deserialize)]
struct ChainMeta {
    spec: ModelSpec,
    seed: u64,
    acceptance: BTreeMap<String, f64>,
}

/// One row per draw: the scalar parameters in canonical order, the
/// log-likelihood and, when stored, the mixing weights `w_1..`. Floats are
/// written in shortest round-trip form, so [`read_chain_csv`] restores the
/// chain exactly.
pub fn write_chain_csv(chain: &Chain, comments: &[(&str, String)]) -> Result<String> {
    let meta = ChainMeta { spec: chain.spec.clone(), seed: chain.seed, acceptance: chain.acceptance.clone() };
    let mut entries: Vec<(&str, String)> = comments.to_vec();
    entries.push(("chain", serde_json::to_string(&meta)?));
    let n_w = chain.draws.first().map_or(0, |d| d.w.len());
    if chain.draws.iter().any(|d| d.w.len() != n_w) {
        return Err(Error::Domain("draws store different numbers of mixing weights".into()));
    }
    let mut header = vec!["draw".to_string()];
    header.extend(ParamState::scalar_names(&chain.spec));
    header.push("loglik".into());
    header.extend((1..=n_w).map(|j| format!("w_{j}")));

    let mut out = comment_lines(&entries).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&header)?;
        for (i, (d, ll)) in chain.draws.iter().zip(&chain.logliks).enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(d.to_scalars().iter().map(|v| format!("{v:?}")));
            row.push(format!("{ll:?}"));
            row.extend(d.w.iter().map(|v| format!("{v:?}")));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    String::from_utf8(out).map_err(|e| Error::Io(e.to_string()))
}

/// Parses the output of [`write_chain_csv`].
pub fn read_chain_csv(text: &str) -> Result<Chain> {
    let (meta, body) = split_comments(text);
    let offset = text[..text.len() - body.len()].lines().count();
    let raw = meta
        .iter()
        .find(|(k, _)| k == "chain")
        .map(|(_, v)| v)
        .ok_or_else(|| Error::Parse { line: 1, message: "missing '# chain:' metadata line".into() })?;
    let meta: ChainMeta = serde_json::from_str(raw)?;
    let names = ParamState::scalar_names(&meta.spec);
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header = rdr.headers()?.clone();
    let expected: Vec<&str> = std::iter::once("draw").chain(names.iter().map(String::as_str)).chain(["loglik"]).collect();
    if header.len() < expected.len() || header.iter().zip(&expected).any(|(a, b)| a != *b) {
        return Err(Error::Parse { line: offset + 1, message: format!("unexpected chain header {header:?}") });
    }
    let n_w = header.len() - expected.len();
    let mut draws = Vec::new();
    let mut logliks = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = offset + rec.position().map_or(0, |p| p.line() as usize);
        let nums = rec
            .iter()
            .skip(1)
            .map(|c| c.parse::<f64>().map_err(|_| Error::Parse { line, message: format!("'{c}' is not a number") }))
            .collect::<Result<Vec<_>>>()?;
        if nums.len() != names.len() + 1 + n_w {
            return Err(Error::Parse { line, message: "wrong number of fields".into() });
        }
        let mut state = ParamState::from_scalars(&meta.spec, &nums[..names.len()])?;
        state.w = nums[names.len() + 1..].to_vec();
        draws.push(state);
        logliks.push(nums[names.len()]);
    }
    Ok(Chain { spec: meta.spec, draws, logliks, acceptance: meta.acceptance, seed: meta.seed })
}
