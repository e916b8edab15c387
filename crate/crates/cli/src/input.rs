use std::fs;
use std::path::Path;

use ineqlab::zoo::{ModelBundle, ModelSpec};
use serde::de::DeserializeOwned;

use crate::output::{CliError, CliResult};

/// Sample counts such as `100000` or `1e5`.
pub fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    let v: f64 = s.parse().map_err(|_| format!("not a count: {s}"))?;
    if !(v >= 0.0) || v.fract() != 0.0 || v > 1e15 {
        return Err(format!("not a nonnegative integer count: {s}"));
    }
    Ok(v as usize)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(anyhow::anyhow!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(anyhow::anyhow!("{}: {e}", path.display())))
}

/// Read a model spec and apply a size override.
pub fn load_spec(path: &Path, n: Option<usize>) -> CliResult<ModelSpec> {
    let mut spec: ModelSpec = read_json(path)?;
    if let Some(n) = n {
        match &mut spec {
            ModelSpec::Interchange { n: m } => *m = n,
            ModelSpec::HardcoreStar { leaves, .. } => *leaves = n,
            ModelSpec::RandomReversible { states, .. } => *states = n,
            _ => {
                return Err(CliError::config(
                    "--n only applies to interchange, hardcore_star and random_reversible models",
                ))
            }
        }
    }
    Ok(spec)
}

/// [`load_spec`] followed by building the chain.
pub fn load_model(path: &Path, n: Option<usize>) -> CliResult<(ModelSpec, ModelBundle)> {
    let spec = load_spec(path, n)?;
    let bundle = spec.build_bundle()?;
    Ok((spec, bundle))
}
