//! Config layering: built-in defaults, then a params file, then `--set`.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::Value;
use vphmpc::simloop::{ControllerMode, EpisodeConfig};

/// Reads a params file. Missing fields keep their defaults; unknown fields
/// are errors.
pub fn load_params(path: &Path) -> Result<EpisodeConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("{}: cannot read params file", path.display()))?;
    serde_json::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Applies `key.path=value` overrides. Values are read as JSON when they
/// parse, otherwise as bare strings.
pub fn apply_overrides(cfg: EpisodeConfig, sets: &[String]) -> Result<EpisodeConfig> {
    let mut value = serde_json::to_value(&cfg)?;
    for set in sets {
        let Some((key, raw)) = set.split_once('=') else {
            bail!("--set {set}: expected KEY=VALUE");
        };
        let slot = key
            .split('.')
            .try_fold(&mut value, |v, part| v.get_mut(part))
            .ok_or_else(|| anyhow!("--set {key}: no such config field"))?;
        *slot = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    }
    serde_json::from_value(value).map_err(|e| anyhow!("--set: {e}"))
}

pub fn effective_config(params: Option<&Path>, mode: Option<ControllerMode>, sets: &[String]) -> Result<EpisodeConfig> {
    let mut cfg = match params {
        Some(p) => load_params(p)?,
        None => EpisodeConfig::default(),
    };
    if let Some(m) = mode {
        cfg.controller_mode = m;
    }
    let cfg = apply_overrides(cfg, sets)?;
    cfg.validate()?;
    Ok(cfg)
}
