//! Scenario configuration files and presets.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use jscc_core::channel::{bhattacharyya, BhattacharyyaMatrix};
use jscc_core::joint::{CodewordFamily, Grids, InputSet};
use jscc_core::prob::{Channel, Distribution};
use jscc_core::source::SourceModel;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub probs: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub rho_max: f64,
    pub rho_points: usize,
    pub r_points: usize,
    pub q_resolution: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        let g = Grids::default();
        Self {
            rho_max: g.rho_max,
            rho_points: g.rho_points,
            r_points: g.r_points,
            q_resolution: g.q_resolution,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSpec {
    /// Source block length used by `partition`.
    pub k: usize,
    /// Channel block lengths used by `simulate`; `k = t·n` must be integral.
    pub n_list: Vec<usize>,
    pub trials: u64,
    pub best_of: usize,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            k: 8,
            n_list: vec![8],
            trials: 100_000,
            best_of: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub source: SourceSpec,
    pub channel: ChannelSpec,
    #[serde(default)]
    pub grids: GridSpec,
    #[serde(default)]
    pub sim: SimSpec,
    /// Restricts the maximum over input compositions to these members.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Vec<Vec<f64>>>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub config: Config,
    pub source: SourceModel,
    pub channel: Channel,
    pub distances: BhattacharyyaMatrix,
    pub grids: Grids,
    pub family: Option<CodewordFamily>,
}

impl Model {
    pub fn input_set(&self) -> anyhow::Result<InputSet> {
        Ok(match &self.family {
            Some(f) => InputSet::Family(f.clone()),
            None => InputSet::Simplex(self.grids.q_grid(self.channel.input_size())?),
        })
    }
}

/// Directory holding the shipped presets (`JSCC_PRESETS` overrides it).
pub fn preset_dir() -> PathBuf {
    std::env::var_os("JSCC_PRESETS")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets"))
}

pub fn preset_path(name: &str) -> PathBuf {
    preset_dir().join(format!("{name}.json"))
}

/// Checks a parsed config and builds the model. Rows and probabilities must
/// sum to one within 1e-12; nothing is renormalized.
pub fn validate(config: Config, name: &str) -> anyhow::Result<Model> {
    let law = Distribution::new(config.source.probs.clone()).context("source probs")?;
    if !(config.source.t > 0.0 && config.source.t.is_finite()) {
        bail!("source t must be positive and finite, got {}", config.source.t);
    }
    let source = SourceModel::new(law, config.source.t)?;
    let channel = Channel::new(config.channel.rows.clone()).context("channel rows")?;
    let g = &config.grids;
    let grids = Grids {
        rho_max: g.rho_max,
        rho_points: g.rho_points,
        r_points: g.r_points,
        q_resolution: g.q_resolution,
    };
    if !(grids.rho_max > 1.0 && grids.rho_max.is_finite()) {
        bail!("grids.rho_max must be in (1, inf), got {}", grids.rho_max);
    }
    if grids.rho_points < 2 || grids.r_points < 2 {
        bail!("grid point counts must be at least 2");
    }
    if let Some(r) = grids.q_resolution {
        if !(r > 0.0 && r <= 1.0) {
            bail!("grids.q_resolution must be in (0, 1], got {r}");
        }
    }
    let family = match &config.family {
        Some(members) => {
            let ds = members
                .iter()
                .map(|m| Distribution::new(m.clone()))
                .collect::<Result<Vec<_>, _>>()
                .context("family member")?;
            if ds.iter().any(|q| q.len() != channel.input_size()) {
                bail!("family members must have {} entries", channel.input_size());
            }
            Some(CodewordFamily::new(ds)?)
        }
        None => None,
    };
    if config.sim.trials == 0 || config.sim.best_of == 0 || config.sim.k == 0 {
        bail!("sim.k, sim.trials and sim.best_of must be positive");
    }
    let distances = bhattacharyya(&channel);
    Ok(Model {
        name: name.to_string(),
        config,
        source,
        channel,
        distances,
        grids,
        family,
    })
}

pub fn parse(text: &str, name: &str) -> anyhow::Result<Model> {
    let config: Config = serde_json::from_str(text).with_context(|| format!("parsing {name}"))?;
    validate(config, name)
}

/// Reads and validates a config file.
pub fn validate_config(path: &Path) -> anyhow::Result<Model> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_stem().map_or_else(|| "config".into(), |s| s.to_string_lossy().into_owned());
    parse(&text, &name)
}

pub fn load_preset(name: &str) -> anyhow::Result<Model> {
    validate_config(&preset_path(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(rows: &str, t: &str) -> String {
        format!(r#"{{"source": {{"probs": [0.9, 0.1], "t": {t}}}, "channel": {{"rows": {rows}}}}}"#)
    }

    #[test]
    fn bsc_config_parses() {
        let m = parse(&doc("[[0.9, 0.1], [0.1, 0.9]]", "1"), "x").unwrap();
        assert_eq!(m.channel.to_rows(), vec![vec![0.9, 0.1], vec![0.1, 0.9]]);
        assert_eq!(m.grids, Grids::default());
    }

    #[test]
    fn bad_row_is_rejected_with_index() {
        let err = parse(&doc("[[0.9, 0.1], [0.1, 0.899]]", "1"), "x").unwrap_err();
        assert!(format!("{err:#}").contains("row 1"), "{err:#}");
    }

    #[test]
    fn zero_rate_is_rejected() {
        assert!(parse(&doc("[[0.9, 0.1], [0.1, 0.9]]", "0"), "x").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"source": {"probs": [1.0], "t": 1, "x": 2}, "channel": {"rows": [[1.0]]}}"#;
        assert!(parse(text, "x").is_err());
    }
}
