//! Experiment configuration: named presets, TOML files layered on top of a
//! preset, and command-line overrides layered on top of both.
//!
//! A minimal file only lists what differs from the preset:
//!
//! ```toml
//! seed = 7
//! lambda = 1.0
//!
//! [selection]
//! scheme = "sequential"
//! entries = 1
//! ```

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selection::SchemeKind;
use crate::signal::{NodeProfile, ProfileRanges};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// N = 5, M = 4, 3000 iterations, 50 runs.
    Desk,
    /// N = 10, M = 8, 3000 iterations, 50 runs.
    Paper,
    /// N = 3, M = 2, L = 1: small enough for every moment oracle.
    Tiny,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
            Preset::Tiny => "tiny",
        }
    }

    fn source(self) -> &'static str {
        match self {
            Preset::Desk => DESK,
            Preset::Paper => PAPER,
            Preset::Tiny => TINY,
        }
    }

    pub fn config(self) -> ExperimentConfig {
        toml::from_str(self.source()).expect("built-in presets are valid")
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            "tiny" => Ok(Preset::Tiny),
            other => Err(Error::config(format!("unknown preset '{other}'"))),
        }
    }
}

const DESK: &str = r#"
seed = 1
iterations = 3000
runs = 50
lambda = 0.995
delta = 0.01
per_run_truth = false

[network]
nodes = 5
avg_degree = 2.0

[selection]
scheme = "stochastic"
entries = 2
dim = 4
sweep = [1, 2, 4]

[profiles]
link_noise_scale = 1.0

[profiles.ranges]
r_u = [0.5, 2.0]
sigma2_v = [0.001, 0.01]
sigma2_psi = [0.0001, 0.01]

[oracle]
mean_draws = 100000
second_moment_draws = 200000
noise_draws = 100000
"#;

const PAPER: &str = r#"
seed = 1
iterations = 3000
runs = 50
lambda = 0.995
delta = 0.01
per_run_truth = false

[network]
nodes = 10
avg_degree = 2.0

[selection]
scheme = "sequential"
entries = 2
dim = 8
sweep = [1, 2, 4, 8]

[profiles]
link_noise_scale = 1.0

[profiles.ranges]
r_u = [0.5, 2.0]
sigma2_v = [0.001, 0.01]
sigma2_psi = [0.0001, 0.01]

[oracle]
mean_draws = 100000
second_moment_draws = 200000
noise_draws = 100000
"#;

const TINY: &str = r#"
seed = 1
iterations = 2000
runs = 20
lambda = 0.99
delta = 0.01
per_run_truth = false

[network]
nodes = 3
avg_degree = 2.0

[selection]
scheme = "stochastic"
entries = 1
dim = 2
sweep = [1, 2]

[profiles]
link_noise_scale = 1.0

[profiles.ranges]
r_u = [0.5, 2.0]
sigma2_v = [0.001, 0.01]
sigma2_psi = [0.0001, 0.01]

[oracle]
mean_draws = 100000
second_moment_draws = 200000
noise_draws = 100000
"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub nodes: usize,
    /// Target mean degree for the random generator. Ignored when `edges` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_degree: Option<f64>,
    /// Explicit undirected edges, zero-based node ids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
    /// Generator seed; derived from the master seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    pub scheme: SchemeKind,
    /// Entries transmitted per iteration, `L`.
    pub entries: usize,
    /// Parameter dimension, `M`.
    pub dim: usize,
    /// Values of `L` used by the comparison and theory sweeps.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub ranges: ProfileRanges,
    /// Multiplies every link-noise variance; 0 gives ideal links.
    pub link_noise_scale: f64,
    /// Explicit per-node profiles, indexed by node id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<NodeProfile>>,
    /// Explicit link-noise variances, indexed by link position.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_variances: Option<Vec<f64>>,
    /// Explicit parameter vector shared by all runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleDraws {
    pub mean_draws: usize,
    pub second_moment_draws: usize,
    pub noise_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub iterations: usize,
    pub runs: usize,
    pub lambda: f64,
    pub delta: f64,
    /// Draw a fresh parameter vector for every run instead of sharing one.
    pub per_run_truth: bool,
    pub network: NetworkConfig,
    pub selection: SelectionConfig,
    pub profiles: ProfileConfig,
    pub oracle: OracleDraws,
}

/// Command-line overrides; `None` leaves the configured value alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub scheme: Option<SchemeKind>,
    pub entries: Option<usize>,
    pub lambda: Option<f64>,
    pub link_noise_scale: Option<f64>,
    pub runs: Option<usize>,
    pub iterations: Option<usize>,
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.scheme {
            self.selection.scheme = v;
        }
        if let Some(v) = o.entries {
            self.selection.entries = v;
        }
        if let Some(v) = o.lambda {
            self.lambda = v;
        }
        if let Some(v) = o.link_noise_scale {
            self.profiles.link_noise_scale = v;
        }
        if let Some(v) = o.runs {
            self.runs = v;
        }
        if let Some(v) = o.iterations {
            self.iterations = v;
        }
    }

    /// Checks everything that can be checked without building the network.
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("runs must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(Error::config("iterations must be at least 1"));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::config(format!("lambda = {} outside (0, 1]", self.lambda)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::config(format!("delta = {} must be positive", self.delta)));
        }
        let sel = &self.selection;
        if sel.dim == 0 {
            return Err(Error::config("dim must be at least 1"));
        }
        for &l in std::iter::once(&sel.entries).chain(&sel.sweep) {
            if l == 0 || l > sel.dim {
                return Err(Error::config(format!(
                    "entries = {l} outside 1..={}",
                    sel.dim
                )));
            }
        }
        let net = &self.network;
        if net.nodes == 0 {
            return Err(Error::config("network needs at least one node"));
        }
        if net.edges.is_none() && net.avg_degree.is_none() && net.nodes > 1 {
            return Err(Error::config("network needs either edges or avg_degree"));
        }
        let p = &self.profiles;
        p.ranges.validate()?;
        if !(p.link_noise_scale >= 0.0 && p.link_noise_scale.is_finite()) {
            return Err(Error::config(format!(
                "link_noise_scale = {} must be finite and nonnegative",
                p.link_noise_scale
            )));
        }
        if let Some(nodes) = &p.nodes {
            if nodes.len() != net.nodes {
                return Err(Error::config(format!(
                    "{} explicit profiles for {} nodes",
                    nodes.len(),
                    net.nodes
                )));
            }
            for prof in nodes {
                NodeProfile::new(prof.r_u().to_vec(), prof.sigma2_v())?;
                if prof.dim() != sel.dim {
                    return Err(Error::config("explicit profile dimension differs from dim"));
                }
            }
        }
        if let Some(w) = &p.ground_truth {
            if w.len() != sel.dim {
                return Err(Error::config("ground_truth length differs from dim"));
            }
        }
        let o = &self.oracle;
        if o.mean_draws == 0 || o.second_moment_draws == 0 || o.noise_draws < 2 {
            return Err(Error::config("oracle draw counts must be positive (noise_draws >= 2)"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }
}

/// Recursively overlays `top` onto `base`; tables merge, everything else is
/// replaced.
fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses `text` as a partial config on top of `preset`.
pub fn parse_with_preset(preset: Preset, text: &str) -> Result<ExperimentConfig> {
    let mut base: toml::Value = toml::from_str(preset.source()).expect("built-in presets are valid");
    let top: toml::Value =
        toml::from_str(text).map_err(|e| Error::config(format!("invalid config: {e}")))?;
    merge(&mut base, top);
    base.try_into()
        .map_err(|e: toml::de::Error| Error::config(format!("invalid config: {e}")))
}

/// Preset, then optional file, then overrides; the result is validated.
pub fn load(preset: Preset, path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                path: p.display().to_string(),
                source,
            })?;
            parse_with_preset(preset, &text)?
        }
        None => preset.config(),
    };
    cfg.apply(overrides);
    cfg.validate()?;
    Ok(cfg)
}
