//! Experiment configuration: TOML schema, validation, canonical form and hash.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use llmo_core::agents::HttpLlmAgentConfig;
use llmo_core::{NumberFormat, SamplerKind};
use llmo_wireless::{ConstraintMode, MmimoModel, DEFAULT_PENALTY, DEFAULT_P_FIX, DEFAULT_P_TX};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Largest `G^D` grid the runner will tabulate.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    IfcEe,
    IfcSe,
    BcSe,
    MmimoEe,
    SyntheticGrid,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::IfcEe => "ifc-ee",
            Scenario::IfcSe => "ifc-se",
            Scenario::BcSe => "bc-se",
            Scenario::MmimoEe => "mmimo-ee",
            Scenario::SyntheticGrid => "synthetic-grid",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    Ga,
    Bo,
    Random,
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Ga => "ga",
            BaselineKind::Bo => "bo",
            BaselineKind::Random => "random",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AgentSpec {
    /// Grid local search with uniform restarts; needs `[grid]`.
    Synthetic {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_radius")]
        radius: usize,
    },
    /// Uniform proposals over the action box.
    Random,
    /// OpenAI-compatible endpoint; needs `--allow-network`.
    Http { http: HttpLlmAgentConfig },
}

fn default_epsilon() -> f64 {
    0.2
}

fn default_radius() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "source", deny_unknown_fields)]
pub enum ChannelSource {
    /// `count` Rayleigh draws with seeds `seed, seed + 1, ...`.
    Rayleigh {
        #[serde(default = "default_fixture_count")]
        count: usize,
        #[serde(default = "default_channel_seed")]
        seed: u64,
    },
    /// The stored 2x2 interference-channel draw.
    IfcD2,
    /// A channel CSV (`sample,row,col,re,im`).
    File { path: PathBuf },
}

impl Default for ChannelSource {
    fn default() -> Self {
        ChannelSource::Rayleigh {
            count: default_fixture_count(),
            seed: default_channel_seed(),
        }
    }
}

pub fn default_fixture_count() -> usize {
    200
}

fn default_channel_seed() -> u64 {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Levels `G` per dimension.
    pub levels: usize,
    /// Score every action at its nearest grid point.
    #[serde(default = "yes")]
    pub quantize: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WirelessSpec {
    pub p_tx: f64,
    pub p_fix: f64,
    pub penalty: f64,
}

impl Default for WirelessSpec {
    fn default() -> Self {
        Self {
            p_tx: DEFAULT_P_TX,
            p_fix: DEFAULT_P_FIX,
            penalty: DEFAULT_PENALTY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Action dimension `D`.
    pub dim: usize,
    /// Population size `P`.
    #[serde(default = "default_population")]
    pub population: usize,
    /// Iterations `T`.
    pub iterations: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_samplers")]
    pub samplers: Vec<SamplerKind>,
    #[serde(default)]
    pub baselines: Vec<BaselineKind>,
    /// Agent pool; an ensemble of size `L` uses agents `0..L`, cycling.
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    /// Values of `L` to run. Empty means the pool size.
    #[serde(default)]
    pub ensemble_sizes: Vec<usize>,
    #[serde(default)]
    pub constraint: ConstraintMode,
    #[serde(default = "default_retries")]
    pub max_retries: usize,
    #[serde(default)]
    pub number_format: NumberFormat,
    #[serde(default)]
    pub channels: ChannelSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub wireless: WirelessSpec,
    #[serde(default)]
    pub mmimo: MmimoModel,
    pub output: PathBuf,
}

fn default_population() -> usize {
    5
}

fn default_samplers() -> Vec<SamplerKind> {
    vec![SamplerKind::Elitist]
}

fn default_retries() -> usize {
    3
}

/// Command-line replacements for single config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub scenario: Option<Scenario>,
    pub dim: Option<usize>,
    pub population: Option<usize>,
    pub iterations: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub samplers: Option<Vec<SamplerKind>>,
    pub baselines: Option<Vec<BaselineKind>>,
    pub ensemble_sizes: Option<Vec<usize>>,
    pub constraint: Option<ConstraintMode>,
    pub max_retries: Option<usize>,
    pub fixtures: Option<usize>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = &o.$f {
                    self.$f = v.clone();
                }
            )*};
        }
        set!(
            scenario,
            dim,
            population,
            iterations,
            seeds,
            samplers,
            baselines,
            ensemble_sizes,
            constraint,
            max_retries,
            output
        );
        if let Some(n) = o.fixtures {
            match &mut self.channels {
                ChannelSource::Rayleigh { count, .. } => *count = n,
                _ => {
                    return Err(CliError::Invalid(vec![
                        "--fixtures only applies to Rayleigh channels".into()
                    ]))
                }
            }
        }
        Ok(())
    }

    /// Effective `L` values.
    pub fn ensemble_sizes(&self) -> Vec<usize> {
        if self.ensemble_sizes.is_empty() {
            vec![self.agents.len()]
        } else {
            self.ensemble_sizes.clone()
        }
    }

    pub fn uses_http(&self) -> bool {
        !self.samplers.is_empty() && self.agents.iter().any(|a| matches!(a, AgentSpec::Http { .. }))
    }

    /// Every problem with the config, not just the first.
    pub fn validate(&self, allow_network: bool) -> Result<(), CliError> {
        let mut errs = Vec::new();
        if self.dim == 0 {
            errs.push("dim must be at least 1".to_string());
        }
        if self.population == 0 {
            errs.push("population must be at least 1".into());
        }
        if self.iterations == 0 {
            errs.push("iterations must be at least 1".into());
        }
        if self.seeds.is_empty() {
            errs.push("seeds must list at least one seed".into());
        }
        if self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            errs.push("seeds contain duplicates".into());
        }
        if self.samplers.is_empty() && self.baselines.is_empty() {
            errs.push("nothing to run: samplers and baselines are both empty".into());
        }
        if self.samplers.iter().collect::<HashSet<_>>().len() != self.samplers.len() {
            errs.push("samplers contain duplicates".into());
        }
        if self.baselines.iter().collect::<HashSet<_>>().len() != self.baselines.len() {
            errs.push("baselines contain duplicates".into());
        }
        if !self.samplers.is_empty() {
            if self.agents.is_empty() {
                errs.push("samplers are set but the agent pool is empty".into());
            }
            let sizes = self.ensemble_sizes();
            if sizes.contains(&0) {
                errs.push("ensemble sizes must be at least 1".into());
            }
            if sizes.iter().collect::<HashSet<_>>().len() != sizes.len() {
                errs.push("ensemble sizes contain duplicates".into());
            }
        }
        if self.output.as_os_str().is_empty() {
            errs.push("output directory is empty".into());
        }

        match self.scenario {
            Scenario::MmimoEe if self.dim != 3 => errs.push(format!(
                "mmimo-ee acts on (M, K, p_dl) and needs dim = 3, got {}",
                self.dim
            )),
            Scenario::BcSe if self.dim < 2 => errs.push("bc-se needs at least 2 users".into()),
            _ => {}
        }
        if self.constraint != ConstraintMode::None && self.scenario != Scenario::BcSe {
            errs.push(format!("constraint mode {:?} only applies to bc-se", self.constraint));
        }
        match &self.channels {
            ChannelSource::Rayleigh { count, .. } if *count == 0 => {
                errs.push("channel fixture count must be at least 1".into())
            }
            ChannelSource::IfcD2 if !matches!(self.scenario, Scenario::IfcEe | Scenario::IfcSe) || self.dim != 2 => {
                errs.push("the ifc-d2 fixture needs an ifc scenario with dim = 2".into())
            }
            ChannelSource::File { .. } if matches!(self.scenario, Scenario::MmimoEe | Scenario::SyntheticGrid) => errs
                .push(format!(
                    "{} draws its own fixtures; use Rayleigh channels",
                    self.scenario
                )),
            ChannelSource::File { path } if !path.exists() => {
                errs.push(format!("channel file {} does not exist", path.display()))
            }
            _ => {}
        }
        let w = &self.wireless;
        if !(w.p_tx.is_finite() && w.p_tx > 0.0) {
            errs.push("wireless.p_tx must be positive".into());
        }
        if !(w.p_fix.is_finite() && w.p_fix > 0.0) {
            errs.push("wireless.p_fix must be positive".into());
        }
        if !(w.penalty.is_finite() && w.penalty < 0.0) {
            errs.push("wireless.penalty must be negative".into());
        }
        if self.scenario == Scenario::MmimoEe {
            if let Err(e) = self.mmimo.validate() {
                errs.push(format!("mmimo: {e}"));
            }
        }

        match &self.grid {
            Some(g) => {
                if g.levels < 2 {
                    errs.push("grid.levels must be at least 2".into());
                }
                let points = (g.levels as u128).checked_pow(self.dim as u32);
                if points.is_none_or(|p| p > MAX_GRID_POINTS as u128) {
                    errs.push(format!(
                        "grid of {}^{} points exceeds {MAX_GRID_POINTS}",
                        g.levels, self.dim
                    ));
                }
            }
            None => {
                if self.scenario == Scenario::SyntheticGrid {
                    errs.push("synthetic-grid needs a [grid] table".into());
                }
                if !self.samplers.is_empty() && self.agents.iter().any(|a| matches!(a, AgentSpec::Synthetic { .. })) {
                    errs.push("synthetic agents need a [grid] table".into());
                }
            }
        }
        if let NumberFormat::IntegerGrid { max } = self.number_format {
            if max == 0 {
                errs.push("number_format.max must be at least 1".into());
            }
        }

        for (i, a) in self.agents.iter().enumerate() {
            match a {
                AgentSpec::Synthetic { epsilon, .. } => {
                    if !(0.0..=1.0).contains(epsilon) {
                        errs.push(format!("agents[{i}]: epsilon {epsilon} outside [0, 1]"));
                    }
                }
                AgentSpec::Random => {}
                AgentSpec::Http { http } => {
                    if let Err(e) = http.validate() {
                        errs.push(format!("agents[{i}]: {e}"));
                    }
                    if let Some(name) = &http.credential_env {
                        if !is_env_name(name) {
                            errs.push(format!(
                                "agents[{i}]: credential_env must be an environment variable name, not a value"
                            ));
                        }
                    }
                    if !allow_network {
                        errs.push(format!("agents[{i}]: http agents need --allow-network"));
                    }
                }
            }
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(errs))
        }
    }

    /// Canonical TOML: every default filled in, fixed key order.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.ensemble_sizes = c.ensemble_sizes();
        toml::to_string(&c).expect("config serializes")
    }

    /// SHA-256 of the canonical form without the output directory, so the
    /// same experiment written to two places shares its hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::from(".");
        let digest = Sha256::digest(c.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn is_env_name(s: &str) -> bool {
    !s.is_empty()
        && s.len() <= 128
        && s.bytes()
            .all(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || b == b'_')
        && !s.as_bytes()[0].is_ascii_digit()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
scenario = "synthetic-grid"
dim = 2
iterations = 10
seeds = [1, 2]
output = "out"

[grid]
levels = 5

[[agents]]
kind = "synthetic"
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.population, 5);
        assert_eq!(c.samplers, vec![SamplerKind::Elitist]);
        assert_eq!(c.ensemble_sizes(), vec![1]);
        assert_eq!(c.channels, ChannelSource::Rayleigh { count: 200, seed: 1000 });
        assert!(c.grid.as_ref().unwrap().quantize);
        c.validate(false).unwrap();
    }

    #[test]
    fn canonical_form_round_trips() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let canon = c.canonical();
        let back = ExperimentConfig::from_toml_str(&canon).unwrap();
        assert_eq!(back.canonical(), canon);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn hash_ignores_output_but_not_content() {
        let a = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let mut b = a.clone();
        b.output = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.iterations = 11;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\nbogus = 1\n");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&text),
            Err(CliError::Parse(_))
        ));
    }

    #[test]
    fn errors_are_listed_together() {
        let text = r#"
scenario = "mmimo-ee"
dim = 2
population = 0
iterations = 0
seeds = []
constraint = "penalty"
output = ""

[[agents]]
kind = "synthetic"
epsilon = 2.0

[[agents]]
kind = "http"
http = { endpoint = "http://localhost/v1", model = "m", credential_env = "sk-live-123" }
"#;
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        let Err(CliError::Invalid(errs)) = c.validate(false) else {
            panic!("expected validation errors");
        };
        for needle in [
            "population",
            "iterations",
            "seeds",
            "output",
            "dim = 3",
            "only applies to bc-se",
            "synthetic agents need a [grid]",
            "epsilon",
            "environment variable name",
            "--allow-network",
        ] {
            assert!(
                errs.iter().any(|e| e.contains(needle)),
                "missing {needle:?} in {errs:#?}"
            );
        }
    }

    #[test]
    fn overrides_replace_single_fields() {
        let mut c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        c.apply(&Overrides {
            iterations: Some(3),
            seeds: Some(vec![9]),
            fixtures: Some(4),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!((c.iterations, c.seeds.clone()), (3, vec![9]));
        assert_eq!(c.channels, ChannelSource::Rayleigh { count: 4, seed: 1000 });
        assert_eq!(c.population, 5);
    }

    #[test]
    fn env_names() {
        assert!(is_env_name("OPENAI_API_KEY"));
        assert!(!is_env_name("sk-abc"));
        assert!(!is_env_name("1KEY"));
        assert!(!is_env_name(""));
    }
}
