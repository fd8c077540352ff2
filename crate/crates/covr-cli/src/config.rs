//! Engine configuration: a TOML file overridden by flags, echoed verbatim
//! into every report so runs are reproducible from the report alone.
//! Secrets never appear here; remote backends name an environment variable.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use covr_core::backend::{
    Granularity, HttpBackend, LmmBackend, MockBackend, RemoteConfig, SamplingParams,
};
use covr_core::lexicon::{load_category_dict, WeightingScheme};
use covr_core::pooling::{PoolingKind, PoolingStrategy};
use covr_core::reasoner::ReasonerOptions;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendConfig {
    Mock {
        #[serde(default = "default_seed")]
        seed: u64,
        /// JSON fixture table (descriptions, traces, targets, refinements).
        #[serde(default)]
        fixtures: Option<PathBuf>,
    },
    Remote {
        endpoint: String,
        model: String,
        #[serde(default = "default_auth_env")]
        auth_env: String,
        #[serde(default)]
        embed_endpoint: Option<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

fn default_seed() -> u64 {
    7
}

fn default_auth_env() -> String {
    "COVR_BACKEND_TOKEN".to_string()
}

fn default_timeout() -> u64 {
    120
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Mock {
            seed: default_seed(),
            fixtures: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct StageSampling {
    pub trace: SamplingParams,
    pub target: SamplingParams,
    pub describe: SamplingParams,
}

impl Default for StageSampling {
    fn default() -> Self {
        Self {
            trace: SamplingParams::trace_defaults(),
            target: SamplingParams::target_defaults(),
            describe: SamplingParams::describe_defaults(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub layer_selector: String,
    pub strategy: PoolingKind,
    /// Category dictionary file; the bundled lexicon when unset.
    pub scheme_path: Option<PathBuf>,
    /// Caps the trace-stage max_tokens at 15/45/89/186.
    pub granularity: Granularity,
    pub refinement_rounds: u32,
    pub parallelism: usize,
    pub strict: bool,
    pub backend: BackendConfig,
    pub sampling: StageSampling,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            layer_selector: "final".to_string(),
            strategy: PoolingKind::Weighted,
            scheme_path: None,
            granularity: Granularity::default(),
            refinement_rounds: 0,
            parallelism: 1,
            strict: false,
            backend: BackendConfig::default(),
            sampling: StageSampling::default(),
        }
    }
}

/// Flag-level overrides applied on top of the config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigOverrides {
    /// Config file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Backend override: `mock`, `mock:<seed>`, or `remote:<endpoint>,<model>`.
    #[arg(long, global = true)]
    pub backend: Option<String>,
    /// Mock fixture file override.
    #[arg(long, global = true)]
    pub fixtures: Option<PathBuf>,
    /// Category dictionary file.
    #[arg(long, global = true)]
    pub scheme: Option<PathBuf>,
    /// Trace verbosity preset: minimal, compact, standard, verbose.
    #[arg(long, global = true)]
    pub granularity: Option<String>,
    /// Iterative refinement rounds (0 = single pass).
    #[arg(long, global = true)]
    pub refine: Option<u32>,
    /// Hard-fail on unparseable reasoning traces.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Parallel describe calls during gallery encoding.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
}

impl EngineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: EngineConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(config)
    }

    /// Applies a per-command `--strategy` override.
    pub fn override_strategy(&mut self, strategy: Option<&str>) -> Result<()> {
        if let Some(s) = strategy {
            self.strategy = s.parse::<PoolingKind>().map_err(anyhow::Error::msg)?;
        }
        Ok(())
    }

    /// File config (or defaults) with flag overrides folded in.
    pub fn resolve(overrides: &ConfigOverrides) -> Result<Self> {
        let mut config = match &overrides.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        if let Some(backend) = &overrides.backend {
            config.backend = parse_backend_flag(backend)?;
        }
        if let Some(fixtures) = &overrides.fixtures {
            match &mut config.backend {
                BackendConfig::Mock { fixtures: slot, .. } => *slot = Some(fixtures.clone()),
                BackendConfig::Remote { .. } => {
                    bail!("--fixtures only applies to the mock backend")
                }
            }
        }
        if let Some(scheme) = &overrides.scheme {
            config.scheme_path = Some(scheme.clone());
        }
        if let Some(granularity) = &overrides.granularity {
            config.granularity = granularity
                .parse::<Granularity>()
                .map_err(anyhow::Error::msg)?;
        }
        if let Some(rounds) = overrides.refine {
            config.refinement_rounds = rounds;
        }
        if overrides.strict {
            config.strict = true;
        }
        if let Some(parallelism) = overrides.parallelism {
            if parallelism == 0 {
                bail!("--parallelism must be at least 1");
            }
            config.parallelism = parallelism;
        }
        Ok(config)
    }

    pub fn build_backend(&self) -> Result<Box<dyn LmmBackend>> {
        match &self.backend {
            BackendConfig::Mock { seed, fixtures } => {
                let mock = match fixtures {
                    Some(path) => {
                        let json = std::fs::read_to_string(path)
                            .with_context(|| format!("reading fixtures {}", path.display()))?;
                        MockBackend::from_fixture_json(&json, *seed)
                            .map_err(|e| anyhow::anyhow!("{e}"))?
                    }
                    None => MockBackend::new(*seed),
                };
                Ok(Box::new(mock.with_layer_selector(&self.layer_selector)))
            }
            BackendConfig::Remote {
                endpoint,
                model,
                auth_env,
                embed_endpoint,
                timeout_secs,
            } => {
                let backend = HttpBackend::new(RemoteConfig {
                    endpoint: endpoint.clone(),
                    model: model.clone(),
                    auth_env: auth_env.clone(),
                    layer_selector: self.layer_selector.clone(),
                    embed_endpoint: embed_endpoint.clone(),
                    timeout_secs: *timeout_secs,
                })
                .map_err(|e| anyhow::anyhow!("{e}"))?;
                Ok(Box::new(backend))
            }
        }
    }

    pub fn load_scheme(&self) -> Result<WeightingScheme> {
        match &self.scheme_path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading scheme {}", path.display()))?;
                load_category_dict(&text).map_err(|e| anyhow::anyhow!("{e}"))
            }
            None => Ok(WeightingScheme::default_scheme()),
        }
    }

    pub fn build_strategy(&self) -> Result<PoolingStrategy> {
        self.build_strategy_for(self.strategy)
    }

    pub fn build_strategy_for(&self, kind: PoolingKind) -> Result<PoolingStrategy> {
        Ok(kind.to_strategy(&self.load_scheme()?))
    }

    /// Query-side options with the granularity cap applied to the trace
    /// stage.
    pub fn reasoner_options(&self) -> ReasonerOptions {
        ReasonerOptions {
            trace_params: self
                .sampling
                .trace
                .with_max_tokens(self.granularity.trace_token_budget()),
            target_params: self.sampling.target,
            strict: self.strict,
        }
    }
}

fn parse_backend_flag(flag: &str) -> Result<BackendConfig> {
    if flag == "mock" {
        return Ok(BackendConfig::Mock {
            seed: default_seed(),
            fixtures: None,
        });
    }
    if let Some(seed) = flag.strip_prefix("mock:") {
        return Ok(BackendConfig::Mock {
            seed: seed.parse().context("mock seed must be an integer")?,
            fixtures: None,
        });
    }
    if let Some(rest) = flag.strip_prefix("remote:") {
        let (endpoint, model) = rest
            .split_once(',')
            .context("remote backend flag needs `remote:<endpoint>,<model>`")?;
        return Ok(BackendConfig::Remote {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            auth_env: default_auth_env(),
            embed_endpoint: None,
            timeout_secs: default_timeout(),
        });
    }
    bail!("unknown backend flag '{flag}' (expected mock, mock:<seed>, or remote:<endpoint>,<model>)")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_configuration() {
        let config = EngineConfig::default();
        assert_eq!(config.strategy, PoolingKind::Weighted);
        assert_eq!(config.granularity, Granularity::Standard);
        assert_eq!(config.refinement_rounds, 0);
        let opts = config.reasoner_options();
        assert_eq!(opts.trace_params.temperature, 0.8);
        // Standard granularity caps the trace budget at 89.
        assert_eq!(opts.trace_params.max_tokens, 89);
        assert_eq!(opts.target_params.max_tokens, 256);
    }

    #[test]
    fn toml_round_trip() {
        let config = EngineConfig::default();
        let text = toml::to_string(&config).unwrap();
        let back: EngineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.strategy, config.strategy);
    }

    #[test]
    fn backend_flag_parsing() {
        assert!(matches!(
            parse_backend_flag("mock:42").unwrap(),
            BackendConfig::Mock { seed: 42, .. }
        ));
        assert!(matches!(
            parse_backend_flag("remote:http://h:1,my-model").unwrap(),
            BackendConfig::Remote { .. }
        ));
        assert!(parse_backend_flag("banana").is_err());
    }
}
