//! Scenario configuration: the TOML schema, the four named presets, and
//! the flag > environment > file override chain.

use std::fmt;
use std::path::{Path, PathBuf};

use ecr_core::channel::{DetectionParams, MeasurementModel};
use ecr_core::metric::Phase;
use ecr_core::prover::{BitSourceSpec, BitStream, MeasureRequest, Strategy};
use ecr_core::verifier::SelectionPolicy;
use serde::{Deserialize, Serialize};

/// Environment variable overriding the configured seed.
pub const ENV_SEED: &str = "ECR_SEED";
/// Environment variable overriding the wire endpoint address (listen
/// address for the verifier, connect address for the prover).
pub const ENV_BIND: &str = "ECR_BIND";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: Box<toml::de::Error>,
    },
    #[error("unknown preset {0:?} (expected one of {names})", names = PRESET_NAMES.join(", "))]
    UnknownPreset(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid {ENV_SEED} value {0:?}: expected an unsigned integer")]
    BadSeedEnv(String),
}

/// How the two protocol parties talk to each other.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Transport {
    /// Verifier and prover share one process; no serialization.
    #[default]
    InProcess,
    /// Full wire protocol over a loopback byte stream.
    Stream,
}

impl fmt::Display for Transport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transport::InProcess => f.write_str("in-process"),
            Transport::Stream => f.write_str("stream"),
        }
    }
}

/// Declarative prover strategy, as written in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StrategySpec {
    /// Never measures; answers from a fixed bit sequence.
    DeterministicSequence {
        #[serde(default = "BitSourceSpec::epi_identity")]
        source: BitSourceSpec,
    },
    /// Measures the detection basis at a fixed readout phase and maps
    /// outcome x to (φ + x) mod 2; null outcomes fall back to a bit
    /// sequence.
    MeasureAndMap {
        phi: f64,
        #[serde(default = "BitSourceSpec::epi_identity")]
        fallback: BitSourceSpec,
    },
    /// Measures a projective readout and applies an explicit
    /// outcome→estimate map.
    GeneralEstimator {
        contrast: f64,
        phi: f64,
        map: ecr_core::oracles::EstimatorMap,
    },
}

/// Output artifact paths. Every one is optional; what is configured gets
/// written.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct OutputPaths {
    /// Scored round log, one JSON record per line after a header line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds_log: Option<PathBuf>,
    /// Running-statistics table (CSV) for plotting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<PathBuf>,
    /// Certification report document (JSON).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

fn default_rounds() -> u64 {
    1000
}

fn default_k_sigma() -> f64 {
    5.0
}

fn default_timeout_secs() -> u64 {
    30
}

/// One fully specified run: who draws the phases, what the channel does,
/// how the prover plays, and where the artifacts go.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_rounds")]
    pub rounds: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k_sigma")]
    pub k_sigma: f64,
    #[serde(default)]
    pub transport: Transport,
    /// Per-read deadline on the wire, in seconds.
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    pub policy: SelectionPolicy,
    pub strategy: StrategySpec,
    pub channel: DetectionParams,
    #[serde(default)]
    pub output: OutputPaths,
}

pub const PRESET_NAMES: [&str; 4] = [
    "deterministic-epi",
    "low-fidelity",
    "high-fidelity",
    "ideal",
];

/// The four built-in scenarios. All use the six-point round-robin phase
/// schedule at 5σ; they differ in the channel quality and in whether the
/// prover measures at all.
pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let (channel, strategy) = match name {
        "deterministic-epi" => (
            DetectionParams::new(1.0, 0.0),
            StrategySpec::DeterministicSequence {
                source: BitSourceSpec::epi_identity(),
            },
        ),
        "low-fidelity" => (
            DetectionParams::new(0.01, 0.04),
            StrategySpec::MeasureAndMap {
                phi: 0.0,
                fallback: BitSourceSpec::epi_identity(),
            },
        ),
        "high-fidelity" => (
            DetectionParams::new(0.52, 0.09),
            StrategySpec::MeasureAndMap {
                phi: 0.0,
                fallback: BitSourceSpec::epi_identity(),
            },
        ),
        "ideal" => (
            DetectionParams::new(1.0, 0.0),
            StrategySpec::MeasureAndMap {
                phi: 0.0,
                fallback: BitSourceSpec::epi_identity(),
            },
        ),
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    };
    Ok(ScenarioConfig {
        rounds: default_rounds(),
        seed: 0,
        k_sigma: default_k_sigma(),
        transport: Transport::InProcess,
        timeout_secs: default_timeout_secs(),
        policy: SelectionPolicy::RoundRobinGrid { n: 6, epsilon: 0.0 },
        strategy,
        channel: channel.expect("preset channel parameters are valid"),
        output: OutputPaths::default(),
    })
}

/// Command-line overrides, applied last (flag > environment > file).
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub rounds: Option<u64>,
    pub seed: Option<u64>,
    pub k_sigma: Option<f64>,
    pub transport: Option<Transport>,
    pub timeout_secs: Option<u64>,
    pub rounds_log: Option<PathBuf>,
    pub curve: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<ScenarioConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let config: ScenarioConfig =
            toml::from_str(&text).map_err(|source| ConfigError::Parse {
                path: path.to_path_buf(),
                source: Box::new(source),
            })?;
        config.validate()?;
        Ok(config)
    }

    /// Resolve the scenario from `--preset`/`--config`, then apply the
    /// environment and the explicit flag overrides, then re-validate.
    pub fn resolve(
        preset_name: Option<&str>,
        config_path: Option<&Path>,
        overrides: &Overrides,
    ) -> Result<ScenarioConfig, ConfigError> {
        let mut config = match (preset_name, config_path) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid(
                    "--preset and --config are mutually exclusive".into(),
                ))
            }
            (Some(name), None) => preset(name)?,
            (None, Some(path)) => ScenarioConfig::load(path)?,
            (None, None) => {
                return Err(ConfigError::Invalid(
                    "either --preset or --config is required".into(),
                ))
            }
        };
        if let Some(text) = read_env(ENV_SEED) {
            config.seed = text
                .parse::<u64>()
                .map_err(|_| ConfigError::BadSeedEnv(text))?;
        }
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.rounds {
            self.rounds = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.k_sigma {
            self.k_sigma = v;
        }
        if let Some(v) = o.transport {
            self.transport = v;
        }
        if let Some(v) = o.timeout_secs {
            self.timeout_secs = v;
        }
        if let Some(v) = &o.rounds_log {
            self.output.rounds_log = Some(v.clone());
        }
        if let Some(v) = &o.curve {
            self.output.curve = Some(v.clone());
        }
        if let Some(v) = &o.report {
            self.output.report = Some(v.clone());
        }
    }

    /// Check every referenced parameter constraint before anything runs,
    /// naming the violated invariant.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.rounds == 0 {
            return Err(ConfigError::Invalid(
                "rounds must be at least 1".into(),
            ));
        }
        if !self.k_sigma.is_finite() || self.k_sigma <= 0.0 {
            return Err(ConfigError::Invalid(format!(
                "k-sigma must be a positive real, got {}",
                self.k_sigma
            )));
        }
        if self.timeout_secs == 0 {
            return Err(ConfigError::Invalid(
                "timeout-secs must be at least 1".into(),
            ));
        }
        self.policy
            .prior_spec()
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("policy: {e}")))?;
        // Building the strategy exercises the remaining invariants
        // (phases finite, contrast in range, bit sources well-formed).
        self.build_strategy()?;
        Ok(())
    }

    /// Instantiate the runnable prover strategy this config describes.
    ///
    /// The measure-and-map prover models the channel with the configured
    /// `(a, b)` — public apparatus parameters, as opposed to the secret
    /// per-round phases.
    pub fn build_strategy(&self) -> Result<Strategy, ConfigError> {
        let wrap = |v: f64, what: &str| {
            Phase::wrap(v).map_err(|e| ConfigError::Invalid(format!("{what}: {e}")))
        };
        match &self.strategy {
            StrategySpec::DeterministicSequence { source } => Ok(Strategy::DeterministicSequence {
                bits: BitStream::new(source.clone())
                    .map_err(|e| ConfigError::Invalid(format!("strategy source: {e}")))?,
            }),
            StrategySpec::MeasureAndMap { phi, fallback } => {
                let model = MeasurementModel::new(
                    self.channel.a(),
                    self.channel.b(),
                    wrap(*phi, "strategy phi")?,
                )
                .map_err(|e| ConfigError::Invalid(format!("strategy: {e}")))?;
                Ok(Strategy::MeasureAndMap {
                    model,
                    fallback: BitStream::new(fallback.clone())
                        .map_err(|e| ConfigError::Invalid(format!("strategy fallback: {e}")))?,
                })
            }
            StrategySpec::GeneralEstimator { contrast, phi, map } => {
                let phi = wrap(*phi, "strategy phi")?;
                // Validate the contrast here so a bad config fails before
                // the first wire round rather than during it.
                ecr_core::channel::GeneralProjective::new(*contrast, phi)
                    .map_err(|e| ConfigError::Invalid(format!("strategy: {e}")))?;
                Ok(Strategy::GeneralEstimator {
                    request: MeasureRequest::Projective {
                        contrast: *contrast,
                        phi,
                    },
                    map: *map,
                })
            }
        }
    }
}

/// Resolve the wire endpoint: explicit flag, else `ECR_BIND`, else the
/// given default.
pub fn resolve_endpoint(flag: Option<&str>, default: &str) -> String {
    if let Some(addr) = flag {
        return addr.to_string();
    }
    read_env(ENV_BIND).unwrap_or_else(|| default.to_string())
}

fn read_env(name: &str) -> Option<String> {
    match std::env::var(name) {
        Ok(v) if !v.is_empty() => Some(v),
        _ => None,
    }
}
