//! Run configuration: where the corpus and issue live, how to drive the
//! target toolchain and the model, and the per-stage budgets.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::corpus::{AdapterSpec, TargetAdapter};
use crate::llm::{CompletionBackend, DecodingParams, Gateway, GatewayMode, HttpBackend, LlmError};
use crate::mutagen::HarvestConfig;
use crate::testgen::HardenConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    #[serde(default = "default_mode")]
    pub mode: GatewayMode,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    /// Name of the environment variable holding the bearer token.
    pub token_env: Option<String>,
    pub transcript: Option<PathBuf>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    /// Total completion requests allowed per invocation.
    pub request_cap: Option<usize>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_mode() -> GatewayMode {
    GatewayMode::Replay
}
fn default_temperature() -> f64 {
    DecodingParams::default().temperature
}
fn default_max_tokens() -> u32 {
    DecodingParams::default().max_tokens
}
fn default_in_flight() -> usize {
    4
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            endpoint: None,
            model: None,
            token_env: None,
            transcript: None,
            temperature: default_temperature(),
            max_tokens: default_max_tokens(),
            request_cap: None,
            max_in_flight: default_in_flight(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    pub mutants_per_class: usize,
    pub completions_per_prompt: usize,
    pub stop_on_first_survivor: bool,
    pub retries: usize,
    pub repeats: usize,
    /// Whether mutants the judge could not decide still get tests generated.
    pub gentest_on_no_answer: bool,
}

impl Default for Budgets {
    fn default() -> Self {
        let h = HarvestConfig::default();
        let t = HardenConfig::default();
        Self {
            mutants_per_class: h.budget,
            completions_per_prompt: h.completions_per_prompt,
            stop_on_first_survivor: h.stop_on_first_survivor,
            retries: t.retries,
            repeats: t.repeats,
            gentest_on_no_answer: true,
        }
    }
}

impl Budgets {
    pub fn harvest(&self) -> HarvestConfig {
        HarvestConfig {
            budget: self.mutants_per_class,
            completions_per_prompt: self.completions_per_prompt,
            stop_on_first_survivor: self.stop_on_first_survivor,
        }
    }

    pub fn harden(&self) -> HardenConfig {
        HardenConfig { retries: self.retries, repeats: self.repeats }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    corpus: PathBuf,
    issue: PathBuf,
    #[serde(default = "default_output")]
    output: PathBuf,
    #[serde(default = "default_workers")]
    workers: usize,
    adapter: AdapterSpec,
    #[serde(default)]
    llm: LlmConfig,
    #[serde(default)]
    budgets: Budgets,
}

fn default_output() -> PathBuf {
    PathBuf::from("hardener-out")
}
fn default_workers() -> usize {
    1
}

/// A loaded configuration. Relative paths are resolved against the directory
/// holding the config file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus_manifest: PathBuf,
    pub issue: PathBuf,
    pub output: PathBuf,
    pub workers: usize,
    pub adapter: TargetAdapter,
    pub llm: LlmConfig,
    pub budgets: Budgets,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let raw: RawConfig = toml::from_str(&text)
            .map_err(|e| ConfigError::Malformed { path: path.into(), reason: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let adapter = TargetAdapter::try_from(raw.adapter)
            .map_err(|e| ConfigError::Malformed { path: path.into(), reason: e.to_string() })?;
        let mut llm = raw.llm;
        llm.transcript = llm.transcript.map(resolve);
        Ok(Self {
            corpus_manifest: resolve(raw.corpus),
            issue: resolve(raw.issue),
            output: resolve(raw.output),
            workers: raw.workers,
            adapter,
            llm,
            budgets: raw.budgets,
        })
    }

    /// Checks the invariants that depend on the (possibly overridden) mode
    /// and budgets.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let llm = &self.llm;
        match llm.mode {
            GatewayMode::Replay if llm.transcript.is_none() => {
                return Err(ConfigError::Invalid("replay mode requires llm.transcript".into()))
            }
            GatewayMode::Live | GatewayMode::Record if llm.endpoint.as_deref().is_none_or(str::is_empty) => {
                return Err(ConfigError::Invalid(format!(
                    "{} mode requires llm.endpoint",
                    mode_name(llm.mode)
                )))
            }
            GatewayMode::Record if llm.transcript.is_none() => {
                return Err(ConfigError::Invalid("record mode requires llm.transcript".into()))
            }
            _ => {}
        }
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        let b = &self.budgets;
        for (name, v) in [
            ("budgets.mutants_per_class", b.mutants_per_class),
            ("budgets.completions_per_prompt", b.completions_per_prompt),
            ("budgets.retries", b.retries),
            ("budgets.repeats", b.repeats),
        ] {
            if v == 0 {
                return Err(ConfigError::Invalid(format!("{name} must be at least 1")));
            }
        }
        if !(0.0..=2.0).contains(&llm.temperature) {
            return Err(ConfigError::Invalid("llm.temperature must be within [0, 2]".into()));
        }
        Ok(())
    }

    pub fn decoding_params(&self) -> DecodingParams {
        DecodingParams { temperature: self.llm.temperature, max_tokens: self.llm.max_tokens }
    }

    /// Builds the gateway for this run. The bearer token, if any, is read
    /// from the environment variable named by `llm.token_env`.
    pub fn gateway(&self) -> Result<Gateway, ConfigError> {
        self.validate()?;
        let llm = &self.llm;
        let backend: Option<Arc<dyn CompletionBackend>> = match llm.mode {
            GatewayMode::Replay => None,
            GatewayMode::Live | GatewayMode::Record => {
                let token = match &llm.token_env {
                    Some(var) => Some(std::env::var(var).map_err(|_| {
                        ConfigError::Invalid(format!("environment variable {var} (llm.token_env) is not set"))
                    })?),
                    None => None,
                };
                let endpoint = llm.endpoint.clone().unwrap_or_default();
                let model = llm.model.clone().unwrap_or_default();
                let http = HttpBackend::new(endpoint, model, token)
                    .map_err(|e| ConfigError::Llm(LlmError::BackendUnavailable(e.to_string())))?;
                Some(Arc::new(http))
            }
        };
        Ok(Gateway::new(llm.mode, backend, llm.transcript.as_deref())?
            .with_params(self.decoding_params())
            .with_cap(llm.request_cap)
            .with_in_flight_limit(llm.max_in_flight))
    }
}

fn mode_name(mode: GatewayMode) -> &'static str {
    match mode {
        GatewayMode::Live => "live",
        GatewayMode::Record => "record",
        GatewayMode::Replay => "replay",
    }
}
