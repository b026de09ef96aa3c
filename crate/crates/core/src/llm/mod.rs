//! Prompt rendering, completion exchange with record/replay transcripts, and
//! parsing of model responses.

mod backend;
mod extract;
mod gateway;
mod template;
mod transcript;

use std::path::PathBuf;

use thiserror::Error;

pub use backend::{BackendError, CompletionBackend, HttpBackend};
pub use extract::{extract_braced_token, extract_fenced_code, CodeBlock, JudgeAnswer, JudgeToken};
pub use gateway::{DecodingParams, Gateway, GatewayMode};
pub use template::{render, PromptTemplate, TemplateName};
pub use transcript::{request_digest, Exchange, TranscriptStore};

/// A rendered prompt plus anything noteworthy about its inputs (for
/// example an empty test class).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub text: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("template slot {{{0}}} has no binding")]
    UnboundPlaceholder(String),
    #[error("binding {0:?} matches no template slot")]
    UnknownPlaceholder(String),
    #[error("completion backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("no recorded response for request {digest} in replay transcript")]
    ReplayMiss { digest: String },
    #[error("request budget of {cap} completions exhausted")]
    BudgetExceeded { cap: usize },
    #[error("transcript {path}: {source}")]
    TranscriptIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("transcript {path} line {line}: {reason}")]
    TranscriptMalformed { path: PathBuf, line: usize, reason: String },
    #[error("gateway misconfigured: {0}")]
    Config(String),
}
