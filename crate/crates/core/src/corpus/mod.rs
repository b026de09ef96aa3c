//! Classes under test, isolated workspaces, and the adapter contract used to
//! build, test and measure them.

mod adapter;
mod coverage;
mod manifest;
mod runner;
mod workspace;

use std::path::PathBuf;

use thiserror::Error;

pub use adapter::{
    AdapterSpec, CommandTemplate, CommentGrammar, CommentSpec, TargetAdapter, TestFileConvention,
    DEFAULT_TEST_METHOD_PATTERN, DEFAULT_TIMEOUT, WORKSPACE_PLACEHOLDER,
};
pub use coverage::{parse_coverage_report, CoverageMap, COVERAGE_FILE};
pub use manifest::{discover_targets, ClassUnderTest, Corpus};
pub use runner::{
    measure_line_coverage, parse_test_results, run_build, run_tests, RunOutcome, TestRunResult,
    TEST_RESULTS_FILE,
};
pub use workspace::{materialize_workspace, tree_digest, Overlay, Variant, Workspace, OUTPUT_MARKER};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed manifest {path}: {reason}")]
    ManifestMalformed { path: PathBuf, reason: String },
    #[error("source files missing: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    SourceMissing(Vec<PathBuf>),
    #[error("invalid adapter: {0}")]
    InvalidAdapter(String),
    #[error("could not spawn `{command}`: {source}")]
    AdapterSpawnFailure {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("test command wrote no {}", TEST_RESULTS_FILE)]
    ResultFileMissing,
    #[error("malformed test result file: {0}")]
    ResultFileMalformed(String),
    #[error("adapter has no coverage command")]
    CoverageUnsupported,
    #[error("malformed coverage report: {0}")]
    ReportMalformed(String),
    #[error("invalid overlay path {0}")]
    InvalidOverlay(PathBuf),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}
