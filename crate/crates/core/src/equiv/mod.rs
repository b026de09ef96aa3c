//! Equivalent-mutant screening and detector evaluation.

mod normalize;
mod score;
mod screen;

use thiserror::Error;

pub use normalize::{strip_comments, NormalizedForm};
pub use score::{
    format_ratio, load_labels, round2, score, ConfusionMatrix, EvalMode, Label, LabelRecord, Score,
};
pub use screen::{identity_stage, screen, Decision, EquivalenceVerdict, Stage};

#[derive(Debug, Error)]
pub enum EquivError {
    #[error("no verdicts to score")]
    EmptyInput,
    #[error("every verdict was excluded under {0:?}")]
    EmptyAfterExclusion(EvalMode),
    #[error("labels: {0}")]
    Labels(String),
}
