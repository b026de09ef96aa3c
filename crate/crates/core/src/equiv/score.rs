use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Decision, EquivError, EquivalenceVerdict, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Equivalent,
    NonEquivalent,
}

/// How verdicts are counted. Each mode widens the previous one:
///
/// * `UnsureExcluded` counts judge verdicts only and drops `NoAnswer`.
/// * `UnsureAsEquivalent` counts judge verdicts with `NoAnswer` as equivalent.
/// * `IdenticalIncluded` also credits byte-identical mutants as detected.
/// * `StripThenJudge` also credits mutants identical after comment stripping.
///
/// Identity-stage verdicts a mode does not credit are left out of its counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvalMode {
    UnsureExcluded,
    UnsureAsEquivalent,
    IdenticalIncluded,
    StripThenJudge,
}

impl EvalMode {
    pub const ALL: [EvalMode; 4] =
        [EvalMode::UnsureExcluded, EvalMode::UnsureAsEquivalent, EvalMode::IdenticalIncluded, EvalMode::StripThenJudge];

    pub fn describe(self) -> &'static str {
        match self {
            EvalMode::UnsureExcluded => "unsure not counted",
            EvalMode::UnsureAsEquivalent => "unsure counted as equivalent",
            EvalMode::IdenticalIncluded => "identical code counted as equivalent",
            EvalMode::StripThenJudge => "added comments stripped",
        }
    }
}

/// Counts with "equivalent" as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `None` when nothing was predicted equivalent.
    pub fn precision(&self) -> Option<f64> {
        let d = self.tp + self.fp;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    /// `None` when nothing is truly equivalent.
    pub fn recall(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    fn record(&mut self, predicted_equivalent: bool, label: Label) {
        match (predicted_equivalent, label) {
            (true, Label::Equivalent) => self.tp += 1,
            (true, Label::NonEquivalent) => self.fp += 1,
            (false, Label::NonEquivalent) => self.tn += 1,
            (false, Label::Equivalent) => self.fn_ += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub mode: EvalMode,
    pub matrix: ConfusionMatrix,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

impl Score {
    pub fn from_matrix(mode: EvalMode, matrix: ConfusionMatrix) -> Self {
        Self { mode, matrix, precision: matrix.precision(), recall: matrix.recall() }
    }
}

/// Rounds half away from zero to two decimals, the way the tables report.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn format_ratio(x: Option<f64>) -> String {
    x.map(|v| format!("{:.2}", round2(v))).unwrap_or_else(|| "n/a".into())
}

/// Whether `mode` counts the item, and if so whether it counts as a
/// predicted-equivalent.
fn prediction(verdict: &EquivalenceVerdict, mode: EvalMode) -> Option<bool> {
    match verdict.stage {
        Stage::ByteIdentity => matches!(mode, EvalMode::IdenticalIncluded | EvalMode::StripThenJudge).then_some(true),
        Stage::StrippedIdentity => (mode == EvalMode::StripThenJudge).then_some(true),
        Stage::Judge => match verdict.decision {
            Decision::Equivalent => Some(true),
            Decision::NonEquivalent => Some(false),
            Decision::NoAnswer if mode == EvalMode::UnsureExcluded => None,
            Decision::NoAnswer => Some(true),
        },
    }
}

pub fn score(items: &[(EquivalenceVerdict, Label)], mode: EvalMode) -> Result<Score, EquivError> {
    if items.is_empty() {
        return Err(EquivError::EmptyInput);
    }
    let mut matrix = ConfusionMatrix::default();
    for (verdict, label) in items {
        if let Some(predicted) = prediction(verdict, mode) {
            matrix.record(predicted, *label);
        }
    }
    if matrix.total() == 0 {
        return Err(EquivError::EmptyAfterExclusion(mode));
    }
    Ok(Score::from_matrix(mode, matrix))
}

/// One ground-truth record of a labelled evaluation corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub mutant_id: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn load_labels(path: &Path) -> Result<Vec<LabelRecord>, EquivError> {
    let text = fs::read_to_string(path).map_err(|e| EquivError::Labels(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| EquivError::Labels(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}
