//! Issue-specific fault generation: prompt the model for a mutated class,
//! validate the delimited mutant regions, and gate each candidate on
//! "builds and survives the existing tests".

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    materialize_workspace, run_build, run_tests, ClassUnderTest, Overlay, RunOutcome, TargetAdapter, TestRunResult,
    Variant,
};
use crate::llm::{extract_fenced_code, render, Gateway, LlmError, PromptTemplate, RenderedPrompt};

pub const MUTANT_START: &str = "MUTANT <START>";
pub const MUTANT_END: &str = "MUTANT <END>";

#[derive(Debug, Error)]
pub enum MutagenError {
    #[error("response contains no fenced code block")]
    NoCodeBlock,
    #[error("invalid issue spec: {0}")]
    InvalidIssue(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// The concern being hardened against and example faults that illustrate it.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssueSpec {
    pub label: String,
    pub concern_context: String,
    pub example_diffs: Vec<String>,
}

impl IssueSpec {
    pub fn validate(&self) -> Result<(), MutagenError> {
        if self.concern_context.trim().is_empty() {
            return Err(MutagenError::InvalidIssue("concern_context is empty".into()));
        }
        if self.example_diffs.is_empty() {
            return Err(MutagenError::InvalidIssue("at least one example diff is required".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, MutagenError> {
        let text = fs::read_to_string(path)
            .map_err(|e| MutagenError::InvalidIssue(format!("{}: {e}", path.display())))?;
        let issue: IssueSpec =
            toml::from_str(&text).map_err(|e| MutagenError::InvalidIssue(format!("{}: {e}", path.display())))?;
        issue.validate()?;
        Ok(issue)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MutantStatus {
    Generated,
    MarkerInvalid,
    BuildFailed,
    KilledByExistingTests,
    BuildsAndPasses,
}

/// Lines between a `MUTANT <START>` / `MUTANT <END>` pair, 1-based and
/// inclusive, marker lines excluded. A region that deletes code has
/// `end == start - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantRegion {
    pub start: usize,
    pub end: usize,
}

impl MutantRegion {
    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }
}

/// One whole mutated version of a class; it may carry several regions and
/// is killed or survives as a unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutantCandidate {
    pub mutant_id: String,
    pub class_id: String,
    pub mutated_source: String,
    pub regions: Vec<MutantRegion>,
    pub status: MutantStatus,
    /// Digest of the request that produced it.
    pub provenance: Option<String>,
    /// Why the candidate is invalid, or what went wrong while gating it.
    pub note: Option<String>,
}

fn marker_kind(line: &str) -> Option<bool> {
    let body = line.trim().strip_prefix("//")?.trim_start();
    if body.starts_with(MUTANT_START) {
        Some(true)
    } else if body.starts_with(MUTANT_END) {
        Some(false)
    } else {
        None
    }
}

impl MutantCandidate {
    /// The mutated source with the marker comment lines removed.
    pub fn code_without_markers(&self) -> String {
        self.mutated_source
            .split_inclusive('\n')
            .filter(|l| marker_kind(l).is_none())
            .collect()
    }

    /// Region contents, for display.
    pub fn region_excerpts(&self) -> Vec<(MutantRegion, String)> {
        let lines: Vec<&str> = self.mutated_source.lines().collect();
        self.regions
            .iter()
            .map(|r| {
                let text = if r.is_empty() { String::new() } else { lines[r.start - 1..r.end].join("\n") };
                (*r, text)
            })
            .collect()
    }
}

pub fn build_fault_prompt(issue: &IssueSpec, cut: &ClassUnderTest, diff: &str) -> Result<RenderedPrompt, LlmError> {
    let mut bindings = BTreeMap::new();
    bindings.insert("context_about_concern", issue.concern_context.as_str());
    bindings.insert("class_under_test", cut.source_text.as_str());
    bindings.insert("existing_test_class", cut.test_class_text.as_str());
    bindings.insert("diff", diff);
    let text = render(&PromptTemplate::make_fault(), &bindings)?;
    let mut warnings = Vec::new();
    if !cut.has_tests() {
        warnings.push(format!("class {} has an empty test class", cut.id));
    }
    Ok(RenderedPrompt { text, warnings })
}

fn normalise_line(line: &str) -> String {
    line.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Checks that everything outside the regions matches the original (modulo
/// whitespace and blank lines): the outside segments must appear in the
/// original in order, anchored at both ends.
fn outside_matches_original(original: &str, segments: &[Vec<String>]) -> bool {
    let orig: Vec<String> = original.lines().map(normalise_line).filter(|l| !l.is_empty()).collect();
    let (first, rest) = match segments.split_first() {
        Some(x) => x,
        None => return true,
    };
    let (last, middle) = match rest.split_last() {
        Some(x) => x,
        None => return *first == orig,
    };
    if first.len() + last.len() > orig.len() || !orig.starts_with(first) || !orig.ends_with(last) {
        return false;
    }
    let mut pos = first.len();
    let limit = orig.len() - last.len();
    for seg in middle {
        if seg.is_empty() {
            continue;
        }
        let window = &orig[pos..limit];
        match window.windows(seg.len()).position(|w| w == seg.as_slice()) {
            Some(at) => pos += at + seg.len(),
            None => return false,
        }
    }
    true
}

/// Takes the first fenced block of a MakeFault response as the mutated class
/// and locates its marker pairs.
pub fn parse_mutant(
    response: &str,
    original: &ClassUnderTest,
    mutant_id: &str,
    provenance: Option<String>,
) -> Result<MutantCandidate, MutagenError> {
    let block = extract_fenced_code(response).into_iter().next().ok_or(MutagenError::NoCodeBlock)?;
    let mut source = block.text;
    if original.source_text.ends_with('\n') && !source.ends_with('\n') {
        source.push('\n');
    }

    let mut candidate = MutantCandidate {
        mutant_id: mutant_id.to_string(),
        class_id: original.id.clone(),
        mutated_source: source,
        regions: Vec::new(),
        status: MutantStatus::Generated,
        provenance,
        note: None,
    };
    let invalid = |mut c: MutantCandidate, why: &str| {
        c.status = MutantStatus::MarkerInvalid;
        c.regions.clear();
        c.note = Some(why.to_string());
        c
    };

    let mut regions = Vec::new();
    let mut segments: Vec<Vec<String>> = vec![Vec::new()];
    let mut open: Option<usize> = None;
    for (idx, line) in candidate.mutated_source.lines().enumerate() {
        let lineno = idx + 1;
        match (marker_kind(line), open) {
            (Some(true), Some(_)) => return Ok(invalid(candidate, "nested MUTANT <START>")),
            (Some(true), None) => open = Some(lineno),
            (Some(false), None) => return Ok(invalid(candidate, "MUTANT <END> without <START>")),
            (Some(false), Some(start)) => {
                regions.push(MutantRegion { start: start + 1, end: lineno - 1 });
                segments.push(Vec::new());
                open = None;
            }
            (None, None) => {
                let n = normalise_line(line);
                if !n.is_empty() {
                    segments.last_mut().expect("at least one segment").push(n);
                }
            }
            (None, Some(_)) => {}
        }
    }
    if open.is_some() {
        return Ok(invalid(candidate, "MUTANT <START> without <END>"));
    }
    if regions.is_empty() {
        return Ok(invalid(candidate, "no MUTANT markers"));
    }
    if !outside_matches_original(&original.source_text, &segments) {
        return Ok(invalid(candidate, "code outside the markers differs from the original"));
    }
    candidate.regions = regions;
    Ok(candidate)
}

/// A gated candidate with the evidence for its status.
#[derive(Debug, Clone)]
pub struct MutantGateOutcome {
    pub candidate: MutantCandidate,
    pub build_result: Option<TestRunResult>,
    pub existing_test_result: Option<TestRunResult>,
}

/// Builds the mutant in a private workspace and runs the existing suite on it.
pub fn gate_candidate(
    mut candidate: MutantCandidate,
    cut: &ClassUnderTest,
    corpus_root: &Path,
    adapter: &TargetAdapter,
) -> MutantGateOutcome {
    if candidate.status != MutantStatus::Generated {
        return MutantGateOutcome { candidate, build_result: None, existing_test_result: None };
    }
    let fail = |mut c: MutantCandidate, cause: String, build: Option<TestRunResult>| {
        c.status = MutantStatus::BuildFailed;
        c.note = Some(cause);
        MutantGateOutcome { candidate: c, build_result: build, existing_test_result: None }
    };

    let ws = match materialize_workspace(
        corpus_root,
        cut,
        Variant::Mutated(candidate.mutant_id.clone()),
        Overlay::mutant(cut, candidate.mutated_source.clone()),
    ) {
        Ok(ws) => ws,
        Err(e) => return fail(candidate, e.to_string(), None),
    };
    let build = match run_build(&ws, adapter) {
        Ok(b) => b,
        Err(e) => return fail(candidate, e.to_string(), None),
    };
    match build.outcome {
        RunOutcome::AllPassed => {}
        RunOutcome::Timeout => return fail(candidate, "build timed out".into(), Some(build)),
        _ => return fail(candidate, "build failed".into(), Some(build)),
    }
    let tests = match run_tests(&ws, adapter) {
        Ok(t) => t,
        Err(e) => return fail(candidate, e.to_string(), Some(build)),
    };
    candidate.status = match tests.outcome {
        RunOutcome::AllPassed => MutantStatus::BuildsAndPasses,
        RunOutcome::Timeout => {
            candidate.note = Some("existing tests timed out".into());
            MutantStatus::KilledByExistingTests
        }
        _ => MutantStatus::KilledByExistingTests,
    };
    MutantGateOutcome { candidate, build_result: Some(build), existing_test_result: Some(tests) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarvestConfig {
    /// Generation attempts per class.
    pub budget: usize,
    /// Consecutive samples drawn per example diff before moving to the next.
    pub completions_per_prompt: usize,
    pub stop_on_first_survivor: bool,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        Self { budget: 3, completions_per_prompt: 1, stop_on_first_survivor: true }
    }
}

#[derive(Debug, Clone)]
pub struct Harvest {
    pub outcomes: Vec<MutantGateOutcome>,
    /// The run-wide request budget ran out before this class finished.
    pub budget_exhausted: bool,
}

impl Harvest {
    pub fn survivors(&self) -> impl Iterator<Item = &MutantCandidate> {
        self.outcomes
            .iter()
            .map(|o| &o.candidate)
            .filter(|c| c.status == MutantStatus::BuildsAndPasses)
    }
}

pub fn mutant_id(class_id: &str, attempt: usize) -> String {
    format!("{class_id}-m{attempt}")
}

/// Generates and gates up to `cfg.budget` mutants for one class, rotating
/// through the issue's example diffs. With `stop_on_first_survivor` the class
/// is done as soon as one mutant builds and passes.
pub fn harvest_class(
    issue: &IssueSpec,
    cut: &ClassUnderTest,
    corpus_root: &Path,
    adapter: &TargetAdapter,
    gateway: &Gateway,
    cfg: &HarvestConfig,
) -> Result<Harvest, MutagenError> {
    issue.validate()?;
    if cfg.budget == 0 {
        return Err(MutagenError::InvalidIssue("mutant budget must be at least 1".into()));
    }
    let per_prompt = cfg.completions_per_prompt.max(1);
    let mut outcomes = Vec::new();
    for attempt in 0..cfg.budget {
        let diff = &issue.example_diffs[(attempt / per_prompt) % issue.example_diffs.len()];
        let prompt = build_fault_prompt(issue, cut, diff)?;
        for w in &prompt.warnings {
            log::warn!("{w}");
        }
        let response = match gateway.ask(&prompt.text) {
            Ok(r) => r,
            Err(LlmError::BudgetExceeded { .. }) => return Ok(Harvest { outcomes, budget_exhausted: true }),
            Err(e) => return Err(e.into()),
        };
        let id = mutant_id(&cut.id, attempt + 1);
        let candidate = match parse_mutant(&response, cut, &id, None) {
            Ok(c) => c,
            Err(MutagenError::NoCodeBlock) => MutantCandidate {
                mutant_id: id,
                class_id: cut.id.clone(),
                mutated_source: String::new(),
                regions: Vec::new(),
                status: MutantStatus::MarkerInvalid,
                provenance: None,
                note: Some("response contains no fenced code block".into()),
            },
            Err(e) => return Err(e),
        };
        let outcome = gate_candidate(candidate, cut, corpus_root, adapter);
        log::info!("{}: {:?}", outcome.candidate.mutant_id, outcome.candidate.status);
        let survived = outcome.candidate.status == MutantStatus::BuildsAndPasses;
        outcomes.push(outcome);
        if survived && cfg.stop_on_first_survivor {
            break;
        }
    }
    Ok(Harvest { outcomes, budget_exhausted: false })
}
