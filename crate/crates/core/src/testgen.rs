//! Test generation against surviving mutants, and certification of each
//! generated test: it builds, passes repeatedly on the original code, and a
//! new test fails on the mutant.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    materialize_workspace, measure_line_coverage, run_build, run_tests, ClassUnderTest, CoverageMap, Overlay,
    RunOutcome, TargetAdapter, Variant, Workspace,
};
use crate::llm::{extract_fenced_code, render, Gateway, LlmError, PromptTemplate, RenderedPrompt};
use crate::mutagen::MutantCandidate;

#[derive(Debug, Error)]
pub enum TestgenError {
    #[error("response contains no fenced code block")]
    NoCodeBlock,
    #[error("extended test class declares no new tests")]
    NoNewTests,
    #[error("extended test class drops existing tests: {}", .missing.join(", "))]
    NotAnExtension { missing: Vec<String> },
    #[error("repeats must be at least 1")]
    ZeroRepeats,
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCandidate {
    pub candidate_id: String,
    pub mutant_id: String,
    pub extended_test_class: String,
    /// Test methods in the extension that the existing class lacks.
    pub new_test_names: Vec<String>,
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    BuildFailed { detail: String },
    /// A run on the original code failed (1-based run index).
    FlakyOrFailing { run: usize, failing: Vec<String> },
    DoesNotKill { detail: String },
    /// Existing tests failed on a mutant that previously survived them.
    StaleMutant { failing_existing: Vec<String> },
    AdapterError { detail: String },
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::BuildFailed { detail } => write!(f, "build failed: {detail}"),
            RejectReason::FlakyOrFailing { run, failing } => {
                write!(f, "failed on the original code in run {run}: {}", failing.join(", "))
            }
            RejectReason::DoesNotKill { detail } => write!(f, "does not kill the mutant: {detail}"),
            RejectReason::StaleMutant { failing_existing } => {
                write!(f, "stale mutant, existing tests fail: {}", failing_existing.join(", "))
            }
            RejectReason::AdapterError { detail } => write!(f, "adapter error: {detail}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    Rejected(RejectReason),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssuranceReport {
    pub buildable: bool,
    pub passes_on_original: bool,
    /// Consecutive passing runs on the original code.
    pub run_count: usize,
    pub kills_mutant: bool,
    pub failing_new_tests: Vec<String>,
    /// Lines covered with the new tests but not with the existing ones.
    /// Absent when the adapter cannot measure coverage.
    pub coverage_delta: Option<CoverageMap>,
    pub verdict: Verdict,
}

impl AssuranceReport {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }

    pub fn adds_coverage(&self) -> bool {
        self.coverage_delta.as_ref().is_some_and(|d| !d.is_empty())
    }

    fn rejected(reason: RejectReason) -> Self {
        Self {
            buildable: false,
            passes_on_original: false,
            run_count: 0,
            kills_mutant: false,
            failing_new_tests: Vec::new(),
            coverage_delta: None,
            verdict: Verdict::Rejected(reason),
        }
    }
}

pub fn build_test_prompt(
    original: &str,
    mutant: &MutantCandidate,
    existing_tests: &str,
) -> Result<RenderedPrompt, LlmError> {
    let mut bindings = BTreeMap::new();
    bindings.insert("original_class", original);
    bindings.insert("mutated_class", mutant.mutated_source.as_str());
    bindings.insert("existing_test_class", existing_tests);
    let text = render(&PromptTemplate::make_test(), &bindings)?;
    let mut warnings = Vec::new();
    if existing_tests.trim().is_empty() {
        warnings.push(format!("mutant {}: existing test class is empty", mutant.mutant_id));
    }
    Ok(RenderedPrompt { text, warnings })
}

/// Takes the first fenced block of a MakeTest response as the extended test
/// class and finds the test methods it adds.
pub fn parse_tests(
    response: &str,
    existing_tests: &str,
    adapter: &TargetAdapter,
    candidate_id: &str,
    mutant_id: &str,
) -> Result<TestCandidate, TestgenError> {
    let block = extract_fenced_code(response).into_iter().next().ok_or(TestgenError::NoCodeBlock)?;
    let mut text = block.text;
    if !text.ends_with('\n') {
        text.push('\n');
    }
    let existing = adapter.test_method_names(existing_tests);
    let extended = adapter.test_method_names(&text);
    let missing: Vec<String> = existing.iter().filter(|n| !extended.contains(n)).cloned().collect();
    if !missing.is_empty() {
        return Err(TestgenError::NotAnExtension { missing });
    }
    let new_test_names: Vec<String> = extended.into_iter().filter(|n| !existing.contains(n)).collect();
    if new_test_names.is_empty() {
        return Err(TestgenError::NoNewTests);
    }
    Ok(TestCandidate {
        candidate_id: candidate_id.to_string(),
        mutant_id: mutant_id.to_string(),
        extended_test_class: text,
        new_test_names,
        provenance: None,
    })
}

fn coverage_delta(
    with_new_tests: &Workspace,
    cut: &ClassUnderTest,
    corpus_root: &Path,
    adapter: &TargetAdapter,
) -> Option<CoverageMap> {
    adapter.coverage_command.as_ref()?;
    let measured = materialize_workspace(corpus_root, cut, Variant::Original, Overlay::none())
        .map_err(|e| e.to_string())
        .and_then(|base_ws| {
            let base = measure_line_coverage(&base_ws, adapter).map_err(|e| e.to_string())?;
            let new = measure_line_coverage(with_new_tests, adapter).map_err(|e| e.to_string())?;
            Ok((base, new))
        });
    match measured {
        Ok((base, new)) => {
            let test_file = cut.test_class_path.to_string_lossy();
            Some(new.added_over(&base).without_file(&test_file))
        }
        Err(e) => {
            log::warn!("class {}: coverage unavailable: {e}", cut.id);
            None
        }
    }
}

/// Checks a candidate against the assurances. The original-code suite runs
/// `repeats` times in one workspace; the mutant suite runs once. Coverage is
/// measured for certified candidates when the adapter supports it.
pub fn assure(
    candidate: &TestCandidate,
    mutant: &MutantCandidate,
    cut: &ClassUnderTest,
    corpus_root: &Path,
    adapter: &TargetAdapter,
    repeats: usize,
) -> Result<AssuranceReport, TestgenError> {
    if repeats == 0 {
        return Err(TestgenError::ZeroRepeats);
    }
    let adapter_err = |e: crate::corpus::CorpusError| AssuranceReport::rejected(RejectReason::AdapterError { detail: e.to_string() });

    let original = match materialize_workspace(
        corpus_root,
        cut,
        Variant::Original,
        Overlay::none().with_test_class(cut, candidate.extended_test_class.clone()),
    ) {
        Ok(ws) => ws,
        Err(e) => return Ok(adapter_err(e)),
    };
    let build = match run_build(&original, adapter) {
        Ok(b) => b,
        Err(e) => return Ok(adapter_err(e)),
    };
    if build.outcome != RunOutcome::AllPassed {
        return Ok(AssuranceReport::rejected(RejectReason::BuildFailed { detail: format!("{:?}", build.outcome) }));
    }

    let mut report = AssuranceReport::rejected(RejectReason::DoesNotKill { detail: String::new() });
    report.buildable = true;
    for run in 1..=repeats {
        let result = match run_tests(&original, adapter) {
            Ok(r) => r,
            Err(e) => {
                report.verdict = Verdict::Rejected(RejectReason::AdapterError { detail: e.to_string() });
                return Ok(report);
            }
        };
        if result.outcome != RunOutcome::AllPassed {
            let failing = if result.outcome == RunOutcome::Timeout {
                vec!["<timeout>".to_string()]
            } else {
                result.failing_test_names
            };
            report.verdict = Verdict::Rejected(RejectReason::FlakyOrFailing { run, failing });
            return Ok(report);
        }
        report.run_count = run;
    }
    report.passes_on_original = true;

    let mutated = match materialize_workspace(
        corpus_root,
        cut,
        Variant::Mutated(mutant.mutant_id.clone()),
        Overlay::mutant(cut, mutant.mutated_source.clone()).with_test_class(cut, candidate.extended_test_class.clone()),
    ) {
        Ok(ws) => ws,
        Err(e) => {
            report.verdict = Verdict::Rejected(RejectReason::AdapterError { detail: e.to_string() });
            return Ok(report);
        }
    };
    let kill_run = run_build(&mutated, adapter).and_then(|b| {
        if b.outcome == RunOutcome::AllPassed {
            run_tests(&mutated, adapter).map(Some)
        } else {
            Ok(None)
        }
    });
    let result = match kill_run {
        Ok(Some(r)) => r,
        Ok(None) => {
            report.verdict = Verdict::Rejected(RejectReason::DoesNotKill {
                detail: "extended tests do not build against the mutant".into(),
            });
            return Ok(report);
        }
        Err(e) => {
            report.verdict = Verdict::Rejected(RejectReason::AdapterError { detail: e.to_string() });
            return Ok(report);
        }
    };
    match result.outcome {
        RunOutcome::SomeFailed => {
            let new: BTreeSet<&str> = candidate.new_test_names.iter().map(String::as_str).collect();
            let (fresh, old): (Vec<String>, Vec<String>) =
                result.failing_test_names.into_iter().partition(|n| new.contains(n.as_str()));
            if !old.is_empty() {
                report.verdict = Verdict::Rejected(RejectReason::StaleMutant { failing_existing: old });
                return Ok(report);
            }
            report.kills_mutant = true;
            report.failing_new_tests = fresh;
        }
        RunOutcome::AllPassed => {
            report.verdict = Verdict::Rejected(RejectReason::DoesNotKill { detail: "all tests pass on the mutant".into() });
            return Ok(report);
        }
        other => {
            report.verdict = Verdict::Rejected(RejectReason::DoesNotKill { detail: format!("mutant run ended {other:?}") });
            return Ok(report);
        }
    }

    report.verdict = Verdict::Certified;
    report.coverage_delta = coverage_delta(&original, cut, corpus_root, adapter);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum AttemptOutcome {
    Certified,
    Unparseable { detail: String },
    Rejected { reason: RejectReason },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardenAttempt {
    pub candidate_id: String,
    pub mutant_id: String,
    #[serde(flatten)]
    pub outcome: AttemptOutcome,
}

#[derive(Debug, Clone)]
pub struct Hardening {
    pub certified: Option<(TestCandidate, AssuranceReport)>,
    pub attempts: Vec<HardenAttempt>,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HardenConfig {
    pub retries: usize,
    pub repeats: usize,
}

impl Default for HardenConfig {
    fn default() -> Self {
        Self { retries: 3, repeats: 5 }
    }
}

pub fn candidate_id(mutant_id: &str, cycle: usize) -> String {
    format!("{mutant_id}-t{cycle}")
}

/// Up to `cfg.retries` generate, parse and assure cycles; stops at the first
/// certified candidate.
pub fn harden(
    mutant: &MutantCandidate,
    cut: &ClassUnderTest,
    corpus_root: &Path,
    adapter: &TargetAdapter,
    gateway: &Gateway,
    cfg: &HardenConfig,
) -> Result<Hardening, TestgenError> {
    let mut attempts = Vec::new();
    let prompt = build_test_prompt(&cut.source_text, mutant, &cut.test_class_text)?;
    for w in &prompt.warnings {
        log::warn!("{w}");
    }
    for cycle in 1..=cfg.retries {
        let id = candidate_id(&mutant.mutant_id, cycle);
        let response = match gateway.ask(&prompt.text) {
            Ok(r) => r,
            Err(LlmError::BudgetExceeded { .. }) => {
                return Ok(Hardening { certified: None, attempts, budget_exhausted: true })
            }
            Err(e) => return Err(e.into()),
        };
        let candidate = match parse_tests(&response, &cut.test_class_text, adapter, &id, &mutant.mutant_id) {
            Ok(c) => c,
            Err(e) => {
                log::info!("{id}: {e}");
                attempts.push(HardenAttempt {
                    candidate_id: id,
                    mutant_id: mutant.mutant_id.clone(),
                    outcome: AttemptOutcome::Unparseable { detail: e.to_string() },
                });
                continue;
            }
        };
        let report = assure(&candidate, mutant, cut, corpus_root, adapter, cfg.repeats)?;
        match &report.verdict {
            Verdict::Certified => {
                log::info!("{id}: certified");
                attempts.push(HardenAttempt {
                    candidate_id: id,
                    mutant_id: mutant.mutant_id.clone(),
                    outcome: AttemptOutcome::Certified,
                });
                return Ok(Hardening { certified: Some((candidate, report)), attempts, budget_exhausted: false });
            }
            Verdict::Rejected(reason) => {
                log::info!("{id}: {reason}");
                attempts.push(HardenAttempt {
                    candidate_id: id,
                    mutant_id: mutant.mutant_id.clone(),
                    outcome: AttemptOutcome::Rejected { reason: reason.clone() },
                });
            }
        }
    }
    Ok(Hardening { certified: None, attempts, budget_exhausted: false })
}
