//! Funnel and coverage summaries over run records, and the reviewer-facing
//! summary that accompanies each certified test.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::corpus::{ClassUnderTest, CoverageMap};
use crate::equiv::{Decision, EquivalenceVerdict, Stage};
use crate::mutagen::{MutantCandidate, MutantRegion, MutantStatus};
use crate::testgen::{AssuranceReport, TestCandidate};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("candidate {0} is not certified")]
    NotCertified(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub class_id: String,
    pub group: String,
    pub source_path: String,
    pub source_digest: String,
    pub has_tests: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantRecord {
    pub mutant_id: String,
    pub class_id: String,
    pub status: MutantStatus,
    pub regions: Vec<MutantRegion>,
    /// Digest of the class source the mutant was generated against.
    pub source_digest: String,
    pub mutant_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub mutant_id: String,
    pub class_id: String,
    #[serde(flatten)]
    pub verdict: EquivalenceVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifiedRecord {
    pub candidate_id: String,
    pub mutant_id: String,
    pub class_id: String,
    pub new_test_names: Vec<String>,
    pub coverage_delta: Option<CoverageMap>,
}

impl CertifiedRecord {
    /// Coverage was measured and the new tests added none.
    pub fn lacks_coverage_delta(&self) -> bool {
        self.coverage_delta.as_ref().is_some_and(CoverageMap::is_empty)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunRecords {
    pub classes: Vec<ClassRecord>,
    pub mutants: Vec<MutantRecord>,
    pub verdicts: Vec<VerdictRecord>,
    pub certified: Vec<CertifiedRecord>,
}

/// `part / whole` as a whole percentage, rounded half up. `None` for an
/// empty denominator.
pub fn percent(part: u64, whole: u64) -> Option<u64> {
    (whole > 0).then(|| (200 * part + whole) / (2 * whole))
}

fn fmt_pct(part: u64, whole: u64) -> String {
    match percent(part, whole) {
        Some(p) => format!("{part} ({p}%)"),
        None => format!("{part} (-)"),
    }
}

/// Counts for one corpus group. Percentages are derived on output.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub classes_under_test: u64,
    pub mutants_generated: u64,
    pub marker_invalid: u64,
    pub build_failed: u64,
    pub killed_by_existing_tests: u64,
    pub build_and_pass: u64,
    /// Byte-identical, or identical once comments are stripped.
    pub syntactically_identical: u64,
    /// The part of `syntactically_identical` that needed comment stripping.
    pub identical_after_stripping: u64,
    pub believed_equivalent: u64,
    pub no_answer: u64,
    pub believed_non_equivalent: u64,
    /// Build-and-pass mutants without a verdict yet (partial runs).
    pub unscreened: u64,
    pub certified_tests: u64,
    pub classes_with_killing_test: u64,
    pub tests_without_coverage_delta: u64,
}

impl GroupSummary {
    fn absorb(&mut self, other: &GroupSummary) {
        self.classes_under_test += other.classes_under_test;
        self.mutants_generated += other.mutants_generated;
        self.marker_invalid += other.marker_invalid;
        self.build_failed += other.build_failed;
        self.killed_by_existing_tests += other.killed_by_existing_tests;
        self.build_and_pass += other.build_and_pass;
        self.syntactically_identical += other.syntactically_identical;
        self.identical_after_stripping += other.identical_after_stripping;
        self.believed_equivalent += other.believed_equivalent;
        self.no_answer += other.no_answer;
        self.believed_non_equivalent += other.believed_non_equivalent;
        self.unscreened += other.unscreened;
        self.certified_tests += other.certified_tests;
        self.classes_with_killing_test += other.classes_with_killing_test;
        self.tests_without_coverage_delta += other.tests_without_coverage_delta;
    }

    pub fn build_and_pass_pct(&self) -> Option<u64> {
        percent(self.build_and_pass, self.mutants_generated)
    }

    /// Distribution of build-and-pass mutants over the four belief buckets.
    pub fn belief_pcts(&self) -> [Option<u64>; 4] {
        [
            percent(self.syntactically_identical, self.build_and_pass),
            percent(self.believed_equivalent, self.build_and_pass),
            percent(self.no_answer, self.build_and_pass),
            percent(self.believed_non_equivalent, self.build_and_pass),
        ]
    }

    pub fn killing_class_pct(&self) -> Option<u64> {
        percent(self.classes_with_killing_test, self.classes_under_test)
    }

    pub fn no_coverage_pct(&self) -> Option<u64> {
        percent(self.tests_without_coverage_delta, self.certified_tests)
    }

    pub fn to_json(&self) -> Value {
        let [ident, eq, na, neq] = self.belief_pcts();
        json!({
            "group": self.group,
            "classes_under_test": self.classes_under_test,
            "mutants_generated": self.mutants_generated,
            "marker_invalid": self.marker_invalid,
            "build_failed": self.build_failed,
            "killed_by_existing_tests": self.killed_by_existing_tests,
            "build_and_pass": {"count": self.build_and_pass, "pct_of_generated": self.build_and_pass_pct()},
            "syntactically_identical": {"count": self.syntactically_identical, "pct_of_build_and_pass": ident,
                "after_comment_stripping": self.identical_after_stripping},
            "believed_equivalent": {"count": self.believed_equivalent, "pct_of_build_and_pass": eq},
            "no_answer": {"count": self.no_answer, "pct_of_build_and_pass": na},
            "believed_non_equivalent": {"count": self.believed_non_equivalent, "pct_of_build_and_pass": neq},
            "unscreened": self.unscreened,
            "certified_tests": self.certified_tests,
            "classes_with_killing_test": {"count": self.classes_with_killing_test, "pct_of_classes": self.killing_class_pct()},
            "tests_without_coverage_delta": {"count": self.tests_without_coverage_delta, "pct_of_certified": self.no_coverage_pct()},
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub groups: Vec<GroupSummary>,
    pub totals: GroupSummary,
}

/// Aggregates run records per group (in order of first appearance) plus a
/// totals row. Records of classes missing from `classes` fall in "default".
pub fn summarize(records: &RunRecords) -> CorpusSummary {
    let mut groups: Vec<GroupSummary> = Vec::new();
    let mut group_of = std::collections::HashMap::new();
    let slot = |groups: &mut Vec<GroupSummary>, name: &str| -> usize {
        match groups.iter().position(|g| g.group == name) {
            Some(i) => i,
            None => {
                groups.push(GroupSummary { group: name.to_string(), ..Default::default() });
                groups.len() - 1
            }
        }
    };
    for class in &records.classes {
        let i = slot(&mut groups, &class.group);
        groups[i].classes_under_test += 1;
        group_of.insert(class.class_id.as_str(), i);
    }
    let index = |groups: &mut Vec<GroupSummary>, class_id: &str| -> usize {
        match group_of.get(class_id) {
            Some(&i) => i,
            None => slot(groups, "default"),
        }
    };

    let mut bap = std::collections::HashSet::new();
    for m in &records.mutants {
        let i = index(&mut groups, &m.class_id);
        let g = &mut groups[i];
        g.mutants_generated += 1;
        match m.status {
            MutantStatus::Generated | MutantStatus::MarkerInvalid => g.marker_invalid += 1,
            MutantStatus::BuildFailed => g.build_failed += 1,
            MutantStatus::KilledByExistingTests => g.killed_by_existing_tests += 1,
            MutantStatus::BuildsAndPasses => {
                g.build_and_pass += 1;
                bap.insert(m.mutant_id.as_str());
            }
        }
    }
    let mut screened = std::collections::HashSet::new();
    for v in &records.verdicts {
        if !bap.contains(v.mutant_id.as_str()) || !screened.insert(v.mutant_id.as_str()) {
            continue;
        }
        let i = index(&mut groups, &v.class_id);
        let g = &mut groups[i];
        match (v.verdict.stage, v.verdict.decision) {
            (Stage::ByteIdentity, _) => g.syntactically_identical += 1,
            (Stage::StrippedIdentity, _) => {
                g.syntactically_identical += 1;
                g.identical_after_stripping += 1;
            }
            (Stage::Judge, Decision::Equivalent) => g.believed_equivalent += 1,
            (Stage::Judge, Decision::NoAnswer) => g.no_answer += 1,
            (Stage::Judge, Decision::NonEquivalent) => g.believed_non_equivalent += 1,
        }
    }
    for g in &mut groups {
        g.unscreened = g.build_and_pass
            - g.syntactically_identical
            - g.believed_equivalent
            - g.no_answer
            - g.believed_non_equivalent;
    }
    let mut killing = std::collections::HashSet::new();
    for c in &records.certified {
        let i = index(&mut groups, &c.class_id);
        let g = &mut groups[i];
        g.certified_tests += 1;
        if c.lacks_coverage_delta() {
            g.tests_without_coverage_delta += 1;
        }
        if killing.insert(c.class_id.as_str()) {
            g.classes_with_killing_test += 1;
        }
    }

    let mut totals = GroupSummary { group: "Totals".into(), ..Default::default() };
    for g in &groups {
        totals.absorb(g);
    }
    CorpusSummary { groups, totals }
}

impl CorpusSummary {
    pub fn to_json(&self) -> Value {
        json!({
            "groups": self.groups.iter().map(GroupSummary::to_json).collect::<Vec<_>>(),
            "totals": self.totals.to_json(),
        })
    }

    /// Aligned, human-readable funnel and coverage tables.
    pub fn render_table(&self) -> String {
        let rows: Vec<&GroupSummary> = self.groups.iter().chain(std::iter::once(&self.totals)).collect();
        let mut out = String::new();
        let funnel_head = ["group", "classes", "generated", "build+pass", "identical", "equivalent", "no answer", "non-equiv"];
        let funnel: Vec<Vec<String>> = rows
            .iter()
            .map(|g| {
                vec![
                    g.group.clone(),
                    g.classes_under_test.to_string(),
                    g.mutants_generated.to_string(),
                    fmt_pct(g.build_and_pass, g.mutants_generated),
                    fmt_pct(g.syntactically_identical, g.build_and_pass),
                    fmt_pct(g.believed_equivalent, g.build_and_pass),
                    fmt_pct(g.no_answer, g.build_and_pass),
                    fmt_pct(g.believed_non_equivalent, g.build_and_pass),
                ]
            })
            .collect();
        write_table(&mut out, &funnel_head, &funnel);
        out.push('\n');
        let tests_head = ["group", "certified", "classes killed", "no coverage added"];
        let tests: Vec<Vec<String>> = rows
            .iter()
            .map(|g| {
                vec![
                    g.group.clone(),
                    g.certified_tests.to_string(),
                    fmt_pct(g.classes_with_killing_test, g.classes_under_test),
                    fmt_pct(g.tests_without_coverage_delta, g.certified_tests),
                ]
            })
            .collect();
        write_table(&mut out, &tests_head, &tests);
        if self.totals.unscreened > 0 {
            let _ = writeln!(out, "\n{} build-and-pass mutants not yet screened", self.totals.unscreened);
        }
        out
    }
}

fn write_table(out: &mut String, head: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = head.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let _ = writeln!(out, "{}", line(head.to_vec()));
    for row in rows {
        let _ = writeln!(out, "{}", line(row.iter().map(String::as_str).collect()));
    }
}

/// The text a reviewer sees next to a certified test: what it checks, the
/// fault it was shown to catch, and the evidence.
pub fn render_diff_summary(
    candidate: &TestCandidate,
    report: &AssuranceReport,
    mutant: &MutantCandidate,
    cut: &ClassUnderTest,
) -> Result<String, ReportError> {
    if !report.is_certified() {
        return Err(ReportError::NotCertified(candidate.candidate_id.clone()));
    }
    let mut out = String::new();
    let _ = writeln!(out, "New tests for {} ({})", cut.id, cut.source_path.display());
    for name in &candidate.new_test_names {
        let _ = writeln!(out, "  - {name}");
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "These tests pass on the current code and fail on the simulated fault below, which no existing test catches."
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "Simulated fault {} (killed):", mutant.mutant_id);
    let lines: Vec<&str> = mutant.mutated_source.lines().collect();
    for (i, (region, text)) in mutant.region_excerpts().into_iter().enumerate() {
        if region.is_empty() {
            // markers sit on lines start-1 and start; show the lines around them
            let before = region.start.checked_sub(3).and_then(|i| lines.get(i)).copied().unwrap_or("");
            let after = lines.get(region.start).copied().unwrap_or("");
            let _ = writeln!(out, "  region {} removes the code between:", i + 1);
            let _ = writeln!(out, "    {}\n    {}", before.trim_end(), after.trim_end());
        } else {
            let _ = writeln!(out, "  region {}:", i + 1);
            for line in text.lines() {
                let _ = writeln!(out, "    {line}");
            }
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Assurances:");
    let _ = writeln!(out, "  builds: yes");
    let _ = writeln!(out, "  passes on the current code: {}/{} runs", report.run_count, report.run_count);
    let _ = writeln!(out, "  fails on the fault: {}", report.failing_new_tests.join(", "));
    if let Some(delta) = report.coverage_delta.as_ref().filter(|d| !d.is_empty()) {
        let _ = writeln!(out);
        let _ = writeln!(out, "Adds coverage:");
        for (file, lines) in delta.files() {
            let list: Vec<String> = lines.iter().map(u32::to_string).collect();
            let _ = writeln!(out, "  {file}: lines {}", list.join(", "));
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Relevance to the concern and fit with local test style are left to the reviewer.");
    Ok(out)
}
