//! File-backed pipeline stages. Every stage reads its inputs from, and writes
//! its outputs to, the run's output directory, so stages can be run one at a
//! time and resumed. Outputs carry no timestamps or durations: two runs over
//! the same inputs and transcript produce identical files.
//!
//! Layout of the output directory:
//!
//! ```text
//! classes.jsonl                 one ClassRecord per class
//! mutants.jsonl                 one MutantRecord per generated mutant
//! mutants/<mutant_id>/<file>    mutated source, markers included
//! verdicts.jsonl                one VerdictRecord per build-and-pass mutant
//! tests.jsonl                   one record per test-generation attempt
//! certified.jsonl               one CertifiedRecord per certified test
//! certified/<candidate_id>/     extended test class, <file>.mutant,
//!                               assurance.json, summary.txt
//! summary.json, summary.txt     funnel and coverage tables
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::corpus::{discover_targets, ClassUnderTest, Corpus, CorpusError, OUTPUT_MARKER};
use crate::digest::sha256_hex;
use crate::equiv::{screen, Decision};
use crate::llm::Gateway;
use crate::mutagen::{harvest_class, IssueSpec, MutagenError, MutantCandidate, MutantStatus};
use crate::report::{
    render_diff_summary, summarize, CertifiedRecord, ClassRecord, CorpusSummary, MutantRecord, ReportError,
    RunRecords, VerdictRecord,
};
use crate::testgen::{harden, AssuranceReport, AttemptOutcome, TestCandidate, TestgenError};

pub const CLASSES_FILE: &str = "classes.jsonl";
pub const MUTANTS_FILE: &str = "mutants.jsonl";
pub const MUTANTS_DIR: &str = "mutants";
pub const VERDICTS_FILE: &str = "verdicts.jsonl";
pub const TESTS_FILE: &str = "tests.jsonl";
pub const CERTIFIED_FILE: &str = "certified.jsonl";
pub const CERTIFIED_DIR: &str = "certified";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const ASSURANCE_FILE: &str = "assurance.json";
pub const MUTANT_SUFFIX: &str = ".mutant";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Mutagen(#[from] MutagenError),
    #[error(transparent)]
    Testgen(#[from] TestgenError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {reason}")]
    Store { path: PathBuf, reason: String },
    #[error("stored mutants for {class_id} were generated against a different version of {source_path}; run `mutate` again")]
    DigestMismatch { class_id: String, source_path: String },
    #[error("{missing} not found in {dir}; run `{stage}` first")]
    MissingStage { dir: PathBuf, missing: &'static str, stage: &'static str },
    #[error("refusing to write into {0}: not empty and not a previous run's output")]
    OutputNotOwned(PathBuf),
    #[error("worker pool: {0}")]
    Pool(String),
}

type Result<T> = std::result::Result<T, PipelineError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// One line per generate/parse/assure cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestAttemptRecord {
    pub class_id: String,
    pub candidate_id: String,
    pub mutant_id: String,
    #[serde(flatten)]
    pub outcome: AttemptOutcome,
}

/// Contents of `certified/<candidate_id>/assurance.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifiedArtifact {
    pub candidate_id: String,
    pub mutant_id: String,
    pub class_id: String,
    pub source_path: String,
    pub test_class_path: String,
    pub new_test_names: Vec<String>,
    pub report: AssuranceReport,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageOutcome {
    /// The request cap was hit; results are partial.
    pub budget_exhausted: bool,
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("records serialize"));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| PipelineError::Store {
                path: path.to_path_buf(),
                reason: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "source".into())
}

fn slash_path(path: &Path) -> String {
    path.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

fn remove_path(path: &Path) -> Result<()> {
    let res = if path.is_dir() { fs::remove_dir_all(path) } else { fs::remove_file(path) };
    match res {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(PipelineError::Io { path: path.into(), source: e }),
        _ => Ok(()),
    }
}

/// The output directory of one run.
#[derive(Debug, Clone)]
pub struct RunStore {
    dir: PathBuf,
}

impl RunStore {
    /// Opens (creating if needed) an output directory. A non-empty directory
    /// is only reused if an earlier run marked it as its own.
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let marker = dir.join(OUTPUT_MARKER);
        if !marker.exists() {
            let non_empty = fs::read_dir(dir).map_err(io_err(dir))?.next().is_some();
            if non_empty {
                return Err(PipelineError::OutputNotOwned(dir.to_path_buf()));
            }
            fs::write(&marker, "").map_err(io_err(&marker))?;
        }
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn require(&self, name: &'static str, stage: &'static str) -> Result<PathBuf> {
        let p = self.path(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(PipelineError::MissingStage { dir: self.dir.clone(), missing: name, stage })
        }
    }

    fn clear(&self, names: &[&str]) -> Result<()> {
        names.iter().try_for_each(|n| remove_path(&self.path(n)))
    }

    pub fn classes(&self) -> Result<Vec<ClassRecord>> {
        read_jsonl(&self.require(CLASSES_FILE, "mutate")?)
    }

    pub fn mutants(&self) -> Result<Vec<MutantRecord>> {
        read_jsonl(&self.require(MUTANTS_FILE, "mutate")?)
    }

    pub fn verdicts(&self) -> Result<Vec<VerdictRecord>> {
        read_jsonl(&self.require(VERDICTS_FILE, "screen")?)
    }

    pub fn certified(&self) -> Result<Vec<CertifiedRecord>> {
        read_jsonl(&self.require(CERTIFIED_FILE, "gentest")?)
    }

    pub fn attempts(&self) -> Result<Vec<TestAttemptRecord>> {
        read_jsonl(&self.require(TESTS_FILE, "gentest")?)
    }

    fn mutant_file(&self, mutant_id: &str, cut: &ClassUnderTest) -> PathBuf {
        self.dir.join(MUTANTS_DIR).join(mutant_id).join(file_name(&cut.source_path))
    }

    /// Rebuilds a stored mutant, refusing it if the class source changed
    /// since it was generated or the stored text was tampered with.
    fn load_mutant(&self, record: &MutantRecord, corpus: &Corpus) -> Result<(ClassUnderTest, MutantCandidate)> {
        let cut = corpus.class(&record.class_id).ok_or_else(|| PipelineError::Store {
            path: self.path(MUTANTS_FILE),
            reason: format!("mutant {} names unknown class {}", record.mutant_id, record.class_id),
        })?;
        if cut.source_digest() != record.source_digest {
            return Err(PipelineError::DigestMismatch {
                class_id: cut.id.clone(),
                source_path: slash_path(&cut.source_path),
            });
        }
        let path = self.mutant_file(&record.mutant_id, cut);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        if sha256_hex(&text) != record.mutant_digest {
            return Err(PipelineError::Store { path, reason: "mutant text does not match its recorded digest".into() });
        }
        let candidate = MutantCandidate {
            mutant_id: record.mutant_id.clone(),
            class_id: record.class_id.clone(),
            mutated_source: text,
            regions: record.regions.clone(),
            status: record.status,
            provenance: None,
            note: record.note.clone(),
        };
        Ok((cut.clone(), candidate))
    }

    /// Everything `summarize` needs; stages not yet run contribute nothing.
    pub fn records(&self) -> Result<RunRecords> {
        let optional = |name: &str| self.path(name).exists();
        Ok(RunRecords {
            classes: self.classes()?,
            mutants: if optional(MUTANTS_FILE) { self.mutants()? } else { Vec::new() },
            verdicts: if optional(VERDICTS_FILE) { self.verdicts()? } else { Vec::new() },
            certified: if optional(CERTIFIED_FILE) { self.certified()? } else { Vec::new() },
        })
    }
}

/// Stages over one corpus, gateway and output directory.
pub struct Pipeline<'a> {
    config: &'a RunConfig,
    gateway: &'a Gateway,
    corpus: Corpus,
    store: RunStore,
    pool: rayon::ThreadPool,
}

impl<'a> Pipeline<'a> {
    pub fn new(config: &'a RunConfig, gateway: &'a Gateway) -> Result<Self> {
        config.validate()?;
        let corpus = discover_targets(&config.corpus_manifest, &config.adapter.test_file_convention)?;
        for w in &corpus.warnings {
            log::warn!("{w}");
        }
        let store = RunStore::open(&config.output)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers.max(1))
            .build()
            .map_err(|e| PipelineError::Pool(e.to_string()))?;
        Ok(Self { config, gateway, corpus, store, pool })
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn store(&self) -> &RunStore {
        &self.store
    }

    fn outcome(&self) -> StageOutcome {
        StageOutcome { budget_exhausted: self.gateway.budget_exhausted() }
    }

    /// Generates and gates mutants for every class. Clears all earlier
    /// stage outputs first.
    pub fn mutate(&self) -> Result<StageOutcome> {
        self.store.clear(&[
            CLASSES_FILE,
            MUTANTS_FILE,
            MUTANTS_DIR,
            VERDICTS_FILE,
            TESTS_FILE,
            CERTIFIED_FILE,
            CERTIFIED_DIR,
            SUMMARY_JSON,
            SUMMARY_TXT,
        ])?;
        let issue = IssueSpec::load(&self.config.issue)?;
        let harvest_cfg = self.config.budgets.harvest();
        let adapter = &self.config.adapter;
        let harvests = self.pool.install(|| {
            self.corpus
                .classes
                .par_iter()
                .map(|cut| {
                    log::info!("mutate {}", cut.id);
                    harvest_class(&issue, cut, &self.corpus.root, adapter, self.gateway, &harvest_cfg)
                })
                .collect::<Vec<_>>()
        });

        let classes: Vec<ClassRecord> = self
            .corpus
            .classes
            .iter()
            .map(|c| ClassRecord {
                class_id: c.id.clone(),
                group: c.group.clone(),
                source_path: slash_path(&c.source_path),
                source_digest: c.source_digest(),
                has_tests: c.has_tests(),
            })
            .collect();
        let mut mutants = Vec::new();
        for (cut, harvest) in self.corpus.classes.iter().zip(harvests) {
            for outcome in harvest?.outcomes {
                let m = outcome.candidate;
                if !m.mutated_source.is_empty() {
                    let path = self.store.mutant_file(&m.mutant_id, cut);
                    let dir = path.parent().expect("mutant file has a parent");
                    fs::create_dir_all(dir).map_err(io_err(dir))?;
                    fs::write(&path, &m.mutated_source).map_err(io_err(&path))?;
                }
                mutants.push(MutantRecord {
                    mutant_digest: sha256_hex(&m.mutated_source),
                    mutant_id: m.mutant_id,
                    class_id: m.class_id,
                    status: m.status,
                    regions: m.regions,
                    source_digest: cut.source_digest(),
                    note: m.note,
                });
            }
        }
        write_jsonl(&self.store.path(CLASSES_FILE), &classes)?;
        write_jsonl(&self.store.path(MUTANTS_FILE), &mutants)?;
        Ok(self.outcome())
    }

    fn stored_mutants(&self, wanted: impl Fn(&MutantRecord) -> bool) -> Result<Vec<(ClassUnderTest, MutantCandidate)>> {
        self.store
            .mutants()?
            .iter()
            .filter(|r| wanted(r))
            .map(|r| self.store.load_mutant(r, &self.corpus))
            .collect()
    }

    /// Equivalence verdicts for every stored build-and-pass mutant.
    pub fn screen(&self) -> Result<StageOutcome> {
        let survivors = self.stored_mutants(|r| r.status == MutantStatus::BuildsAndPasses)?;
        self.store.clear(&[VERDICTS_FILE, TESTS_FILE, CERTIFIED_FILE, CERTIFIED_DIR, SUMMARY_JSON, SUMMARY_TXT])?;
        let grammar = &self.config.adapter.comment_grammar;
        let verdicts: Vec<VerdictRecord> = self.pool.install(|| {
            survivors
                .par_iter()
                .map(|(cut, m)| {
                    let verdict = screen(&cut.source_text, m, grammar, self.gateway);
                    log::info!("screen {}: {:?} at {:?}", m.mutant_id, verdict.decision, verdict.stage);
                    VerdictRecord { mutant_id: m.mutant_id.clone(), class_id: m.class_id.clone(), verdict }
                })
                .collect()
        });
        write_jsonl(&self.store.path(VERDICTS_FILE), &verdicts)?;
        Ok(self.outcome())
    }

    /// Generates tests for the mutants believed non-equivalent (and, unless
    /// disabled, those the judge could not decide).
    pub fn gentest(&self) -> Result<StageOutcome> {
        let on_no_answer = self.config.budgets.gentest_on_no_answer;
        let decisions: HashMap<String, Decision> =
            self.store.verdicts()?.into_iter().map(|v| (v.mutant_id, v.verdict.decision)).collect();
        let eligible = |r: &MutantRecord| match decisions.get(&r.mutant_id) {
            Some(Decision::NonEquivalent) => true,
            Some(Decision::NoAnswer) => on_no_answer,
            _ => false,
        };
        let targets = self.stored_mutants(|r| r.status == MutantStatus::BuildsAndPasses && eligible(r))?;
        self.store.clear(&[TESTS_FILE, CERTIFIED_FILE, CERTIFIED_DIR, SUMMARY_JSON, SUMMARY_TXT])?;

        let harden_cfg = self.config.budgets.harden();
        let adapter = &self.config.adapter;
        let results = self.pool.install(|| {
            targets
                .par_iter()
                .map(|(cut, m)| {
                    log::info!("gentest {}", m.mutant_id);
                    harden(m, cut, &self.corpus.root, adapter, self.gateway, &harden_cfg)
                })
                .collect::<Vec<_>>()
        });

        let mut attempts = Vec::new();
        let mut certified = Vec::new();
        for ((cut, mutant), result) in targets.iter().zip(results) {
            let hardening = result?;
            attempts.extend(hardening.attempts.into_iter().map(|a| TestAttemptRecord {
                class_id: cut.id.clone(),
                candidate_id: a.candidate_id,
                mutant_id: a.mutant_id,
                outcome: a.outcome,
            }));
            if let Some((candidate, report)) = hardening.certified {
                self.write_certified(cut, mutant, &candidate, &report)?;
                certified.push(CertifiedRecord {
                    candidate_id: candidate.candidate_id,
                    mutant_id: candidate.mutant_id,
                    class_id: cut.id.clone(),
                    new_test_names: candidate.new_test_names,
                    coverage_delta: report.coverage_delta,
                });
            }
        }
        write_jsonl(&self.store.path(TESTS_FILE), &attempts)?;
        write_jsonl(&self.store.path(CERTIFIED_FILE), &certified)?;
        Ok(self.outcome())
    }

    fn write_certified(
        &self,
        cut: &ClassUnderTest,
        mutant: &MutantCandidate,
        candidate: &TestCandidate,
        report: &AssuranceReport,
    ) -> Result<()> {
        let dir = self.store.path(CERTIFIED_DIR).join(&candidate.candidate_id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let summary = render_diff_summary(candidate, report, mutant, cut)?;
        let artifact = CertifiedArtifact {
            candidate_id: candidate.candidate_id.clone(),
            mutant_id: mutant.mutant_id.clone(),
            class_id: cut.id.clone(),
            source_path: slash_path(&cut.source_path),
            test_class_path: slash_path(&cut.test_class_path),
            new_test_names: candidate.new_test_names.clone(),
            report: report.clone(),
        };
        let mut assurance = serde_json::to_string_pretty(&artifact).expect("artifact serializes");
        assurance.push('\n');
        let files = [
            (file_name(&cut.test_class_path), candidate.extended_test_class.as_str()),
            (format!("{}{MUTANT_SUFFIX}", file_name(&cut.source_path)), mutant.mutated_source.as_str()),
            (ASSURANCE_FILE.to_string(), assurance.as_str()),
            ("summary.txt".to_string(), summary.as_str()),
        ];
        for (name, text) in files {
            let path = dir.join(name);
            fs::write(&path, text).map_err(io_err(&path))?;
        }
        Ok(())
    }

    /// Summaries from whatever stage outputs exist.
    pub fn report(&self) -> Result<CorpusSummary> {
        write_summary(&self.store)
    }

    /// All stages in order.
    pub fn run(&self) -> Result<StageOutcome> {
        self.mutate()?;
        self.screen()?;
        self.gentest()?;
        self.report()?;
        Ok(self.outcome())
    }
}

/// Writes `summary.json` and `summary.txt` from stored records. Needs no
/// corpus or gateway.
pub fn write_summary(store: &RunStore) -> Result<CorpusSummary> {
    let summary = summarize(&store.records()?);
    let json_path = store.path(SUMMARY_JSON);
    let mut json = serde_json::to_string_pretty(&summary.to_json()).expect("summary serializes");
    json.push('\n');
    fs::write(&json_path, json).map_err(io_err(&json_path))?;
    let txt_path = store.path(SUMMARY_TXT);
    let mut f = fs::File::create(&txt_path).map_err(io_err(&txt_path))?;
    f.write_all(summary.render_table().as_bytes()).map_err(io_err(&txt_path))?;
    Ok(summary)
}
