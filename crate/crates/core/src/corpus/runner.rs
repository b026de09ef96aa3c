use std::fs;
use std::io::{Read, Seek, SeekFrom};
use std::os::unix::process::CommandExt;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::coverage::{parse_coverage_report, CoverageMap, COVERAGE_FILE};
use super::{CommandTemplate, CorpusError, TargetAdapter, Workspace};
use crate::digest::sha256_hex;

/// Written by the adapter's test command into the workspace root.
pub const TEST_RESULTS_FILE: &str = "test-results.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunOutcome {
    AllPassed,
    SomeFailed,
    BuildFailed,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestRunResult {
    pub outcome: RunOutcome,
    /// Non-empty exactly when `outcome` is `SomeFailed`.
    pub failing_test_names: Vec<String>,
    pub duration_ms: u64,
    pub raw_log_digest: String,
}

impl TestRunResult {
    pub fn passed(&self) -> bool {
        self.outcome == RunOutcome::AllPassed
    }
}

struct Invocation {
    exit_ok: bool,
    timed_out: bool,
    duration_ms: u64,
    log_digest: String,
}

fn invoke(ws: &Workspace, template: &CommandTemplate, timeout: Duration) -> Result<Invocation, CorpusError> {
    let argv = template.expand(ws.root());
    let log = tempfile::tempfile().map_err(|e| CorpusError::io(std::env::temp_dir(), e))?;
    let log_err = log.try_clone().map_err(|e| CorpusError::io(std::env::temp_dir(), e))?;
    let mut log_reader = log.try_clone().map_err(|e| CorpusError::io(std::env::temp_dir(), e))?;
    let started = Instant::now();
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .current_dir(ws.root())
        .stdin(Stdio::null())
        .stdout(Stdio::from(log))
        .stderr(Stdio::from(log_err))
        .process_group(0)
        .spawn()
        .map_err(|source| CorpusError::AdapterSpawnFailure { command: argv.join(" "), source })?;

    let mut timed_out = false;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break Some(status),
            Ok(None) if started.elapsed() >= timeout => {
                timed_out = true;
                // the whole group, so grandchildren do not outlive the cap
                unsafe {
                    libc::killpg(child.id() as libc::pid_t, libc::SIGKILL);
                }
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            Ok(None) => thread::sleep(Duration::from_millis(5)),
            Err(e) => return Err(CorpusError::io(ws.root(), e)),
        }
    };
    let duration_ms = started.elapsed().as_millis() as u64;

    let mut raw = Vec::new();
    log_reader
        .seek(SeekFrom::Start(0))
        .and_then(|_| log_reader.read_to_end(&mut raw))
        .map_err(|e| CorpusError::io(std::env::temp_dir(), e))?;
    let log_digest = sha256_hex(&raw);
    Ok(Invocation {
        exit_ok: status.map(|s| s.success()).unwrap_or(false),
        timed_out,
        duration_ms,
        log_digest,
    })
}

/// Runs the adapter's build command. Exit status 0 maps to `AllPassed`.
pub fn run_build(ws: &Workspace, adapter: &TargetAdapter) -> Result<TestRunResult, CorpusError> {
    let inv = invoke(ws, &adapter.build_command, adapter.timeout)?;
    let outcome = if inv.timed_out {
        RunOutcome::Timeout
    } else if inv.exit_ok {
        RunOutcome::AllPassed
    } else {
        RunOutcome::BuildFailed
    };
    Ok(TestRunResult {
        outcome,
        failing_test_names: Vec::new(),
        duration_ms: inv.duration_ms,
        raw_log_digest: inv.log_digest,
    })
}

/// Parses a result file: `PASS`, or `FAIL` followed by one failing test name
/// per line.
pub fn parse_test_results(text: &str) -> Result<(RunOutcome, Vec<String>), CorpusError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let head = lines
        .next()
        .ok_or_else(|| CorpusError::ResultFileMalformed("empty file".into()))?;
    let names: Vec<String> = lines.map(str::to_string).collect();
    match head {
        "PASS" if names.is_empty() => Ok((RunOutcome::AllPassed, names)),
        "PASS" => Err(CorpusError::ResultFileMalformed("PASS followed by test names".into())),
        "FAIL" if names.is_empty() => Err(CorpusError::ResultFileMalformed("FAIL without test names".into())),
        "FAIL" => Ok((RunOutcome::SomeFailed, names)),
        other => Err(CorpusError::ResultFileMalformed(format!("unexpected first line {other:?}"))),
    }
}

fn remove_stale(path: &Path) -> Result<(), CorpusError> {
    match fs::remove_file(path) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(CorpusError::io(path, e)),
    }
}

/// Runs the adapter's test command and reads the result file it writes.
pub fn run_tests(ws: &Workspace, adapter: &TargetAdapter) -> Result<TestRunResult, CorpusError> {
    let results = ws.root().join(TEST_RESULTS_FILE);
    remove_stale(&results)?;
    let inv = invoke(ws, &adapter.test_command, adapter.timeout)?;
    let (outcome, failing_test_names) = if inv.timed_out {
        (RunOutcome::Timeout, Vec::new())
    } else {
        let text = match fs::read_to_string(&results) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(CorpusError::ResultFileMissing),
            Err(e) => return Err(CorpusError::io(&results, e)),
        };
        parse_test_results(&text)?
    };
    Ok(TestRunResult {
        outcome,
        failing_test_names,
        duration_ms: inv.duration_ms,
        raw_log_digest: inv.log_digest,
    })
}

/// Runs the adapter's coverage command and parses the report it writes.
pub fn measure_line_coverage(ws: &Workspace, adapter: &TargetAdapter) -> Result<CoverageMap, CorpusError> {
    let command = adapter.coverage_command.as_ref().ok_or(CorpusError::CoverageUnsupported)?;
    let report = ws.root().join(COVERAGE_FILE);
    remove_stale(&report)?;
    let inv = invoke(ws, command, adapter.timeout)?;
    if inv.timed_out {
        return Err(CorpusError::ReportMalformed("coverage command timed out".into()));
    }
    let text = fs::read_to_string(&report)
        .map_err(|e| CorpusError::ReportMalformed(format!("cannot read {COVERAGE_FILE}: {e}")))?;
    let map = parse_coverage_report(&text)?;
    for (file, lines) in map.files() {
        let path = ws.root().join(file);
        if let Ok(text) = fs::read_to_string(&path) {
            let count = text.lines().count() as u32;
            if let Some(&last) = lines.iter().next_back() {
                if last > count {
                    return Err(CorpusError::ReportMalformed(format!(
                        "{file}: line {last} beyond end of file ({count} lines)"
                    )));
                }
            }
        }
    }
    Ok(map)
}
