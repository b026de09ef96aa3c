use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Written by the adapter's coverage command into the workspace root.
pub const COVERAGE_FILE: &str = "coverage.txt";

/// Covered line numbers (1-based) per corpus-relative file path.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoverageMap {
    files: BTreeMap<String, BTreeSet<u32>>,
}

impl CoverageMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, file: impl Into<String>, line: u32) {
        self.files.entry(file.into()).or_default().insert(line);
    }

    pub fn lines(&self, file: &str) -> Option<&BTreeSet<u32>> {
        self.files.get(file)
    }

    pub fn files(&self) -> impl Iterator<Item = (&str, &BTreeSet<u32>)> {
        self.files.iter().map(|(f, l)| (f.as_str(), l))
    }

    /// True when no file has a covered line.
    pub fn is_empty(&self) -> bool {
        self.files.values().all(BTreeSet::is_empty)
    }

    pub fn line_count(&self) -> usize {
        self.files.values().map(BTreeSet::len).sum()
    }

    /// Lines covered here but not in `baseline`. Files left without added
    /// lines are dropped.
    pub fn added_over(&self, baseline: &CoverageMap) -> CoverageMap {
        let mut files = BTreeMap::new();
        for (file, lines) in &self.files {
            let added: BTreeSet<u32> = match baseline.files.get(file) {
                Some(base) => lines.difference(base).copied().collect(),
                None => lines.clone(),
            };
            if !added.is_empty() {
                files.insert(file.clone(), added);
            }
        }
        CoverageMap { files }
    }

    pub fn without_file(mut self, file: &str) -> CoverageMap {
        self.files.remove(file);
        self
    }
}

/// Parses `path:n1,n2,...` lines (ascending, 1-based line numbers).
pub fn parse_coverage_report(text: &str) -> Result<CoverageMap, CorpusError> {
    let mut map = CoverageMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (path, numbers) = line
            .rsplit_once(':')
            .ok_or_else(|| CorpusError::ReportMalformed(format!("line {}: missing ':'", idx + 1)))?;
        if path.is_empty() {
            return Err(CorpusError::ReportMalformed(format!("line {}: empty path", idx + 1)));
        }
        let entry = map.files.entry(path.to_string()).or_default();
        let mut prev = 0u32;
        for tok in numbers.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let n: u32 = tok
                .parse()
                .map_err(|_| CorpusError::ReportMalformed(format!("line {}: bad line number {tok:?}", idx + 1)))?;
            if n == 0 {
                return Err(CorpusError::ReportMalformed(format!("line {}: line number 0", idx + 1)));
            }
            if n <= prev {
                return Err(CorpusError::ReportMalformed(format!(
                    "line {}: line numbers not ascending ({prev} then {n})",
                    idx + 1
                )));
            }
            prev = n;
            entry.insert(n);
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_report() {
        let map = parse_coverage_report("src/A:1,2,5\n").unwrap();
        let lines: Vec<u32> = map.lines("src/A").unwrap().iter().copied().collect();
        assert_eq!(lines, vec![1, 2, 5]);
        assert!(parse_coverage_report("").unwrap().is_empty());
        assert!(parse_coverage_report("src/A:\n").unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_reports() {
        for bad in ["src/A:0,1", "src/A:3,2", "src/A:x", "no-colon", ":1"] {
            assert!(matches!(parse_coverage_report(bad), Err(CorpusError::ReportMalformed(_))), "{bad}");
        }
    }

    #[test]
    fn added_lines() {
        let base = parse_coverage_report("a:1,2\nb:4").unwrap();
        let new = parse_coverage_report("a:1,2,3\nb:4\nc:7").unwrap();
        let delta = new.added_over(&base);
        assert_eq!(delta, parse_coverage_report("a:3\nc:7").unwrap());
        assert!(base.added_over(&base).is_empty());
    }
}
