use std::path::{Path, PathBuf};
use std::time::Duration;

use regex::Regex;
use serde::Deserialize;

use super::CorpusError;

pub const WORKSPACE_PLACEHOLDER: &str = "{workspace}";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
/// Kotlin-style `@Test fun name(`.
pub const DEFAULT_TEST_METHOD_PATTERN: &str = r"@Test\s+fun\s+`?(\w+)`?\s*\(";

/// A tokenised command line. Every token is expanded by substituting the
/// workspace root for `{workspace}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandTemplate {
    tokens: Vec<String>,
}

impl CommandTemplate {
    pub fn new<I, S>(tokens: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(CorpusError::InvalidAdapter("empty command".into()));
        }
        if !tokens.iter().any(|t| t.contains(WORKSPACE_PLACEHOLDER)) {
            return Err(CorpusError::InvalidAdapter(format!(
                "command `{}` never mentions {WORKSPACE_PLACEHOLDER}",
                tokens.join(" ")
            )));
        }
        Ok(Self { tokens })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn expand(&self, workspace: &Path) -> Vec<String> {
        let root = workspace.to_string_lossy();
        self.tokens
            .iter()
            .map(|t| t.replace(WORKSPACE_PLACEHOLDER, &root))
            .collect()
    }
}

/// Lexical comment syntax of the target language, plus the string quotes the
/// comment stripper must step over.
///
/// Quote handling: `"` and `'` are single-line with backslash escapes, any
/// other one-character quote (e.g. a backtick) may span lines with backslash
/// escapes, and multi-character quotes (e.g. `"""`) are raw and may span lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentGrammar {
    line: Vec<String>,
    block: Vec<(String, String)>,
    quotes: Vec<String>,
}

impl CommentGrammar {
    pub fn new(
        line: Vec<String>,
        block: Vec<(String, String)>,
        quotes: Vec<String>,
    ) -> Result<Self, CorpusError> {
        if line.is_empty() && block.is_empty() {
            return Err(CorpusError::InvalidAdapter("comment grammar is empty".into()));
        }
        if line.iter().any(String::is_empty) {
            return Err(CorpusError::InvalidAdapter("empty line-comment prefix".into()));
        }
        for (open, close) in &block {
            if open.is_empty() || close.is_empty() || open == close {
                return Err(CorpusError::InvalidAdapter(format!(
                    "block comment delimiters must be non-empty and distinct: {open:?} {close:?}"
                )));
            }
        }
        if quotes.iter().any(String::is_empty) {
            return Err(CorpusError::InvalidAdapter("empty string quote".into()));
        }
        Ok(Self { line, block, quotes })
    }

    /// `//` and `/* */` comments, `"`, `'` and `"""` strings.
    pub fn c_family() -> Self {
        Self {
            line: vec!["//".into()],
            block: vec![("/*".into(), "*/".into())],
            quotes: vec!["\"\"\"".into(), "\"".into(), "'".into()],
        }
    }

    pub fn line_prefixes(&self) -> &[String] {
        &self.line
    }

    pub fn block_pairs(&self) -> &[(String, String)] {
        &self.block
    }

    pub fn quotes(&self) -> &[String] {
        &self.quotes
    }
}

impl Default for CommentGrammar {
    fn default() -> Self {
        Self::c_family()
    }
}

/// Maps a class-under-test path to its test class: a sibling file whose stem
/// carries `suffix` (`src/Foo.kt` -> `src/FooTest.kt`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestFileConvention {
    pub suffix: String,
}

impl Default for TestFileConvention {
    fn default() -> Self {
        Self { suffix: "Test".into() }
    }
}

impl TestFileConvention {
    pub fn test_path_for(&self, source: &Path) -> PathBuf {
        let stem = source.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let name = match source.extension() {
            Some(ext) => format!("{stem}{}.{}", self.suffix, ext.to_string_lossy()),
            None => format!("{stem}{}", self.suffix),
        };
        source.with_file_name(name)
    }
}

/// The command contract through which the pipeline builds, tests and measures
/// a workspace without knowing anything about the toolchain behind it.
#[derive(Debug, Clone)]
pub struct TargetAdapter {
    pub build_command: CommandTemplate,
    pub test_command: CommandTemplate,
    pub coverage_command: Option<CommandTemplate>,
    pub comment_grammar: CommentGrammar,
    pub test_file_convention: TestFileConvention,
    pub test_method_pattern: Regex,
    pub timeout: Duration,
}

impl TargetAdapter {
    pub fn new(build: CommandTemplate, test: CommandTemplate) -> Self {
        Self {
            build_command: build,
            test_command: test,
            coverage_command: None,
            comment_grammar: CommentGrammar::default(),
            test_file_convention: TestFileConvention::default(),
            test_method_pattern: Regex::new(DEFAULT_TEST_METHOD_PATTERN).expect("static regex"),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    /// Test method names declared in `test_class_text`, in order of appearance.
    pub fn test_method_names(&self, test_class_text: &str) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for caps in self.test_method_pattern.captures_iter(test_class_text) {
            if let Some(m) = caps.get(1) {
                let name = m.as_str().to_string();
                if !names.contains(&name) {
                    names.push(name);
                }
            }
        }
        names
    }
}

/// On-disk form of an adapter (the `[adapter]` table of a run config).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterSpec {
    pub build: Vec<String>,
    pub test: Vec<String>,
    #[serde(default)]
    pub coverage: Option<Vec<String>>,
    #[serde(default)]
    pub timeout_secs: Option<u64>,
    #[serde(default)]
    pub test_suffix: Option<String>,
    #[serde(default)]
    pub test_method_pattern: Option<String>,
    #[serde(default)]
    pub comments: Option<CommentSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommentSpec {
    #[serde(default)]
    pub line: Vec<String>,
    #[serde(default)]
    pub block: Vec<(String, String)>,
    #[serde(default)]
    pub quotes: Option<Vec<String>>,
}

impl TryFrom<AdapterSpec> for TargetAdapter {
    type Error = CorpusError;

    fn try_from(spec: AdapterSpec) -> Result<Self, Self::Error> {
        let mut adapter = TargetAdapter::new(
            CommandTemplate::new(spec.build)?,
            CommandTemplate::new(spec.test)?,
        );
        adapter.coverage_command = spec.coverage.map(CommandTemplate::new).transpose()?;
        if let Some(secs) = spec.timeout_secs {
            if secs == 0 {
                return Err(CorpusError::InvalidAdapter("timeout_secs must be positive".into()));
            }
            adapter.timeout = Duration::from_secs(secs);
        }
        if let Some(suffix) = spec.test_suffix {
            adapter.test_file_convention = TestFileConvention { suffix };
        }
        if let Some(pattern) = spec.test_method_pattern {
            let re = Regex::new(&pattern)
                .map_err(|e| CorpusError::InvalidAdapter(format!("test_method_pattern: {e}")))?;
            if re.captures_len() < 2 {
                return Err(CorpusError::InvalidAdapter(
                    "test_method_pattern needs a capture group for the test name".into(),
                ));
            }
            adapter.test_method_pattern = re;
        }
        if let Some(c) = spec.comments {
            let quotes = c.quotes.unwrap_or_else(|| CommentGrammar::c_family().quotes);
            adapter.comment_grammar = CommentGrammar::new(c.line, c.block, quotes)?;
        }
        Ok(adapter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_requires_workspace_placeholder() {
        assert!(CommandTemplate::new(["make", "test"]).is_err());
        let cmd = CommandTemplate::new(["make", "-C", "{workspace}"]).unwrap();
        assert_eq!(cmd.expand(Path::new("/tmp/ws")), vec!["make", "-C", "/tmp/ws"]);
    }

    #[test]
    fn grammar_rejects_degenerate_blocks() {
        assert!(CommentGrammar::new(vec![], vec![], vec![]).is_err());
        assert!(CommentGrammar::new(vec![], vec![("#".into(), "#".into())], vec![]).is_err());
        assert!(CommentGrammar::new(vec![], vec![("".into(), "*/".into())], vec![]).is_err());
        assert!(CommentGrammar::new(vec!["#".into()], vec![], vec![]).is_ok());
    }

    #[test]
    fn sibling_test_convention() {
        let conv = TestFileConvention::default();
        assert_eq!(
            conv.test_path_for(Path::new("src/a/Account.kt")),
            PathBuf::from("src/a/AccountTest.kt")
        );
        assert_eq!(conv.test_path_for(Path::new("Makefile")), PathBuf::from("MakefileTest"));
    }

    #[test]
    fn kotlin_test_names() {
        let adapter = TargetAdapter::new(
            CommandTemplate::new(["b", "{workspace}"]).unwrap(),
            CommandTemplate::new(["t", "{workspace}"]).unwrap(),
        );
        let text = "class T {\n  @Test fun first() {}\n  @Test\n  fun second() {}\n  fun helper() {}\n}";
        assert_eq!(adapter.test_method_names(text), vec!["first", "second"]);
    }
}
