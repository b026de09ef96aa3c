use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{CorpusError, TestFileConvention};
use crate::digest::sha256_hex;

/// One class the pipeline hardens, together with its existing test class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassUnderTest {
    pub id: String,
    /// Reporting group (the platform, in a multi-app corpus).
    pub group: String,
    pub source_path: PathBuf,
    pub source_text: String,
    pub test_class_path: PathBuf,
    /// Empty when the class has no test file yet.
    pub test_class_text: String,
}

impl ClassUnderTest {
    pub fn has_tests(&self) -> bool {
        !self.test_class_text.trim().is_empty()
    }

    /// Digest of the source the class was read with; stored mutants carry it
    /// so they can be refused once the class changes.
    pub fn source_digest(&self) -> String {
        sha256_hex(&self.source_text)
    }
}

/// A discovered corpus: its root directory and classes in manifest order.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub root: PathBuf,
    pub classes: Vec<ClassUnderTest>,
    pub warnings: Vec<String>,
}

impl Corpus {
    pub fn class(&self, id: &str) -> Option<&ClassUnderTest> {
        self.classes.iter().find(|c| c.id == id)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    #[serde(default, rename = "class")]
    classes: Vec<ManifestEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    id: String,
    source: PathBuf,
    #[serde(default)]
    test: Option<PathBuf>,
    #[serde(default)]
    group: Option<String>,
}

fn check_relative(manifest: &Path, p: &Path) -> Result<(), CorpusError> {
    let ok = p.is_relative()
        && p.components().all(|c| matches!(c, std::path::Component::Normal(_) | std::path::Component::CurDir));
    if ok {
        Ok(())
    } else {
        Err(CorpusError::ManifestMalformed {
            path: manifest.to_path_buf(),
            reason: format!("path {} must be relative to the corpus root", p.display()),
        })
    }
}

/// Reads a corpus manifest (`[[class]]` tables with `id`, `source` and an
/// optional `test`, resolved relative to the manifest's directory).
///
/// A missing `test` key falls back to `convention`. A test file that does not
/// exist yields an empty test class and a warning.
pub fn discover_targets(
    manifest_path: &Path,
    convention: &TestFileConvention,
) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(manifest_path).map_err(|e| CorpusError::io(manifest_path, e))?;
    let manifest: ManifestFile = toml::from_str(&text).map_err(|e| CorpusError::ManifestMalformed {
        path: manifest_path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let root = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."));

    let mut seen = std::collections::BTreeSet::new();
    for entry in &manifest.classes {
        if entry.id.trim().is_empty() {
            return Err(CorpusError::ManifestMalformed {
                path: manifest_path.to_path_buf(),
                reason: "empty class id".into(),
            });
        }
        if !seen.insert(entry.id.as_str()) {
            return Err(CorpusError::ManifestMalformed {
                path: manifest_path.to_path_buf(),
                reason: format!("duplicate class id {}", entry.id),
            });
        }
        check_relative(manifest_path, &entry.source)?;
        if let Some(test) = &entry.test {
            check_relative(manifest_path, test)?;
        }
    }

    let missing: Vec<PathBuf> = manifest
        .classes
        .iter()
        .filter(|e| !root.join(&e.source).is_file())
        .map(|e| e.source.clone())
        .collect();
    if !missing.is_empty() {
        return Err(CorpusError::SourceMissing(missing));
    }

    let mut classes = Vec::with_capacity(manifest.classes.len());
    let mut warnings = Vec::new();
    for entry in manifest.classes {
        let source_file = root.join(&entry.source);
        let source_text = fs::read_to_string(&source_file).map_err(|e| CorpusError::io(&source_file, e))?;
        if source_text.trim().is_empty() {
            return Err(CorpusError::ManifestMalformed {
                path: manifest_path.to_path_buf(),
                reason: format!("class {} has an empty source file", entry.id),
            });
        }
        let test_class_path = entry.test.unwrap_or_else(|| convention.test_path_for(&entry.source));
        let test_file = root.join(&test_class_path);
        let test_class_text = if test_file.is_file() {
            fs::read_to_string(&test_file).map_err(|e| CorpusError::io(&test_file, e))?
        } else {
            warnings.push(format!(
                "class {}: no test class at {}, continuing with an empty one",
                entry.id,
                test_class_path.display()
            ));
            String::new()
        };
        classes.push(ClassUnderTest {
            id: entry.id,
            group: entry.group.unwrap_or_else(|| "default".into()),
            source_path: entry.source,
            source_text,
            test_class_path,
            test_class_text,
        });
    }
    Ok(Corpus { root, classes, warnings })
}
