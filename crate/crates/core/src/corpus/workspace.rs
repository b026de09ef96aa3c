use std::collections::BTreeMap;
use std::fs;
use std::path::{Component, Path, PathBuf};

use tempfile::TempDir;
use walkdir::WalkDir;

use super::{ClassUnderTest, CorpusError};
use crate::digest::sha256_hex;

/// Directories carrying this file are never copied into workspaces (run
/// output directories that happen to live inside the corpus).
pub const OUTPUT_MARKER: &str = ".hardener-output";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Variant {
    Original,
    Mutated(String),
}

/// Files substituted byte-for-byte when a workspace is materialised.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overlay {
    files: BTreeMap<PathBuf, String>,
}

impl Overlay {
    pub fn none() -> Self {
        Self::default()
    }

    /// Replaces the class-under-test source.
    pub fn mutant(cut: &ClassUnderTest, mutated_source: impl Into<String>) -> Self {
        let mut files = BTreeMap::new();
        files.insert(cut.source_path.clone(), mutated_source.into());
        Self { files }
    }

    /// Replaces (or creates) the test class.
    pub fn with_test_class(mut self, cut: &ClassUnderTest, text: impl Into<String>) -> Self {
        self.files.insert(cut.test_class_path.clone(), text.into());
        self
    }

    pub fn files(&self) -> impl Iterator<Item = (&Path, &str)> {
        self.files.iter().map(|(p, t)| (p.as_path(), t.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }
}

/// A private copy of the corpus. The directory is removed on drop.
#[derive(Debug)]
pub struct Workspace {
    dir: TempDir,
    pub class_id: String,
    pub variant: Variant,
    pub overlay: Overlay,
}

impl Workspace {
    pub fn root(&self) -> &Path {
        self.dir.path()
    }
}

fn skip_entry(entry: &walkdir::DirEntry) -> bool {
    entry.file_type().is_dir()
        && (entry.file_name() == ".git" || entry.path().join(OUTPUT_MARKER).exists())
}

/// Copies the corpus at `corpus_root` into a fresh temporary directory and
/// applies `overlay` on top. The corpus itself is only read.
pub fn materialize_workspace(
    corpus_root: &Path,
    cut: &ClassUnderTest,
    variant: Variant,
    overlay: Overlay,
) -> Result<Workspace, CorpusError> {
    for (path, _) in overlay.files() {
        let ok = path.components().all(|c| matches!(c, Component::Normal(_)));
        if !ok || path.as_os_str().is_empty() {
            return Err(CorpusError::InvalidOverlay(path.to_path_buf()));
        }
    }
    let dir = tempfile::Builder::new()
        .prefix("hardener-ws-")
        .tempdir()
        .map_err(|e| CorpusError::io(std::env::temp_dir(), e))?;

    let walker = WalkDir::new(corpus_root).follow_links(false).into_iter();
    for entry in walker.filter_entry(|e| e.depth() == 0 || !skip_entry(e)) {
        let entry = entry.map_err(|e| {
            let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| corpus_root.to_path_buf());
            CorpusError::io(path, e.into())
        })?;
        let rel = entry.path().strip_prefix(corpus_root).expect("walkdir yields children of its root");
        if rel.as_os_str().is_empty() {
            continue;
        }
        let dest = dir.path().join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&dest).map_err(|e| CorpusError::io(&dest, e))?;
        } else if entry.file_type().is_file() {
            fs::copy(entry.path(), &dest).map_err(|e| CorpusError::io(entry.path(), e))?;
        }
    }

    for (path, text) in overlay.files() {
        let dest = dir.path().join(path);
        if let Some(parent) = dest.parent() {
            fs::create_dir_all(parent).map_err(|e| CorpusError::io(parent, e))?;
        }
        fs::write(&dest, text).map_err(|e| CorpusError::io(&dest, e))?;
    }

    Ok(Workspace { dir, class_id: cut.id.clone(), variant, overlay })
}

/// Content digest of a directory tree: relative paths and file bytes, in
/// sorted order. Output directories (see [`OUTPUT_MARKER`]) are skipped.
pub fn tree_digest(root: &Path) -> Result<String, CorpusError> {
    let mut listing = String::new();
    let walker = WalkDir::new(root).sort_by_file_name().into_iter();
    for entry in walker.filter_entry(|e| e.depth() == 0 || !skip_entry(e)) {
        let entry = entry.map_err(|e| CorpusError::io(root, e.into()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).expect("walkdir yields children of its root");
        let bytes = fs::read(entry.path()).map_err(|e| CorpusError::io(entry.path(), e))?;
        listing.push_str(&format!("{}\t{}\n", rel.to_string_lossy(), sha256_hex(&bytes)));
    }
    Ok(sha256_hex(listing))
}
