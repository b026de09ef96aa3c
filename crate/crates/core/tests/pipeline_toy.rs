//! Drives the stages in-process over the bundled toy corpus (needs `node`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use hardener_core::config::RunConfig;
use hardener_core::corpus::tree_digest;
use hardener_core::equiv::Stage;
use hardener_core::llm::Gateway;
use hardener_core::pipeline::{Pipeline, PipelineError, RunStore};
use walkdir::WalkDir;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy")
}

fn config(root: &Path, out: &Path) -> RunConfig {
    let mut c = RunConfig::load(&root.join("config.toml")).unwrap();
    c.output = out.to_path_buf();
    c
}

fn gateway(c: &RunConfig) -> Gateway {
    c.gateway().unwrap()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(dir).unwrap().to_string_lossy().into_owned();
            (rel, fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn stages_compose_and_identity_stages_cost_nothing() {
    let corpus_before = tree_digest(&fixture().join("corpus")).unwrap();
    let tmp = tempfile::tempdir().unwrap();

    let staged = tmp.path().join("staged");
    let c = config(&fixture(), &staged);
    {
        let g = gateway(&c);
        Pipeline::new(&c, &g).unwrap().mutate().unwrap();
    }
    {
        let g = gateway(&c);
        let p = Pipeline::new(&c, &g).unwrap();
        p.screen().unwrap();
        let verdicts = p.store().verdicts().unwrap();
        let judged = verdicts.iter().filter(|v| v.verdict.stage == Stage::Judge).count();
        assert!(verdicts.iter().any(|v| v.verdict.stage == Stage::ByteIdentity));
        assert!(verdicts.iter().any(|v| v.verdict.stage == Stage::StrippedIdentity));
        assert_eq!(g.calls(), judged, "only judge-stage mutants reach the gateway");
        for v in verdicts.iter().filter(|v| v.verdict.stage != Stage::Judge) {
            assert_eq!(v.verdict.llm_calls, 0);
        }
    }
    {
        let g = gateway(&c);
        let p = Pipeline::new(&c, &g).unwrap();
        p.gentest().unwrap();
        p.report().unwrap();
    }

    let whole = tmp.path().join("whole");
    let c2 = config(&fixture(), &whole);
    let g = gateway(&c2);
    let outcome = Pipeline::new(&c2, &g).unwrap().run().unwrap();
    assert!(!outcome.budget_exhausted);

    assert_eq!(snapshot(&staged), snapshot(&whole));
    assert_eq!(tree_digest(&fixture().join("corpus")).unwrap(), corpus_before, "corpus must stay untouched");
}

fn copy_tree(from: &Path, to: &Path) {
    for e in WalkDir::new(from) {
        let e = e.unwrap();
        let dest = to.join(e.path().strip_prefix(from).unwrap());
        if e.file_type().is_dir() {
            fs::create_dir_all(&dest).unwrap();
        } else {
            fs::copy(e.path(), &dest).unwrap();
        }
    }
}

#[test]
fn stored_mutants_are_refused_after_source_change() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("toy");
    copy_tree(&fixture(), &root);
    let out = tmp.path().join("out");
    let mut c = config(&root, &out);
    c.budgets.mutants_per_class = 1;
    {
        let g = gateway(&c);
        Pipeline::new(&c, &g).unwrap().mutate().unwrap();
    }
    let account = root.join("corpus/src/Account.js");
    let text = fs::read_to_string(&account).unwrap();
    fs::write(&account, text.replace("return this.posts.length;", "return this.posts.length; // count")).unwrap();

    let g = gateway(&c);
    let err = Pipeline::new(&c, &g).unwrap().screen().unwrap_err();
    assert!(matches!(&err, PipelineError::DigestMismatch { class_id, .. } if class_id == "Account"), "{err}");
}

#[test]
fn screen_needs_stored_mutants() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(&fixture(), tmp.path());
    let g = gateway(&c);
    let err = Pipeline::new(&c, &g).unwrap().screen().unwrap_err();
    assert!(matches!(err, PipelineError::MissingStage { stage: "mutate", .. }), "{err}");
}

#[test]
fn foreign_directories_are_not_overwritten() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("notes.txt"), "mine").unwrap();
    assert!(matches!(RunStore::open(tmp.path()), Err(PipelineError::OutputNotOwned(_))));
    let fresh = tmp.path().join("fresh");
    RunStore::open(&fresh).unwrap();
    RunStore::open(&fresh).unwrap();
}
