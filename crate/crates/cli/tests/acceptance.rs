//! Acceptance criteria, one line of output each. Runs as a plain binary so
//! the verdict lines always reach the test log.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use hardener_core::corpus::{CommentGrammar, CoverageMap};
use hardener_core::equiv::{
    format_ratio, score, strip_comments, Decision, EquivalenceVerdict, EvalMode, Label, Stage,
};
use hardener_core::mutagen::MutantStatus;
use hardener_core::report::{summarize, CertifiedRecord, ClassRecord, MutantRecord, RunRecords, VerdictRecord};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use serde_json::Value;
use walkdir::WalkDir;

type Outcome = Result<String, String>;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").canonicalize().unwrap()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// ---------------------------------------------------------------- scoring

#[derive(Clone, Copy)]
enum Kind {
    JudgeEq,
    JudgeNeq,
    Unsure,
    Byte,
    Stripped,
}

fn verdict(kind: Kind) -> EquivalenceVerdict {
    let (decision, stage) = match kind {
        Kind::JudgeEq => (Decision::Equivalent, Stage::Judge),
        Kind::JudgeNeq => (Decision::NonEquivalent, Stage::Judge),
        Kind::Unsure => (Decision::NoAnswer, Stage::Judge),
        Kind::Byte => (Decision::Equivalent, Stage::ByteIdentity),
        Kind::Stripped => (Decision::Equivalent, Stage::StrippedIdentity),
    };
    EquivalenceVerdict { decision, stage, judge_explanation: None, cause: None, llm_calls: 0 }
}

/// Labelled verdicts that a mode should fold into exactly (tp, fp, tn, fn),
/// spreading positives over every verdict kind the mode credits and adding
/// verdicts of the kinds it must ignore.
fn items_for(mode: EvalMode, tp: u64, fp: u64, tn: u64, fn_: u64) -> Vec<(EquivalenceVerdict, Label)> {
    let credited: &[Kind] = match mode {
        EvalMode::UnsureExcluded => &[Kind::JudgeEq],
        EvalMode::UnsureAsEquivalent => &[Kind::JudgeEq, Kind::Unsure],
        EvalMode::IdenticalIncluded => &[Kind::JudgeEq, Kind::Unsure, Kind::Byte],
        EvalMode::StripThenJudge => &[Kind::JudgeEq, Kind::Unsure, Kind::Byte, Kind::Stripped],
    };
    let ignored: &[Kind] = match mode {
        EvalMode::UnsureExcluded => &[Kind::Unsure, Kind::Byte, Kind::Stripped],
        EvalMode::UnsureAsEquivalent => &[Kind::Byte, Kind::Stripped],
        EvalMode::IdenticalIncluded => &[Kind::Stripped],
        EvalMode::StripThenJudge => &[],
    };
    let judged = &credited[..credited.len().min(2)];
    let mut items = Vec::new();
    for i in 0..tp {
        items.push((verdict(credited[i as usize % credited.len()]), Label::Equivalent));
    }
    for i in 0..fp {
        items.push((verdict(judged[i as usize % judged.len()]), Label::NonEquivalent));
    }
    items.extend((0..tn).map(|_| (verdict(Kind::JudgeNeq), Label::NonEquivalent)));
    items.extend((0..fn_).map(|_| (verdict(Kind::JudgeNeq), Label::Equivalent)));
    for (i, k) in ignored.iter().cycle().take(ignored.len() * 3).enumerate() {
        let label = if i % 2 == 0 { Label::Equivalent } else { Label::NonEquivalent };
        items.push((verdict(*k), label));
    }
    items
}

fn check_ratios(name: &str, mode: EvalMode, counts: [u64; 4], expected: (&str, &str)) -> Result<String, String> {
    let [tp, fp, tn, fn_] = counts;
    let s = score(&items_for(mode, tp, fp, tn, fn_), mode).map_err(|e| e.to_string())?;
    let m = s.matrix;
    ensure(
        [m.tp, m.fp, m.tn, m.fn_] == counts,
        format!("{name}: folded to {:?}, expected {counts:?}", [m.tp, m.fp, m.tn, m.fn_]),
    )?;
    let got = (format_ratio(s.precision), format_ratio(s.recall));
    ensure(
        got.0 == expected.0 && got.1 == expected.1,
        format!("{name}: got ({}, {}), expected ({}, {})", got.0, got.1, expected.0, expected.1),
    )?;
    Ok(format!("{name} ({}, {})", got.0, got.1))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let rows = [
        (EvalMode::UnsureExcluded, [56, 2, 205, 72], ("0.97", "0.44")),
        (EvalMode::UnsureAsEquivalent, [65, 17, 205, 72], ("0.79", "0.47")),
        (EvalMode::IdenticalIncluded, [161, 17, 205, 72], ("0.90", "0.69")),
        (EvalMode::StripThenJudge, [183, 9, 251, 8], ("0.95", "0.96")),
    ];
    let mut done = Vec::new();
    for (mode, counts, expected) in rows {
        done.push(check_ratios(&format!("{mode:?}"), mode, counts, expected)?);
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("{} in {elapsed:.0?}", done.join("; ")))
}

fn criterion_2() -> Outcome {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (name, mode, counts, expected) in [
        ("Messenger", EvalMode::UnsureExcluded, [17, 2, 50, 19], ("0.89", "0.47")),
        ("WhatsApp", EvalMode::StripThenJudge, [47, 1, 66, 0], ("0.99", "1.00")),
    ] {
        match check_ratios(&format!("{name} {mode:?}"), mode, counts, expected) {
            Ok(s) => ok.push(s),
            Err(e) => failed.push(e),
        }
    }
    if failed.is_empty() {
        Ok(ok.join("; "))
    } else {
        Err(failed.join("; "))
    }
}

// ---------------------------------------------------------------- summaries

fn records(generated: u64, buckets: [(Stage, Decision, u64); 4], build_and_pass: u64) -> RunRecords {
    let mut r = RunRecords::default();
    r.classes.push(ClassRecord {
        class_id: "C".into(),
        group: "all".into(),
        source_path: "src/C.kt".into(),
        source_digest: "d".into(),
        has_tests: true,
    });
    let mut verdicts = buckets.iter().flat_map(|(s, d, n)| std::iter::repeat((*s, *d)).take(*n as usize));
    for i in 0..generated {
        let id = format!("C-m{i}");
        let status = if i < build_and_pass { MutantStatus::BuildsAndPasses } else { MutantStatus::BuildFailed };
        r.mutants.push(MutantRecord {
            mutant_id: id.clone(),
            class_id: "C".into(),
            status,
            regions: vec![],
            source_digest: "d".into(),
            mutant_digest: "m".into(),
            note: None,
        });
        if status == MutantStatus::BuildsAndPasses {
            if let Some((stage, decision)) = verdicts.next() {
                r.verdicts.push(VerdictRecord {
                    mutant_id: id,
                    class_id: "C".into(),
                    verdict: EquivalenceVerdict { decision, stage, judge_explanation: None, cause: None, llm_calls: 0 },
                });
            }
        }
    }
    r
}

fn criterion_3() -> Outcome {
    let r = records(
        31_677,
        [
            (Stage::ByteIdentity, Decision::Equivalent, 2_246),
            (Stage::Judge, Decision::Equivalent, 1_016),
            (Stage::Judge, Decision::NoAnswer, 1_173),
            (Stage::Judge, Decision::NonEquivalent, 4_660),
        ],
        9_095,
    );
    let t = summarize(&r).totals;
    let pcts: Vec<u64> =
        std::iter::once(t.build_and_pass_pct()).chain(t.belief_pcts()).map(|p| p.unwrap_or(999)).collect();
    ensure(pcts == [29, 25, 11, 13, 51], format!("percentages {pcts:?}"))?;
    let sum = t.syntactically_identical + t.believed_equivalent + t.no_answer + t.believed_non_equivalent;
    ensure(sum == 9_095 && t.build_and_pass == 9_095, format!("belief buckets sum to {sum}"))?;
    Ok("29% / 25% / 11% / 13% / 51%, buckets sum to 9095".into())
}

fn criterion_4() -> Outcome {
    let mut r = RunRecords::default();
    let mut adds = CoverageMap::default();
    adds.insert("src/C.kt", 1);
    for i in 0..571 {
        r.certified.push(CertifiedRecord {
            candidate_id: format!("t{i}"),
            mutant_id: format!("m{i}"),
            class_id: format!("C{}", i % 40),
            new_test_names: vec!["testX".into()],
            coverage_delta: Some(if i < 277 { CoverageMap::default() } else { adds.clone() }),
        });
    }
    let t = summarize(&r).totals;
    ensure(t.tests_without_coverage_delta == 277, format!("{} without delta", t.tests_without_coverage_delta))?;
    ensure(t.no_coverage_pct() == Some(49), format!("{:?}%", t.no_coverage_pct()))?;
    Ok("277 of 571 -> 49%".into())
}

// ---------------------------------------------------------------- end to end

struct Run {
    out: PathBuf,
    elapsed: Duration,
    status: Option<i32>,
    stderr: String,
}

fn pipeline(out: &Path) -> Run {
    let config = fixtures().join("toy/config.toml");
    let start = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_hardener"))
        .args(["pipeline", "--config", config.to_str().unwrap(), "--mode", "replay", "--out", out.to_str().unwrap()])
        .output()
        .expect("spawn hardener");
    Run {
        out: out.to_path_buf(),
        elapsed: start.elapsed(),
        status: o.status.code(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn jsonl(path: &Path) -> Result<Vec<Value>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines().map(|l| serde_json::from_str(l).map_err(|e| e.to_string())).collect()
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

// Requires the test module, calls every exported test function and prints
// the names of those that throw. Exit status 1 when any did.
const RUN_ALL: &str = r#"
const mod = require(process.argv[1]);
const failed = [];
for (const [name, fn] of Object.entries(mod)) {
  if (!name.startsWith('test') || typeof fn !== 'function') continue;
  try { fn(); } catch (e) { failed.push(name); }
}
console.log(failed.join('\n'));
process.exit(failed.length ? 1 : 0);
"#;

fn node(args: &[&str]) -> (bool, String) {
    let o = Command::new("node").args(args).output().expect("node on PATH");
    (o.status.success(), String::from_utf8_lossy(&o.stdout).into_owned())
}

/// Re-runs one certified test against fresh copies of the corpus, without
/// the adapter scripts or any hardener code.
fn brute_force(cert_dir: &Path, artifact: &Value) -> Result<(), String> {
    let corpus = fixtures().join("toy/corpus");
    let src_rel = artifact["source_path"].as_str().ok_or("source_path")?;
    let test_rel = artifact["test_class_path"].as_str().ok_or("test_class_path")?;
    let test_name = Path::new(test_rel).file_name().unwrap();
    let src_name = Path::new(src_rel).file_name().unwrap().to_string_lossy().into_owned();
    let tests = fs::read_to_string(cert_dir.join(test_name)).map_err(|e| e.to_string())?;
    let mutant = fs::read_to_string(cert_dir.join(format!("{src_name}.mutant"))).map_err(|e| e.to_string())?;
    let new: Vec<&str> = artifact["new_test_names"].as_array().ok_or("names")?.iter().filter_map(Value::as_str).collect();

    let tmp = tempfile::tempdir().unwrap();
    let original = tmp.path().join("original");
    copy_tree(&corpus, &original);
    fs::write(original.join(test_rel), &tests).unwrap();
    let test_file = original.join(test_rel);
    ensure(node(&["--check", test_file.to_str().unwrap()]).0, "test class does not parse")?;
    for run in 1..=5 {
        let (ok, failing) = node(&["-e", RUN_ALL, test_file.to_str().unwrap()]);
        ensure(ok, format!("run {run} on the original failed: {}", failing.trim()))?;
    }

    let mutated = tmp.path().join("mutated");
    copy_tree(&corpus, &mutated);
    fs::write(mutated.join(src_rel), &mutant).unwrap();
    fs::write(mutated.join(test_rel), &tests).unwrap();
    ensure(node(&["--check", mutated.join(src_rel).to_str().unwrap()]).0, "mutant does not parse")?;
    let (ok, failing) = node(&["-e", RUN_ALL, mutated.join(test_rel).to_str().unwrap()]);
    let failing: Vec<&str> = failing.lines().filter(|l| !l.is_empty()).collect();
    ensure(!ok, "every test passes on the mutant")?;
    ensure(failing.iter().all(|f| new.contains(f)), format!("old tests fail on the mutant: {failing:?}"))?;
    Ok(())
}

fn criterion_5(run: &Run) -> Outcome {
    ensure(run.status == Some(0), format!("exit {:?}: {}", run.status, run.stderr.trim()))?;
    ensure(run.elapsed < Duration::from_secs(60), format!("took {:?}", run.elapsed))?;
    let out = &run.out;

    let statuses: Vec<String> =
        jsonl(&out.join("mutants.jsonl"))?.iter().map(|m| m["status"].as_str().unwrap_or("").to_string()).collect();
    for needed in ["BuildsAndPasses", "BuildFailed", "MarkerInvalid", "KilledByExistingTests"] {
        ensure(statuses.iter().any(|s| s == needed), format!("fixture has no {needed} mutant"))?;
    }

    let certified = jsonl(&out.join("certified.jsonl"))?;
    ensure(certified.len() >= 3, format!("{} certified tests", certified.len()))?;
    let mut empty_delta = 0;
    for c in &certified {
        let id = c["candidate_id"].as_str().ok_or("candidate_id")?;
        let dir = out.join("certified").join(id);
        let artifact: Value = serde_json::from_str(&fs::read_to_string(dir.join("assurance.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let r = &artifact["report"];
        ensure(
            r["buildable"] == true && r["passes_on_original"] == true && r["run_count"] == 5 && r["kills_mutant"] == true,
            format!("{id}: recorded assurances incomplete"),
        )?;
        brute_force(&dir, &artifact).map_err(|e| format!("{id}: {e}"))?;
        if c["coverage_delta"].as_object().is_some_and(|m| m.is_empty()) {
            empty_delta += 1;
        }
    }
    ensure(empty_delta >= 1, "no certified test with an empty coverage delta")?;

    let verdicts = jsonl(&out.join("verdicts.jsonl"))?;
    let transcript = jsonl(&fixtures().join("toy/transcript.jsonl"))?;
    let judge_prompts: Vec<&str> = transcript
        .iter()
        .filter_map(|e| e["prompt"].as_str())
        .filter(|p| p.starts_with("I'm going to show you"))
        .collect();
    let mut identity = 0;
    for v in &verdicts {
        let stage = v["stage"].as_str().unwrap_or("");
        if stage == "Judge" {
            continue;
        }
        identity += 1;
        ensure(v["llm_calls"] == 0, format!("{} charged gateway calls", v["mutant_id"]))?;
        let class = v["class_id"].as_str().unwrap_or("");
        ensure(
            !judge_prompts.iter().any(|p| p.contains(&format!("class {class} {{"))),
            format!("{class}: a judge request exists for an identity-resolved mutant"),
        )?;
    }
    ensure(identity >= 1, "no identity-resolved mutants in the fixture")?;
    let judged = verdicts.iter().filter(|v| v["stage"] == "Judge").count();
    ensure(judge_prompts.len() == judged, format!("{} judge requests for {judged} judged mutants", judge_prompts.len()))?;

    Ok(format!(
        "{} certified (re-executed), {empty_delta} without coverage delta, {identity} identity-resolved with 0 calls, {:.1?}",
        certified.len(),
        run.elapsed
    ))
}

// ---------------------------------------------------------------- normalisation

fn js_grammar() -> CommentGrammar {
    CommentGrammar::new(
        vec!["//".into()],
        vec![("/*".into(), "*/".into())],
        vec!["`".into(), "\"".into(), "'".into()],
    )
    .unwrap()
}

fn generated_source() -> impl Strategy<Value = (String, Vec<String>)> {
    let lit = ("[\"'`]", "([a-z ]|//|/\\*|\\*/|\\\\\\\\){0,6}").prop_map(|(q, body)| format!("{q}{body}{q}"));
    let piece = prop_oneof![
        3 => "[a-z]{1,5}".prop_map(|s| (s, None)),
        1 => "[(){};=+,.]".prop_map(|s| (s, None)),
        2 => lit.prop_map(|s| (s.clone(), Some(s))),
        1 => "[a-z '\"]{0,8}".prop_map(|c| (format!("/*{c}*/"), None)),
        1 => "[a-z '\"`]{0,8}".prop_map(|c| (format!("//{c}\n"), None)),
        1 => Just(("\n".to_string(), None)),
    ];
    prop::collection::vec(piece, 0..40).prop_map(|pieces| {
        let literals = pieces.iter().filter_map(|(_, l)| l.clone()).collect();
        let text = pieces.into_iter().map(|(s, _)| s).collect::<Vec<_>>().join(" ");
        (text, literals)
    })
}

fn comment_only(original: &str, mutant: &str) -> bool {
    let code = |s: &str| -> Vec<String> {
        s.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with("//"))
            .map(String::from)
            .collect()
    };
    code(original) == code(mutant)
}

fn criterion_6(run: &Run) -> Outcome {
    let g = js_grammar();
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    runner
        .run(&generated_source(), |(src, literals)| {
            let once = strip_comments(&src, &g).token_text;
            prop_assert_eq!(&strip_comments(&once, &g).token_text, &once);
            for l in &literals {
                prop_assert!(once.contains(l.as_str()), "literal {:?} lost", l);
            }
            Ok(())
        })
        .map_err(|e| format!("generated corpus: {e}"))?;

    let corpus = fixtures().join("toy/corpus");
    let classes: BTreeMap<String, String> = jsonl(&run.out.join("classes.jsonl"))?
        .iter()
        .map(|c| (c["class_id"].as_str().unwrap().to_string(), c["source_path"].as_str().unwrap().to_string()))
        .collect();
    let verdicts: BTreeMap<String, Value> = jsonl(&run.out.join("verdicts.jsonl"))?
        .into_iter()
        .map(|v| (v["mutant_id"].as_str().unwrap().to_string(), v))
        .collect();
    let mut seen = 0;
    for m in jsonl(&run.out.join("mutants.jsonl"))? {
        if m["status"] != "BuildsAndPasses" {
            continue;
        }
        let id = m["mutant_id"].as_str().unwrap();
        let src_rel = &classes[m["class_id"].as_str().unwrap()];
        let file = Path::new(src_rel).file_name().unwrap();
        let original = fs::read_to_string(corpus.join(src_rel)).unwrap();
        let mutant = fs::read_to_string(run.out.join("mutants").join(id).join(file)).unwrap();
        if !comment_only(&original, &mutant) {
            continue;
        }
        seen += 1;
        let v = verdicts.get(id).ok_or(format!("{id} has no verdict"))?;
        ensure(
            v["decision"] == "Equivalent" && v["stage"] != "Judge" && v["llm_calls"] == 0,
            format!("{id}: comment-only mutant classified {} at {} with {} calls", v["decision"], v["stage"], v["llm_calls"]),
        )?;
    }
    ensure(seen >= 1, "no comment-only mutants found in the fixture run")?;
    Ok(format!("1000 generated cases; {seen} comment-only fixture mutants Equivalent with 0 calls"))
}

// ---------------------------------------------------------------- determinism

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| (e.path().strip_prefix(dir).unwrap().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect()
}

fn criterion_7(a: &Run, b: &Run) -> Outcome {
    ensure(a.status == Some(0) && b.status == Some(0), format!("exits {:?} / {:?}", a.status, b.status))?;
    let (sa, sb) = (snapshot(&a.out), snapshot(&b.out));
    for required in ["mutants.jsonl", "verdicts.jsonl", "certified.jsonl", "summary.json", "summary.txt"] {
        ensure(sa.contains_key(required), format!("{required} missing"))?;
    }
    ensure(sa.keys().any(|k| k.starts_with("certified/")), "no certified directories")?;
    let differing: Vec<&String> = sa.keys().chain(sb.keys()).filter(|k| sa.get(*k) != sb.get(*k)).collect();
    ensure(differing.is_empty(), format!("differ: {differing:?}"))?;
    Ok(format!("{} files byte-identical across two runs", sa.len()))
}

// ----------------------------------------------------------------

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    })
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let first = pipeline(&tmp.path().join("run1"));
    let second = pipeline(&tmp.path().join("run2"));

    let results: Vec<(u8, &str, Outcome)> = vec![
        (1, "detector precision/recall from reference counts", guarded(criterion_1)),
        (2, "per-group precision/recall spot checks", guarded(criterion_2)),
        (3, "funnel percentages", guarded(criterion_3)),
        (4, "share of tests without coverage gain", guarded(criterion_4)),
        (5, "end-to-end replay on the toy corpus", guarded(|| criterion_5(&first))),
        (6, "normalisation properties", guarded(|| criterion_6(&first))),
        (7, "determinism across runs", guarded(|| criterion_7(&first, &second))),
    ];
    let mut failures = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {n}: {name}: {detail}"),
            Err(why) => {
                failures += 1;
                println!("FAIL criterion {n}: {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", results.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
