use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::normalize::strip_comments;
use crate::corpus::CommentGrammar;
use crate::llm::{extract_braced_token, render, Gateway, JudgeToken, LlmError, PromptTemplate};
use crate::mutagen::MutantCandidate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Equivalent,
    NonEquivalent,
    NoAnswer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    ByteIdentity,
    StrippedIdentity,
    Judge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceVerdict {
    pub decision: Decision,
    pub stage: Stage,
    /// Judge text after a `{no}`; stored, never interpreted.
    pub judge_explanation: Option<String>,
    /// Why the judge could not be consulted, when it could not.
    pub cause: Option<String>,
    pub llm_calls: usize,
}

impl EquivalenceVerdict {
    fn identity(stage: Stage) -> Self {
        Self { decision: Decision::Equivalent, stage, judge_explanation: None, cause: None, llm_calls: 0 }
    }
}

/// The two cheap stages: byte equality, then equality after comment
/// stripping. Symmetric in its arguments.
pub fn identity_stage(a: &str, b: &str, grammar: &CommentGrammar) -> Option<Stage> {
    if a == b {
        return Some(Stage::ByteIdentity);
    }
    if strip_comments(a, grammar).token_text == strip_comments(b, grammar).token_text {
        return Some(Stage::StrippedIdentity);
    }
    None
}

/// Staged equivalence decision for a mutant that builds and passes. The
/// mutant is compared without its marker lines; only when both identity
/// stages fail is the model asked.
pub fn screen(
    original: &str,
    mutant: &MutantCandidate,
    grammar: &CommentGrammar,
    gateway: &Gateway,
) -> EquivalenceVerdict {
    if let Some(stage) = identity_stage(original, &mutant.code_without_markers(), grammar) {
        return EquivalenceVerdict::identity(stage);
    }

    let mut bindings = BTreeMap::new();
    bindings.insert("class_version1", original);
    bindings.insert("class_version2", mutant.mutated_source.as_str());
    let prompt = render(&PromptTemplate::equivalence_detector(), &bindings).expect("judge template slots are fixed");
    match gateway.ask(&prompt) {
        Ok(response) => {
            let answer = extract_braced_token(&response);
            let decision = match answer.token {
                JudgeToken::Yes => Decision::Equivalent,
                JudgeToken::No => Decision::NonEquivalent,
                JudgeToken::NoAnswer => Decision::NoAnswer,
            };
            EquivalenceVerdict {
                decision,
                stage: Stage::Judge,
                judge_explanation: answer.explanation,
                cause: None,
                llm_calls: 1,
            }
        }
        Err(e) => EquivalenceVerdict {
            decision: Decision::NoAnswer,
            stage: Stage::Judge,
            judge_explanation: None,
            llm_calls: usize::from(!matches!(e, LlmError::BudgetExceeded { .. })),
            cause: Some(e.to_string()),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{BackendError, CompletionBackend, DecodingParams, GatewayMode};
    use crate::mutagen::{MutantRegion, MutantStatus};
    use std::sync::Arc;

    struct Fixed(&'static str);

    impl CompletionBackend for Fixed {
        fn id(&self) -> &str {
            "fixed"
        }
        fn complete(&self, prompt: &str, _: &DecodingParams) -> Result<String, BackendError> {
            assert!(prompt.starts_with("I'm going to show you two slightly different versions"));
            Ok(self.0.to_string())
        }
    }

    fn gateway(reply: &'static str) -> Gateway {
        Gateway::new(GatewayMode::Live, Some(Arc::new(Fixed(reply))), None).unwrap()
    }

    const ORIGINAL: &str = "fun ok(a: Int, b: Int) = a < b\n";

    fn mutant(body: &str) -> MutantCandidate {
        MutantCandidate {
            mutant_id: "X-m1".into(),
            class_id: "X".into(),
            mutated_source: body.into(),
            regions: vec![MutantRegion { start: 2, end: 2 }],
            status: MutantStatus::BuildsAndPasses,
            provenance: None,
            note: None,
        }
    }

    #[test]
    fn byte_identical_needs_no_judge() {
        let gw = gateway("{no}");
        let m = mutant("// MUTANT <START>\nfun ok(a: Int, b: Int) = a < b\n// MUTANT <END>\n");
        let v = screen(ORIGINAL, &m, &CommentGrammar::c_family(), &gw);
        assert_eq!((v.decision, v.stage, v.llm_calls), (Decision::Equivalent, Stage::ByteIdentity, 0));
        assert_eq!(gw.calls(), 0);
    }

    #[test]
    fn comment_only_mutant_needs_no_judge() {
        let gw = gateway("{no}");
        let m = mutant("// MUTANT <START>\n// Introduce a bug by skipping the check\nfun ok(a: Int, b: Int) = a < b\n// MUTANT <END>\n");
        let v = screen(ORIGINAL, &m, &CommentGrammar::c_family(), &gw);
        assert_eq!((v.decision, v.stage), (Decision::Equivalent, Stage::StrippedIdentity));
        assert_eq!(gw.calls(), 0);
    }

    #[test]
    fn judge_answers() {
        let m = mutant("// MUTANT <START>\nfun ok(a: Int, b: Int) = a <= b\n// MUTANT <END>\n");
        let g = CommentGrammar::c_family();

        let gw = gateway("{no} a == b now returns true");
        let v = screen(ORIGINAL, &m, &g, &gw);
        assert_eq!((v.decision, v.stage), (Decision::NonEquivalent, Stage::Judge));
        assert_eq!(v.judge_explanation.as_deref(), Some("a == b now returns true"));
        assert_eq!(gw.calls(), 1);

        assert_eq!(screen(ORIGINAL, &m, &g, &gateway("{yes}")).decision, Decision::Equivalent);
        assert_eq!(screen(ORIGINAL, &m, &g, &gateway("hmm")).decision, Decision::NoAnswer);
    }

    #[test]
    fn gateway_failure_degrades_to_no_answer() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        let gw = Gateway::replay(&path).unwrap();
        let m = mutant("// MUTANT <START>\nfun ok(a: Int, b: Int) = a > b\n// MUTANT <END>\n");
        let v = screen(ORIGINAL, &m, &CommentGrammar::c_family(), &gw);
        assert_eq!(v.decision, Decision::NoAnswer);
        assert!(v.cause.unwrap().contains("replay"));
    }
}
