/// A triple-backtick fenced block from a model response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeBlock {
    pub text: String,
    /// Language tag from the opening fence, if any.
    pub lang: Option<String>,
    /// The response ended before a closing fence.
    pub unterminated: bool,
}

/// All fenced blocks in order, fence lines excluded. A block left open runs
/// to the end of the response and is flagged `unterminated`.
pub fn extract_fenced_code(response: &str) -> Vec<CodeBlock> {
    let mut blocks = Vec::new();
    let mut current: Option<(Option<String>, Vec<&str>)> = None;
    for line in response.lines() {
        let trimmed = line.trim();
        match current.take() {
            None => {
                if let Some(tag) = trimmed.strip_prefix("```") {
                    let tag = tag.trim();
                    current = Some(((!tag.is_empty()).then(|| tag.to_string()), Vec::new()));
                }
            }
            Some((lang, body)) => {
                if trimmed == "```" {
                    blocks.push(CodeBlock { text: body.join("\n"), lang, unterminated: false });
                } else {
                    let mut body = body;
                    body.push(line);
                    current = Some((lang, body));
                }
            }
        }
    }
    if let Some((lang, body)) = current {
        blocks.push(CodeBlock { text: body.join("\n"), lang, unterminated: true });
    }
    blocks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum JudgeToken {
    Yes,
    No,
    NoAnswer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JudgeAnswer {
    pub token: JudgeToken,
    /// Text following a `{no}` token.
    pub explanation: Option<String>,
}

/// Finds the first `{yes}` or `{no}` (case-insensitive) in a judge response.
pub fn extract_braced_token(response: &str) -> JudgeAnswer {
    let lower = response.to_ascii_lowercase();
    let yes = lower.find("{yes}");
    let no = lower.find("{no}");
    let first = match (yes, no) {
        (Some(y), Some(n)) if n < y => Some((JudgeToken::No, n)),
        (Some(y), _) => Some((JudgeToken::Yes, y)),
        (None, Some(n)) => Some((JudgeToken::No, n)),
        (None, None) => None,
    };
    match first {
        Some((JudgeToken::No, at)) => {
            let tail = response[at + "{no}".len()..]
                .trim_start_matches(|c: char| c == '`' || c == ',' || c == '.' || c == ':' || c.is_whitespace())
                .trim_end();
            JudgeAnswer {
                token: JudgeToken::No,
                explanation: (!tail.is_empty()).then(|| tail.to_string()),
            }
        }
        Some((token, _)) => JudgeAnswer { token, explanation: None },
        None => JudgeAnswer { token: JudgeToken::NoAnswer, explanation: None },
    }
}
