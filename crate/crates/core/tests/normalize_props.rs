use hardener_core::corpus::CommentGrammar;
use hardener_core::equiv::{identity_stage, strip_comments, Stage};
use proptest::prelude::*;

fn grammar() -> CommentGrammar {
    CommentGrammar::new(
        vec!["//".into()],
        vec![("/*".into(), "*/".into())],
        vec!["`".into(), "\"".into(), "'".into()],
    )
    .unwrap()
}

fn ident() -> impl Strategy<Value = String> {
    "[a-zA-Z_][a-zA-Z0-9_]{0,6}"
}

fn punct() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["(", ")", "{", "}", ";", "=", "+", ".", ",", "<", ">", "!"]).prop_map(String::from)
}

/// Literal bodies deliberately contain comment openers.
fn literal() -> impl Strategy<Value = String> {
    let body_char = prop::sample::select(vec!["a", "b", " ", "//", "/*", "*/", "#", "x"]);
    let escaped = prop::sample::select(vec!["\\\\", "\\n", "\\t"]);
    let piece = prop_oneof![4 => body_char.prop_map(String::from), 1 => escaped.prop_map(String::from)];
    (prop::sample::select(vec!['"', '\'', '`']), prop::collection::vec(piece, 0..8), any::<bool>()).prop_map(
        |(q, pieces, multiline)| {
            let mut body: String = pieces.concat();
            if q == '`' && multiline {
                body.push_str("\n  // kept\n");
            }
            match q {
                '"' => body.push_str("\\\""),
                '\'' => body.push_str("\\'"),
                _ => body.push_str("\\`"),
            }
            format!("{q}{body}{q}")
        },
    )
}

#[derive(Debug, Clone)]
enum Tok {
    Code(String),
    Lit(String),
}

fn tokens() -> impl Strategy<Value = Vec<Tok>> {
    prop::collection::vec(
        prop_oneof![
            3 => ident().prop_map(Tok::Code),
            2 => punct().prop_map(Tok::Code),
            2 => literal().prop_map(Tok::Lit),
        ],
        1..30,
    )
}

fn comment_text() -> impl Strategy<Value = String> {
    "[a-z \"'`{}]{0,12}"
}

/// Tokens joined by the given separators, optionally with comments placed
/// where they cannot change the normalised text.
fn render(toks: &[Tok], seps: &[bool], comments: Option<&[String]>) -> String {
    let mut out = String::new();
    for (i, t) in toks.iter().enumerate() {
        match t {
            Tok::Code(s) | Tok::Lit(s) => out.push_str(s),
        }
        let newline = seps.get(i).copied().unwrap_or(false);
        let comment = comments.and_then(|c| c.get(i)).filter(|c| !c.is_empty());
        match (newline, comment) {
            (false, None) => out.push(' '),
            (true, None) => out.push('\n'),
            (false, Some(c)) => out.push_str(&format!(" /*{}*/ ", c.replace("*/", ""))),
            (true, Some(c)) => out.push_str(&format!(" // {c}\n//{c}\n")),
        }
    }
    out
}

fn source() -> impl Strategy<Value = (Vec<Tok>, Vec<bool>, Vec<String>)> {
    tokens().prop_flat_map(|toks| {
        let n = toks.len();
        (
            Just(toks),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(prop_oneof![1 => comment_text(), 2 => Just(String::new())], n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn stripping_is_idempotent((toks, seps, comments) in source()) {
        let g = grammar();
        let src = render(&toks, &seps, Some(&comments));
        let once = strip_comments(&src, &g).token_text;
        let twice = strip_comments(&once, &g).token_text;
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn literals_survive_verbatim((toks, seps, comments) in source()) {
        let g = grammar();
        let stripped = strip_comments(&render(&toks, &seps, Some(&comments)), &g).token_text;
        for t in &toks {
            if let Tok::Lit(lit) = t {
                prop_assert!(stripped.contains(lit.as_str()), "literal {:?} lost from {:?}", lit, stripped);
            }
        }
    }

    #[test]
    fn added_comments_are_invisible((toks, seps, comments) in source()) {
        let g = grammar();
        let plain = render(&toks, &seps, None);
        let commented = render(&toks, &seps, Some(&comments));
        prop_assert_eq!(
            strip_comments(&plain, &g).token_text,
            strip_comments(&commented, &g).token_text
        );
        let stage = identity_stage(&plain, &commented, &g);
        prop_assert!(matches!(stage, Some(Stage::ByteIdentity | Stage::StrippedIdentity)));
    }

    #[test]
    fn identity_stage_is_symmetric(
        (a, sa, ca) in source(),
        (b, sb, cb) in source(),
        relate in any::<bool>(),
    ) {
        let g = grammar();
        let left = render(&a, &sa, Some(&ca));
        let right = if relate { render(&a, &sa, None) } else { render(&b, &sb, Some(&cb)) };
        prop_assert_eq!(identity_stage(&left, &right, &g), identity_stage(&right, &left, &g));
    }
}

#[test]
fn comment_markers_inside_literals_are_code() {
    let g = grammar();
    let a = "let url = \"http://example.org\"; // link\n";
    let b = "let url = \"http://example.org/*\"; /* link */\n";
    assert_eq!(strip_comments(a, &g).token_text, "let url = \"http://example.org\";");
    assert_eq!(strip_comments(b, &g).token_text, "let url = \"http://example.org/*\";");
    assert_eq!(identity_stage(a, b, &g), None);
}
