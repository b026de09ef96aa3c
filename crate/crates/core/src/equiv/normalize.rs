use crate::corpus::CommentGrammar;

/// Source text with comments removed and code whitespace collapsed: runs of
/// whitespace become one space, lines are trimmed and blank lines dropped.
/// String literal contents are left byte-for-byte intact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedForm {
    pub token_text: String,
    /// A block comment was still open at end of input (stripped to the end).
    pub unterminated_block_comment: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Gap {
    None,
    Space,
    Newline,
}

struct Writer {
    out: String,
    gap: Gap,
    at_line_start: bool,
}

impl Writer {
    fn gap(&mut self, g: Gap) {
        self.gap = self.gap.max(g);
    }

    fn flush(&mut self) {
        if !self.out.is_empty() && !self.at_line_start {
            match self.gap {
                Gap::Newline => {
                    self.out.push('\n');
                    self.at_line_start = true;
                }
                Gap::Space => self.out.push(' '),
                Gap::None => {}
            }
        }
        self.gap = Gap::None;
    }

    fn code(&mut self, c: char) {
        match c {
            '\n' => self.gap(Gap::Newline),
            c if c.is_whitespace() => self.gap(Gap::Space),
            c => {
                self.flush();
                self.out.push(c);
                self.at_line_start = false;
            }
        }
    }

    fn literal(&mut self, text: &str) {
        self.flush();
        self.out.push_str(text);
        self.at_line_start = false;
    }
}

enum Opener<'g> {
    Line,
    Block(&'g str),
    Quote(&'g str),
}

fn opener_at<'g>(rest: &str, grammar: &'g CommentGrammar) -> Option<(Opener<'g>, usize)> {
    let mut best: Option<(Opener<'g>, usize)> = None;
    let mut consider = |op: Opener<'g>, len: usize| {
        if best.as_ref().map_or(true, |(_, l)| len > *l) {
            best = Some((op, len));
        }
    };
    for p in grammar.line_prefixes() {
        if rest.starts_with(p.as_str()) {
            consider(Opener::Line, p.len());
        }
    }
    for (open, close) in grammar.block_pairs() {
        if rest.starts_with(open.as_str()) {
            consider(Opener::Block(close), open.len());
        }
    }
    for q in grammar.quotes() {
        if rest.starts_with(q.as_str()) {
            consider(Opener::Quote(q), q.len());
        }
    }
    best
}

/// Length of the literal starting at the beginning of `rest` (which starts
/// with `quote`), closing quote included when present.
fn literal_len(rest: &str, quote: &str) -> usize {
    let single_char = quote.chars().count() == 1;
    let single_line = quote == "\"" || quote == "'";
    let mut i = quote.len();
    while i < rest.len() {
        let tail = &rest[i..];
        if tail.starts_with(quote) {
            return i + quote.len();
        }
        let c = tail.chars().next().expect("non-empty tail");
        if single_line && c == '\n' {
            return i;
        }
        if single_char && c == '\\' {
            i += 1;
            if let Some(next) = rest[i..].chars().next() {
                i += next.len_utf8();
            }
            continue;
        }
        i += c.len_utf8();
    }
    rest.len()
}

/// Removes line and block comments (string-literal aware) and normalises
/// whitespace. Idempotent.
pub fn strip_comments(source: &str, grammar: &CommentGrammar) -> NormalizedForm {
    let mut w = Writer { out: String::with_capacity(source.len()), gap: Gap::None, at_line_start: true };
    let mut unterminated = false;
    let mut i = 0;
    while i < source.len() {
        let rest = &source[i..];
        match opener_at(rest, grammar) {
            Some((Opener::Line, _)) => {
                i += rest.find('\n').unwrap_or(rest.len());
            }
            Some((Opener::Block(close), open_len)) => {
                let body = &rest[open_len..];
                let (skipped, gap) = match body.find(close) {
                    Some(end) => (open_len + end + close.len(), &body[..end]),
                    None => {
                        unterminated = true;
                        (rest.len(), body)
                    }
                };
                w.gap(if gap.contains('\n') { Gap::Newline } else { Gap::Space });
                i += skipped;
            }
            Some((Opener::Quote(q), _)) => {
                let len = literal_len(rest, q);
                w.literal(&rest[..len]);
                i += len;
            }
            None => {
                let c = rest.chars().next().expect("non-empty rest");
                w.code(c);
                i += c.len_utf8();
            }
        }
    }
    NormalizedForm { token_text: w.out, unterminated_block_comment: unterminated }
}
