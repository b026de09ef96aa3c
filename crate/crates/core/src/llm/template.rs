use std::borrow::Cow;
use std::collections::BTreeMap;

use super::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateName {
    MakeFault,
    EquivalenceDetector,
    MakeTest,
}

const MAKE_FAULT: &str = "CONTEXT: {context_about_concern} INSTRUCTION: Here is a Kotlin class and a test class \
with some unit tests for the class under test ```{class_under_test}```. ```{existing_test_class}```. Write a new \
version of the class under test in which each method is replaced by a new version of that method that contains a \
typical bug that introduces a privacy violation similar to {diff}. Delimit the mutated part using the comment-pair \
`// MUTANT <START>` and `// MUTANT <END>`";

const EQUIVALENCE_DETECTOR: &str = "I'm going to show you two slightly different versions of a Kotlin class. Here \
is the first version of the Kotlin class:```{class_version1}```. Here is the second version of the Kotlin \
class:```{class_version2}```. INSTRUCTION: If the first version of the class will always do exactly the same thing \
as the second version of the class, just respond with `{yes}`. However, if the two versions of the class are not \
equivalent, respond with `{no}`, and give an explanation of how execution of the first version can produce a \
different behaviour to execution of the second version.";

const MAKE_TEST: &str = "What follows is two versions of a Kotlin class under test. An original correct class and \
a mutated version of that class that contains one mutant per method, each of which represents a bug. Each bug is \
delimited by the comment-pair `// MUTANT <START>` and `// MUTANT <END>`. The original class and its mutant are \
followed by a test class that contains unit tests for the original correct class under test. This is the original \
version of the class under test:```{original_class}```. This is the mutated version of the class under \
test:```{mutated_class}```. Here is the existing test class:```{existing_test_class}```. Write an extended version \
of the test class that contains extra test cases that will fail on the mutant version of the class, but would pass \
on the correct version.";

/// A prompt body with `{name}` slots. Only declared names are slots; other
/// braces (such as the judge's `{yes}` / `{no}` answer tokens) are literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: TemplateName,
    body: Cow<'static, str>,
    placeholders: Vec<&'static str>,
}

impl PromptTemplate {
    pub fn new(name: TemplateName, body: impl Into<Cow<'static, str>>, placeholders: &[&'static str]) -> Self {
        Self { name, body: body.into(), placeholders: placeholders.to_vec() }
    }

    pub fn make_fault() -> Self {
        Self::new(
            TemplateName::MakeFault,
            MAKE_FAULT,
            &["context_about_concern", "class_under_test", "existing_test_class", "diff"],
        )
    }

    pub fn equivalence_detector() -> Self {
        Self::new(TemplateName::EquivalenceDetector, EQUIVALENCE_DETECTOR, &["class_version1", "class_version2"])
    }

    pub fn make_test() -> Self {
        Self::new(
            TemplateName::MakeTest,
            MAKE_TEST,
            &["original_class", "mutated_class", "existing_test_class"],
        )
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn placeholders(&self) -> &[&'static str] {
        &self.placeholders
    }
}

/// Substitutes every slot in one pass. Binding values are inserted verbatim
/// and never rescanned, so a binding that itself contains `{x}` is safe.
pub fn render(template: &PromptTemplate, bindings: &BTreeMap<&str, &str>) -> Result<String, LlmError> {
    for key in bindings.keys() {
        if !template.placeholders.contains(key) {
            return Err(LlmError::UnknownPlaceholder((*key).to_string()));
        }
    }
    for slot in &template.placeholders {
        if !bindings.contains_key(slot) {
            return Err(LlmError::UnboundPlaceholder((*slot).to_string()));
        }
    }

    let body = template.body();
    let mut out = String::with_capacity(body.len() + bindings.values().map(|v| v.len()).sum::<usize>());
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let slot = after.find('}').map(|close| (&after[..close], close)).and_then(|(name, close)| {
            template.placeholders.iter().find(|p| **p == name).map(|p| (*p, close))
        });
        match slot {
            Some((name, close)) => {
                out.push_str(bindings[name]);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}
