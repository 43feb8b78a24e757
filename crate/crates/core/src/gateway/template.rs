//! Prompt templates with named `{placeholder}` slots and few-shot blocks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FewShotExample {
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: String,
    /// Body with `{name}` placeholders; placeholder names are lowercase
    /// identifiers.
    pub body: String,
    pub few_shot_examples: Vec<FewShotExample>,
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> PromptTemplate {
        PromptTemplate {
            name: name.into(),
            body: body.into(),
            few_shot_examples: Vec::new(),
        }
    }

    pub fn with_examples(mut self, examples: Vec<FewShotExample>) -> PromptTemplate {
        self.few_shot_examples = examples;
        self
    }

    /// Render the template. Few-shot examples are injected verbatim before
    /// the live input; rendering fails on the first unbound placeholder.
    pub fn render(&self, bindings: &BTreeMap<&str, String>) -> Result<String> {
        let mut body = self.body.clone();
        for (key, value) in bindings {
            body = body.replace(&format!("{{{key}}}"), value);
        }
        if let Some(unbound) = first_placeholder(&body) {
            return Err(Error::UnboundPlaceholder {
                template: self.name.clone(),
                placeholder: unbound,
            });
        }
        if self.few_shot_examples.is_empty() {
            return Ok(body);
        }
        let mut out = String::new();
        for (i, ex) in self.few_shot_examples.iter().enumerate() {
            out.push_str(&format!(
                "Example {n}:\nInput:\n{input}\nOutput:\n{output}\n\n",
                n = i + 1,
                input = ex.input,
                output = ex.output
            ));
        }
        out.push_str(&body);
        Ok(out)
    }
}

/// First `{lowercase_ident}` placeholder remaining in `text`, if any.
fn first_placeholder(text: &str) -> Option<String> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let mut j = i + 1;
            while j < bytes.len() && (bytes[j].is_ascii_lowercase() || bytes[j] == b'_') {
                j += 1;
            }
            if j > i + 1 && j < bytes.len() && bytes[j] == b'}' {
                return Some(text[i + 1..j].to_string());
            }
        }
        i += 1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&'static str, &str)]) -> BTreeMap<&'static str, String> {
        pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
    }

    #[test]
    fn substitutes_bindings() {
        let t = PromptTemplate::new("t", "Aspect: {aspect}");
        let out = t.render(&bind(&[("aspect", "Romance")])).unwrap();
        assert_eq!(out, "Aspect: Romance");
    }

    #[test]
    fn unbound_placeholder_is_named() {
        let t = PromptTemplate::new("t", "Aspect: {aspect}");
        let err = t.render(&BTreeMap::new()).unwrap_err();
        match err {
            Error::UnboundPlaceholder { placeholder, .. } => assert_eq!(placeholder, "aspect"),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn few_shot_blocks_precede_live_input() {
        let t = PromptTemplate::new("t", "Now: {x}").with_examples(vec![
            FewShotExample {
                input: "in1".into(),
                output: "out1".into(),
            },
            FewShotExample {
                input: "in2".into(),
                output: "out2".into(),
            },
        ]);
        let out = t.render(&bind(&[("x", "live")])).unwrap();
        assert_eq!(out.matches("Example ").count(), 2);
        let live_pos = out.find("Now: live").unwrap();
        assert!(out.find("out2").unwrap() < live_pos);
    }

    #[test]
    fn rendering_is_deterministic() {
        let t = PromptTemplate::new("t", "{a} and {b}");
        let b = bind(&[("a", "1"), ("b", "2")]);
        assert_eq!(t.render(&b).unwrap(), t.render(&b).unwrap());
    }
}
