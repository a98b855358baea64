//! Prompt assembly: instruction + context + query bundles and the bundled
//! template assets. Template rendering is pure `{name}` substitution.

use serde::{Deserialize, Serialize};
use tps_core::Error as CoreError;

use crate::error::Result;

/// The three prompt parts; rendering concatenates them in order
/// (instructions, then the optional context, then the query) with no
/// separators, so any spacing lives inside the parts themselves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    #[serde(default)]
    pub instructions: String,
    #[serde(default)]
    pub context: Option<String>,
    pub query: String,
}

impl PromptBundle {
    pub fn new(
        instructions: impl Into<String>,
        context: Option<String>,
        query: impl Into<String>,
    ) -> Result<Self> {
        let query = query.into();
        if query.is_empty() {
            return Err(CoreError::EmptyAnswerText.into());
        }
        Ok(Self {
            instructions: instructions.into(),
            context,
            query,
        })
    }

    /// Same bundle without the context part (the prior prompt).
    pub fn without_context(&self) -> Self {
        Self {
            instructions: self.instructions.clone(),
            context: None,
            query: self.query.clone(),
        }
    }

    pub fn render(&self) -> String {
        let mut prompt = String::with_capacity(
            self.instructions.len()
                + self.context.as_deref().map_or(0, str::len)
                + self.query.len(),
        );
        prompt.push_str(&self.instructions);
        if let Some(context) = &self.context {
            prompt.push_str(context);
        }
        prompt.push_str(&self.query);
        prompt
    }
}

/// Replaces each `{name}` placeholder with its substitution. Unknown
/// placeholders are left in place so missing bindings are visible in the
/// rendered prompt rather than silently dropped.
pub fn render_template(template: &str, substitutions: &[(&str, &str)]) -> String {
    let mut out = template.to_owned();
    for (name, value) in substitutions {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}

/// Bundled prompt templates. Every template is overridable from the run
/// config; these are the shipped defaults.
pub mod templates {
    pub const OFFICIAL_LANGUAGE: &str = include_str!("../assets/prompts/official_language.txt");
    pub const MOVIE_REVIEW_PRIOR: &str = include_str!("../assets/prompts/movie_review_prior.txt");
    pub const MOVIE_REVIEW_CONTEXT: &str =
        include_str!("../assets/prompts/movie_review_context.txt");
    pub const WORD_SENSE_PRIOR: &str = include_str!("../assets/prompts/word_sense_prior.txt");
    pub const WORD_SENSE_CONTEXT: &str = include_str!("../assets/prompts/word_sense_context.txt");
    pub const ANNOTATION_BASIC: &str = include_str!("../assets/prompts/annotation_basic.txt");
    pub const ANNOTATION_TECHNICAL: &str =
        include_str!("../assets/prompts/annotation_technical.txt");
    pub const ANNOTATION_FEWSHOT: &str = include_str!("../assets/prompts/annotation_fewshot.txt");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_plain_concatenation() {
        let bundle = PromptBundle::new(
            "Answer briefly. ",
            Some("The sky is green. ".into()),
            "What color is the sky?",
        )
        .unwrap();
        assert_eq!(
            bundle.render(),
            "Answer briefly. The sky is green. What color is the sky?"
        );
        assert_eq!(
            bundle.without_context().render(),
            "Answer briefly. What color is the sky?"
        );
    }

    #[test]
    fn empty_query_rejected() {
        assert!(PromptBundle::new("", None, "").is_err());
    }

    #[test]
    fn template_substitution() {
        let rendered = render_template(
            templates::MOVIE_REVIEW_PRIOR,
            &[("entity", "An Example Film")],
        );
        assert!(rendered.contains("the rating of An Example Film?"));
        assert!(!rendered.contains('{'));
    }

    #[test]
    fn unknown_placeholders_stay_visible() {
        let rendered = render_template("{known} and {unknown}", &[("known", "yes")]);
        assert_eq!(rendered, "yes and {unknown}");
    }
}
