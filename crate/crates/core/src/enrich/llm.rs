use serde_json::Value;

use super::{EnrichError, Enricher, Generated, PromptBundle, Provenance, Task, TEMPLATE_VERSION};
use crate::chat::{ChatClient, ChatMessage};

const SYSTEM_PROMPT: &str =
    "You write precise documentation for REST API operations used as tools by AI agents.";

/// Backend that sends each prompt to a chat model at temperature 0.
pub struct LlmEnricher<'a> {
    client: &'a dyn ChatClient,
}

impl<'a> LlmEnricher<'a> {
    pub fn new(client: &'a dyn ChatClient) -> Self {
        Self { client }
    }
}

impl Enricher for LlmEnricher<'_> {
    fn provenance(&self) -> Provenance {
        Provenance::Llm(self.client.model_id().to_string())
    }

    fn generate(&self, bundle: &PromptBundle) -> Result<Generated, EnrichError> {
        llm_enrich(bundle, self.client)
    }

    fn template_version(&self) -> Option<u32> {
        Some(TEMPLATE_VERSION)
    }
}

fn strip_fences(s: &str) -> &str {
    let t = s.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let body = match rest.find('\n') {
        Some(i) => &rest[i + 1..],
        None => rest,
    };
    body.trim_end().strip_suffix("```").unwrap_or(body).trim()
}

fn strip_quotes(s: &str) -> &str {
    for q in ['"', '\''] {
        if s.len() >= 2 && s.starts_with(q) && s.ends_with(q) {
            return &s[1..s.len() - 1];
        }
    }
    s
}

/// Strips markdown fences and, for prose, one pair of surrounding quotes.
pub fn clean_reply(task: Task, raw: &str) -> Result<Generated, EnrichError> {
    let body = strip_fences(raw);
    match task {
        Task::ParamExamples => serde_json::from_str::<Value>(body)
            .map(Generated::Literal)
            .map_err(|_| EnrichError::UnparseableExample(raw.to_string())),
        _ => Ok(Generated::Text(strip_quotes(body).trim().to_string())),
    }
}

/// Requests one completion for the bundle.
pub fn llm_enrich(bundle: &PromptBundle, client: &dyn ChatClient) -> Result<Generated, EnrichError> {
    let messages = [
        ChatMessage::system(SYSTEM_PROMPT),
        ChatMessage::user(bundle.rendered_prompt.clone()),
    ];
    let reply = client.complete(&messages, 0.0)?;
    clean_reply(bundle.task, &reply)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chat::ScriptedChat;
    use crate::enrich::build_prompt;
    use crate::enrich::tests::limit_range_delete;
    use serde_json::json;

    fn example_bundle() -> PromptBundle {
        let ep = limit_range_delete();
        build_prompt(&ep, Task::ParamExamples, ep.param("dryRun"), None).unwrap()
    }

    #[test]
    fn text_passes_through() {
        let ep = limit_range_delete();
        let b = build_prompt(&ep, Task::MethodDesc, None, None).unwrap();
        let chat = ScriptedChat::new(["Deletes a LimitRange."]);
        assert_eq!(llm_enrich(&b, &chat).unwrap(), Generated::Text("Deletes a LimitRange.".into()));
    }

    #[test]
    fn quoted_example_is_a_string_literal() {
        let chat = ScriptedChat::new(["\"All\""]);
        assert_eq!(llm_enrich(&example_bundle(), &chat).unwrap(), Generated::Literal(json!("All")));
    }

    #[test]
    fn non_json_example_is_rejected() {
        let chat = ScriptedChat::new(["not-json{"]);
        assert!(matches!(
            llm_enrich(&example_bundle(), &chat),
            Err(EnrichError::UnparseableExample(_))
        ));
    }

    #[test]
    fn fences_and_quotes_are_stripped() {
        assert_eq!(
            clean_reply(Task::ParamExamples, "```json\n{\"a\": 1}\n```").unwrap(),
            Generated::Literal(json!({"a": 1}))
        );
        assert_eq!(
            clean_reply(Task::ParamDesc, "```\n'The name.'\n```").unwrap(),
            Generated::Text("The name.".into())
        );
    }
}
