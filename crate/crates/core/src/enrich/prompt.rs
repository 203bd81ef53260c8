use std::collections::BTreeMap;

use super::{EnrichError, Task, REQUEST_BODY};
use crate::literal::literal_text;
use crate::oas::{EndpointSpec, ParamLocation, ParamSpec, SchemaNode};

/// Bumped whenever a template file changes.
pub const TEMPLATE_VERSION: u32 = 1;

const METHOD_DESC: &str = include_str!("../../templates/method_desc.txt");
const PARAM_DESC: &str = include_str!("../../templates/param_desc.txt");
const PARAM_EXAMPLES: &str = include_str!("../../templates/param_examples.txt");

/// A rendered prompt plus the context it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptBundle {
    pub task: Task,
    pub rendered_prompt: String,
    pub context_fields: BTreeMap<String, String>,
    pub param: Option<ParamSpec>,
}

impl PromptBundle {
    pub fn field(&self, key: &str) -> Option<&str> {
        self.context_fields.get(key).map(String::as_str)
    }
}

fn constraints(schema: &SchemaNode) -> String {
    let mut parts = Vec::new();
    if let Some(values) = &schema.enum_values {
        let list: Vec<String> = values.iter().map(literal_text).collect();
        parts.push(format!("allowed values: {}", list.join(", ")));
    }
    if let Some(format) = &schema.format {
        parts.push(format!("format: {format}"));
    }
    if parts.is_empty() {
        "none".into()
    } else {
        parts.join("; ")
    }
}

fn location_label(p: &ParamSpec) -> &'static str {
    match p.location {
        _ if p.name == REQUEST_BODY => "request body",
        ParamLocation::Path => "path",
        ParamLocation::Query => "query",
        ParamLocation::Header => "header",
        ParamLocation::BodyField => "form field",
    }
}

fn parameter_lines(endpoint: &EndpointSpec) -> String {
    let mut lines: Vec<String> = super::enrichable_params(endpoint)
        .iter()
        .map(|p| {
            format!(
                "  - {} ({}, {}, {}): {}",
                p.name,
                location_label(p),
                p.schema.kind.as_str(),
                if p.required { "required" } else { "optional" },
                p.description.as_deref().unwrap_or("no description"),
            )
        })
        .collect();
    if lines.is_empty() {
        lines.push("  (none)".into());
    }
    lines.join("\n")
}

fn fill(template: &str, fields: &BTreeMap<String, String>) -> String {
    let mut out = template.to_string();
    for (k, v) in fields {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

/// Fills the template for `task`.
///
/// `param` is required for the two parameter tasks and rejected for the
/// method task; `updated_desc` is only accepted for examples.
pub fn build_prompt(
    endpoint: &EndpointSpec,
    task: Task,
    param: Option<&ParamSpec>,
    updated_desc: Option<&str>,
) -> Result<PromptBundle, EnrichError> {
    match (task.is_param_task(), param) {
        (true, None) => {
            return Err(EnrichError::MissingContext(format!(
                "{task:?} for {} needs a parameter",
                endpoint.operation_id
            )))
        }
        (false, Some(p)) => {
            return Err(EnrichError::UnexpectedContext(format!(
                "method description does not take parameter `{}`",
                p.name
            )))
        }
        _ => {}
    }
    if updated_desc.is_some() && task != Task::ParamExamples {
        return Err(EnrichError::UnexpectedContext(
            "an updated description is only used for examples".into(),
        ));
    }

    let mut fields = BTreeMap::new();
    fields.insert("api_title".to_string(), endpoint.api_title.clone());
    fields.insert("operation_id".to_string(), endpoint.operation_id.clone());
    fields.insert("method".to_string(), endpoint.method.upper());
    fields.insert("path".to_string(), endpoint.path.clone());
    let template = match task {
        Task::MethodDesc => {
            fields.insert(
                "original_description".into(),
                endpoint.summary_description.clone().unwrap_or_else(|| "none".into()),
            );
            fields.insert("parameters".into(), parameter_lines(endpoint));
            METHOD_DESC
        }
        Task::ParamDesc | Task::ParamExamples => {
            let p = param.expect("checked above");
            fields.insert("param_name".into(), p.name.clone());
            fields.insert("param_location".into(), location_label(p).into());
            fields.insert("param_required".into(), if p.required { "yes" } else { "no" }.into());
            fields.insert("param_type".into(), p.schema.kind.as_str().into());
            fields.insert("param_constraints".into(), constraints(&p.schema));
            fields.insert(
                "param_schema".into(),
                serde_json::to_string(&p.schema).expect("schema serializes"),
            );
            fields.insert(
                "param_description".into(),
                p.description.clone().unwrap_or_else(|| "none".into()),
            );
            if task == Task::ParamExamples {
                let desc = updated_desc
                    .map(str::to_string)
                    .or_else(|| p.description.clone())
                    .unwrap_or_else(|| "none".into());
                fields.insert("updated_param_desc".into(), desc);
                PARAM_EXAMPLES
            } else {
                PARAM_DESC
            }
        }
    };

    Ok(PromptBundle {
        task,
        rendered_prompt: fill(template, &fields),
        context_fields: fields,
        param: param.cloned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enrich::tests::limit_range_delete;

    #[test]
    fn method_prompt_embeds_inputs() {
        let ep = limit_range_delete();
        let b = build_prompt(&ep, Task::MethodDesc, None, None).unwrap();
        for token in ["DELETE", "deleteCoreV1NamespacedLimitRange", &ep.path, "Kubernetes"] {
            assert!(b.rendered_prompt.contains(token), "{token}");
        }
        assert!(!b.rendered_prompt.contains("{{"));
        assert!(b.field("param_name").is_none());
    }

    #[test]
    fn param_prompt_lists_enum() {
        let ep = limit_range_delete();
        let p = ep.param("propagationPolicy").unwrap();
        let b = build_prompt(&ep, Task::ParamDesc, Some(p), None).unwrap();
        assert!(b.rendered_prompt.contains("Orphan, Background, Foreground"));
        assert_eq!(b.field("param_name"), Some("propagationPolicy"));
        assert!(!b.rendered_prompt.contains("{{"));
    }

    #[test]
    fn example_prompt_embeds_updated_description() {
        let ep = limit_range_delete();
        let p = ep.param("dryRun").unwrap();
        let desc = "If set to 'All', all dry run stages will be processed.";
        let b = build_prompt(&ep, Task::ParamExamples, Some(p), Some(desc)).unwrap();
        assert!(b.rendered_prompt.contains(desc));
        assert_eq!(b.field("updated_param_desc"), Some(desc));
    }

    #[test]
    fn context_preconditions() {
        let ep = limit_range_delete();
        let p = ep.param("dryRun").unwrap();
        assert!(matches!(
            build_prompt(&ep, Task::ParamDesc, None, None),
            Err(EnrichError::MissingContext(_))
        ));
        assert!(matches!(
            build_prompt(&ep, Task::MethodDesc, Some(p), None),
            Err(EnrichError::UnexpectedContext(_))
        ));
        assert!(matches!(
            build_prompt(&ep, Task::ParamDesc, Some(p), Some("x")),
            Err(EnrichError::UnexpectedContext(_))
        ));
    }

    #[test]
    fn deterministic() {
        let ep = limit_range_delete();
        let p = ep.param("dryRun");
        assert_eq!(
            build_prompt(&ep, Task::ParamDesc, p, None).unwrap(),
            build_prompt(&ep, Task::ParamDesc, p, None).unwrap()
        );
    }
}
