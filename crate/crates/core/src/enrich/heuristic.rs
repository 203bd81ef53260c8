use serde_json::{json, Map, Value};

use super::{EnrichError, Enricher, Generated, PromptBundle, Provenance, Task, REQUEST_BODY};
use crate::literal::literal_text;
use crate::oas::{path_placeholders, HttpMethod, SchemaKind, SchemaNode};

/// Deterministic rule-based backend; needs no network.
#[derive(Clone, Copy, Debug, Default)]
pub struct HeuristicEnricher;

impl Enricher for HeuristicEnricher {
    fn provenance(&self) -> Provenance {
        Provenance::Heuristic
    }

    fn generate(&self, bundle: &PromptBundle) -> Result<Generated, EnrichError> {
        Ok(heuristic_enrich(bundle))
    }
}

/// Rule-based answer for a prompt. Pure: equal bundles give equal output.
pub fn heuristic_enrich(bundle: &PromptBundle) -> Generated {
    let field = |k| bundle.field(k).unwrap_or_default();
    match (bundle.task, &bundle.param) {
        (Task::MethodDesc, _) | (_, None) => {
            let method = field("method").to_ascii_lowercase().parse().unwrap_or(HttpMethod::Get);
            Generated::Text(method_description(method, field("path"), field("operation_id")))
        }
        (Task::ParamDesc, Some(p)) => {
            let mut parts = vec![format!("{}.", title_case(&p.name))];
            if let Some(values) = p.schema.enum_values.as_ref().filter(|v| !v.is_empty()) {
                let list: Vec<String> = values.iter().map(literal_text).collect();
                parts.push(format!("Allowed values: {}.", list.join(", ")));
            }
            if let Some(format) = &p.schema.format {
                parts.push(format!("Format: {format}."));
            }
            parts.push(if p.required { "Required." } else { "Optional." }.to_string());
            Generated::Text(parts.join(" "))
        }
        (Task::ParamExamples, Some(p)) => Generated::Literal(example_for(&p.schema, &p.name)),
    }
}

fn verb(method: HttpMethod) -> &'static str {
    match method {
        HttpMethod::Get => "Retrieve",
        HttpMethod::Post => "Create",
        HttpMethod::Put => "Replace",
        HttpMethod::Patch => "Update",
        HttpMethod::Delete => "Delete",
        HttpMethod::Head => "Check",
        HttpMethod::Options => "Describe",
    }
}

fn singularize(segment: &str) -> &str {
    match segment.strip_suffix('s') {
        Some(stem) if !segment.ends_with("ss") && !stem.is_empty() => stem,
        _ => segment,
    }
}

/// Recovers the casing of `noun` from the operation id (`limitrange` in
/// `deleteCoreV1NamespacedLimitRange` gives `LimitRange`).
fn cased_noun(noun: &str, operation_id: &str) -> String {
    let lower = operation_id.to_ascii_lowercase();
    let needle = noun.to_ascii_lowercase();
    match lower.rfind(&needle) {
        Some(i) if operation_id.is_ascii() && !needle.is_empty() => {
            operation_id[i..i + needle.len()].to_string()
        }
        _ => noun.to_string(),
    }
}

fn article(word: &str) -> &'static str {
    match word.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

fn method_description(method: HttpMethod, path: &str, operation_id: &str) -> String {
    let segments: Vec<&str> = path.split('/').filter(|s| !s.is_empty()).collect();
    let is_placeholder = |s: &str| s.starts_with('{') && s.ends_with('}');
    let noun_at = segments.iter().rposition(|s| !is_placeholder(s));
    let (noun, leading, trailing) = match noun_at {
        Some(i) => (
            cased_noun(singularize(segments[i]), operation_id),
            path_placeholders(&segments[..i].join("/")).join(" and "),
            path_placeholders(&segments[i + 1..].join("/")).join(" and "),
        ),
        None => ("resource".to_string(), String::new(), path_placeholders(path).join(" and ")),
    };
    let mut text = if !trailing.is_empty() {
        format!("{} {} {noun} identified by {trailing}", verb(method), article(&noun))
    } else {
        match method {
            HttpMethod::Get => format!("Retrieve a list of {noun} resources"),
            HttpMethod::Delete => format!("Delete a collection of {noun} resources"),
            _ => format!("{} {} {noun}", verb(method), article(&noun)),
        }
    };
    if !leading.is_empty() {
        text.push_str(&format!(" in the given {leading}"));
    }
    text.push('.');
    text
}

/// Splits on camelCase humps and `_`, `-`, `.`, spaces; capitalizes each word.
fn title_case(name: &str) -> String {
    if name == REQUEST_BODY {
        return "Request Body".into();
    }
    let chars: Vec<char> = name.chars().collect();
    let mut words: Vec<String> = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            if !cur.is_empty() {
                words.push(std::mem::take(&mut cur));
            }
            continue;
        }
        let prev = i.checked_sub(1).map(|j| chars[j]);
        let next = chars.get(i + 1);
        let boundary = c.is_uppercase()
            && prev.is_some_and(|p| {
                p.is_lowercase()
                    || p.is_ascii_digit()
                    || (p.is_uppercase() && next.is_some_and(|n| n.is_lowercase()))
            });
        if boundary && !cur.is_empty() {
            words.push(std::mem::take(&mut cur));
        }
        cur.push(c);
    }
    if !cur.is_empty() {
        words.push(cur);
    }
    words
        .iter()
        .map(|w| {
            let mut cs = w.chars();
            match cs.next() {
                Some(f) => f.to_uppercase().chain(cs).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Rule-based example that always conforms to a well-formed `schema`.
pub fn example_for(schema: &SchemaNode, name: &str) -> Value {
    if let Some(values) = &schema.enum_values {
        if let Some(v) = values.iter().find(|v| schema.conforms(v)) {
            return v.clone();
        }
    }
    match schema.kind {
        SchemaKind::Boolean => Value::Bool(true),
        SchemaKind::Integer => json!(1),
        SchemaKind::Number => json!(1.0),
        SchemaKind::String if schema.format.as_deref() == Some("date-time") => {
            json!("2024-01-01T00:00:00Z")
        }
        SchemaKind::String | SchemaKind::Untyped => json!(format!("sample-{name}")),
        SchemaKind::Object => {
            let mut map = Map::new();
            for field in &schema.required_fields {
                let value = match schema.properties.get(field) {
                    Some(sub) => example_for(sub, field),
                    None => json!(format!("sample-{field}")),
                };
                map.insert(field.clone(), value);
            }
            Value::Object(map)
        }
        SchemaKind::Array => {
            let item = match &schema.items {
                Some(items) => example_for(items, name),
                None => json!(format!("sample-{name}")),
            };
            Value::Array(vec![item])
        }
    }
}
