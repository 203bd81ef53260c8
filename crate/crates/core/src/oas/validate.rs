use std::collections::HashSet;

use super::{extract_endpoints, resolve_refs, OasDocument, ValidationIssue};

const PATH_ITEM_FIELDS: [&str; 6] = ["$ref", "summary", "description", "servers", "trace", "parameters"];

/// Reports every invariant violation of the document; an empty list means
/// clean. Never fails: broken operations show up as error issues.
pub fn validate_document(doc: &OasDocument) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();

    if doc.info.title.trim().is_empty() {
        issues.push(ValidationIssue::warning("/info/title", "API title is empty"));
    }

    for (path, item) in &doc.paths {
        let base = format!("/paths/{}", super::escape_pointer_token(path));
        for key in item.extras.keys() {
            if !PATH_ITEM_FIELDS.contains(&key.as_str()) && !key.starts_with("x-") {
                issues.push(ValidationIssue::warning(
                    format!("{base}/{}", super::escape_pointer_token(key)),
                    format!("`{key}` is not a supported HTTP method or path item field"),
                ));
            }
        }
    }

    let resolved = resolve_refs(doc);
    issues.extend(resolved.issues.iter().cloned());

    let extraction = extract_endpoints(&resolved.document);
    issues.extend(extraction.issues.iter().cloned());

    for ep in &extraction.endpoints {
        let pointer = ep.pointer();
        for (i, p) in ep.parameters.iter().enumerate() {
            issues.extend(p.schema.issues(&format!("{pointer}/parameters/{i}/schema")));
        }
        if let Some(body) = &ep.request_body {
            issues.extend(body.issues(&format!("{pointer}/requestBody")));
        }
    }

    let mut seen = HashSet::new();
    issues.retain(|i| seen.insert((i.severity, i.path_pointer.clone(), i.message.clone())));
    issues
}
