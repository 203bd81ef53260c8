use std::collections::HashSet;

use indexmap::IndexMap;
use serde_json::Value;

use super::{
    path_placeholders, EndpointSpec, HttpMethod, OasDocument, OasFlavor, ParamLocation, ParamSpec,
    ResponseCode, SchemaNode, ValidationIssue,
};

const JSON_MEDIA: &str = "application/json";

/// Endpoints plus every per-endpoint problem found while extracting them.
#[derive(Clone, Debug, Default)]
pub struct Extraction {
    pub endpoints: Vec<EndpointSpec>,
    pub issues: Vec<ValidationIssue>,
}

impl Extraction {
    /// True when an error-severity issue sits under the endpoint's pointer.
    pub fn is_blocked(&self, endpoint: &EndpointSpec) -> bool {
        let pointer = endpoint.pointer();
        self.issues
            .iter()
            .any(|i| i.is_error() && i.is_under(&pointer))
    }

    /// Endpoints that are clear for tool generation.
    pub fn usable(&self) -> Vec<&EndpointSpec> {
        self.endpoints.iter().filter(|e| !self.is_blocked(e)).collect()
    }

    pub fn issues_for(&self, endpoint: &EndpointSpec) -> Vec<&ValidationIssue> {
        let pointer = endpoint.pointer();
        self.issues.iter().filter(|i| i.is_under(&pointer)).collect()
    }
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// `<method><CamelizedPathSegments>`, placeholders camelized without braces.
pub fn synthesize_operation_id(method: HttpMethod, path: &str) -> String {
    let mut id = method.as_str().to_string();
    for piece in path.split(|c: char| !c.is_alphanumeric()) {
        id.push_str(&capitalize(piece));
    }
    id
}

fn pick_media(content: &serde_json::Map<String, Value>) -> Option<(&String, &Value)> {
    content
        .get_key_value(JSON_MEDIA)
        .or_else(|| content.iter().next())
}

fn string_list(v: Option<&Value>) -> Vec<String> {
    v.and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
        .unwrap_or_default()
}

fn security_required(v: &Value) -> bool {
    v.as_array()
        .is_some_and(|reqs| reqs.iter().any(|r| r.as_object().is_some_and(|o| !o.is_empty())))
}

struct OpContext<'a> {
    doc: &'a OasDocument,
    path: &'a str,
    method: HttpMethod,
    pointer: String,
    issues: Vec<ValidationIssue>,
}

impl OpContext<'_> {
    fn param_schema(&self, param: &serde_json::Map<String, Value>) -> SchemaNode {
        if let Some(schema) = param.get("schema") {
            return SchemaNode::from_value(schema);
        }
        if let Some(content) = param.get("content").and_then(Value::as_object) {
            if let Some((_, media)) = pick_media(content) {
                return media
                    .get("schema")
                    .map(SchemaNode::from_value)
                    .unwrap_or_else(SchemaNode::untyped);
            }
        }
        // OAS 2 non-body parameters carry type/format/enum/items inline.
        SchemaNode::from_value(&Value::Object(param.clone()))
    }

    fn extract(mut self, op: &Value, seen_ids: &mut HashSet<String>) -> (Option<EndpointSpec>, Vec<ValidationIssue>) {
        let pointer = self.pointer.clone();
        let Some(op_obj) = op.as_object() else {
            self.issues
                .push(ValidationIssue::error(&pointer, "operation must be an object"));
            return (None, self.issues);
        };

        let declared = op_obj
            .get("operationId")
            .and_then(Value::as_str)
            .map(str::trim)
            .filter(|s| !s.is_empty());
        let mut operation_id = match declared {
            Some(id) => id.to_string(),
            None => {
                let id = synthesize_operation_id(self.method, self.path);
                self.issues.push(ValidationIssue::warning(
                    format!("{pointer}/operationId"),
                    format!("operationId missing; synthesized `{id}`"),
                ));
                id
            }
        };
        if seen_ids.contains(&operation_id) {
            let base = operation_id.clone();
            let mut n = 2;
            while seen_ids.contains(&format!("{base}_{n}")) {
                n += 1;
            }
            operation_id = format!("{base}_{n}");
            self.issues.push(ValidationIssue::warning(
                format!("{pointer}/operationId"),
                format!("duplicate operationId `{base}` renamed to `{operation_id}`"),
            ));
        }
        seen_ids.insert(operation_id.clone());

        // Path-level parameters first, overridden by operation-level ones
        // with the same (name, in).
        let item = &self.doc.paths[self.path];
        let item_pointer = pointer.rsplit_once('/').map(|(p, _)| p).unwrap_or("").to_string();
        let mut raw_params: IndexMap<(String, String), (String, &Value)> = IndexMap::new();
        let op_params = op_obj.get("parameters").and_then(Value::as_array);
        let sources = item
            .parameters
            .iter()
            .enumerate()
            .map(|(i, p)| (format!("{item_pointer}/parameters/{i}"), p))
            .chain(
                op_params
                    .into_iter()
                    .flatten()
                    .enumerate()
                    .map(|(i, p)| (format!("{pointer}/parameters/{i}"), p)),
            );
        for (p_ptr, p) in sources {
            let key = match p.as_object() {
                Some(o) if !o.contains_key("$ref") && !o.contains_key("x-unresolved-ref") => (
                    o.get("name").and_then(Value::as_str).unwrap_or("").to_string(),
                    o.get("in").and_then(Value::as_str).unwrap_or("").to_string(),
                ),
                _ => {
                    self.issues.push(ValidationIssue::error(
                        p_ptr.clone(),
                        "parameter is not a resolved object",
                    ));
                    continue;
                }
            };
            raw_params.insert(key, (p_ptr, p));
        }

        let mut parameters = Vec::new();
        let mut request_body = None;
        let mut request_body_required = false;
        let mut request_content_type = None;
        let mut has_form_fields = false;

        for ((name, location), (p_ptr, p)) in &raw_params {
            let obj = p.as_object().expect("checked above");
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                self.issues.push(ValidationIssue::error(
                    format!("{p_ptr}/name"),
                    format!("parameter name `{name}` must be a non-empty token without whitespace"),
                ));
                continue;
            }
            let required_flag = obj.get("required").and_then(Value::as_bool);
            let location = match location.as_str() {
                "path" => ParamLocation::Path,
                "query" => ParamLocation::Query,
                "header" => ParamLocation::Header,
                "formData" => {
                    has_form_fields = true;
                    ParamLocation::BodyField
                }
                "body" => {
                    request_body = Some(
                        obj.get("schema")
                            .map(SchemaNode::from_value)
                            .unwrap_or_else(SchemaNode::untyped),
                    );
                    request_body_required = required_flag.unwrap_or(false);
                    continue;
                }
                "cookie" => {
                    self.issues.push(ValidationIssue::warning(
                        p_ptr.clone(),
                        format!("cookie parameter `{name}` is not supported and was skipped"),
                    ));
                    continue;
                }
                other => {
                    self.issues.push(ValidationIssue::error(
                        format!("{p_ptr}/in"),
                        format!("unknown parameter location `{other}`"),
                    ));
                    continue;
                }
            };
            let mut required = required_flag.unwrap_or(false);
            if location == ParamLocation::Path && !required {
                if required_flag == Some(false) {
                    self.issues.push(ValidationIssue::warning(
                        format!("{p_ptr}/required"),
                        format!("path parameter `{name}` must be required"),
                    ));
                }
                required = true;
            }
            parameters.push(ParamSpec {
                name: name.clone(),
                location,
                required,
                schema: self.param_schema(obj),
                description: obj
                    .get("description")
                    .and_then(Value::as_str)
                    .map(str::to_string),
            });
        }

        // Placeholder invariant.
        let placeholders = path_placeholders(self.path);
        let mut seen = HashSet::new();
        for ph in &placeholders {
            if !seen.insert(*ph) {
                self.issues.push(ValidationIssue::error(
                    pointer.clone(),
                    format!("placeholder `{{{ph}}}` appears more than once in the path template"),
                ));
            }
            let declared = parameters
                .iter()
                .filter(|p| p.location == ParamLocation::Path && p.name == *ph)
                .count();
            if declared == 0 {
                self.issues.push(ValidationIssue::error(
                    pointer.clone(),
                    format!("path placeholder `{{{ph}}}` has no matching path parameter"),
                ));
            }
        }
        for p in parameters.iter().filter(|p| p.location == ParamLocation::Path) {
            if !placeholders.contains(&p.name.as_str()) {
                self.issues.push(ValidationIssue::error(
                    pointer.clone(),
                    format!("path parameter `{}` does not appear in the path template", p.name),
                ));
            }
        }

        if let Some(body) = op_obj.get("requestBody") {
            if body.get("$ref").is_some() || body.get("x-unresolved-ref").is_some() {
                self.issues.push(ValidationIssue::error(
                    format!("{pointer}/requestBody"),
                    "request body is not a resolved object",
                ));
            } else if let Some(content) = body.get("content").and_then(Value::as_object) {
                if let Some((media, entry)) = pick_media(content) {
                    request_content_type = Some(media.clone());
                    request_body = Some(
                        entry
                            .get("schema")
                            .map(SchemaNode::from_value)
                            .unwrap_or_else(SchemaNode::untyped),
                    );
                    request_body_required =
                        body.get("required").and_then(Value::as_bool).unwrap_or(false);
                }
            }
        } else if self.doc.flavor == OasFlavor::Swagger2 && (request_body.is_some() || has_form_fields) {
            let mut consumes = string_list(op_obj.get("consumes"));
            if consumes.is_empty() {
                consumes = string_list(self.doc.extras.get("consumes"));
            }
            request_content_type = if consumes.iter().any(|c| c == JSON_MEDIA) {
                Some(JSON_MEDIA.to_string())
            } else if let Some(first) = consumes.into_iter().next() {
                Some(first)
            } else if has_form_fields {
                Some("application/x-www-form-urlencoded".to_string())
            } else {
                Some(JSON_MEDIA.to_string())
            };
        }

        let response_codes = op_obj
            .get("responses")
            .and_then(Value::as_object)
            .map(|r| {
                r.iter()
                    .map(|(status, resp)| ResponseCode {
                        status: status.clone(),
                        description: resp
                            .get("description")
                            .and_then(Value::as_str)
                            .unwrap_or("")
                            .to_string(),
                    })
                    .collect()
            })
            .unwrap_or_default();

        let requires_auth = match op_obj.get("security") {
            Some(s) => security_required(s),
            None => self.doc.security.as_ref().is_some_and(security_required),
        };

        let summary_description = op_obj
            .get("description")
            .or_else(|| op_obj.get("summary"))
            .and_then(Value::as_str)
            .map(str::to_string);

        let endpoint = EndpointSpec {
            operation_id,
            method: self.method,
            path: self.path.to_string(),
            summary_description,
            parameters,
            request_body,
            request_body_required,
            request_content_type,
            response_codes,
            api_title: self.doc.info.title.clone(),
            requires_auth,
        };
        (Some(endpoint), self.issues)
    }
}

/// One endpoint per (path, method) pair in document order. Problems with a
/// single operation are reported as issues; they never abort extraction.
pub fn extract_endpoints(doc: &OasDocument) -> Extraction {
    let mut out = Extraction::default();
    let mut seen_ids = HashSet::new();
    for (path, item) in &doc.paths {
        for (method, op) in &item.operations {
            let ctx = OpContext {
                doc,
                path,
                method: *method,
                pointer: super::operation_pointer(path, *method),
                issues: Vec::new(),
            };
            let (endpoint, issues) = ctx.extract(op, &mut seen_ids);
            out.issues.extend(issues);
            if let Some(e) = endpoint {
                out.endpoints.push(e);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oas::{parse_document, resolve_refs, InputFormat, SchemaKind};
    use serde_json::json;

    fn extract(src: Value) -> Extraction {
        let doc = parse_document(src.to_string().as_bytes(), InputFormat::Json).unwrap();
        let doc = resolve_refs(&doc).strict().unwrap();
        extract_endpoints(&doc)
    }

    #[test]
    fn synthesized_operation_id() {
        assert_eq!(
            synthesize_operation_id(HttpMethod::Get, "/api/v1/namespaces/{namespace}/limitranges"),
            "getApiV1NamespacesNamespaceLimitranges"
        );
        assert_eq!(synthesize_operation_id(HttpMethod::Post, "/user-groups"), "postUserGroups");
    }

    #[test]
    fn three_endpoint_fixture() {
        let x = extract(json!({
            "openapi": "3.0.0", "info": {"title": "Pets", "version": "1"},
            "paths": {
                "/pets": {
                    "get": {"operationId": "listPets", "responses": {"200": {"description": "ok"}}},
                    "post": {"operationId": "createPet",
                        "requestBody": {"required": true, "content": {
                            "application/xml": {"schema": {"type": "string"}},
                            "application/json": {"schema": {"type": "object"}}}},
                        "responses": {"201": {"description": "created"}}}
                },
                "/pets/{petId}": {
                    "parameters": [{"name": "petId", "in": "path", "required": true, "schema": {"type": "integer"}}],
                    "get": {"responses": {"200": {"description": "ok"}, "404": {"description": "missing"}}}
                }
            }
        }));
        assert_eq!(x.endpoints.len(), 3);
        assert_eq!(x.endpoints[0].operation_id, "listPets");
        assert!(x.endpoints[0].parameters.is_empty());
        let create = &x.endpoints[1];
        assert_eq!(create.request_content_type.as_deref(), Some("application/json"));
        assert_eq!(create.request_body.as_ref().unwrap().kind, SchemaKind::Object);
        assert!(create.request_body_required);
        let get = &x.endpoints[2];
        assert_eq!(get.operation_id, "getPetsPetId");
        assert_eq!(get.parameters[0].schema.kind, SchemaKind::Integer);
        assert_eq!(get.response_codes.len(), 2);
        assert!(x.issues.iter().all(|i| !i.is_error()));
    }

    #[test]
    fn duplicate_operation_id_gets_suffix() {
        let x = extract(json!({
            "openapi": "3.0.0", "info": {"title": "T", "version": "1"},
            "paths": {
                "/a": {"get": {"operationId": "fetch", "responses": {}}},
                "/b": {"get": {"operationId": "fetch", "responses": {}}}
            }
        }));
        assert_eq!(x.endpoints[0].operation_id, "fetch");
        assert_eq!(x.endpoints[1].operation_id, "fetch_2");
        assert_eq!(x.issues.len(), 1);
        assert!(!x.issues[0].is_error());
    }

    #[test]
    fn missing_path_param_blocks_only_that_endpoint() {
        let x = extract(json!({
            "openapi": "3.0.0", "info": {"title": "T", "version": "1"},
            "paths": {
                "/items/{name}": {"get": {"operationId": "readItem", "responses": {}}},
                "/items": {"get": {"operationId": "listItems", "responses": {}}}
            }
        }));
        assert_eq!(x.endpoints.len(), 2);
        let errors: Vec<_> = x.issues.iter().filter(|i| i.is_error()).collect();
        assert_eq!(errors.len(), 1);
        assert!(x.is_blocked(&x.endpoints[0]));
        assert_eq!(x.usable().len(), 1);
        assert_eq!(x.usable()[0].operation_id, "listItems");
    }

    #[test]
    fn optional_path_param_is_forced_required() {
        let x = extract(json!({
            "openapi": "3.0.0", "info": {"title": "T", "version": "1"},
            "paths": {"/a/{id}": {"get": {"operationId": "g", "responses": {},
                "parameters": [{"name": "id", "in": "path", "required": false, "schema": {"type": "string"}}]}}}
        }));
        assert!(x.endpoints[0].parameters[0].required);
        assert_eq!(x.issues.len(), 1);
    }

    #[test]
    fn operation_parameter_overrides_path_level() {
        let x = extract(json!({
            "openapi": "3.0.0", "info": {"title": "T", "version": "1"},
            "paths": {"/a": {
                "parameters": [{"name": "q", "in": "query", "schema": {"type": "string"}}],
                "get": {"operationId": "g", "responses": {},
                    "parameters": [{"name": "q", "in": "query", "required": true, "schema": {"type": "integer"}}]}}}
        }));
        let params = &x.endpoints[0].parameters;
        assert_eq!(params.len(), 1);
        assert!(params[0].required);
        assert_eq!(params[0].schema.kind, SchemaKind::Integer);
    }

    #[test]
    fn swagger_body_and_form_parameters() {
        let x = extract(json!({
            "swagger": "2.0", "info": {"title": "S", "version": "1"},
            "consumes": ["application/json"],
            "paths": {
                "/pets": {"post": {"operationId": "addPet",
                    "parameters": [{"name": "body", "in": "body", "required": true, "schema": {"$ref": "#/definitions/Pet"}}],
                    "responses": {"200": {"description": "ok"}}}},
                "/pets/{id}/photo": {"post": {"operationId": "uploadPhoto",
                    "consumes": ["multipart/form-data"],
                    "parameters": [
                        {"name": "id", "in": "path", "required": true, "type": "integer"},
                        {"name": "caption", "in": "formData", "type": "string", "enum": ["a", "b"]}],
                    "responses": {"200": {"description": "ok"}}}}
            },
            "definitions": {"Pet": {"type": "object", "required": ["name"], "properties": {"name": {"type": "string"}}}}
        }));
        let add = &x.endpoints[0];
        assert!(add.parameters.is_empty());
        assert!(add.request_body_required);
        assert_eq!(add.request_body.as_ref().unwrap().required_fields, vec!["name"]);
        assert_eq!(add.request_content_type.as_deref(), Some("application/json"));
        let up = &x.endpoints[1];
        assert_eq!(up.parameters[1].location, ParamLocation::BodyField);
        assert_eq!(up.parameters[1].schema.enum_values.as_ref().unwrap().len(), 2);
        assert_eq!(up.parameters[0].schema.kind, SchemaKind::Integer);
        assert_eq!(up.request_content_type.as_deref(), Some("multipart/form-data"));
    }
}
