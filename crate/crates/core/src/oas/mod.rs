//! OpenAPI document model: parsing (OAS 2 and 3, JSON or YAML), local
//! `$ref` resolution, endpoint extraction and validation.

mod extract;
mod parse;
mod resolve;
mod schema;
mod validate;

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use extract::{extract_endpoints, synthesize_operation_id, Extraction};
pub use parse::{parse_document, serialize_document, InputFormat, ParseError};
pub use resolve::{resolve_refs, ResolveError, Resolved, MAX_REF_DEPTH};
pub use schema::{SchemaKind, SchemaNode};
pub use validate::validate_document;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HttpMethod {
    Get,
    Put,
    Post,
    Delete,
    Patch,
    Head,
    Options,
}

impl HttpMethod {
    pub const ALL: [HttpMethod; 7] = [
        HttpMethod::Get,
        HttpMethod::Put,
        HttpMethod::Post,
        HttpMethod::Delete,
        HttpMethod::Patch,
        HttpMethod::Head,
        HttpMethod::Options,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HttpMethod::Get => "get",
            HttpMethod::Put => "put",
            HttpMethod::Post => "post",
            HttpMethod::Delete => "delete",
            HttpMethod::Patch => "patch",
            HttpMethod::Head => "head",
            HttpMethod::Options => "options",
        }
    }

    pub fn upper(self) -> String {
        self.as_str().to_ascii_uppercase()
    }
}

impl fmt::Display for HttpMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HttpMethod {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HttpMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or(())
    }
}

/// Major OAS version family of the source document.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OasFlavor {
    Swagger2,
    OpenApi3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Info {
    pub title: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(flatten)]
    pub extras: IndexMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Server {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(flatten)]
    pub extras: IndexMap<String, Value>,
}

/// One entry of `paths`: the operations keyed by method plus shared
/// parameters. Non-method fields are kept verbatim in `extras`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PathItem {
    pub parameters: Vec<Value>,
    pub operations: IndexMap<HttpMethod, Value>,
    pub extras: IndexMap<String, Value>,
}

/// A parsed OAS document. OAS 2 sections (`definitions`, top-level
/// `parameters`, `responses`, `securityDefinitions`) are normalized into
/// `components` under their OAS 3 names.
#[derive(Clone, Debug, PartialEq)]
pub struct OasDocument {
    pub flavor: OasFlavor,
    /// Value of the `openapi` or `swagger` field.
    pub spec_version: String,
    pub info: Info,
    pub servers: Vec<Server>,
    pub paths: IndexMap<String, PathItem>,
    pub components: IndexMap<String, IndexMap<String, Value>>,
    pub security: Option<Value>,
    pub extras: IndexMap<String, Value>,
}

impl OasDocument {
    pub fn title(&self) -> &str {
        &self.info.title
    }

    pub fn version(&self) -> &str {
        &self.info.version
    }

    /// Base URLs: `servers[].url` for OAS 3, `schemes://host/basePath` for OAS 2.
    pub fn base_urls(&self) -> Vec<String> {
        match self.flavor {
            OasFlavor::OpenApi3 => self.servers.iter().map(|s| s.url.clone()).collect(),
            OasFlavor::Swagger2 => {
                let Some(host) = self.extras.get("host").and_then(Value::as_str) else {
                    return Vec::new();
                };
                let base = self
                    .extras
                    .get("basePath")
                    .and_then(Value::as_str)
                    .unwrap_or("");
                let schemes: Vec<&str> = self
                    .extras
                    .get("schemes")
                    .and_then(Value::as_array)
                    .map(|a| a.iter().filter_map(Value::as_str).collect())
                    .unwrap_or_default();
                let schemes = if schemes.is_empty() { vec!["https"] } else { schemes };
                schemes
                    .into_iter()
                    .map(|s| format!("{s}://{host}{base}"))
                    .collect()
            }
        }
    }

    pub fn operation_count(&self) -> usize {
        self.paths.values().map(|p| p.operations.len()).sum()
    }

    pub fn schema(&self, name: &str) -> Option<&Value> {
        self.components.get("schemas").and_then(|s| s.get(name))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamLocation {
    Path,
    Query,
    Header,
    BodyField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub location: ParamLocation,
    pub required: bool,
    pub schema: SchemaNode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseCode {
    pub status: String,
    pub description: String,
}

/// One (path, method) operation with everything needed to build a tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointSpec {
    pub operation_id: String,
    pub method: HttpMethod,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_description: Option<String>,
    pub parameters: Vec<ParamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_body: Option<SchemaNode>,
    #[serde(default)]
    pub request_body_required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_content_type: Option<String>,
    pub response_codes: Vec<ResponseCode>,
    pub api_title: String,
    #[serde(default)]
    pub requires_auth: bool,
}

impl EndpointSpec {
    /// `{placeholder}` names of the path template, in order.
    pub fn path_placeholders(&self) -> Vec<&str> {
        path_placeholders(&self.path)
    }

    /// JSON pointer of the operation inside its source document.
    pub fn pointer(&self) -> String {
        operation_pointer(&self.path, self.method)
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

/// Extracts `{placeholder}` names from a path template.
pub fn path_placeholders(path: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = path;
    while let Some(start) = rest.find('{') {
        let Some(len) = rest[start..].find('}') else {
            break;
        };
        out.push(&rest[start + 1..start + len]);
        rest = &rest[start + len + 1..];
    }
    out
}

pub(crate) fn escape_pointer_token(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

pub fn operation_pointer(path: &str, method: HttpMethod) -> String {
    format!("/paths/{}/{}", escape_pointer_token(path), method)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub path_pointer: String,
    pub message: String,
}

impl ValidationIssue {
    pub fn error(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            path_pointer: pointer.into(),
            message: message.into(),
        }
    }

    pub fn warning(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            path_pointer: pointer.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// True when the issue sits at or below `pointer`.
    pub fn is_under(&self, pointer: &str) -> bool {
        self.path_pointer == pointer
            || self
                .path_pointer
                .strip_prefix(pointer)
                .is_some_and(|rest| rest.starts_with('/'))
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}\t{}\t{}", self.path_pointer, self.message)
    }
}

/// Renders issues one per line (`severity<TAB>pointer<TAB>message`).
pub fn render_issues_text(issues: &[ValidationIssue]) -> String {
    let mut out = String::new();
    for issue in issues {
        out.push_str(&issue.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placeholders_in_order() {
        assert_eq!(
            path_placeholders("/api/v1/namespaces/{namespace}/limitranges/{name}"),
            vec!["namespace", "name"]
        );
        assert!(path_placeholders("/api/v1/").is_empty());
    }

    #[test]
    fn pointer_escapes_slashes() {
        assert_eq!(
            operation_pointer("/a/{b}", HttpMethod::Delete),
            "/paths/~1a~1{b}/delete"
        );
    }

    #[test]
    fn issue_prefix_matching() {
        let i = ValidationIssue::error("/paths/~1a/get/parameters/0", "x");
        assert!(i.is_under("/paths/~1a/get"));
        assert!(!i.is_under("/paths/~1a/ge"));
    }
}
