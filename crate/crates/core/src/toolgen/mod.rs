//! Compiles enriched endpoints into tool plans and renders them as
//! framework-specific sources or neutral JSON manifests.

mod docstring;
mod manifest;
mod output;
mod python;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enrich::{EnrichedEndpoint, EnrichmentLevel, REQUEST_BODY};
use crate::oas::{HttpMethod, ParamLocation, ParamSpec, SchemaKind, SchemaNode};

pub use docstring::{python_literal, render_docstring, RETURN_LINE};
pub use manifest::{manifest_value, parse_manifest, ManifestTool};
pub use output::{catalog_manifest, generate_tools, write_atomic, write_tool_dir, GeneratedTools};
pub use python::strip_docstring;

#[derive(Debug, Error)]
pub enum ToolgenError {
    #[error("unknown render target `{0}`")]
    UnknownTarget(String),
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticKind {
    Text,
    Integer,
    Real,
    Flag,
    Object,
    Array,
    Untyped,
}

impl SemanticKind {
    pub fn python(self) -> &'static str {
        match self {
            SemanticKind::Text => "str",
            SemanticKind::Integer => "int",
            SemanticKind::Real => "float",
            SemanticKind::Flag => "bool",
            SemanticKind::Object => "dict",
            SemanticKind::Array => "list",
            SemanticKind::Untyped => "Any",
        }
    }

    pub fn json_schema(self) -> Option<&'static str> {
        match self {
            SemanticKind::Text => Some("string"),
            SemanticKind::Integer => Some("integer"),
            SemanticKind::Real => Some("number"),
            SemanticKind::Flag => Some("boolean"),
            SemanticKind::Object => Some("object"),
            SemanticKind::Array => Some("array"),
            SemanticKind::Untyped => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SemanticParamType {
    pub kind: SemanticKind,
    pub optional: bool,
}

pub fn map_schema_type(s: &SchemaNode) -> SemanticParamType {
    let kind = match s.kind {
        SchemaKind::String => SemanticKind::Text,
        SchemaKind::Integer => SemanticKind::Integer,
        SchemaKind::Number => SemanticKind::Real,
        SchemaKind::Boolean => SemanticKind::Flag,
        SchemaKind::Object => SemanticKind::Object,
        SchemaKind::Array => SemanticKind::Array,
        SchemaKind::Untyped => SemanticKind::Untyped,
    };
    SemanticParamType { kind, optional: false }
}

/// Where an argument ends up in the HTTP request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArgLocation {
    Path,
    Query,
    Header,
    FormField,
    Body,
}

impl From<ParamLocation> for ArgLocation {
    fn from(l: ParamLocation) -> Self {
        match l {
            ParamLocation::Path => ArgLocation::Path,
            ParamLocation::Query => ArgLocation::Query,
            ParamLocation::Header => ArgLocation::Header,
            ParamLocation::BodyField => ArgLocation::FormField,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolArg {
    /// Python identifier used in the signature.
    pub name: String,
    /// Parameter name in the OAS document (the wire name).
    pub source_name: String,
    pub ty: SemanticParamType,
    pub location: ArgLocation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocstringBlocks {
    /// The endpoint's original description, shown at level none.
    pub original_description: String,
    pub description: String,
    pub param_lines: Vec<(String, String)>,
    pub return_line: String,
    pub input_example: Option<Vec<(String, serde_json::Value)>>,
}

/// Request construction, keyed by wire names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestMapping {
    pub method: HttpMethod,
    pub url_template: String,
    pub path_args: Vec<String>,
    pub query_args: Vec<String>,
    pub header_args: Vec<String>,
    pub form_args: Vec<String>,
    pub header_entries: IndexMap<String, String>,
    pub body_arg: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolPlan {
    pub function_name: String,
    pub ordered_args: Vec<ToolArg>,
    pub docstring: DocstringBlocks,
    pub request: RequestMapping,
    pub response_codes: Vec<String>,
    pub requires_auth: bool,
    pub level: EnrichmentLevel,
}

impl ToolPlan {
    pub fn arg(&self, source_name: &str) -> Option<&ToolArg> {
        self.ordered_args.iter().find(|a| a.source_name == source_name)
    }
}

const PYTHON_KEYWORDS: [&str; 35] = [
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
    "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return",
    "try", "while", "with", "yield",
];

/// Names the generated function body uses itself.
const BODY_NAMES: [&str; 10] = [
    "json", "requests", "os", "tool", "header", "queryParam", "formData", "api_url",
    "response", "payload",
];

pub fn sanitize_identifier(raw: &str) -> String {
    let mut s: String = raw
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        s.insert(0, '_');
    }
    s
}

/// The `content-type` header: the body's media type when a body is sent,
/// form encoding otherwise. An optional body on a DELETE keeps the form
/// header.
fn content_type(e: &EnrichedEndpoint) -> String {
    let base = &e.base;
    match &base.request_body {
        Some(_) if base.request_body_required || base.method != HttpMethod::Delete => base
            .request_content_type
            .clone()
            .unwrap_or_else(|| "application/json".into()),
        _ => "application/x-www-form-urlencoded".into(),
    }
}

/// Builds the plan. Renamed arguments are reported as warnings.
///
/// Argument order: path parameters in path order, required parameters,
/// optional parameters, then `requestBody`. A required body is placed
/// after the other required arguments so no required argument follows a
/// defaulted one.
pub fn plan_tool(e: &EnrichedEndpoint) -> (ToolPlan, Vec<String>) {
    let base = &e.base;
    let mut warnings = Vec::new();
    let mut used = HashSet::new();
    let mut ident = |raw: &str, warnings: &mut Vec<String>| {
        let mut name = sanitize_identifier(raw);
        if PYTHON_KEYWORDS.contains(&name.as_str()) || BODY_NAMES.contains(&name.as_str()) {
            name.push_str("_param");
        }
        let stem = name.clone();
        let mut n = 2;
        while !used.insert(name.clone()) {
            name = format!("{stem}_{n}");
            n += 1;
        }
        if name != raw {
            warnings.push(format!("{}: argument `{raw}` renamed to `{name}`", base.operation_id));
        }
        name
    };

    let placeholders = base.path_placeholders();
    let mut path = Vec::new();
    for ph in &placeholders {
        if let Some(p) = base.parameters.iter().find(|p| p.location == ParamLocation::Path && p.name == *ph) {
            path.push(p);
        }
    }
    let rest = base.parameters.iter().filter(|p| p.location != ParamLocation::Path);
    let (required, optional): (Vec<_>, Vec<_>) = rest.partition(|p| p.required);

    let body = base.request_body.as_ref();
    let mut slots: Vec<(Option<&ParamSpec>, bool)> = Vec::new();
    slots.extend(path.iter().chain(&required).map(|p| (Some(*p), false)));
    if base.request_body_required && body.is_some() {
        slots.push((None, false));
    }
    slots.extend(optional.iter().map(|p| (Some(*p), true)));
    if !base.request_body_required && body.is_some() {
        slots.push((None, true));
    }
    let ordered: Vec<ToolArg> = slots
        .into_iter()
        .map(|(param, optional)| {
            let (source, schema, location) = match param {
                Some(p) => (p.name.as_str(), &p.schema, p.location.into()),
                None => (REQUEST_BODY, body.expect("body slot"), ArgLocation::Body),
            };
            let mut ty = map_schema_type(schema);
            ty.optional = optional;
            ToolArg {
                name: ident(source, &mut warnings),
                source_name: source.to_string(),
                ty,
                location,
            }
        })
        .collect();

    let names_at = |loc: ArgLocation| -> Vec<String> {
        ordered
            .iter()
            .filter(|a| a.location == loc)
            .map(|a| a.source_name.clone())
            .collect()
    };
    let mut header_entries = IndexMap::new();
    header_entries.insert("accept".to_string(), "application/json".to_string());
    header_entries.insert("content-type".to_string(), content_type(e));
    let request = RequestMapping {
        method: base.method,
        url_template: base.path.clone(),
        path_args: placeholders.iter().map(|s| s.to_string()).collect(),
        query_args: names_at(ArgLocation::Query),
        header_args: names_at(ArgLocation::Header),
        form_args: names_at(ArgLocation::FormField),
        header_entries,
        body_arg: base.request_body.as_ref().map(|_| REQUEST_BODY.to_string()),
    };

    let original = base.summary_description.clone().unwrap_or_default();
    let description = if e.level == EnrichmentLevel::None {
        original.clone()
    } else {
        e.tool_description.clone()
    };
    let param_lines = ordered
        .iter()
        .filter_map(|a| {
            e.param_descriptions
                .get(&a.source_name)
                .map(|d| (a.name.clone(), d.clone()))
        })
        .collect();
    let examples: Vec<_> = ordered
        .iter()
        .filter_map(|a| e.example(&a.source_name).map(|v| (a.name.clone(), v.clone())))
        .collect();
    let docstring = DocstringBlocks {
        original_description: original,
        description,
        param_lines,
        return_line: RETURN_LINE.to_string(),
        input_example: (!examples.is_empty()).then_some(examples),
    };

    let plan = ToolPlan {
        function_name: sanitize_identifier(&base.operation_id),
        ordered_args: ordered,
        docstring,
        request,
        response_codes: base.response_codes.iter().map(|r| r.status.clone()).collect(),
        requires_auth: base.requires_auth,
        level: e.level,
    };
    (plan, warnings)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RenderTarget {
    #[serde(rename = "langchain-react-py")]
    LangchainReactPy,
    #[serde(rename = "manifest-json")]
    ManifestJson,
}

impl RenderTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            RenderTarget::LangchainReactPy => "langchain-react-py",
            RenderTarget::ManifestJson => "manifest-json",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            RenderTarget::LangchainReactPy => "py",
            RenderTarget::ManifestJson => "json",
        }
    }
}

impl fmt::Display for RenderTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RenderTarget {
    type Err = ToolgenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "langchain-react-py" => Ok(RenderTarget::LangchainReactPy),
            "manifest-json" => Ok(RenderTarget::ManifestJson),
            other => Err(ToolgenError::UnknownTarget(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuthScheme {
    Bearer,
    Header,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthConfig {
    pub scheme: AuthScheme,
    /// Header name; required for the `header` scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Environment variable holding the credential.
    pub value_env: String,
}

/// Per-catalog generator settings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub base_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth: Option<AuthConfig>,
}

impl GeneratorConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self { base_url: base_url.into(), auth: None }
    }

    pub fn from_json(text: &str) -> Result<Self, ToolgenError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ToolgenError::Config(e.to_string()))?;
        if let Some(auth) = &cfg.auth {
            if auth.scheme == AuthScheme::Header && auth.name.as_deref().is_none_or(str::is_empty) {
                return Err(ToolgenError::Config("header auth needs a `name`".into()));
            }
        }
        Ok(cfg)
    }

    /// Header name and Python expression for the credential, when the
    /// endpoint needs one and auth is configured.
    fn auth_header(&self, plan: &ToolPlan) -> Option<(String, String)> {
        let auth = self.auth.as_ref().filter(|_| plan.requires_auth)?;
        let lookup = format!("os.environ.get({}, '')", python_literal(&auth.value_env.clone().into()));
        Some(match auth.scheme {
            AuthScheme::Bearer => ("authorization".into(), format!("'Bearer ' + {lookup}")),
            AuthScheme::Header => (auth.name.clone().unwrap_or_default(), lookup),
        })
    }
}

/// One emitted file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceArtifact {
    pub file_name: String,
    pub contents: String,
}

pub fn emit_tool_source(plan: &ToolPlan, target: RenderTarget, config: &GeneratorConfig) -> SourceArtifact {
    let contents = match target {
        RenderTarget::LangchainReactPy => python::render(plan, config),
        RenderTarget::ManifestJson => {
            let mut s = serde_json::to_string_pretty(&manifest_value(plan, config)).expect("manifest");
            s.push('\n');
            s
        }
    };
    SourceArtifact {
        file_name: format!("{}.{}", plan.function_name, target.extension()),
        contents,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::enrich::{enrich_endpoint, HeuristicEnricher};
    use crate::oas::EndpointSpec;

    pub(crate) fn endpoint() -> EndpointSpec {
        let p = |name: &str, location, required, kind| ParamSpec {
            name: name.into(),
            location,
            required,
            schema: SchemaNode::of_kind(kind),
            description: None,
        };
        EndpointSpec {
            operation_id: "createWidget".into(),
            method: HttpMethod::Post,
            path: "/shops/{shop_id}/widgets".into(),
            summary_description: Some("create a widget".into()),
            parameters: vec![
                p("class", ParamLocation::Query, false, SchemaKind::String),
                p("shop_id", ParamLocation::Path, true, SchemaKind::Integer),
                p("X-Trace", ParamLocation::Header, true, SchemaKind::String),
                p("size", ParamLocation::Query, true, SchemaKind::Number),
            ],
            request_body: Some(SchemaNode::of_kind(SchemaKind::Object)),
            request_body_required: true,
            request_content_type: Some("application/json".into()),
            response_codes: vec![],
            api_title: "Shop".into(),
            requires_auth: false,
        }
    }

    pub(crate) fn planned(level: EnrichmentLevel) -> ToolPlan {
        let e = enrich_endpoint(&endpoint(), level, &HeuristicEnricher).unwrap().endpoint;
        plan_tool(&e).0
    }

    #[test]
    fn type_mapping() {
        assert_eq!(map_schema_type(&SchemaNode::of_kind(SchemaKind::Boolean)).kind, SemanticKind::Flag);
        let mut arr = SchemaNode::of_kind(SchemaKind::Array);
        arr.items = Some(Box::new(SchemaNode::of_kind(SchemaKind::String)));
        assert_eq!(map_schema_type(&arr).kind, SemanticKind::Array);
        assert_eq!(map_schema_type(&SchemaNode::untyped()).kind, SemanticKind::Untyped);
    }

    #[test]
    fn reserved_words_and_ordering() {
        let e = EnrichedEndpoint::original(endpoint());
        let (plan, warnings) = plan_tool(&e);
        let names: Vec<&str> = plan.ordered_args.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["shop_id", "X_Trace", "size", "requestBody", "class_param"]);
        assert_eq!(warnings.len(), 2);
        assert!(warnings.iter().any(|w| w.contains("class_param")));
        assert_eq!(plan.request.query_args, ["size", "class"]);
        assert_eq!(plan.request.header_entries["content-type"], "application/json");
    }

    #[test]
    fn zero_param_get() {
        let mut ep = endpoint();
        ep.method = HttpMethod::Get;
        ep.path = "/widgets".into();
        ep.parameters.clear();
        ep.request_body = None;
        let (plan, warnings) = plan_tool(&EnrichedEndpoint::original(ep));
        assert!(plan.ordered_args.is_empty() && warnings.is_empty());
        assert_eq!(plan.request.body_arg, None);
        assert_eq!(plan.request.header_entries["content-type"], "application/x-www-form-urlencoded");
    }

    #[test]
    fn unknown_target() {
        assert!(matches!("go".parse::<RenderTarget>(), Err(ToolgenError::UnknownTarget(_))));
    }

    #[test]
    fn header_auth_needs_name() {
        let bad = r#"{"base_url": "http://x", "auth": {"scheme": "header", "value_env": "K"}}"#;
        assert!(GeneratorConfig::from_json(bad).is_err());
        let ok = r#"{"base_url": "http://x", "auth": {"scheme": "bearer", "value_env": "K"}}"#;
        assert_eq!(GeneratorConfig::from_json(ok).unwrap().auth.unwrap().scheme, AuthScheme::Bearer);
    }
}
