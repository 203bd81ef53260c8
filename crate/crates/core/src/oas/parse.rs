use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{HttpMethod, Info, OasDocument, OasFlavor, PathItem, Server};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InputFormat {
    Json,
    Yaml,
    #[default]
    Auto,
}

impl std::str::FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(InputFormat::Json),
            "yaml" | "yml" => Ok(InputFormat::Yaml),
            "auto" => Ok(InputFormat::Auto),
            other => Err(format!("unknown input format `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed input at line {line}, column {column}: {message}")]
    MalformedInput {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported OAS version `{0}` (expected 2.x or 3.x)")]
    UnsupportedOasVersion(String),
    #[error("invalid document structure: {0}")]
    InvalidStructure(String),
}

#[derive(Deserialize)]
struct VersionProbe {
    #[serde(default)]
    openapi: Option<Value>,
    #[serde(default)]
    swagger: Option<Value>,
}

#[derive(Serialize, Deserialize)]
struct RawDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    openapi: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    swagger: Option<Value>,
    info: Info,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    servers: Vec<Server>,
    #[serde(default)]
    paths: IndexMap<String, IndexMap<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    components: Option<IndexMap<String, IndexMap<String, Value>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    definitions: Option<IndexMap<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parameters: Option<IndexMap<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    responses: Option<IndexMap<String, Value>>,
    #[serde(
        default,
        rename = "securityDefinitions",
        skip_serializing_if = "Option::is_none"
    )]
    security_definitions: Option<IndexMap<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    security: Option<Value>,
    #[serde(flatten)]
    extras: IndexMap<String, Value>,
}

/// OAS 2 top-level sections and the OAS 3 component section they map to.
const SWAGGER_SECTIONS: [(&str, &str); 4] = [
    ("definitions", "schemas"),
    ("parameters", "parameters"),
    ("responses", "responses"),
    ("securityDefinitions", "securitySchemes"),
];

fn version_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn sniff(raw: &[u8]) -> InputFormat {
    match raw.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'{') | Some(b'[') => InputFormat::Json,
        _ => InputFormat::Yaml,
    }
}

fn yaml_keys_to_strings(v: serde_yaml::Value) -> serde_yaml::Value {
    use serde_yaml::Value as Y;
    match v {
        Y::Mapping(map) => {
            let mut out = serde_yaml::Mapping::with_capacity(map.len());
            for (k, val) in map {
                let key = match k {
                    Y::String(s) => s,
                    Y::Number(n) => n.to_string(),
                    Y::Bool(b) => b.to_string(),
                    Y::Null => "null".to_string(),
                    other => serde_yaml::to_string(&other)
                        .unwrap_or_default()
                        .trim()
                        .to_string(),
                };
                out.insert(Y::String(key), yaml_keys_to_strings(val));
            }
            Y::Mapping(out)
        }
        Y::Sequence(items) => Y::Sequence(items.into_iter().map(yaml_keys_to_strings).collect()),
        Y::Tagged(t) => yaml_keys_to_strings(t.value),
        other => other,
    }
}

fn json_tree(raw: &[u8], format: InputFormat) -> Result<Value, ParseError> {
    match format {
        InputFormat::Json => serde_json::from_slice(raw).map_err(|e| ParseError::MalformedInput {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }),
        InputFormat::Yaml => {
            let y: serde_yaml::Value = serde_yaml::from_slice(raw).map_err(|e| {
                let (line, column) = e
                    .location()
                    .map(|l| (l.line(), l.column()))
                    .unwrap_or((0, 0));
                ParseError::MalformedInput {
                    line,
                    column,
                    message: e.to_string(),
                }
            })?;
            serde_json::to_value(yaml_keys_to_strings(y))
                .map_err(|e| ParseError::InvalidStructure(e.to_string()))
        }
        InputFormat::Auto => json_tree(raw, sniff(raw)),
    }
}

/// Parses a JSON or YAML OAS document. `Auto` sniffs the first
/// non-whitespace byte (`{`/`[` means JSON).
pub fn parse_document(raw: &[u8], format: InputFormat) -> Result<OasDocument, ParseError> {
    let tree = json_tree(raw, format)?;
    if !tree.is_object() {
        return Err(ParseError::InvalidStructure(
            "top-level value must be an object".into(),
        ));
    }
    let probe: VersionProbe = serde_json::from_value(tree.clone())
        .map_err(|e| ParseError::InvalidStructure(e.to_string()))?;
    let (flavor, spec_version) = match (&probe.openapi, &probe.swagger) {
        (Some(v), _) => {
            let text = version_text(v);
            if !text.starts_with("3.") {
                return Err(ParseError::UnsupportedOasVersion(text));
            }
            (OasFlavor::OpenApi3, text)
        }
        (None, Some(v)) => {
            let text = version_text(v);
            if !(text == "2" || text.starts_with("2.")) {
                return Err(ParseError::UnsupportedOasVersion(text));
            }
            (OasFlavor::Swagger2, text)
        }
        (None, None) => {
            return Err(ParseError::UnsupportedOasVersion(
                "missing `openapi`/`swagger` field".into(),
            ))
        }
    };

    let raw_doc: RawDocument =
        serde_json::from_value(tree).map_err(|e| ParseError::InvalidStructure(e.to_string()))?;
    Ok(normalize(raw_doc, flavor, spec_version))
}

fn normalize(raw: RawDocument, flavor: OasFlavor, spec_version: String) -> OasDocument {
    let paths = raw
        .paths
        .into_iter()
        .map(|(path, entries)| {
            let mut item = PathItem::default();
            for (key, value) in entries {
                if let Ok(method) = key.parse::<HttpMethod>() {
                    item.operations.insert(method, value);
                } else if key == "parameters" {
                    item.parameters = value.as_array().cloned().unwrap_or_default();
                } else {
                    item.extras.insert(key, value);
                }
            }
            (path, item)
        })
        .collect();

    let mut components = raw.components.unwrap_or_default();
    let swagger_parts = [
        raw.definitions,
        raw.parameters,
        raw.responses,
        raw.security_definitions,
    ];
    for ((_, target), part) in SWAGGER_SECTIONS.iter().zip(swagger_parts) {
        if let Some(part) = part {
            components.entry(target.to_string()).or_default().extend(part);
        }
    }

    OasDocument {
        flavor,
        spec_version,
        info: raw.info,
        servers: raw.servers,
        paths,
        components,
        security: raw.security,
        extras: raw.extras,
    }
}

/// Serializes a document back to OAS layout in its source flavor.
pub fn serialize_document(doc: &OasDocument) -> Value {
    let paths = doc
        .paths
        .iter()
        .map(|(path, item)| {
            let mut entries: IndexMap<String, Value> = IndexMap::new();
            for (k, v) in &item.extras {
                entries.insert(k.clone(), v.clone());
            }
            if !item.parameters.is_empty() {
                entries.insert("parameters".into(), Value::Array(item.parameters.clone()));
            }
            for (m, op) in &item.operations {
                entries.insert(m.as_str().to_string(), op.clone());
            }
            (path.clone(), entries)
        })
        .collect();

    let mut raw = RawDocument {
        openapi: None,
        swagger: None,
        info: doc.info.clone(),
        servers: doc.servers.clone(),
        paths,
        components: None,
        definitions: None,
        parameters: None,
        responses: None,
        security_definitions: None,
        security: doc.security.clone(),
        extras: doc.extras.clone(),
    };
    match doc.flavor {
        OasFlavor::OpenApi3 => {
            raw.openapi = Some(Value::String(doc.spec_version.clone()));
            if !doc.components.is_empty() {
                raw.components = Some(doc.components.clone());
            }
        }
        OasFlavor::Swagger2 => {
            raw.swagger = Some(Value::String(doc.spec_version.clone()));
            let mut rest = doc.components.clone();
            let mut take = |name: &str| rest.shift_remove(name);
            raw.definitions = take("schemas");
            raw.parameters = take("parameters");
            raw.responses = take("responses");
            raw.security_definitions = take("securitySchemes");
            if !rest.is_empty() {
                raw.components = Some(rest);
            }
        }
    }
    serde_json::to_value(raw).expect("document serializes")
}
