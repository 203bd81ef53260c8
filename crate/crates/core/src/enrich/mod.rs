//! OAS metadata enrichment: tool descriptions, parameter descriptions and
//! parameter examples, produced by a pluggable [`Enricher`] backend.

mod heuristic;
mod llm;
mod prompt;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::chat::ChatError;
use crate::oas::{EndpointSpec, ParamLocation, ParamSpec};

pub use heuristic::{example_for, heuristic_enrich, HeuristicEnricher};
pub use llm::{clean_reply, llm_enrich, LlmEnricher};
pub use prompt::{build_prompt, PromptBundle, TEMPLATE_VERSION};

/// Name of the pseudo-parameter standing for the request body.
pub const REQUEST_BODY: &str = "requestBody";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnrichmentLevel {
    None,
    E1,
    E2,
    E3,
}

impl EnrichmentLevel {
    pub const ALL: [EnrichmentLevel; 4] = [
        EnrichmentLevel::None,
        EnrichmentLevel::E1,
        EnrichmentLevel::E2,
        EnrichmentLevel::E3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnrichmentLevel::None => "none",
            EnrichmentLevel::E1 => "e1",
            EnrichmentLevel::E2 => "e2",
            EnrichmentLevel::E3 => "e3",
        }
    }

    /// Report label (`No Enrich`, `Enrich-1`, ...).
    pub fn label(self) -> &'static str {
        match self {
            EnrichmentLevel::None => "No Enrich",
            EnrichmentLevel::E1 => "Enrich-1",
            EnrichmentLevel::E2 => "Enrich-2",
            EnrichmentLevel::E3 => "Enrich-3",
        }
    }
}

impl fmt::Display for EnrichmentLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnrichmentLevel {
    type Err = String;

    /// Accepts `none|e1|e2|e3` and the numerals `0..=3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "0" => Ok(EnrichmentLevel::None),
            "e1" | "1" => Ok(EnrichmentLevel::E1),
            "e2" | "2" => Ok(EnrichmentLevel::E2),
            "e3" | "3" => Ok(EnrichmentLevel::E3),
            other => Err(format!("unknown enrichment level `{other}`")),
        }
    }
}

/// Which generation task a prompt is for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    MethodDesc,
    ParamDesc,
    ParamExamples,
}

impl Task {
    pub fn is_param_task(self) -> bool {
        !matches!(self, Task::MethodDesc)
    }
}

/// Where a field value came from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Provenance {
    Original,
    Heuristic,
    Llm(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Original => f.write_str("original"),
            Provenance::Heuristic => f.write_str("heuristic"),
            Provenance::Llm(model) => write!(f, "llm:{model}"),
        }
    }
}

impl From<Provenance> for String {
    fn from(p: Provenance) -> Self {
        p.to_string()
    }
}

impl TryFrom<String> for Provenance {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        match s.as_str() {
            "original" => Ok(Provenance::Original),
            "heuristic" => Ok(Provenance::Heuristic),
            _ => s
                .strip_prefix("llm:")
                .map(|m| Provenance::Llm(m.to_string()))
                .ok_or_else(|| format!("unknown provenance `{s}`")),
        }
    }
}

/// A generated value: prose for description tasks, a literal for examples.
#[derive(Clone, Debug, PartialEq)]
pub enum Generated {
    Text(String),
    Literal(Value),
}

#[derive(Debug, Error)]
pub enum EnrichError {
    #[error("missing prompt context: {0}")]
    MissingContext(String),
    #[error("unexpected prompt context: {0}")]
    UnexpectedContext(String),
    #[error("backend failure: {0}")]
    BackendFailure(#[from] ChatError),
    #[error("example is not a JSON literal: {0:?}")]
    UnparseableExample(String),
}

/// An endpoint plus the metadata generated for it up to `level`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnrichedEndpoint {
    pub base: EndpointSpec,
    pub tool_description: String,
    #[serde(default)]
    pub param_descriptions: IndexMap<String, String>,
    #[serde(default)]
    pub param_examples: IndexMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_example: Option<Value>,
    pub level: EnrichmentLevel,
    /// Field path (`tool_description`, `param_descriptions.<name>`, ...) to origin.
    #[serde(default)]
    pub provenance: BTreeMap<String, Provenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_version: Option<u32>,
}

impl EnrichedEndpoint {
    /// The level-none record: original description only.
    pub fn original(base: EndpointSpec) -> Self {
        let mut provenance = BTreeMap::new();
        provenance.insert("tool_description".to_string(), Provenance::Original);
        Self {
            tool_description: base.summary_description.clone().unwrap_or_default(),
            base,
            param_descriptions: IndexMap::new(),
            param_examples: IndexMap::new(),
            body_example: None,
            level: EnrichmentLevel::None,
            provenance,
            template_version: None,
        }
    }

    pub fn tool_id(&self) -> &str {
        &self.base.operation_id
    }

    /// Example for an argument, `requestBody` included.
    pub fn example(&self, name: &str) -> Option<&Value> {
        if name == REQUEST_BODY {
            self.body_example.as_ref()
        } else {
            self.param_examples.get(name)
        }
    }

    /// Names of populated fields, used for level comparisons.
    pub fn populated_fields(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.tool_description.is_empty() {
            out.push("tool_description".to_string());
        }
        out.extend(self.param_descriptions.keys().map(|k| format!("param_descriptions.{k}")));
        out.extend(self.param_examples.keys().map(|k| format!("param_examples.{k}")));
        if self.body_example.is_some() {
            out.push("body_example".to_string());
        }
        out.sort();
        out
    }
}

/// Parameters in enrichment order, followed by the body pseudo-parameter.
pub fn enrichable_params(endpoint: &EndpointSpec) -> Vec<ParamSpec> {
    let mut params = endpoint.parameters.clone();
    if let Some(body) = &endpoint.request_body {
        params.push(ParamSpec {
            name: REQUEST_BODY.to_string(),
            location: ParamLocation::BodyField,
            required: endpoint.request_body_required,
            schema: body.clone(),
            description: body.description.clone(),
        });
    }
    params
}

/// A generation backend.
pub trait Enricher: Sync {
    fn provenance(&self) -> Provenance;

    fn generate(&self, bundle: &PromptBundle) -> Result<Generated, EnrichError>;

    /// Prompt template version, for backends that consume the templates.
    fn template_version(&self) -> Option<u32> {
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnrichOutcome {
    pub endpoint: EnrichedEndpoint,
    pub warnings: Vec<String>,
}

fn generate_text(
    backend: &dyn Enricher,
    bundle: &PromptBundle,
    field: &str,
    warnings: &mut Vec<String>,
) -> Result<(String, Provenance), EnrichError> {
    match backend.generate(bundle)? {
        Generated::Text(t) if !t.trim().is_empty() => Ok((t, backend.provenance())),
        _ => {
            warnings.push(format!("{field}: backend returned no text; using heuristic"));
            let Generated::Text(t) = heuristic_enrich(bundle) else {
                unreachable!("description tasks yield text")
            };
            Ok((t, Provenance::Heuristic))
        }
    }
}

fn generate_example(
    backend: &dyn Enricher,
    bundle: &PromptBundle,
    param: &ParamSpec,
    field: &str,
    warnings: &mut Vec<String>,
) -> Result<(Value, Provenance), EnrichError> {
    for attempt in 0..2 {
        let reason = match backend.generate(bundle) {
            Ok(Generated::Literal(v)) if param.schema.conforms(&v) => {
                return Ok((v, backend.provenance()))
            }
            Ok(Generated::Literal(v)) => format!("example {v} violates the schema"),
            Ok(Generated::Text(t)) => format!("example {t:?} is not a literal"),
            Err(EnrichError::UnparseableExample(raw)) => format!("example {raw:?} is not JSON"),
            Err(e) => return Err(e),
        };
        log::debug!("{field}: attempt {} rejected: {reason}", attempt + 1);
        if attempt == 1 {
            warnings.push(format!("{field}: {reason}; using heuristic example"));
        }
    }
    Ok((example_for(&param.schema, &param.name), Provenance::Heuristic))
}

/// Enriches one endpoint up to `level`.
///
/// Tasks run in a fixed order: tool description, every parameter
/// description, then every example (prompted with the new description).
/// A rejected example is regenerated once and then replaced by the
/// heuristic example, so examples always conform to their schema.
pub fn enrich_endpoint(
    endpoint: &EndpointSpec,
    level: EnrichmentLevel,
    backend: &dyn Enricher,
) -> Result<EnrichOutcome, EnrichError> {
    let mut out = EnrichedEndpoint::original(endpoint.clone());
    let mut warnings = Vec::new();
    out.level = level;
    if level == EnrichmentLevel::None {
        return Ok(EnrichOutcome { endpoint: out, warnings });
    }
    out.template_version = backend.template_version();

    let bundle = build_prompt(endpoint, Task::MethodDesc, None, None)?;
    let (text, origin) = generate_text(backend, &bundle, "tool_description", &mut warnings)?;
    out.tool_description = text;
    out.provenance.insert("tool_description".into(), origin);

    if level < EnrichmentLevel::E2 {
        return Ok(EnrichOutcome { endpoint: out, warnings });
    }
    let params = enrichable_params(endpoint);
    for p in &params {
        let field = format!("param_descriptions.{}", p.name);
        let bundle = build_prompt(endpoint, Task::ParamDesc, Some(p), None)?;
        let (text, origin) = generate_text(backend, &bundle, &field, &mut warnings)?;
        out.param_descriptions.insert(p.name.clone(), text);
        out.provenance.insert(field, origin);
    }

    if level < EnrichmentLevel::E3 {
        return Ok(EnrichOutcome { endpoint: out, warnings });
    }
    for p in &params {
        let desc = out.param_descriptions.get(&p.name).map(String::as_str);
        let bundle = build_prompt(endpoint, Task::ParamExamples, Some(p), desc)?;
        let field = if p.name == REQUEST_BODY {
            "body_example".to_string()
        } else {
            format!("param_examples.{}", p.name)
        };
        let (value, origin) = generate_example(backend, &bundle, p, &field, &mut warnings)?;
        if p.name == REQUEST_BODY {
            out.body_example = Some(value);
        } else {
            out.param_examples.insert(p.name.clone(), value);
        }
        out.provenance.insert(field, origin);
    }
    Ok(EnrichOutcome { endpoint: out, warnings })
}

/// Enriches endpoints on a pool of `workers` threads, preserving order.
pub fn enrich_all(
    endpoints: &[EndpointSpec],
    level: EnrichmentLevel,
    backend: &dyn Enricher,
    workers: usize,
) -> Result<Vec<EnrichOutcome>, EnrichError> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        endpoints
            .par_iter()
            .map(|ep| enrich_endpoint(ep, level, backend))
            .collect()
    })
}
