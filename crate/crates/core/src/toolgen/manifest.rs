use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{GeneratorConfig, RequestMapping, ToolArg, ToolPlan, ToolgenError};
use crate::enrich::EnrichmentLevel;

/// The lossless part of a `manifest-json` descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestTool {
    pub name: String,
    pub description: String,
    pub level: EnrichmentLevel,
    pub base_url: String,
    pub args: Vec<ToolArg>,
    pub request: RequestMapping,
    pub response_codes: Vec<String>,
    pub requires_auth: bool,
}

/// Framework-neutral descriptor: the fields of [`ManifestTool`] plus a
/// JSON-schema view of the arguments under `parameters`.
pub fn manifest_value(plan: &ToolPlan, config: &GeneratorConfig) -> Value {
    let level = plan.level;
    let description = if level == EnrichmentLevel::None {
        &plan.docstring.original_description
    } else {
        &plan.docstring.description
    };
    let mut properties = Map::new();
    for a in &plan.ordered_args {
        let mut prop = Map::new();
        if let Some(t) = a.ty.kind.json_schema() {
            prop.insert("type".into(), json!(t));
        }
        if level >= EnrichmentLevel::E2 {
            if let Some((_, d)) = plan.docstring.param_lines.iter().find(|(n, _)| *n == a.name) {
                prop.insert("description".into(), json!(d));
            }
        }
        if level >= EnrichmentLevel::E3 {
            let examples = plan.docstring.input_example.iter().flatten();
            if let Some((_, v)) = examples.into_iter().find(|(n, _)| *n == a.name) {
                prop.insert("examples".into(), json!([v]));
            }
        }
        properties.insert(a.name.clone(), Value::Object(prop));
    }
    let required: Vec<&str> = plan
        .ordered_args
        .iter()
        .filter(|a| !a.ty.optional)
        .map(|a| a.name.as_str())
        .collect();
    let tool = ManifestTool {
        name: plan.function_name.clone(),
        description: description.clone(),
        level,
        base_url: config.base_url.clone(),
        args: plan.ordered_args.clone(),
        request: plan.request.clone(),
        response_codes: plan.response_codes.clone(),
        requires_auth: plan.requires_auth,
    };
    let mut v = serde_json::to_value(tool).expect("manifest serializes");
    v["parameters"] = json!({"type": "object", "properties": properties, "required": required});
    v
}

pub fn parse_manifest(text: &str) -> Result<ManifestTool, ToolgenError> {
    serde_json::from_str(text).map_err(|e| ToolgenError::Manifest(e.to_string()))
}
