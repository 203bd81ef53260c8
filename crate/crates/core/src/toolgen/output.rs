use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::{emit_tool_source, manifest_value, plan_tool, GeneratorConfig, RenderTarget, SourceArtifact, ToolPlan};
use crate::enrich::EnrichedEndpoint;

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedTools {
    pub plans: Vec<ToolPlan>,
    pub artifacts: Vec<SourceArtifact>,
    /// Contents of `catalog.json`.
    pub catalog: Value,
    pub warnings: Vec<String>,
}

/// `catalog.json`: every tool's manifest plus the file it was written to,
/// sorted by name.
pub fn catalog_manifest(plans: &[ToolPlan], target: RenderTarget, config: &GeneratorConfig) -> Value {
    let mut sorted: Vec<&ToolPlan> = plans.iter().collect();
    sorted.sort_by(|a, b| a.function_name.cmp(&b.function_name));
    let tools: Vec<Value> = sorted
        .into_iter()
        .map(|p| {
            let mut m = manifest_value(p, config);
            m["file"] = json!(format!("{}.{}", p.function_name, target.extension()));
            m
        })
        .collect();
    json!({
        "ace_catalog_version": 1,
        "target": target.as_str(),
        "base_url": config.base_url,
        "tools": tools,
    })
}

/// Plans and renders every endpoint.
pub fn generate_tools(
    endpoints: &[EnrichedEndpoint],
    target: RenderTarget,
    config: &GeneratorConfig,
) -> GeneratedTools {
    let planned: Vec<(ToolPlan, Vec<String>)> = endpoints.par_iter().map(plan_tool).collect();
    let mut plans = Vec::with_capacity(planned.len());
    let mut warnings = Vec::new();
    for (plan, w) in planned {
        plans.push(plan);
        warnings.extend(w);
    }
    let artifacts = plans
        .par_iter()
        .map(|p| emit_tool_source(p, target, config))
        .collect();
    let catalog = catalog_manifest(&plans, target, config);
    GeneratedTools { plans, artifacts, catalog, warnings }
}

pub fn write_tool_dir(dir: &Path, tools: &GeneratedTools) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for a in &tools.artifacts {
        write_atomic(&dir.join(&a.file_name), a.contents.as_bytes())?;
    }
    let mut catalog = serde_json::to_string_pretty(&tools.catalog).expect("catalog serializes");
    catalog.push('\n');
    write_atomic(&dir.join("catalog.json"), catalog.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enrich::{enrich_endpoint, EnrichmentLevel, HeuristicEnricher};
    use crate::toolgen::tests::endpoint;

    #[test]
    fn writes_tools_and_catalog() {
        let e = enrich_endpoint(&endpoint(), EnrichmentLevel::E2, &HeuristicEnricher).unwrap().endpoint;
        let cfg = GeneratorConfig::new("http://h");
        let tools = generate_tools(&[e], RenderTarget::LangchainReactPy, &cfg);
        let dir = tempfile::tempdir().unwrap();
        write_tool_dir(dir.path(), &tools).unwrap();
        let src = fs::read_to_string(dir.path().join("createWidget.py")).unwrap();
        assert_eq!(src, tools.artifacts[0].contents);
        let cat: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("catalog.json")).unwrap()).unwrap();
        assert_eq!(cat["tools"][0]["file"], "createWidget.py");
        assert_eq!(cat["ace_catalog_version"], 1);
        let leftovers = fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(leftovers, 2);
    }
}
