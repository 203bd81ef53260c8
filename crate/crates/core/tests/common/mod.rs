#![allow(dead_code)]

use std::path::{Path, PathBuf};

use ace_core::enrich::{EnrichedEndpoint, EnrichmentLevel, Provenance};
use ace_core::oas::{extract_endpoints, parse_document, resolve_refs, EndpointSpec, InputFormat};
use serde_json::Value;

pub const LIMIT_RANGE_DELETE: &str = "deleteCoreV1NamespacedLimitRange";
pub const GOLDEN_BASE_URL: &str = "http://xxxx:8080";

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/kubernetes").join(name)
}

pub fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn kubernetes_raw() -> Vec<u8> {
    std::fs::read(fixture_path("core_v1_openapi.json")).unwrap()
}

pub fn kubernetes_endpoints() -> Vec<EndpointSpec> {
    let doc = parse_document(&kubernetes_raw(), InputFormat::Auto).unwrap();
    let resolved = resolve_refs(&doc).strict().unwrap();
    extract_endpoints(&resolved).endpoints
}

pub fn endpoint(operation_id: &str) -> EndpointSpec {
    kubernetes_endpoints().into_iter().find(|e| e.operation_id == operation_id).unwrap()
}

/// The LimitRange DELETE endpoint carrying the reference enrichment texts,
/// truncated to `level`.
pub fn limit_range_enriched(level: EnrichmentLevel) -> EnrichedEndpoint {
    let texts: Value =
        serde_json::from_slice(&std::fs::read(fixture_path("limitrange_delete_enrichment.json")).unwrap()).unwrap();
    let mut e = EnrichedEndpoint::original(endpoint(LIMIT_RANGE_DELETE));
    e.level = level;
    let llm = Provenance::Llm("reference".into());
    if level >= EnrichmentLevel::E1 {
        e.tool_description = texts["tool_description"].as_str().unwrap().to_string();
        e.provenance.insert("tool_description".into(), llm.clone());
    }
    if level >= EnrichmentLevel::E2 {
        for (k, v) in texts["param_descriptions"].as_object().unwrap() {
            e.param_descriptions.insert(k.clone(), v.as_str().unwrap().to_string());
            e.provenance.insert(format!("param_descriptions.{k}"), llm.clone());
        }
    }
    if level >= EnrichmentLevel::E3 {
        for (k, v) in texts["param_examples"].as_object().unwrap() {
            e.param_examples.insert(k.clone(), v.clone());
            e.provenance.insert(format!("param_examples.{k}"), llm.clone());
        }
        e.body_example = Some(texts["body_example"].clone());
        e.provenance.insert("body_example".into(), llm);
    }
    e
}

pub mod gen;
pub mod oracle;
pub mod checks;
