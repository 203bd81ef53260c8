//! The tool catalog: one canonical JSON line per tool, sorted by id.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::enrich::{EnrichedEndpoint, EnrichmentLevel};
use crate::literal::{canonical_json, fnv1a64};
use crate::toolgen::{plan_tool, write_atomic, ToolPlan};

pub const CATALOG_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct CorruptEntry {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("corrupt catalog entry at {0}")]
    Corrupt(#[from] CorruptEntry),
    #[error("duplicate tool id `{0}`")]
    DuplicateToolId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub tool_id: String,
    pub level: EnrichmentLevel,
    pub plan: ToolPlan,
    pub enriched: EnrichedEndpoint,
    /// FNV-1a 64 of the canonical entry without this field, as 16 hex digits.
    pub content_hash: String,
}

#[derive(Serialize)]
struct Hashed<'a> {
    tool_id: &'a str,
    level: EnrichmentLevel,
    plan: &'a ToolPlan,
    enriched: &'a EnrichedEndpoint,
}

#[derive(Serialize, Deserialize)]
struct Line {
    ace_catalog_version: u64,
    #[serde(flatten)]
    entry: CatalogEntry,
}

impl CatalogEntry {
    pub fn new(enriched: EnrichedEndpoint, plan: ToolPlan) -> Self {
        let mut entry = Self {
            tool_id: plan.function_name.clone(),
            level: enriched.level,
            plan,
            enriched,
            content_hash: String::new(),
        };
        entry.content_hash = entry.compute_hash();
        entry
    }

    pub fn compute_hash(&self) -> String {
        let canonical = canonical_json(&Hashed {
            tool_id: &self.tool_id,
            level: self.level,
            plan: &self.plan,
            enriched: &self.enriched,
        })
        .expect("entry serializes");
        format!("{:016x}", fnv1a64(canonical.as_bytes()))
    }

    pub fn to_line(&self) -> String {
        canonical_json(&Line {
            ace_catalog_version: CATALOG_VERSION,
            entry: self.clone(),
        })
        .expect("entry serializes")
    }
}

/// Plans every endpoint and wraps it as a catalog entry.
pub fn build_catalog(enriched: &[EnrichedEndpoint]) -> (Vec<CatalogEntry>, Vec<String>) {
    let mut warnings = Vec::new();
    let entries = enriched
        .iter()
        .map(|e| {
            let (plan, w) = plan_tool(e);
            warnings.extend(w);
            CatalogEntry::new(e.clone(), plan)
        })
        .collect();
    (entries, warnings)
}

/// Serializes entries sorted by tool id, one per line.
pub fn render_catalog(entries: &[CatalogEntry]) -> Result<String, CatalogError> {
    let mut sorted: Vec<&CatalogEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.tool_id.cmp(&b.tool_id));
    let mut out = String::new();
    for pair in sorted.windows(2) {
        if pair[0].tool_id == pair[1].tool_id {
            return Err(CatalogError::DuplicateToolId(pair[0].tool_id.clone()));
        }
    }
    for e in sorted {
        out.push_str(&e.to_line());
        out.push('\n');
    }
    Ok(out)
}

pub fn save_catalog(entries: &[CatalogEntry], path: &Path) -> Result<(), CatalogError> {
    let text = render_catalog(entries)?;
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn parse_line(line: &str) -> Result<CatalogEntry, String> {
    let raw: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    match raw.get("ace_catalog_version").and_then(Value::as_u64) {
        Some(CATALOG_VERSION) => {}
        Some(v) => return Err(format!("unsupported catalog version {v}")),
        None => return Err("missing ace_catalog_version".into()),
    }
    let parsed: Line = serde_json::from_value(raw).map_err(|e| format!("invalid entry: {e}"))?;
    let entry = parsed.entry;
    let expected = entry.compute_hash();
    if entry.content_hash != expected {
        return Err(format!(
            "content hash mismatch (stored {}, computed {expected})",
            entry.content_hash
        ));
    }
    if entry.tool_id != entry.plan.function_name {
        return Err("tool_id does not match the plan's function name".into());
    }
    Ok(entry)
}

/// Parses catalog text. Strict mode fails on the first bad line; lenient
/// mode skips bad lines and reports them.
pub fn parse_catalog(
    text: &str,
    lenient: bool,
) -> Result<(Vec<CatalogEntry>, Vec<CorruptEntry>), CatalogError> {
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let result = parse_line(line).and_then(|e| {
            if seen.insert(e.tool_id.clone()) {
                Ok(e)
            } else {
                Err(format!("duplicate tool id `{}`", e.tool_id))
            }
        });
        match result {
            Ok(e) => entries.push(e),
            Err(reason) => {
                let corrupt = CorruptEntry { line: i + 1, reason };
                if !lenient {
                    return Err(corrupt.into());
                }
                log::warn!("skipping corrupt catalog entry: {corrupt}");
                skipped.push(corrupt);
            }
        }
    }
    Ok((entries, skipped))
}

pub fn load_catalog(path: &Path) -> Result<Vec<CatalogEntry>, CatalogError> {
    Ok(parse_catalog(&fs::read_to_string(path)?, false)?.0)
}

pub fn load_catalog_lenient(path: &Path) -> Result<(Vec<CatalogEntry>, Vec<CorruptEntry>), CatalogError> {
    parse_catalog(&fs::read_to_string(path)?, true)
}
