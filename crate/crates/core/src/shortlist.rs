//! Embedding-based tool shortlisting: exact top-k by cosine similarity.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::catalog::CatalogEntry;
use crate::chat::{Attempt, RetryPolicy};
use crate::enrich::EnrichmentLevel;
use crate::literal::fnv1a64;
use crate::toolgen::{python_literal, write_atomic};

pub const DIMS: usize = 1024;

#[derive(Debug, Error)]
pub enum ShortlistError {
    #[error("index was built with embedder `{index}` but the query uses `{query}`")]
    EmbedderMismatch { index: String, query: String },
    #[error("embedding failed: {0}")]
    Embedding(String),
    #[error("malformed index file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub trait Embedder: Send + Sync {
    /// Identifies the vector space; recorded in indexes.
    fn id(&self) -> String;

    /// L2-normalized embedding, or all zeros for text without tokens.
    fn embed(&self, text: &str) -> Result<Vec<f64>, ShortlistError>;
}

/// Lowercased runs of alphanumeric characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Term-frequency vector over FNV-1a 64 hash buckets.
pub fn embed_text(text: &str) -> Vec<f64> {
    let mut v = vec![0.0; DIMS];
    for token in tokenize(text) {
        v[(fnv1a64(token.as_bytes()) % DIMS as u64) as usize] += 1.0;
    }
    normalize(&mut v);
    v
}

#[derive(Clone, Copy, Debug, Default)]
pub struct HashingEmbedder;

impl Embedder for HashingEmbedder {
    fn id(&self) -> String {
        format!("fnv1a-tf-{DIMS}")
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, ShortlistError> {
        Ok(embed_text(text))
    }
}

/// Remote encoder: `POST {"text": ...}` answered by a float array, either
/// bare or under `embedding`.
pub struct HttpEmbedder {
    url: String,
    id: String,
    retry: RetryPolicy,
    agent: ureq::Agent,
}

impl HttpEmbedder {
    pub fn new(url: impl Into<String>, id: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .new_agent();
        Self { url: url.into(), id: id.into(), retry: RetryPolicy::default(), agent }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }
}

impl Embedder for HttpEmbedder {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, ShortlistError> {
        let payload: Value = self
            .retry
            .run(|| {
                let mut resp = self
                    .agent
                    .post(&self.url)
                    .send_json(json!({"text": text}))
                    .map_err(|e| Attempt::Retry(e.to_string()))?;
                let status = resp.status().as_u16();
                if status >= 400 {
                    return Err(Attempt::Retry(format!("HTTP {status}")));
                }
                resp.body_mut()
                    .read_json()
                    .map_err(|e| Attempt::Retry(e.to_string()))
            })
            .map_err(|e| ShortlistError::Embedding(e.to_string()))?;
        let array = payload.get("embedding").unwrap_or(&payload);
        let mut v: Vec<f64> = array
            .as_array()
            .and_then(|a| a.iter().map(Value::as_f64).collect())
            .ok_or_else(|| ShortlistError::Embedding("response is not a float array".into()))?;
        normalize(&mut v);
        Ok(v)
    }
}

/// Text embedded for a tool at `level`; each level appends to the previous.
pub fn index_text_for(entry: &CatalogEntry, level: EnrichmentLevel) -> String {
    let e = &entry.enriched;
    let mut parts = vec![entry.tool_id.clone()];
    parts.extend(e.base.summary_description.clone());
    if level >= EnrichmentLevel::E1 && e.level >= EnrichmentLevel::E1 {
        parts.push(e.tool_description.clone());
    }
    if level >= EnrichmentLevel::E2 {
        for (name, desc) in &e.param_descriptions {
            parts.push(format!("{name}: {desc}"));
        }
    }
    if level >= EnrichmentLevel::E3 {
        for (name, value) in &e.param_examples {
            parts.push(format!("{name} = {}", python_literal(value)));
        }
        if let Some(body) = &e.body_example {
            parts.push(format!("requestBody = {}", python_literal(body)));
        }
    }
    parts.join("\n")
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexEntry {
    pub tool_id: String,
    pub vector: Vec<f64>,
    pub indexed_text: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToolIndex {
    pub embedder_id: String,
    pub level: EnrichmentLevel,
    pub dims: usize,
    /// Sorted by tool id.
    pub entries: Vec<IndexEntry>,
}

pub fn build_index(
    catalog: &[CatalogEntry],
    level: EnrichmentLevel,
    embedder: &dyn Embedder,
) -> Result<ToolIndex, ShortlistError> {
    let mut entries: Vec<IndexEntry> = catalog
        .par_iter()
        .map(|c| {
            let text = index_text_for(c, level);
            Ok(IndexEntry {
                tool_id: c.tool_id.clone(),
                vector: embedder.embed(&text)?,
                indexed_text: text,
            })
        })
        .collect::<Result<_, ShortlistError>>()?;
    entries.sort_by(|a, b| a.tool_id.cmp(&b.tool_id));
    let dims = entries.first().map_or(DIMS, |e| e.vector.len());
    Ok(ToolIndex { embedder_id: embedder.id(), level, dims, entries })
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    embedder_id: String,
    level: EnrichmentLevel,
    dims: usize,
    entries: Vec<IndexFileEntry>,
}

#[derive(Serialize, Deserialize)]
struct IndexFileEntry {
    tool_id: String,
    indexed_text: String,
    /// Base64 of `dims` little-endian IEEE-754 binary32 values.
    vector: String,
}

impl ToolIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json(&self) -> String {
        let file = IndexFile {
            embedder_id: self.embedder_id.clone(),
            level: self.level,
            dims: self.dims,
            entries: self
                .entries
                .iter()
                .map(|e| {
                    let bytes: Vec<u8> = e.vector.iter().flat_map(|x| (*x as f32).to_le_bytes()).collect();
                    IndexFileEntry {
                        tool_id: e.tool_id.clone(),
                        indexed_text: e.indexed_text.clone(),
                        vector: BASE64.encode(bytes),
                    }
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("index serializes");
        s.push('\n');
        s
    }

    /// Parses an index file; vectors are widened to f64 and renormalized.
    pub fn from_json(text: &str) -> Result<Self, ShortlistError> {
        let file: IndexFile = serde_json::from_str(text).map_err(|e| ShortlistError::Format(e.to_string()))?;
        let mut entries = Vec::with_capacity(file.entries.len());
        for e in file.entries {
            let bytes = BASE64
                .decode(&e.vector)
                .map_err(|err| ShortlistError::Format(format!("{}: {err}", e.tool_id)))?;
            if bytes.len() != file.dims * 4 {
                return Err(ShortlistError::Format(format!(
                    "{}: expected {} bytes, found {}",
                    e.tool_id,
                    file.dims * 4,
                    bytes.len()
                )));
            }
            let mut vector: Vec<f64> = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect();
            normalize(&mut vector);
            entries.push(IndexEntry { tool_id: e.tool_id, vector, indexed_text: e.indexed_text });
        }
        entries.sort_by(|a, b| a.tool_id.cmp(&b.tool_id));
        Ok(Self { embedder_id: file.embedder_id, level: file.level, dims: file.dims, entries })
    }

    pub fn save(&self, path: &Path) -> Result<(), ShortlistError> {
        write_atomic(path, self.to_json().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ShortlistError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortlistResult {
    pub ranked: Vec<(String, f64)>,
    pub k: usize,
}

impl ShortlistResult {
    pub fn tool_ids(&self) -> Vec<&str> {
        self.ranked.iter().map(|(id, _)| id.as_str()).collect()
    }

    pub fn contains(&self, tool_id: &str) -> bool {
        self.ranked.iter().any(|(id, _)| id == tool_id)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |s, (x, y)| s + x * y)
}

/// Heap element ordered so the worst candidate sits on top.
struct Candidate<'a> {
    score: f64,
    tool_id: &'a str,
}

impl Candidate<'_> {
    /// Greater means ranked earlier: higher score, then smaller id.
    fn rank_cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.tool_id.cmp(self.tool_id))
    }
}

impl PartialEq for Candidate<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.rank_cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate<'_> {}

impl PartialOrd for Candidate<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank_cmp(other)
    }
}

fn check_embedder(index: &ToolIndex, embedder: &dyn Embedder) -> Result<(), ShortlistError> {
    let id = embedder.id();
    if id != index.embedder_id {
        return Err(ShortlistError::EmbedderMismatch { index: index.embedder_id.clone(), query: id });
    }
    Ok(())
}

/// Top-k for an already embedded query, using a bounded heap.
pub fn shortlist_vector(index: &ToolIndex, query: &[f64], k: usize) -> ShortlistResult {
    let mut heap: BinaryHeap<Reverse<Candidate>> = BinaryHeap::with_capacity(k + 1);
    for e in &index.entries {
        let c = Candidate { score: dot(query, &e.vector), tool_id: &e.tool_id };
        if heap.len() < k {
            heap.push(Reverse(c));
        } else if heap.peek().is_some_and(|Reverse(worst)| c > *worst) {
            heap.pop();
            heap.push(Reverse(c));
        }
    }
    let ranked = heap
        .into_sorted_vec()
        .into_iter()
        .map(|Reverse(c)| (c.tool_id.to_string(), c.score))
        .collect();
    ShortlistResult { ranked, k }
}

/// The `k` tools most similar to `query`; ties go to the smaller tool id.
pub fn shortlist(
    index: &ToolIndex,
    embedder: &dyn Embedder,
    query: &str,
    k: usize,
) -> Result<ShortlistResult, ShortlistError> {
    check_embedder(index, embedder)?;
    Ok(shortlist_vector(index, &embedder.embed(query)?, k))
}

/// Reference implementation: score everything, sort, truncate.
pub fn brute_force_topk(
    index: &ToolIndex,
    embedder: &dyn Embedder,
    query: &str,
    k: usize,
) -> Result<ShortlistResult, ShortlistError> {
    check_embedder(index, embedder)?;
    let q = embedder.embed(query)?;
    let mut all: Vec<(String, f64)> = index
        .entries
        .iter()
        .map(|e| {
            let mut s = 0.0;
            for (x, y) in q.iter().zip(&e.vector) {
                s += x * y;
            }
            (e.tool_id.clone(), s)
        })
        .collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    Ok(ShortlistResult { ranked: all, k })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn index_of(texts: &[(&str, &str)]) -> ToolIndex {
        let mut entries: Vec<IndexEntry> = texts
            .iter()
            .map(|(id, t)| IndexEntry { tool_id: id.to_string(), vector: embed_text(t), indexed_text: t.to_string() })
            .collect();
        entries.sort_by(|a, b| a.tool_id.cmp(&b.tool_id));
        ToolIndex { embedder_id: HashingEmbedder.id(), level: EnrichmentLevel::None, dims: DIMS, entries }
    }

    #[test]
    fn embedding_basics() {
        assert!(embed_text("").iter().all(|x| *x == 0.0));
        assert!(embed_text("--- !!").iter().all(|x| *x == 0.0));
        let v = embed_text("delete limit range");
        assert_eq!(v, embed_text("delete limit range"));
        assert!((dot(&v, &v) - 1.0).abs() < 1e-12);
        assert_eq!(embed_text("Delete-LIMIT range"), v);
    }

    #[test]
    fn term_frequency_weights() {
        let v = embed_text("pod pod node");
        let pod = (fnv1a64(b"pod") % DIMS as u64) as usize;
        let node = (fnv1a64(b"node") % DIMS as u64) as usize;
        assert!((v[pod] - 2.0 / 5f64.sqrt()).abs() < 1e-12);
        assert!((v[node] - 1.0 / 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ranking_and_ties() {
        let idx = index_of(&[("b", "list pods"), ("a", "list pods"), ("c", "delete node")]);
        let r = shortlist(&idx, &HashingEmbedder, "list pods", 2).unwrap();
        assert_eq!(r.tool_ids(), ["a", "b"]);
        let r = shortlist(&idx, &HashingEmbedder, "", 3).unwrap();
        assert_eq!(r.tool_ids(), ["a", "b", "c"]);
        assert!(r.ranked.iter().all(|(_, s)| *s == 0.0));
        let r = shortlist(&idx, &HashingEmbedder, "delete node", 10).unwrap();
        assert_eq!(r.ranked.len(), 3);
        assert_eq!(r.ranked[0].0, "c");
        assert!((r.ranked[0].1 - 1.0).abs() < 1e-12);
        assert_eq!(r, brute_force_topk(&idx, &HashingEmbedder, "delete node", 10).unwrap());
    }

    #[test]
    fn file_round_trip() {
        let idx = index_of(&[("a", "list pods"), ("b", "read node status")]);
        let text = idx.to_json();
        let back = ToolIndex::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        for (x, y) in idx.entries.iter().zip(&back.entries) {
            assert!(x.vector.iter().zip(&y.vector).all(|(a, b)| (a - b).abs() < 1e-6));
        }
        assert!(ToolIndex::from_json(&text.replace("\"dims\": 1024", "\"dims\": 3")).is_err());
    }

    struct Other;
    impl Embedder for Other {
        fn id(&self) -> String {
            "other".into()
        }
        fn embed(&self, t: &str) -> Result<Vec<f64>, ShortlistError> {
            Ok(embed_text(t))
        }
    }

    #[test]
    fn embedder_mismatch() {
        let idx = index_of(&[("a", "x")]);
        assert!(matches!(
            shortlist(&idx, &Other, "x", 1),
            Err(ShortlistError::EmbedderMismatch { .. })
        ));
    }
}
