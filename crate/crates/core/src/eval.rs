//! Scores transcripts against gold calls and renders report tables.
//!
//! S is the fraction of utterances whose transcript selected the gold tool.
//! T, M and I are computed only over those qualifying utterances:
//!
//! * M = gold parameters absent (or null) in the prediction / all gold parameters
//! * T = predicted non-null parameters whose literal kind does not fit the
//!   schema / all predicted non-null parameters
//! * I = predicted non-null parameters not in gold, or with a different
//!   value, excluding those already counted in T / all predicted non-null
//!   parameters
//!
//! Numbers compare by value (`1` equals `1.0`); text never equals a number.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::agent::{GoldCall, Transcript};
use crate::catalog::CatalogEntry;
use crate::enrich::REQUEST_BODY;
use crate::oas::SchemaNode;
use crate::shortlist::{shortlist, Embedder, ShortlistError, ToolIndex};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no transcript for utterance `{0}`")]
    MissingTranscript(String),
    #[error("more than one transcript for utterance `{0}`")]
    DuplicateTranscript(String),
    #[error("transcript for unknown utterance `{0}`")]
    UnknownUtterance(String),
    #[error("duplicate gold utterance `{0}`")]
    DuplicateGold(String),
    #[error("k values must be positive and ascending")]
    BadKs,
    #[error(transparent)]
    Shortlist(#[from] ShortlistError),
}

/// An exact count pair; the value of `x/0` is 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        Self { num, den }
    }

    pub fn value(self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            self.num as f64 / self.den as f64
        }
    }

    pub fn percent(self) -> f64 {
        self.value() * 100.0
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn index_transcripts<'a>(
    transcripts: &'a [Transcript],
    gold: &[GoldCall],
) -> Result<HashMap<&'a str, &'a Transcript>, EvalError> {
    let mut gold_ids = HashSet::new();
    for g in gold {
        if !gold_ids.insert(g.utterance_id.as_str()) {
            return Err(EvalError::DuplicateGold(g.utterance_id.clone()));
        }
    }
    let mut by_id = HashMap::new();
    for t in transcripts {
        if !gold_ids.contains(t.utterance_id.as_str()) {
            return Err(EvalError::UnknownUtterance(t.utterance_id.clone()));
        }
        if by_id.insert(t.utterance_id.as_str(), t).is_some() {
            return Err(EvalError::DuplicateTranscript(t.utterance_id.clone()));
        }
    }
    for g in gold {
        if !by_id.contains_key(g.utterance_id.as_str()) {
            return Err(EvalError::MissingTranscript(g.utterance_id.clone()));
        }
    }
    Ok(by_id)
}

fn selected_gold<'a>(t: &Transcript, g: &'a GoldCall) -> Option<&'a GoldCall> {
    (t.selected_tool.as_deref() == Some(g.tool.as_str())).then_some(g)
}

/// S as an exact count over the gold set.
pub fn score_selection(transcripts: &[Transcript], gold: &[GoldCall]) -> Result<Ratio, EvalError> {
    let by_id = index_transcripts(transcripts, gold)?;
    let hits = gold
        .iter()
        .filter(|g| selected_gold(by_id[g.utterance_id.as_str()], g).is_some())
        .count();
    Ok(Ratio::new(hits as u64, gold.len() as u64))
}

/// Parameter schemas of each catalog tool, `requestBody` included.
pub fn tool_schemas(catalog: &[CatalogEntry]) -> HashMap<String, HashMap<String, SchemaNode>> {
    catalog
        .iter()
        .map(|c| {
            let base = &c.enriched.base;
            let mut params: HashMap<String, SchemaNode> =
                base.parameters.iter().map(|p| (p.name.clone(), p.schema.clone())).collect();
            if let Some(body) = &base.request_body {
                params.insert(REQUEST_BODY.to_string(), body.clone());
            }
            (c.tool_id.clone(), params)
        })
        .collect()
}

/// Per-utterance breakdown for a qualifying transcript.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallDiagnostic {
    pub utterance_id: String,
    pub tool: String,
    pub type_mismatch: Vec<String>,
    pub missing: Vec<String>,
    pub incorrect: Vec<String>,
    pub gold_params: u64,
    pub predicted_params: u64,
    /// Set when the call was excluded from T/M/I.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded: Option<String>,
}

fn diagnose(t: &Transcript, g: &GoldCall, schemas: Option<&HashMap<String, SchemaNode>>) -> CallDiagnostic {
    let mut d = CallDiagnostic {
        utterance_id: g.utterance_id.clone(),
        tool: g.tool.clone(),
        ..Default::default()
    };
    let Some(schemas) = schemas else {
        d.excluded = Some(format!("tool `{}` is not in the catalog", g.tool));
        return d;
    };
    let gold_args: Vec<(&String, &Value)> = g.arguments.iter().filter(|(_, v)| !v.is_null()).collect();
    d.gold_params = gold_args.len() as u64;
    for (name, _) in &gold_args {
        if t.arguments.get(*name).is_none_or(Value::is_null) {
            d.missing.push((*name).clone());
        }
    }
    for (name, value) in t.arguments.iter().filter(|(_, v)| !v.is_null()) {
        d.predicted_params += 1;
        if schemas.get(name).is_some_and(|s| !s.kind.accepts(value)) {
            d.type_mismatch.push(name.clone());
            continue;
        }
        let matches_gold = g
            .arguments
            .get(name)
            .is_some_and(|gv| crate::literal::normalized_eq(gv, value));
        if !matches_gold {
            d.incorrect.push(name.clone());
        }
    }
    d
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricCounts {
    pub n_utterances: u64,
    pub n_qualifying: u64,
    pub n_excluded: u64,
    pub s: Ratio,
    pub t: Ratio,
    pub m: Ratio,
    pub i: Ratio,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label: String,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "I")]
    pub i: f64,
    pub counts: MetricCounts,
    /// Metrics whose denominator was zero (reported as 0).
    #[serde(default)]
    pub zero_denominators: Vec<String>,
    #[serde(default)]
    pub per_utterance: Vec<CallDiagnostic>,
}

/// T, M and I over the qualifying utterances, as exact counts.
pub fn score_inputs(
    transcripts: &[Transcript],
    gold: &[GoldCall],
    catalog: &[CatalogEntry],
) -> Result<(MetricCounts, Vec<CallDiagnostic>), EvalError> {
    let by_id = index_transcripts(transcripts, gold)?;
    let schemas = tool_schemas(catalog);
    let mut counts = MetricCounts { n_utterances: gold.len() as u64, ..Default::default() };
    let mut diagnostics = Vec::new();
    for g in gold {
        let t = by_id[g.utterance_id.as_str()];
        if selected_gold(t, g).is_none() {
            continue;
        }
        counts.n_qualifying += 1;
        let d = diagnose(t, g, schemas.get(&g.tool));
        if d.excluded.is_some() {
            counts.n_excluded += 1;
        } else {
            counts.m.num += d.missing.len() as u64;
            counts.m.den += d.gold_params;
            counts.t.num += d.type_mismatch.len() as u64;
            counts.t.den += d.predicted_params;
            counts.i.num += d.incorrect.len() as u64;
            counts.i.den += d.predicted_params;
        }
        diagnostics.push(d);
    }
    counts.s = Ratio::new(counts.n_qualifying, counts.n_utterances);
    Ok((counts, diagnostics))
}

/// S, T, M and I for one run.
pub fn evaluate(
    label: impl Into<String>,
    transcripts: &[Transcript],
    gold: &[GoldCall],
    catalog: &[CatalogEntry],
) -> Result<MetricsReport, EvalError> {
    let (counts, per_utterance) = score_inputs(transcripts, gold, catalog)?;
    let zero_denominators = [("S", counts.s), ("T", counts.t), ("M", counts.m), ("I", counts.i)]
        .iter()
        .filter(|(_, r)| r.den == 0)
        .map(|(n, _)| n.to_string())
        .collect();
    Ok(MetricsReport {
        label: label.into(),
        s: counts.s.value(),
        t: counts.t.value(),
        m: counts.m.value(),
        i: counts.i.value(),
        counts,
        zero_denominators,
        per_utterance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortlistReport {
    pub label: String,
    pub ks: Vec<usize>,
    pub per_k: BTreeMap<usize, Ratio>,
}

impl ShortlistReport {
    pub fn accuracy(&self, k: usize) -> f64 {
        self.per_k.get(&k).map_or(0.0, |r| r.value())
    }

    pub fn is_monotone(&self) -> bool {
        self.ks
            .windows(2)
            .all(|w| self.per_k[&w[0]].num <= self.per_k[&w[1]].num)
    }
}

/// For each k, the fraction of utterances whose gold tool is in the top-k.
pub fn shortlist_accuracy(
    label: impl Into<String>,
    gold: &[GoldCall],
    index: &ToolIndex,
    embedder: &dyn Embedder,
    ks: &[usize],
) -> Result<ShortlistReport, EvalError> {
    if ks.is_empty() || ks[0] == 0 || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::BadKs);
    }
    let mut per_k: BTreeMap<usize, Ratio> = ks.iter().map(|&k| (k, Ratio::new(0, gold.len() as u64))).collect();
    for g in gold {
        for &k in ks {
            if shortlist(index, embedder, &g.utterance, k)?.contains(&g.tool) {
                per_k.get_mut(&k).expect("k present").num += 1;
            }
        }
    }
    let report = ShortlistReport { label: label.into(), ks: ks.to_vec(), per_k };
    debug_assert!(report.is_monotone());
    Ok(report)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportSet {
    #[serde(default)]
    pub metrics: Vec<MetricsReport>,
    #[serde(default)]
    pub shortlists: Vec<ShortlistReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" | "text-table" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

fn shortlist_ks(set: &ReportSet) -> Vec<usize> {
    let mut ks: Vec<usize> = set.shortlists.iter().flat_map(|r| r.ks.iter().copied()).collect();
    ks.sort_unstable();
    ks.dedup();
    ks
}

fn text_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| if i == 0 { format!("{c:<w$}", w = widths[0]) } else { format!("{c:>w$}", w = widths[i]) })
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

/// Renders reports deterministically. The text form has one row per run:
/// `S% T% M% I%` for metrics and `Top k` columns for shortlists, one
/// decimal place.
pub fn render_report(set: &ReportSet, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(set).expect("reports serialize");
            s.push('\n');
            s
        }
        ReportFormat::Text => {
            let header: Vec<String> = ["Variant", "S%", "T%", "M%", "I%"].map(String::from).to_vec();
            let rows: Vec<Vec<String>> = set
                .metrics
                .iter()
                .map(|r| {
                    let c = &r.counts;
                    vec![
                        r.label.clone(),
                        format!("{:.1}", c.s.percent()),
                        format!("{:.1}", c.t.percent()),
                        format!("{:.1}", c.m.percent()),
                        format!("{:.1}", c.i.percent()),
                    ]
                })
                .collect();
            let mut out = String::new();
            if !set.metrics.is_empty() || set.shortlists.is_empty() {
                out.push_str(&text_table(&header, &rows));
            }
            if !set.shortlists.is_empty() {
                if !out.is_empty() {
                    out.push('\n');
                }
                let ks = shortlist_ks(set);
                let mut header = vec!["Variant".to_string()];
                header.extend(ks.iter().map(|k| format!("Top {k}")));
                let rows: Vec<Vec<String>> = set
                    .shortlists
                    .iter()
                    .map(|r| {
                        let mut row = vec![r.label.clone()];
                        row.extend(ks.iter().map(|k| match r.per_k.get(k) {
                            Some(ratio) => format!("{:.1}", ratio.percent()),
                            None => "-".into(),
                        }));
                        row
                    })
                    .collect();
                out.push_str(&text_table(&header, &rows));
            }
            out
        }
        ReportFormat::Csv => {
            let mut out = String::from("table,label,column,value,numerator,denominator\n");
            for r in &set.metrics {
                let c = &r.counts;
                for (name, ratio) in [("S", c.s), ("T", c.t), ("M", c.m), ("I", c.i)] {
                    out.push_str(&format!(
                        "metrics,{},{name},{:.6},{},{}\n",
                        csv_field(&r.label),
                        ratio.value(),
                        ratio.num,
                        ratio.den
                    ));
                }
            }
            for r in &set.shortlists {
                for (k, ratio) in &r.per_k {
                    out.push_str(&format!(
                        "shortlist,{},top{k},{:.6},{},{}\n",
                        csv_field(&r.label),
                        ratio.value(),
                        ratio.num,
                        ratio.den
                    ));
                }
            }
            out
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A CI threshold such as `S>=0.9`, `I<=0.1` or `top3>=0.8`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub metric: String,
    pub at_least: bool,
    pub threshold: f64,
}

impl FromStr for Gate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (metric, at_least, rest) = if let Some((m, r)) = s.split_once(">=") {
            (m, true, r)
        } else if let Some((m, r)) = s.split_once("<=") {
            (m, false, r)
        } else {
            return Err(format!("gate `{s}` needs `>=` or `<=`"));
        };
        let metric = metric.trim().to_string();
        let valid = matches!(metric.as_str(), "S" | "T" | "M" | "I")
            || metric.strip_prefix("top").is_some_and(|k| k.parse::<usize>().is_ok());
        if !valid {
            return Err(format!("unknown gate metric `{metric}`"));
        }
        let threshold = rest.trim().parse().map_err(|_| format!("bad threshold in `{s}`"))?;
        Ok(Gate { metric, at_least, threshold })
    }
}

/// Human-readable descriptions of every violated gate.
pub fn check_gates(set: &ReportSet, gates: &[Gate]) -> Vec<String> {
    let mut violations = Vec::new();
    let mut check = |label: &str, gate: &Gate, value: f64| {
        let ok = if gate.at_least { value >= gate.threshold } else { value <= gate.threshold };
        if !ok {
            let op = if gate.at_least { ">=" } else { "<=" };
            violations.push(format!("{label}: {} = {value:.4} violates {op} {}", gate.metric, gate.threshold));
        }
    };
    for gate in gates {
        for r in &set.metrics {
            let value = match gate.metric.as_str() {
                "S" => r.s,
                "T" => r.t,
                "M" => r.m,
                "I" => r.i,
                _ => continue,
            };
            check(&r.label, gate, value);
        }
        if let Some(k) = gate.metric.strip_prefix("top").and_then(|k| k.parse::<usize>().ok()) {
            for r in set.shortlists.iter().filter(|r| r.per_k.contains_key(&k)) {
                check(&r.label, gate, r.accuracy(k));
            }
        }
    }
    violations
}
