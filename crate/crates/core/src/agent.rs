//! ReAct-style episodes against a tool set, plus scripted agents that
//! produce transcripts without a model.

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::catalog::CatalogEntry;
use crate::chat::{ChatClient, ChatMessage};
use crate::literal::literal_text;
use crate::toolgen::render_docstring;

pub type Arguments = IndexMap<String, Value>;

/// Reference (tool, arguments) pair for an utterance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldCall {
    pub utterance_id: String,
    pub utterance: String,
    pub tool: String,
    #[serde(default)]
    pub arguments: Arguments,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Step {
    Thought { text: String },
    Action { tool: String, arguments: Arguments },
    Observation { text: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Completed,
    NoToolSelected,
    StepLimit,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub utterance_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_tool: Option<String>,
    #[serde(default)]
    pub arguments: Arguments,
    #[serde(default)]
    pub steps: Vec<Step>,
    pub terminal: Terminal,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("unparseable action: {0}")]
pub struct UnparseableAction(pub String);

/// One parsed model reply.
#[derive(Clone, Debug, PartialEq)]
pub enum Reply {
    Action { thought: Option<String>, tool: String, arguments: Arguments },
    Final { thought: Option<String>, answer: String },
}

fn is_tool_id(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn thought_before(text: &str, end: usize) -> Option<String> {
    let t = text[..end].trim();
    let t = t.strip_prefix("Thought:").unwrap_or(t).trim();
    (!t.is_empty()).then(|| t.to_string())
}

/// Byte offset of the first line (after leading whitespace) starting with `marker`.
fn find_line(text: &str, marker: &str) -> Option<(usize, usize)> {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let indent = line.len() - line.trim_start().len();
        if line[indent..].starts_with(marker) {
            return Some((offset, offset + indent + marker.len()));
        }
        offset += line.len();
    }
    None
}

fn parse_input(raw: &str) -> Result<Arguments, UnparseableAction> {
    let mut s = raw.trim_start();
    if let Some(rest) = s.strip_prefix("```") {
        let newline = rest.find('\n').ok_or_else(|| UnparseableAction("unterminated fence".into()))?;
        let lang = rest[..newline].trim();
        if !lang.is_empty() && lang != "json" {
            return Err(UnparseableAction(format!("unexpected fence language `{lang}`")));
        }
        let body = &rest[newline + 1..];
        let close = body.find("```").ok_or_else(|| UnparseableAction("unterminated fence".into()))?;
        s = &body[..close];
    }
    let mut stream = serde_json::Deserializer::from_str(s).into_iter::<Value>();
    match stream.next() {
        Some(Ok(Value::Object(map))) => Ok(map.into_iter().collect()),
        Some(Ok(other)) => Err(UnparseableAction(format!("action input is not an object: {other}"))),
        Some(Err(e)) => Err(UnparseableAction(format!("action input is not JSON: {e}"))),
        None => Err(UnparseableAction("missing action input".into())),
    }
}

/// Parses a reply in the action grammar:
///
/// ```text
/// Thought: <optional free text>
/// Action: <tool_id>
/// Action Input: {"json": "object"}        (optionally inside a ```json fence)
/// ```
///
/// or `Final Answer: <text>`. An action takes precedence over a final answer.
pub fn parse_reply(text: &str) -> Result<Reply, UnparseableAction> {
    if let Some((start, after)) = find_line(text, "Action:") {
        let line_end = text[after..].find('\n').map_or(text.len(), |i| after + i);
        let tool = text[after..line_end].trim();
        if !is_tool_id(tool) {
            return Err(UnparseableAction(format!("invalid tool id `{tool}`")));
        }
        let rest = &text[line_end..];
        let (_, input_at) = find_line(rest, "Action Input:")
            .ok_or_else(|| UnparseableAction("missing `Action Input:`".into()))?;
        let arguments = parse_input(&rest[input_at..])?;
        return Ok(Reply::Action {
            thought: thought_before(text, start),
            tool: tool.to_string(),
            arguments,
        });
    }
    if let Some((start, after)) = find_line(text, "Final Answer:") {
        return Ok(Reply::Final {
            thought: thought_before(text, start),
            answer: text[after..].trim().to_string(),
        });
    }
    Err(UnparseableAction("no `Action:` or `Final Answer:` line".into()))
}

/// Renders a reply in the action grammar (the inverse of [`parse_reply`]).
pub fn format_action(tool: &str, arguments: &Arguments) -> String {
    format!(
        "Action: {tool}\nAction Input: {}",
        serde_json::to_string(arguments).expect("arguments serialize")
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_steps: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_steps: 6 }
    }
}

/// Canned result of every stubbed tool invocation.
pub const STUB_OBSERVATION: &str = r#"{"status_code": 200, "response": {"status": "Success"}}"#;

pub fn system_prompt(tools: &[CatalogEntry]) -> String {
    let mut out = String::from(
        "Answer the user's request by calling one of the tools below.\n\nTools:\n",
    );
    for t in tools {
        out.push_str(&format!(
            "\n{}\n{}",
            t.tool_id,
            render_docstring(&t.plan, t.plan.level)
        ));
    }
    out.push_str(
        "\nReply in this format:\nThought: <reasoning>\nAction: <tool name>\nAction Input: <JSON object of arguments>\n\n\
         After the observation, reply with `Final Answer: <answer>`.\n",
    );
    out
}

/// Runs one episode; tool calls go to a stub executor that records them.
pub fn run_episode(
    utterance_id: &str,
    utterance: &str,
    tools: &[CatalogEntry],
    client: &dyn ChatClient,
    limits: Limits,
) -> Transcript {
    let mut messages = vec![ChatMessage::system(system_prompt(tools)), ChatMessage::user(utterance)];
    let mut steps = Vec::new();
    let mut last_call: Option<(String, Arguments)> = None;
    let finish = |steps, terminal, call: Option<(String, Arguments)>| {
        let (selected_tool, arguments) = match (terminal, call) {
            (Terminal::Completed, Some((tool, args))) => (Some(tool), args),
            _ => (None, Arguments::new()),
        };
        Transcript { utterance_id: utterance_id.to_string(), selected_tool, arguments, steps, terminal }
    };

    for _ in 0..limits.max_steps.max(1) {
        let reply = match client.complete(&messages, 0.0) {
            Ok(r) => r,
            Err(e) => {
                steps.push(Step::Observation { text: format!("Error: {e}") });
                return finish(steps, Terminal::Error, None);
            }
        };
        messages.push(ChatMessage::assistant(reply.clone()));
        let observation = match parse_reply(&reply) {
            Ok(Reply::Final { thought, .. }) => {
                steps.extend(thought.map(|text| Step::Thought { text }));
                let terminal = if last_call.is_some() { Terminal::Completed } else { Terminal::NoToolSelected };
                return finish(steps, terminal, last_call);
            }
            Ok(Reply::Action { thought, tool, arguments }) => {
                steps.extend(thought.map(|text| Step::Thought { text }));
                if tools.iter().any(|t| t.tool_id == tool) {
                    steps.push(Step::Action { tool: tool.clone(), arguments: arguments.clone() });
                    last_call = Some((tool, arguments));
                    STUB_OBSERVATION.to_string()
                } else {
                    format!("Error: unknown tool `{tool}`")
                }
            }
            Err(e) => format!("Error: {e}"),
        };
        steps.push(Step::Observation { text: observation.clone() });
        messages.push(ChatMessage::user(format!("Observation: {observation}")));
    }
    finish(steps, Terminal::StepLimit, None)
}

/// Runs episodes on `workers` threads; output order follows `gold`.
pub fn run_episodes(
    gold: &[GoldCall],
    tools: &[CatalogEntry],
    client: &dyn ChatClient,
    limits: Limits,
    workers: usize,
) -> Vec<Transcript> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        gold.par_iter()
            .map(|g| run_episode(&g.utterance_id, &g.utterance, tools, client, limits))
            .collect()
    })
}

/// Emits the gold call verbatim.
pub fn oracle_agent(gold: &GoldCall) -> Transcript {
    Transcript {
        utterance_id: gold.utterance_id.clone(),
        selected_tool: Some(gold.tool.clone()),
        arguments: gold.arguments.clone(),
        steps: vec![
            Step::Action { tool: gold.tool.clone(), arguments: gold.arguments.clone() },
            Step::Observation { text: STUB_OBSERVATION.into() },
        ],
        terminal: Terminal::Completed,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Corruption {
    WrongTool,
    DropParam { name: String },
    StringifyParam { name: String },
    AddParam { name: String, value: Value },
    WrongValue { name: String, value: Value },
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CorruptionError {
    #[error("corruption names parameter `{0}` which the gold call does not have")]
    UnknownParam(String),
    #[error("parameter `{0}` already exists in the gold call")]
    ParamExists(String),
}

/// Applies `corruptions` in order to the gold call. `wrong_tool` picks a
/// different tool from `tool_pool` with a ChaCha RNG seeded by `seed`
/// (or suffixes the gold tool when the pool has no alternative).
pub fn corrupting_agent(
    gold: &GoldCall,
    corruptions: &[Corruption],
    seed: u64,
    tool_pool: &[String],
) -> Result<Transcript, CorruptionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tool = gold.tool.clone();
    let mut args = gold.arguments.clone();
    let present = |args: &Arguments, name: &str| {
        if args.contains_key(name) {
            Ok(())
        } else {
            Err(CorruptionError::UnknownParam(name.to_string()))
        }
    };
    for c in corruptions {
        match c {
            Corruption::WrongTool => {
                let others: Vec<&String> = tool_pool.iter().filter(|t| **t != gold.tool).collect();
                tool = match others.choose(&mut rng) {
                    Some(t) => (*t).clone(),
                    None => format!("{}__wrong", gold.tool),
                };
            }
            Corruption::DropParam { name } => {
                present(&args, name)?;
                args.shift_remove(name);
            }
            Corruption::StringifyParam { name } => {
                present(&args, name)?;
                let text = literal_text(&args[name]);
                args.insert(name.clone(), Value::String(text));
            }
            Corruption::AddParam { name, value } => {
                if args.contains_key(name) {
                    return Err(CorruptionError::ParamExists(name.clone()));
                }
                args.insert(name.clone(), value.clone());
            }
            Corruption::WrongValue { name, value } => {
                present(&args, name)?;
                args.insert(name.clone(), value.clone());
            }
        }
    }
    Ok(Transcript {
        utterance_id: gold.utterance_id.clone(),
        selected_tool: Some(tool.clone()),
        steps: vec![
            Step::Action { tool, arguments: args.clone() },
            Step::Observation { text: STUB_OBSERVATION.into() },
        ],
        arguments: args,
        terminal: Terminal::Completed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::build_catalog;
    use crate::chat::ScriptedChat;
    use crate::enrich::{enrich_endpoint, EnrichmentLevel, HeuristicEnricher};
    use crate::toolgen::tests::endpoint;
    use serde_json::json;

    fn tools() -> Vec<CatalogEntry> {
        let e = enrich_endpoint(&endpoint(), EnrichmentLevel::E2, &HeuristicEnricher).unwrap().endpoint;
        build_catalog(&[e]).0
    }

    fn gold() -> GoldCall {
        GoldCall {
            utterance_id: "u1".into(),
            utterance: "make a widget".into(),
            tool: "createWidget".into(),
            arguments: [("shop_id".to_string(), json!(3)), ("gracePeriodSeconds".to_string(), json!(0))]
                .into_iter()
                .collect(),
        }
    }

    #[test]
    fn parses_plain_and_fenced_actions() {
        let r = parse_reply("Thought: need it\nAction: createWidget\nAction Input: {\"a\": 1}").unwrap();
        assert_eq!(
            r,
            Reply::Action {
                thought: Some("need it".into()),
                tool: "createWidget".into(),
                arguments: [("a".to_string(), json!(1))].into_iter().collect()
            }
        );
        let fenced = "Action: t\nAction Input:\n```json\n{\"b\": [true]}\n```\nObservation: x";
        assert!(matches!(parse_reply(fenced).unwrap(), Reply::Action { .. }));
        assert!(matches!(parse_reply("Final Answer: ok").unwrap(), Reply::Final { .. }));
    }

    #[test]
    fn rejects_malformed_actions() {
        for bad in [
            "",
            "hello",
            "Action: two words\nAction Input: {}",
            "Action: t",
            "Action: t\nAction Input: [1]",
            "Action: t\nAction Input: {oops",
            "Action: t\nAction Input: ```python\n{}\n```",
        ] {
            assert!(parse_reply(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn format_round_trips() {
        let args = gold().arguments;
        match parse_reply(&format_action("createWidget", &args)).unwrap() {
            Reply::Action { tool, arguments, .. } => {
                assert_eq!(tool, "createWidget");
                assert_eq!(arguments, args);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scripted_single_action_completes() {
        let chat = ScriptedChat::new([format_action("createWidget", &gold().arguments)]);
        let t = run_episode("u1", "make a widget", &tools(), &chat, Limits::default());
        assert_eq!(t.terminal, Terminal::Completed);
        assert_eq!(t.selected_tool.as_deref(), Some("createWidget"));
        assert_eq!(t.arguments, gold().arguments);
    }

    #[test]
    fn garbage_hits_step_limit() {
        let chat = ScriptedChat::new(vec!["blah"; 10]);
        let t = run_episode("u1", "x", &tools(), &chat, Limits { max_steps: 3 });
        assert_eq!(t.terminal, Terminal::StepLimit);
        assert_eq!(t.selected_tool, None);
        assert_eq!(t.steps.len(), 3);
    }

    #[test]
    fn unknown_tool_and_no_tool() {
        let chat = ScriptedChat::new(["Action: nope\nAction Input: {}"]);
        let t = run_episode("u1", "x", &tools(), &chat, Limits::default());
        assert_eq!(t.terminal, Terminal::NoToolSelected);
        assert!(t.steps.iter().any(|s| matches!(s, Step::Observation { text } if text.contains("unknown tool"))));
    }

    #[test]
    fn oracle_and_corruptions() {
        let g = gold();
        let o = oracle_agent(&g);
        assert_eq!((o.selected_tool.as_deref(), &o.arguments), (Some("createWidget"), &g.arguments));

        let t = corrupting_agent(&g, &[Corruption::DropParam { name: "shop_id".into() }], 0, &[]).unwrap();
        assert!(!t.arguments.contains_key("shop_id"));
        let t = corrupting_agent(&g, &[Corruption::StringifyParam { name: "gracePeriodSeconds".into() }], 0, &[])
            .unwrap();
        assert_eq!(t.arguments["gracePeriodSeconds"], json!("0"));
        assert_eq!(
            corrupting_agent(&g, &[Corruption::DropParam { name: "zzz".into() }], 0, &[]),
            Err(CorruptionError::UnknownParam("zzz".into()))
        );
        let pool: Vec<String> = ["a", "b", "createWidget", "c"].map(String::from).to_vec();
        let w1 = corrupting_agent(&g, &[Corruption::WrongTool], 7, &pool).unwrap();
        let w2 = corrupting_agent(&g, &[Corruption::WrongTool], 7, &pool).unwrap();
        assert_eq!(w1, w2);
        assert_ne!(w1.selected_tool.as_deref(), Some("createWidget"));
    }

    #[test]
    fn transcript_json_round_trip() {
        let t = corrupting_agent(&gold(), &[Corruption::StringifyParam { name: "shop_id".into() }], 1, &[]).unwrap();
        let line = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<Transcript>(&line).unwrap(), t);
    }
}
