#![allow(dead_code)]

use std::collections::HashSet;

use ace_core::agent::GoldCall;
use ace_core::oas::{EndpointSpec, HttpMethod, ParamLocation, ParamSpec, ResponseCode, SchemaKind, SchemaNode};
use indexmap::IndexMap;
use proptest::prelude::*;
use serde_json::{json, Value};

pub const WORDS: &[&str] = &[
    "pod", "namespace", "secret", "limit", "range", "quota", "widget", "shop", "order", "invoice", "account",
    "cadence", "person", "event", "service", "node", "volume", "claim", "template", "config", "map", "status",
];

const AWKWARD_NAMES: &[&str] = &["class", "json", "from", "X-Trace", "page-size", "requests", "lambda", "9lives"];

pub fn word() -> impl Strategy<Value = String> {
    prop::sample::select(WORDS).prop_map(str::to_string)
}

pub fn param_name() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => "[a-z][a-zA-Z0-9]{0,8}",
        1 => prop::sample::select(AWKWARD_NAMES).prop_map(str::to_string),
    ]
}

fn scalar_kind() -> impl Strategy<Value = SchemaKind> {
    prop::sample::select(vec![SchemaKind::String, SchemaKind::Integer, SchemaKind::Number, SchemaKind::Boolean])
}

fn literal_of(kind: SchemaKind) -> BoxedStrategy<Value> {
    match kind {
        SchemaKind::String => "[A-Za-z][A-Za-z0-9-]{0,7}".prop_map(Value::from).boxed(),
        SchemaKind::Integer => (-1000i64..1000).prop_map(Value::from).boxed(),
        SchemaKind::Number => (-1000i32..1000).prop_map(|n| json!(n as f64 / 4.0)).boxed(),
        SchemaKind::Boolean => any::<bool>().prop_map(Value::from).boxed(),
        _ => Just(Value::Null).boxed(),
    }
}

/// Well-formed scalar schemas, some with enums and formats.
pub fn scalar_schema() -> impl Strategy<Value = SchemaNode> {
    scalar_kind().prop_flat_map(|kind| {
        let members = prop::collection::vec(literal_of(kind), 1..5);
        let format = match kind {
            SchemaKind::String => prop::option::of(prop::sample::select(vec!["date-time", "email", "uuid", "byte"]))
                .boxed(),
            SchemaKind::Integer => prop::option::of(prop::sample::select(vec!["int32", "int64"])).boxed(),
            _ => Just(None).boxed(),
        };
        (prop::option::weighted(0.4, members), format).prop_map(move |(enum_values, format)| {
            let mut s = SchemaNode::of_kind(kind);
            s.enum_values = enum_values;
            s.format = format.map(str::to_string);
            s
        })
    })
}

/// Scalars, arrays and objects nested up to three levels.
pub fn schema() -> impl Strategy<Value = SchemaNode> {
    let leaf = prop_oneof![4 => scalar_schema(), 1 => Just(SchemaNode::untyped())];
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            inner.clone().prop_map(|items| {
                let mut s = SchemaNode::of_kind(SchemaKind::Array);
                s.items = Some(Box::new(items));
                s
            }),
            (prop::collection::vec((param_name(), inner, any::<bool>()), 0..4), any::<bool>()).prop_map(
                |(fields, undeclared_required)| {
                    let mut s = SchemaNode::of_kind(SchemaKind::Object);
                    for (name, sub, required) in fields {
                        if required && !s.required_fields.contains(&name) {
                            s.required_fields.push(name.clone());
                        }
                        s.properties.insert(name, sub);
                    }
                    if undeclared_required {
                        s.required_fields.push("extra".into());
                    }
                    s
                }
            ),
        ]
    })
}

fn location() -> impl Strategy<Value = ParamLocation> {
    prop::sample::select(vec![ParamLocation::Path, ParamLocation::Query, ParamLocation::Query, ParamLocation::Header])
}

fn method() -> impl Strategy<Value = HttpMethod> {
    prop::sample::select(vec![
        HttpMethod::Get,
        HttpMethod::Post,
        HttpMethod::Put,
        HttpMethod::Patch,
        HttpMethod::Delete,
        HttpMethod::Head,
        HttpMethod::Options,
    ])
}

/// Endpoints with unique parameter names, path placeholders matching the
/// path parameters, and an optional request body.
pub fn endpoint() -> impl Strategy<Value = EndpointSpec> {
    (
        method(),
        prop::collection::vec(word(), 1..4),
        prop::collection::vec((param_name(), location(), any::<bool>(), schema()), 0..7),
        prop::option::of(schema()),
        any::<bool>(),
        prop::option::of("[A-Za-z ]{0,30}"),
        "[a-z][a-zA-Z0-9]{2,12}",
    )
        .prop_map(|(method, words, raw_params, body, body_required, summary, op)| {
            let mut seen = HashSet::new();
            let mut parameters = Vec::new();
            let mut path = String::new();
            for w in &words {
                path.push('/');
                path.push_str(w);
            }
            for (name, location, required, schema) in raw_params {
                if !seen.insert(name.to_lowercase()) {
                    continue;
                }
                let (required, schema) = if location == ParamLocation::Path {
                    let scalar = if schema.kind == SchemaKind::Object || schema.kind == SchemaKind::Array {
                        SchemaNode::of_kind(SchemaKind::String)
                    } else {
                        schema
                    };
                    path.push_str(&format!("/{{{name}}}"));
                    (true, scalar)
                } else {
                    (required, schema)
                };
                parameters.push(ParamSpec { name, location, required, schema, description: None });
            }
            EndpointSpec {
                operation_id: op,
                method,
                path,
                summary_description: summary.filter(|s| !s.trim().is_empty()),
                parameters,
                request_body: body,
                request_body_required: body_required,
                request_content_type: None,
                response_codes: vec![ResponseCode { status: "200".into(), description: "OK".into() }],
                api_title: "Generated".into(),
                requires_auth: false,
            }
        })
}

/// A small typed tool catalog for metric tests: each tool has one string,
/// one integer and one boolean parameter.
pub fn metric_tool(i: usize) -> EndpointSpec {
    let p = |name: &str, kind| ParamSpec {
        name: name.into(),
        location: ParamLocation::Query,
        required: false,
        schema: SchemaNode::of_kind(kind),
        description: None,
    };
    EndpointSpec {
        operation_id: format!("tool{i:02}"),
        method: HttpMethod::Get,
        path: format!("/things{i}"),
        summary_description: Some(format!("tool number {i}")),
        parameters: vec![
            p("label", SchemaKind::String),
            p("count", SchemaKind::Integer),
            p("enabled", SchemaKind::Boolean),
        ],
        request_body: None,
        request_body_required: false,
        request_content_type: None,
        response_codes: vec![],
        api_title: "Metrics".into(),
        requires_auth: false,
    }
}

pub const METRIC_PARAMS: [&str; 3] = ["label", "count", "enabled"];

pub fn metric_value(name: &str, seed: u64) -> Value {
    match name {
        "label" => json!(format!("value-{seed}")),
        "count" => json!(seed as i64 % 97),
        _ => json!(seed.is_multiple_of(2)),
    }
}

/// Gold call `n` against `tools` metric tools, using every parameter.
pub fn metric_gold(n: usize, tools: usize) -> GoldCall {
    let arguments: IndexMap<String, Value> =
        METRIC_PARAMS.iter().map(|p| (p.to_string(), metric_value(p, n as u64))).collect();
    GoldCall {
        utterance_id: format!("u{n:03}"),
        utterance: format!("call tool {}", n % tools),
        tool: format!("tool{:02}", n % tools),
        arguments,
    }
}
