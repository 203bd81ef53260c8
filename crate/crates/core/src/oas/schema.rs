use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ValidationIssue;
use crate::literal::normalized_eq;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaKind {
    String,
    Integer,
    Number,
    Boolean,
    Object,
    Array,
    Untyped,
}

impl SchemaKind {
    fn from_type_name(name: &str) -> Option<Self> {
        Some(match name {
            "string" => SchemaKind::String,
            "integer" => SchemaKind::Integer,
            "number" => SchemaKind::Number,
            "boolean" => SchemaKind::Boolean,
            "object" => SchemaKind::Object,
            "array" => SchemaKind::Array,
            _ => return None,
        })
    }

    fn of_literal(value: &Value) -> Self {
        match value {
            Value::String(_) => SchemaKind::String,
            Value::Number(n) if n.is_i64() || n.is_u64() => SchemaKind::Integer,
            Value::Number(_) => SchemaKind::Number,
            Value::Bool(_) => SchemaKind::Boolean,
            Value::Object(_) => SchemaKind::Object,
            Value::Array(_) => SchemaKind::Array,
            Value::Null => SchemaKind::Untyped,
        }
    }

    /// Top-level kind check of a literal; integers must be integral JSON
    /// numbers, `number` accepts any number, `untyped` accepts anything.
    pub fn accepts(self, value: &Value) -> bool {
        match self {
            SchemaKind::String => value.is_string(),
            SchemaKind::Integer => value.is_i64() || value.is_u64(),
            SchemaKind::Number => value.is_number(),
            SchemaKind::Boolean => value.is_boolean(),
            SchemaKind::Object => value.is_object(),
            SchemaKind::Array => value.is_array(),
            SchemaKind::Untyped => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SchemaKind::String => "string",
            SchemaKind::Integer => "integer",
            SchemaKind::Number => "number",
            SchemaKind::Boolean => "boolean",
            SchemaKind::Object => "object",
            SchemaKind::Array => "array",
            SchemaKind::Untyped => "untyped",
        }
    }
}

/// Normalized JSON-schema node, after `$ref` resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemaNode {
    pub kind: SchemaKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enum_values: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub required_fields: Vec<String>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub properties: IndexMap<String, SchemaNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<Box<SchemaNode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<Value>,
}

impl SchemaNode {
    pub fn of_kind(kind: SchemaKind) -> Self {
        Self {
            kind,
            description: None,
            enum_values: None,
            format: None,
            required_fields: Vec::new(),
            properties: IndexMap::new(),
            items: None,
            example: None,
        }
    }

    pub fn untyped() -> Self {
        Self::of_kind(SchemaKind::Untyped)
    }

    /// Converts a resolved JSON-schema object. Unknown keywords are ignored;
    /// a remaining `$ref` yields an untyped node.
    pub fn from_value(value: &Value) -> Self {
        let Some(obj) = value.as_object() else {
            return Self::untyped();
        };
        if obj.contains_key("$ref") {
            return Self::untyped();
        }

        if let Some(all) = obj.get("allOf").and_then(Value::as_array) {
            let mut merged = Self::merge_all_of(all);
            if merged.description.is_none() {
                merged.description = obj
                    .get("description")
                    .and_then(Value::as_str)
                    .map(str::to_string);
            }
            return merged;
        }

        let declared = match obj.get("type") {
            Some(Value::String(t)) => SchemaKind::from_type_name(t),
            Some(Value::Array(ts)) => ts
                .iter()
                .filter_map(Value::as_str)
                .filter(|t| *t != "null")
                .find_map(SchemaKind::from_type_name),
            _ => None,
        };

        let enum_values = obj.get("enum").and_then(Value::as_array).cloned();

        let kind = declared.unwrap_or_else(|| {
            if obj.contains_key("properties") || obj.contains_key("additionalProperties") {
                SchemaKind::Object
            } else if obj.contains_key("items") {
                SchemaKind::Array
            } else if let Some(first) = enum_values.as_ref().and_then(|e| e.first()) {
                SchemaKind::of_literal(first)
            } else if let Some(branches) = obj
                .get("oneOf")
                .or_else(|| obj.get("anyOf"))
                .and_then(Value::as_array)
            {
                let kinds: Vec<SchemaKind> = branches
                    .iter()
                    .map(|b| SchemaNode::from_value(b).kind)
                    .collect();
                match kinds.first() {
                    Some(k) if kinds.iter().all(|x| x == k) => *k,
                    _ => SchemaKind::Untyped,
                }
            } else {
                SchemaKind::Untyped
            }
        });

        let mut node = Self::of_kind(kind);
        node.description = obj
            .get("description")
            .and_then(Value::as_str)
            .map(str::to_string);
        node.enum_values = enum_values;
        node.format = obj.get("format").and_then(Value::as_str).map(str::to_string);
        node.example = obj.get("example").cloned();

        if kind == SchemaKind::Object {
            if let Some(props) = obj.get("properties").and_then(Value::as_object) {
                for (name, sub) in props {
                    node.properties.insert(name.clone(), SchemaNode::from_value(sub));
                }
            }
            if let Some(req) = obj.get("required").and_then(Value::as_array) {
                node.required_fields = req
                    .iter()
                    .filter_map(Value::as_str)
                    .map(str::to_string)
                    .collect();
            }
        }
        if kind == SchemaKind::Array {
            let items = obj
                .get("items")
                .map(SchemaNode::from_value)
                .unwrap_or_else(SchemaNode::untyped);
            node.items = Some(Box::new(items));
        }
        node
    }

    fn merge_all_of(parts: &[Value]) -> Self {
        let nodes: Vec<SchemaNode> = parts.iter().map(SchemaNode::from_value).collect();
        if nodes.len() == 1 {
            return nodes.into_iter().next().expect("one element");
        }
        if nodes.iter().all(|n| n.kind == SchemaKind::Object) {
            let mut merged = SchemaNode::of_kind(SchemaKind::Object);
            for n in nodes {
                if merged.description.is_none() {
                    merged.description = n.description;
                }
                for (k, v) in n.properties {
                    merged.properties.insert(k, v);
                }
                for r in n.required_fields {
                    if !merged.required_fields.contains(&r) {
                        merged.required_fields.push(r);
                    }
                }
            }
            merged
        } else {
            nodes
                .into_iter()
                .find(|n| n.kind != SchemaKind::Untyped)
                .unwrap_or_else(SchemaNode::untyped)
        }
    }

    pub fn has_enum(&self) -> bool {
        self.enum_values.as_ref().is_some_and(|e| !e.is_empty())
    }

    /// Full conformance: kind, enum membership, and recursively the
    /// required fields / declared properties of objects and array items.
    pub fn conforms(&self, value: &Value) -> bool {
        if value.is_null() {
            return self.kind == SchemaKind::Untyped;
        }
        if !self.kind.accepts(value) {
            return false;
        }
        if let Some(members) = self.enum_values.as_ref().filter(|e| !e.is_empty()) {
            if !members.iter().any(|m| normalized_eq(m, value)) {
                return false;
            }
        }
        match (self.kind, value) {
            (SchemaKind::Object, Value::Object(map)) => {
                self.required_fields.iter().all(|r| {
                    map.get(r).is_some_and(|v| {
                        self.properties.get(r).is_none_or(|s| s.conforms(v))
                    })
                }) && map.iter().all(|(k, v)| {
                    self.properties.get(k).is_none_or(|s| v.is_null() || s.conforms(v))
                })
            }
            (SchemaKind::Array, Value::Array(items)) => match &self.items {
                Some(item_schema) => items.iter().all(|i| item_schema.conforms(i)),
                None => true,
            },
            _ => true,
        }
    }

    /// Structural problems in this node and its children.
    pub fn issues(&self, pointer: &str) -> Vec<ValidationIssue> {
        let mut out = Vec::new();
        self.collect_issues(pointer, &mut out, 0);
        out
    }

    fn collect_issues(&self, pointer: &str, out: &mut Vec<ValidationIssue>, depth: usize) {
        if depth > super::MAX_REF_DEPTH * 4 {
            return;
        }
        if let Some(members) = &self.enum_values {
            if members.is_empty() {
                out.push(ValidationIssue::error(
                    format!("{pointer}/enum"),
                    "enum must list at least one value",
                ));
            } else if self.kind != SchemaKind::Untyped
                && members.iter().any(|m| !self.kind.accepts(m))
            {
                out.push(ValidationIssue::error(
                    format!("{pointer}/enum"),
                    format!("enum members must all be of kind {}", self.kind.as_str()),
                ));
            }
        }
        for r in &self.required_fields {
            if !self.properties.contains_key(r) {
                out.push(ValidationIssue::warning(
                    format!("{pointer}/required"),
                    format!("required field `{r}` is not declared in properties"),
                ));
            }
        }
        for (name, sub) in &self.properties {
            let p = format!(
                "{pointer}/properties/{}",
                super::escape_pointer_token(name)
            );
            sub.collect_issues(&p, out, depth + 1);
        }
        if let Some(items) = &self.items {
            items.collect_issues(&format!("{pointer}/items"), out, depth + 1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn converts_nested_object() {
        let s = SchemaNode::from_value(&json!({
            "type": "object",
            "required": ["limits"],
            "properties": {
                "limits": {"type": "array", "items": {"type": "object", "properties": {"type": {"type": "string"}}}}
            }
        }));
        assert_eq!(s.kind, SchemaKind::Object);
        assert_eq!(s.required_fields, vec!["limits"]);
        let limits = &s.properties["limits"];
        assert_eq!(limits.kind, SchemaKind::Array);
        assert_eq!(limits.items.as_ref().unwrap().kind, SchemaKind::Object);
    }

    #[test]
    fn infers_kind_without_type() {
        assert_eq!(SchemaNode::from_value(&json!({"enum": ["a", "b"]})).kind, SchemaKind::String);
        assert_eq!(SchemaNode::from_value(&json!({"items": {}})).kind, SchemaKind::Array);
        assert_eq!(SchemaNode::from_value(&json!({"description": "?"})).kind, SchemaKind::Untyped);
        assert_eq!(
            SchemaNode::from_value(&json!({"type": ["null", "integer"]})).kind,
            SchemaKind::Integer
        );
    }

    #[test]
    fn all_of_merges_objects() {
        let s = SchemaNode::from_value(&json!({"allOf": [
            {"type": "object", "properties": {"a": {"type": "string"}}, "required": ["a"]},
            {"type": "object", "properties": {"b": {"type": "integer"}}}
        ]}));
        assert_eq!(s.kind, SchemaKind::Object);
        assert_eq!(s.properties.len(), 2);
        assert_eq!(s.required_fields, vec!["a"]);
    }

    #[test]
    fn conformance_checks_enum_and_nesting() {
        let s = SchemaNode::from_value(&json!({"type": "string", "enum": ["Orphan", "Background"]}));
        assert!(s.conforms(&json!("Orphan")));
        assert!(!s.conforms(&json!("Other")));
        assert!(!s.conforms(&json!(1)));

        let o = SchemaNode::from_value(&json!({
            "type": "object", "required": ["port"],
            "properties": {"port": {"type": "integer"}, "name": {"type": "string"}}
        }));
        assert!(o.conforms(&json!({"port": 80})));
        assert!(!o.conforms(&json!({"name": "x"})));
        assert!(!o.conforms(&json!({"port": "80"})));
        assert!(!SchemaNode::of_kind(SchemaKind::Integer).conforms(&json!(1.5)));
        assert!(SchemaNode::of_kind(SchemaKind::Number).conforms(&json!(1)));
    }

    #[test]
    fn reports_empty_enum_and_dangling_required() {
        let s = SchemaNode::from_value(&json!({
            "type": "object", "required": ["x"],
            "properties": {"e": {"type": "string", "enum": []}}
        }));
        let issues = s.issues("/s");
        assert_eq!(issues.len(), 2);
        assert!(issues.iter().any(|i| i.is_error() && i.path_pointer == "/s/properties/e/enum"));
    }
}
