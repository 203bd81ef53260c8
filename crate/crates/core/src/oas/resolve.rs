use indexmap::IndexMap;
use serde_json::{Map, Value};
use thiserror::Error;

use super::{escape_pointer_token, OasDocument, ValidationIssue};

/// Maximum number of nested `$ref` hops expanded along one branch.
pub const MAX_REF_DEPTH: usize = 16;

/// Marker left on nodes whose reference could not be expanded.
const UNRESOLVED_MARKER: &str = "x-unresolved-ref";

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ResolveError {
    #[error("dangling reference `{reference}` at {pointer}")]
    DanglingRef { reference: String, pointer: String },
    #[error("external reference `{reference}` at {pointer} is not supported")]
    ExternalRefUnsupported { reference: String, pointer: String },
}

/// A document with every `$ref` in `paths` and `components` inlined.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub document: OasDocument,
    pub issues: Vec<ValidationIssue>,
    errors: Vec<ResolveError>,
}

impl Resolved {
    /// Fails on the first dangling or external reference.
    pub fn strict(self) -> Result<OasDocument, ResolveError> {
        match self.errors.into_iter().next() {
            Some(e) => Err(e),
            None => Ok(self.document),
        }
    }

    pub fn errors(&self) -> &[ResolveError] {
        &self.errors
    }
}

struct Resolver<'a> {
    components: &'a IndexMap<String, IndexMap<String, Value>>,
    stack: Vec<String>,
    issues: Vec<ValidationIssue>,
    errors: Vec<ResolveError>,
}

impl Resolver<'_> {
    fn lookup(&self, reference: &str) -> Option<&Value> {
        let pointer = reference.strip_prefix('#')?;
        let mut tokens = pointer
            .split('/')
            .skip(1)
            .map(|t| t.replace("~1", "/").replace("~0", "~"));
        let first = tokens.next()?;
        let (section, name) = match first.as_str() {
            "components" => (tokens.next()?, tokens.next()?),
            "definitions" => ("schemas".to_string(), tokens.next()?),
            "parameters" => ("parameters".to_string(), tokens.next()?),
            "responses" => ("responses".to_string(), tokens.next()?),
            "securityDefinitions" => ("securitySchemes".to_string(), tokens.next()?),
            _ => return None,
        };
        let mut node = self.components.get(&section)?.get(&name)?;
        for t in tokens {
            node = match node {
                Value::Object(m) => m.get(&t)?,
                Value::Array(a) => a.get(t.parse::<usize>().ok()?)?,
                _ => return None,
            };
        }
        Some(node)
    }

    fn unresolved(reference: &str) -> Value {
        let mut m = Map::new();
        m.insert(UNRESOLVED_MARKER.into(), Value::String(reference.to_string()));
        Value::Object(m)
    }

    fn resolve(&mut self, value: &Value, pointer: &str) -> Value {
        match value {
            Value::Object(map) => {
                if let Some(reference) = map.get("$ref").and_then(Value::as_str) {
                    let target = self.expand(reference, pointer);
                    let siblings: Vec<(&String, &Value)> =
                        map.iter().filter(|(k, _)| k.as_str() != "$ref").collect();
                    if siblings.is_empty() {
                        return target;
                    }
                    let mut merged = match target {
                        Value::Object(m) => m,
                        other => return other,
                    };
                    for (k, v) in siblings {
                        let child = format!("{pointer}/{}", escape_pointer_token(k));
                        merged.insert(k.clone(), self.resolve(v, &child));
                    }
                    return Value::Object(merged);
                }
                let mut out = Map::with_capacity(map.len());
                for (k, v) in map {
                    let child = format!("{pointer}/{}", escape_pointer_token(k));
                    out.insert(k.clone(), self.resolve(v, &child));
                }
                Value::Object(out)
            }
            Value::Array(items) => Value::Array(
                items
                    .iter()
                    .enumerate()
                    .map(|(i, v)| self.resolve(v, &format!("{pointer}/{i}")))
                    .collect(),
            ),
            other => other.clone(),
        }
    }

    fn expand(&mut self, reference: &str, pointer: &str) -> Value {
        if !reference.starts_with('#') {
            self.issues.push(ValidationIssue::error(
                pointer,
                format!("external reference `{reference}` is not supported"),
            ));
            self.errors.push(ResolveError::ExternalRefUnsupported {
                reference: reference.to_string(),
                pointer: pointer.to_string(),
            });
            return Self::unresolved(reference);
        }
        if self.stack.iter().any(|r| r == reference) {
            self.issues.push(ValidationIssue::warning(
                pointer,
                format!("cyclic reference `{reference}` replaced by an untyped schema"),
            ));
            return Self::unresolved(reference);
        }
        if self.stack.len() >= MAX_REF_DEPTH {
            self.issues.push(ValidationIssue::warning(
                pointer,
                format!(
                    "reference `{reference}` exceeds depth limit {MAX_REF_DEPTH}; replaced by an untyped schema"
                ),
            ));
            return Self::unresolved(reference);
        }
        let Some(target) = self.lookup(reference).cloned() else {
            self.issues.push(ValidationIssue::error(
                pointer,
                format!("dangling reference `{reference}`"),
            ));
            self.errors.push(ResolveError::DanglingRef {
                reference: reference.to_string(),
                pointer: pointer.to_string(),
            });
            return Self::unresolved(reference);
        };
        self.stack.push(reference.to_string());
        let out = self.resolve(&target, pointer);
        self.stack.pop();
        out
    }
}

/// Inlines every local `$ref` in `paths` and `components`.
///
/// A reference already being expanded on the current branch (a cycle) or
/// one nested deeper than [`MAX_REF_DEPTH`] becomes an untyped node plus a
/// warning. Dangling and external references become untyped nodes plus an
/// error issue; [`Resolved::strict`] turns those into a [`ResolveError`].
pub fn resolve_refs(doc: &OasDocument) -> Resolved {
    let mut resolver = Resolver {
        components: &doc.components,
        stack: Vec::new(),
        issues: Vec::new(),
        errors: Vec::new(),
    };
    let mut out = doc.clone();

    for (path, item) in out.paths.iter_mut() {
        let base = format!("/paths/{}", escape_pointer_token(path));
        item.parameters = item
            .parameters
            .iter()
            .enumerate()
            .map(|(i, p)| resolver.resolve(p, &format!("{base}/parameters/{i}")))
            .collect();
        for (method, op) in item.operations.iter_mut() {
            *op = resolver.resolve(op, &format!("{base}/{method}"));
        }
    }

    let mut components = doc.components.clone();
    for (section, entries) in components.iter_mut() {
        for (name, value) in entries.iter_mut() {
            let self_ref = format!(
                "#/components/{}/{}",
                escape_pointer_token(section),
                escape_pointer_token(name)
            );
            resolver.stack.push(self_ref);
            *value = resolver.resolve(
                value,
                &format!(
                    "/components/{}/{}",
                    escape_pointer_token(section),
                    escape_pointer_token(name)
                ),
            );
            resolver.stack.pop();
        }
    }
    out.components = components;

    Resolved {
        document: out,
        issues: resolver.issues,
        errors: resolver.errors,
    }
}
