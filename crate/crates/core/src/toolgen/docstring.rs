use serde_json::Value;

use super::ToolPlan;
use crate::enrich::EnrichmentLevel;

pub const RETURN_LINE: &str = "The JSON response from the API.";

/// Python source for a JSON literal: single-quoted strings, `True`,
/// `False`, `None`.
pub fn python_literal(value: &Value) -> String {
    match value {
        Value::Null => "None".into(),
        Value::Bool(true) => "True".into(),
        Value::Bool(false) => "False".into(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => python_str(s),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(python_literal).collect();
            format!("[{}]", parts.join(", "))
        }
        Value::Object(map) => {
            let parts: Vec<String> = map
                .iter()
                .map(|(k, v)| format!("{}: {}", python_str(k), python_literal(v)))
                .collect();
            format!("{{{}}}", parts.join(", "))
        }
    }
}

fn python_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

/// Makes free text safe inside a `"""` docstring; continuation lines keep
/// the docstring indent.
fn doc_text(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace("\"\"\"", "\\\"\\\"\\\"")
        .replace('\n', "\n\t")
}

/// Renders the tab-indented docstring, opening and closing quotes included.
///
/// `none`/`e1`: description only. `e2`: adds `:param` lines and the
/// `:return:` line. `e3`: adds the `Input Example:` block.
pub fn render_docstring(plan: &ToolPlan, level: EnrichmentLevel) -> String {
    let d = &plan.docstring;
    let description = if level == EnrichmentLevel::None {
        &d.original_description
    } else {
        &d.description
    };
    let mut out = format!("\t\"\"\" {}\n", doc_text(description));
    if level >= EnrichmentLevel::E2 {
        out.push('\n');
        for (name, text) in &d.param_lines {
            out.push_str(&format!("\t:param {name}: {}\n", doc_text(text)));
        }
        out.push_str(&format!("\t:return: {}\n", doc_text(&d.return_line)));
    }
    if level >= EnrichmentLevel::E3 {
        if let Some(examples) = d.input_example.as_ref().filter(|e| !e.is_empty()) {
            out.push_str("\n\tInput Example:\n");
            for (name, value) in examples {
                out.push_str(&format!("\t{name} = {}\n", doc_text(&python_literal(value))));
            }
        }
    }
    out.push_str("\t\"\"\"\n");
    out
}
