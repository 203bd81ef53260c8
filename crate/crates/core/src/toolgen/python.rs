use super::{render_docstring, ArgLocation, GeneratorConfig, ToolArg, ToolPlan};

fn signature_arg(a: &ToolArg) -> String {
    let ty = a.ty.kind.python();
    if a.ty.optional {
        format!("{}: Optional[{ty}] = None", a.name)
    } else {
        format!("{}: {ty}", a.name)
    }
}

fn arg_map(plan: &ToolPlan, location: ArgLocation) -> String {
    let entries: Vec<String> = plan
        .ordered_args
        .iter()
        .filter(|a| a.location == location)
        .map(|a| format!("'{}' : {}", a.source_name.replace('\'', "\\'"), a.name))
        .collect();
    format!("{{{}}}", entries.join(", "))
}

fn url_fstring(plan: &ToolPlan, base_url: &str) -> String {
    let mut path = plan.request.url_template.clone();
    for a in plan.ordered_args.iter().filter(|a| a.location == ArgLocation::Path) {
        path = path.replace(&format!("{{{}}}", a.source_name), &format!("{{{}}}", a.name));
    }
    let base = base_url.trim_end_matches('/').replace('{', "{{").replace('}', "}}");
    format!("f\"{base}{path}\"")
}

/// Renders one `langchain-react-py` tool module.
pub(super) fn render(plan: &ToolPlan, config: &GeneratorConfig) -> String {
    let auth = config.auth_header(plan);
    let has = |loc| plan.ordered_args.iter().any(|a| a.location == loc);
    let mut out = String::new();

    out.push_str("import json\n");
    if auth.is_some() {
        out.push_str("import os\n");
    }
    out.push_str("import requests\nfrom typing import *\nfrom langchain_core.tools import tool\n\n");

    let args: Vec<String> = plan.ordered_args.iter().map(signature_arg).collect();
    out.push_str(&format!("@tool\ndef {}({}):\n", plan.function_name, args.join(", ")));
    out.push_str(&render_docstring(plan, plan.level));

    let mut header_lines: Vec<String> = plan
        .request
        .header_entries
        .iter()
        .map(|(k, v)| format!("\t\t'{k}': '{v}'"))
        .collect();
    if let Some((name, expr)) = &auth {
        header_lines.push(format!("\t\t'{name}': {expr}"));
    }
    out.push_str(&format!("\n\theader = {{\n{}\n\t}}\n", header_lines.join(",\n")));
    if has(ArgLocation::Header) {
        out.push_str(&format!(
            "\theader.update({{k: str(v) for k, v in {}.items() if v is not None}})\n",
            arg_map(plan, ArgLocation::Header)
        ));
    }
    out.push_str(&format!("\tqueryParam = {}\n", arg_map(plan, ArgLocation::Query)));
    if has(ArgLocation::FormField) {
        out.push_str(&format!("\tformData = {}\n", arg_map(plan, ArgLocation::FormField)));
    }

    out.push_str(&format!("\n\tapi_url = {}\n", url_fstring(plan, &config.base_url)));
    let mut call = format!(
        "requests.{}(api_url, headers=header, params=queryParam",
        plan.request.method
    );
    if has(ArgLocation::FormField) {
        call.push_str(", data=formData");
    }
    if let Some(body) = plan.ordered_args.iter().find(|a| a.location == ArgLocation::Body) {
        call.push_str(&format!(", json={}", body.name));
    }
    out.push_str(&format!("\tresponse = {call})\n"));
    out.push_str(
        "\ttry:\n\t\tpayload = response.json()\n\texcept ValueError:\n\t\tpayload = response.text\n",
    );
    out.push_str("\treturn {\"status_code\": response.status_code, \"response\": payload}\n");
    out
}

/// Removes the docstring lines from rendered tool source.
pub fn strip_docstring(source: &str) -> String {
    let mut out = String::new();
    let mut inside = false;
    for line in source.lines() {
        if inside {
            inside = line != "\t\"\"\"";
            continue;
        }
        if line.starts_with("\t\"\"\" ") {
            inside = true;
            continue;
        }
        out.push_str(line);
        out.push('\n');
    }
    out
}
