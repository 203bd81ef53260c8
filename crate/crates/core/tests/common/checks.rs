#![allow(dead_code)]

use ace_core::enrich::{enrich_endpoint, EnrichedEndpoint, EnrichmentLevel, HeuristicEnricher};
use ace_core::oas::EndpointSpec;
use ace_core::toolgen::{generate_tools, strip_docstring, GeneratorConfig, RenderTarget};

pub fn heuristic(ep: &EndpointSpec, level: EnrichmentLevel) -> EnrichedEndpoint {
    enrich_endpoint(ep, level, &HeuristicEnricher).unwrap().endpoint
}

fn docstring_of(src: &str) -> &str {
    let start = src.find("\t\"\"\"").unwrap();
    let end = src[start + 4..].find("\t\"\"\"\n").unwrap() + start + 4;
    &src[start..end]
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// none ⊆ e1 ⊆ e2 ⊆ e3 for populated fields and docstring sections, with
/// identical code outside the docstring.
pub fn level_nesting(ep: &EndpointSpec) -> Result<(), String> {
    let levels = EnrichmentLevel::ALL.map(|l| heuristic(ep, l));
    let cfg = GeneratorConfig::new("http://h");
    let sources: Vec<String> = levels
        .iter()
        .map(|e| {
            generate_tools(std::slice::from_ref(e), RenderTarget::LangchainReactPy, &cfg).artifacts[0]
                .contents
                .clone()
        })
        .collect();
    for pair in levels.windows(2) {
        let (lower, higher) = (pair[0].populated_fields(), pair[1].populated_fields());
        ensure!(lower.iter().all(|f| higher.contains(f)), "{lower:?} not within {higher:?}");
    }
    ensure!(levels[1].populated_fields().contains(&"tool_description".to_string()), "e1 lacks a description");
    ensure!(
        levels[1].param_descriptions.is_empty() && levels[1].param_examples.is_empty(),
        "e1 has parameter fields"
    );
    ensure!(levels[2].param_examples.is_empty() && levels[2].body_example.is_none(), "e2 has examples");
    let want_descriptions = ep.parameters.len() + ep.request_body.is_some() as usize;
    ensure!(levels[2].param_descriptions.len() == want_descriptions, "e2 misses parameter descriptions");

    let docs: Vec<&str> = sources.iter().map(|s| docstring_of(s)).collect();
    ensure!(!docs[0].contains(":param") && !docs[0].contains(":return:"), "none docstring has e2 sections");
    ensure!(!docs[1].contains(":param") && !docs[1].contains(":return:"), "e1 docstring has e2 sections");
    ensure!(docs[2].contains("\t:return: "), "e2 docstring lacks :return:");
    ensure!(!docs[2].contains("Input Example:"), "e2 docstring has examples");
    ensure!(docs[2].starts_with(docs[1].trim_end_matches('\n')), "e1 docstring is not a prefix of e2");
    ensure!(docs[3].starts_with(docs[2]), "e2 docstring is not a prefix of e3");
    let has_examples = !levels[3].param_examples.is_empty() || levels[3].body_example.is_some();
    ensure!(docs[3].contains("Input Example:") == has_examples, "e3 example block mismatch");

    let bodies: Vec<String> = sources.iter().map(|s| strip_docstring(s)).collect();
    ensure!(bodies.iter().all(|b| *b == bodies[0]), "code differs across levels");
    Ok(())
}

/// Every e3 example conforms to its schema.
pub fn examples_conform(ep: &EndpointSpec) -> Result<(), String> {
    let e = heuristic(ep, EnrichmentLevel::E3);
    for p in &ep.parameters {
        let ex = e.param_examples.get(&p.name).ok_or_else(|| format!("{}: no example", p.name))?;
        ensure!(p.schema.conforms(ex), "{}: {ex} violates {:?}", p.name, p.schema);
    }
    if let Some(body) = &ep.request_body {
        let ex = e.body_example.as_ref().ok_or("no body example")?;
        ensure!(body.conforms(ex), "body example {ex} violates {body:?}");
    }
    Ok(())
}
