#![allow(dead_code)]

use ace_core::agent::{corrupting_agent, Corruption, GoldCall, Transcript};
use proptest::prelude::*;
use serde_json::{json, Value};

use super::gen::METRIC_PARAMS;

/// What happens to one gold parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamFate {
    Keep,
    Drop,
    Stringify,
    SameKindWrongValue,
    OtherKindValue,
}

#[derive(Clone, Debug)]
pub struct CallPlan {
    pub wrong_tool: bool,
    pub fates: [ParamFate; 3],
    pub add_extra: bool,
}

pub fn call_plan() -> impl Strategy<Value = CallPlan> {
    let fate = prop::sample::select(vec![
        ParamFate::Keep,
        ParamFate::Keep,
        ParamFate::Drop,
        ParamFate::Stringify,
        ParamFate::SameKindWrongValue,
        ParamFate::OtherKindValue,
    ]);
    (prop::bool::weighted(0.2), [fate.clone(), fate.clone(), fate], any::<bool>())
        .prop_map(|(wrong_tool, fates, add_extra)| CallPlan { wrong_tool, fates, add_extra })
}

impl CallPlan {
    pub fn corruptions(&self, gold: &GoldCall) -> Vec<Corruption> {
        let mut out = Vec::new();
        if self.wrong_tool {
            out.push(Corruption::WrongTool);
        }
        for (name, fate) in METRIC_PARAMS.iter().zip(self.fates) {
            let name = name.to_string();
            let gold_value = &gold.arguments[&name];
            match fate {
                ParamFate::Keep => {}
                ParamFate::Drop => out.push(Corruption::DropParam { name }),
                ParamFate::Stringify => out.push(Corruption::StringifyParam { name }),
                ParamFate::SameKindWrongValue => {
                    let value = match gold_value {
                        Value::String(s) => json!(format!("{s}-wrong")),
                        Value::Number(n) => json!(n.as_i64().unwrap() + 1000),
                        Value::Bool(b) => json!(!b),
                        _ => unreachable!(),
                    };
                    out.push(Corruption::WrongValue { name, value });
                }
                ParamFate::OtherKindValue => {
                    let value = match gold_value {
                        Value::String(_) => json!(5),
                        Value::Number(_) => json!("x"),
                        _ => json!(1),
                    };
                    out.push(Corruption::WrongValue { name, value });
                }
            }
        }
        if self.add_extra {
            out.push(Corruption::AddParam { name: "extra".into(), value: json!("hallucinated") });
        }
        out
    }
}

/// Expected numerators and denominators, by hand rules: a dropped param is
/// missing; a stringified non-string or a value of another kind is a type
/// error; a same-kind wrong value or an added param is incorrect; a
/// stringified string is unchanged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Expected {
    pub s: (u64, u64),
    pub t: (u64, u64),
    pub m: (u64, u64),
    pub i: (u64, u64),
}

pub fn expected_counts(plans: &[CallPlan]) -> Expected {
    let mut e = Expected { s: (0, plans.len() as u64), ..Default::default() };
    for plan in plans.iter().filter(|p| !p.wrong_tool) {
        e.s.0 += 1;
        e.m.1 += 3;
        let mut predicted = 3 + plan.add_extra as u64;
        for (name, fate) in METRIC_PARAMS.iter().zip(plan.fates) {
            match fate {
                ParamFate::Keep => {}
                ParamFate::Drop => {
                    e.m.0 += 1;
                    predicted -= 1;
                }
                ParamFate::Stringify => e.t.0 += (*name != "label") as u64,
                ParamFate::SameKindWrongValue => e.i.0 += 1,
                ParamFate::OtherKindValue => e.t.0 += 1,
            }
        }
        e.i.0 += plan.add_extra as u64;
        e.t.1 += predicted;
        e.i.1 += predicted;
    }
    e
}

pub fn transcripts_for(gold: &[GoldCall], plans: &[CallPlan], pool: &[String], seed: u64) -> Vec<Transcript> {
    gold.iter()
        .zip(plans)
        .enumerate()
        .map(|(n, (g, p))| corrupting_agent(g, &p.corruptions(g), seed + n as u64, pool).unwrap())
        .collect()
}
