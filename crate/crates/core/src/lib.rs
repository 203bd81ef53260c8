//! Turns OpenAPI documents into enriched, agent-ready tools.
//!
//! The pipeline runs parse → enrich → generate → catalog → shortlist, and
//! the evaluation side drives agent episodes and scores their transcripts
//! for tool selection (S), type mismatches (T), missing parameters (M) and
//! incorrect parameters (I).

pub mod literal;
pub mod oas;
pub mod chat;
pub mod enrich;
pub mod toolgen;
pub mod catalog;
pub mod shortlist;
pub mod jsonl;
pub mod agent;
pub mod eval;
