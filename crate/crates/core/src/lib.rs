//! Non-neural machinery for text-to-structure information extraction.
//!
//! Extraction results are written in a small bracketed language (SEL):
//!
//! ```text
//! ((person: Steve (work for: Apple)) (organization: Apple))
//! ```
//!
//! Top-level nodes are *spots* (a typed span), their children are
//! *associations* (a relation or role linking the spot to another span).
//! This crate parses and serializes that language, builds schema prompts,
//! converts between SEL and offset-grounded records, scores predictions,
//! and constructs pre-training instances.

pub mod cli;
pub mod error;
pub mod matcher;
pub mod metrics;
pub mod mock;
pub mod pretrain;
pub mod records;
pub mod schema;
pub mod sel;
pub mod synth;

pub use error::{Error, Result};
pub use metrics::{score, score_all, EvalReport, MetricKind, MetricScore};
pub use records::{record_to_sel, sel_to_record, Record, TaskKind, TokenizedText};
pub use schema::{build_ssi, Schema, SsiOptions};
pub use sel::{parse_sel, serialize_sel, Diagnostic, ParseMode, SelTree};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
