//! Entity matching with chat-style language models.
//!
//! The crate covers the full experiment loop: loading labeled offer pairs,
//! rendering prompts across a small design space, choosing in-context
//! demonstrations, dispatching requests (live or offline), parsing answers,
//! scoring runs and pricing the tokens they used.

pub mod cost;
pub mod error;
pub mod gateway;
pub mod harness;
pub mod metrics;
pub mod prompt;
pub mod record;
pub mod selection;

pub use error::{Error, Result};
