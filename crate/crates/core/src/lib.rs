//! Candidate ranking and context management for conversational web agents:
//! DOM parsing and candidate extraction, history windows and budgeted input
//! truncation, a trainable dual encoder, top-k ranking, action parsing and
//! scoring, and an evaluation harness.

pub mod actions;
pub mod context;
pub mod dom;
pub mod encoder;
pub mod harness;
pub mod ranking;
