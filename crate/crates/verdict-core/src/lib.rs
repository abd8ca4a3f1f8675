//! Batch pipeline for learning binary judgement valence from prefix-labeled
//! Reddit comments and running the downstream analytics: linguistic
//! divergence between the valence classes, valence assignment to posts and
//! users, popularity and inequality analyses, demographic association tests,
//! and conversation-derailment transfer evaluation.
//!
//! The `verdict` binary exposes the pipeline as subcommands; see the crate
//! README for the end-to-end flow.

pub mod allotax;
pub mod analytics;
pub mod awry;
pub mod classify;
pub mod cli;
pub mod demographics;
pub mod ingest;
pub mod labels;
pub mod stats;
pub mod text;
