//! Cascade popularity prediction with tokenized diffusion graphs and a
//! frozen autoregressive backbone.
//!
//! The pipeline runs in stages:
//!
//! 1. [`cascade`] parses or generates cascades and the global context graph.
//! 2. [`local`] and [`global`] embed users structurally (heat-kernel wavelets
//!    on each cascade graph, factorization of the context graph).
//! 3. [`tokenizer`] fuses both embeddings and turns every cascade into a
//!    sequence of cumulative time-patch tokens.
//! 4. [`backbone`] is a frozen causal transformer; [`adapter`] holds the
//!    trainable projector, adapter, prompt injection and task head.
//! 5. [`train`] fits the trainable shell and evaluates it, together with
//!    the feature baselines and the ablation variants.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iteration otherwise.

pub mod adapter;
pub mod autograd;
pub mod backbone;
pub mod cascade;
pub mod checkpoint;
pub mod config;
pub mod embcache;
mod error;
pub mod global;
pub mod graph;
pub mod local;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod prompt;
pub mod tokenizer;
pub mod train;

pub use error::{Error, Result};
