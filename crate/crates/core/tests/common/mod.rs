//! Oracles shared by the integration tests and the acceptance suite.

#![allow(dead_code)]

pub mod embed;
pub mod grad;
pub mod tokens;
