//! Design-pattern detection through evolved classification rules.
//!
//! The pipeline has two phases. A grammar-guided evolutionary search mines
//! human-readable class association rules describing labelled pattern
//! examples over a graph of static code facts. A rule-based classifier
//! built from the pruned rule set then decides whether new role-mapped
//! candidates implement the pattern.

pub mod candidates;
pub mod classifier;
pub mod config;
pub mod corpus;
pub mod evolution;
pub mod facts;
pub mod grammar;
pub mod repository;
pub mod rng;

pub use facts::{CodeFactsGraph, FactsError};
