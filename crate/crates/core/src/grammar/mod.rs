//! The configurable context-free grammar behind rule mining, derivation
//! trees, the genotype/phenotype mapping, and rule evaluation against a
//! labelled dataset.

mod dataset;
mod rule;
mod tree;

pub use dataset::{
    confidence, count_matches, matches, support, Dataset, DatasetEval, Label, Sample,
};
pub use rule::{
    parse_rule, CatComparator, Comparison, Consequent, NumComparator, Rule, RuleStats,
};
pub use tree::{random_derive, to_phenotype, DerivationTree};
pub(crate) use tree::{cmp_cost as cmp_subtree_cost, derive_cmp as derive_cmp_subtree};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::facts::{CatOp, CodeFactsGraph, Metric};

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("grammar needs at least one role")]
    NoRoles,
    #[error("grammar needs at least one comparison operator")]
    NoOperators,
    #[error("constant range for {metric} is empty ({lo} > {hi})")]
    EmptyConstRange { metric: String, lo: i64, hi: i64 },
    #[error("derivation budget {max} is below the grammar minimum {min}")]
    BudgetBelowMinimum { max: u32, min: u32 },
    #[error("tree uses {count} derivations, budget is {max}")]
    BudgetExceeded { count: u32, max: u32 },
    #[error("operator {0} is not enabled in this grammar")]
    OperatorDisabled(String),
    #[error("unknown role `{0}`")]
    UnknownRole(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("value `{value}` is outside the domain of {op}")]
    ValueOutsideDomain { op: String, value: String },
    #[error("constant {constant} outside [{lo}, {hi}] for {metric}")]
    ConstantOutsideRange {
        metric: String,
        constant: i64,
        lo: i64,
        hi: i64,
    },
    #[error("rule syntax: {0}")]
    RuleSyntax(String),
    #[error("candidate is missing role `{0}`")]
    MissingRole(String),
    #[error("candidate artifact `{0}` is not usable: {1}")]
    BadCandidateArtifact(String, String),
    #[error("dataset must contain at least one sample")]
    EmptyDataset,
}

const DEFAULT_CONST_RANGE: (i64, i64) = (0, 10);

/// The rule grammar for one pattern: roles, enabled operators and constant
/// ranges for numeric comparisons.
#[derive(Debug, Clone)]
pub struct Grammar {
    roles: Vec<String>,
    metrics: Vec<Metric>,
    cat_ops: Vec<CatOp>,
    const_ranges: BTreeMap<Metric, (i64, i64)>,
}

/// Kinds of `<cmp>` production available in a grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpProduction {
    Numeric,
    Categorical,
}

/// Builds the grammar skeleton restricted to the given roles and operators.
/// Constant ranges default to `[0, 10]` per metric when not provided.
pub fn build_grammar(
    roles: &[String],
    metrics: &[Metric],
    cat_ops: &[CatOp],
    const_ranges: &BTreeMap<Metric, (i64, i64)>,
) -> Result<Grammar, GrammarError> {
    if roles.is_empty() {
        return Err(GrammarError::NoRoles);
    }
    if metrics.is_empty() && cat_ops.is_empty() {
        return Err(GrammarError::NoOperators);
    }
    let mut uniq_metrics = Vec::new();
    for m in metrics {
        if !uniq_metrics.contains(m) {
            uniq_metrics.push(*m);
        }
    }
    let mut uniq_ops = Vec::new();
    for op in cat_ops {
        if !uniq_ops.contains(op) {
            uniq_ops.push(*op);
        }
    }
    let mut ranges = BTreeMap::new();
    for m in &uniq_metrics {
        let (lo, hi) = const_ranges.get(m).copied().unwrap_or(DEFAULT_CONST_RANGE);
        if lo > hi {
            return Err(GrammarError::EmptyConstRange {
                metric: m.token().to_owned(),
                lo,
                hi,
            });
        }
        ranges.insert(*m, (lo, hi));
    }
    Ok(Grammar {
        roles: roles.to_vec(),
        metrics: uniq_metrics,
        cat_ops: uniq_ops,
        const_ranges: ranges,
    })
}

/// Data-driven constant ranges: `[0, max observed value]` per metric over
/// the graph's non-external artifacts.
pub fn const_ranges_from_graph(
    graph: &CodeFactsGraph,
    metrics: &[Metric],
) -> BTreeMap<Metric, (i64, i64)> {
    let mut ranges = BTreeMap::new();
    for m in metrics {
        let mut max = 0i64;
        for artifact in graph.artifacts() {
            if artifact.is_external() {
                continue;
            }
            if let Ok(v) = crate::facts::compute_metric(*m, &artifact.id, graph) {
                max = max.max(i64::from(v));
            }
        }
        ranges.insert(*m, (0, max.max(1)));
    }
    ranges
}

impl Grammar {
    pub fn roles(&self) -> &[String] {
        &self.roles
    }

    pub fn metrics(&self) -> &[Metric] {
        &self.metrics
    }

    pub fn cat_ops(&self) -> &[CatOp] {
        &self.cat_ops
    }

    pub fn role_index(&self, name: &str) -> Option<u8> {
        self.roles.iter().position(|r| r == name).map(|i| i as u8)
    }

    pub fn const_range(&self, metric: Metric) -> (i64, i64) {
        self.const_ranges
            .get(&metric)
            .copied()
            .unwrap_or(DEFAULT_CONST_RANGE)
    }

    /// Derivations of the `<role>` nonterminal: one per role.
    pub fn role_production_count(&self) -> usize {
        self.roles.len()
    }

    /// Available productions of `<cmp>`.
    pub fn cmp_productions(&self) -> Vec<CmpProduction> {
        let mut out = Vec::new();
        if !self.metrics.is_empty() {
            out.push(CmpProduction::Numeric);
        }
        if !self.cat_ops.is_empty() {
            out.push(CmpProduction::Categorical);
        }
        out
    }

    /// Derivations of `<catCmp>`: one per enabled categorical operator.
    pub fn catcmp_production_count(&self) -> usize {
        self.cat_ops.len()
    }

    /// Minimal derivation count of any rule in this grammar.
    pub fn min_derivations(&self) -> u32 {
        // <rule> + <consq> + <antc> + minimal comparison subtree.
        3 + self.min_cmp_cost()
    }

    pub(crate) fn min_cmp_cost(&self) -> u32 {
        tree::min_cmp_cost_for(!self.metrics.is_empty(), &self.cat_ops)
    }
}
