//! Derivation trees and random derivation under a size budget.
//!
//! The grammar's productions below the antecedent chain are non-recursive,
//! so a tree is stored as its flattened comparison sequence plus the
//! consequent; the left-recursive antecedent shape is recovered from the
//! order. Derivation counting follows the production structure exactly:
//! every nonterminal expansion costs one derivation.

use crate::facts::CatOp;
use crate::rng::RunRng;

use super::rule::{CatComparator, Comparison, Consequent, NumComparator, Rule};
use super::{Grammar, GrammarError};

#[derive(Debug, Clone, PartialEq)]
pub struct DerivationTree {
    /// Comparisons of the antecedent chain, left to right.
    pub comparisons: Vec<Comparison>,
    pub consequent: Consequent,
}

/// Derivations spent on a single comparison subtree rooted at `<cmp>`:
/// the `<cmp>` node itself plus its inner expansion.
pub(crate) fn cmp_cost(c: &Comparison) -> u32 {
    1 + match c {
        // <numCmp> plus <numCmptor>, <numOp>, <role>; the constant is a terminal.
        Comparison::Numeric { .. } => 4,
        // <catCmp> plus <catCmptor>, one <role> per argument, and the value.
        Comparison::Categorical { op, .. } => 3 + op.arity() as u32,
    }
}

impl DerivationTree {
    pub fn new(comparisons: Vec<Comparison>, consequent: Consequent) -> Self {
        assert!(!comparisons.is_empty(), "antecedent must be non-empty");
        Self {
            comparisons,
            consequent,
        }
    }

    /// Number of production applications that derive this tree.
    pub fn derivation_count(&self) -> u32 {
        // <rule> and <consq> plus one <antc> node per comparison.
        2 + self.comparisons.len() as u32
            + self.comparisons.iter().map(cmp_cost).sum::<u32>()
    }

    /// Checks conformance against the grammar: enabled operators, declared
    /// roles, domain membership and constant ranges.
    pub fn validate(&self, grammar: &Grammar, max_derivations: u32) -> Result<(), GrammarError> {
        if self.comparisons.is_empty() {
            return Err(GrammarError::RuleSyntax("empty antecedent".into()));
        }
        if self.derivation_count() > max_derivations {
            return Err(GrammarError::BudgetExceeded {
                count: self.derivation_count(),
                max: max_derivations,
            });
        }
        for c in &self.comparisons {
            match c {
                Comparison::Numeric {
                    metric,
                    role,
                    constant,
                    ..
                } => {
                    if !grammar.metrics().contains(metric) {
                        return Err(GrammarError::OperatorDisabled(metric.token().to_owned()));
                    }
                    if grammar.role_index(role).is_none() {
                        return Err(GrammarError::UnknownRole(role.clone()));
                    }
                    let (lo, hi) = grammar.const_range(*metric);
                    if *constant < lo || *constant > hi {
                        return Err(GrammarError::ConstantOutsideRange {
                            metric: metric.token().to_owned(),
                            constant: *constant,
                            lo,
                            hi,
                        });
                    }
                }
                Comparison::Categorical {
                    op, roles, value, ..
                } => {
                    if !grammar.cat_ops().contains(op) {
                        return Err(GrammarError::OperatorDisabled(op.name().to_owned()));
                    }
                    if roles.len() != op.arity() {
                        return Err(GrammarError::RuleSyntax(format!(
                            "{} arity mismatch",
                            op.name()
                        )));
                    }
                    if let Some(bad) = roles.iter().find(|r| grammar.role_index(r).is_none()) {
                        return Err(GrammarError::UnknownRole(bad.clone()));
                    }
                    if !op.domain().contains(value) {
                        return Err(GrammarError::ValueOutsideDomain {
                            op: op.name().to_owned(),
                            value: value.token(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_rule(&self) -> Rule {
        Rule::new(self.comparisons.clone(), self.consequent)
    }
}

/// Flattens a derivation tree into its rule phenotype, antecedent in
/// left-to-right order.
pub fn to_phenotype(tree: &DerivationTree) -> Rule {
    tree.to_rule()
}

/// Draws a random tree conforming to the grammar with derivation count at
/// most `max_derivations`.
///
/// Productions are sampled uniformly; when a partial tree's minimal
/// completion exceeds the budget, the derivation restarts. After 100
/// restarts the tree is completed greedily along minimal-size productions.
pub fn random_derive(
    grammar: &Grammar,
    max_derivations: u32,
    rng: &mut RunRng,
) -> Result<DerivationTree, GrammarError> {
    let min = grammar.min_derivations();
    if max_derivations < min {
        return Err(GrammarError::BudgetBelowMinimum {
            max: max_derivations,
            min,
        });
    }
    for _ in 0..100 {
        if let Some(tree) = try_derive(grammar, max_derivations, rng) {
            return Ok(tree);
        }
    }
    Ok(greedy_minimal(grammar, rng))
}

fn try_derive(grammar: &Grammar, max_derivations: u32, rng: &mut RunRng) -> Option<DerivationTree> {
    // <rule> and <consq> are fixed costs.
    let mut budget = max_derivations.checked_sub(2)?;
    let min_cmp = grammar.min_cmp_cost();
    let mut comparisons = Vec::new();
    loop {
        // Expanding <antc> costs one derivation and commits to at least one
        // more comparison subtree.
        budget = budget.checked_sub(1)?;
        if budget < min_cmp {
            return None;
        }
        // Production choice for <antc>: `<cmp>` or `and <antc> <cmp>`.
        let continue_chain = rng.index(2) == 1;
        if continue_chain {
            // The chain needs room for another <antc> expansion and one
            // more minimal comparison beyond the current one.
            if budget < min_cmp + 1 + min_cmp {
                return None;
            }
        }
        let cmp = derive_cmp(
            grammar,
            if continue_chain {
                budget - 1 - min_cmp
            } else {
                budget
            },
            rng,
        )?;
        budget -= cmp_cost(&cmp);
        comparisons.push(cmp);
        if !continue_chain {
            break;
        }
    }
    let consequent = derive_consequent(rng);
    Some(DerivationTree::new(comparisons, consequent))
}

pub(crate) fn derive_consequent(rng: &mut RunRng) -> Consequent {
    if rng.index(2) == 0 {
        Consequent::APattern
    } else {
        Consequent::NotAPattern
    }
}

/// Draws a `<cmp>` subtree within the given budget, or None when the
/// sampled production does not fit.
pub(crate) fn derive_cmp(grammar: &Grammar, budget: u32, rng: &mut RunRng) -> Option<Comparison> {
    let numeric_available = !grammar.metrics().is_empty();
    let categorical_available = !grammar.cat_ops().is_empty();
    let pick_numeric = match (numeric_available, categorical_available) {
        (true, true) => rng.index(2) == 0,
        (true, false) => true,
        (false, true) => false,
        (false, false) => unreachable!("grammar validation requires an operator"),
    };
    if pick_numeric {
        // <cmp> + <numCmp> + <numCmptor> + <numOp> + <role> = 5.
        if budget < 5 {
            return None;
        }
        let comparator = NumComparator::ALL[rng.index(4)];
        let metric = grammar.metrics()[rng.index(grammar.metrics().len())];
        let role = grammar.roles()[rng.index(grammar.roles().len())].clone();
        let (lo, hi) = grammar.const_range(metric);
        let constant = rng.int_in(lo, hi);
        Some(Comparison::Numeric {
            comparator,
            metric,
            role,
            constant,
        })
    } else {
        let op = grammar.cat_ops()[rng.index(grammar.cat_ops().len())];
        if budget < 4 + op.arity() as u32 {
            return None;
        }
        let comparator = CatComparator::ALL[rng.index(2)];
        let roles = (0..op.arity())
            .map(|_| grammar.roles()[rng.index(grammar.roles().len())].clone())
            .collect();
        let domain = op.domain();
        let value = domain[rng.index(domain.len())];
        Some(Comparison::Categorical {
            comparator,
            op,
            roles,
            value,
        })
    }
}

/// Single-comparison tree along minimal-size productions; value choices
/// stay random since they do not affect size.
fn greedy_minimal(grammar: &Grammar, rng: &mut RunRng) -> DerivationTree {
    let cmp = if !grammar.metrics().is_empty() {
        let comparator = NumComparator::ALL[rng.index(4)];
        let metric = grammar.metrics()[0];
        let role = grammar.roles()[rng.index(grammar.roles().len())].clone();
        let (lo, hi) = grammar.const_range(metric);
        Comparison::Numeric {
            comparator,
            metric,
            role,
            constant: rng.int_in(lo, hi),
        }
    } else {
        let op = *grammar
            .cat_ops()
            .iter()
            .min_by_key(|op| op.arity())
            .expect("at least one operator");
        let comparator = CatComparator::ALL[rng.index(2)];
        let roles = (0..op.arity())
            .map(|_| grammar.roles()[rng.index(grammar.roles().len())].clone())
            .collect();
        let domain = op.domain();
        Comparison::Categorical {
            comparator,
            op,
            roles,
            value: domain[rng.index(domain.len())],
        }
    };
    DerivationTree::new(vec![cmp], derive_consequent(rng))
}

/// Minimal cost of a `<cmp>` subtree under the grammar's enabled operators.
pub(crate) fn min_cmp_cost_for(metrics_enabled: bool, cat_ops: &[CatOp]) -> u32 {
    let mut min = u32::MAX;
    if metrics_enabled {
        min = min.min(5);
    }
    for op in cat_ops {
        min = min.min(4 + op.arity() as u32);
    }
    min
}
