//! Labelled sample sets and rule evaluation over them.
//!
//! Two evaluation paths exist. [`matches`] evaluates a rule directly
//! against one candidate through the facts operators; it backs
//! classification of new candidates. [`DatasetEval`] precomputes every
//! (operator, role-tuple) value per sample once, so the evolutionary loop
//! evaluates rules with array lookups. Both paths are built from the same
//! operator primitives.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::candidates::Candidate;
use crate::facts::{compute_metric, eval_categorical, ArtifactId, CatValue, CodeFactsGraph};

use super::rule::{CatComparator, Comparison, Consequent, NumComparator, Rule, RuleStats};
use super::{Grammar, GrammarError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "positive")]
    Positive,
    #[serde(rename = "negative")]
    Negative,
}

impl Label {
    /// The class correspondence: aPattern describes positives.
    pub fn corresponds(self, consequent: Consequent) -> bool {
        matches!(
            (self, consequent),
            (Label::Positive, Consequent::APattern) | (Label::Negative, Consequent::NotAPattern)
        )
    }
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub candidate: Candidate,
    pub label: Label,
    /// Index into the dataset's graph list.
    pub graph: usize,
}

/// Labelled candidates plus the graphs they live in.
///
/// Every sample access during evaluation is counted, which lets tests prove
/// that training never touches held-out samples.
#[derive(Debug)]
pub struct Dataset {
    graphs: Vec<Arc<CodeFactsGraph>>,
    samples: Vec<Sample>,
    access_log: Vec<AtomicU64>,
}

impl Dataset {
    pub fn new(graphs: Vec<Arc<CodeFactsGraph>>, samples: Vec<Sample>) -> Result<Self, GrammarError> {
        if samples.is_empty() {
            return Err(GrammarError::EmptyDataset);
        }
        for s in &samples {
            let graph = graphs.get(s.graph).ok_or_else(|| {
                GrammarError::BadCandidateArtifact(
                    s.candidate.serialized(),
                    format!("graph index {} out of range", s.graph),
                )
            })?;
            for (role, artifact) in &s.candidate.role_map {
                match graph.get(artifact) {
                    None => {
                        return Err(GrammarError::BadCandidateArtifact(
                            artifact.as_str().to_owned(),
                            format!("not in graph (role `{role}`)"),
                        ))
                    }
                    Some(a) if a.is_external() => {
                        return Err(GrammarError::BadCandidateArtifact(
                            artifact.as_str().to_owned(),
                            format!("external artifact bound to role `{role}`"),
                        ))
                    }
                    Some(_) => {}
                }
            }
        }
        let access_log = (0..samples.len()).map(|_| AtomicU64::new(0)).collect();
        Ok(Self {
            graphs,
            samples,
            access_log,
        })
    }

    /// Dataset over one graph.
    pub fn single(
        graph: Arc<CodeFactsGraph>,
        labelled: Vec<(Candidate, Label)>,
    ) -> Result<Self, GrammarError> {
        let samples = labelled
            .into_iter()
            .map(|(candidate, label)| Sample {
                candidate,
                label,
                graph: 0,
            })
            .collect();
        Self::new(vec![graph], samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &Sample {
        &self.samples[i]
    }

    pub fn graph_of(&self, sample: usize) -> &CodeFactsGraph {
        &self.graphs[self.samples[sample].graph]
    }

    pub fn graphs(&self) -> &[Arc<CodeFactsGraph>] {
        &self.graphs
    }

    pub fn all_indices(&self) -> Vec<u32> {
        (0..self.samples.len() as u32).collect()
    }

    pub fn label_counts(&self, indices: &[u32]) -> (u32, u32) {
        let mut pos = 0;
        let mut neg = 0;
        for &i in indices {
            match self.samples[i as usize].label {
                Label::Positive => pos += 1,
                Label::Negative => neg += 1,
            }
        }
        (pos, neg)
    }

    /// Number of evaluation touches recorded for one sample.
    pub fn access_count(&self, sample: usize) -> u64 {
        self.access_log[sample].load(Ordering::Relaxed)
    }

    fn touch(&self, sample: usize) {
        self.access_log[sample].fetch_add(1, Ordering::Relaxed);
    }
}

fn role_artifact<'c>(candidate: &'c Candidate, role: &str) -> &'c ArtifactId {
    candidate
        .artifact(role)
        .expect("candidate validated against grammar roles")
}

fn eval_comparison(c: &Comparison, candidate: &Candidate, graph: &CodeFactsGraph) -> bool {
    match c {
        Comparison::Numeric {
            comparator,
            metric,
            role,
            constant,
        } => {
            let artifact = role_artifact(candidate, role);
            let value = compute_metric(*metric, artifact, graph)
                .expect("candidate artifacts are internal");
            comparator.holds(i64::from(value), *constant)
        }
        Comparison::Categorical {
            comparator,
            op,
            roles,
            value,
        } => {
            let args: Vec<ArtifactId> = roles
                .iter()
                .map(|r| role_artifact(candidate, r).clone())
                .collect();
            let actual =
                eval_categorical(*op, &args, graph).expect("candidate artifacts are internal");
            comparator.holds(actual == *value)
        }
    }
}

/// True when every comparison of the rule holds for the candidate.
pub fn matches(rule: &Rule, candidate: &Candidate, graph: &CodeFactsGraph) -> bool {
    rule.antecedent
        .iter()
        .all(|c| eval_comparison(c, candidate, graph))
}

/// Direct-evaluation counting over the given sample indices.
pub fn count_matches(
    antecedent: &[Comparison],
    consequent: Consequent,
    dataset: &Dataset,
    indices: &[u32],
) -> RuleStats {
    let mut matched = 0;
    let mut correct = 0;
    for &i in indices {
        let sample = &dataset.samples[i as usize];
        dataset.touch(i as usize);
        let graph = dataset.graph_of(i as usize);
        if antecedent
            .iter()
            .all(|c| eval_comparison(c, &sample.candidate, graph))
        {
            matched += 1;
            if sample.label.corresponds(consequent) {
                correct += 1;
            }
        }
    }
    RuleStats {
        matched,
        correct,
        dataset_len: indices.len() as u32,
    }
}

/// Fraction of samples matched by both the antecedent and the consequent's
/// class.
pub fn support(rule: &Rule, dataset: &Dataset) -> f64 {
    count_matches(
        &rule.antecedent,
        rule.consequent,
        dataset,
        &dataset.all_indices(),
    )
    .support()
}

/// Fraction of antecedent-matching samples whose label corresponds to the
/// consequent; 0 when nothing matches the antecedent.
pub fn confidence(rule: &Rule, dataset: &Dataset) -> f64 {
    count_matches(
        &rule.antecedent,
        rule.consequent,
        dataset,
        &dataset.all_indices(),
    )
    .confidence()
}

/// Precomputed operator values for every sample of a dataset under one
/// grammar. Building it touches every sample once; evaluating a rule
/// afterwards is a table lookup per comparison.
pub struct DatasetEval<'a> {
    dataset: &'a Dataset,
    grammar: &'a Grammar,
    num: Vec<i64>,
    cat: Vec<CatValue>,
    num_slots: usize,
    cat_slots: usize,
    /// Slot base per enabled categorical operator, in grammar order.
    cat_base: Vec<usize>,
    built: Vec<bool>,
}

impl<'a> DatasetEval<'a> {
    /// Precomputes value tables for every sample.
    pub fn build(grammar: &'a Grammar, dataset: &'a Dataset) -> Result<Self, GrammarError> {
        let all = dataset.all_indices();
        Self::build_for(grammar, dataset, &all)
    }

    /// Precomputes value tables for the given samples only. Other samples
    /// are never read, which keeps held-out folds untouched during
    /// training; evaluating them through this table is a logic error.
    pub fn build_for(
        grammar: &'a Grammar,
        dataset: &'a Dataset,
        indices: &[u32],
    ) -> Result<Self, GrammarError> {
        let n_roles = grammar.roles().len();
        let num_slots = grammar.metrics().len() * n_roles;
        let mut cat_base = Vec::with_capacity(grammar.cat_ops().len());
        let mut cat_slots = 0;
        for op in grammar.cat_ops() {
            cat_base.push(cat_slots);
            cat_slots += n_roles.pow(op.arity() as u32);
        }

        let n = dataset.len();
        let mut built = vec![false; n];
        for &i in indices {
            built[i as usize] = true;
        }
        let mut num = vec![0i64; n * num_slots];
        let mut cat: Vec<CatValue> = vec![CatValue::Bool(false); n * cat_slots];
        for (idx, sample) in dataset.samples.iter().enumerate() {
            if !built[idx] {
                continue;
            }
            let mut num_row = Vec::with_capacity(num_slots);
            let mut cat_row = Vec::with_capacity(cat_slots);
            let graph = &dataset.graphs[sample.graph];
            let artifacts: Vec<&ArtifactId> = grammar
                .roles()
                .iter()
                .map(|role| {
                    sample
                        .candidate
                        .artifact(role)
                        .ok_or_else(|| GrammarError::MissingRole(role.clone()))
                })
                .collect::<Result<_, _>>()?;
            for metric in grammar.metrics() {
                for artifact in &artifacts {
                    let v = compute_metric(*metric, artifact, graph).map_err(|e| {
                        GrammarError::BadCandidateArtifact(
                            artifact.as_str().to_owned(),
                            e.to_string(),
                        )
                    })?;
                    num_row.push(i64::from(v));
                }
            }
            for op in grammar.cat_ops() {
                let arity = op.arity();
                let combos = n_roles.pow(arity as u32);
                let mut args = vec![artifacts[0].clone(); arity];
                for combo in 0..combos {
                    let mut rest = combo;
                    for slot in args.iter_mut() {
                        *slot = artifacts[rest % n_roles].clone();
                        rest /= n_roles;
                    }
                    let v = eval_categorical(*op, &args, graph).map_err(|e| {
                        GrammarError::BadCandidateArtifact(
                            args[0].as_str().to_owned(),
                            e.to_string(),
                        )
                    })?;
                    cat_row.push(v);
                }
            }
            num[idx * num_slots..(idx + 1) * num_slots].clone_from_slice(&num_row);
            cat[idx * cat_slots..(idx + 1) * cat_slots].clone_from_slice(&cat_row);
        }
        Ok(Self {
            dataset,
            grammar,
            num,
            cat,
            num_slots,
            cat_slots,
            cat_base,
            built,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    pub fn grammar(&self) -> &Grammar {
        self.grammar
    }

    fn compile(&self, antecedent: &[Comparison]) -> Result<Vec<CompiledCmp>, GrammarError> {
        let n_roles = self.grammar.roles().len();
        antecedent
            .iter()
            .map(|c| match c {
                Comparison::Numeric {
                    comparator,
                    metric,
                    role,
                    constant,
                } => {
                    let metric_pos = self
                        .grammar
                        .metrics()
                        .iter()
                        .position(|m| m == metric)
                        .ok_or_else(|| GrammarError::OperatorDisabled(metric.token().into()))?;
                    let role_pos = self
                        .grammar
                        .role_index(role)
                        .ok_or_else(|| GrammarError::UnknownRole(role.clone()))?;
                    Ok(CompiledCmp::Num {
                        slot: metric_pos * n_roles + role_pos as usize,
                        comparator: *comparator,
                        constant: *constant,
                    })
                }
                Comparison::Categorical {
                    comparator,
                    op,
                    roles,
                    value,
                } => {
                    let op_pos = self
                        .grammar
                        .cat_ops()
                        .iter()
                        .position(|o| o == op)
                        .ok_or_else(|| GrammarError::OperatorDisabled(op.name().into()))?;
                    let mut offset = 0;
                    let mut stride = 1;
                    for role in roles {
                        let role_pos = self
                            .grammar
                            .role_index(role)
                            .ok_or_else(|| GrammarError::UnknownRole(role.clone()))?;
                        offset += stride * role_pos as usize;
                        stride *= n_roles;
                    }
                    Ok(CompiledCmp::Cat {
                        slot: self.cat_base[op_pos] + offset,
                        comparator: *comparator,
                        value: *value,
                    })
                }
            })
            .collect()
    }

    fn matches_compiled(&self, compiled: &[CompiledCmp], sample: usize) -> bool {
        compiled.iter().all(|c| match c {
            CompiledCmp::Num {
                slot,
                comparator,
                constant,
            } => comparator.holds(self.num[sample * self.num_slots + slot], *constant),
            CompiledCmp::Cat {
                slot,
                comparator,
                value,
            } => comparator.holds(self.cat[sample * self.cat_slots + slot] == *value),
        })
    }

    /// Evaluates a rule over the given sample indices.
    pub fn evaluate_on(
        &self,
        antecedent: &[Comparison],
        consequent: Consequent,
        indices: &[u32],
    ) -> Result<RuleStats, GrammarError> {
        let compiled = self.compile(antecedent)?;
        let mut matched = 0;
        let mut correct = 0;
        for &i in indices {
            let i = i as usize;
            debug_assert!(self.built[i], "sample {i} was not built into this table");
            self.dataset.touch(i);
            if self.matches_compiled(&compiled, i) {
                matched += 1;
                if self.dataset.samples[i].label.corresponds(consequent) {
                    correct += 1;
                }
            }
        }
        Ok(RuleStats {
            matched,
            correct,
            dataset_len: indices.len() as u32,
        })
    }
}

enum CompiledCmp {
    Num {
        slot: usize,
        comparator: NumComparator,
        constant: i64,
    },
    Cat {
        slot: usize,
        comparator: CatComparator,
        value: CatValue,
    },
}
