//! Role-mapped candidate generation: subgraph matching against per-pattern
//! role templates, declarative filtering, and negative-sample synthesis.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::facts::{eval_categorical, ArtifactId, CatOp, CodeFactsGraph, FactsError};
use crate::rng::RunRng;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed template: {0}")]
    Malformed(String),
    #[error("template roles must be non-empty and unique")]
    BadRoles,
    #[error("edge references undeclared role `{0}`")]
    UndeclaredRole(String),
    #[error("constraint uses unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("constraint operator `{op}` is not unary")]
    NonUnaryConstraint { op: String },
    #[error("constraint value `{value}` is outside the domain of {op}")]
    BadConstraintValue { op: String, value: String },
    #[error("candidate evaluation: {0}")]
    Facts(#[from] FactsError),
}

/// Structural relation required between two roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    /// Direct or transitive supertype relation.
    #[serde(rename = "inheritsOrImplements")]
    InheritsOrImplements,
    #[serde(rename = "invokes")]
    Invokes,
    #[serde(rename = "creates")]
    Creates,
    /// A field whose declared or element type is the target.
    #[serde(rename = "hasFieldOf")]
    HasFieldOf,
    /// Any of the other edge kinds.
    #[serde(rename = "any")]
    Any,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequiredEdge {
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ConstraintComparator {
    #[serde(rename = "=")]
    #[default]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

/// A unary predicate from the categorical-operator vocabulary applied to
/// one role of every candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleConstraint {
    pub role: String,
    pub operator: String,
    #[serde(default)]
    pub comparator: ConstraintComparator,
    pub value: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RoleTemplate {
    pub pattern: String,
    pub roles: Vec<String>,
    #[serde(default)]
    pub required_edges: Vec<RequiredEdge>,
    #[serde(default)]
    pub constraints: Vec<RoleConstraint>,
    /// Distinct roles may map to the same artifact.
    #[serde(default)]
    pub roles_may_overlap: bool,
    /// Role groups whose permutations describe the same candidate.
    #[serde(default)]
    pub symmetric_roles: Vec<Vec<String>>,
}

impl RoleTemplate {
    pub fn validate(&self) -> Result<(), TemplateError> {
        if self.roles.is_empty() {
            return Err(TemplateError::BadRoles);
        }
        let unique: BTreeSet<&String> = self.roles.iter().collect();
        if unique.len() != self.roles.len() {
            return Err(TemplateError::BadRoles);
        }
        for edge in &self.required_edges {
            for endpoint in [&edge.from, &edge.to] {
                if !self.roles.contains(endpoint) {
                    return Err(TemplateError::UndeclaredRole(endpoint.clone()));
                }
            }
        }
        for group in &self.symmetric_roles {
            for role in group {
                if !self.roles.contains(role) {
                    return Err(TemplateError::UndeclaredRole(role.clone()));
                }
            }
        }
        for c in &self.constraints {
            if !self.roles.contains(&c.role) {
                return Err(TemplateError::UndeclaredRole(c.role.clone()));
            }
            let op = CatOp::from_name(&c.operator)
                .ok_or_else(|| TemplateError::UnknownOperator(c.operator.clone()))?;
            if op.arity() != 1 {
                return Err(TemplateError::NonUnaryConstraint {
                    op: c.operator.clone(),
                });
            }
            if op.value_from_token(&c.value).is_none() {
                return Err(TemplateError::BadConstraintValue {
                    op: c.operator.clone(),
                    value: c.value.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let text = std::fs::read_to_string(path)?;
        let template: RoleTemplate =
            serde_json::from_str(&text).map_err(|e| TemplateError::Malformed(e.to_string()))?;
        template.validate()?;
        Ok(template)
    }
}

/// A pattern name plus a role-to-artifact mapping; the unit that gets
/// classified.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Candidate {
    pub pattern: String,
    pub role_map: BTreeMap<String, ArtifactId>,
}

impl Candidate {
    pub fn artifact(&self, role: &str) -> Option<&ArtifactId> {
        self.role_map.get(role)
    }

    /// Stable textual form used for ordering and deduplication.
    pub fn serialized(&self) -> String {
        self.role_map
            .iter()
            .map(|(r, a)| format!("{r}={a}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Edge adjacency resolved against a graph, one entry per edge kind.
struct EdgeCheck<'g> {
    graph: &'g CodeFactsGraph,
}

impl EdgeCheck<'_> {
    fn holds(&self, kind: EdgeKind, from: usize, to: usize) -> bool {
        match kind {
            EdgeKind::InheritsOrImplements => self.graph.is_ancestor(from, to),
            EdgeKind::Invokes => self.graph.invocation_targets(from).binary_search(&to).is_ok(),
            EdgeKind::Creates => self.graph.creation_targets(from).binary_search(&to).is_ok(),
            EdgeKind::HasFieldOf => self
                .graph
                .field_type_targets(from)
                .binary_search(&to)
                .is_ok(),
            EdgeKind::Any => {
                self.holds(EdgeKind::InheritsOrImplements, from, to)
                    || self.holds(EdgeKind::Invokes, from, to)
                    || self.holds(EdgeKind::Creates, from, to)
                    || self.holds(EdgeKind::HasFieldOf, from, to)
            }
        }
    }
}

/// Enumerates every role mapping over non-external artifacts satisfying all
/// required edges, in deterministic order (sorted by serialized role map).
///
/// Backtracking assigns roles in ascending candidate-domain order and
/// checks edges as soon as both endpoints are bound.
pub fn generate_candidates(
    graph: &CodeFactsGraph,
    template: &RoleTemplate,
) -> Result<Vec<Candidate>, TemplateError> {
    template.validate()?;
    let domain = graph.internal_indices();
    let n_roles = template.roles.len();
    let check = EdgeCheck { graph };

    // Role ordering: ascending domain size. Domains only differ when a role
    // has a required edge with at least one endpoint fixed, so approximate
    // by most-constrained-first (more incident edges first).
    let mut order: Vec<usize> = (0..n_roles).collect();
    let incident = |role: &String| {
        template
            .required_edges
            .iter()
            .filter(|e| &e.from == role || &e.to == role)
            .count()
    };
    order.sort_by_key(|&i| std::cmp::Reverse(incident(&template.roles[i])));

    let edges_idx: Vec<(usize, usize, EdgeKind)> = template
        .required_edges
        .iter()
        .map(|e| {
            let from = template.roles.iter().position(|r| r == &e.from).unwrap();
            let to = template.roles.iter().position(|r| r == &e.to).unwrap();
            (from, to, e.kind)
        })
        .collect();

    let mut assignment: Vec<Option<usize>> = vec![None; n_roles];
    let mut results = Vec::new();
    backtrack(
        &order,
        0,
        &domain,
        &edges_idx,
        &check,
        template.roles_may_overlap,
        &mut assignment,
        &mut |assignment| {
            let role_map = template
                .roles
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let idx = assignment[i].expect("complete assignment");
                    (r.clone(), graph.by_idx(idx).id.clone())
                })
                .collect();
            results.push(Candidate {
                pattern: template.pattern.clone(),
                role_map,
            });
        },
    );
    results.sort_by_key(Candidate::serialized);
    results.dedup();
    Ok(results)
}

#[allow(clippy::too_many_arguments)]
fn backtrack(
    order: &[usize],
    depth: usize,
    domain: &[usize],
    edges: &[(usize, usize, EdgeKind)],
    check: &EdgeCheck,
    overlap_allowed: bool,
    assignment: &mut Vec<Option<usize>>,
    emit: &mut impl FnMut(&[Option<usize>]),
) {
    if depth == order.len() {
        emit(assignment);
        return;
    }
    let role = order[depth];
    'candidates: for &artifact in domain {
        if !overlap_allowed && assignment.iter().flatten().any(|&a| a == artifact) {
            continue;
        }
        assignment[role] = Some(artifact);
        for &(from, to, kind) in edges {
            if let (Some(f), Some(t)) = (assignment[from], assignment[to]) {
                if !check.holds(kind, f, t) {
                    assignment[role] = None;
                    continue 'candidates;
                }
            }
        }
        backtrack(
            order,
            depth + 1,
            domain,
            edges,
            check,
            overlap_allowed,
            assignment,
            emit,
        );
        assignment[role] = None;
    }
}

/// Removes candidates failing any per-role constraint, then role-permutation
/// duplicates within symmetric groups. Order is preserved otherwise.
pub fn filter_candidates(
    candidates: Vec<Candidate>,
    template: &RoleTemplate,
    graph: &CodeFactsGraph,
) -> Result<Vec<Candidate>, TemplateError> {
    let mut kept = Vec::with_capacity(candidates.len());
    'outer: for candidate in candidates {
        for c in &template.constraints {
            let op = CatOp::from_name(&c.operator)
                .ok_or_else(|| TemplateError::UnknownOperator(c.operator.clone()))?;
            let expected = op.value_from_token(&c.value).ok_or_else(|| {
                TemplateError::BadConstraintValue {
                    op: c.operator.clone(),
                    value: c.value.clone(),
                }
            })?;
            let Some(artifact) = candidate.artifact(&c.role) else {
                continue 'outer;
            };
            let actual = eval_categorical(op, std::slice::from_ref(artifact), graph)?;
            let holds = match c.comparator {
                ConstraintComparator::Eq => actual == expected,
                ConstraintComparator::Ne => actual != expected,
            };
            if !holds {
                continue 'outer;
            }
        }
        kept.push(candidate);
    }
    if template.symmetric_roles.is_empty() {
        return Ok(kept);
    }
    let mut seen = BTreeSet::new();
    let mut deduped = Vec::with_capacity(kept.len());
    for candidate in kept {
        let key = symmetric_key(&candidate, template);
        if seen.insert(key) {
            deduped.push(candidate);
        }
    }
    Ok(deduped)
}

/// Canonical key with symmetric-group assignments sorted, so permutations
/// within a group collapse.
fn symmetric_key(candidate: &Candidate, template: &RoleTemplate) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut grouped: BTreeSet<&String> = BTreeSet::new();
    for group in &template.symmetric_roles {
        let mut artifacts: Vec<&str> = group
            .iter()
            .filter_map(|r| candidate.artifact(r).map(ArtifactId::as_str))
            .collect();
        artifacts.sort_unstable();
        parts.push(format!("[{}]", artifacts.join(",")));
        grouped.extend(group.iter());
    }
    for (role, artifact) in &candidate.role_map {
        if !grouped.contains(role) {
            parts.push(format!("{role}={artifact}"));
        }
    }
    parts.join(";")
}

/// Derives structurally plausible negatives from positives by swapping one
/// role to a template-edge-compatible artifact not present in the positive
/// set. At most `max_per_positive` negatives per positive, deduplicated
/// globally, deterministic under a fixed seed.
pub fn generate_negatives(
    positives: &[Candidate],
    graph: &CodeFactsGraph,
    template: &RoleTemplate,
    max_per_positive: usize,
    rng: &mut RunRng,
) -> Result<Vec<Candidate>, TemplateError> {
    template.validate()?;
    assert!(max_per_positive >= 1, "max_per_positive must be >= 1");
    let check = EdgeCheck { graph };
    let positive_keys: BTreeSet<String> = positives.iter().map(Candidate::serialized).collect();
    let edges_idx: Vec<(usize, usize, EdgeKind)> = template
        .required_edges
        .iter()
        .map(|e| {
            let from = template.roles.iter().position(|r| r == &e.from).unwrap();
            let to = template.roles.iter().position(|r| r == &e.to).unwrap();
            (from, to, e.kind)
        })
        .collect();
    let domain = graph.internal_indices();

    let mut seen = positive_keys.clone();
    let mut negatives = Vec::new();
    for positive in positives {
        let base: Vec<usize> = template
            .roles
            .iter()
            .map(|r| {
                positive
                    .artifact(r)
                    .and_then(|a| graph.idx(a))
                    .expect("positive candidate valid for graph")
            })
            .collect();
        // Enumerate all valid single-role swaps in deterministic order,
        // then sample without replacement.
        let mut swaps: Vec<(usize, usize)> = Vec::new();
        for role_pos in 0..template.roles.len() {
            for &replacement in &domain {
                if replacement == base[role_pos] {
                    continue;
                }
                let mut mutated = base.clone();
                mutated[role_pos] = replacement;
                if !template.roles_may_overlap {
                    let unique: BTreeSet<usize> = mutated.iter().copied().collect();
                    if unique.len() != mutated.len() {
                        continue;
                    }
                }
                if edges_idx
                    .iter()
                    .all(|&(f, t, k)| check.holds(k, mutated[f], mutated[t]))
                {
                    swaps.push((role_pos, replacement));
                }
            }
        }
        let mut produced = 0;
        while produced < max_per_positive && !swaps.is_empty() {
            let pick = rng.index(swaps.len());
            let (role_pos, replacement) = swaps.swap_remove(pick);
            let mut mutated = base.clone();
            mutated[role_pos] = replacement;
            let candidate = Candidate {
                pattern: template.pattern.clone(),
                role_map: template
                    .roles
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (r.clone(), graph.by_idx(mutated[i]).id.clone()))
                    .collect(),
            };
            if seen.insert(candidate.serialized()) {
                negatives.push(candidate);
                produced += 1;
            }
        }
    }
    Ok(negatives)
}

/// Checks that every role of the template is mapped to a known,
/// non-external artifact.
pub fn validate_candidate(
    candidate: &Candidate,
    roles: &[String],
    graph: &CodeFactsGraph,
) -> Result<(), TemplateError> {
    for role in roles {
        let Some(artifact) = candidate.artifact(role) else {
            return Err(TemplateError::Malformed(format!(
                "candidate is missing role `{role}`"
            )));
        };
        match graph.get(artifact) {
            None => {
                return Err(TemplateError::Malformed(format!(
                    "candidate artifact `{artifact}` is not in the graph"
                )))
            }
            Some(a) if a.is_external() => {
                return Err(TemplateError::Malformed(format!(
                    "candidate artifact `{artifact}` is external"
                )))
            }
            Some(_) => {}
        }
    }
    Ok(())
}
