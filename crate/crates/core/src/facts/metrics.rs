//! The four object-oriented metrics usable in numeric comparisons.

use serde::{Deserialize, Serialize};

use super::model::{Artifact, ArtifactId, ArtifactKind, CodeFactsGraph};
use super::FactsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    /// Number of declared non-constructor methods.
    NOM,
    /// Number of children through direct extends edges.
    NOC,
    /// Depth of the inheritance tree; the implicit universal root has
    /// depth 0, so a class with no explicit superclass has depth 1 and a
    /// base interface has depth 0.
    DIT,
    /// Declared methods plus distinct invoked (artifact, signature) pairs,
    /// one level deep.
    RFC,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::NOM, Metric::NOC, Metric::DIT, Metric::RFC];

    pub fn token(self) -> &'static str {
        match self {
            Metric::NOM => "NOM",
            Metric::NOC => "NOC",
            Metric::DIT => "DIT",
            Metric::RFC => "RFC",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "NOM" => Metric::NOM,
            "NOC" => Metric::NOC,
            "DIT" => Metric::DIT,
            "RFC" => Metric::RFC,
            _ => return None,
        })
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

pub fn compute_metric(
    metric: Metric,
    artifact: &ArtifactId,
    graph: &CodeFactsGraph,
) -> Result<u32, FactsError> {
    let idx = graph
        .idx(artifact)
        .ok_or_else(|| FactsError::UnknownArtifact(artifact.clone()))?;
    let art = graph.by_idx(idx);
    if art.is_external() {
        return Err(FactsError::MetricOnExternal {
            metric: metric.token().to_owned(),
            id: artifact.clone(),
        });
    }
    Ok(match metric {
        Metric::NOM => nom(art),
        Metric::NOC => graph.extends_children_of(idx).len() as u32,
        Metric::DIT => dit(graph, idx),
        Metric::RFC => rfc(art),
    })
}

fn nom(artifact: &Artifact) -> u32 {
    artifact.methods.iter().filter(|m| !m.is_constructor).count() as u32
}

pub(crate) fn dit(graph: &CodeFactsGraph, idx: usize) -> u32 {
    let art = graph.by_idx(idx);
    match art.kind {
        // Unknown definition: assume it sits directly under the root.
        ArtifactKind::External => 1,
        // Interfaces form their own hierarchy and do not descend from the root.
        ArtifactKind::Interface => art
            .extends
            .iter()
            .filter_map(|p| graph.idx(p))
            .map(|p| dit(graph, p))
            .max()
            .map(|d| d + 1)
            .unwrap_or(0),
        _ => art
            .extends
            .first()
            .and_then(|p| graph.idx(p))
            .map(|p| dit(graph, p) + 1)
            .unwrap_or(1),
    }
}

fn rfc(artifact: &Artifact) -> u32 {
    let mut remote: Vec<(&ArtifactId, &str)> = artifact
        .methods
        .iter()
        .flat_map(|m| m.invocations.iter().map(|(t, s)| (t, s.as_str())))
        .collect();
    remote.sort();
    remote.dedup();
    nom(artifact) + remote.len() as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facts::model::{Artifact, MethodFact, Visibility};

    fn method(name: &str, ctor: bool) -> MethodFact {
        MethodFact {
            name: name.to_owned(),
            signature: format!("{name}()"),
            is_constructor: ctor,
            visibility: Visibility::Public,
            is_static: false,
            return_type: None,
            param_types: Vec::new(),
            invocations: Vec::new(),
            instantiations: Vec::new(),
            uses_static_flag_guard: false,
        }
    }

    fn id(s: &str) -> ArtifactId {
        ArtifactId::new(s)
    }

    #[test]
    fn class_without_superclass_has_dit_one() {
        let graph = CodeFactsGraph::new(vec![Artifact::new("A", ArtifactKind::Class)]).unwrap();
        assert_eq!(compute_metric(Metric::DIT, &id("A"), &graph).unwrap(), 1);
    }

    #[test]
    fn base_interface_has_dit_zero() {
        let graph =
            CodeFactsGraph::new(vec![Artifact::new("I", ArtifactKind::Interface)]).unwrap();
        assert_eq!(compute_metric(Metric::DIT, &id("I"), &graph).unwrap(), 0);
    }

    #[test]
    fn implementors_are_not_children() {
        let mut a = Artifact::new("A", ArtifactKind::Class);
        a.implements.push(id("I"));
        let mut b = Artifact::new("B", ArtifactKind::Class);
        b.implements.push(id("I"));
        let mut c = Artifact::new("C", ArtifactKind::Class);
        c.implements.push(id("I"));
        let graph = CodeFactsGraph::new(vec![
            a,
            b,
            c,
            Artifact::new("I", ArtifactKind::Interface),
        ])
        .unwrap();
        assert_eq!(compute_metric(Metric::NOC, &id("I"), &graph).unwrap(), 0);
    }

    #[test]
    fn nom_excludes_constructors() {
        let mut a = Artifact::new("A", ArtifactKind::Class);
        a.methods.push(method("a", false));
        a.methods.push(method("b", false));
        let mut ctor = method("A", true);
        ctor.signature = "A()".into();
        a.methods.push(ctor);
        let graph = CodeFactsGraph::new(vec![a]).unwrap();
        assert_eq!(compute_metric(Metric::NOM, &id("A"), &graph).unwrap(), 2);
    }

    #[test]
    fn rfc_counts_distinct_targets_including_constructor_calls() {
        let mut a = Artifact::new("A", ArtifactKind::Class);
        let mut m1 = method("m1", false);
        m1.invocations.push((id("B"), "x()".into()));
        m1.invocations.push((id("B"), "y()".into()));
        let mut ctor = method("A", true);
        ctor.signature = "A()".into();
        ctor.invocations.push((id("B"), "x()".into()));
        ctor.invocations.push((id("A"), "m1()".into()));
        a.methods.push(m1);
        a.methods.push(ctor);
        let graph =
            CodeFactsGraph::new(vec![a, Artifact::external("B")]).unwrap();
        // NOM = 1, distinct pairs = {(B,x), (B,y), (A,m1)} = 3.
        assert_eq!(compute_metric(Metric::RFC, &id("A"), &graph).unwrap(), 4);
    }

    #[test]
    fn metric_on_external_is_an_error() {
        let graph = CodeFactsGraph::new(vec![Artifact::external("X")]).unwrap();
        assert!(matches!(
            compute_metric(Metric::NOM, &id("X"), &graph),
            Err(FactsError::MetricOnExternal { .. })
        ));
    }
}
