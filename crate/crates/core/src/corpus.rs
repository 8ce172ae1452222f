//! Synthetic corpora and random fact graphs.
//!
//! The singleton corpus is built from one class-shape specification and
//! rendered two ways: directly as a facts graph, or as Java source files
//! for end-to-end pipeline runs. A class is a positive example exactly
//! when it combines a private constructor with a static field of its own
//! type; negatives drop one or both of those facts. All other structure
//! (extra methods, finality, a base class, delegation to a helper) is
//! uncorrelated noise.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::candidates::Candidate;
use crate::facts::{
    Artifact, ArtifactId, ArtifactKind, CodeFactsGraph, FieldFact, InstGuard, MethodFact,
    Visibility,
};
use crate::grammar::Label;
use crate::rng::RunRng;

#[derive(Debug, Clone)]
pub struct SingletonClassSpec {
    pub name: String,
    pub private_ctor: bool,
    pub static_self_field: bool,
    pub is_final: bool,
    pub extends_base: bool,
    pub extra_methods: usize,
    pub delegates_to_util: bool,
}

impl SingletonClassSpec {
    pub fn label(&self) -> Label {
        if self.private_ctor && self.static_self_field {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

#[derive(Debug)]
pub struct SingletonCorpus {
    pub graph: Arc<CodeFactsGraph>,
    pub samples: Vec<(Candidate, Label)>,
    pub specs: Vec<SingletonClassSpec>,
}

/// Specifications for `positives` positive classes and `negatives`
/// negatives split evenly across three families: public ctor with a static
/// self field, private ctor without one, and plain classes with neither.
pub fn singleton_specs(seed: u64, positives: usize, negatives: usize) -> Vec<SingletonClassSpec> {
    let mut rng = RunRng::seeded(seed);
    let mut specs = Vec::with_capacity(positives + negatives);
    for i in 0..positives + negatives {
        let (private_ctor, static_self_field) = if i < positives {
            (true, true)
        } else {
            match (i - positives) % 3 {
                0 => (false, true),
                1 => (true, false),
                _ => (false, false),
            }
        };
        specs.push(SingletonClassSpec {
            name: format!("Conf{i:03}"),
            private_ctor,
            static_self_field,
            is_final: rng.coin(0.35),
            extends_base: rng.coin(0.3),
            extra_methods: rng.index(5),
            delegates_to_util: rng.coin(0.4),
        });
    }
    specs
}

fn method_fact(name: &str, visibility: Visibility, is_static: bool) -> MethodFact {
    MethodFact {
        name: name.to_owned(),
        signature: format!("{name}()"),
        is_constructor: false,
        visibility,
        is_static,
        return_type: None,
        param_types: Vec::new(),
        invocations: Vec::new(),
        instantiations: Vec::new(),
        uses_static_flag_guard: false,
    }
}

fn spec_to_artifact(spec: &SingletonClassSpec) -> Artifact {
    let id = ArtifactId::new(spec.name.clone());
    let mut artifact = Artifact::new(spec.name.clone(), ArtifactKind::Class);
    artifact.is_final = spec.is_final;
    if spec.extends_base {
        artifact.extends.push(ArtifactId::new("Base"));
    }
    if spec.static_self_field {
        artifact.fields.push(FieldFact {
            name: "instance".to_owned(),
            declared_type: id.clone(),
            element_type: None,
            visibility: Visibility::Private,
            is_static: true,
            initialized_with_new: true,
        });
    }
    let mut ctor = MethodFact {
        name: spec.name.clone(),
        signature: format!("{}()", spec.name),
        is_constructor: true,
        visibility: if spec.private_ctor {
            Visibility::Private
        } else {
            Visibility::Public
        },
        is_static: false,
        return_type: None,
        param_types: Vec::new(),
        invocations: Vec::new(),
        instantiations: Vec::new(),
        uses_static_flag_guard: false,
    };
    if spec.delegates_to_util {
        ctor.invocations
            .push((ArtifactId::new("Util"), "ping()".to_owned()));
    }
    artifact.methods.push(ctor);
    if spec.static_self_field {
        let mut getter = method_fact("current", Visibility::Public, true);
        getter.return_type = Some(id.clone());
        artifact.methods.push(getter);
    }
    for i in 0..spec.extra_methods {
        artifact
            .methods
            .push(method_fact(&format!("work{i}"), Visibility::Public, false));
    }
    artifact
}

/// Builds the corpus directly as a facts graph with one candidate per
/// generated class.
pub fn singleton_corpus(seed: u64, positives: usize, negatives: usize) -> SingletonCorpus {
    let specs = singleton_specs(seed, positives, negatives);
    let mut artifacts: Vec<Artifact> = specs.iter().map(spec_to_artifact).collect();
    artifacts.push(Artifact::new("Base", ArtifactKind::Class));
    let mut util = Artifact::new("Util", ArtifactKind::Class);
    util.methods
        .push(method_fact("ping", Visibility::Public, true));
    artifacts.push(util);
    let graph = Arc::new(CodeFactsGraph::new(artifacts).expect("corpus graph is valid"));
    let samples = specs
        .iter()
        .map(|spec| {
            let candidate = Candidate {
                pattern: "singleton".to_owned(),
                role_map: [(
                    "singleton".to_owned(),
                    ArtifactId::new(spec.name.clone()),
                )]
                .into(),
            };
            (candidate, spec.label())
        })
        .collect();
    SingletonCorpus {
        graph,
        samples,
        specs,
    }
}

/// Renders the same corpus shape as Java source files under `dir`.
/// Returns the class names with their labels, in generation order.
pub fn write_singleton_corpus_java(
    dir: &Path,
    seed: u64,
    positives: usize,
    negatives: usize,
) -> std::io::Result<Vec<(String, Label)>> {
    let specs = singleton_specs(seed, positives, negatives);
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("Base.java"), "public class Base { }\n")?;
    std::fs::write(
        dir.join("Util.java"),
        "public class Util { public static void ping() { } }\n",
    )?;
    for spec in &specs {
        let mut out = Vec::new();
        let final_kw = if spec.is_final { "final " } else { "" };
        let extends = if spec.extends_base { " extends Base" } else { "" };
        writeln!(out, "public {final_kw}class {}{extends} {{", spec.name)?;
        if spec.static_self_field {
            writeln!(
                out,
                "    private static {n} instance = new {n}();",
                n = spec.name
            )?;
        }
        let ctor_vis = if spec.private_ctor { "private" } else { "public" };
        if spec.delegates_to_util {
            writeln!(out, "    {ctor_vis} {}() {{ Util.ping(); }}", spec.name)?;
        } else {
            writeln!(out, "    {ctor_vis} {}() {{ }}", spec.name)?;
        }
        if spec.static_self_field {
            writeln!(
                out,
                "    public static {n} current() {{ return instance; }}",
                n = spec.name
            )?;
        }
        for i in 0..spec.extra_methods {
            writeln!(out, "    public void work{i}() {{ }}")?;
        }
        writeln!(out, "}}")?;
        std::fs::write(dir.join(format!("{}.java", spec.name)), out)?;
    }
    Ok(specs.iter().map(|s| (s.name.clone(), s.label())).collect())
}

/// Random valid facts graph for oracle tests: mixed artifact kinds, acyclic
/// supertype edges, fields, methods, invocations and guarded creations.
pub fn random_graph(seed: u64, max_artifacts: usize) -> CodeFactsGraph {
    let mut rng = RunRng::seeded(seed);
    let n = 1 + rng.index(max_artifacts.max(1));
    let names: Vec<String> = (0..n).map(|i| format!("T{i:02}")).collect();
    let mut kinds = Vec::with_capacity(n);
    for _ in 0..n {
        let roll = rng.index(100);
        kinds.push(if roll < 12 {
            ArtifactKind::Interface
        } else if roll < 22 {
            ArtifactKind::AbsClass
        } else if roll < 27 {
            ArtifactKind::Enum
        } else if roll < 37 {
            ArtifactKind::External
        } else {
            ArtifactKind::Class
        });
    }
    let container = ArtifactId::new("List");

    let mut artifacts = Vec::with_capacity(n + 1);
    for i in 0..n {
        let mut artifact = Artifact::new(names[i].clone(), kinds[i]);
        if kinds[i] == ArtifactKind::External {
            artifacts.push(artifact);
            continue;
        }
        artifact.is_final = rng.coin(0.2);
        // Supertype edges point at earlier indices, so the relation is acyclic.
        if i > 0 {
            match kinds[i] {
                ArtifactKind::Interface => {
                    for j in 0..i {
                        if kinds[j] == ArtifactKind::Interface && rng.coin(0.15) {
                            artifact.extends.push(ArtifactId::new(names[j].clone()));
                        }
                    }
                }
                _ => {
                    let class_parents: Vec<usize> = (0..i)
                        .filter(|&j| {
                            matches!(kinds[j], ArtifactKind::Class | ArtifactKind::AbsClass)
                        })
                        .collect();
                    if !class_parents.is_empty() && rng.coin(0.4) {
                        let p = class_parents[rng.index(class_parents.len())];
                        artifact.extends.push(ArtifactId::new(names[p].clone()));
                    }
                    for j in 0..i {
                        if kinds[j] == ArtifactKind::Interface && rng.coin(0.2) {
                            artifact.implements.push(ArtifactId::new(names[j].clone()));
                        }
                    }
                }
            }
        }
        for f in 0..rng.index(3) {
            let target = rng.index(n);
            let is_container = rng.coin(0.25);
            artifact.fields.push(FieldFact {
                name: format!("f{f}"),
                declared_type: if is_container {
                    container.clone()
                } else {
                    ArtifactId::new(names[target].clone())
                },
                element_type: is_container.then(|| ArtifactId::new(names[target].clone())),
                visibility: [
                    Visibility::Private,
                    Visibility::Package,
                    Visibility::Protected,
                    Visibility::Public,
                ][rng.index(4)],
                is_static: rng.coin(0.3),
                initialized_with_new: rng.coin(0.4),
            });
        }
        if rng.coin(0.5) {
            let mut ctor = MethodFact {
                name: artifact.id.as_str().to_owned(),
                signature: format!("{}()", artifact.id),
                is_constructor: true,
                visibility: [Visibility::Private, Visibility::Public][rng.index(2)],
                is_static: false,
                return_type: None,
                param_types: Vec::new(),
                invocations: Vec::new(),
                instantiations: Vec::new(),
                uses_static_flag_guard: false,
            };
            if rng.coin(0.3) {
                ctor.instantiations
                    .push((ArtifactId::new(names[rng.index(n)].clone()), InstGuard::None));
            }
            artifact.methods.push(ctor);
        }
        for m in 0..rng.index(4) {
            let mut method = method_fact(&format!("m{m}"), Visibility::Public, rng.coin(0.3));
            if rng.coin(0.4) {
                method.return_type = Some(ArtifactId::new(names[rng.index(n)].clone()));
            }
            for _ in 0..rng.index(2) {
                method
                    .param_types
                    .push(ArtifactId::new(names[rng.index(n)].clone()));
            }
            method.signature = format!(
                "m{m}({})",
                method
                    .param_types
                    .iter()
                    .map(|p| p.as_str())
                    .collect::<Vec<_>>()
                    .join(",")
            );
            for _ in 0..rng.index(3) {
                method.invocations.push((
                    ArtifactId::new(names[rng.index(n)].clone()),
                    format!("m{}()", rng.index(4)),
                ));
            }
            if rng.coin(0.3) {
                let guard = [
                    InstGuard::None,
                    InstGuard::Conditional,
                    InstGuard::ExceptionGuarded,
                ][rng.index(3)];
                method
                    .instantiations
                    .push((ArtifactId::new(names[rng.index(n)].clone()), guard));
                method.uses_static_flag_guard = rng.coin(0.5);
            }
            artifact.methods.push(method);
        }
        artifacts.push(artifact);
    }
    artifacts.push(Artifact::external("List"));
    CodeFactsGraph::new(artifacts).expect("random graph construction keeps invariants")
}

/// A deterministic training repository over the in-memory singleton corpus.
pub fn singleton_repository(
    seed: u64,
    positives: usize,
    negatives: usize,
) -> crate::repository::LabeledRepository {
    let corpus = singleton_corpus(seed, positives, negatives);
    let samples = corpus
        .samples
        .iter()
        .map(|(candidate, label)| crate::repository::RepoSample {
            candidate: candidate.clone(),
            label: *label,
            project: "synthetic".to_owned(),
        })
        .collect();
    let mut projects = BTreeMap::new();
    projects.insert("synthetic".to_owned(), corpus.graph.clone());
    crate::repository::LabeledRepository::new("singleton".to_owned(), projects, samples)
        .expect("corpus repository is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_counts_and_labels() {
        let corpus = singleton_corpus(1, 30, 60);
        assert_eq!(corpus.samples.len(), 90);
        let pos = corpus
            .samples
            .iter()
            .filter(|(_, l)| *l == Label::Positive)
            .count();
        assert_eq!(pos, 30);
        // Spot-check the defining facts on one positive and one negative.
        let (cand, label) = &corpus.samples[0];
        assert_eq!(*label, Label::Positive);
        let art = corpus
            .graph
            .get(cand.artifact("singleton").unwrap())
            .unwrap();
        assert!(art
            .fields
            .iter()
            .any(|f| f.is_static && f.declared_type == art.id));
    }

    #[test]
    fn java_rendering_matches_graph_labels() {
        let dir = tempfile::tempdir().unwrap();
        let names = write_singleton_corpus_java(dir.path(), 7, 5, 9).unwrap();
        assert_eq!(names.len(), 14);
        let (graph, report) = crate::facts::extract_facts(dir.path(), &[]).unwrap();
        assert_eq!(report.files_parsed, 16); // 14 classes + Base + Util
        let in_memory = singleton_corpus(7, 5, 9);
        for (name, label) in &names {
            let id = ArtifactId::new(name.clone());
            let art = graph.get(&id).unwrap();
            let has_field = art
                .fields
                .iter()
                .any(|f| f.is_static && f.declared_type == id && f.initialized_with_new);
            let private_ctor = art
                .methods
                .iter()
                .any(|m| m.is_constructor && m.visibility == Visibility::Private);
            let derived = if has_field && private_ctor {
                Label::Positive
            } else {
                Label::Negative
            };
            assert_eq!(derived, *label, "label mismatch for {name}");
            // The in-memory corpus agrees with the extracted facts.
            let mem = in_memory.graph.get(&id).unwrap();
            assert_eq!(mem.is_final, art.is_final);
            assert_eq!(mem.extends, art.extends);
        }
    }

    #[test]
    fn random_graphs_are_valid_and_deterministic() {
        for seed in 0..30 {
            let g1 = random_graph(seed, 12);
            let g2 = random_graph(seed, 12);
            assert_eq!(
                crate::facts::to_canonical_json(&g1),
                crate::facts::to_canonical_json(&g2)
            );
            assert!(!g1.is_empty());
        }
    }
}
