//! Extraction and operator semantics pinned against the hand-traced
//! fixture corpora under `fixtures/`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use patdet::candidates::{generate_candidates, Candidate, EdgeKind, RequiredEdge, RoleTemplate};
use patdet::facts::{
    compute_metric, eval_categorical, extract_facts, ArtifactId, ArtifactKind, CatOp, CatValue,
    CodeFactsGraph, Metric, Visibility,
};
use patdet::grammar::{build_grammar, matches, parse_rule, Grammar};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn extract(name: &str) -> CodeFactsGraph {
    let (graph, report) = extract_facts(fixture(name), &[]).unwrap();
    assert!(
        report.files_skipped.is_empty(),
        "fixture {name} has unparsable files: {:?}",
        report.files_skipped
    );
    graph
}

fn id(s: &str) -> ArtifactId {
    ArtifactId::new(s)
}

fn cat(graph: &CodeFactsGraph, op: CatOp, args: &[&str]) -> CatValue {
    let args: Vec<ArtifactId> = args.iter().map(|a| id(a)).collect();
    eval_categorical(op, &args, graph).unwrap()
}

fn singleton_grammar() -> Grammar {
    build_grammar(
        &["singleton".to_owned()],
        &Metric::ALL,
        &CatOp::ALL,
        &BTreeMap::new(),
    )
    .unwrap()
}

fn single_role_candidate(artifact: &str) -> Candidate {
    Candidate {
        pattern: "singleton".to_owned(),
        role_map: [("singleton".to_owned(), id(artifact))].into(),
    }
}

#[test]
fn canonical_singleton_facts() {
    let graph = extract("singleton_canonical");
    let keeper = graph.get(&id("Keeper")).unwrap();
    assert_eq!(keeper.kind, ArtifactKind::Class);
    let ctor = keeper.methods.iter().find(|m| m.is_constructor).unwrap();
    assert_eq!(ctor.visibility, Visibility::Private);
    let field = keeper
        .fields
        .iter()
        .find(|f| f.is_static && f.declared_type == keeper.id)
        .unwrap();
    assert!(field.initialized_with_new);
    assert_eq!(compute_metric(Metric::DIT, &id("Keeper"), &graph).unwrap(), 1);
    assert_eq!(compute_metric(Metric::NOM, &id("Keeper"), &graph).unwrap(), 1);

    assert_eq!(
        cat(&graph, CatOp::CtorVisibility, &["Keeper"]),
        CatValue::Visibility(Visibility::Private)
    );
    // Self-aggregation is a private initialized attribute, not notLinked.
    assert_eq!(
        cat(&graph, CatOp::Aggregation, &["Keeper", "Keeper"]).token(),
        "private_init"
    );
    assert_eq!(
        cat(&graph, CatOp::StaticField, &["Keeper"]),
        CatValue::Bool(true)
    );
}

const RULE_POSITIVE: &str = "if ctorVisibility(singleton) != public \
     and aggregation(singleton,singleton) != notLinked \
     and DIT(singleton) < 2 then aPattern";
const RULE_NEGATIVE: &str = "if ctorVisibility(singleton) = public \
     and controlledExcept(singleton) = false \
     and controlledInit(singleton) = false then notAPattern";

#[test]
fn reference_rules_separate_the_singleton_fixtures() {
    let grammar = singleton_grammar();
    let rule_pos = parse_rule(RULE_POSITIVE, &grammar).unwrap();
    let rule_neg = parse_rule(RULE_NEGATIVE, &grammar).unwrap();

    let canonical = extract("singleton_canonical");
    let keeper = single_role_candidate("Keeper");
    assert!(matches(&rule_pos, &keeper, &canonical));
    assert!(!matches(&rule_neg, &keeper, &canonical));

    let public = extract("singleton_public");
    let open = single_role_candidate("Open");
    assert!(!matches(&rule_pos, &open, &public));
    assert!(matches(&rule_neg, &open, &public));
}

#[test]
fn reference_rules_render_token_for_token() {
    let grammar = singleton_grammar();
    let rule = parse_rule(RULE_POSITIVE, &grammar).unwrap();
    assert_eq!(
        rule.render(),
        "if ctorVisibility(singleton) != public and \
         aggregation(singleton,singleton) != notLinked and \
         DIT(singleton) < 2 then aPattern"
    );
    let rule = parse_rule(RULE_NEGATIVE, &grammar).unwrap();
    assert_eq!(
        rule.render(),
        "if ctorVisibility(singleton) = public and \
         controlledExcept(singleton) = false and \
         controlledInit(singleton) = false then notAPattern"
    );
}

#[test]
fn hierarchy_metrics_match_hand_derivation() {
    let graph = extract("hierarchy6");
    assert_eq!(graph.len(), 6);
    // B declares 2 methods and invokes 4 distinct signatures on E and F.
    assert_eq!(compute_metric(Metric::RFC, &id("B"), &graph).unwrap(), 6);
    assert_eq!(compute_metric(Metric::NOM, &id("B"), &graph).unwrap(), 2);
    // A has exactly the extends-children B and D.
    assert_eq!(compute_metric(Metric::NOC, &id("A"), &graph).unwrap(), 2);
    assert_eq!(compute_metric(Metric::NOC, &id("B"), &graph).unwrap(), 1);
    // C -> B -> A -> implicit root.
    assert_eq!(compute_metric(Metric::DIT, &id("C"), &graph).unwrap(), 3);
    assert_eq!(compute_metric(Metric::DIT, &id("A"), &graph).unwrap(), 1);
}

#[test]
fn adapter_method_on_basic_fixture_is_declared() {
    let graph = extract("adapter_basic");
    assert_eq!(
        cat(&graph, CatOp::AdapterMethod, &["Ad", "E", "T"]).token(),
        "decl"
    );
    assert_eq!(cat(&graph, CatOp::Delegates, &["Ad", "E"]), CatValue::Bool(true));
    assert_eq!(
        cat(&graph, CatOp::LinkArtefact, &["Ad", "T"]).token(),
        "directImpl"
    );
}

#[test]
fn illustrative_delegation_rule_phenotype() {
    let grammar = build_grammar(
        &[
            "adaptee".to_owned(),
            "adapter".to_owned(),
            "target".to_owned(),
        ],
        &Metric::ALL,
        &CatOp::ALL,
        &BTreeMap::new(),
    )
    .unwrap();
    let rule = parse_rule(
        "if delegates(adapter,adaptee) = true then aPattern",
        &grammar,
    )
    .unwrap();
    assert_eq!(rule.render(), "if delegates(adapter,adaptee) = true then aPattern");
    let graph = extract("adapter_basic");
    let candidate = Candidate {
        pattern: "adapter".to_owned(),
        role_map: [
            ("adapter".to_owned(), id("Ad")),
            ("adaptee".to_owned(), id("E")),
            ("target".to_owned(), id("T")),
        ]
        .into(),
    };
    assert!(matches(&rule, &candidate, &graph));
}

/// Hand-traced value for every categorical operator on the coverage corpus.
#[test]
fn operator_coverage_table() {
    let graph = extract("coverage");
    let table: &[(CatOp, &[&str], &str)] = &[
        (CatOp::IsFinal, &["Circle"], "true"),
        (CatOp::IsFinal, &["Renderer"], "false"),
        (CatOp::IsSubclass, &["Circle"], "true"),
        (CatOp::IsSubclass, &["Renderer"], "false"),
        (CatOp::IsSubclass, &["Drawing"], "true"),
        (CatOp::ControlledInit, &["Circle"], "true"),
        (CatOp::ControlledInit, &["Guard"], "false"),
        (CatOp::ControlledInit, &["Renderer"], "false"),
        (CatOp::ControlledExcept, &["Guard"], "true"),
        (CatOp::ControlledExcept, &["Circle"], "false"),
        (CatOp::Conglomeration, &["Circle"], "true"),
        (CatOp::Conglomeration, &["Renderer"], "false"),
        (CatOp::Returns, &["Renderer", "Shape"], "true"),
        (CatOp::Returns, &["Factory", "Renderer"], "true"),
        (CatOp::Returns, &["Renderer", "Circle"], "false"),
        (CatOp::Receives, &["Circle", "Renderer"], "true"),
        (CatOp::Receives, &["Renderer", "Circle"], "false"),
        (CatOp::CreateObj, &["Factory", "Renderer"], "true"),
        (CatOp::CreateObj, &["Circle", "Circle"], "true"),
        (CatOp::CreateObj, &["Renderer", "Factory"], "false"),
        (CatOp::Delegates, &["Circle", "Renderer"], "true"),
        (CatOp::Delegates, &["Factory", "Renderer"], "false"),
        (CatOp::SameElem, &["Circle", "Circle"], "true"),
        (CatOp::SameElem, &["Circle", "Renderer"], "false"),
        (CatOp::SameInterfaceContainer, &["Group", "Shape"], "true"),
        (CatOp::SameInterfaceContainer, &["HalfWrapper", "Shape"], "false"),
        (CatOp::TypeOf, &["Circle"], "class"),
        (CatOp::TypeOf, &["AbstractShape"], "absClass"),
        (CatOp::TypeOf, &["Shape"], "intface"),
        (CatOp::TypeOf, &["Mode"], "enum"),
        (CatOp::CtorVisibility, &["Circle"], "private"),
        (CatOp::CtorVisibility, &["Guard"], "public"),
        (CatOp::CtorVisibility, &["Renderer"], "public"),
        (CatOp::LinkMethod, &["Cell", "BaseCell"], "directOver"),
        (CatOp::LinkMethod, &["LeafCell", "BaseCell"], "indirOver"),
        (CatOp::LinkMethod, &["Wrapper", "Shape"], "directImpl"),
        (CatOp::LinkMethod, &["Circle", "Shape"], "indirImpl"),
        (CatOp::LinkMethod, &["AbstractShape", "Shape"], "notLinked"),
        (CatOp::LinkArtefact, &["Cell", "BaseCell"], "directInherit"),
        (CatOp::LinkArtefact, &["LeafCell", "BaseCell"], "indirInherit"),
        (CatOp::LinkArtefact, &["Group", "Shape"], "directImpl"),
        (CatOp::LinkArtefact, &["Circle", "Shape"], "indirImpl"),
        (CatOp::LinkArtefact, &["Factory", "Shape"], "notLinked"),
        (CatOp::Aggregation, &["Circle", "Renderer"], "private_init"),
        (CatOp::Aggregation, &["Adapter2", "Adaptee2"], "private_init"),
        (CatOp::Aggregation, &["Wrapper", "Shape"], "private_noInit"),
        (CatOp::Aggregation, &["Renderer", "Circle"], "notLinked"),
        (CatOp::AdapterMethod, &["Adapter2", "Adaptee2", "Target2"], "decl"),
        (CatOp::AdapterMethod, &["SubAdapter", "Adaptee2", "Target2"], "inhr"),
        (CatOp::AdapterMethod, &["Factory", "Renderer", "Shape"], "notLinked"),
        (CatOp::RedirectInFamily, &["Wrapper"], "multi"),
        (CatOp::RedirectInFamily, &["HalfWrapper"], "single"),
        (CatOp::RedirectInFamily, &["Circle"], "notLinked"),
        (CatOp::SameInterfaceInstance, &["HalfWrapper", "Shape"], "single"),
        (CatOp::SameInterfaceInstance, &["Wrapper", "Shape"], "multi"),
        (CatOp::SameInterfaceInstance, &["Group", "Shape"], "notLinked"),
        (CatOp::StaticField, &["Circle"], "true"),
        (CatOp::StaticField, &["Guard"], "false"),
        (CatOp::StaticFlag, &["Circle"], "true"),
        (CatOp::StaticFlag, &["Guard"], "true"),
        (CatOp::StaticFlag, &["Renderer"], "false"),
    ];
    let mut covered = std::collections::BTreeSet::new();
    for (op, args, expected) in table {
        let actual = cat(&graph, *op, args);
        assert_eq!(
            actual.token(),
            *expected,
            "{}({}) mismatch",
            op.name(),
            args.join(",")
        );
        covered.insert(op.name());
    }
    assert_eq!(covered.len(), CatOp::ALL.len());
}

#[test]
fn adapter_candidates_match_exhaustive_triple_enumeration() {
    let graph = extract("adapter_candidates");
    assert_eq!(graph.len(), 7);
    let template = RoleTemplate {
        pattern: "adapter".to_owned(),
        roles: vec![
            "adapter".to_owned(),
            "adaptee".to_owned(),
            "target".to_owned(),
        ],
        required_edges: vec![
            RequiredEdge {
                from: "adapter".to_owned(),
                to: "target".to_owned(),
                kind: EdgeKind::InheritsOrImplements,
            },
            RequiredEdge {
                from: "adapter".to_owned(),
                to: "adaptee".to_owned(),
                kind: EdgeKind::Invokes,
            },
        ],
        constraints: Vec::new(),
        roles_may_overlap: false,
        symmetric_roles: Vec::new(),
    };
    let candidates = generate_candidates(&graph, &template).unwrap();

    // Independent route: enumerate all ordered triples and check the edges
    // through the categorical operators.
    let ids: Vec<&ArtifactId> = graph
        .artifacts()
        .iter()
        .filter(|a| !a.is_external())
        .map(|a| &a.id)
        .collect();
    let mut expected = Vec::new();
    for adapter in &ids {
        for adaptee in &ids {
            for target in &ids {
                if adapter == adaptee || adapter == target || adaptee == target {
                    continue;
                }
                let inherits = cat(&graph, CatOp::LinkArtefact, &[adapter.as_str(), target.as_str()])
                    .token()
                    != "notLinked";
                let invokes =
                    cat(&graph, CatOp::Delegates, &[adapter.as_str(), adaptee.as_str()])
                        == CatValue::Bool(true);
                if inherits && invokes {
                    expected.push(((*adapter).clone(), (*adaptee).clone(), (*target).clone()));
                }
            }
        }
    }
    assert_eq!(expected.len(), 3);
    assert_eq!(candidates.len(), 3);
    for (adapter, adaptee, target) in &expected {
        assert!(candidates.iter().any(|c| {
            c.artifact("adapter") == Some(adapter)
                && c.artifact("adaptee") == Some(adaptee)
                && c.artifact("target") == Some(target)
        }));
    }
    let named: Vec<(&str, &str, &str)> = expected
        .iter()
        .map(|(a, e, t)| (a.as_str(), e.as_str(), t.as_str()))
        .collect();
    assert!(named.contains(&("A1", "E1", "T1")));
    assert!(named.contains(&("A2", "E1", "T1")));
    assert!(named.contains(&("A2", "E2", "T1")));
}

#[test]
fn all_shipped_templates_are_valid() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../templates");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let template = RoleTemplate::load(&path).unwrap();
        assert!(!template.roles.is_empty());
        count += 1;
    }
    assert_eq!(count, 15);
}
