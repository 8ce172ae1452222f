//! Classification strategies against hand-computed fixtures, plus pruning
//! behavior and model round-trips.

use std::collections::BTreeMap;
use std::sync::Arc;

use patdet::candidates::Candidate;
use patdet::classifier::{
    laplace, prune_database_coverage, rule_chi2_stats, sort_rules, DetectionModel, Strategy,
};
use patdet::facts::{Artifact, ArtifactId, ArtifactKind, CodeFactsGraph, Metric};
use patdet::grammar::{
    parse_rule, build_grammar, Consequent, Dataset, Grammar, Label, Rule, RuleStats,
};
use patdet::repository::{load_model, model_from_json, model_to_json, save_model};
use patdet::rng::RunRng;

fn grammar() -> Grammar {
    build_grammar(
        &["thing".to_owned()],
        &Metric::ALL,
        &patdet::facts::CatOp::ALL,
        &BTreeMap::new(),
    )
    .unwrap()
}

fn solo_graph() -> CodeFactsGraph {
    CodeFactsGraph::new(vec![Artifact::new("Solo", ArtifactKind::Class)]).unwrap()
}

fn solo_candidate() -> Candidate {
    Candidate {
        pattern: "probe".to_owned(),
        role_map: [("thing".to_owned(), ArtifactId::new("Solo"))].into(),
    }
}

/// An always-true rule distinguished from its siblings by the constant.
fn covering_rule(
    tag: i64,
    consequent: Consequent,
    matched: u32,
    correct: u32,
    n: u32,
    g: &Grammar,
) -> Rule {
    let text = format!("if NOM(thing) >= {} then {}", -tag, consequent.token());
    let mut rule = parse_rule(&text, g).unwrap();
    rule.stats = RuleStats {
        matched,
        correct,
        dataset_len: n,
    };
    rule
}

fn never_covering_rule(consequent: Consequent, g: &Grammar) -> Rule {
    let mut rule = parse_rule(
        &format!("if NOM(thing) < -5 then {}", consequent.token()),
        g,
    )
    .unwrap();
    rule.stats = RuleStats {
        matched: 1,
        correct: 1,
        dataset_len: 8,
    };
    rule
}

fn model_with(rules: Vec<Rule>, strategy: Strategy, n: u32, positives: u32) -> DetectionModel {
    let mut sorted = rules;
    sort_rules(&mut sorted);
    DetectionModel::new(
        "probe".to_owned(),
        vec!["thing".to_owned()],
        strategy,
        5,
        1,
        n,
        positives,
        sorted,
    )
}

/// The shared 8-sample fixture: four covering rules whose weighted
/// chi-squared sums disagree with both the single best rule and the
/// majority count.
///
/// Hand computation (n = 8, 4 positives):
///   R3 notAPattern a=2 j=2: chi2 = 8/3, max = 8/3, weighted = 8/3
///   R4 aPattern    a=5 j=4: chi2 = 4.8, max = 4.8, weighted = 4.8
///   R1 aPattern    a=4 j=3: chi2 = 2,   max = 8,   weighted = 0.5
///   R2 notAPattern a=4 j=3: same as R1
/// Sums: aPattern = 5.3, notAPattern = 0.5 + 8/3 = 19/6 ~ 3.1667.
fn chi2_fixture(g: &Grammar, flip: bool) -> Vec<Rule> {
    let (yes, no) = if flip {
        (Consequent::NotAPattern, Consequent::APattern)
    } else {
        (Consequent::APattern, Consequent::NotAPattern)
    };
    vec![
        covering_rule(1, yes, 4, 3, 8, g),
        covering_rule(2, no, 4, 3, 8, g),
        covering_rule(3, no, 2, 2, 8, g),
        covering_rule(4, yes, 5, 4, 8, g),
    ]
}

#[test]
fn no_covering_rule_yields_the_default_label() {
    let g = grammar();
    let model = model_with(
        vec![never_covering_rule(Consequent::APattern, &g)],
        Strategy::Maxl,
        8,
        4,
    );
    let verdict = model.classify(&solo_candidate(), &solo_graph());
    assert_eq!(verdict.label, Consequent::NotAPattern);
    assert!(verdict.explanation.is_empty());
}

#[test]
fn maxl_follows_the_highest_precedence_covering_rule() {
    let g = grammar();
    // conf 0.95 notAPattern outranks conf 0.9 aPattern.
    let model = model_with(
        vec![
            covering_rule(1, Consequent::APattern, 20, 18, 40, &g),
            covering_rule(2, Consequent::NotAPattern, 20, 19, 40, &g),
        ],
        Strategy::Maxl,
        40,
        20,
    );
    let verdict = model.classify(&solo_candidate(), &solo_graph());
    assert_eq!(verdict.label, Consequent::NotAPattern);
    assert_eq!(verdict.explanation.len(), 1);
    assert_eq!(
        model.rules[verdict.explanation[0]].rule.confidence(),
        0.95
    );
}

#[test]
fn dfml_takes_the_larger_partition() {
    let g = grammar();
    let model = model_with(
        vec![
            covering_rule(1, Consequent::APattern, 10, 8, 40, &g),
            covering_rule(2, Consequent::APattern, 10, 7, 40, &g),
            covering_rule(3, Consequent::APattern, 10, 6, 40, &g),
            covering_rule(4, Consequent::NotAPattern, 10, 9, 40, &g),
        ],
        Strategy::Dfml,
        40,
        20,
    );
    let verdict = model.classify(&solo_candidate(), &solo_graph());
    assert_eq!(verdict.label, Consequent::APattern);
    assert_eq!(verdict.explanation.len(), 3);
}

#[test]
fn weighted_chi2_fixture_matches_hand_computation() {
    let g = grammar();
    let model = model_with(chi2_fixture(&g, false), Strategy::DfmlChi2, 8, 4);

    // Frozen hand-computed per-rule values.
    let mut by_conf: Vec<(&str, f64, f64)> = model
        .rules
        .iter()
        .map(|r| {
            (
                r.rule.consequent.token(),
                r.chi2,
                r.weighted_chi2(),
            )
        })
        .collect();
    // Precedence order: R3 (conf 1.0), R4 (0.8), then R1/R2 (0.75).
    let (c0, chi0, w0) = by_conf.remove(0);
    assert_eq!(c0, "notAPattern");
    assert!((chi0 - 8.0 / 3.0).abs() < 1e-9);
    assert!((w0 - 8.0 / 3.0).abs() < 1e-9);
    let (c1, chi1, w1) = by_conf.remove(0);
    assert_eq!(c1, "aPattern");
    assert!((chi1 - 4.8).abs() < 1e-9);
    assert!((w1 - 4.8).abs() < 1e-9);
    for (_, chi, w) in &by_conf {
        assert!((chi - 2.0).abs() < 1e-9);
        assert!((w - 0.5).abs() < 1e-9);
    }

    // Weighted sums: aPattern 5.3 beats notAPattern 19/6, overruling both
    // MAXL and the majority tie.
    let verdict = model.classify(&solo_candidate(), &solo_graph());
    assert_eq!(verdict.label, Consequent::APattern);

    let maxl = model_with(chi2_fixture(&g, false), Strategy::Maxl, 8, 4);
    assert_eq!(
        maxl.classify(&solo_candidate(), &solo_graph()).label,
        Consequent::NotAPattern
    );
}

#[test]
fn weighted_chi2_fixture_mirror_flips_the_verdict() {
    let g = grammar();
    let model = model_with(chi2_fixture(&g, true), Strategy::DfmlChi2, 8, 4);
    let verdict = model.classify(&solo_candidate(), &solo_graph());
    assert_eq!(verdict.label, Consequent::NotAPattern);
}

#[test]
fn laplace_fixture_matches_hand_computation() {
    let g = grammar();
    // Laplace accuracies: R3 3/4, R4 5/7, R1 = R2 = 4/6. Partition means
    // over the top-5: aPattern (5/7 + 2/3)/2, notAPattern (3/4 + 2/3)/2.
    let model = model_with(chi2_fixture(&g, false), Strategy::DfmlLap, 8, 4);
    let laps: Vec<f64> = model.rules.iter().map(|r| r.laplace).collect();
    assert!((laps[0] - 0.75).abs() < 1e-12);
    assert!((laps[1] - 5.0 / 7.0).abs() < 1e-12);
    assert!((laps[2] - 2.0 / 3.0).abs() < 1e-12);
    let verdict = model.classify(&solo_candidate(), &solo_graph());
    assert_eq!(verdict.label, Consequent::NotAPattern);

    // Mirror fixture: Laplace now favors the positive partition.
    let model = model_with(chi2_fixture(&g, true), Strategy::DfmlLap, 8, 4);
    let verdict = model.classify(&solo_candidate(), &solo_graph());
    assert_eq!(verdict.label, Consequent::APattern);
}

#[test]
fn third_fixture_all_strategies_agree() {
    let g = grammar();
    // n = 12, 6 positives. A perfect aPattern rule dominates everything:
    // chi2 = maxchi2 = 12, weighted = 12; the weak notAPattern rule
    // contributes 4/81.
    let rules = vec![
        covering_rule(1, Consequent::APattern, 6, 6, 12, &g),
        covering_rule(2, Consequent::NotAPattern, 3, 2, 12, &g),
    ];
    for strategy in [
        Strategy::Maxl,
        Strategy::Dfml,
        Strategy::DfmlChi2,
        Strategy::DfmlLap,
    ] {
        let model = model_with(rules.clone(), strategy, 12, 6);
        if strategy == Strategy::DfmlChi2 {
            let perfect = model
                .rules
                .iter()
                .find(|r| r.rule.consequent == Consequent::APattern)
                .unwrap();
            assert!((perfect.chi2 - 12.0).abs() < 1e-9);
            assert!((perfect.weighted_chi2() - 12.0).abs() < 1e-9);
            let weak = model
                .rules
                .iter()
                .find(|r| r.rule.consequent == Consequent::NotAPattern)
                .unwrap();
            assert!((weak.weighted_chi2() - 4.0 / 81.0).abs() < 1e-9);
        }
        let verdict = model.classify(&solo_candidate(), &solo_graph());
        assert_eq!(verdict.label, Consequent::APattern, "{strategy:?}");
    }
}

#[test]
fn maxl_is_invariant_under_removal_of_lower_rules() {
    let g = grammar();
    let full = model_with(
        vec![
            covering_rule(1, Consequent::APattern, 20, 19, 40, &g),
            covering_rule(2, Consequent::NotAPattern, 20, 15, 40, &g),
            never_covering_rule(Consequent::NotAPattern, &g),
        ],
        Strategy::Maxl,
        40,
        20,
    );
    let baseline = full.classify(&solo_candidate(), &solo_graph()).label;
    // Drop the non-covering rule.
    let mut without_non_covering = full.clone();
    without_non_covering.rules.retain(|r| {
        patdet::grammar::matches(&r.rule, &solo_candidate(), &solo_graph())
    });
    assert_eq!(
        without_non_covering
            .classify(&solo_candidate(), &solo_graph())
            .label,
        baseline
    );
    // Drop every covering rule below the top covering rule.
    let top_covering = full
        .rules
        .iter()
        .position(|r| patdet::grammar::matches(&r.rule, &solo_candidate(), &solo_graph()))
        .unwrap();
    let mut only_top = full.clone();
    only_top.rules.truncate(top_covering + 1);
    assert_eq!(
        only_top.classify(&solo_candidate(), &solo_graph()).label,
        baseline
    );
}

#[test]
fn classify_is_pure() {
    let g = grammar();
    let model = model_with(chi2_fixture(&g, false), Strategy::DfmlChi2, 8, 4);
    let first = model.classify(&solo_candidate(), &solo_graph());
    for _ in 0..5 {
        let again = model.classify(&solo_candidate(), &solo_graph());
        assert_eq!(again.label, first.label);
        assert_eq!(again.explanation, first.explanation);
    }
}

#[test]
fn score_bounds_hold_over_random_stats() {
    // The chi-squared bound is the value at maximal overlap, so it caps
    // every positively associated rule (correct count at or above the
    // independence expectation) - the only rules the weighting is applied
    // to in practice. Laplace and non-negativity hold unconditionally.
    let mut rng = RunRng::seeded(123);
    for _ in 0..2000 {
        let n = 2 + rng.index(60) as u32;
        let matched = 1 + rng.index(n as usize - 1) as u32;
        let class_count = 1 + rng.index(n as usize - 1) as u32;
        let lo = (u64::from(matched) * u64::from(class_count)).div_ceil(u64::from(n)) as u32;
        let hi = matched.min(class_count);
        let correct = lo + rng.index((hi - lo) as usize + 1) as u32;
        let stats = RuleStats {
            matched,
            correct,
            dataset_len: n,
        };
        let lap = laplace(&stats);
        assert!(lap > 0.0 && lap < 1.0);
        let (chi2, max_chi2) = rule_chi2_stats(&stats, class_count);
        assert!(chi2 >= 0.0);
        assert!(max_chi2 >= 0.0);
        assert!(chi2 <= max_chi2 + 1e-9, "chi2 {chi2} > max {max_chi2}");
    }
    // Anti-associated stats still yield well-defined non-negative scores.
    for _ in 0..500 {
        let n = 2 + rng.index(60) as u32;
        let matched = rng.index(n as usize + 1) as u32;
        let correct = rng.index(matched as usize + 1) as u32;
        let class_count = correct + rng.index((n - matched) as usize + 1) as u32;
        let stats = RuleStats {
            matched,
            correct,
            dataset_len: n,
        };
        let (chi2, max_chi2) = rule_chi2_stats(&stats, class_count);
        assert!(chi2 >= 0.0);
        assert!(max_chi2 >= 0.0);
        let lap = laplace(&stats);
        assert!(lap > 0.0 && lap < 1.0);
    }
}

fn labelled_dataset() -> (Dataset, Grammar) {
    // Final classes are the positives; plain ones the negatives.
    let mut artifacts = Vec::new();
    for i in 0..4 {
        let mut a = Artifact::new(format!("Pos{i}"), ArtifactKind::Class);
        a.is_final = true;
        artifacts.push(a);
    }
    for i in 0..4 {
        artifacts.push(Artifact::new(format!("Neg{i}"), ArtifactKind::Class));
    }
    let graph = Arc::new(CodeFactsGraph::new(artifacts).unwrap());
    let samples = graph
        .artifacts()
        .iter()
        .map(|a| {
            let label = if a.is_final {
                Label::Positive
            } else {
                Label::Negative
            };
            (
                Candidate {
                    pattern: "probe".to_owned(),
                    role_map: [("thing".to_owned(), a.id.clone())].into(),
                },
                label,
            )
        })
        .collect();
    (Dataset::single(graph, samples).unwrap(), grammar())
}

#[test]
fn single_perfect_rule_prunes_to_itself() {
    let (dataset, g) = labelled_dataset();
    // Covers and correctly classifies everything it matches; the trailing
    // rule is never reached because the pool empties.
    let mut perfect = parse_rule("if isFinal(thing) = true then aPattern", &g).unwrap();
    perfect.stats = RuleStats {
        matched: 4,
        correct: 4,
        dataset_len: 8,
    };
    let mut all_covering = parse_rule("if NOM(thing) >= 0 then notAPattern", &g).unwrap();
    all_covering.stats = RuleStats {
        matched: 8,
        correct: 4,
        dataset_len: 8,
    };
    let mut trailing = parse_rule("if isFinal(thing) = false then notAPattern", &g).unwrap();
    trailing.stats = RuleStats {
        matched: 4,
        correct: 4,
        dataset_len: 8,
    };
    // With threshold 1, the two perfect rules exhaust the samples.
    let kept = prune_database_coverage(
        &[perfect.clone(), all_covering.clone(), trailing.clone()],
        &dataset,
        &dataset.all_indices(),
        1,
    );
    assert!(kept.len() <= 2);
    assert!(kept.iter().all(|r| r.confidence() == 1.0));

    // A rule matching everything it misclassifies contributes nothing.
    let mut wrong_only = parse_rule("if isFinal(thing) = true then notAPattern", &g).unwrap();
    wrong_only.stats = RuleStats {
        matched: 4,
        correct: 0,
        dataset_len: 8,
    };
    let kept = prune_database_coverage(
        &[wrong_only.clone()],
        &dataset,
        &dataset.all_indices(),
        1,
    );
    assert!(kept.is_empty());
}

#[test]
fn pruned_output_is_a_subsequence_of_the_sorted_input() {
    let (dataset, g) = labelled_dataset();
    let mut rng = RunRng::seeded(9);
    for _ in 0..50 {
        let mut rules = Vec::new();
        for t in 0..(1 + rng.index(12)) {
            let consequent = if rng.coin(0.5) {
                Consequent::APattern
            } else {
                Consequent::NotAPattern
            };
            let mut rule = covering_rule(t as i64, consequent, 0, 0, 8, &g);
            let matched = rng.index(9) as u32;
            rule.stats = RuleStats {
                matched,
                correct: rng.index(matched as usize + 1) as u32,
                dataset_len: 8,
            };
            rules.push(rule);
        }
        let threshold = 1 + rng.index(4) as u32;
        let kept = prune_database_coverage(&rules, &dataset, &dataset.all_indices(), threshold);
        let mut sorted = rules.clone();
        sort_rules(&mut sorted);
        let sorted_keys: Vec<String> = sorted.iter().map(Rule::identity_key).collect();
        let mut cursor = 0;
        for rule in &kept {
            let key = rule.identity_key();
            let pos = sorted_keys[cursor..]
                .iter()
                .position(|k| *k == key)
                .expect("kept rule must appear in order");
            cursor += pos + 1;
        }
    }
}

#[test]
fn model_round_trip_preserves_order_caches_and_verdicts() {
    let g = grammar();
    let model = model_with(chi2_fixture(&g, false), Strategy::DfmlChi2, 8, 4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, model);
    let json_again = model_to_json(&loaded);
    assert_eq!(json_again, model_to_json(&model));
    assert_eq!(
        loaded.classify(&solo_candidate(), &solo_graph()).label,
        model.classify(&solo_candidate(), &solo_graph()).label
    );
}

#[test]
fn truncated_model_file_is_a_parse_error() {
    let g = grammar();
    let model = model_with(chi2_fixture(&g, false), Strategy::Maxl, 8, 4);
    let json = model_to_json(&model);
    let truncated = &json[..json.len() / 2];
    assert!(model_from_json(truncated).is_err());
}

#[test]
fn model_version_mismatch_is_a_distinct_error() {
    let g = grammar();
    let model = model_with(chi2_fixture(&g, false), Strategy::Maxl, 8, 4);
    let json = model_to_json(&model).replace("\"version\": 1", "\"version\": 9");
    assert!(matches!(
        model_from_json(&json),
        Err(patdet::repository::RepoError::UnsupportedModelVersion(9))
    ));
}
