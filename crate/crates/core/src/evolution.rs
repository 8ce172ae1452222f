//! Archive-based generational evolution of rule individuals.
//!
//! Each generation selects parents from the population and the external
//! archive by binary tournament, recombines pairs by swapping one
//! comparison subtree, mutates every offspring with one of two mutators
//! chosen by a fair coin, and folds threshold-passing, non-redundant rules
//! into the archive.
//!
//! All stochastic choices draw from a single seeded stream in a fixed
//! order: initial trees; then per generation tournament draws, one
//! crossover coin per pair followed by its index draws, and per offspring
//! the mutator coin followed by the mutator's own draws. Fitness
//! evaluation draws nothing, so results are independent of evaluation
//! order.

use thiserror::Error;

use crate::classifier::{cmp_precedence, sort_rules};
use crate::grammar::{
    random_derive, Comparison, Consequent, DatasetEval, DerivationTree, Grammar, GrammarError,
    Rule, RuleStats,
};
use crate::rng::RunRng;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("population size must be at least 2, got {0}")]
    PopulationTooSmall(usize),
    #[error("{name} must lie in [0, 1], got {value}")]
    FractionOutOfRange { name: &'static str, value: f64 },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// Run parameters. Defaults: population 100, 150 generations, crossover
/// 0.8, derivation budget 25, unbounded archive, support 0.01 and
/// confidence 0.7 thresholds.
#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub pop_size: usize,
    pub max_generations: u32,
    /// 0 means unbounded.
    pub external_archive_size: usize,
    pub crossover_prob: f64,
    pub max_derivations: u32,
    pub support_threshold: f64,
    pub confidence_threshold: f64,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            pop_size: 100,
            max_generations: 150,
            external_archive_size: 0,
            crossover_prob: 0.8,
            max_derivations: 25,
            support_threshold: 0.01,
            confidence_threshold: 0.7,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        if self.pop_size < 2 {
            return Err(EvolutionError::PopulationTooSmall(self.pop_size));
        }
        for (name, value) in [
            ("crossover_prob", self.crossover_prob),
            ("support_threshold", self.support_threshold),
            ("confidence_threshold", self.confidence_threshold),
        ] {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(EvolutionError::FractionOutOfRange { name, value });
            }
        }
        Ok(())
    }
}

/// A genotype plus its cached evaluation.
#[derive(Debug, Clone)]
pub struct Individual {
    pub tree: DerivationTree,
    pub stats: RuleStats,
}

impl Individual {
    /// Phenotype with the cached counts attached.
    pub fn rule(&self) -> Rule {
        let mut rule = self.tree.to_rule();
        rule.stats = self.stats;
        rule
    }

    /// Fitness is the support of the rule.
    pub fn fitness(&self) -> f64 {
        self.stats.support()
    }

    pub fn confidence(&self) -> f64 {
        self.stats.confidence()
    }
}

/// Result of a mining run: the archive rules in precedence order plus any
/// warnings about degenerate training data.
#[derive(Debug)]
pub struct MiningOutcome {
    pub rules: Vec<Rule>,
    pub warnings: Vec<String>,
}

/// Runs the full mining loop over a dataset.
pub fn run_g3p4dpd(
    config: &EvolutionConfig,
    grammar: &Grammar,
    dataset: &crate::grammar::Dataset,
) -> Result<MiningOutcome, EvolutionError> {
    let eval = DatasetEval::build(grammar, dataset)?;
    run_g3p4dpd_on(config, grammar, &eval, &dataset.all_indices())
}

/// Mining loop over a precomputed evaluation table and sample subset; used
/// by fold-level training.
pub fn run_g3p4dpd_on(
    config: &EvolutionConfig,
    grammar: &Grammar,
    eval: &DatasetEval,
    indices: &[u32],
) -> Result<MiningOutcome, EvolutionError> {
    run_g3p4dpd_observed(config, grammar, eval, indices, &mut |_, _, _| {})
}

/// Observer invoked once per generation with the generation number, the
/// evaluated population and the current archive.
pub type GenerationObserver<'a> = &'a mut dyn FnMut(u32, &[Individual], &[Individual]);

/// Mining loop with a per-generation observer.
pub fn run_g3p4dpd_observed(
    config: &EvolutionConfig,
    grammar: &Grammar,
    eval: &DatasetEval,
    indices: &[u32],
    observer: GenerationObserver<'_>,
) -> Result<MiningOutcome, EvolutionError> {
    config.validate()?;
    let mut warnings = Vec::new();
    let (pos, neg) = eval.dataset().label_counts(indices);
    if pos == 0 || neg == 0 {
        warnings.push(format!(
            "training data has {pos} positive and {neg} negative samples; \
             rules for the absent class cannot be learned"
        ));
    }

    let mut rng = RunRng::seeded(config.seed);
    let evaluate = |tree: DerivationTree| -> Result<Individual, EvolutionError> {
        let stats = eval.evaluate_on(&tree.comparisons, tree.consequent, indices)?;
        Ok(Individual { tree, stats })
    };

    let mut pop: Vec<Individual> = (0..config.pop_size)
        .map(|_| {
            let tree = random_derive(grammar, config.max_derivations, &mut rng)?;
            evaluate(tree)
        })
        .collect::<Result<_, _>>()?;

    // The initial population feeds the archive before the loop, so a run
    // with zero generations returns the thresholded, deduplicated initial
    // rules.
    let mut archive = update_archive(Vec::new(), &pop, config);
    observer(0, &pop, &archive);

    for generation in 1..=config.max_generations {
        let pool: Vec<&Individual> = pop.iter().chain(archive.iter()).collect();
        let parents = tournament_select(&pool, config.pop_size, &mut rng);

        let mut offspring: Vec<DerivationTree> = Vec::with_capacity(config.pop_size);
        for pair in parents.chunks(2) {
            if pair.len() == 2 && rng.coin(config.crossover_prob) {
                let (a, b) = crossover(
                    &pair[0].tree,
                    &pair[1].tree,
                    config.max_derivations,
                    &mut rng,
                );
                offspring.push(a);
                offspring.push(b);
            } else {
                offspring.extend(pair.iter().map(|p| p.tree.clone()));
            }
        }

        let mutated: Vec<DerivationTree> = offspring
            .into_iter()
            .map(|tree| {
                if rng.coin(0.5) {
                    diversity_mutate(tree, grammar, config.max_derivations, &mut rng)
                } else {
                    dpd_mutate(tree, &mut rng)
                }
            })
            .collect();

        pop = mutated
            .into_iter()
            .map(evaluate)
            .collect::<Result<_, _>>()?;
        archive = update_archive(archive, &pop, config);
        observer(generation, &pop, &archive);
    }

    let mut rules: Vec<Rule> = archive.iter().map(Individual::rule).collect();
    sort_rules(&mut rules);
    Ok(MiningOutcome { rules, warnings })
}

/// Binary tournament with replacement over the pool. The fitter of two
/// uniform draws wins; ties break on higher confidence, then a coin.
pub fn tournament_select<'a>(
    pool: &[&'a Individual],
    count: usize,
    rng: &mut RunRng,
) -> Vec<&'a Individual> {
    assert!(!pool.is_empty(), "tournament over an empty pool");
    let mut winners = Vec::with_capacity(count);
    for _ in 0..count {
        let a = pool[rng.index(pool.len())];
        let b = pool[rng.index(pool.len())];
        winners.push(fitter(a, b, rng));
    }
    winners
}

fn fitter<'a>(a: &'a Individual, b: &'a Individual, rng: &mut RunRng) -> &'a Individual {
    // Exact fraction comparison; all individuals are evaluated over the
    // same index set so denominators agree.
    let support = (u64::from(a.stats.correct) * u64::from(b.stats.dataset_len.max(1)))
        .cmp(&(u64::from(b.stats.correct) * u64::from(a.stats.dataset_len.max(1))));
    match support {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            let conf = (u64::from(a.stats.correct) * u64::from(b.stats.matched))
                .cmp(&(u64::from(b.stats.correct) * u64::from(a.stats.matched)));
            match conf {
                std::cmp::Ordering::Greater => a,
                std::cmp::Ordering::Less => b,
                std::cmp::Ordering::Equal => {
                    if rng.coin(0.5) {
                        a
                    } else {
                        b
                    }
                }
            }
        }
    }
}

/// Swaps one uniformly chosen comparison subtree between the parents. A
/// child exceeding the derivation budget reverts to its parent.
pub fn crossover(
    parent_a: &DerivationTree,
    parent_b: &DerivationTree,
    max_derivations: u32,
    rng: &mut RunRng,
) -> (DerivationTree, DerivationTree) {
    let i = rng.index(parent_a.comparisons.len());
    let j = rng.index(parent_b.comparisons.len());
    crossover_at(parent_a, parent_b, i, j, max_derivations)
}

/// Deterministic core of [`crossover`]: swaps comparison `i` of the first
/// parent with comparison `j` of the second.
pub(crate) fn crossover_at(
    parent_a: &DerivationTree,
    parent_b: &DerivationTree,
    i: usize,
    j: usize,
    max_derivations: u32,
) -> (DerivationTree, DerivationTree) {
    let mut child_a = parent_a.clone();
    let mut child_b = parent_b.clone();
    child_a.comparisons[i] = parent_b.comparisons[j].clone();
    child_b.comparisons[j] = parent_a.comparisons[i].clone();
    if child_a.derivation_count() > max_derivations {
        child_a = parent_a.clone();
    }
    if child_b.derivation_count() > max_derivations {
        child_b = parent_b.clone();
    }
    (child_a, child_b)
}

/// Replaces k comparisons with fresh random derivations, k drawn from a
/// roulette that weights small changes higher: P(k) proportional to 2^-k.
pub fn diversity_mutate(
    mut tree: DerivationTree,
    grammar: &Grammar,
    max_derivations: u32,
    rng: &mut RunRng,
) -> DerivationTree {
    let n = tree.comparisons.len();
    let k = roulette_small_change(n, rng);
    let mut positions: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut positions);
    let mut chosen = positions[..k].to_vec();
    chosen.sort_unstable();
    for pos in chosen {
        let rest: u32 = tree.derivation_count() - crate::grammar::cmp_subtree_cost(&tree.comparisons[pos]);
        let budget = max_derivations.saturating_sub(rest);
        for _ in 0..100 {
            if let Some(fresh) = crate::grammar::derive_cmp_subtree(grammar, budget, rng) {
                tree.comparisons[pos] = fresh;
                break;
            }
        }
    }
    tree
}

/// Roulette over 1..=n with weights 2^-k.
fn roulette_small_change(n: usize, rng: &mut RunRng) -> usize {
    debug_assert!(n >= 1);
    let weights: Vec<f64> = (1..=n).map(|k| 0.5f64.powi(k as i32)).collect();
    let total: f64 = weights.iter().sum();
    let mut draw = rng.unit() * total;
    for (idx, w) in weights.iter().enumerate() {
        if draw < *w {
            return idx + 1;
        }
        draw -= w;
    }
    n
}

/// Inverts each comparison's comparator independently with probability 1/n
/// (n = antecedent length) and flips the consequent with probability 0.5.
pub fn dpd_mutate(mut tree: DerivationTree, rng: &mut RunRng) -> DerivationTree {
    let n = tree.comparisons.len();
    let p = 1.0 / n as f64;
    for cmp in &mut tree.comparisons {
        if rng.coin(p) {
            cmp.invert_comparator();
        }
    }
    if rng.coin(0.5) {
        tree.consequent = tree.consequent.flipped();
    }
    tree
}

/// Folds threshold-passing population rules into the archive, removing
/// duplicates (by normalized antecedent and consequent) and redundant
/// rules, then truncates to the configured bound by precedence.
///
/// A rule is redundant when another archived rule with the same consequent
/// has a subset antecedent and at least its confidence.
pub fn update_archive(
    archive: Vec<Individual>,
    pop: &[Individual],
    config: &EvolutionConfig,
) -> Vec<Individual> {
    struct Entry {
        ind: Individual,
        key: String,
        normalized: Vec<String>,
        consequent: Consequent,
    }

    let mut entries: Vec<Entry> = Vec::new();
    let push = |ind: &Individual, entries: &mut Vec<Entry>| {
        let rule = ind.rule();
        let key = rule.identity_key();
        if entries.iter().any(|e| e.key == key) {
            return;
        }
        entries.push(Entry {
            ind: ind.clone(),
            key,
            normalized: rule.normalized_antecedent(),
            consequent: rule.consequent,
        });
    };
    for ind in &archive {
        push(ind, &mut entries);
    }
    for ind in pop {
        if ind.stats.support() >= config.support_threshold
            && ind.stats.confidence() >= config.confidence_threshold
        {
            push(ind, &mut entries);
        }
    }

    // Confidence comparison by cross-multiplication for exactness.
    let conf_ge = |a: &RuleStats, b: &RuleStats| -> bool {
        u64::from(a.correct) * u64::from(b.matched.max(1))
            >= u64::from(b.correct) * u64::from(a.matched.max(1))
    };
    let survivors: Vec<Individual> = entries
        .iter()
        .filter(|candidate| {
            !entries.iter().any(|other| {
                other.key != candidate.key
                    && other.consequent == candidate.consequent
                    && is_subset(&other.normalized, &candidate.normalized)
                    && conf_ge(&other.ind.stats, &candidate.ind.stats)
            })
        })
        .map(|e| e.ind.clone())
        .collect();

    let mut survivors = survivors;
    if config.external_archive_size > 0 && survivors.len() > config.external_archive_size {
        survivors.sort_by(|a, b| cmp_precedence(&a.rule(), &b.rule()));
        survivors.truncate(config.external_archive_size);
    }
    survivors
}

/// Both sides sorted and deduplicated; two-pointer subset test.
fn is_subset(small: &[String], big: &[String]) -> bool {
    if small.len() > big.len() {
        return false;
    }
    let mut bi = 0;
    'outer: for s in small {
        while bi < big.len() {
            match big[bi].cmp(s) {
                std::cmp::Ordering::Less => bi += 1,
                std::cmp::Ordering::Equal => {
                    bi += 1;
                    continue 'outer;
                }
                std::cmp::Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

/// Every single comparison a grammar can express (numeric constants swept
/// over their range); used to scan datasets for discriminating facts.
pub fn enumerate_single_comparisons(grammar: &Grammar) -> Vec<Comparison> {
    let mut out = Vec::new();
    for metric in grammar.metrics() {
        let (lo, hi) = grammar.const_range(*metric);
        for role in grammar.roles() {
            for comparator in crate::grammar::NumComparator::ALL {
                for constant in lo..=hi {
                    out.push(Comparison::Numeric {
                        comparator,
                        metric: *metric,
                        role: role.clone(),
                        constant,
                    });
                }
            }
        }
    }
    for op in grammar.cat_ops() {
        let arity = op.arity();
        let n_roles = grammar.roles().len();
        let combos = n_roles.pow(arity as u32);
        for combo in 0..combos {
            let mut roles = Vec::with_capacity(arity);
            let mut rest = combo;
            for _ in 0..arity {
                roles.push(grammar.roles()[rest % n_roles].clone());
                rest /= n_roles;
            }
            for value in op.domain() {
                for comparator in crate::grammar::CatComparator::ALL {
                    out.push(Comparison::Categorical {
                        comparator,
                        op: *op,
                        roles: roles.clone(),
                        value,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facts::{CatOp, CatValue, Metric};
    use crate::grammar::{build_grammar, CatComparator, NumComparator};
    use std::collections::BTreeMap;

    fn grammar_abc() -> Grammar {
        build_grammar(
            &["adaptee".into(), "adapter".into(), "target".into()],
            &Metric::ALL,
            &CatOp::ALL,
            &BTreeMap::new(),
        )
        .unwrap()
    }

    fn num_cmp(constant: i64) -> Comparison {
        Comparison::Numeric {
            comparator: NumComparator::Lt,
            metric: Metric::NOC,
            role: "target".into(),
            constant,
        }
    }

    fn delegate_cmp() -> Comparison {
        Comparison::Categorical {
            comparator: CatComparator::Eq,
            op: CatOp::Delegates,
            roles: vec!["adapter".into(), "adaptee".into()],
            value: CatValue::Bool(true),
        }
    }

    fn type_of_cmp() -> Comparison {
        Comparison::Categorical {
            comparator: CatComparator::Eq,
            op: CatOp::TypeOf,
            roles: vec!["target".into()],
            value: CatValue::Kind(crate::facts::ArtifactKind::Interface),
        }
    }

    fn individual(tree: DerivationTree, correct: u32, matched: u32, n: u32) -> Individual {
        Individual {
            tree,
            stats: RuleStats {
                matched,
                correct,
                dataset_len: n,
            },
        }
    }

    #[test]
    fn crossover_swaps_single_comparisons_exactly() {
        let a = DerivationTree::new(vec![delegate_cmp()], Consequent::APattern);
        let b = DerivationTree::new(vec![type_of_cmp()], Consequent::NotAPattern);
        let (ca, cb) = crossover_at(&a, &b, 0, 0, 25);
        assert_eq!(ca.comparisons, vec![type_of_cmp()]);
        assert_eq!(cb.comparisons, vec![delegate_cmp()]);
        // Consequents stay with their side.
        assert_eq!(ca.consequent, Consequent::APattern);
        assert_eq!(cb.consequent, Consequent::NotAPattern);
    }

    #[test]
    fn crossover_moves_the_type_comparison_into_the_delegation_rule() {
        // Parents: a two-comparison rule (delegation and a metric bound)
        // and a single type test; swapping the first comparison leaves a
        // child carrying the type test where the delegation was.
        let a = DerivationTree::new(vec![delegate_cmp(), num_cmp(1)], Consequent::APattern);
        let b = DerivationTree::new(vec![type_of_cmp()], Consequent::APattern);
        let (ca, cb) = crossover_at(&a, &b, 0, 0, 25);
        assert_eq!(ca.comparisons, vec![type_of_cmp(), num_cmp(1)]);
        assert_eq!(cb.comparisons, vec![delegate_cmp()]);
    }

    #[test]
    fn crossover_preserves_total_comparison_count() {
        let grammar = grammar_abc();
        let mut rng = RunRng::seeded(33);
        for _ in 0..500 {
            let a = crate::grammar::random_derive(&grammar, 25, &mut rng).unwrap();
            let b = crate::grammar::random_derive(&grammar, 25, &mut rng).unwrap();
            let before = a.comparisons.len() + b.comparisons.len();
            let (ca, cb) = crossover(&a, &b, 25, &mut rng);
            assert_eq!(ca.comparisons.len() + cb.comparisons.len(), before);
            assert!(ca.derivation_count() <= 25);
            assert!(cb.derivation_count() <= 25);
        }
    }

    #[test]
    fn oversized_child_reverts_to_its_parent() {
        fn adapter_cmp() -> Comparison {
            Comparison::Categorical {
                comparator: CatComparator::Eq,
                op: CatOp::AdapterMethod,
                roles: vec!["adapter".into(), "adaptee".into(), "target".into()],
                value: CatValue::AdapterLink(crate::facts::PatternMatchKind::Declared),
            }
        }
        // a = 2 + 3 + (7 + 7 + 5) = 24; swapping the numeric comparison for
        // a third arity-3 comparison would cost 26 > 25.
        let a = DerivationTree::new(
            vec![adapter_cmp(), adapter_cmp(), num_cmp(0)],
            Consequent::APattern,
        );
        let b = DerivationTree::new(vec![adapter_cmp()], Consequent::NotAPattern);
        assert_eq!(a.derivation_count(), 24);
        let (ca, cb) = crossover_at(&a, &b, 2, 0, 25);
        assert_eq!(ca, a, "oversized child must revert");
        // The other child shrinks and stays valid.
        assert_eq!(cb.comparisons, vec![num_cmp(0)]);
    }

    #[test]
    fn tournament_over_single_individual_repeats_it() {
        let ind = individual(
            DerivationTree::new(vec![num_cmp(1)], Consequent::APattern),
            1,
            1,
            10,
        );
        let pool = vec![&ind];
        let mut rng = RunRng::seeded(1);
        let winners = tournament_select(&pool, 7, &mut rng);
        assert_eq!(winners.len(), 7);
        assert!(winners.iter().all(|w| std::ptr::eq(*w, &ind)));
    }

    #[test]
    fn tournament_prefers_the_fitter_individual() {
        // Uniform pair enumeration gives the fitter individual exactly
        // 0.75 of the wins; assert well above the 0.70 floor.
        let strong = individual(
            DerivationTree::new(vec![num_cmp(1)], Consequent::APattern),
            9,
            9,
            10,
        );
        let weak = individual(
            DerivationTree::new(vec![num_cmp(2)], Consequent::APattern),
            1,
            1,
            10,
        );
        let pool = vec![&strong, &weak];
        let mut rng = RunRng::seeded(7);
        let winners = tournament_select(&pool, 10_000, &mut rng);
        let strong_wins = winners
            .iter()
            .filter(|w| std::ptr::eq(**w, &strong))
            .count();
        let share = strong_wins as f64 / 10_000.0;
        assert!(share >= 0.70, "fitter selected only {share}");
        assert!((share - 0.75).abs() < 0.03);
    }

    #[test]
    fn tournament_is_symmetric_on_equal_individuals() {
        let a = individual(
            DerivationTree::new(vec![num_cmp(1)], Consequent::APattern),
            3,
            5,
            10,
        );
        let b = individual(
            DerivationTree::new(vec![num_cmp(2)], Consequent::APattern),
            3,
            5,
            10,
        );
        let pool = vec![&a, &b];
        let mut rng = RunRng::seeded(11);
        let winners = tournament_select(&pool, 10_000, &mut rng);
        let share = winners.iter().filter(|w| std::ptr::eq(**w, &a)).count() as f64 / 10_000.0;
        assert!((share - 0.5).abs() < 0.05, "share {share}");
    }

    #[test]
    fn diversity_mutation_keeps_comparison_count() {
        let grammar = grammar_abc();
        let mut rng = RunRng::seeded(21);
        for _ in 0..300 {
            let tree = crate::grammar::random_derive(&grammar, 25, &mut rng).unwrap();
            let before = tree.comparisons.len();
            let mutated = diversity_mutate(tree, &grammar, 25, &mut rng);
            assert_eq!(mutated.comparisons.len(), before);
            mutated.validate(&grammar, 25).unwrap();
        }
    }

    #[test]
    fn diversity_mutation_favors_small_changes() {
        let grammar = grammar_abc();
        let base = DerivationTree::new(
            vec![num_cmp(0), num_cmp(1), num_cmp(2), num_cmp(3)],
            Consequent::APattern,
        );
        let mut rng = RunRng::seeded(5);
        let mut changed_one = 0;
        let mut changed_four = 0;
        for _ in 0..1000 {
            let mutated = diversity_mutate(base.clone(), &grammar, 40, &mut rng);
            let changed = mutated
                .comparisons
                .iter()
                .zip(&base.comparisons)
                .filter(|(m, b)| m != b)
                .count();
            match changed {
                1 => changed_one += 1,
                4 => changed_four += 1,
                _ => {}
            }
        }
        assert!(
            changed_one > changed_four,
            "one-change {changed_one} vs four-change {changed_four}"
        );
    }

    #[test]
    fn single_comparison_dpd_mutation_always_inverts() {
        let mut rng = RunRng::seeded(3);
        for _ in 0..50 {
            let tree = DerivationTree::new(vec![num_cmp(1)], Consequent::APattern);
            let mutated = dpd_mutate(tree, &mut rng);
            match &mutated.comparisons[0] {
                Comparison::Numeric { comparator, .. } => {
                    assert_eq!(*comparator, NumComparator::Ge, "< must flip to >=");
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn comparator_inversion_is_an_involution() {
        let mut cmp = num_cmp(4);
        let original = cmp.clone();
        cmp.invert_comparator();
        assert_ne!(cmp, original);
        cmp.invert_comparator();
        assert_eq!(cmp, original);

        let mut cat = delegate_cmp();
        let original = cat.clone();
        cat.invert_comparator();
        cat.invert_comparator();
        assert_eq!(cat, original);
    }

    #[test]
    fn archive_keeps_distinct_rules_untouched_at_zero_thresholds() {
        let config = EvolutionConfig {
            support_threshold: 0.0,
            confidence_threshold: 0.0,
            ..EvolutionConfig::default()
        };
        let pop: Vec<Individual> = (0..6)
            .map(|i| {
                individual(
                    DerivationTree::new(vec![num_cmp(i)], Consequent::APattern),
                    2 + i as u32,
                    4 + i as u32,
                    20,
                )
            })
            .collect();
        let archive = update_archive(Vec::new(), &pop, &config);
        assert_eq!(archive.len(), 6);
    }

    #[test]
    fn archive_rejects_rules_below_the_confidence_threshold() {
        let config = EvolutionConfig::default(); // confidence 0.7
        let pop = vec![
            individual(
                DerivationTree::new(vec![num_cmp(0)], Consequent::APattern),
                13,
                20,
                40,
            ), // conf 0.65
            individual(
                DerivationTree::new(vec![num_cmp(1)], Consequent::APattern),
                15,
                20,
                40,
            ), // conf 0.75
        ];
        let archive = update_archive(Vec::new(), &pop, &config);
        assert_eq!(archive.len(), 1);
        assert_eq!(archive[0].rule().antecedent, vec![num_cmp(1)]);
    }

    #[test]
    fn longer_rule_without_confidence_gain_is_redundant() {
        // Same consequent, superset antecedent, no better confidence:
        // counts laid out over a 6-sample dataset.
        let config = EvolutionConfig {
            support_threshold: 0.0,
            confidence_threshold: 0.0,
            ..EvolutionConfig::default()
        };
        let short = individual(
            DerivationTree::new(vec![num_cmp(1)], Consequent::APattern),
            4,
            5,
            6,
        ); // conf 0.8
        let long_worse = individual(
            DerivationTree::new(vec![num_cmp(1), delegate_cmp()], Consequent::APattern),
            3,
            4,
            6,
        ); // conf 0.75 <= 0.8: redundant
        let long_better = individual(
            DerivationTree::new(vec![num_cmp(1), type_of_cmp()], Consequent::APattern),
            3,
            3,
            6,
        ); // conf 1.0 > 0.8: kept
        let archive = update_archive(Vec::new(), &[short, long_worse, long_better], &config);
        let keys: Vec<String> = archive.iter().map(|i| i.rule().identity_key()).collect();
        assert_eq!(archive.len(), 2, "{keys:?}");
        assert!(keys.iter().any(|k| k.contains("typeOf")));
        assert!(!keys.iter().any(|k| k.contains("delegates")));
    }

    #[test]
    fn duplicate_rules_collapse_in_the_archive() {
        let config = EvolutionConfig {
            support_threshold: 0.0,
            confidence_threshold: 0.0,
            ..EvolutionConfig::default()
        };
        let a = individual(
            DerivationTree::new(vec![num_cmp(1), delegate_cmp()], Consequent::APattern),
            2,
            3,
            6,
        );
        // Same comparisons in the opposite order: identical normalized rule.
        let b = individual(
            DerivationTree::new(vec![delegate_cmp(), num_cmp(1)], Consequent::APattern),
            2,
            3,
            6,
        );
        let archive = update_archive(Vec::new(), &[a, b], &config);
        assert_eq!(archive.len(), 1);
    }
}
