//! Rule precedence, database-coverage pruning, the four classification
//! strategies and the serializable detection model.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::candidates::Candidate;
use crate::facts::CodeFactsGraph;
use crate::grammar::{matches, Consequent, Dataset, Rule, RuleStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    /// Highest-precedence covering rule decides.
    #[serde(rename = "MAXL")]
    Maxl,
    /// Larger covering partition decides.
    #[serde(rename = "DFML")]
    Dfml,
    /// Partition with the larger weighted chi-squared sum decides.
    #[serde(rename = "DFML_CHI2")]
    DfmlChi2,
    /// Partition with the higher mean Laplace accuracy over its top-k rules.
    #[serde(rename = "DFML_LAP")]
    DfmlLap,
}

impl Strategy {
    pub fn token(self) -> &'static str {
        match self {
            Strategy::Maxl => "MAXL",
            Strategy::Dfml => "DFML",
            Strategy::DfmlChi2 => "DFML_CHI2",
            Strategy::DfmlLap => "DFML_LAP",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "MAXL" => Strategy::Maxl,
            "DFML" => Strategy::Dfml,
            "DFML_CHI2" => Strategy::DfmlChi2,
            "DFML_LAP" => Strategy::DfmlLap,
            _ => return None,
        })
    }
}

/// Exact fraction comparison via cross-multiplication.
fn cmp_fraction(a_num: u32, a_den: u32, b_num: u32, b_den: u32) -> Ordering {
    (u64::from(a_num) * u64::from(b_den)).cmp(&(u64::from(b_num) * u64::from(a_den)))
}

fn cmp_confidence(a: &RuleStats, b: &RuleStats) -> Ordering {
    match (a.matched, b.matched) {
        (0, 0) => Ordering::Equal,
        (0, _) => cmp_fraction(0, 1, b.correct, b.matched),
        (_, 0) => cmp_fraction(a.correct, a.matched, 0, 1),
        _ => cmp_fraction(a.correct, a.matched, b.correct, b.matched),
    }
}

fn cmp_support(a: &RuleStats, b: &RuleStats) -> Ordering {
    let a_den = a.dataset_len.max(1);
    let b_den = b.dataset_len.max(1);
    cmp_fraction(a.correct, a_den, b.correct, b_den)
}

/// Total precedence order: higher confidence first, then higher support,
/// then fewer comparisons, then lexicographic canonical serialization.
pub fn cmp_precedence(a: &Rule, b: &Rule) -> Ordering {
    cmp_confidence(&b.stats, &a.stats)
        .then_with(|| cmp_support(&b.stats, &a.stats))
        .then_with(|| a.antecedent.len().cmp(&b.antecedent.len()))
        .then_with(|| a.identity_key().cmp(&b.identity_key()))
}

/// True when the first rule strictly precedes the second.
pub fn precedes(a: &Rule, b: &Rule) -> bool {
    cmp_precedence(a, b) == Ordering::Less
}

/// Sorts rules into precedence order (stable and total).
pub fn sort_rules(rules: &mut [Rule]) {
    rules.sort_by(cmp_precedence);
}

/// Database-coverage pruning.
///
/// Rules are visited in precedence order. A rule is kept iff it matches at
/// least one remaining sample and correctly classifies at least one of
/// them; matched samples' coverage counters increase and samples covered
/// `threshold` times leave the pool. Stops when the pool empties.
pub fn prune_database_coverage(
    rules: &[Rule],
    dataset: &Dataset,
    indices: &[u32],
    threshold: u32,
) -> Vec<Rule> {
    assert!(threshold >= 1, "coverage threshold must be >= 1");
    let mut sorted: Vec<Rule> = rules.to_vec();
    sort_rules(&mut sorted);

    let mut alive: Vec<u32> = indices.to_vec();
    let mut covered: Vec<u32> = vec![0; dataset.len()];
    let mut kept = Vec::new();
    for rule in sorted {
        if alive.is_empty() {
            break;
        }
        let mut marked = false;
        let mut cov_samples = Vec::new();
        for &i in &alive {
            let sample = dataset.sample(i as usize);
            if matches(&rule, &sample.candidate, dataset.graph_of(i as usize)) {
                cov_samples.push(i);
                if sample.label.corresponds(rule.consequent) {
                    marked = true;
                }
            }
        }
        if marked {
            for &i in &cov_samples {
                covered[i as usize] += 1;
            }
            alive.retain(|&i| covered[i as usize] < threshold);
            kept.push(rule);
        }
    }
    kept
}

/// Chi-squared statistic of the rule's 2x2 contingency table (antecedent
/// match x class membership) and its theoretical maximum. Degenerate
/// marginals yield (0, 0).
pub fn rule_chi2_stats(stats: &RuleStats, class_count: u32) -> (f64, f64) {
    let n = f64::from(stats.dataset_len);
    let a = f64::from(stats.matched);
    let c = f64::from(class_count);
    let j = f64::from(stats.correct);
    if stats.matched == 0
        || stats.matched == stats.dataset_len
        || class_count == 0
        || class_count == stats.dataset_len
    {
        return (0.0, 0.0);
    }
    let cells = [
        (j, a * c / n),
        (a - j, a * (n - c) / n),
        (c - j, (n - a) * c / n),
        (n - a - c + j, (n - a) * (n - c) / n),
    ];
    let chi2 = cells
        .iter()
        .map(|(obs, exp)| (obs - exp) * (obs - exp) / exp)
        .sum();
    let e = 1.0 / (a * c) + 1.0 / (a * (n - c)) + 1.0 / ((n - a) * c) + 1.0 / ((n - a) * (n - c));
    let min_ac = a.min(c);
    let max_chi2 = (min_ac - a * c / n) * (min_ac - a * c / n) * n * e;
    (chi2, max_chi2)
}

/// Laplace expected accuracy for two classes: (correct + 1) / (matched + 2).
pub fn laplace(stats: &RuleStats) -> f64 {
    (f64::from(stats.correct) + 1.0) / (f64::from(stats.matched) + 2.0)
}

/// A pruned rule with its cached strategy statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRule {
    pub rule: Rule,
    pub chi2: f64,
    pub max_chi2: f64,
    pub laplace: f64,
}

impl ScoredRule {
    /// Weighted chi-squared contribution used by DFML_CHI2.
    pub fn weighted_chi2(&self) -> f64 {
        if self.max_chi2 == 0.0 {
            0.0
        } else {
            self.chi2 * self.chi2 / self.max_chi2
        }
    }
}

/// Precedence-ordered pruned rule list plus everything needed to classify
/// new candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DetectionModel {
    pub pattern: String,
    pub roles: Vec<String>,
    pub strategy: Strategy,
    pub lap_k: usize,
    pub coverage_threshold: u32,
    pub training_size: u32,
    pub training_positives: u32,
    pub default_label: Consequent,
    pub rules: Vec<ScoredRule>,
}

/// Classification verdict with the rules that determined it, as indices
/// into the model's rule list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub label: Consequent,
    pub explanation: Vec<usize>,
}

pub const DEFAULT_LAP_K: usize = 5;

impl DetectionModel {
    /// Assembles a model from precedence-sorted pruned rules, computing the
    /// per-rule chi-squared and Laplace caches from the training counts.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        pattern: String,
        roles: Vec<String>,
        strategy: Strategy,
        lap_k: usize,
        coverage_threshold: u32,
        training_size: u32,
        training_positives: u32,
        rules: Vec<Rule>,
    ) -> Self {
        let rules = rules
            .into_iter()
            .map(|rule| {
                let class_count = match rule.consequent {
                    Consequent::APattern => training_positives,
                    Consequent::NotAPattern => training_size - training_positives,
                };
                let (chi2, max_chi2) = rule_chi2_stats(&rule.stats, class_count);
                let laplace = laplace(&rule.stats);
                ScoredRule {
                    rule,
                    chi2,
                    max_chi2,
                    laplace,
                }
            })
            .collect();
        Self {
            pattern,
            roles,
            strategy,
            lap_k,
            coverage_threshold,
            training_size,
            training_positives,
            default_label: Consequent::NotAPattern,
            rules,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.rules.is_empty()
    }

    /// Applies the model's strategy to one candidate.
    pub fn classify(&self, candidate: &Candidate, graph: &CodeFactsGraph) -> Classification {
        let covering: Vec<usize> = self
            .rules
            .iter()
            .enumerate()
            .filter(|(_, r)| matches(&r.rule, candidate, graph))
            .map(|(i, _)| i)
            .collect();
        let Some(&top) = covering.first() else {
            return Classification {
                label: self.default_label,
                explanation: Vec::new(),
            };
        };
        let top_label = self.rules[top].rule.consequent;
        let partition = |label: Consequent| -> Vec<usize> {
            covering
                .iter()
                .copied()
                .filter(|&i| self.rules[i].rule.consequent == label)
                .collect()
        };
        let yes = partition(Consequent::APattern);
        let no = partition(Consequent::NotAPattern);

        let decide = |yes_score: f64, no_score: f64| -> Classification {
            match yes_score.partial_cmp(&no_score) {
                Some(Ordering::Greater) => Classification {
                    label: Consequent::APattern,
                    explanation: yes.clone(),
                },
                Some(Ordering::Less) => Classification {
                    label: Consequent::NotAPattern,
                    explanation: no.clone(),
                },
                _ => Classification {
                    label: top_label,
                    explanation: vec![top],
                },
            }
        };

        match self.strategy {
            Strategy::Maxl => Classification {
                label: top_label,
                explanation: vec![top],
            },
            Strategy::Dfml => decide(yes.len() as f64, no.len() as f64),
            Strategy::DfmlChi2 => {
                let sum = |part: &[usize]| -> f64 {
                    part.iter().map(|&i| self.rules[i].weighted_chi2()).sum()
                };
                decide(sum(&yes), sum(&no))
            }
            Strategy::DfmlLap => {
                let mean_top_k = |part: &[usize]| -> f64 {
                    if part.is_empty() {
                        return f64::NEG_INFINITY;
                    }
                    let k = part.len().min(self.lap_k.max(1));
                    part[..k]
                        .iter()
                        .map(|&i| self.rules[i].laplace)
                        .sum::<f64>()
                        / k as f64
                };
                decide(mean_top_k(&yes), mean_top_k(&no))
            }
        }
    }
}
