//! Comparisons, rules and their textual form.
//!
//! A rule reads `if <cmp> and <cmp> ... then <consequent>`, with
//! comparisons in call syntax: `ctorVisibility(singleton) != public`,
//! `DIT(singleton) < 2`.

use serde::{Deserialize, Serialize};

use crate::facts::{CatOp, CatValue, Metric};

use super::{Grammar, GrammarError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NumComparator {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl NumComparator {
    pub const ALL: [NumComparator; 4] = [
        NumComparator::Ge,
        NumComparator::Le,
        NumComparator::Gt,
        NumComparator::Lt,
    ];

    pub fn token(self) -> &'static str {
        match self {
            NumComparator::Lt => "<",
            NumComparator::Gt => ">",
            NumComparator::Le => "<=",
            NumComparator::Ge => ">=",
        }
    }

    pub fn holds(self, left: i64, right: i64) -> bool {
        match self {
            NumComparator::Lt => left < right,
            NumComparator::Gt => left > right,
            NumComparator::Le => left <= right,
            NumComparator::Ge => left >= right,
        }
    }

    /// `<` ↔ `>=`, `>` ↔ `<=`.
    pub fn inverted(self) -> Self {
        match self {
            NumComparator::Lt => NumComparator::Ge,
            NumComparator::Ge => NumComparator::Lt,
            NumComparator::Gt => NumComparator::Le,
            NumComparator::Le => NumComparator::Gt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CatComparator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl CatComparator {
    pub const ALL: [CatComparator; 2] = [CatComparator::Eq, CatComparator::Ne];

    pub fn token(self) -> &'static str {
        match self {
            CatComparator::Eq => "=",
            CatComparator::Ne => "!=",
        }
    }

    pub fn holds(self, equal: bool) -> bool {
        match self {
            CatComparator::Eq => equal,
            CatComparator::Ne => !equal,
        }
    }

    pub fn inverted(self) -> Self {
        match self {
            CatComparator::Eq => CatComparator::Ne,
            CatComparator::Ne => CatComparator::Eq,
        }
    }
}

/// One antecedent comparison over named roles.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Comparison {
    Numeric {
        comparator: NumComparator,
        metric: Metric,
        role: String,
        constant: i64,
    },
    Categorical {
        comparator: CatComparator,
        op: CatOp,
        roles: Vec<String>,
        value: CatValue,
    },
}

/// Wire form: operators by name, categorical values by token.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum ComparisonRepr {
    #[serde(rename = "numeric")]
    Numeric {
        comparator: NumComparator,
        metric: Metric,
        role: String,
        constant: i64,
    },
    #[serde(rename = "categorical")]
    Categorical {
        comparator: CatComparator,
        operator: String,
        roles: Vec<String>,
        value: String,
    },
}

impl Serialize for Comparison {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = match self {
            Comparison::Numeric {
                comparator,
                metric,
                role,
                constant,
            } => ComparisonRepr::Numeric {
                comparator: *comparator,
                metric: *metric,
                role: role.clone(),
                constant: *constant,
            },
            Comparison::Categorical {
                comparator,
                op,
                roles,
                value,
            } => ComparisonRepr::Categorical {
                comparator: *comparator,
                operator: op.name().to_owned(),
                roles: roles.clone(),
                value: value.token(),
            },
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Comparison {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match ComparisonRepr::deserialize(deserializer)? {
            ComparisonRepr::Numeric {
                comparator,
                metric,
                role,
                constant,
            } => Ok(Comparison::Numeric {
                comparator,
                metric,
                role,
                constant,
            }),
            ComparisonRepr::Categorical {
                comparator,
                operator,
                roles,
                value,
            } => {
                let op = CatOp::from_name(&operator)
                    .ok_or_else(|| D::Error::custom(format!("unknown operator `{operator}`")))?;
                if roles.len() != op.arity() {
                    return Err(D::Error::custom(format!(
                        "{operator} takes {} roles, got {}",
                        op.arity(),
                        roles.len()
                    )));
                }
                let value = op.value_from_token(&value).ok_or_else(|| {
                    D::Error::custom(format!("value `{value}` outside domain of {operator}"))
                })?;
                Ok(Comparison::Categorical {
                    comparator,
                    op,
                    roles,
                    value,
                })
            }
        }
    }
}

impl Comparison {
    pub fn render(&self) -> String {
        match self {
            Comparison::Numeric {
                comparator,
                metric,
                role,
                constant,
            } => format!("{}({role}) {} {constant}", metric.token(), comparator.token()),
            Comparison::Categorical {
                comparator,
                op,
                roles,
                value,
            } => format!(
                "{}({}) {} {}",
                op.name(),
                roles.join(","),
                comparator.token(),
                value.token()
            ),
        }
    }

    pub fn invert_comparator(&mut self) {
        match self {
            Comparison::Numeric { comparator, .. } => *comparator = comparator.inverted(),
            Comparison::Categorical { comparator, .. } => *comparator = comparator.inverted(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Consequent {
    #[serde(rename = "aPattern")]
    APattern,
    #[serde(rename = "notAPattern")]
    NotAPattern,
}

impl Consequent {
    pub fn token(self) -> &'static str {
        match self {
            Consequent::APattern => "aPattern",
            Consequent::NotAPattern => "notAPattern",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Consequent::APattern => Consequent::NotAPattern,
            Consequent::NotAPattern => Consequent::APattern,
        }
    }
}

/// Match counts cached against the dataset a rule was evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RuleStats {
    /// Samples matched by the antecedent.
    pub matched: u32,
    /// Matched samples whose label corresponds to the consequent.
    pub correct: u32,
    /// Dataset size the counts were taken over.
    pub dataset_len: u32,
}

impl RuleStats {
    pub fn support(&self) -> f64 {
        if self.dataset_len == 0 {
            0.0
        } else {
            f64::from(self.correct) / f64::from(self.dataset_len)
        }
    }

    /// Defined as 0 when the antecedent matches nothing.
    pub fn confidence(&self) -> f64 {
        if self.matched == 0 {
            0.0
        } else {
            f64::from(self.correct) / f64::from(self.matched)
        }
    }
}

/// A class association rule: a conjunction of comparisons implying a label,
/// with cached quality counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub antecedent: Vec<Comparison>,
    pub consequent: Consequent,
    pub stats: RuleStats,
}

impl Rule {
    pub fn new(antecedent: Vec<Comparison>, consequent: Consequent) -> Self {
        assert!(!antecedent.is_empty(), "rule antecedent must be non-empty");
        Self {
            antecedent,
            consequent,
            stats: RuleStats::default(),
        }
    }

    pub fn support(&self) -> f64 {
        self.stats.support()
    }

    pub fn confidence(&self) -> f64 {
        self.stats.confidence()
    }

    pub fn render(&self) -> String {
        let body = self
            .antecedent
            .iter()
            .map(Comparison::render)
            .collect::<Vec<_>>()
            .join(" and ");
        format!("if {body} then {}", self.consequent.token())
    }

    /// Sorted, deduplicated comparison renderings. Two rules with the same
    /// normalized antecedent and consequent are the same rule.
    pub fn normalized_antecedent(&self) -> Vec<String> {
        let mut keys: Vec<String> = self.antecedent.iter().map(Comparison::render).collect();
        keys.sort();
        keys.dedup();
        keys
    }

    pub fn identity_key(&self) -> String {
        format!(
            "{} -> {}",
            self.normalized_antecedent().join(" and "),
            self.consequent.token()
        )
    }
}

/// Parses the textual rule syntax produced by [`Rule::render`].
pub fn parse_rule(text: &str, grammar: &Grammar) -> Result<Rule, GrammarError> {
    let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let rest = text
        .strip_prefix("if ")
        .ok_or_else(|| GrammarError::RuleSyntax("rule must start with `if`".into()))?;
    let (body, consq) = rest
        .rsplit_once(" then ")
        .ok_or_else(|| GrammarError::RuleSyntax("rule must contain `then`".into()))?;
    let consequent = match consq.trim() {
        "aPattern" => Consequent::APattern,
        "notAPattern" => Consequent::NotAPattern,
        other => {
            return Err(GrammarError::RuleSyntax(format!(
                "unknown consequent `{other}`"
            )))
        }
    };
    let mut comparisons = Vec::new();
    for clause in body.split(" and ") {
        comparisons.push(parse_comparison(clause.trim(), grammar)?);
    }
    if comparisons.is_empty() {
        return Err(GrammarError::RuleSyntax("empty antecedent".into()));
    }
    Ok(Rule::new(comparisons, consequent))
}

fn parse_comparison(clause: &str, grammar: &Grammar) -> Result<Comparison, GrammarError> {
    let open = clause
        .find('(')
        .ok_or_else(|| GrammarError::RuleSyntax(format!("missing `(` in `{clause}`")))?;
    let close = clause
        .find(')')
        .ok_or_else(|| GrammarError::RuleSyntax(format!("missing `)` in `{clause}`")))?;
    let name = clause[..open].trim();
    let args: Vec<&str> = clause[open + 1..close]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    let tail = clause[close + 1..].trim();
    let (cmp_tok, value_tok) = tail
        .split_once(' ')
        .map(|(a, b)| (a.trim(), b.trim()))
        .ok_or_else(|| GrammarError::RuleSyntax(format!("missing comparator in `{clause}`")))?;

    let check_role = |r: &str| -> Result<String, GrammarError> {
        if grammar.role_index(r).is_some() {
            Ok(r.to_owned())
        } else {
            Err(GrammarError::UnknownRole(r.to_owned()))
        }
    };

    if let Some(metric) = Metric::from_token(name) {
        let comparator = NumComparator::ALL
            .into_iter()
            .find(|c| c.token() == cmp_tok)
            .ok_or_else(|| {
                GrammarError::RuleSyntax(format!("unknown numeric comparator `{cmp_tok}`"))
            })?;
        if args.len() != 1 {
            return Err(GrammarError::RuleSyntax(format!(
                "{name} takes one role argument"
            )));
        }
        let constant: i64 = value_tok
            .parse()
            .map_err(|_| GrammarError::RuleSyntax(format!("bad constant `{value_tok}`")))?;
        return Ok(Comparison::Numeric {
            comparator,
            metric,
            role: check_role(args[0])?,
            constant,
        });
    }

    let op =
        CatOp::from_name(name).ok_or_else(|| GrammarError::UnknownOperator(name.to_owned()))?;
    let comparator = CatComparator::ALL
        .into_iter()
        .find(|c| c.token() == cmp_tok)
        .ok_or_else(|| {
            GrammarError::RuleSyntax(format!("unknown categorical comparator `{cmp_tok}`"))
        })?;
    if args.len() != op.arity() {
        return Err(GrammarError::RuleSyntax(format!(
            "{name} takes {} role arguments, got {}",
            op.arity(),
            args.len()
        )));
    }
    let roles = args
        .iter()
        .map(|r| check_role(r))
        .collect::<Result<Vec<_>, _>>()?;
    let value = op
        .value_from_token(value_tok)
        .ok_or_else(|| GrammarError::ValueOutsideDomain {
            op: name.to_owned(),
            value: value_tok.to_owned(),
        })?;
    Ok(Comparison::Categorical {
        comparator,
        op,
        roles,
        value,
    })
}
