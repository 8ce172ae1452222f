//! Run configuration: a flat `key = value` text file with defaults for
//! every knob of the mining and classification pipeline. Unknown keys are
//! rejected so typos cannot silently fall back to defaults.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::classifier::{Strategy, DEFAULT_LAP_K};
use crate::evolution::EvolutionConfig;
use crate::facts::{CatOp, Metric};
use crate::repository::TrainSettings;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    BadLine { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// All pipeline parameters. Defaults: population 100, 150 generations,
/// crossover 0.8, derivation budget 25, unbounded archive, support 0.01,
/// confidence 0.7, weighted chi-squared strategy, coverage threshold 1,
/// all operators enabled.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub evolution: EvolutionConfig,
    pub strategy: Strategy,
    pub coverage_threshold: u32,
    pub lap_k: usize,
    pub metrics: Vec<Metric>,
    pub cat_ops: Vec<CatOp>,
    /// Role list override; defaults to the roles found in the repository.
    pub roles: Option<Vec<String>>,
    pub template: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            evolution: EvolutionConfig::default(),
            strategy: Strategy::DfmlChi2,
            coverage_threshold: 1,
            lap_k: DEFAULT_LAP_K,
            metrics: Metric::ALL.to_vec(),
            cat_ops: CatOp::ALL.to_vec(),
            roles: None,
            template: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(ConfigError::BadLine {
                    line,
                    text: raw.to_owned(),
                });
            };
            config.apply(key.trim(), value.trim(), line)?;
        }
        Ok(config)
    }

    pub fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let bad = |reason: String| ConfigError::BadValue {
            line,
            key: key.to_owned(),
            reason,
        };
        match key {
            "population_size" => {
                self.evolution.pop_size = value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "generations" => {
                self.evolution.max_generations = value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "crossover_probability" => {
                self.evolution.crossover_prob = value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "max_derivations" => {
                self.evolution.max_derivations = value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "external_archive_size" => {
                self.evolution.external_archive_size =
                    value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "support_threshold" => {
                self.evolution.support_threshold =
                    value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "confidence_threshold" => {
                self.evolution.confidence_threshold =
                    value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "seed" => self.evolution.seed = value.parse().map_err(|e| bad(format!("{e}")))?,
            "coverage_threshold" => {
                self.coverage_threshold = value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "lap_k" => self.lap_k = value.parse().map_err(|e| bad(format!("{e}")))?,
            "strategy" => {
                self.strategy = Strategy::from_token(value)
                    .ok_or_else(|| bad(format!("unknown strategy `{value}`")))?
            }
            "numeric_operators" => {
                self.metrics = match value {
                    "all" => Metric::ALL.to_vec(),
                    "none" => Vec::new(),
                    list => list
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| {
                            Metric::from_token(s)
                                .ok_or_else(|| bad(format!("unknown metric `{s}`")))
                        })
                        .collect::<Result<_, _>>()?,
                }
            }
            "categorical_operators" => {
                self.cat_ops = match value {
                    "all" => CatOp::ALL.to_vec(),
                    "none" => Vec::new(),
                    list => list
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| {
                            CatOp::from_name(s)
                                .ok_or_else(|| bad(format!("unknown operator `{s}`")))
                        })
                        .collect::<Result<_, _>>()?,
                }
            }
            "roles" => {
                self.roles = Some(
                    value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::to_owned)
                        .collect(),
                )
            }
            "template" => self.template = Some(PathBuf::from(value)),
            other => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: other.to_owned(),
                })
            }
        }
        Ok(())
    }

    pub fn train_settings(&self) -> TrainSettings {
        TrainSettings {
            evolution: self.evolution.clone(),
            metrics: self.metrics.clone(),
            cat_ops: self.cat_ops.clone(),
            strategy: self.strategy,
            coverage_threshold: self.coverage_threshold,
            lap_k: self.lap_k,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_documented_setup() {
        let c = RunConfig::default();
        assert_eq!(c.evolution.pop_size, 100);
        assert_eq!(c.evolution.max_generations, 150);
        assert!((c.evolution.crossover_prob - 0.8).abs() < 1e-12);
        assert_eq!(c.evolution.max_derivations, 25);
        assert_eq!(c.evolution.external_archive_size, 0);
        assert!((c.evolution.support_threshold - 0.01).abs() < 1e-12);
        assert!((c.evolution.confidence_threshold - 0.7).abs() < 1e-12);
        assert_eq!(c.strategy, Strategy::DfmlChi2);
        assert_eq!(c.coverage_threshold, 1);
        assert_eq!(c.lap_k, 5);
    }

    #[test]
    fn parses_keys_and_comments() {
        let text = r#"
            # tuned run
            population_size = 40
            generations = 30
            strategy = MAXL
            numeric_operators = NOM, DIT
            categorical_operators = ctorVisibility, staticField
            roles = adapter, adaptee, target
        "#;
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.evolution.pop_size, 40);
        assert_eq!(c.strategy, Strategy::Maxl);
        assert_eq!(c.metrics, vec![Metric::NOM, Metric::DIT]);
        assert_eq!(c.cat_ops.len(), 2);
        assert_eq!(
            c.roles.as_deref().unwrap(),
            &["adapter".to_owned(), "adaptee".to_owned(), "target".to_owned()]
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            RunConfig::parse("popsize = 10"),
            Err(ConfigError::UnknownKey { .. })
        ));
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(matches!(
            RunConfig::parse("population_size = many"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            RunConfig::parse("strategy = BEST"),
            Err(ConfigError::BadValue { .. })
        ));
    }
}
