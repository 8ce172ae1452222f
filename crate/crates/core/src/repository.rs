//! Labelled-sample repositories, train/test orchestration, evaluation
//! metrics, stratified cross-validation and model persistence.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::Candidate;
use crate::classifier::{prune_database_coverage, DetectionModel, Strategy, DEFAULT_LAP_K};
use crate::evolution::{run_g3p4dpd_on, EvolutionConfig, EvolutionError};
use crate::facts::{graph_from_value, graph_to_value, CatOp, CodeFactsGraph, FactsError, Metric};
use crate::grammar::{
    build_grammar, const_ranges_from_graph, Consequent, Dataset, DatasetEval, GrammarError, Label,
    Sample,
};
use crate::rng::{derive_seed, RunRng};

#[derive(Debug, Error)]
pub enum RepoError {
    #[error("repository must contain at least one sample")]
    Empty,
    #[error("sample references unknown project `{0}`")]
    UnknownProject(String),
    #[error("samples disagree on role sets: {0:?} vs {1:?}")]
    InconsistentRoles(Vec<String>, Vec<String>),
    #[error("cross validation needs at least 2 folds, got {0}")]
    BadFoldCount(usize),
    #[error("unsupported repository file version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed repository file: {0}")]
    Malformed(String),
    #[error("unsupported model file version {0}")]
    UnsupportedModelVersion(u32),
    #[error("malformed model file: {0}")]
    MalformedModel(String),
    #[error(transparent)]
    Facts(#[from] FactsError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One labelled candidate with project provenance.
#[derive(Debug, Clone)]
pub struct RepoSample {
    pub candidate: Candidate,
    pub label: Label,
    pub project: String,
}

/// Positive and negative candidates for one pattern across one or more
/// projects.
#[derive(Debug, Clone)]
pub struct LabeledRepository {
    pub pattern: String,
    pub projects: BTreeMap<String, Arc<CodeFactsGraph>>,
    pub samples: Vec<RepoSample>,
}

impl LabeledRepository {
    pub fn new(
        pattern: String,
        projects: BTreeMap<String, Arc<CodeFactsGraph>>,
        samples: Vec<RepoSample>,
    ) -> Result<Self, RepoError> {
        if samples.is_empty() {
            return Err(RepoError::Empty);
        }
        let roles: Vec<String> = samples[0].candidate.role_map.keys().cloned().collect();
        for s in &samples {
            if !projects.contains_key(&s.project) {
                return Err(RepoError::UnknownProject(s.project.clone()));
            }
            let sample_roles: Vec<String> = s.candidate.role_map.keys().cloned().collect();
            if sample_roles != roles {
                return Err(RepoError::InconsistentRoles(roles, sample_roles));
            }
        }
        Ok(Self {
            pattern,
            projects,
            samples,
        })
    }

    /// Role names, in the stable sorted order used by grammars and models.
    pub fn roles(&self) -> Vec<String> {
        self.samples[0].candidate.role_map.keys().cloned().collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Flattens the repository into an evaluation dataset. Graphs are
    /// ordered by project id; the dataset is validated on construction.
    pub fn to_dataset(&self) -> Result<Dataset, RepoError> {
        let ids: Vec<&String> = self.projects.keys().collect();
        let graphs: Vec<Arc<CodeFactsGraph>> = self.projects.values().cloned().collect();
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                candidate: s.candidate.clone(),
                label: s.label,
                graph: ids.iter().position(|id| **id == s.project).unwrap(),
            })
            .collect();
        Ok(Dataset::new(graphs, samples)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RepoError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = RepositoryFile {
            version: REPOSITORY_VERSION,
            pattern: self.pattern.clone(),
            projects: self
                .projects
                .iter()
                .map(|(id, graph)| ProjectEntry {
                    id: id.clone(),
                    facts: graph_to_value(graph),
                })
                .collect(),
            samples: self
                .samples
                .iter()
                .map(|s| SampleEntry {
                    project: s.project.clone(),
                    label: s.label,
                    role_map: s
                        .candidate
                        .role_map
                        .iter()
                        .map(|(r, a)| (r.clone(), a.as_str().to_owned()))
                        .collect(),
                })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&file).expect("repository serialize");
        out.push('\n');
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RepoError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, RepoError> {
        let file: RepositoryFile =
            serde_json::from_str(text).map_err(|e| RepoError::Malformed(e.to_string()))?;
        if file.version != REPOSITORY_VERSION {
            return Err(RepoError::UnsupportedVersion(file.version));
        }
        let mut projects = BTreeMap::new();
        for p in file.projects {
            projects.insert(p.id, Arc::new(graph_from_value(p.facts)?));
        }
        let samples = file
            .samples
            .into_iter()
            .map(|s| RepoSample {
                candidate: Candidate {
                    pattern: file.pattern.clone(),
                    role_map: s
                        .role_map
                        .into_iter()
                        .map(|(r, a)| (r, crate::facts::ArtifactId::new(a)))
                        .collect(),
                },
                label: s.label,
                project: s.project,
            })
            .collect();
        Self::new(file.pattern, projects, samples)
    }
}

pub const REPOSITORY_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RepositoryFile {
    version: u32,
    pattern: String,
    projects: Vec<ProjectEntry>,
    samples: Vec<SampleEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectEntry {
    id: String,
    facts: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SampleEntry {
    project: String,
    label: Label,
    role_map: BTreeMap<String, String>,
}

/// Classification quality over a test set. Metrics with zero denominators
/// are reported as 0 and listed in `undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: u32,
    pub fp: u32,
    pub tn: u32,
    #[serde(rename = "fn")]
    pub fn_: u32,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
    pub undefined: Vec<String>,
}

impl Metrics {
    pub fn from_counts(tp: u32, fp: u32, tn: u32, fn_: u32) -> Self {
        let mut undefined = Vec::new();
        let mut ratio = |num: u32, den: u32, name: &str| -> f64 {
            if den == 0 {
                undefined.push(name.to_owned());
                0.0
            } else {
                f64::from(num) / f64::from(den)
            }
        };
        let accuracy = ratio(tp + tn, tp + tn + fp + fn_, "accuracy");
        let precision = ratio(tp, tp + fp, "precision");
        let recall = ratio(tp, tp + fn_, "recall");
        let specificity = ratio(tn, tn + fp, "specificity");
        let f1 = if precision + recall == 0.0 {
            undefined.push("f1".to_owned());
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            tp,
            fp,
            tn,
            fn_,
            accuracy,
            precision,
            recall,
            specificity,
            f1,
            undefined,
        }
    }
}

/// Everything train needs beyond the repository itself. Defaults follow
/// the general-purpose setup: support 0.01, confidence 0.7, weighted
/// chi-squared strategy, coverage threshold 1.
#[derive(Debug, Clone)]
pub struct TrainSettings {
    pub evolution: EvolutionConfig,
    pub metrics: Vec<Metric>,
    pub cat_ops: Vec<CatOp>,
    pub strategy: Strategy,
    pub coverage_threshold: u32,
    pub lap_k: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            evolution: EvolutionConfig::default(),
            metrics: Metric::ALL.to_vec(),
            cat_ops: CatOp::ALL.to_vec(),
            strategy: Strategy::DfmlChi2,
            coverage_threshold: 1,
            lap_k: DEFAULT_LAP_K,
        }
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: DetectionModel,
    /// Archive size before pruning.
    pub archive_size: usize,
    pub warnings: Vec<String>,
}

/// Trains a detection model on the whole repository.
pub fn train(repo: &LabeledRepository, settings: &TrainSettings) -> Result<TrainOutcome, RepoError> {
    let dataset = repo.to_dataset()?;
    let indices = dataset.all_indices();
    train_on(&dataset, &repo.pattern, &repo.roles(), settings, &indices)
}

/// Trains on a subset of a dataset's samples; held-out samples are never
/// read (the evaluation table is built only over `indices`).
pub fn train_on(
    dataset: &Dataset,
    pattern: &str,
    roles: &[String],
    settings: &TrainSettings,
    indices: &[u32],
) -> Result<TrainOutcome, RepoError> {
    let mut const_ranges = BTreeMap::new();
    for graph in dataset.graphs() {
        for (metric, (lo, hi)) in const_ranges_from_graph(graph, &settings.metrics) {
            let entry = const_ranges.entry(metric).or_insert((lo, hi));
            entry.0 = entry.0.min(lo);
            entry.1 = entry.1.max(hi);
        }
    }
    let grammar = build_grammar(roles, &settings.metrics, &settings.cat_ops, &const_ranges)?;
    let eval = DatasetEval::build_for(&grammar, dataset, indices)?;
    let mined = run_g3p4dpd_on(&settings.evolution, &grammar, &eval, indices)?;
    let mut warnings = mined.warnings;

    let pruned = prune_database_coverage(&mined.rules, dataset, indices, settings.coverage_threshold);
    let (pos, _neg) = dataset.label_counts(indices);
    let model = DetectionModel::new(
        pattern.to_owned(),
        roles.to_vec(),
        settings.strategy,
        settings.lap_k,
        settings.coverage_threshold,
        indices.len() as u32,
        pos,
        pruned,
    );
    if model.is_degenerate() {
        warnings.push("empty archive: the model contains no rules and detects nothing".into());
    }
    Ok(TrainOutcome {
        model,
        archive_size: mined.rules.len(),
        warnings,
    })
}

/// Classifies labelled candidates from one graph and tallies the confusion
/// counts; the positive class is `aPattern`.
pub fn evaluate(
    model: &DetectionModel,
    test_samples: &[(Candidate, Label)],
    graph: &CodeFactsGraph,
) -> Metrics {
    let mut tp = 0;
    let mut fp = 0;
    let mut tn = 0;
    let mut fn_ = 0;
    for (candidate, label) in test_samples {
        let verdict = model.classify(candidate, graph).label;
        match (verdict, label) {
            (Consequent::APattern, Label::Positive) => tp += 1,
            (Consequent::APattern, Label::Negative) => fp += 1,
            (Consequent::NotAPattern, Label::Negative) => tn += 1,
            (Consequent::NotAPattern, Label::Positive) => fn_ += 1,
        }
    }
    Metrics::from_counts(tp, fp, tn, fn_)
}

/// Same tally over dataset samples selected by index.
pub fn evaluate_on(model: &DetectionModel, dataset: &Dataset, indices: &[u32]) -> Metrics {
    let mut tp = 0;
    let mut fp = 0;
    let mut tn = 0;
    let mut fn_ = 0;
    for &i in indices {
        let sample = dataset.sample(i as usize);
        let graph = dataset.graph_of(i as usize);
        let verdict = model.classify(&sample.candidate, graph).label;
        match (verdict, sample.label) {
            (Consequent::APattern, Label::Positive) => tp += 1,
            (Consequent::APattern, Label::Negative) => fp += 1,
            (Consequent::NotAPattern, Label::Negative) => tn += 1,
            (Consequent::NotAPattern, Label::Positive) => fn_ += 1,
        }
    }
    Metrics::from_counts(tp, fp, tn, fn_)
}

/// Index partition for one cross-validation run.
#[derive(Debug, Clone)]
pub struct FoldSplit {
    pub train: Vec<u32>,
    pub test: Vec<u32>,
}

/// Stratified k-fold assignment. Classes are shuffled separately and dealt
/// round-robin, keeping per-fold class ratios within one sample of the
/// global ratio. When either class has fewer than k samples, falls back to
/// unstratified random assignment and reports it.
pub fn stratified_kfold(
    labels: &[Label],
    k: usize,
    seed: u64,
) -> Result<(Vec<FoldSplit>, bool), RepoError> {
    if k < 2 {
        return Err(RepoError::BadFoldCount(k));
    }
    let mut rng = RunRng::seeded(seed);
    let mut positives: Vec<u32> = Vec::new();
    let mut negatives: Vec<u32> = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        match label {
            Label::Positive => positives.push(i as u32),
            Label::Negative => negatives.push(i as u32),
        }
    }
    let strict = positives.len() >= k && negatives.len() >= k;

    let mut fold_of = vec![0usize; labels.len()];
    if strict {
        rng.shuffle(&mut positives);
        rng.shuffle(&mut negatives);
        for (pos, &i) in positives.iter().enumerate() {
            fold_of[i as usize] = pos % k;
        }
        for (pos, &i) in negatives.iter().enumerate() {
            fold_of[i as usize] = pos % k;
        }
    } else {
        let mut all: Vec<u32> = (0..labels.len() as u32).collect();
        rng.shuffle(&mut all);
        for (pos, &i) in all.iter().enumerate() {
            fold_of[i as usize] = pos % k;
        }
    }

    let folds = (0..k)
        .map(|f| {
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (i, &fold) in fold_of.iter().enumerate() {
                if fold == f {
                    test.push(i as u32);
                } else {
                    train.push(i as u32);
                }
            }
            FoldSplit { train, test }
        })
        .collect();
    Ok((folds, strict))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

fn mean_std(values: &[f64]) -> MeanStd {
    if values.is_empty() {
        return MeanStd {
            mean: 0.0,
            std: 0.0,
        };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    MeanStd { mean, std }
}

/// Mean and standard deviation of each metric for one configuration,
/// aggregated over runs x folds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfigReport {
    pub strategy: Strategy,
    pub support_threshold: f64,
    pub confidence_threshold: f64,
    pub coverage_threshold: u32,
    pub metrics: BTreeMap<String, MeanStd>,
    pub empty_models: u32,
    pub evaluated_folds: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct XvalReport {
    pub version: u32,
    pub pattern: String,
    pub folds: usize,
    pub runs: usize,
    pub seed: u64,
    pub stratified: bool,
    pub warnings: Vec<String>,
    pub configs: Vec<ConfigReport>,
}

/// Repeated stratified cross-validation over one or more configurations.
///
/// Jobs (one per run x fold x config) fan out across the rayon pool; each
/// job derives its own seed from the master seed and its coordinates, so
/// the report is identical at any parallelism.
pub fn cross_validate(
    repo: &LabeledRepository,
    settings_grid: &[TrainSettings],
    folds: usize,
    runs: usize,
    master_seed: u64,
) -> Result<XvalReport, RepoError> {
    let dataset = repo.to_dataset()?;
    let labels = repo.labels();
    let roles = repo.roles();
    let mut warnings = Vec::new();

    let mut splits_per_run = Vec::with_capacity(runs);
    let mut stratified_all = true;
    for run in 0..runs {
        // The fold-split seed uses coordinate `folds`, one past any job
        // fold index, so it never collides with a job seed.
        let split_seed = derive_seed(master_seed, run as u64, folds as u64);
        let (splits, strict) = stratified_kfold(&labels, folds, split_seed)?;
        if !strict {
            stratified_all = false;
        }
        splits_per_run.push(splits);
    }
    if !stratified_all {
        warnings.push(format!(
            "a class has fewer than {folds} samples; fell back to unstratified assignment"
        ));
    }

    struct Job {
        config: usize,
        run: usize,
        fold: usize,
    }
    let jobs: Vec<Job> = (0..settings_grid.len())
        .flat_map(|config| {
            (0..runs).flat_map(move |run| (0..folds).map(move |fold| Job { config, run, fold }))
        })
        .collect();

    type JobResult = Result<(usize, Option<Metrics>, bool), RepoError>;
    let results: Vec<JobResult> = jobs
        .par_iter()
        .map(|job| {
            let split = &splits_per_run[job.run][job.fold];
            if split.test.is_empty() || split.train.is_empty() {
                return Ok((job.config, None, false));
            }
            let mut settings = settings_grid[job.config].clone();
            settings.evolution.seed = derive_seed(master_seed, job.run as u64, job.fold as u64);
            let outcome = train_on(&dataset, &repo.pattern, &roles, &settings, &split.train)?;
            let metrics = evaluate_on(&outcome.model, &dataset, &split.test);
            Ok((job.config, Some(metrics), outcome.model.is_degenerate()))
        })
        .collect();

    let mut per_config: Vec<Vec<Metrics>> = vec![Vec::new(); settings_grid.len()];
    let mut empty_models = vec![0u32; settings_grid.len()];
    for result in results {
        let (config, metrics, degenerate) = result?;
        if degenerate {
            empty_models[config] += 1;
        }
        if let Some(m) = metrics {
            per_config[config].push(m);
        }
    }

    let configs = settings_grid
        .iter()
        .enumerate()
        .map(|(i, settings)| {
            let ms = &per_config[i];
            let collect = |f: fn(&Metrics) -> f64| -> Vec<f64> { ms.iter().map(f).collect() };
            let mut metrics = BTreeMap::new();
            metrics.insert("accuracy".to_owned(), mean_std(&collect(|m| m.accuracy)));
            metrics.insert("precision".to_owned(), mean_std(&collect(|m| m.precision)));
            metrics.insert("recall".to_owned(), mean_std(&collect(|m| m.recall)));
            metrics.insert(
                "specificity".to_owned(),
                mean_std(&collect(|m| m.specificity)),
            );
            metrics.insert("f1".to_owned(), mean_std(&collect(|m| m.f1)));
            ConfigReport {
                strategy: settings.strategy,
                support_threshold: settings.evolution.support_threshold,
                confidence_threshold: settings.evolution.confidence_threshold,
                coverage_threshold: settings.coverage_threshold,
                metrics,
                empty_models: empty_models[i],
                evaluated_folds: ms.len() as u32,
            }
        })
        .collect();

    Ok(XvalReport {
        version: 1,
        pattern: repo.pattern.clone(),
        folds,
        runs,
        seed: master_seed,
        stratified: stratified_all,
        warnings,
        configs,
    })
}

pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    model: DetectionModel,
}

pub fn model_to_json(model: &DetectionModel) -> String {
    let mut out = serde_json::to_string_pretty(&ModelFile {
        version: MODEL_VERSION,
        model: model.clone(),
    })
    .expect("model serialize");
    out.push('\n');
    out
}

pub fn save_model(model: &DetectionModel, path: impl AsRef<Path>) -> Result<(), RepoError> {
    std::fs::write(path, model_to_json(model))?;
    Ok(())
}

pub fn model_from_json(text: &str) -> Result<DetectionModel, RepoError> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| RepoError::MalformedModel(e.to_string()))?;
    if file.version != MODEL_VERSION {
        return Err(RepoError::UnsupportedModelVersion(file.version));
    }
    Ok(file.model)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<DetectionModel, RepoError> {
    let text = std::fs::read_to_string(path)?;
    model_from_json(&text)
}
