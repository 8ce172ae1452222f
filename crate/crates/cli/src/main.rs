//! Batch command-line pipeline: fact extraction, candidate generation,
//! training, detection and cross-validation.
//!
//! Exit codes: 0 success, 1 partial or degraded result, 2 configuration
//! error, 3 detection attempted with an empty model. Stdout carries
//! human-readable progress only; machine-readable output goes to the
//! files named by `--out`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use patdet::candidates::{
    filter_candidates, generate_candidates, generate_negatives, validate_candidate, Candidate,
    RoleTemplate,
};
use patdet::config::RunConfig;
use patdet::facts::{extract_facts, load_facts, save_facts, CodeFactsGraph};
use patdet::grammar::Label;
use patdet::repository::{
    cross_validate, load_model, save_model, train, LabeledRepository, RepoSample,
};
use patdet::rng::RunRng;

#[derive(Parser)]
#[command(
    name = "patdet",
    about = "Learns design-pattern detection rules from labelled examples and applies them to code",
    version
)]
struct Cli {
    /// Worker threads for parallel stages (cross-validation folds).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract code facts from Java sources into a facts file.
    Extract(ExtractArgs),
    /// Generate role-mapped candidates from a facts file; with
    /// --positives, emit a labelled training repository instead.
    Candidates(CandidatesArgs),
    /// Train a detection model from a labelled repository.
    Train(TrainArgs),
    /// Classify candidates with a trained model.
    Detect(DetectArgs),
    /// Repeated stratified cross-validation over a repository.
    Xval(XvalArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Source directory to scan recursively for .java files.
    #[arg(long)]
    src: PathBuf,
    /// Facts file to write.
    #[arg(long)]
    out: PathBuf,
    /// Extra container type names (comma separated) for element-type
    /// detection, beyond List, Set, Map, Collection and Vector.
    #[arg(long, value_delimiter = ',')]
    containers: Vec<String>,
    /// Extraction report path; defaults to `<out>.report.json`.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CandidatesArgs {
    /// Facts file produced by `extract`.
    #[arg(long)]
    facts: PathBuf,
    /// Pattern name; must match the template.
    #[arg(long)]
    pattern: String,
    /// Role template file.
    #[arg(long)]
    template: PathBuf,
    /// Output: a candidates file, or a labelled repository with
    /// --positives.
    #[arg(long)]
    out: PathBuf,
    /// Positive candidates file; switches output to a training repository
    /// with generated negatives.
    #[arg(long)]
    positives: Option<PathBuf>,
    /// Maximum negatives generated per positive.
    #[arg(long, default_value_t = 3)]
    negatives_per_positive: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    /// Labelled repository file.
    #[arg(long)]
    repo: PathBuf,
    /// Run configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct DetectArgs {
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Facts file for the code under analysis.
    #[arg(long)]
    facts: PathBuf,
    /// Candidates file to classify.
    #[arg(long)]
    candidates: PathBuf,
    /// Detection report to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct XvalArgs {
    #[arg(long)]
    repo: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 30)]
    runs: usize,
    /// Report file to write.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

/// Flag-level overrides applied on top of the configuration file.
#[derive(Args)]
struct ConfigOverrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    support_threshold: Option<f64>,
    #[arg(long)]
    confidence_threshold: Option<f64>,
    #[arg(long)]
    coverage_threshold: Option<u32>,
    #[arg(long)]
    generations: Option<u32>,
    #[arg(long)]
    population_size: Option<usize>,
}

impl ConfigOverrides {
    fn apply(&self, config: &mut RunConfig) -> Result<(), String> {
        let mut set = |key: &str, value: String| -> Result<(), String> {
            config.apply(key, &value, 0).map_err(|e| e.to_string())
        };
        if let Some(v) = self.seed {
            set("seed", v.to_string())?;
        }
        if let Some(v) = &self.strategy {
            set("strategy", v.clone())?;
        }
        if let Some(v) = self.support_threshold {
            set("support_threshold", v.to_string())?;
        }
        if let Some(v) = self.confidence_threshold {
            set("confidence_threshold", v.to_string())?;
        }
        if let Some(v) = self.coverage_threshold {
            set("coverage_threshold", v.to_string())?;
        }
        if let Some(v) = self.generations {
            set("generations", v.to_string())?;
        }
        if let Some(v) = self.population_size {
            set("population_size", v.to_string())?;
        }
        Ok(())
    }
}

const EXIT_OK: u8 = 0;
const EXIT_PARTIAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_EMPTY_MODEL: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli.jobs.max(1);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot build worker pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let result = pool.install(|| run(cli.command));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn run(command: Command) -> Result<u8, String> {
    match command {
        Command::Extract(args) => cmd_extract(args),
        Command::Candidates(args) => cmd_candidates(args),
        Command::Train(args) => cmd_train(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Xval(args) => cmd_xval(args),
    }
}

fn cmd_extract(args: ExtractArgs) -> Result<u8, String> {
    let (graph, report) =
        extract_facts(&args.src, &args.containers).map_err(|e| e.to_string())?;
    if report.files_parsed == 0 {
        return Err(format!(
            "no parsable source files under `{}`",
            args.src.display()
        ));
    }
    save_facts(&graph, &args.out).map_err(|e| e.to_string())?;
    let report_path = args
        .report
        .unwrap_or_else(|| sibling(&args.out, ".report.json"));
    std::fs::write(&report_path, report.to_json()).map_err(|e| e.to_string())?;
    println!(
        "parsed {} files, {} skipped; {} artifacts -> {}",
        report.files_parsed,
        report.files_skipped.len(),
        graph.len(),
        args.out.display()
    );
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    if report.files_skipped.is_empty() {
        Ok(EXIT_OK)
    } else {
        for skipped in &report.files_skipped {
            eprintln!("skipped {}: {}", skipped.path, skipped.reason);
        }
        Ok(EXIT_PARTIAL)
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn load_template(path: &Path, pattern: &str) -> Result<RoleTemplate, String> {
    let template = RoleTemplate::load(path).map_err(|e| e.to_string())?;
    if template.pattern != pattern {
        return Err(format!(
            "template is for pattern `{}`, not `{pattern}`",
            template.pattern
        ));
    }
    Ok(template)
}

fn candidates_to_json(pattern: &str, candidates: &[Candidate]) -> String {
    let list: Vec<serde_json::Value> = candidates
        .iter()
        .map(|c| {
            let map: serde_json::Map<String, serde_json::Value> = c
                .role_map
                .iter()
                .map(|(r, a)| (r.clone(), serde_json::Value::String(a.as_str().to_owned())))
                .collect();
            serde_json::json!({ "roleMap": map })
        })
        .collect();
    let doc = serde_json::json!({
        "version": 1,
        "pattern": pattern,
        "candidates": list,
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("candidates serialize");
    out.push('\n');
    out
}

fn candidates_from_json(text: &str, pattern_hint: Option<&str>) -> Result<Vec<Candidate>, String> {
    let doc: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if doc.get("version").and_then(serde_json::Value::as_u64) != Some(1) {
        return Err("unsupported candidates file version".to_owned());
    }
    let pattern = doc
        .get("pattern")
        .and_then(serde_json::Value::as_str)
        .ok_or("candidates file missing `pattern`")?
        .to_owned();
    if let Some(hint) = pattern_hint {
        if hint != pattern {
            return Err(format!(
                "candidates file is for pattern `{pattern}`, expected `{hint}`"
            ));
        }
    }
    let list = doc
        .get("candidates")
        .and_then(serde_json::Value::as_array)
        .ok_or("candidates file missing `candidates`")?;
    list.iter()
        .map(|entry| {
            let map = entry
                .get("roleMap")
                .and_then(serde_json::Value::as_object)
                .ok_or("candidate missing `roleMap`")?;
            let role_map = map
                .iter()
                .map(|(role, artifact)| {
                    let artifact = artifact
                        .as_str()
                        .ok_or("role bindings must be strings")?
                        .to_owned();
                    Ok((role.clone(), patdet::facts::ArtifactId::new(artifact)))
                })
                .collect::<Result<_, String>>()?;
            Ok(Candidate {
                pattern: pattern.clone(),
                role_map,
            })
        })
        .collect()
}

fn cmd_candidates(args: CandidatesArgs) -> Result<u8, String> {
    let graph = load_facts(&args.facts).map_err(|e| e.to_string())?;
    let template = load_template(&args.template, &args.pattern)?;
    let generated = generate_candidates(&graph, &template).map_err(|e| e.to_string())?;
    let filtered =
        filter_candidates(generated, &template, &graph).map_err(|e| e.to_string())?;

    let Some(positives_path) = &args.positives else {
        std::fs::write(&args.out, candidates_to_json(&args.pattern, &filtered))
            .map_err(|e| e.to_string())?;
        println!(
            "{} candidates for `{}` -> {}",
            filtered.len(),
            args.pattern,
            args.out.display()
        );
        return Ok(EXIT_OK);
    };

    // Labelled-repository mode: positives plus generated negatives.
    if args.negatives_per_positive == 0 {
        return Err("--negatives-per-positive must be at least 1".to_owned());
    }
    let positives_text = std::fs::read_to_string(positives_path).map_err(|e| e.to_string())?;
    let positives = candidates_from_json(&positives_text, Some(&args.pattern))?;
    for candidate in &positives {
        validate_candidate(candidate, &template.roles, &graph).map_err(|e| e.to_string())?;
    }
    let mut rng = RunRng::seeded(args.seed);
    let negatives = generate_negatives(
        &positives,
        &graph,
        &template,
        args.negatives_per_positive,
        &mut rng,
    )
    .map_err(|e| e.to_string())?;

    let graph = Arc::new(graph);
    let mut projects = BTreeMap::new();
    projects.insert("p0".to_owned(), graph);
    let mut samples = Vec::new();
    for candidate in &positives {
        samples.push(RepoSample {
            candidate: candidate.clone(),
            label: Label::Positive,
            project: "p0".to_owned(),
        });
    }
    for candidate in &negatives {
        samples.push(RepoSample {
            candidate: candidate.clone(),
            label: Label::Negative,
            project: "p0".to_owned(),
        });
    }
    let repo = LabeledRepository::new(args.pattern.clone(), projects, samples)
        .map_err(|e| e.to_string())?;
    repo.save(&args.out).map_err(|e| e.to_string())?;
    println!(
        "repository with {} positives and {} generated negatives -> {}",
        positives.len(),
        negatives.len(),
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn load_config(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<RunConfig, String> {
    let mut config = match path {
        Some(p) => RunConfig::load(p).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    overrides.apply(&mut config)?;
    Ok(config)
}

fn cmd_train(args: TrainArgs) -> Result<u8, String> {
    let config = load_config(args.config.as_deref(), &args.overrides)?;
    let repo = LabeledRepository::load(&args.repo).map_err(|e| e.to_string())?;
    let outcome = train(&repo, &config.train_settings()).map_err(|e| e.to_string())?;
    save_model(&outcome.model, &args.out).map_err(|e| e.to_string())?;
    println!(
        "mined {} archive rules, kept {} after pruning -> {}",
        outcome.archive_size,
        outcome.model.rules.len(),
        args.out.display()
    );
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    if outcome.model.is_degenerate() {
        Ok(EXIT_PARTIAL)
    } else {
        Ok(EXIT_OK)
    }
}

fn detection_report(
    model: &patdet::classifier::DetectionModel,
    candidates: &[Candidate],
    graph: &CodeFactsGraph,
) -> (String, usize) {
    let mut detected = 0;
    let results: Vec<serde_json::Value> = candidates
        .iter()
        .map(|candidate| {
            let verdict = model.classify(candidate, graph);
            if verdict.label == patdet::grammar::Consequent::APattern {
                detected += 1;
            }
            let rules: Vec<String> = verdict
                .explanation
                .iter()
                .map(|&i| model.rules[i].rule.render())
                .collect();
            let role_map: serde_json::Map<String, serde_json::Value> = candidate
                .role_map
                .iter()
                .map(|(r, a)| (r.clone(), serde_json::Value::String(a.as_str().to_owned())))
                .collect();
            serde_json::json!({
                "roleMap": role_map,
                "verdict": verdict.label.token(),
                "rules": rules,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "version": 1,
        "pattern": model.pattern,
        "strategy": model.strategy.token(),
        "results": results,
        "summary": {
            "aPattern": detected,
            "notAPattern": candidates.len() - detected,
        },
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("report serialize");
    out.push('\n');
    (out, detected)
}

fn cmd_detect(args: DetectArgs) -> Result<u8, String> {
    let model = load_model(&args.model).map_err(|e| e.to_string())?;
    let graph = load_facts(&args.facts).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(&args.candidates).map_err(|e| e.to_string())?;
    let candidates = candidates_from_json(&text, Some(&model.pattern))?;
    for candidate in &candidates {
        validate_candidate(candidate, &model.roles, &graph).map_err(|e| e.to_string())?;
    }
    let (report, detected) = detection_report(&model, &candidates, &graph);
    std::fs::write(&args.out, report).map_err(|e| e.to_string())?;
    println!(
        "classified {} candidates, {} detected -> {}",
        candidates.len(),
        detected,
        args.out.display()
    );
    if model.is_degenerate() {
        eprintln!("warning: the model has no rules; every candidate defaults to notAPattern");
        Ok(EXIT_EMPTY_MODEL)
    } else {
        Ok(EXIT_OK)
    }
}

fn cmd_xval(args: XvalArgs) -> Result<u8, String> {
    if args.folds < 2 {
        return Err("xval needs at least 2 folds".to_owned());
    }
    if args.runs < 1 {
        return Err("xval needs at least 1 run".to_owned());
    }
    let config = load_config(args.config.as_deref(), &args.overrides)?;
    let repo = LabeledRepository::load(&args.repo).map_err(|e| e.to_string())?;
    let report = cross_validate(
        &repo,
        &[config.train_settings()],
        args.folds,
        args.runs,
        config.evolution.seed,
    )
    .map_err(|e| e.to_string())?;
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    text.push('\n');
    std::fs::write(&args.out, text).map_err(|e| e.to_string())?;
    let f1 = &report.configs[0].metrics["f1"];
    println!(
        "{} folds x {} runs: F1 {:.4} +/- {:.4} -> {}",
        args.folds,
        args.runs,
        f1.mean,
        f1.std,
        args.out.display()
    );
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(EXIT_OK)
}
