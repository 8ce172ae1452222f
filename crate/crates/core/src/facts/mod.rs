//! Code facts: the data model, a portable JSON facts format, a Java-subset
//! source extractor, and the numerical metrics and categorical operators
//! evaluated over the graph.

mod extract;
mod io;
mod metrics;
mod model;
mod ops;
mod source;

pub use extract::{extract_facts, ExtractionReport, SkippedFile, DEFAULT_CONTAINER_TYPES};
pub use io::{graph_from_value, graph_to_value, load_facts, save_facts, to_canonical_json};
pub use metrics::{compute_metric, Metric};
pub use model::{
    Artifact, ArtifactId, ArtifactKind, ArtifactMap, CodeFactsGraph, FieldFact, InstGuard,
    MethodFact, Visibility,
};
pub use ops::{eval_categorical, AggregationValue, ArtefactLink, CatOp, CatValue, MethodLink,
    Multiplicity, PatternMatchKind};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FactsError {
    #[error("artifact id must not be empty")]
    EmptyArtifactId,
    #[error("duplicate artifact id `{id}`")]
    DuplicateArtifact { id: ArtifactId },
    #[error("`{from}` references unknown artifact `{to}` as {role}")]
    DanglingReference {
        from: ArtifactId,
        to: ArtifactId,
        role: String,
    },
    #[error("supertype cycle involving {}", members.join(", "))]
    SupertypeCycle { members: Vec<String> },
    #[error("`{id}` declares more than one superclass")]
    MultipleSuperclasses { id: ArtifactId },
    #[error("interface `{id}` must not implement interfaces")]
    InterfaceImplements { id: ArtifactId },
    #[error("external stub `{id}` must not declare members")]
    ExternalWithMembers { id: ArtifactId },
    #[error("constructor `{signature}` of `{id}` declares a return type")]
    ConstructorWithReturn { id: ArtifactId, signature: String },
    #[error("duplicate method signature `{signature}` in `{id}`")]
    DuplicateSignature { id: ArtifactId, signature: String },
    #[error("source root `{0}` does not exist or is not a directory")]
    MissingSourceRoot(String),
    #[error("no parsable source files under `{0}`")]
    NoParsableFiles(String),
    #[error("unsupported facts file version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed facts file: {0}")]
    Malformed(String),
    #[error("metric {metric} is undefined for external artifact `{id}`")]
    MetricOnExternal { metric: String, id: ArtifactId },
    #[error("unknown artifact `{0}`")]
    UnknownArtifact(ArtifactId),
    #[error("operator {op} expects {expected} arguments, got {got}")]
    ArityMismatch {
        op: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("typeOf is undefined for external artifact `{0}`")]
    TypeOfExternal(ArtifactId),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
