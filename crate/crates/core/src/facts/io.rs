//! Facts file format: a versioned JSON document holding the canonical
//! artifact list. Loading re-validates referential integrity, so a loaded
//! graph carries the same guarantees as a freshly built one.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Artifact, CodeFactsGraph};
use super::FactsError;

pub const FACTS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactsFile {
    version: u32,
    artifacts: Vec<Artifact>,
}

/// Canonical JSON rendering of a graph. `load` followed by `save` is the
/// identity on this form.
pub fn to_canonical_json(graph: &CodeFactsGraph) -> String {
    let file = FactsFile {
        version: FACTS_VERSION,
        artifacts: graph.artifacts().to_vec(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("facts serialize");
    out.push('\n');
    out
}

pub fn save_facts(graph: &CodeFactsGraph, path: impl AsRef<Path>) -> Result<(), FactsError> {
    fs::write(path, to_canonical_json(graph))?;
    Ok(())
}

pub fn load_facts(path: impl AsRef<Path>) -> Result<CodeFactsGraph, FactsError> {
    let text = fs::read_to_string(path)?;
    load_facts_str(&text)
}

pub fn load_facts_str(text: &str) -> Result<CodeFactsGraph, FactsError> {
    let file: FactsFile =
        serde_json::from_str(text).map_err(|e| FactsError::Malformed(e.to_string()))?;
    if file.version != FACTS_VERSION {
        return Err(FactsError::UnsupportedVersion(file.version));
    }
    CodeFactsGraph::new(file.artifacts)
}

/// Parses the artifact list out of an embedded facts object, as used by
/// repository files.
pub fn graph_from_value(value: serde_json::Value) -> Result<CodeFactsGraph, FactsError> {
    let file: FactsFile =
        serde_json::from_value(value).map_err(|e| FactsError::Malformed(e.to_string()))?;
    if file.version != FACTS_VERSION {
        return Err(FactsError::UnsupportedVersion(file.version));
    }
    CodeFactsGraph::new(file.artifacts)
}

/// Embeds a graph as a facts object for repository files.
pub fn graph_to_value(graph: &CodeFactsGraph) -> serde_json::Value {
    serde_json::to_value(FactsFile {
        version: FACTS_VERSION,
        artifacts: graph.artifacts().to_vec(),
    })
    .expect("facts serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facts::model::{ArtifactId, ArtifactKind};

    #[test]
    fn round_trip_is_identity_on_canonical_form() {
        let mut b = Artifact::new("pkg.B", ArtifactKind::Class);
        b.extends.push(ArtifactId::new("pkg.A"));
        let graph =
            CodeFactsGraph::new(vec![b, Artifact::new("pkg.A", ArtifactKind::AbsClass)]).unwrap();
        let first = to_canonical_json(&graph);
        let reloaded = load_facts_str(&first).unwrap();
        let second = to_canonical_json(&reloaded);
        assert_eq!(first, second);
    }

    #[test]
    fn version_mismatch_is_a_distinct_error() {
        let text = r#"{"version": 7, "artifacts": []}"#;
        assert!(matches!(
            load_facts_str(text),
            Err(FactsError::UnsupportedVersion(7))
        ));
    }

    #[test]
    fn malformed_json_reports_parse_error() {
        assert!(matches!(
            load_facts_str("{\"version\": 1,"),
            Err(FactsError::Malformed(_))
        ));
    }

    #[test]
    fn unknown_keys_are_schema_violations() {
        let text = r#"{"version": 1, "artifacts": [], "extra": true}"#;
        assert!(matches!(load_facts_str(text), Err(FactsError::Malformed(_))));
    }
}
