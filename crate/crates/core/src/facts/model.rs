//! Code-facts data model: artifacts, their members, and the validated graph.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::FactsError;

/// Fully-qualified name of a class, abstract class, interface or enum.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArtifactId(pub String);

impl ArtifactId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ArtifactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ArtifactId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArtifactKind {
    #[serde(rename = "class")]
    Class,
    #[serde(rename = "absClass")]
    AbsClass,
    #[serde(rename = "intface")]
    Interface,
    #[serde(rename = "enum")]
    Enum,
    /// Stub for a type referenced but not defined in the analyzed sources.
    #[serde(rename = "external")]
    External,
}

impl ArtifactKind {
    pub fn token(self) -> &'static str {
        match self {
            ArtifactKind::Class => "class",
            ArtifactKind::AbsClass => "absClass",
            ArtifactKind::Interface => "intface",
            ArtifactKind::Enum => "enum",
            ArtifactKind::External => "external",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Visibility {
    #[serde(rename = "private")]
    Private,
    #[serde(rename = "package")]
    Package,
    #[serde(rename = "protected")]
    Protected,
    #[serde(rename = "public")]
    Public,
}

impl Visibility {
    pub fn token(self) -> &'static str {
        match self {
            Visibility::Private => "private",
            Visibility::Package => "package",
            Visibility::Protected => "protected",
            Visibility::Public => "public",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "private" => Visibility::Private,
            "package" => Visibility::Package,
            "protected" => Visibility::Protected,
            "public" => Visibility::Public,
            _ => return None,
        })
    }
}

/// Control context surrounding an object-creation expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InstGuard {
    #[serde(rename = "none")]
    None,
    /// Creation inside an `if` or `while` block.
    #[serde(rename = "conditional")]
    Conditional,
    /// Creation inside a `try`/`catch` block.
    #[serde(rename = "exceptionGuarded")]
    ExceptionGuarded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FieldFact {
    pub name: String,
    pub declared_type: ArtifactId,
    /// Element type when the declared type is a recognized container or array.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_type: Option<ArtifactId>,
    pub visibility: Visibility,
    pub is_static: bool,
    /// Set when the field is assigned a creation expression at its
    /// declaration or inside a constructor body.
    pub initialized_with_new: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MethodFact {
    pub name: String,
    /// Name plus ordered parameter type names, e.g. `draw(Shape,int)`.
    pub signature: String,
    pub is_constructor: bool,
    pub visibility: Visibility,
    pub is_static: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_type: Option<ArtifactId>,
    pub param_types: Vec<ArtifactId>,
    /// Resolved invocation targets as (artifact, signature) pairs.
    pub invocations: Vec<(ArtifactId, String)>,
    /// Object creations with their control context.
    pub instantiations: Vec<(ArtifactId, InstGuard)>,
    /// The body reads a static boolean field declared by the enclosing type.
    pub uses_static_flag_guard: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Artifact {
    pub id: ArtifactId,
    pub kind: ArtifactKind,
    pub is_final: bool,
    pub extends: Vec<ArtifactId>,
    pub implements: Vec<ArtifactId>,
    pub fields: Vec<FieldFact>,
    pub methods: Vec<MethodFact>,
}

impl Artifact {
    /// Bare artifact of the given kind with no members.
    pub fn new(id: impl Into<String>, kind: ArtifactKind) -> Self {
        Self {
            id: ArtifactId::new(id),
            kind,
            is_final: false,
            extends: Vec::new(),
            implements: Vec::new(),
            fields: Vec::new(),
            methods: Vec::new(),
        }
    }

    pub fn external(id: impl Into<String>) -> Self {
        Self::new(id, ArtifactKind::External)
    }

    pub fn is_external(&self) -> bool {
        self.kind == ArtifactKind::External
    }

    /// Sorts members and supertype lists into the canonical order used by
    /// the facts file format.
    pub fn canonicalize(&mut self) {
        self.extends.sort();
        self.extends.dedup();
        self.implements.sort();
        self.implements.dedup();
        self.fields.sort_by(|a, b| a.name.cmp(&b.name));
        self.methods.sort_by(|a, b| a.signature.cmp(&b.signature));
        for m in &mut self.methods {
            m.invocations.sort();
            m.invocations.dedup();
            m.instantiations.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| guard_rank(a.1).cmp(&guard_rank(b.1))));
            m.instantiations.dedup();
        }
    }
}

fn guard_rank(g: InstGuard) -> u8 {
    match g {
        InstGuard::None => 0,
        InstGuard::Conditional => 1,
        InstGuard::ExceptionGuarded => 2,
    }
}

/// Immutable, validated graph of code facts.
///
/// Construction checks referential integrity, per-kind invariants and
/// supertype acyclicity; after that the graph is safe for concurrent reads.
#[derive(Debug, Clone)]
pub struct CodeFactsGraph {
    artifacts: Vec<Artifact>,
    index: HashMap<ArtifactId, usize>,
    /// Direct supertypes (extends followed by implements), as indices.
    supertypes: Vec<Vec<usize>>,
    /// Transitive supertype closure, sorted.
    ancestors: Vec<Vec<usize>>,
    /// Children through extends edges only.
    extends_children: Vec<Vec<usize>>,
    /// Distinct invocation targets per artifact.
    invokes: Vec<Vec<usize>>,
    /// Distinct instantiation targets per artifact.
    creates: Vec<Vec<usize>>,
    /// Distinct artifacts reachable through a field's declared or element type.
    field_types: Vec<Vec<usize>>,
}

impl CodeFactsGraph {
    /// Validates and indexes a set of artifacts.
    pub fn new(mut artifacts: Vec<Artifact>) -> Result<Self, FactsError> {
        for a in &mut artifacts {
            a.canonicalize();
        }
        artifacts.sort_by(|a, b| a.id.cmp(&b.id));

        let mut index = HashMap::with_capacity(artifacts.len());
        for (i, a) in artifacts.iter().enumerate() {
            if a.id.as_str().is_empty() {
                return Err(FactsError::EmptyArtifactId);
            }
            if index.insert(a.id.clone(), i).is_some() {
                return Err(FactsError::DuplicateArtifact { id: a.id.clone() });
            }
        }

        for a in &artifacts {
            validate_artifact(a)?;
            let check = |id: &ArtifactId, role: &str| -> Result<(), FactsError> {
                if index.contains_key(id) {
                    Ok(())
                } else {
                    Err(FactsError::DanglingReference {
                        from: a.id.clone(),
                        to: id.clone(),
                        role: role.to_owned(),
                    })
                }
            };
            for t in &a.extends {
                check(t, "extends")?;
            }
            for t in &a.implements {
                check(t, "implements")?;
            }
            for f in &a.fields {
                check(&f.declared_type, "field type")?;
                if let Some(e) = &f.element_type {
                    check(e, "element type")?;
                }
            }
            for m in &a.methods {
                if m.is_constructor && m.return_type.is_some() {
                    return Err(FactsError::ConstructorWithReturn {
                        id: a.id.clone(),
                        signature: m.signature.clone(),
                    });
                }
                if let Some(r) = &m.return_type {
                    check(r, "return type")?;
                }
                for p in &m.param_types {
                    check(p, "parameter type")?;
                }
                for (t, _) in &m.invocations {
                    check(t, "invocation target")?;
                }
                for (t, _) in &m.instantiations {
                    check(t, "instantiation target")?;
                }
            }
            let mut sigs = HashSet::new();
            for m in &a.methods {
                if !sigs.insert(&m.signature) {
                    return Err(FactsError::DuplicateSignature {
                        id: a.id.clone(),
                        signature: m.signature.clone(),
                    });
                }
            }
        }

        let supertypes: Vec<Vec<usize>> = artifacts
            .iter()
            .map(|a| {
                a.extends
                    .iter()
                    .chain(a.implements.iter())
                    .map(|t| index[t])
                    .collect()
            })
            .collect();

        detect_supertype_cycle(&artifacts, &supertypes)?;

        let n = artifacts.len();
        let mut ancestors = vec![Vec::new(); n];
        for i in 0..n {
            let mut seen = HashSet::new();
            let mut stack: Vec<usize> = supertypes[i].clone();
            while let Some(s) = stack.pop() {
                if seen.insert(s) {
                    stack.extend(supertypes[s].iter().copied());
                }
            }
            let mut v: Vec<usize> = seen.into_iter().collect();
            v.sort_unstable();
            ancestors[i] = v;
        }

        let mut extends_children = vec![Vec::new(); n];
        for (i, a) in artifacts.iter().enumerate() {
            for t in &a.extends {
                extends_children[index[t]].push(i);
            }
        }

        let mut invokes = vec![Vec::new(); n];
        let mut creates = vec![Vec::new(); n];
        let mut field_types = vec![Vec::new(); n];
        for (i, a) in artifacts.iter().enumerate() {
            let mut inv = HashSet::new();
            let mut cre = HashSet::new();
            for m in &a.methods {
                inv.extend(m.invocations.iter().map(|(t, _)| index[t]));
                cre.extend(m.instantiations.iter().map(|(t, _)| index[t]));
            }
            let mut ft = HashSet::new();
            for f in &a.fields {
                ft.insert(index[&f.declared_type]);
                if let Some(e) = &f.element_type {
                    ft.insert(index[e]);
                }
            }
            invokes[i] = sorted(inv);
            creates[i] = sorted(cre);
            field_types[i] = sorted(ft);
        }

        Ok(Self {
            artifacts,
            index,
            supertypes,
            ancestors,
            extends_children,
            invokes,
            creates,
            field_types,
        })
    }

    pub fn empty() -> Self {
        Self::new(Vec::new()).expect("empty graph is always valid")
    }

    pub fn len(&self) -> usize {
        self.artifacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.artifacts.is_empty()
    }

    /// Artifacts in canonical (id-sorted) order.
    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    pub fn get(&self, id: &ArtifactId) -> Option<&Artifact> {
        self.index.get(id).map(|&i| &self.artifacts[i])
    }

    pub fn contains(&self, id: &ArtifactId) -> bool {
        self.index.contains_key(id)
    }

    pub(crate) fn idx(&self, id: &ArtifactId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub(crate) fn by_idx(&self, i: usize) -> &Artifact {
        &self.artifacts[i]
    }

    pub(crate) fn direct_supertypes(&self, i: usize) -> &[usize] {
        &self.supertypes[i]
    }

    /// True when `sup` is a direct or transitive supertype of `sub`.
    pub(crate) fn is_ancestor(&self, sub: usize, sup: usize) -> bool {
        self.ancestors[sub].binary_search(&sup).is_ok()
    }

    pub(crate) fn ancestor_indices(&self, i: usize) -> &[usize] {
        &self.ancestors[i]
    }

    pub(crate) fn extends_children_of(&self, i: usize) -> &[usize] {
        &self.extends_children[i]
    }

    pub(crate) fn invocation_targets(&self, i: usize) -> &[usize] {
        &self.invokes[i]
    }

    pub(crate) fn creation_targets(&self, i: usize) -> &[usize] {
        &self.creates[i]
    }

    pub(crate) fn field_type_targets(&self, i: usize) -> &[usize] {
        &self.field_types[i]
    }

    /// Indices of non-external artifacts, in canonical order.
    pub(crate) fn internal_indices(&self) -> Vec<usize> {
        (0..self.artifacts.len())
            .filter(|&i| !self.artifacts[i].is_external())
            .collect()
    }
}

fn sorted(set: HashSet<usize>) -> Vec<usize> {
    let mut v: Vec<usize> = set.into_iter().collect();
    v.sort_unstable();
    v
}

fn validate_artifact(a: &Artifact) -> Result<(), FactsError> {
    match a.kind {
        ArtifactKind::Class | ArtifactKind::AbsClass => {
            if a.extends.len() > 1 {
                return Err(FactsError::MultipleSuperclasses { id: a.id.clone() });
            }
        }
        ArtifactKind::Interface => {
            if !a.implements.is_empty() {
                return Err(FactsError::InterfaceImplements { id: a.id.clone() });
            }
        }
        ArtifactKind::Enum => {}
        ArtifactKind::External => {
            if !a.fields.is_empty() || !a.methods.is_empty() {
                return Err(FactsError::ExternalWithMembers { id: a.id.clone() });
            }
        }
    }
    Ok(())
}

fn detect_supertype_cycle(
    artifacts: &[Artifact],
    supertypes: &[Vec<usize>],
) -> Result<(), FactsError> {
    // Iterative three-color DFS; reports the artifacts on the first cycle found.
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let n = artifacts.len();
    let mut color = vec![Color::White; n];
    for start in 0..n {
        if color[start] != Color::White {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        color[start] = Color::Gray;
        let mut path = vec![start];
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < supertypes[node].len() {
                let child = supertypes[node][*next];
                *next += 1;
                match color[child] {
                    Color::White => {
                        color[child] = Color::Gray;
                        stack.push((child, 0));
                        path.push(child);
                    }
                    Color::Gray => {
                        let pos = path.iter().position(|&p| p == child).unwrap_or(0);
                        let mut members: Vec<String> = path[pos..]
                            .iter()
                            .map(|&i| artifacts[i].id.as_str().to_owned())
                            .collect();
                        members.sort();
                        return Err(FactsError::SupertypeCycle { members });
                    }
                    Color::Black => {}
                }
            } else {
                color[node] = Color::Black;
                stack.pop();
                path.pop();
            }
        }
    }
    Ok(())
}

/// Map used by builders that accumulate artifacts before validation.
pub type ArtifactMap = BTreeMap<ArtifactId, Artifact>;
