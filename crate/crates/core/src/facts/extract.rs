//! Directory-level fact extraction: parses every recognized source file,
//! resolves type names across files, synthesizes external stubs for the
//! rest, and assembles a validated graph plus an extraction report.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::model::{
    Artifact, ArtifactId, ArtifactKind, CodeFactsGraph, FieldFact, InstGuard, MethodFact,
};
use super::source::{
    parse_java, CallReceiver, Import, ParsedFile, RawGuard, RawKind, RawMethod, RawType, Receiver,
    TypeRef,
};
use super::FactsError;

/// Container types recognized for element-type extraction, before user
/// additions. Arrays are detected structurally.
pub const DEFAULT_CONTAINER_TYPES: [&str; 5] = ["List", "Set", "Map", "Collection", "Vector"];

/// Artifact id used as the declared type of array-typed fields.
pub const ARRAY_MARKER: &str = "array";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub files_parsed: u32,
    pub files_skipped: Vec<SkippedFile>,
    pub warnings: Vec<String>,
}

impl ExtractionReport {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serialize");
        out.push('\n');
        out
    }
}

/// Extracts code facts from every `.java` file under `source_root`.
///
/// Files that fail to parse are reported and skipped. An empty directory
/// yields an empty graph; the caller decides whether zero parsed files is
/// fatal for its context.
pub fn extract_facts(
    source_root: impl AsRef<Path>,
    extra_container_types: &[String],
) -> Result<(CodeFactsGraph, ExtractionReport), FactsError> {
    let root = source_root.as_ref();
    if !root.is_dir() {
        return Err(FactsError::MissingSourceRoot(root.display().to_string()));
    }
    let mut containers: BTreeSet<String> = DEFAULT_CONTAINER_TYPES
        .iter()
        .map(|s| s.to_string())
        .collect();
    containers.extend(extra_container_types.iter().cloned());

    let mut files = Vec::new();
    collect_sources(root, root, &mut files)?;
    files.sort_by(|a, b| a.1.cmp(&b.1));

    let mut report = ExtractionReport::default();
    let mut parsed: Vec<(String, ParsedFile)> = Vec::new();
    let mut saw_source_files = false;
    for (abs, rel) in files {
        saw_source_files = true;
        let text = match fs::read_to_string(&abs) {
            Ok(t) => t,
            Err(e) => {
                report.files_skipped.push(SkippedFile {
                    path: rel.clone(),
                    reason: format!("unreadable: {e}"),
                });
                continue;
            }
        };
        match parse_java(&text) {
            Ok(file) => {
                report.files_parsed += 1;
                parsed.push((rel, file));
            }
            Err(e) => {
                report.files_skipped.push(SkippedFile {
                    path: rel,
                    reason: e.0,
                });
            }
        }
    }
    if saw_source_files && report.files_parsed == 0 {
        return Err(FactsError::NoParsableFiles(root.display().to_string()));
    }

    let graph = assemble(&parsed, &containers, &mut report)?;
    Ok((graph, report))
}

fn collect_sources(
    root: &Path,
    dir: &Path,
    out: &mut Vec<(PathBuf, String)>,
) -> Result<(), FactsError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect_sources(root, &path, out)?;
        } else if path.extension().and_then(|e| e.to_str()) == Some("java") {
            let rel = path
                .strip_prefix(root)
                .unwrap_or(&path)
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            out.push((path, rel));
        }
    }
    Ok(())
}

struct Resolver<'a> {
    /// Declared FQNs across the whole corpus.
    declared: BTreeSet<String>,
    containers: &'a BTreeSet<String>,
}

struct FileScope<'a> {
    package: Option<&'a str>,
    imports: &'a [Import],
    /// Simple name -> FQN for types declared in this file.
    local: HashMap<String, String>,
}

impl Resolver<'_> {
    /// Resolves a written type name to an artifact id, falling back to the
    /// written name as an external stub id.
    fn resolve(&self, written: &str, scope: &FileScope) -> ArtifactId {
        if written.contains('.') {
            return ArtifactId::new(written);
        }
        if let Some(fqn) = scope.local.get(written) {
            return ArtifactId::new(fqn.clone());
        }
        for import in scope.imports {
            if let Import::Exact { path, simple } = import {
                if simple == written {
                    return ArtifactId::new(path.clone());
                }
            }
        }
        if let Some(pkg) = scope.package {
            let candidate = format!("{pkg}.{written}");
            if self.declared.contains(&candidate) {
                return ArtifactId::new(candidate);
            }
        }
        for import in scope.imports {
            if let Import::Wildcard { package } = import {
                let candidate = format!("{package}.{written}");
                if self.declared.contains(&candidate) {
                    return ArtifactId::new(candidate);
                }
            }
        }
        ArtifactId::new(written)
    }

    fn is_container(&self, ty: &TypeRef) -> bool {
        let simple = ty.base.rsplit('.').next().unwrap_or(&ty.base);
        self.containers.contains(simple)
    }
}

/// A call whose target artifact is fixed but whose signature still needs
/// the target's declarations, or a bare call resolved along the extends
/// chain.
enum PendingTarget {
    Fixed(ArtifactId),
    SelfChain,
}

struct PendingCall {
    owner: ArtifactId,
    method_signature: String,
    target: PendingTarget,
    name: String,
    argc: usize,
}

fn assemble(
    parsed: &[(String, ParsedFile)],
    containers: &BTreeSet<String>,
    report: &mut ExtractionReport,
) -> Result<CodeFactsGraph, FactsError> {
    let mut declared = BTreeSet::new();
    for (_, file) in parsed {
        for ty in &file.types {
            declared.insert(fqn_of(file.package.as_deref(), &ty.name_path));
        }
    }
    let resolver = Resolver {
        declared,
        containers,
    };

    let mut artifacts: BTreeMap<ArtifactId, Artifact> = BTreeMap::new();
    let mut pending: Vec<PendingCall> = Vec::new();
    for (path, file) in parsed {
        let mut local = HashMap::new();
        for ty in &file.types {
            local.insert(
                ty.name_path.last().cloned().unwrap_or_default(),
                fqn_of(file.package.as_deref(), &ty.name_path),
            );
        }
        let scope = FileScope {
            package: file.package.as_deref(),
            imports: &file.imports,
            local,
        };
        for ty in &file.types {
            let artifact = build_artifact(ty, &scope, &resolver, &mut pending);
            if artifacts.contains_key(&artifact.id) {
                report.warnings.push(format!(
                    "{path}: duplicate declaration of {}; keeping the first",
                    artifact.id
                ));
            } else {
                artifacts.insert(artifact.id.clone(), artifact);
            }
        }
    }

    resolve_pending_calls(&mut artifacts, pending);
    add_external_stubs(&mut artifacts);
    break_supertype_cycles(&mut artifacts, report);
    CodeFactsGraph::new(artifacts.into_values().collect())
}

fn fqn_of(package: Option<&str>, name_path: &[String]) -> String {
    let joined = name_path.join(".");
    match package {
        Some(pkg) => format!("{pkg}.{joined}"),
        None => joined,
    }
}

fn build_artifact(
    raw: &RawType,
    scope: &FileScope,
    resolver: &Resolver,
    pending: &mut Vec<PendingCall>,
) -> Artifact {
    let id = ArtifactId::new(fqn_of(scope.package, &raw.name_path));
    let kind = match raw.kind {
        RawKind::Interface => ArtifactKind::Interface,
        RawKind::Enum => ArtifactKind::Enum,
        RawKind::Class if raw.is_abstract => ArtifactKind::AbsClass,
        RawKind::Class => ArtifactKind::Class,
    };
    let mut artifact = Artifact {
        id: id.clone(),
        kind,
        is_final: raw.is_final,
        extends: raw
            .extends
            .iter()
            .map(|t| resolver.resolve(&t.base, scope))
            .collect(),
        implements: raw
            .implements
            .iter()
            .map(|t| resolver.resolve(&t.base, scope))
            .collect(),
        fields: Vec::new(),
        methods: Vec::new(),
    };
    // A malformed interface with an implements clause would fail validation;
    // fold the entries into extends, which is how Java spells it anyway.
    if kind == ArtifactKind::Interface && !artifact.implements.is_empty() {
        let moved = std::mem::take(&mut artifact.implements);
        artifact.extends.extend(moved);
    }
    // Multiple class supertypes are outside the language; keep the first.
    if matches!(kind, ArtifactKind::Class | ArtifactKind::AbsClass) && artifact.extends.len() > 1 {
        artifact.extends.truncate(1);
    }

    for f in &raw.fields {
        artifact.fields.push(build_field(f, scope, resolver));
    }

    let static_bool_flags: BTreeSet<&str> = raw
        .fields
        .iter()
        .filter(|f| f.is_static && f.ty.base == "boolean" && !f.ty.array)
        .map(|f| f.name.as_str())
        .collect();
    let ctor_assigned: BTreeSet<&str> = raw
        .methods
        .iter()
        .filter(|m| m.is_ctor)
        .flat_map(|m| m.assigned_new.iter().map(String::as_str))
        .collect();
    for (i, f) in raw.fields.iter().enumerate() {
        if ctor_assigned.contains(f.name.as_str()) {
            artifact.fields[i].initialized_with_new = true;
        }
    }

    for m in &raw.methods {
        let fact = build_method_fact(m, raw, &id, scope, resolver, &static_bool_flags, pending);
        artifact.methods.push(fact);
    }
    // Duplicate signatures can appear through erased generics; keep the first.
    let mut seen = BTreeSet::new();
    artifact.methods.retain(|m| seen.insert(m.signature.clone()));
    artifact
}

fn build_field(raw: &super::source::RawField, scope: &FileScope, resolver: &Resolver) -> FieldFact {
    let (declared, element) = if raw.ty.array {
        (
            ArtifactId::new(ARRAY_MARKER),
            Some(resolver.resolve(&raw.ty.base, scope)),
        )
    } else if resolver.is_container(&raw.ty) {
        let element = raw
            .ty
            .type_args
            .last()
            .map(|arg| resolver.resolve(&arg.base, scope));
        (resolver.resolve(&raw.ty.base, scope), element)
    } else {
        (resolver.resolve(&raw.ty.base, scope), None)
    };
    FieldFact {
        name: raw.name.clone(),
        declared_type: declared,
        element_type: element,
        visibility: raw.visibility,
        is_static: raw.is_static,
        initialized_with_new: raw.init_has_new,
    }
}

fn signature_of(name: &str, params: &[ArtifactId]) -> String {
    let joined = params
        .iter()
        .map(|p| p.as_str())
        .collect::<Vec<_>>()
        .join(",");
    format!("{name}({joined})")
}

#[allow(clippy::too_many_arguments)]
fn build_method_fact(
    raw: &RawMethod,
    owner: &RawType,
    owner_id: &ArtifactId,
    scope: &FileScope,
    resolver: &Resolver,
    static_bool_flags: &BTreeSet<&str>,
    pending: &mut Vec<PendingCall>,
) -> MethodFact {
    let param_types: Vec<ArtifactId> = raw
        .params
        .iter()
        .map(|(_, t)| resolver.resolve(&t.base, scope))
        .collect();
    let signature = signature_of(&raw.name, &param_types);
    let return_type = if raw.is_ctor {
        None
    } else {
        raw.return_ty
            .as_ref()
            .map(|t| resolver.resolve(&t.base, scope))
    };

    // Receiver environment: parameters first, then locals in scan order;
    // lookups walk backwards so later declarations shadow earlier ones.
    let mut env: Vec<(&str, ArtifactId)> = raw
        .params
        .iter()
        .map(|(n, t)| (n.as_str(), resolver.resolve(&t.base, scope)))
        .collect();
    for (n, t) in &raw.locals {
        env.push((n.as_str(), resolver.resolve(&t.base, scope)));
    }
    let field_types: HashMap<&str, ArtifactId> = owner
        .fields
        .iter()
        .map(|f| (f.name.as_str(), resolver.resolve(&f.ty.base, scope)))
        .collect();

    for call in &raw.invocations {
        let target = match &call.receiver {
            CallReceiver::Implicit(Receiver::SelfRef) => PendingTarget::SelfChain,
            CallReceiver::Implicit(Receiver::Super) => match owner.extends.first() {
                Some(t) => PendingTarget::Fixed(resolver.resolve(&t.base, scope)),
                None => continue,
            },
            CallReceiver::Named(name) => {
                if let Some((_, ty)) = env.iter().rev().find(|(n, _)| n == name) {
                    PendingTarget::Fixed(ty.clone())
                } else if let Some(ty) = field_types.get(name.as_str()) {
                    PendingTarget::Fixed(ty.clone())
                } else if is_type_like(name, scope, resolver) {
                    PendingTarget::Fixed(resolver.resolve(name, scope))
                } else {
                    continue;
                }
            }
        };
        pending.push(PendingCall {
            owner: owner_id.clone(),
            method_signature: signature.clone(),
            target,
            name: call.method.clone(),
            argc: call.argc,
        });
    }

    let mut instantiations = Vec::new();
    for creation in &raw.creations {
        let target = resolver.resolve(&creation.ty.base, scope);
        let guard = match creation.guard {
            RawGuard::None => InstGuard::None,
            RawGuard::Conditional => InstGuard::Conditional,
            RawGuard::ExceptionGuarded => InstGuard::ExceptionGuarded,
        };
        instantiations.push((target, guard));
    }

    let uses_static_flag_guard = raw
        .referenced_idents
        .iter()
        .any(|n| static_bool_flags.contains(n.as_str()));

    MethodFact {
        name: raw.name.clone(),
        signature,
        is_constructor: raw.is_ctor,
        visibility: raw.visibility,
        is_static: raw.is_static,
        return_type,
        param_types,
        invocations: Vec::new(),
        instantiations,
        uses_static_flag_guard,
    }
}

fn is_type_like(name: &str, scope: &FileScope, resolver: &Resolver) -> bool {
    if scope.local.contains_key(name) {
        return true;
    }
    if scope
        .imports
        .iter()
        .any(|i| matches!(i, Import::Exact { simple, .. } if simple == name))
    {
        return true;
    }
    if let Some(pkg) = scope.package {
        if resolver.declared.contains(&format!("{pkg}.{name}")) {
            return true;
        }
    }
    if resolver.declared.contains(name) {
        return true;
    }
    name.chars().next().is_some_and(char::is_uppercase)
}

/// Second pass: with every artifact built, attribute calls and pick
/// signatures. Call sites carry no parameter types, so a unique
/// (name, arity) match against the target's declarations yields the full
/// signature; ambiguity yields a `name(?,...)` placeholder. Bare calls with
/// no visible declaration are dropped rather than invented.
fn resolve_pending_calls(artifacts: &mut BTreeMap<ArtifactId, Artifact>, pending: Vec<PendingCall>) {
    let signature_lookup = |artifacts: &BTreeMap<ArtifactId, Artifact>,
                            target: &ArtifactId,
                            name: &str,
                            argc: usize|
     -> Option<String> {
        let art = artifacts.get(target)?;
        let mut matches = art
            .methods
            .iter()
            .filter(|m| m.name == name && m.param_types.len() == argc);
        let first = matches.next()?;
        if matches.next().is_some() {
            None
        } else {
            Some(first.signature.clone())
        }
    };

    for call in pending {
        let placeholder = format!("{}({})", call.name, vec!["?"; call.argc].join(","));
        let (target, signature) = match &call.target {
            PendingTarget::Fixed(t) => {
                let sig = signature_lookup(artifacts, t, &call.name, call.argc)
                    .unwrap_or(placeholder);
                (t.clone(), sig)
            }
            PendingTarget::SelfChain => {
                // Walk the extends chain until a declaration matches.
                let mut current = Some(call.owner.clone());
                let mut found = None;
                let mut hops = 0;
                while let Some(id) = current {
                    hops += 1;
                    if hops > 64 {
                        break;
                    }
                    if let Some(sig) = signature_lookup(artifacts, &id, &call.name, call.argc) {
                        found = Some((id, sig));
                        break;
                    }
                    current = artifacts.get(&id).and_then(|a| a.extends.first().cloned());
                }
                match found {
                    Some(pair) => pair,
                    None => continue,
                }
            }
        };
        if let Some(owner) = artifacts.get_mut(&call.owner) {
            if let Some(m) = owner
                .methods
                .iter_mut()
                .find(|m| m.signature == call.method_signature)
            {
                m.invocations.push((target, signature));
            }
        }
    }
}

fn add_external_stubs(artifacts: &mut BTreeMap<ArtifactId, Artifact>) {
    let mut referenced: BTreeSet<ArtifactId> = BTreeSet::new();
    for a in artifacts.values() {
        referenced.extend(a.extends.iter().cloned());
        referenced.extend(a.implements.iter().cloned());
        for f in &a.fields {
            referenced.insert(f.declared_type.clone());
            referenced.extend(f.element_type.iter().cloned());
        }
        for m in &a.methods {
            referenced.extend(m.return_type.iter().cloned());
            referenced.extend(m.param_types.iter().cloned());
            referenced.extend(m.invocations.iter().map(|(t, _)| t.clone()));
            referenced.extend(m.instantiations.iter().map(|(t, _)| t.clone()));
        }
    }
    for id in referenced {
        artifacts
            .entry(id.clone())
            .or_insert_with(|| Artifact::external(id.as_str()));
    }
}

/// Drops supertype edges until the graph is acyclic. Cycles only occur in
/// malformed sources; each drop is surfaced as a warning.
fn break_supertype_cycles(
    artifacts: &mut BTreeMap<ArtifactId, Artifact>,
    report: &mut ExtractionReport,
) {
    for _ in 0..artifacts.len() + 1 {
        let snapshot: Vec<Artifact> = artifacts.values().cloned().collect();
        match CodeFactsGraph::new(snapshot) {
            Err(FactsError::SupertypeCycle { members }) => {
                let victim = members.last().cloned().unwrap_or_default();
                let victim_id = ArtifactId::new(victim.clone());
                if let Some(a) = artifacts.get_mut(&victim_id) {
                    a.extends
                        .retain(|t| !members.contains(&t.as_str().to_owned()));
                    a.implements
                        .retain(|t| !members.contains(&t.as_str().to_owned()));
                }
                report.warnings.push(format!(
                    "inheritance cycle involving {}; dropped supertype edges of {victim}",
                    members.join(", ")
                ));
            }
            _ => return,
        }
    }
}
