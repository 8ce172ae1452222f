//! Categorical operators over the facts graph.
//!
//! Each operator takes one to three artifacts and returns a value from a
//! fixed domain. Evaluation is a pure function of (operator, arguments,
//! graph).

use serde::{Deserialize, Serialize};

use super::model::{Artifact, ArtifactId, ArtifactKind, CodeFactsGraph, InstGuard, Visibility};
use super::FactsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CatOp {
    IsFinal,
    IsSubclass,
    ControlledInit,
    ControlledExcept,
    Conglomeration,
    StaticField,
    StaticFlag,
    Returns,
    Receives,
    CreateObj,
    Delegates,
    SameElem,
    SameInterfaceContainer,
    TypeOf,
    CtorVisibility,
    LinkMethod,
    LinkArtefact,
    Aggregation,
    AdapterMethod,
    RedirectInFamily,
    SameInterfaceInstance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodLink {
    #[serde(rename = "directOver")]
    DirectOver,
    #[serde(rename = "indirOver")]
    IndirOver,
    #[serde(rename = "directImpl")]
    DirectImpl,
    #[serde(rename = "indirImpl")]
    IndirImpl,
    #[serde(rename = "notLinked")]
    NotLinked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArtefactLink {
    #[serde(rename = "directInherit")]
    DirectInherit,
    #[serde(rename = "indirInherit")]
    IndirInherit,
    #[serde(rename = "directImpl")]
    DirectImpl,
    #[serde(rename = "indirImpl")]
    IndirImpl,
    #[serde(rename = "notLinked")]
    NotLinked,
}

/// Visibility and instantiability of an attribute of one artifact declared
/// in another, or `NotLinked` when no such attribute exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AggregationValue {
    #[serde(rename = "notLinked")]
    NotLinked,
    Linked {
        visibility: Visibility,
        initialized: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PatternMatchKind {
    #[serde(rename = "decl")]
    Declared,
    #[serde(rename = "inhr")]
    Inherited,
    #[serde(rename = "notLinked")]
    NotLinked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Multiplicity {
    #[serde(rename = "single")]
    Single,
    #[serde(rename = "multi")]
    Multi,
    #[serde(rename = "notLinked")]
    NotLinked,
}

/// A value from some categorical operator's domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CatValue {
    Bool(bool),
    Kind(ArtifactKind),
    MethodLink(MethodLink),
    ArtefactLink(ArtefactLink),
    Visibility(Visibility),
    Aggregation(AggregationValue),
    AdapterLink(PatternMatchKind),
    Multiplicity(Multiplicity),
}

impl CatValue {
    /// Token used in rendered rules and serialized models.
    pub fn token(&self) -> String {
        match self {
            CatValue::Bool(b) => b.to_string(),
            CatValue::Kind(k) => k.token().to_owned(),
            CatValue::MethodLink(v) => match v {
                MethodLink::DirectOver => "directOver",
                MethodLink::IndirOver => "indirOver",
                MethodLink::DirectImpl => "directImpl",
                MethodLink::IndirImpl => "indirImpl",
                MethodLink::NotLinked => "notLinked",
            }
            .to_owned(),
            CatValue::ArtefactLink(v) => match v {
                ArtefactLink::DirectInherit => "directInherit",
                ArtefactLink::IndirInherit => "indirInherit",
                ArtefactLink::DirectImpl => "directImpl",
                ArtefactLink::IndirImpl => "indirImpl",
                ArtefactLink::NotLinked => "notLinked",
            }
            .to_owned(),
            CatValue::Visibility(v) => v.token().to_owned(),
            CatValue::Aggregation(AggregationValue::NotLinked) => "notLinked".to_owned(),
            CatValue::Aggregation(AggregationValue::Linked {
                visibility,
                initialized,
            }) => format!(
                "{}_{}",
                visibility.token(),
                if *initialized { "init" } else { "noInit" }
            ),
            CatValue::AdapterLink(v) => match v {
                PatternMatchKind::Declared => "decl",
                PatternMatchKind::Inherited => "inhr",
                PatternMatchKind::NotLinked => "notLinked",
            }
            .to_owned(),
            CatValue::Multiplicity(v) => match v {
                Multiplicity::Single => "single",
                Multiplicity::Multi => "multi",
                Multiplicity::NotLinked => "notLinked",
            }
            .to_owned(),
        }
    }
}

impl CatOp {
    pub const ALL: [CatOp; 21] = [
        CatOp::IsFinal,
        CatOp::IsSubclass,
        CatOp::ControlledInit,
        CatOp::ControlledExcept,
        CatOp::Conglomeration,
        CatOp::StaticField,
        CatOp::StaticFlag,
        CatOp::Returns,
        CatOp::Receives,
        CatOp::CreateObj,
        CatOp::Delegates,
        CatOp::SameElem,
        CatOp::SameInterfaceContainer,
        CatOp::TypeOf,
        CatOp::CtorVisibility,
        CatOp::LinkMethod,
        CatOp::LinkArtefact,
        CatOp::Aggregation,
        CatOp::AdapterMethod,
        CatOp::RedirectInFamily,
        CatOp::SameInterfaceInstance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CatOp::IsFinal => "isFinal",
            CatOp::IsSubclass => "isSubclass",
            CatOp::ControlledInit => "controlledInit",
            CatOp::ControlledExcept => "controlledExcept",
            CatOp::Conglomeration => "conglomeration",
            CatOp::StaticField => "staticField",
            CatOp::StaticFlag => "staticFlag",
            CatOp::Returns => "returns",
            CatOp::Receives => "receives",
            CatOp::CreateObj => "createObj",
            CatOp::Delegates => "delegates",
            CatOp::SameElem => "sameElem",
            CatOp::SameInterfaceContainer => "sameInterfaceContainer",
            CatOp::TypeOf => "typeOf",
            CatOp::CtorVisibility => "ctorVisibility",
            CatOp::LinkMethod => "linkMethod",
            CatOp::LinkArtefact => "linkArtefact",
            CatOp::Aggregation => "aggregation",
            CatOp::AdapterMethod => "adapterMethod",
            CatOp::RedirectInFamily => "redirectInFamily",
            CatOp::SameInterfaceInstance => "sameInterfaceInstance",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        CatOp::ALL.into_iter().find(|op| op.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            CatOp::IsFinal
            | CatOp::IsSubclass
            | CatOp::ControlledInit
            | CatOp::ControlledExcept
            | CatOp::Conglomeration
            | CatOp::StaticField
            | CatOp::StaticFlag
            | CatOp::TypeOf
            | CatOp::CtorVisibility
            | CatOp::RedirectInFamily => 1,
            CatOp::Returns
            | CatOp::Receives
            | CatOp::CreateObj
            | CatOp::Delegates
            | CatOp::SameElem
            | CatOp::SameInterfaceContainer
            | CatOp::LinkMethod
            | CatOp::LinkArtefact
            | CatOp::Aggregation
            | CatOp::SameInterfaceInstance => 2,
            CatOp::AdapterMethod => 3,
        }
    }

    /// Every value the operator can return, in canonical order.
    pub fn domain(self) -> Vec<CatValue> {
        match self {
            CatOp::IsFinal
            | CatOp::IsSubclass
            | CatOp::ControlledInit
            | CatOp::ControlledExcept
            | CatOp::Conglomeration
            | CatOp::StaticField
            | CatOp::StaticFlag
            | CatOp::Returns
            | CatOp::Receives
            | CatOp::CreateObj
            | CatOp::Delegates
            | CatOp::SameElem
            | CatOp::SameInterfaceContainer => {
                vec![CatValue::Bool(true), CatValue::Bool(false)]
            }
            CatOp::TypeOf => vec![
                CatValue::Kind(ArtifactKind::Class),
                CatValue::Kind(ArtifactKind::AbsClass),
                CatValue::Kind(ArtifactKind::Interface),
                CatValue::Kind(ArtifactKind::Enum),
            ],
            CatOp::CtorVisibility => vec![
                CatValue::Visibility(Visibility::Private),
                CatValue::Visibility(Visibility::Protected),
                CatValue::Visibility(Visibility::Package),
                CatValue::Visibility(Visibility::Public),
            ],
            CatOp::LinkMethod => vec![
                CatValue::MethodLink(MethodLink::DirectOver),
                CatValue::MethodLink(MethodLink::IndirOver),
                CatValue::MethodLink(MethodLink::DirectImpl),
                CatValue::MethodLink(MethodLink::IndirImpl),
                CatValue::MethodLink(MethodLink::NotLinked),
            ],
            CatOp::LinkArtefact => vec![
                CatValue::ArtefactLink(ArtefactLink::DirectInherit),
                CatValue::ArtefactLink(ArtefactLink::IndirInherit),
                CatValue::ArtefactLink(ArtefactLink::DirectImpl),
                CatValue::ArtefactLink(ArtefactLink::IndirImpl),
                CatValue::ArtefactLink(ArtefactLink::NotLinked),
            ],
            CatOp::Aggregation => {
                let mut values = vec![CatValue::Aggregation(AggregationValue::NotLinked)];
                for vis in [
                    Visibility::Private,
                    Visibility::Protected,
                    Visibility::Package,
                    Visibility::Public,
                ] {
                    for initialized in [true, false] {
                        values.push(CatValue::Aggregation(AggregationValue::Linked {
                            visibility: vis,
                            initialized,
                        }));
                    }
                }
                values
            }
            CatOp::AdapterMethod => vec![
                CatValue::AdapterLink(PatternMatchKind::Declared),
                CatValue::AdapterLink(PatternMatchKind::Inherited),
                CatValue::AdapterLink(PatternMatchKind::NotLinked),
            ],
            CatOp::RedirectInFamily | CatOp::SameInterfaceInstance => vec![
                CatValue::Multiplicity(Multiplicity::Single),
                CatValue::Multiplicity(Multiplicity::Multi),
                CatValue::Multiplicity(Multiplicity::NotLinked),
            ],
        }
    }

    pub fn value_from_token(self, token: &str) -> Option<CatValue> {
        self.domain().into_iter().find(|v| v.token() == token)
    }
}

impl std::fmt::Display for CatOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn eval_categorical(
    op: CatOp,
    args: &[ArtifactId],
    graph: &CodeFactsGraph,
) -> Result<CatValue, FactsError> {
    if args.len() != op.arity() {
        return Err(FactsError::ArityMismatch {
            op: op.name().to_owned(),
            expected: op.arity(),
            got: args.len(),
        });
    }
    let mut idx = [0usize; 3];
    for (slot, id) in idx.iter_mut().zip(args.iter()) {
        *slot = graph
            .idx(id)
            .ok_or_else(|| FactsError::UnknownArtifact(id.clone()))?;
    }
    let a = idx[0];
    Ok(match op {
        CatOp::IsFinal => CatValue::Bool(graph.by_idx(a).is_final),
        CatOp::IsSubclass => CatValue::Bool(!graph.by_idx(a).extends.is_empty()),
        CatOp::ControlledInit => CatValue::Bool(controlled_init(graph, a)),
        CatOp::ControlledExcept => CatValue::Bool(controlled_except(graph, a)),
        CatOp::Conglomeration => CatValue::Bool(conglomeration(graph, a)),
        CatOp::StaticField => CatValue::Bool(static_self_field(graph, a)),
        CatOp::StaticFlag => CatValue::Bool(static_boolean_field(graph, a)),
        CatOp::Returns => CatValue::Bool(returns(graph, a, idx[1])),
        CatOp::Receives => CatValue::Bool(receives(graph, a, idx[1])),
        CatOp::CreateObj => CatValue::Bool(creates(graph, a, idx[1])),
        CatOp::Delegates => CatValue::Bool(delegates(graph, a, idx[1])),
        CatOp::SameElem => CatValue::Bool(a == idx[1]),
        CatOp::SameInterfaceContainer => {
            CatValue::Bool(same_interface_container(graph, a, idx[1]))
        }
        CatOp::TypeOf => {
            let kind = graph.by_idx(a).kind;
            if kind == ArtifactKind::External {
                return Err(FactsError::TypeOfExternal(args[0].clone()));
            }
            CatValue::Kind(kind)
        }
        CatOp::CtorVisibility => CatValue::Visibility(ctor_visibility(graph.by_idx(a))),
        CatOp::LinkMethod => CatValue::MethodLink(link_method(graph, a, idx[1])),
        CatOp::LinkArtefact => CatValue::ArtefactLink(link_artefact(graph, a, idx[1])),
        CatOp::Aggregation => CatValue::Aggregation(aggregation(graph, a, idx[1])),
        CatOp::AdapterMethod => CatValue::AdapterLink(adapter_method(graph, a, idx[1], idx[2])),
        CatOp::RedirectInFamily => CatValue::Multiplicity(redirect_in_family(graph, a)),
        CatOp::SameInterfaceInstance => {
            CatValue::Multiplicity(same_interface_instance(graph, a, idx[1]))
        }
    })
}

/// Some method instantiates the artifact itself inside an if/while block.
fn controlled_init(graph: &CodeFactsGraph, a: usize) -> bool {
    let art = graph.by_idx(a);
    art.methods.iter().any(|m| {
        m.instantiations
            .iter()
            .any(|(t, g)| t == &art.id && *g == InstGuard::Conditional)
    })
}

/// Self-instantiation inside try/catch, guarded by a static flag read.
fn controlled_except(graph: &CodeFactsGraph, a: usize) -> bool {
    let art = graph.by_idx(a);
    art.methods.iter().any(|m| {
        m.uses_static_flag_guard
            && m.instantiations
                .iter()
                .any(|(t, g)| t == &art.id && *g == InstGuard::ExceptionGuarded)
    })
}

/// Some method of the artifact invokes two or more distinct other methods
/// declared by the same artifact.
fn conglomeration(graph: &CodeFactsGraph, a: usize) -> bool {
    let art = graph.by_idx(a);
    let declared: Vec<&str> = art.methods.iter().map(|m| m.signature.as_str()).collect();
    art.methods.iter().any(|m| {
        let mut local: Vec<&str> = m
            .invocations
            .iter()
            .filter(|(t, sig)| t == &art.id && sig != &m.signature && declared.contains(&sig.as_str()))
            .map(|(_, sig)| sig.as_str())
            .collect();
        local.sort_unstable();
        local.dedup();
        local.len() >= 2
    })
}

fn static_self_field(graph: &CodeFactsGraph, a: usize) -> bool {
    let art = graph.by_idx(a);
    art.fields
        .iter()
        .any(|f| f.is_static && f.declared_type == art.id)
}

fn static_boolean_field(graph: &CodeFactsGraph, a: usize) -> bool {
    let art = graph.by_idx(a);
    art.fields
        .iter()
        .any(|f| f.is_static && f.declared_type.as_str() == "boolean")
}

fn returns(graph: &CodeFactsGraph, a: usize, b: usize) -> bool {
    let target = &graph.by_idx(b).id;
    graph
        .by_idx(a)
        .methods
        .iter()
        .any(|m| m.return_type.as_ref() == Some(target))
}

/// A method of the second artifact receives a value of the first artifact's
/// type as an argument. The inverted argument order follows the operator's
/// published signature.
fn receives(graph: &CodeFactsGraph, a: usize, b: usize) -> bool {
    let value_type = &graph.by_idx(a).id;
    graph
        .by_idx(b)
        .methods
        .iter()
        .any(|m| m.param_types.contains(value_type))
}

fn creates(graph: &CodeFactsGraph, a: usize, b: usize) -> bool {
    graph.creation_targets(a).binary_search(&b).is_ok()
}

fn delegates(graph: &CodeFactsGraph, a: usize, b: usize) -> bool {
    graph.invocation_targets(a).binary_search(&b).is_ok()
}

/// Visibility of the least restrictive constructor; an artifact with no
/// declared constructor gets the implicit public one.
fn ctor_visibility(artifact: &Artifact) -> Visibility {
    artifact
        .methods
        .iter()
        .filter(|m| m.is_constructor)
        .map(|m| m.visibility)
        .max()
        .unwrap_or(Visibility::Public)
}

fn link_method(graph: &CodeFactsGraph, a: usize, b: usize) -> MethodLink {
    if a == b || !graph.is_ancestor(a, b) {
        return MethodLink::NotLinked;
    }
    let sub = graph.by_idx(a);
    let sup = graph.by_idx(b);
    let shared = sub.methods.iter().any(|m| {
        !m.is_constructor
            && sup
                .methods
                .iter()
                .any(|s| !s.is_constructor && s.signature == m.signature)
    });
    if !shared {
        return MethodLink::NotLinked;
    }
    let direct = graph.direct_supertypes(a).contains(&b);
    let via_interface = sup.kind == ArtifactKind::Interface;
    match (via_interface, direct) {
        (true, true) => MethodLink::DirectImpl,
        (true, false) => MethodLink::IndirImpl,
        (false, true) => MethodLink::DirectOver,
        (false, false) => MethodLink::IndirOver,
    }
}

fn link_artefact(graph: &CodeFactsGraph, a: usize, b: usize) -> ArtefactLink {
    if a == b {
        return ArtefactLink::NotLinked;
    }
    let art = graph.by_idx(a);
    let target = &graph.by_idx(b).id;
    if art.extends.contains(target) {
        return ArtefactLink::DirectInherit;
    }
    if art.implements.contains(target) {
        return ArtefactLink::DirectImpl;
    }
    if graph.is_ancestor(a, b) {
        if graph.by_idx(b).kind == ArtifactKind::Interface {
            ArtefactLink::IndirImpl
        } else {
            ArtefactLink::IndirInherit
        }
    } else {
        ArtefactLink::NotLinked
    }
}

/// Attribute of the second artifact declared in the first. When several
/// fields qualify, an initialized one wins, then declaration (name) order.
fn aggregation(graph: &CodeFactsGraph, a: usize, b: usize) -> AggregationValue {
    let target = &graph.by_idx(b).id;
    graph
        .by_idx(a)
        .fields
        .iter()
        .filter(|f| &f.declared_type == target)
        .max_by_key(|f| (f.initialized_with_new, std::cmp::Reverse(f.name.clone())))
        .map(|f| AggregationValue::Linked {
            visibility: f.visibility,
            initialized: f.initialized_with_new,
        })
        .unwrap_or(AggregationValue::NotLinked)
}

/// A method of the first artifact that implements a method declared by the
/// third and delegates to the second. `decl` when the implementing method
/// is declared by the first artifact itself, `inhr` when it is inherited
/// from a class ancestor.
fn adapter_method(graph: &CodeFactsGraph, a: usize, b: usize, c: usize) -> PatternMatchKind {
    if !graph.is_ancestor(a, c) {
        return PatternMatchKind::NotLinked;
    }
    let target_sigs: Vec<&str> = graph
        .by_idx(c)
        .methods
        .iter()
        .filter(|m| !m.is_constructor)
        .map(|m| m.signature.as_str())
        .collect();
    if target_sigs.is_empty() {
        return PatternMatchKind::NotLinked;
    }
    let adaptee = &graph.by_idx(b).id;
    let implements_and_delegates = |art: &Artifact| {
        art.methods.iter().any(|m| {
            !m.is_constructor
                && target_sigs.contains(&m.signature.as_str())
                && m.invocations.iter().any(|(t, _)| t == adaptee)
        })
    };
    if implements_and_delegates(graph.by_idx(a)) {
        return PatternMatchKind::Declared;
    }
    // Inherited case: the implementing method lives in a class ancestor.
    for &anc in graph.ancestor_indices(a) {
        if anc == c || graph.by_idx(anc).kind == ArtifactKind::Interface {
            continue;
        }
        if implements_and_delegates(graph.by_idx(anc)) {
            return PatternMatchKind::Inherited;
        }
    }
    PatternMatchKind::NotLinked
}

/// Declared methods of the artifact that redirect to a same-signature
/// method of one of its supertypes.
fn redirect_in_family(graph: &CodeFactsGraph, a: usize) -> Multiplicity {
    let art = graph.by_idx(a);
    let mut redirects: Vec<(&str, &ArtifactId)> = Vec::new();
    for m in &art.methods {
        if m.is_constructor {
            continue;
        }
        for (target, sig) in &m.invocations {
            if sig != &m.signature {
                continue;
            }
            if let Some(t) = graph.idx(target) {
                if graph.is_ancestor(a, t) {
                    redirects.push((m.signature.as_str(), target));
                }
            }
        }
    }
    redirects.sort_unstable();
    redirects.dedup();
    match redirects.len() {
        0 => Multiplicity::NotLinked,
        1 => Multiplicity::Single,
        _ => Multiplicity::Multi,
    }
}

/// Reflexive supertype test: `t` is `b` itself or one of its supertypes.
fn within_family(graph: &CodeFactsGraph, t: usize, b: usize) -> bool {
    t == b || graph.is_ancestor(b, t)
}

/// Plain fields of the first artifact whose type is the second artifact or
/// one of its supertypes, provided the first extends or implements the second.
fn same_interface_instance(graph: &CodeFactsGraph, a: usize, b: usize) -> Multiplicity {
    if !graph.is_ancestor(a, b) {
        return Multiplicity::NotLinked;
    }
    let count = graph
        .by_idx(a)
        .fields
        .iter()
        .filter(|f| f.element_type.is_none())
        .filter(|f| {
            graph
                .idx(&f.declared_type)
                .is_some_and(|t| within_family(graph, t, b))
        })
        .count();
    match count {
        0 => Multiplicity::NotLinked,
        1 => Multiplicity::Single,
        _ => Multiplicity::Multi,
    }
}

/// Same shape as `same_interface_instance` but through a collection field's
/// element type.
fn same_interface_container(graph: &CodeFactsGraph, a: usize, b: usize) -> bool {
    if !graph.is_ancestor(a, b) {
        return false;
    }
    graph.by_idx(a).fields.iter().any(|f| {
        f.element_type
            .as_ref()
            .and_then(|e| graph.idx(e))
            .is_some_and(|t| within_family(graph, t, b))
    })
}
