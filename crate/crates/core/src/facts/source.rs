//! Tolerant parser for the supported Java subset.
//!
//! Recognizes type declarations with modifiers, extends/implements clauses,
//! fields, methods and constructors, and scans method bodies for method
//! invocations, object creations and their if/while/try context. Anything
//! outside the subset degrades conservatively: no facts are invented for
//! constructs the scanner does not understand.

use std::collections::HashSet;

use super::model::Visibility;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Sym(char),
    /// String, char or numeric literal; kept as a placeholder so argument
    /// counting stays correct.
    Lit,
}

impl Tok {
    fn is_ident(&self, s: &str) -> bool {
        matches!(self, Tok::Ident(i) if i == s)
    }

    fn ident(&self) -> Option<&str> {
        match self {
            Tok::Ident(i) => Some(i),
            _ => None,
        }
    }

    fn sym(&self) -> Option<char> {
        match self {
            Tok::Sym(c) => Some(*c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RawKind {
    Class,
    Interface,
    Enum,
}

/// A type reference as written in source: dotted base name, generic
/// arguments reduced to their base names, and an array flag.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct TypeRef {
    pub base: String,
    pub type_args: Vec<TypeRef>,
    pub array: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct RawField {
    pub name: String,
    pub ty: TypeRef,
    pub visibility: Visibility,
    pub is_static: bool,
    pub init_has_new: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Receiver {
    SelfRef,
    Super,
}

#[derive(Debug, Clone)]
pub(crate) enum CallReceiver {
    Implicit(Receiver),
    Named(String),
}

#[derive(Debug, Clone)]
pub(crate) struct RawInvocation {
    pub receiver: CallReceiver,
    pub method: String,
    pub argc: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RawGuard {
    None,
    Conditional,
    ExceptionGuarded,
}

#[derive(Debug, Clone)]
pub(crate) struct RawCreation {
    pub ty: TypeRef,
    pub guard: RawGuard,
}

#[derive(Debug, Clone)]
pub(crate) struct RawMethod {
    pub name: String,
    pub is_ctor: bool,
    pub visibility: Visibility,
    pub is_static: bool,
    pub return_ty: Option<TypeRef>,
    pub params: Vec<(String, TypeRef)>,
    pub invocations: Vec<RawInvocation>,
    pub creations: Vec<RawCreation>,
    /// Identifiers read anywhere in the body.
    pub referenced_idents: HashSet<String>,
    /// Field-name candidates assigned a creation expression in this body.
    pub assigned_new: Vec<String>,
    /// Names with a local declaration or parameter, shadowing fields.
    pub locals: Vec<(String, TypeRef)>,
}

#[derive(Debug, Clone)]
pub(crate) struct RawType {
    /// Simple name path for nested types, e.g. `["Outer", "Inner"]`.
    pub name_path: Vec<String>,
    pub kind: RawKind,
    pub is_abstract: bool,
    pub is_final: bool,
    pub extends: Vec<TypeRef>,
    pub implements: Vec<TypeRef>,
    pub fields: Vec<RawField>,
    pub methods: Vec<RawMethod>,
}

#[derive(Debug, Clone)]
pub(crate) enum Import {
    Exact { path: String, simple: String },
    Wildcard { package: String },
}

#[derive(Debug, Clone)]
pub(crate) struct ParsedFile {
    pub package: Option<String>,
    pub imports: Vec<Import>,
    pub types: Vec<RawType>,
}

#[derive(Debug)]
pub(crate) struct ParseError(pub String);

pub(crate) fn parse_java(text: &str) -> Result<ParsedFile, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    p.parse_file()
}

fn tokenize(text: &str) -> Result<Vec<Tok>, ParseError> {
    let bytes: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '/' && i + 1 < bytes.len() && bytes[i + 1] == '/' {
            while i < bytes.len() && bytes[i] != '\n' {
                i += 1;
            }
        } else if c == '/' && i + 1 < bytes.len() && bytes[i + 1] == '*' {
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(ParseError("unterminated block comment".into()));
                }
                if bytes[i] == '*' && bytes[i + 1] == '/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
        } else if c == '"' {
            i += 1;
            loop {
                if i >= bytes.len() {
                    return Err(ParseError("unterminated string literal".into()));
                }
                match bytes[i] {
                    '\\' => i += 2,
                    '"' => {
                        i += 1;
                        break;
                    }
                    _ => i += 1,
                }
            }
            toks.push(Tok::Lit);
        } else if c == '\'' {
            i += 1;
            loop {
                if i >= bytes.len() {
                    return Err(ParseError("unterminated char literal".into()));
                }
                match bytes[i] {
                    '\\' => i += 2,
                    '\'' => {
                        i += 1;
                        break;
                    }
                    _ => i += 1,
                }
            }
            toks.push(Tok::Lit);
        } else if c.is_ascii_digit() {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '.' || bytes[i] == '_') {
                i += 1;
            }
            toks.push(Tok::Lit);
        } else if c.is_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_alphanumeric() || bytes[i] == '_' || bytes[i] == '$') {
                i += 1;
            }
            toks.push(Tok::Ident(bytes[start..i].iter().collect()));
        } else {
            toks.push(Tok::Sym(c));
            i += 1;
        }
    }
    Ok(toks)
}

const MODIFIERS: &[&str] = &[
    "public",
    "private",
    "protected",
    "static",
    "abstract",
    "final",
    "strictfp",
    "transient",
    "volatile",
    "synchronized",
    "native",
    "default",
    "sealed",
];

struct Modifiers {
    visibility: Option<Visibility>,
    is_static: bool,
    is_abstract: bool,
    is_final: bool,
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.toks.get(self.pos + offset)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek().and_then(Tok::sym) == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(ParseError(format!(
                "expected `{c}` near token {}",
                self.pos
            )))
        }
    }

    /// Skips one `@Annotation` possibly with arguments.
    fn skip_annotations(&mut self) {
        while self.peek().and_then(Tok::sym) == Some('@') {
            self.pos += 1;
            // Dotted annotation name.
            while self.peek().and_then(Tok::ident).is_some() {
                self.pos += 1;
                if self.peek().and_then(Tok::sym) == Some('.') {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if self.peek().and_then(Tok::sym) == Some('(') {
                self.skip_balanced('(', ')');
            }
        }
    }

    /// Assumes the cursor sits on `open`; advances past the matching
    /// `close`. Returns false when the input ends unbalanced.
    fn skip_balanced(&mut self, open: char, close: char) -> bool {
        let mut depth = 0usize;
        while let Some(t) = self.bump() {
            match t.sym() {
                Some(c) if c == open => depth += 1,
                Some(c) if c == close => {
                    depth -= 1;
                    if depth == 0 {
                        return true;
                    }
                }
                _ => {}
            }
        }
        false
    }

    fn parse_file(&mut self) -> Result<ParsedFile, ParseError> {
        let mut file = ParsedFile {
            package: None,
            imports: Vec::new(),
            types: Vec::new(),
        };
        self.skip_annotations();
        if self.peek().is_some_and(|t| t.is_ident("package")) {
            self.pos += 1;
            file.package = Some(self.parse_dotted_name()?);
            self.expect_sym(';')?;
        }
        loop {
            self.skip_annotations();
            match self.peek() {
                Some(t) if t.is_ident("import") => {
                    self.pos += 1;
                    if self.peek().is_some_and(|t| t.is_ident("static")) {
                        self.pos += 1;
                    }
                    let mut parts = Vec::new();
                    let mut wildcard = false;
                    loop {
                        if self.eat_sym('*') {
                            wildcard = true;
                            break;
                        }
                        match self.bump() {
                            Some(Tok::Ident(p)) => parts.push(p),
                            other => {
                                return Err(ParseError(format!(
                                    "malformed import near {other:?}"
                                )))
                            }
                        }
                        if !self.eat_sym('.') {
                            break;
                        }
                    }
                    self.expect_sym(';')?;
                    if wildcard {
                        file.imports.push(Import::Wildcard {
                            package: parts.join("."),
                        });
                    } else if let Some(simple) = parts.last().cloned() {
                        file.imports.push(Import::Exact {
                            path: parts.join("."),
                            simple,
                        });
                    }
                }
                Some(_) => {
                    self.parse_type_decl(&mut file.types, &[])?;
                }
                None => break,
            }
        }
        Ok(file)
    }

    fn parse_dotted_name(&mut self) -> Result<String, ParseError> {
        let mut parts = Vec::new();
        loop {
            match self.bump() {
                Some(Tok::Ident(p)) => parts.push(p),
                other => return Err(ParseError(format!("expected identifier, got {other:?}"))),
            }
            if !self.eat_sym('.') {
                break;
            }
        }
        Ok(parts.join("."))
    }

    fn parse_modifiers(&mut self) -> Modifiers {
        let mut m = Modifiers {
            visibility: None,
            is_static: false,
            is_abstract: false,
            is_final: false,
        };
        loop {
            self.skip_annotations();
            let Some(word) = self.peek().and_then(Tok::ident) else {
                break;
            };
            if !MODIFIERS.contains(&word) {
                break;
            }
            match word {
                "public" => m.visibility = Some(Visibility::Public),
                "private" => m.visibility = Some(Visibility::Private),
                "protected" => m.visibility = Some(Visibility::Protected),
                "static" => m.is_static = true,
                "abstract" => m.is_abstract = true,
                "final" => m.is_final = true,
                _ => {}
            }
            self.pos += 1;
        }
        m
    }

    fn parse_type_decl(
        &mut self,
        out: &mut Vec<RawType>,
        outer: &[String],
    ) -> Result<(), ParseError> {
        let mods = self.parse_modifiers();
        let kind = match self.peek().and_then(Tok::ident) {
            Some("class") => RawKind::Class,
            Some("interface") => RawKind::Interface,
            Some("enum") => RawKind::Enum,
            Some(other) => {
                return Err(ParseError(format!(
                    "expected type declaration, found `{other}`"
                )))
            }
            None => return Err(ParseError("expected type declaration".into())),
        };
        self.pos += 1;
        let name = match self.bump() {
            Some(Tok::Ident(n)) => n,
            other => return Err(ParseError(format!("expected type name, got {other:?}"))),
        };
        // Type parameters on the declaration.
        if self.peek().and_then(Tok::sym) == Some('<') {
            self.skip_balanced('<', '>');
        }
        let mut extends = Vec::new();
        let mut implements = Vec::new();
        loop {
            match self.peek().and_then(Tok::ident) {
                Some("extends") => {
                    self.pos += 1;
                    loop {
                        extends.push(self.parse_type_ref()?);
                        if !self.eat_sym(',') {
                            break;
                        }
                    }
                }
                Some("implements") => {
                    self.pos += 1;
                    loop {
                        implements.push(self.parse_type_ref()?);
                        if !self.eat_sym(',') {
                            break;
                        }
                    }
                }
                Some("permits") => {
                    self.pos += 1;
                    loop {
                        let _ = self.parse_type_ref()?;
                        if !self.eat_sym(',') {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let mut name_path = outer.to_vec();
        name_path.push(name);
        let mut ty = RawType {
            name_path: name_path.clone(),
            kind,
            is_abstract: mods.is_abstract,
            is_final: mods.is_final,
            extends,
            implements,
            fields: Vec::new(),
            methods: Vec::new(),
        };
        self.expect_sym('{')?;
        if kind == RawKind::Enum {
            self.skip_enum_constants();
        }
        self.parse_members(&mut ty, out, &name_path)?;
        out.push(ty);
        Ok(())
    }

    /// Enum constants up to the separating `;` or the closing brace.
    fn skip_enum_constants(&mut self) {
        loop {
            match self.peek() {
                None => return,
                Some(Tok::Sym(';')) => {
                    self.pos += 1;
                    return;
                }
                Some(Tok::Sym('}')) => return,
                Some(Tok::Sym('(')) => {
                    self.skip_balanced('(', ')');
                }
                Some(Tok::Sym('{')) => {
                    self.skip_balanced('{', '}');
                }
                _ => self.pos += 1,
            }
        }
    }

    fn parse_members(
        &mut self,
        ty: &mut RawType,
        out: &mut Vec<RawType>,
        name_path: &[String],
    ) -> Result<(), ParseError> {
        loop {
            self.skip_annotations();
            match self.peek() {
                None => return Err(ParseError("unexpected end of file in type body".into())),
                Some(Tok::Sym('}')) => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(Tok::Sym(';')) => {
                    self.pos += 1;
                }
                Some(Tok::Sym('{')) => {
                    // Instance or static initializer block: outside the
                    // supported subset, skipped without inventing facts.
                    self.skip_balanced('{', '}');
                }
                Some(Tok::Ident(w)) if w == "static" && self.peek_at(1).and_then(Tok::sym) == Some('{') => {
                    self.pos += 1;
                    self.skip_balanced('{', '}');
                }
                _ => self.parse_member(ty, out, name_path)?,
            }
        }
    }

    fn parse_member(
        &mut self,
        ty: &mut RawType,
        out: &mut Vec<RawType>,
        name_path: &[String],
    ) -> Result<(), ParseError> {
        let default_vis = if ty.kind == RawKind::Interface {
            Visibility::Public
        } else {
            Visibility::Package
        };
        let mods = self.parse_modifiers();
        match self.peek().and_then(Tok::ident) {
            Some("class") | Some("interface") | Some("enum") => {
                // Nested type declaration. Rewind is unnecessary: modifiers
                // were consumed, parse_type_decl re-parses an empty set.
                return self.parse_type_decl_with_mods(out, name_path, mods);
            }
            _ => {}
        }
        // Generic method type parameters.
        if self.peek().and_then(Tok::sym) == Some('<') {
            self.skip_balanced('<', '>');
        }
        let visibility = mods.visibility.unwrap_or(default_vis);
        let simple_name = name_path.last().map(String::as_str).unwrap_or_default();

        // Constructor: identifier equal to the type name followed by `(`.
        if self.peek().and_then(Tok::ident) == Some(simple_name)
            && self.peek_at(1).and_then(Tok::sym) == Some('(')
        {
            let name = self.bump().and_then(|t| t.ident().map(str::to_owned)).unwrap();
            let params = self.parse_params()?;
            self.skip_throws();
            let body = self.capture_body()?;
            ty.methods.push(build_method(
                name, true, visibility, mods.is_static, None, params, body,
            ));
            return Ok(());
        }

        // Otherwise: `Type name(...)` method or `Type name [= init];` field.
        let member_ty = self.parse_type_ref()?;
        let name = match self.bump() {
            Some(Tok::Ident(n)) => n,
            other => {
                return Err(ParseError(format!(
                    "expected member name, got {other:?}"
                )))
            }
        };
        if self.peek().and_then(Tok::sym) == Some('(') {
            let params = self.parse_params()?;
            self.skip_throws();
            let body = self.capture_body()?;
            let return_ty = if member_ty.base == "void" {
                None
            } else {
                Some(member_ty)
            };
            ty.methods.push(build_method(
                name,
                false,
                visibility,
                mods.is_static,
                return_ty,
                params,
                body,
            ));
            return Ok(());
        }

        // Field declaration, possibly with several declarators.
        let mut field_name = name;
        loop {
            let mut field_ty = member_ty.clone();
            // C-style array suffix on the declarator.
            while self.peek().and_then(Tok::sym) == Some('[') {
                self.skip_balanced('[', ']');
                field_ty.array = true;
            }
            let mut init_has_new = false;
            if self.eat_sym('=') {
                let init = self.capture_until_declarator_end();
                init_has_new = init.iter().any(|t| t.is_ident("new"));
            }
            ty.fields.push(RawField {
                name: field_name,
                ty: field_ty,
                visibility,
                is_static: mods.is_static,
                init_has_new,
            });
            if self.eat_sym(',') {
                field_name = match self.bump() {
                    Some(Tok::Ident(n)) => n,
                    other => {
                        return Err(ParseError(format!(
                            "expected field name, got {other:?}"
                        )))
                    }
                };
            } else {
                self.expect_sym(';')?;
                return Ok(());
            }
        }
    }

    fn parse_type_decl_with_mods(
        &mut self,
        out: &mut Vec<RawType>,
        outer: &[String],
        mods: Modifiers,
    ) -> Result<(), ParseError> {
        // Same as parse_type_decl but modifiers are already consumed.
        let kind = match self.peek().and_then(Tok::ident) {
            Some("class") => RawKind::Class,
            Some("interface") => RawKind::Interface,
            Some("enum") => RawKind::Enum,
            _ => return Err(ParseError("expected nested type declaration".into())),
        };
        self.pos += 1;
        let name = match self.bump() {
            Some(Tok::Ident(n)) => n,
            other => return Err(ParseError(format!("expected type name, got {other:?}"))),
        };
        if self.peek().and_then(Tok::sym) == Some('<') {
            self.skip_balanced('<', '>');
        }
        let mut extends = Vec::new();
        let mut implements = Vec::new();
        loop {
            match self.peek().and_then(Tok::ident) {
                Some("extends") => {
                    self.pos += 1;
                    loop {
                        extends.push(self.parse_type_ref()?);
                        if !self.eat_sym(',') {
                            break;
                        }
                    }
                }
                Some("implements") => {
                    self.pos += 1;
                    loop {
                        implements.push(self.parse_type_ref()?);
                        if !self.eat_sym(',') {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let mut name_path = outer.to_vec();
        name_path.push(name);
        let mut ty = RawType {
            name_path: name_path.clone(),
            kind,
            is_abstract: mods.is_abstract,
            is_final: mods.is_final,
            extends,
            implements,
            fields: Vec::new(),
            methods: Vec::new(),
        };
        self.expect_sym('{')?;
        if kind == RawKind::Enum {
            self.skip_enum_constants();
        }
        self.parse_members(&mut ty, out, &name_path)?;
        out.push(ty);
        Ok(())
    }

    fn parse_params(&mut self) -> Result<Vec<(String, TypeRef)>, ParseError> {
        self.expect_sym('(')?;
        let mut params = Vec::new();
        if self.eat_sym(')') {
            return Ok(params);
        }
        loop {
            self.skip_annotations();
            while self
                .peek()
                .and_then(Tok::ident)
                .is_some_and(|w| w == "final")
            {
                self.pos += 1;
            }
            let mut ty = self.parse_type_ref()?;
            // Varargs.
            while self.peek().and_then(Tok::sym) == Some('.') {
                self.pos += 1;
            }
            let name = match self.bump() {
                Some(Tok::Ident(n)) => n,
                other => {
                    return Err(ParseError(format!(
                        "expected parameter name, got {other:?}"
                    )))
                }
            };
            while self.peek().and_then(Tok::sym) == Some('[') {
                self.skip_balanced('[', ']');
                ty.array = true;
            }
            params.push((name, ty));
            if !self.eat_sym(',') {
                break;
            }
        }
        self.expect_sym(')')?;
        Ok(params)
    }

    fn skip_throws(&mut self) {
        if self.peek().is_some_and(|t| t.is_ident("throws")) {
            self.pos += 1;
            loop {
                if self.parse_type_ref().is_err() {
                    return;
                }
                if !self.eat_sym(',') {
                    return;
                }
            }
        }
    }

    /// Captures a `{...}` body as tokens, or consumes `;` for abstract
    /// methods. Returns None when there is no body.
    fn capture_body(&mut self) -> Result<Option<Vec<Tok>>, ParseError> {
        if self.eat_sym(';') {
            return Ok(None);
        }
        if self.peek().and_then(Tok::sym) != Some('{') {
            return Err(ParseError("expected method body or `;`".into()));
        }
        let start = self.pos;
        if !self.skip_balanced('{', '}') {
            return Err(ParseError("unbalanced braces in method body".into()));
        }
        // Inner tokens without the outer braces.
        Ok(Some(self.toks[start + 1..self.pos - 1].to_vec()))
    }

    /// Field initializer tokens up to `,` or `;` at nesting depth zero.
    fn capture_until_declarator_end(&mut self) -> Vec<Tok> {
        let mut depth = 0i32;
        let start = self.pos;
        while let Some(t) = self.peek() {
            match t.sym() {
                Some('(') | Some('{') | Some('[') => depth += 1,
                Some(')') | Some('}') | Some(']') => depth -= 1,
                Some(';') | Some(',') if depth == 0 => break,
                _ => {}
            }
            self.pos += 1;
        }
        self.toks[start..self.pos].to_vec()
    }

    /// Parses a type reference: dotted base, optional generics, array suffix.
    fn parse_type_ref(&mut self) -> Result<TypeRef, ParseError> {
        let mut parts = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Ident(_)) => {
                    if let Some(Tok::Ident(p)) = self.bump() {
                        parts.push(p);
                    }
                }
                other => {
                    return Err(ParseError(format!(
                        "expected type reference, got {other:?}"
                    )))
                }
            }
            if self.peek().and_then(Tok::sym) == Some('.')
                && self.peek_at(1).and_then(Tok::ident).is_some()
            {
                self.pos += 1;
            } else {
                break;
            }
        }
        let mut type_args = Vec::new();
        if self.peek().and_then(Tok::sym) == Some('<') {
            self.pos += 1;
            if !self.eat_sym('>') {
                loop {
                    if self.eat_sym('?') {
                        // Wildcard, possibly bounded.
                        if self
                            .peek()
                            .and_then(Tok::ident)
                            .is_some_and(|w| w == "extends" || w == "super")
                        {
                            self.pos += 1;
                            type_args.push(self.parse_type_ref()?);
                        }
                    } else {
                        type_args.push(self.parse_type_ref()?);
                    }
                    if !self.eat_sym(',') {
                        break;
                    }
                }
                self.expect_sym('>')?;
            }
        }
        let mut array = false;
        while self.peek().and_then(Tok::sym) == Some('[')
            && self.peek_at(1).and_then(Tok::sym) == Some(']')
        {
            self.pos += 2;
            array = true;
        }
        Ok(TypeRef {
            base: parts.join("."),
            type_args,
            array,
        })
    }
}

fn build_method(
    name: String,
    is_ctor: bool,
    visibility: Visibility,
    is_static: bool,
    return_ty: Option<TypeRef>,
    params: Vec<(String, TypeRef)>,
    body: Option<Vec<Tok>>,
) -> RawMethod {
    let mut method = RawMethod {
        name,
        is_ctor,
        visibility,
        is_static,
        return_ty,
        params,
        invocations: Vec::new(),
        creations: Vec::new(),
        referenced_idents: HashSet::new(),
        assigned_new: Vec::new(),
        locals: Vec::new(),
    };
    if let Some(toks) = body {
        scan_body(&toks, &mut method);
    }
    method
}

#[derive(Clone, Copy, Default)]
struct Ctx {
    conditional: bool,
    exception: bool,
}

impl Ctx {
    fn guard(self) -> RawGuard {
        if self.exception {
            RawGuard::ExceptionGuarded
        } else if self.conditional {
            RawGuard::Conditional
        } else {
            RawGuard::None
        }
    }
}

/// Statement-level scan of a method body. Tracks if/while and try context
/// for creations, records invocations with a classified receiver, local
/// variable declarations and assignments whose right side creates objects.
fn scan_body(toks: &[Tok], out: &mut RawMethod) {
    let mut cursor = 0;
    scan_statements(toks, &mut cursor, Ctx::default(), out);
}

fn scan_statements(toks: &[Tok], i: &mut usize, ctx: Ctx, out: &mut RawMethod) {
    while *i < toks.len() {
        if toks[*i] == Tok::Sym('}') {
            return;
        }
        scan_statement(toks, i, ctx, out);
    }
}

fn scan_statement(toks: &[Tok], i: &mut usize, ctx: Ctx, out: &mut RawMethod) {
    match &toks[*i] {
        Tok::Sym('{') => {
            *i += 1;
            scan_statements(toks, i, ctx, out);
            eat_sym(toks, i, '}');
        }
        Tok::Sym(';') => *i += 1,
        Tok::Ident(w) if w == "if" => {
            *i += 1;
            scan_paren_expr(toks, i, ctx, out);
            scan_statement(
                toks,
                i,
                Ctx {
                    conditional: true,
                    ..ctx
                },
                out,
            );
            if *i < toks.len() && toks[*i].is_ident("else") {
                *i += 1;
                scan_statement(
                    toks,
                    i,
                    Ctx {
                        conditional: true,
                        ..ctx
                    },
                    out,
                );
            }
        }
        Tok::Ident(w) if w == "while" => {
            *i += 1;
            scan_paren_expr(toks, i, ctx, out);
            scan_statement(
                toks,
                i,
                Ctx {
                    conditional: true,
                    ..ctx
                },
                out,
            );
        }
        Tok::Ident(w) if w == "try" => {
            *i += 1;
            if *i < toks.len() && toks[*i] == Tok::Sym('(') {
                scan_paren_expr(toks, i, Ctx { exception: true, ..ctx }, out);
            }
            scan_statement(toks, i, Ctx { exception: true, ..ctx }, out);
            while *i < toks.len() && toks[*i].is_ident("catch") {
                *i += 1;
                skip_parens(toks, i);
                scan_statement(toks, i, Ctx { exception: true, ..ctx }, out);
            }
            if *i < toks.len() && toks[*i].is_ident("finally") {
                *i += 1;
                scan_statement(toks, i, ctx, out);
            }
        }
        Tok::Ident(w) if w == "for" || w == "switch" || w == "synchronized" => {
            *i += 1;
            if *i < toks.len() && toks[*i] == Tok::Sym('(') {
                scan_paren_expr(toks, i, ctx, out);
            }
            scan_statement(toks, i, ctx, out);
        }
        Tok::Ident(w) if w == "do" => {
            *i += 1;
            scan_statement(toks, i, ctx, out);
            // Trailing `while (...)` of the do-loop.
            if *i < toks.len() && toks[*i].is_ident("while") {
                *i += 1;
                scan_paren_expr(toks, i, ctx, out);
                eat_sym(toks, i, ';');
            }
        }
        Tok::Ident(w) if w == "return" || w == "throw" || w == "assert" => {
            *i += 1;
            scan_expression_until_semicolon(toks, i, ctx, out);
        }
        Tok::Ident(w) if w == "break" || w == "continue" => {
            *i += 1;
            scan_expression_until_semicolon(toks, i, ctx, out);
        }
        _ => {
            try_local_declaration(toks, i, out);
            try_assignment_target(toks, *i, out);
            scan_expression_until_semicolon(toks, i, ctx, out);
        }
    }
}

fn eat_sym(toks: &[Tok], i: &mut usize, c: char) {
    if *i < toks.len() && toks[*i] == Tok::Sym(c) {
        *i += 1;
    }
}

fn skip_parens(toks: &[Tok], i: &mut usize) {
    if *i >= toks.len() || toks[*i] != Tok::Sym('(') {
        return;
    }
    let mut depth = 0;
    while *i < toks.len() {
        match toks[*i] {
            Tok::Sym('(') => depth += 1,
            Tok::Sym(')') => {
                depth -= 1;
                *i += 1;
                if depth == 0 {
                    return;
                }
                continue;
            }
            _ => {}
        }
        *i += 1;
    }
}

/// Scans a parenthesized expression (condition, for-header) for calls and
/// creations under the given context.
fn scan_paren_expr(toks: &[Tok], i: &mut usize, ctx: Ctx, out: &mut RawMethod) {
    if *i >= toks.len() || toks[*i] != Tok::Sym('(') {
        return;
    }
    let start = *i;
    skip_parens(toks, i);
    scan_expr_tokens(&toks[start + 1..i.saturating_sub(1)], ctx, out);
}

/// Detects `Type name = ...;` / `Type name;` at a statement start and
/// records the local's declared type.
fn try_local_declaration(toks: &[Tok], i: &mut usize, out: &mut RawMethod) {
    let slice = &toks[*i..];
    let Some((ty, consumed)) = try_parse_type_prefix(slice) else {
        return;
    };
    let Some(Tok::Ident(name)) = slice.get(consumed) else {
        return;
    };
    match slice.get(consumed + 1) {
        Some(Tok::Sym('=')) if slice.get(consumed + 2) != Some(&Tok::Sym('=')) => {}
        Some(Tok::Sym(';')) | Some(Tok::Sym(',')) | Some(Tok::Sym(':')) => {}
        _ => return,
    }
    out.locals.push((name.clone(), ty));
    // Leave the cursor: expression scan handles the initializer.
    *i += consumed;
}

/// Conservative type-prefix recognizer used for local declarations.
fn try_parse_type_prefix(slice: &[Tok]) -> Option<(TypeRef, usize)> {
    let mut j = 0;
    let mut parts = Vec::new();
    loop {
        match slice.get(j) {
            Some(Tok::Ident(w)) if !is_keyword(w) => {
                parts.push(w.clone());
                j += 1;
            }
            _ => return None,
        }
        if slice.get(j) == Some(&Tok::Sym('.'))
            && matches!(slice.get(j + 1), Some(Tok::Ident(_)))
        {
            j += 1;
        } else {
            break;
        }
    }
    let mut type_args = Vec::new();
    if slice.get(j) == Some(&Tok::Sym('<')) {
        // Balanced generic argument list that must close before any
        // statement-level symbol; otherwise it is a comparison.
        let mut depth = 0;
        let open = j;
        loop {
            match slice.get(j) {
                Some(Tok::Sym('<')) => depth += 1,
                Some(Tok::Sym('>')) => {
                    depth -= 1;
                    if depth == 0 {
                        j += 1;
                        break;
                    }
                }
                Some(Tok::Sym(';')) | Some(Tok::Sym('(')) | Some(Tok::Sym('{'))
                | Some(Tok::Sym('=')) | None => return None,
                _ => {}
            }
            j += 1;
        }
        // Record only the last top-level argument's base as element hint.
        let inner = &slice[open + 1..j - 1];
        if let Some(arg) = last_top_level_type(inner) {
            type_args.push(arg);
        }
    }
    let mut array = false;
    while slice.get(j) == Some(&Tok::Sym('[')) && slice.get(j + 1) == Some(&Tok::Sym(']')) {
        j += 2;
        array = true;
    }
    if parts.is_empty() {
        return None;
    }
    Some((
        TypeRef {
            base: parts.join("."),
            type_args,
            array,
        },
        j,
    ))
}

fn last_top_level_type(inner: &[Tok]) -> Option<TypeRef> {
    let mut depth = 0;
    let mut last_start = 0;
    for (k, t) in inner.iter().enumerate() {
        match t {
            Tok::Sym('<') => depth += 1,
            Tok::Sym('>') => depth -= 1,
            Tok::Sym(',') if depth == 0 => last_start = k + 1,
            _ => {}
        }
    }
    let seg = &inner[last_start..];
    let mut parts = Vec::new();
    for t in seg {
        match t {
            Tok::Ident(w) if !is_keyword(w) => parts.push(w.clone()),
            Tok::Sym('.') => {}
            Tok::Sym('<') => break,
            _ => break,
        }
    }
    if parts.is_empty() {
        None
    } else {
        Some(TypeRef {
            base: parts.join("."),
            type_args: Vec::new(),
            array: false,
        })
    }
}

fn is_keyword(w: &str) -> bool {
    matches!(
        w,
        "if" | "else"
            | "while"
            | "for"
            | "do"
            | "switch"
            | "case"
            | "try"
            | "catch"
            | "finally"
            | "return"
            | "throw"
            | "new"
            | "this"
            | "super"
            | "break"
            | "continue"
            | "instanceof"
            | "assert"
            | "synchronized"
    )
}

/// Records `name = ... new ...` and `this.name = ... new ...` targets.
fn try_assignment_target(toks: &[Tok], i: usize, out: &mut RawMethod) {
    let slice = &toks[i..];
    let (name, eq_at) = match (slice.first(), slice.get(1), slice.get(2), slice.get(3)) {
        (Some(Tok::Ident(t)), Some(Tok::Sym('.')), Some(Tok::Ident(n)), Some(Tok::Sym('=')))
            if t == "this" =>
        {
            (n.clone(), 3)
        }
        (Some(Tok::Ident(n)), Some(Tok::Sym('=')), _, _) if !is_keyword(n) => (n.clone(), 1),
        _ => return,
    };
    if slice.get(eq_at + 1) == Some(&Tok::Sym('=')) {
        return; // `==` comparison
    }
    // Right side up to the statement end at depth zero.
    let mut depth = 0;
    for t in &slice[eq_at + 1..] {
        match t {
            Tok::Sym('(') | Tok::Sym('{') | Tok::Sym('[') => depth += 1,
            Tok::Sym(')') | Tok::Sym('}') | Tok::Sym(']') => {
                if depth == 0 {
                    break;
                }
                depth -= 1;
            }
            Tok::Sym(';') if depth == 0 => break,
            Tok::Ident(w) if w == "new" => {
                out.assigned_new.push(name);
                return;
            }
            _ => {}
        }
    }
}

/// Scans an expression statement ending at `;` (or an unmatched `}`) at
/// depth zero, advancing the cursor past the terminator.
fn scan_expression_until_semicolon(toks: &[Tok], i: &mut usize, ctx: Ctx, out: &mut RawMethod) {
    let start = *i;
    let mut depth = 0;
    while *i < toks.len() {
        match toks[*i] {
            Tok::Sym('(') | Tok::Sym('{') | Tok::Sym('[') => depth += 1,
            Tok::Sym(')') | Tok::Sym(']') => depth -= 1,
            Tok::Sym('}') => {
                if depth == 0 {
                    break;
                }
                depth -= 1;
            }
            Tok::Sym(';') if depth == 0 => {
                scan_expr_tokens(&toks[start..*i], ctx, out);
                *i += 1;
                return;
            }
            _ => {}
        }
        *i += 1;
    }
    scan_expr_tokens(&toks[start..*i], ctx, out);
}

/// Linear scan of expression tokens: creations, invocations, references.
fn scan_expr_tokens(toks: &[Tok], ctx: Ctx, out: &mut RawMethod) {
    let mut i = 0;
    while i < toks.len() {
        match &toks[i] {
            Tok::Ident(w) if w == "new" => {
                i += 1;
                let Some((ty, consumed)) = try_parse_type_prefix(&toks[i..]) else {
                    continue;
                };
                i += consumed;
                match toks.get(i) {
                    Some(Tok::Sym('(')) => {
                        out.creations.push(RawCreation {
                            ty,
                            guard: ctx.guard(),
                        });
                        // Arguments are scanned by the outer loop; an
                        // anonymous class body right after the arguments is
                        // skipped wholesale.
                        let args_start = i;
                        let mut j = i;
                        skip_parens(toks, &mut j);
                        scan_expr_tokens(&toks[args_start + 1..j.saturating_sub(1)], ctx, out);
                        i = j;
                        if toks.get(i) == Some(&Tok::Sym('{')) {
                            let mut depth = 0;
                            while i < toks.len() {
                                match toks[i] {
                                    Tok::Sym('{') => depth += 1,
                                    Tok::Sym('}') => {
                                        depth -= 1;
                                        if depth == 0 {
                                            i += 1;
                                            break;
                                        }
                                    }
                                    _ => {}
                                }
                                i += 1;
                            }
                        }
                    }
                    Some(Tok::Sym('[')) => {
                        // Array allocation: not an object creation.
                        while toks.get(i) == Some(&Tok::Sym('[')) {
                            let mut j = i;
                            let mut depth = 0;
                            while j < toks.len() {
                                match toks[j] {
                                    Tok::Sym('[') => depth += 1,
                                    Tok::Sym(']') => {
                                        depth -= 1;
                                        if depth == 0 {
                                            j += 1;
                                            break;
                                        }
                                    }
                                    _ => {}
                                }
                                j += 1;
                            }
                            i = j;
                        }
                    }
                    _ => {}
                }
            }
            Tok::Ident(name) if toks.get(i + 1) == Some(&Tok::Sym('(')) && !is_keyword(name) => {
                let receiver = classify_receiver(toks, i);
                let argc = count_args(toks, i + 1);
                if let Some(receiver) = receiver {
                    out.invocations.push(RawInvocation {
                        receiver,
                        method: name.clone(),
                        argc,
                    });
                }
                out.referenced_idents.insert(name.clone());
                i += 1;
            }
            Tok::Ident(w) => {
                out.referenced_idents.insert(w.clone());
                i += 1;
            }
            _ => i += 1,
        }
    }
}

/// Classifies the receiver of `name(` at position `i`. Returns None for
/// chained or multi-hop receivers, which are skipped conservatively.
fn classify_receiver(toks: &[Tok], i: usize) -> Option<CallReceiver> {
    if i == 0 || toks[i - 1] != Tok::Sym('.') {
        return Some(CallReceiver::Implicit(Receiver::SelfRef));
    }
    if i < 2 {
        return None;
    }
    match &toks[i - 2] {
        Tok::Ident(w) if w == "this" => {
            // `this.m()` unless preceded by another `.`
            if i >= 3 && toks[i - 3] == Tok::Sym('.') {
                None
            } else {
                Some(CallReceiver::Implicit(Receiver::SelfRef))
            }
        }
        Tok::Ident(w) if w == "super" => {
            if i >= 3 && toks[i - 3] == Tok::Sym('.') {
                None
            } else {
                Some(CallReceiver::Implicit(Receiver::Super))
            }
        }
        Tok::Ident(recv) => {
            if i >= 3 && toks[i - 3] == Tok::Sym('.') {
                None
            } else {
                Some(CallReceiver::Named(recv.clone()))
            }
        }
        _ => None,
    }
}

/// Number of top-level arguments in the parenthesized list starting at `open`.
fn count_args(toks: &[Tok], open: usize) -> usize {
    let mut depth = 0;
    let mut args = 0;
    let mut saw_token = false;
    let mut i = open;
    while i < toks.len() {
        match toks[i] {
            Tok::Sym('(') | Tok::Sym('[') | Tok::Sym('{') => depth += 1,
            Tok::Sym(')') | Tok::Sym(']') | Tok::Sym('}') => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            Tok::Sym(',') if depth == 1 => args += 1,
            _ => {
                if depth == 1 {
                    saw_token = true;
                }
            }
        }
        i += 1;
    }
    if saw_token || args > 0 {
        args + 1
    } else {
        0
    }
}
