//! Declared type descriptors and the expressiveness rules.
//!
//! A type is *expressive* when its public surface — constructor parameters
//! matched to getters, setters with getters, collection getters and ordered
//! init methods — carries enough information to rebuild any instance.
//! Expressiveness here is declared in schema files and compiled into
//! [`TypeDescriptor`]s held by a [`Registry`]; nothing is discovered by
//! host-language reflection.

use std::fmt;
use std::sync::Arc;

use indexmap::{IndexMap, IndexSet};
use thiserror::Error;

/// Canonical name of the primitively expressive string type.
pub const STRING_TYPE: &str = "System.String";

/// Canonical names of the built-in primitive value types.
pub const PRIMITIVE_VALUE_TYPES: &[&str] = &[
    "System.Boolean",
    "System.Byte",
    "System.SByte",
    "System.Int16",
    "System.UInt16",
    "System.Int32",
    "System.UInt32",
    "System.Int64",
    "System.UInt64",
    "System.Single",
    "System.Double",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpressivenessKind {
    /// The canonical string type.
    PrimitiveString,
    /// A built-in primitive value type with text round-tripping.
    PrimitiveValue,
    /// A value type with registered to-text and from-text conversions.
    ValueWithParse,
    /// A declared type whose descriptor carries the full construction recipe.
    Expressive,
    /// Anything else; not serializable until declared.
    NonExpressive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollectionKind {
    None,
    Sequence,
    Keyed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyDescriptor {
    pub name: String,
    /// Declared type text, e.g. `System.Int32`, `seq<System.Double>`.
    pub value_type: String,
    pub has_getter: bool,
    pub has_setter: bool,
    pub is_static: bool,
    pub non_expressive: bool,
    pub collection_kind: CollectionKind,
    pub default_literal: Option<String>,
    pub compare_ignore: bool,
}

impl PropertyDescriptor {
    pub fn is_expressive_setter(&self) -> bool {
        self.has_getter && self.has_setter && !self.non_expressive && self.collection_kind == CollectionKind::None
    }

    pub fn is_expressive_getter(&self) -> bool {
        self.has_getter && !self.has_setter && !self.non_expressive && self.collection_kind != CollectionKind::None
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitMethodDescriptor {
    pub name: String,
    pub sequence: i32,
    pub returns_success_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CtorParam {
    pub param_name: String,
    pub getter_name: String,
    pub value_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDescriptor {
    pub full_name: String,
    pub interfaces: Vec<String>,
    pub constructor_params: Vec<CtorParam>,
    pub is_default_ctor: bool,
    pub statics: Vec<PropertyDescriptor>,
    pub instance_props: Vec<PropertyDescriptor>,
    pub inits: Vec<InitMethodDescriptor>,
    pub expressiveness: ExpressivenessKind,
    pub compare_base_stop: Option<String>,
    pub is_sealed: bool,
    /// Stack kind: instances copy on assignment and carry no identity.
    pub is_value_kind: bool,
    /// Synthesized from a stream rather than declared in a schema.
    pub provisional: bool,
}

impl TypeDescriptor {
    pub fn short_name(&self) -> &str {
        self.full_name.rsplit('.').next().unwrap_or(&self.full_name)
    }

    pub fn expressive_setters(&self) -> impl Iterator<Item = &PropertyDescriptor> {
        self.instance_props.iter().filter(|p| p.is_expressive_setter())
    }

    pub fn expressive_getters(&self) -> impl Iterator<Item = &PropertyDescriptor> {
        self.instance_props.iter().filter(|p| p.is_expressive_getter())
    }

    pub fn hidden_props(&self) -> impl Iterator<Item = &PropertyDescriptor> {
        self.instance_props.iter().filter(|p| p.non_expressive)
    }

    pub fn instance_prop(&self, name: &str) -> Option<&PropertyDescriptor> {
        self.instance_props.iter().find(|p| p.name == name)
    }

    pub fn static_prop(&self, name: &str) -> Option<&PropertyDescriptor> {
        self.statics.iter().find(|p| p.name == name)
    }

    pub fn ctor_param_for_getter(&self, getter: &str) -> Option<&CtorParam> {
        self.constructor_params.iter().find(|p| p.getter_name == getter)
    }
}

/// Parsed form of a declared member type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeRef {
    Named(String),
    Seq(Box<TypeRef>),
    Map(Box<TypeRef>, Box<TypeRef>),
}

impl TypeRef {
    pub fn parse(text: &str) -> Result<TypeRef, SchemaError> {
        let text = text.trim();
        if let Some(inner) = text.strip_prefix("seq<").and_then(|t| t.strip_suffix('>')) {
            let elem = TypeRef::parse(inner)?;
            if !matches!(elem, TypeRef::Named(_)) {
                return Err(SchemaError::Syntax {
                    line: 0,
                    message: format!("nested collection types are not supported: {text}"),
                });
            }
            return Ok(TypeRef::Seq(Box::new(elem)));
        }
        if let Some(inner) = text.strip_prefix("map<").and_then(|t| t.strip_suffix('>')) {
            let mut parts = inner.splitn(2, ',');
            let key = parts.next().unwrap_or("").trim();
            let value = parts.next().unwrap_or("").trim();
            if key.is_empty() || value.is_empty() {
                return Err(SchemaError::Syntax {
                    line: 0,
                    message: format!("malformed map type: {text}"),
                });
            }
            let (k, v) = (TypeRef::parse(key)?, TypeRef::parse(value)?);
            if !matches!(k, TypeRef::Named(_)) || !matches!(v, TypeRef::Named(_)) {
                return Err(SchemaError::Syntax {
                    line: 0,
                    message: format!("nested collection types are not supported: {text}"),
                });
            }
            return Ok(TypeRef::Map(Box::new(k), Box::new(v)));
        }
        if text.is_empty() {
            return Err(SchemaError::Syntax { line: 0, message: "empty type name".into() });
        }
        Ok(TypeRef::Named(text.to_string()))
    }

    pub fn is_collection(&self) -> bool {
        matches!(self, TypeRef::Seq(_) | TypeRef::Map(_, _))
    }

    pub fn collection_kind(&self) -> CollectionKind {
        match self {
            TypeRef::Seq(_) => CollectionKind::Sequence,
            TypeRef::Map(_, _) => CollectionKind::Keyed,
            TypeRef::Named(_) => CollectionKind::None,
        }
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Named(n) => write!(f, "{n}"),
            TypeRef::Seq(e) => write!(f, "seq<{e}>"),
            TypeRef::Map(k, v) => write!(f, "map<{k}, {v}>"),
        }
    }
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("schema syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("type {type_name} declares two init methods with sequence {sequence}")]
    DuplicateInitSequence { type_name: String, sequence: i32 },
    #[error("type {type_name} has no usable constructor: {reason}")]
    NoUsableConstructor { type_name: String, reason: String },
    #[error("constructor parameter {param} of {type_name} matches no public getter")]
    UnmatchedConstructorParam { type_name: String, param: String },
    #[error("constructor parameter {param} matches several getters: {candidates:?}")]
    AmbiguousMatch { param: String, candidates: Vec<String> },
    #[error("type {0} is already registered")]
    DuplicateType(String),
    #[error("synthesized type {0} would shadow a registered type")]
    ShadowsRegisteredType(String),
}

/// Which value class a leading parameter-name decorator letter stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoratorClass {
    SignedInt,
    UnsignedInt,
    Double,
    Str,
    Bool,
}

/// Decorator letters recognized in constructor parameter names.
///
/// The default table covers `i`, `u`, `d`, `w`, `b`; more entries may be
/// added through configuration.
#[derive(Debug, Clone)]
pub struct DecoratorTable {
    entries: IndexMap<char, DecoratorClass>,
}

impl Default for DecoratorTable {
    fn default() -> Self {
        let mut entries = IndexMap::new();
        entries.insert('i', DecoratorClass::SignedInt);
        entries.insert('u', DecoratorClass::UnsignedInt);
        entries.insert('d', DecoratorClass::Double);
        entries.insert('w', DecoratorClass::Str);
        entries.insert('b', DecoratorClass::Bool);
        DecoratorTable { entries }
    }
}

impl DecoratorTable {
    pub fn insert(&mut self, letter: char, class: DecoratorClass) {
        self.entries.insert(letter, class);
    }

    pub fn matches(&self, letter: char, param_type: &str) -> bool {
        let Some(class) = self.entries.get(&letter) else { return false };
        match class {
            DecoratorClass::SignedInt => {
                matches!(param_type, "System.SByte" | "System.Int16" | "System.Int32" | "System.Int64")
            }
            DecoratorClass::UnsignedInt => {
                matches!(param_type, "System.Byte" | "System.UInt16" | "System.UInt32" | "System.UInt64")
            }
            DecoratorClass::Double => matches!(param_type, "System.Double" | "System.Single"),
            DecoratorClass::Str => param_type == STRING_TYPE,
            DecoratorClass::Bool => param_type == "System.Boolean",
        }
    }
}

/// All candidate getter names a parameter name may stand for, after the
/// optional decorator strip, collection strip and camel-case fix.
fn name_candidates(param_name: &str, param_type: &str, table: &DecoratorTable) -> IndexSet<String> {
    let mut stems: IndexSet<String> = IndexSet::new();
    stems.insert(param_name.to_string());
    if let Some(first) = param_name.chars().next() {
        if param_name.len() > 1 && table.matches(first, param_type) {
            stems.insert(param_name[first.len_utf8()..].to_string());
        }
    }
    let is_collection = TypeRef::parse(param_type).map(|t| t.is_collection()).unwrap_or(false);
    if is_collection {
        for stem in stems.clone() {
            if let Some(stripped) = stem.strip_suffix('s') {
                if !stripped.is_empty() {
                    stems.insert(stripped.to_string());
                }
            }
        }
    }
    let mut out = IndexSet::new();
    for stem in stems {
        out.insert(stem.clone());
        let mut chars = stem.chars();
        if let Some(first) = chars.next() {
            if first.is_ascii_lowercase() {
                out.insert(format!("{}{}", first.to_ascii_uppercase(), chars.as_str()));
            }
        }
    }
    out
}

/// Matches a constructor parameter to the unique public getter named by the
/// camel-case / decorator / collection conventions. Comparison is
/// case-sensitive after normalization and the getter type must equal the
/// parameter type.
pub fn match_parameter_name(
    param_name: &str,
    param_type: &str,
    getters: &[(String, String)],
    table: &DecoratorTable,
) -> Result<Option<String>, SchemaError> {
    let candidates = name_candidates(param_name, param_type, table);
    let mut hits: Vec<String> = Vec::new();
    for (getter_name, getter_type) in getters {
        if candidates.contains(getter_name.as_str()) && getter_type == param_type {
            hits.push(getter_name.clone());
        }
    }
    match hits.len() {
        0 => Ok(None),
        1 => Ok(Some(hits.remove(0))),
        _ => Err(SchemaError::AmbiguousMatch { param: param_name.to_string(), candidates: hits }),
    }
}

/// The derived getter name for a constructor parameter: decorator stripped,
/// collection plural stripped, first letter capitalized.
pub fn derived_getter_name(param_name: &str, param_type: &str, table: &DecoratorTable) -> String {
    let mut stem = param_name.to_string();
    if let Some(first) = stem.chars().next() {
        if stem.len() > 1 && table.matches(first, param_type) {
            stem = stem[first.len_utf8()..].to_string();
        }
    }
    let is_collection = TypeRef::parse(param_type).map(|t| t.is_collection()).unwrap_or(false);
    if is_collection {
        if let Some(stripped) = stem.strip_suffix('s') {
            if !stripped.is_empty() {
                stem = stripped.to_string();
            }
        }
    }
    let mut chars = stem.chars();
    match chars.next() {
        Some(first) if first.is_ascii_lowercase() => {
            format!("{}{}", first.to_ascii_uppercase(), chars.as_str())
        }
        _ => stem,
    }
}

/// One raw member line of a type declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeclMember {
    Ctor { param: String, explicit_getter: Option<String>, value_type: String },
    Setter { name: String, value_type: String, is_static: bool },
    Getter { name: String, value_type: String, is_static: bool },
    Hidden { name: String, value_type: String },
    Init { name: String, sequence: i32, returns_flag: bool },
    Default { name: String, literal: String },
    Ignore { name: String },
    CompareBase { name: String },
}

/// A parsed (not yet validated) type declaration block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDeclaration {
    pub full_name: String,
    pub interfaces: Vec<String>,
    pub members: Vec<DeclMember>,
    pub is_sealed: bool,
    pub is_value_kind: bool,
    pub line: usize,
}

/// Parses a declaration file into raw type declarations. One type per block,
/// a block starting at each `type` header line; `#` starts a comment.
pub fn parse_schema(text: &str) -> Result<Vec<TypeDeclaration>, SchemaError> {
    let mut decls: Vec<TypeDeclaration> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut words: Vec<&str> = line.split_whitespace().collect();
        let mut is_sealed = false;
        let mut is_value = false;
        while let Some(first) = words.first() {
            match *first {
                "sealed" => {
                    is_sealed = true;
                    words.remove(0);
                }
                "value" => {
                    is_value = true;
                    words.remove(0);
                }
                _ => break,
            }
        }
        if words.first() == Some(&"type") {
            if words.len() < 2 {
                return Err(SchemaError::Syntax { line: line_no, message: "type header without a name".into() });
            }
            let full_name = words[1].to_string();
            let mut interfaces = Vec::new();
            if words.len() > 2 {
                if words[2] != "implements" {
                    return Err(SchemaError::Syntax {
                        line: line_no,
                        message: format!("expected `implements`, found `{}`", words[2]),
                    });
                }
                let rest = words[3..].join(" ");
                for intf in rest.split(',') {
                    let intf = intf.trim();
                    if intf.is_empty() {
                        return Err(SchemaError::Syntax { line: line_no, message: "empty interface name".into() });
                    }
                    interfaces.push(intf.to_string());
                }
            }
            decls.push(TypeDeclaration {
                full_name,
                interfaces,
                members: Vec::new(),
                is_sealed,
                is_value_kind: is_value,
                line: line_no,
            });
            continue;
        }
        if is_sealed || is_value {
            return Err(SchemaError::Syntax {
                line: line_no,
                message: "`sealed`/`value` only apply to type headers".into(),
            });
        }
        let Some(decl) = decls.last_mut() else {
            return Err(SchemaError::Syntax { line: line_no, message: "member line before any type header".into() });
        };
        decl.members.push(parse_member_line(line, line_no)?);
    }
    Ok(decls)
}

fn split_name_type(rest: &str, line: usize) -> Result<(String, String), SchemaError> {
    let mut parts = rest.splitn(2, ':');
    let name = parts.next().unwrap_or("").trim();
    let ty = parts.next().unwrap_or("").trim();
    if name.is_empty() || ty.is_empty() {
        return Err(SchemaError::Syntax { line, message: format!("expected `<name>: <type>`, found `{rest}`") });
    }
    Ok((name.to_string(), ty.to_string()))
}

fn parse_member_line(line: &str, line_no: usize) -> Result<DeclMember, SchemaError> {
    let (keyword, rest) = match line.split_once(char::is_whitespace) {
        Some((k, r)) => (k, r.trim()),
        None => (line, ""),
    };
    match keyword {
        "ctor" => {
            let (name_part, ty) = split_name_type(rest, line_no)?;
            let (param, explicit) = match name_part.split_once("->") {
                Some((p, g)) => (p.trim().to_string(), Some(g.trim().to_string())),
                None => (name_part, None),
            };
            Ok(DeclMember::Ctor { param, explicit_getter: explicit, value_type: ty })
        }
        "setter" => {
            let (name, ty) = split_name_type(rest, line_no)?;
            Ok(DeclMember::Setter { name, value_type: ty, is_static: false })
        }
        "getter" => {
            let (name, ty) = split_name_type(rest, line_no)?;
            Ok(DeclMember::Getter { name, value_type: ty, is_static: false })
        }
        "static" => {
            let (kind, rest2) = match rest.split_once(char::is_whitespace) {
                Some((k, r)) => (k, r.trim()),
                None => (rest, ""),
            };
            let (name, ty) = split_name_type(rest2, line_no)?;
            match kind {
                "setter" => Ok(DeclMember::Setter { name, value_type: ty, is_static: true }),
                "getter" => Ok(DeclMember::Getter { name, value_type: ty, is_static: true }),
                other => Err(SchemaError::Syntax {
                    line: line_no,
                    message: format!("expected `static setter` or `static getter`, found `static {other}`"),
                }),
            }
        }
        "hidden" => {
            let (name, ty) = split_name_type(rest, line_no)?;
            Ok(DeclMember::Hidden { name, value_type: ty })
        }
        "init" => {
            let mut name = None;
            let mut sequence = None;
            let mut returns_flag = false;
            for word in rest.split_whitespace() {
                if let Some(v) = word.strip_prefix("seq=") {
                    sequence = Some(v.parse::<i32>().map_err(|_| SchemaError::Syntax {
                        line: line_no,
                        message: format!("bad init sequence `{v}`"),
                    })?);
                } else if let Some(v) = word.strip_prefix("returns=") {
                    returns_flag = v == "System.Boolean";
                } else if name.is_none() {
                    name = Some(word.to_string());
                } else {
                    return Err(SchemaError::Syntax { line: line_no, message: format!("unexpected `{word}`") });
                }
            }
            let name = name.ok_or_else(|| SchemaError::Syntax { line: line_no, message: "init without a name".into() })?;
            let sequence = sequence.ok_or_else(|| SchemaError::Syntax {
                line: line_no,
                message: format!("init {name} is missing `seq=<n>`"),
            })?;
            Ok(DeclMember::Init { name, sequence, returns_flag })
        }
        "default" => {
            let (name, literal) = rest.split_once('=').ok_or_else(|| SchemaError::Syntax {
                line: line_no,
                message: "expected `default <name> = <literal>`".into(),
            })?;
            Ok(DeclMember::Default { name: name.trim().to_string(), literal: literal.trim().to_string() })
        }
        "ignore" => Ok(DeclMember::Ignore { name: rest.to_string() }),
        "comparebase" => Ok(DeclMember::CompareBase { name: rest.to_string() }),
        other => Err(SchemaError::Syntax { line: line_no, message: format!("unknown member keyword `{other}`") }),
    }
}

/// Builds a validated descriptor from a raw declaration: interfaces, static
/// setters, static getters, instance setters, instance getters, constructor
/// and init methods, in that order.
pub fn build_descriptor(decl: &TypeDeclaration, table: &DecoratorTable) -> Result<TypeDescriptor, SchemaError> {
    if decl.full_name == STRING_TYPE || PRIMITIVE_VALUE_TYPES.contains(&decl.full_name.as_str()) {
        return Err(SchemaError::Syntax {
            line: decl.line,
            message: format!("{} is primitively expressive and cannot be redeclared", decl.full_name),
        });
    }

    let mut interfaces: Vec<String> = Vec::new();
    for intf in &decl.interfaces {
        if !interfaces.contains(intf) {
            interfaces.push(intf.clone());
        }
    }

    let mut statics: Vec<PropertyDescriptor> = Vec::new();
    let mut instance_props: Vec<PropertyDescriptor> = Vec::new();
    let mut ctor_lines: Vec<(&String, &Option<String>, &String)> = Vec::new();
    let mut inits: Vec<InitMethodDescriptor> = Vec::new();
    let mut compare_base_stop = None;

    let push_prop = |props: &mut Vec<PropertyDescriptor>, prop: PropertyDescriptor, line: usize| {
        if props.iter().any(|p| p.name == prop.name) {
            return Err(SchemaError::Syntax { line, message: format!("duplicate member `{}`", prop.name) });
        }
        props.push(prop);
        Ok(())
    };

    for member in &decl.members {
        match member {
            DeclMember::Setter { name, value_type, is_static } => {
                let ty = TypeRef::parse(value_type)?;
                if ty.is_collection() {
                    return Err(SchemaError::Syntax {
                        line: decl.line,
                        message: format!("setter {name} cannot have a collection type; declare a getter"),
                    });
                }
                let prop = PropertyDescriptor {
                    name: name.clone(),
                    value_type: value_type.clone(),
                    has_getter: true,
                    has_setter: true,
                    is_static: *is_static,
                    non_expressive: false,
                    collection_kind: CollectionKind::None,
                    default_literal: None,
                    compare_ignore: false,
                };
                let target = if *is_static { &mut statics } else { &mut instance_props };
                push_prop(target, prop, decl.line)?;
            }
            DeclMember::Getter { name, value_type, is_static } => {
                let ty = TypeRef::parse(value_type)?;
                if !ty.is_collection() {
                    return Err(SchemaError::Syntax {
                        line: decl.line,
                        message: format!(
                            "getter {name} must be a collection; a plain read-only value belongs to a ctor line"
                        ),
                    });
                }
                let prop = PropertyDescriptor {
                    name: name.clone(),
                    value_type: value_type.clone(),
                    has_getter: true,
                    has_setter: false,
                    is_static: *is_static,
                    non_expressive: false,
                    collection_kind: ty.collection_kind(),
                    default_literal: None,
                    compare_ignore: false,
                };
                let target = if *is_static { &mut statics } else { &mut instance_props };
                push_prop(target, prop, decl.line)?;
            }
            DeclMember::Hidden { name, value_type } => {
                let ty = TypeRef::parse(value_type)?;
                let prop = PropertyDescriptor {
                    name: name.clone(),
                    value_type: value_type.clone(),
                    has_getter: true,
                    has_setter: true,
                    is_static: false,
                    non_expressive: true,
                    collection_kind: ty.collection_kind(),
                    default_literal: None,
                    compare_ignore: false,
                };
                push_prop(&mut instance_props, prop, decl.line)?;
            }
            DeclMember::Ctor { param, explicit_getter, value_type } => {
                TypeRef::parse(value_type)?;
                ctor_lines.push((param, explicit_getter, value_type));
            }
            DeclMember::Init { name, sequence, returns_flag } => {
                if inits.iter().any(|i| i.sequence == *sequence) {
                    return Err(SchemaError::DuplicateInitSequence {
                        type_name: decl.full_name.clone(),
                        sequence: *sequence,
                    });
                }
                inits.push(InitMethodDescriptor {
                    name: name.clone(),
                    sequence: *sequence,
                    returns_success_flag: *returns_flag,
                });
            }
            DeclMember::Default { .. } | DeclMember::Ignore { .. } => {}
            DeclMember::CompareBase { name } => compare_base_stop = Some(name.clone()),
        }
    }

    // Constructor parameters: each derives its read-only getter, then the
    // matching rules must pick that getter uniquely among all getters.
    let mut constructor_params: Vec<CtorParam> = Vec::new();
    for (param, explicit, value_type) in &ctor_lines {
        let getter_name = match explicit {
            Some(g) => g.clone(),
            None => derived_getter_name(param, value_type, table),
        };
        if constructor_params.iter().any(|p| p.getter_name == getter_name) {
            return Err(SchemaError::NoUsableConstructor {
                type_name: decl.full_name.clone(),
                reason: format!("two constructor parameters resolve to getter {getter_name}"),
            });
        }
        if instance_props.iter().any(|p| p.name == getter_name && p.is_expressive_setter()) {
            return Err(SchemaError::NoUsableConstructor {
                type_name: decl.full_name.clone(),
                reason: format!("constructor parameter getter {getter_name} is also an expressive setter"),
            });
        }
        constructor_params.push(CtorParam {
            param_name: (*param).clone(),
            getter_name,
            value_type: (*value_type).clone(),
        });
    }

    // Validate the naming convention over the full getter surface.
    let mut all_getters: Vec<(String, String)> = Vec::new();
    for p in &constructor_params {
        all_getters.push((p.getter_name.clone(), p.value_type.clone()));
    }
    for p in instance_props.iter().filter(|p| p.has_getter && !p.non_expressive) {
        all_getters.push((p.name.clone(), p.value_type.clone()));
    }
    for p in &constructor_params {
        match match_parameter_name(&p.param_name, &p.value_type, &all_getters, table)? {
            Some(found) if found == p.getter_name => {}
            Some(found) => {
                return Err(SchemaError::AmbiguousMatch {
                    param: p.param_name.clone(),
                    candidates: vec![p.getter_name.clone(), found],
                })
            }
            None => {
                return Err(SchemaError::UnmatchedConstructorParam {
                    type_name: decl.full_name.clone(),
                    param: p.param_name.clone(),
                })
            }
        }
    }

    // Defaults and comparison flags attach to already-collected members.
    for member in &decl.members {
        match member {
            DeclMember::Default { name, literal } => {
                let prop = instance_props
                    .iter_mut()
                    .chain(statics.iter_mut())
                    .find(|p| &p.name == name)
                    .ok_or_else(|| SchemaError::Syntax {
                        line: decl.line,
                        message: format!("default for unknown member {name}"),
                    })?;
                prop.default_literal = Some(literal.clone());
            }
            DeclMember::Ignore { name } => {
                if let Some(prop) = instance_props.iter_mut().chain(statics.iter_mut()).find(|p| &p.name == name) {
                    prop.compare_ignore = true;
                } else if !constructor_params.iter().any(|p| &p.getter_name == name) {
                    return Err(SchemaError::Syntax {
                        line: decl.line,
                        message: format!("ignore for unknown member {name}"),
                    });
                }
            }
            _ => {}
        }
    }

    inits.sort_by_key(|i| i.sequence);

    Ok(TypeDescriptor {
        full_name: decl.full_name.clone(),
        interfaces,
        is_default_ctor: constructor_params.is_empty(),
        constructor_params,
        statics,
        instance_props,
        inits,
        expressiveness: ExpressivenessKind::Expressive,
        compare_base_stop,
        is_sealed: decl.is_sealed,
        is_value_kind: decl.is_value_kind,
        provisional: false,
    })
}

type ParseFn = Box<dyn Fn(&str) -> Result<String, String> + Send + Sync>;

/// Holds every declared descriptor plus the parse conversions for value
/// types. Immutable once a build phase is over; deserialization sessions may
/// extend it through type synthesis behind a `&mut` borrow.
pub struct Registry {
    types: IndexMap<String, Arc<TypeDescriptor>>,
    conversions: IndexMap<String, ParseFn>,
    decorators: DecoratorTable,
}

impl Default for Registry {
    fn default() -> Self {
        Self::new()
    }
}

impl Registry {
    pub fn new() -> Self {
        Registry {
            types: IndexMap::new(),
            conversions: IndexMap::new(),
            decorators: DecoratorTable::default(),
        }
    }

    pub fn decorators(&self) -> &DecoratorTable {
        &self.decorators
    }

    pub fn decorators_mut(&mut self) -> &mut DecoratorTable {
        &mut self.decorators
    }

    /// Registers a to-text/from-text conversion making `type_name` a
    /// value-with-parse type. The function normalizes a literal or rejects it.
    pub fn register_conversion(
        &mut self,
        type_name: &str,
        parse: impl Fn(&str) -> Result<String, String> + Send + Sync + 'static,
    ) {
        self.conversions.insert(type_name.to_string(), Box::new(parse));
    }

    pub fn convert_literal(&self, type_name: &str, literal: &str) -> Option<Result<String, String>> {
        self.conversions.get(type_name).map(|f| f(literal))
    }

    pub fn register(&mut self, descriptor: TypeDescriptor) -> Result<Arc<TypeDescriptor>, SchemaError> {
        if self.types.contains_key(&descriptor.full_name) {
            return Err(SchemaError::DuplicateType(descriptor.full_name.clone()));
        }
        let arc = Arc::new(descriptor);
        self.types.insert(arc.full_name.clone(), Arc::clone(&arc));
        Ok(arc)
    }

    /// Registers a synthesized descriptor; refuses to shadow a declared type.
    pub fn register_synthesized(&mut self, descriptor: TypeDescriptor) -> Result<Arc<TypeDescriptor>, SchemaError> {
        if self.types.contains_key(&descriptor.full_name) {
            return Err(SchemaError::ShadowsRegisteredType(descriptor.full_name.clone()));
        }
        let mut descriptor = descriptor;
        descriptor.provisional = true;
        let arc = Arc::new(descriptor);
        self.types.insert(arc.full_name.clone(), Arc::clone(&arc));
        Ok(arc)
    }

    pub fn get(&self, full_name: &str) -> Option<&Arc<TypeDescriptor>> {
        self.types.get(full_name)
    }

    pub fn types(&self) -> impl Iterator<Item = &Arc<TypeDescriptor>> {
        self.types.values()
    }

    /// Longest registered type name that is a dotted prefix of `path`.
    /// Returns the descriptor and the remainder after the prefix (with its
    /// leading delimiter retained).
    pub fn resolve_prefix<'a>(&self, path: &'a str) -> Option<(&Arc<TypeDescriptor>, &'a str)> {
        let mut best: Option<(&Arc<TypeDescriptor>, &'a str)> = None;
        for (name, desc) in &self.types {
            if let Some(rest) = path.strip_prefix(name.as_str()) {
                if rest.is_empty() || rest.starts_with(['.', '*', '@', '&', '$', ':']) {
                    match best {
                        Some((prev, _)) if prev.full_name.len() >= name.len() => {}
                        _ => best = Some((desc, rest)),
                    }
                }
            }
        }
        best
    }

    /// Parses, builds and registers every declaration in a schema file.
    pub fn load_schema(&mut self, text: &str) -> Result<Vec<Arc<TypeDescriptor>>, SchemaError> {
        let decls = parse_schema(text)?;
        let mut out = Vec::new();
        for decl in &decls {
            let descriptor = build_descriptor(decl, &self.decorators)?;
            out.push(self.register(descriptor)?);
        }
        Ok(out)
    }
}

/// Classifies a type name against the built-in primitives, the registered
/// conversions and the declared descriptors.
pub fn classify_primitive(type_name: &str, registry: &Registry) -> ExpressivenessKind {
    if type_name == STRING_TYPE {
        return ExpressivenessKind::PrimitiveString;
    }
    if PRIMITIVE_VALUE_TYPES.contains(&type_name) {
        return ExpressivenessKind::PrimitiveValue;
    }
    if registry.conversions.contains_key(type_name) {
        return ExpressivenessKind::ValueWithParse;
    }
    match registry.get(type_name) {
        Some(desc) => desc.expressiveness,
        None => ExpressivenessKind::NonExpressive,
    }
}

/// True when values of the named type travel as single literal items.
pub fn is_primitive_like(type_name: &str, registry: &Registry) -> bool {
    matches!(
        classify_primitive(type_name, registry),
        ExpressivenessKind::PrimitiveString | ExpressivenessKind::PrimitiveValue | ExpressivenessKind::ValueWithParse
    )
}

/// Renders a descriptor back into the declaration-file form.
pub fn declaration_form(desc: &TypeDescriptor) -> String {
    let mut out = String::new();
    if desc.is_value_kind {
        out.push_str("value ");
    }
    if desc.is_sealed {
        out.push_str("sealed ");
    }
    out.push_str("type ");
    out.push_str(&desc.full_name);
    if !desc.interfaces.is_empty() {
        out.push_str(" implements ");
        out.push_str(&desc.interfaces.join(", "));
    }
    out.push('\n');
    for p in &desc.constructor_params {
        out.push_str(&format!("  ctor {} -> {}: {}\n", p.param_name, p.getter_name, p.value_type));
    }
    for p in &desc.statics {
        let kw = if p.is_expressive_getter() { "getter" } else { "setter" };
        out.push_str(&format!("  static {kw} {}: {}\n", p.name, p.value_type));
    }
    for p in &desc.instance_props {
        if p.non_expressive {
            out.push_str(&format!("  hidden {}: {}\n", p.name, p.value_type));
        } else if p.is_expressive_getter() {
            out.push_str(&format!("  getter {}: {}\n", p.name, p.value_type));
        } else {
            out.push_str(&format!("  setter {}: {}\n", p.name, p.value_type));
        }
    }
    for i in &desc.inits {
        let returns = if i.returns_success_flag { " returns=System.Boolean" } else { "" };
        out.push_str(&format!("  init {} seq={}{}\n", i.name, i.sequence, returns));
    }
    for p in desc.instance_props.iter().chain(desc.statics.iter()) {
        if let Some(d) = &p.default_literal {
            out.push_str(&format!("  default {} = {}\n", p.name, d));
        }
        if p.compare_ignore {
            out.push_str(&format!("  ignore {}\n", p.name));
        }
    }
    if let Some(base) = &desc.compare_base_stop {
        out.push_str(&format!("  comparebase {base}\n"));
    }
    out
}

/// The schema text of the worked example used across the test suites: one
/// expressive type with a readonly ctor parameter, one setter, one sequence
/// getter and two ordered init methods.
pub const FIGURE_SCHEMA: &str = "\
type UnitTest.MyExpressiveType implements UnitTest.MyIntface
  ctor myReadonly: System.Double
  setter MyValue: System.Int32
  getter MyCollection: seq<System.Double>
  init ConnectToDB seq=1 returns=System.Boolean
  init SetDBLogger seq=2
  default MyValue = 0
";
