//! Descriptor synthesis for streams whose types are not registered.
//!
//! A complete-format record carries enough binding to recover the shape of
//! its type: `$` names become constructor parameters, `.` names setters,
//! `*` names sequence getters and `@`/`&` pairs keyed getters, with member
//! types taken from the preceding type binding or the primitive item itself.
//! Synthesized descriptors carry no init methods — behavior cannot be
//! inferred from data.

use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

use crate::serializer::binding::SegmentKind;
use crate::stream_core::{ExpressiveStream, StreamItem};
use crate::type_model::{
    CollectionKind, CtorParam, ExpressivenessKind, PropertyDescriptor, Registry, SchemaError, TypeDescriptor,
    STRING_TYPE,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("member {member} of {type_name} appears with two types: {first} and {second}")]
    ConflictingMemberType { type_name: String, member: String, first: String, second: String },
    #[error("cannot synthesize {0}: the stream carries no name binding")]
    InsufficientBinding(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

/// One observed member of a record under synthesis.
#[derive(Debug, Clone)]
pub struct ObservedMember {
    pub kind: SegmentKind,
    pub name: String,
    pub type_name: Option<String>,
}

/// Accumulates observations for one unknown type.
#[derive(Debug, Default, Clone)]
pub struct SynthRecord {
    pub type_name: String,
    pub interfaces: Vec<String>,
    pub is_value_kind: bool,
    members: IndexMap<(u8, String), Option<String>>,
}

fn kind_tag(kind: SegmentKind) -> u8 {
    match kind {
        SegmentKind::Root => 0,
        SegmentKind::Interface => 1,
        SegmentKind::Setter => 2,
        SegmentKind::CtorParam => 3,
        SegmentKind::SeqGetter => 4,
        SegmentKind::KeyedKey => 5,
        SegmentKind::KeyedValue => 6,
    }
}

impl SynthRecord {
    pub fn new(type_name: &str) -> Self {
        SynthRecord { type_name: type_name.to_string(), ..Default::default() }
    }

    pub fn observe(&mut self, member: ObservedMember) -> Result<(), SynthError> {
        let key = (kind_tag(member.kind), member.name.clone());
        match self.members.get_mut(&key) {
            None => {
                self.members.insert(key, member.type_name);
            }
            Some(existing) => match (&existing, &member.type_name) {
                (Some(first), Some(second)) if first != second => {
                    return Err(SynthError::ConflictingMemberType {
                        type_name: self.type_name.clone(),
                        member: member.name,
                        first: first.clone(),
                        second: second.clone(),
                    })
                }
                (None, Some(_)) => *existing = member.type_name,
                _ => {}
            },
        }
        Ok(())
    }

    pub fn add_interface(&mut self, interface: &str) {
        if !self.interfaces.iter().any(|i| i == interface) {
            self.interfaces.push(interface.to_string());
        }
    }

    /// Builds the descriptor. Members whose type never became known (null-only
    /// references) are dropped.
    pub fn into_descriptor(self) -> Result<TypeDescriptor, SynthError> {
        let mut constructor_params = Vec::new();
        let mut instance_props = Vec::new();
        let mut keyed_keys: IndexMap<String, String> = IndexMap::new();
        let mut keyed_values: IndexMap<String, String> = IndexMap::new();

        for ((tag, name), type_name) in &self.members {
            let Some(type_name) = type_name else { continue };
            match tag {
                t if *t == kind_tag(SegmentKind::CtorParam) => {
                    constructor_params.push(CtorParam {
                        param_name: decapitalize(name),
                        getter_name: name.clone(),
                        value_type: type_name.clone(),
                    });
                }
                t if *t == kind_tag(SegmentKind::Setter) => {
                    instance_props.push(PropertyDescriptor {
                        name: name.clone(),
                        value_type: type_name.clone(),
                        has_getter: true,
                        has_setter: true,
                        is_static: false,
                        non_expressive: false,
                        collection_kind: CollectionKind::None,
                        default_literal: None,
                        compare_ignore: false,
                    });
                }
                t if *t == kind_tag(SegmentKind::SeqGetter) => {
                    instance_props.push(PropertyDescriptor {
                        name: name.clone(),
                        value_type: format!("seq<{type_name}>"),
                        has_getter: true,
                        has_setter: false,
                        is_static: false,
                        non_expressive: false,
                        collection_kind: CollectionKind::Sequence,
                        default_literal: None,
                        compare_ignore: false,
                    });
                }
                t if *t == kind_tag(SegmentKind::KeyedKey) => {
                    keyed_keys.insert(name.clone(), type_name.clone());
                }
                t if *t == kind_tag(SegmentKind::KeyedValue) => {
                    keyed_values.insert(name.clone(), type_name.clone());
                }
                _ => {}
            }
        }
        for (name, key_type) in keyed_keys {
            let value_type = keyed_values.get(&name).cloned().unwrap_or_else(|| STRING_TYPE.to_string());
            instance_props.push(PropertyDescriptor {
                name: name.clone(),
                value_type: format!("map<{key_type}, {value_type}>"),
                has_getter: true,
                has_setter: false,
                is_static: false,
                non_expressive: false,
                collection_kind: CollectionKind::Keyed,
                default_literal: None,
                compare_ignore: false,
            });
        }

        Ok(TypeDescriptor {
            full_name: self.type_name,
            interfaces: self.interfaces,
            is_default_ctor: constructor_params.is_empty(),
            constructor_params,
            statics: Vec::new(),
            instance_props,
            inits: Vec::new(),
            expressiveness: ExpressivenessKind::Expressive,
            compare_base_stop: None,
            is_sealed: false,
            is_value_kind: self.is_value_kind,
            provisional: true,
        })
    }
}

fn decapitalize(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(first) if first.is_ascii_uppercase() => {
            format!("{}{}", first.to_ascii_lowercase(), chars.as_str())
        }
        _ => name.to_string(),
    }
}

fn name_extends(name: &str, base: &str) -> bool {
    name.len() > base.len()
        && name.starts_with(base)
        && name[base.len()..].starts_with([':', '.', '$', '*', '@', '&'])
}

/// Consumes the stream prefix describing one unregistered type, builds its
/// descriptor and registers it.
pub fn synthesize_descriptor<S: ExpressiveStream>(
    stream: &mut S,
    registry: &mut Registry,
) -> Result<Arc<TypeDescriptor>, SynthError> {
    let mut pending_type: Option<String> = None;
    let mut record: Option<SynthRecord> = None;
    let mut root_name: Option<String> = None;
    // Type binding of nested records currently open inside the root record,
    // deepest last. Only immediate children of the root become members.
    let mut nested: Vec<(String, String)> = Vec::new();

    while stream.has_next() {
        let peeked_name = stream.peek().next_name.map(str::to_string);
        if let (Some(root), Some(name)) = (root_name.as_deref(), &peeked_name) {
            if name != root && !name_extends(name, root) {
                break; // next record begins
            }
        }
        let item = stream.next().expect("has_next checked");
        match item {
            StreamItem::TypeInfo { type_name } => {
                if record.is_none() && registry.get(&type_name).is_some() {
                    return Err(SynthError::InsufficientBinding(format!(
                        "{type_name} is already registered"
                    )));
                }
                pending_type = Some(type_name);
            }
            StreamItem::IntfInfo { type_name, interface_name } => {
                if let Some(rec) = record.as_mut() {
                    if rec.type_name == type_name {
                        rec.add_interface(&interface_name);
                    }
                } else if pending_type.as_deref() == Some(type_name.as_str()) {
                    let mut rec = SynthRecord::new(&type_name);
                    rec.add_interface(&interface_name);
                    record = Some(rec);
                }
            }
            StreamItem::Refer { .. } | StreamItem::Value { .. } if record.is_none() || root_name.is_none() => {
                let (name, is_stack) = match &item {
                    StreamItem::Refer { name, .. } => (name.clone(), false),
                    StreamItem::Value { name } => (name.clone(), true),
                    _ => unreachable!(),
                };
                let type_name = match pending_type.take() {
                    Some(t) => t,
                    None => match &record {
                        Some(rec) => rec.type_name.clone(),
                        None => {
                            return Err(SynthError::InsufficientBinding(
                                "record begins without type binding".to_string(),
                            ))
                        }
                    },
                };
                if name.is_empty() {
                    return Err(SynthError::InsufficientBinding(type_name));
                }
                let mut rec = record.take().unwrap_or_else(|| SynthRecord::new(&type_name));
                rec.type_name = type_name;
                rec.is_value_kind = is_stack;
                record = Some(rec);
                root_name = Some(name);
            }
            other => {
                let Some(rec) = record.as_mut() else {
                    // free primitive before any record: nothing to synthesize
                    if let StreamItem::VString { .. } | StreamItem::Prim { .. } = other {
                        return Err(SynthError::InsufficientBinding(
                            "stream begins with a primitive item".to_string(),
                        ));
                    }
                    continue;
                };
                let root = root_name.clone().unwrap_or_default();
                let Some(name) = other.name().map(str::to_string) else { continue };
                while let Some((open, _)) = nested.last() {
                    if name_extends(&name, open) || name == *open {
                        break;
                    }
                    nested.pop();
                }
                let base = nested.last().map(|(n, _)| n.clone()).unwrap_or_else(|| root.clone());
                let relative = if name_extends(&name, &base) { &name[base.len()..] } else { "" };
                let direct_child_of_root = nested.is_empty() && !relative.is_empty();
                let segments = relative.matches([':', '.', '$', '*', '@', '&']).count();
                let observed_type = match &other {
                    StreamItem::Prim { type_name, .. } => Some(type_name.clone()),
                    StreamItem::VString { .. } => Some(STRING_TYPE.to_string()),
                    StreamItem::Refer { identity: 0, .. } => None,
                    StreamItem::Refer { .. } | StreamItem::Value { .. } => pending_type.clone(),
                    StreamItem::TypeInfo { .. } | StreamItem::IntfInfo { .. } => unreachable!(),
                };
                if direct_child_of_root && segments == 1 {
                    let delim = relative.chars().next().unwrap();
                    let kind = SegmentKind::from_delimiter(delim).expect("delimiter");
                    let member = relative[delim.len_utf8()..].to_string();
                    rec.observe(ObservedMember { kind, name: member, type_name: observed_type })?;
                }
                // Nested records open their own scope.
                if let StreamItem::Refer { identity, .. } = &other {
                    if *identity != 0 {
                        if let Some(t) = pending_type.take() {
                            nested.push((name.clone(), t));
                        }
                    }
                }
                if let StreamItem::Value { .. } = &other {
                    if let Some(t) = pending_type.take() {
                        nested.push((name.clone(), t));
                    }
                }
                pending_type = None;
            }
        }
    }

    let record = record.ok_or_else(|| {
        SynthError::InsufficientBinding("stream holds no instance record".to_string())
    })?;
    let descriptor = record.into_descriptor()?;
    Ok(registry.register_synthesized(descriptor)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream_core::BufStream;

    fn figure_stream() -> BufStream {
        let mut s = BufStream::complete();
        s.append(StreamItem::TypeInfo { type_name: "UnitTest.MyExpressiveType".into() });
        s.append(StreamItem::IntfInfo {
            type_name: "UnitTest.MyExpressiveType".into(),
            interface_name: "UnitTest.MyIntface".into(),
        });
        s.append(StreamItem::Refer { name: "MyExpressiveType".into(), identity: 1 });
        s.append(StreamItem::Prim {
            name: "MyExpressiveType.MyValue".into(),
            type_name: "System.Int32".into(),
            literal: "6789".into(),
        });
        s.append(StreamItem::Prim {
            name: "MyExpressiveType$MyReadonly".into(),
            type_name: "System.Double".into(),
            literal: "12345".into(),
        });
        for v in ["0.123", "456.7", "890"] {
            s.append(StreamItem::Prim {
                name: "MyExpressiveType*MyCollection".into(),
                type_name: "System.Double".into(),
                literal: v.into(),
            });
        }
        s
    }

    #[test]
    fn figure_stream_synthesizes_figure_type() {
        let mut reg = Registry::new();
        let desc = synthesize_descriptor(&mut figure_stream(), &mut reg).unwrap();
        assert_eq!(desc.full_name, "UnitTest.MyExpressiveType");
        assert_eq!(desc.interfaces, vec!["UnitTest.MyIntface".to_string()]);
        assert_eq!(desc.constructor_params.len(), 1);
        assert_eq!(desc.constructor_params[0].getter_name, "MyReadonly");
        assert_eq!(desc.constructor_params[0].value_type, "System.Double");
        let setter = desc.instance_prop("MyValue").unwrap();
        assert!(setter.is_expressive_setter());
        assert_eq!(setter.value_type, "System.Int32");
        let getter = desc.instance_prop("MyCollection").unwrap();
        assert!(getter.is_expressive_getter());
        assert_eq!(getter.value_type, "seq<System.Double>");
        assert!(desc.provisional);
        assert!(desc.inits.is_empty());
    }

    #[test]
    fn primitive_stream_not_synthesized() {
        let mut reg = Registry::new();
        let mut s = BufStream::complete();
        s.append(StreamItem::VString { name: "x".into(), text: "abc".into() });
        let err = synthesize_descriptor(&mut s, &mut reg).unwrap_err();
        assert!(matches!(err, SynthError::InsufficientBinding(_)));
    }

    #[test]
    fn conflicting_member_types_rejected() {
        let mut reg = Registry::new();
        let mut s = BufStream::complete();
        s.append(StreamItem::TypeInfo { type_name: "T.X".into() });
        s.append(StreamItem::Refer { name: "a".into(), identity: 1 });
        s.append(StreamItem::Prim { name: "a.V".into(), type_name: "System.Int32".into(), literal: "1".into() });
        s.append(StreamItem::Prim { name: "a.V".into(), type_name: "System.Double".into(), literal: "2".into() });
        let err = synthesize_descriptor(&mut s, &mut reg).unwrap_err();
        assert!(matches!(err, SynthError::ConflictingMemberType { .. }));
    }

    #[test]
    fn shadowing_registered_type_rejected() {
        let mut reg = Registry::new();
        reg.load_schema("type UnitTest.MyExpressiveType\n  setter MyValue: System.Int32\n").unwrap();
        let err = synthesize_descriptor(&mut figure_stream(), &mut reg).unwrap_err();
        assert!(matches!(err, SynthError::InsufficientBinding(_)));
    }
}
