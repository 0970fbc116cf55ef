//! Ordered serialization and reconstruction of object graphs.
//!
//! Emission for one instance follows a fixed item order: type binding,
//! interfaces, static setters and static getter elements (each at most once
//! per type per stream), the Value/Refer marker, instance setters,
//! constructor parameters, then collection getter elements. The scheme
//! applies recursively until everything is reduced to primitive items, and
//! identities already written come back as bare references so aliasing
//! survives the trip.

pub mod binding;
mod reader;

pub use reader::{deserialize, deserialize_static, deserialize_with, Deserialized, SynthMode};

use indexmap::{IndexMap, IndexSet};
use thiserror::Error;

use crate::object_model::{
    canonical_type_name, default_value, render_literal, DynValue, Heap, InitHooks, ObjectError,
};
use crate::stream_core::{BufStream, ExpressiveStream, StreamError, StreamItem};
use crate::type_model::{is_primitive_like, Registry, SchemaError, TypeDescriptor, TypeRef};
use crate::typesynth::SynthError;

use binding::{encode_binding, SegmentKind};

#[derive(Debug, Error)]
pub enum SerialError {
    #[error("type {0} is not registered")]
    UnregisteredType(String),
    #[error("value of kind {0} is not expressive in this position")]
    NonExpressiveValue(String),
    #[error("interface set mismatch for {type_name}: stream has {stream_set:?}, registry has {registry_set:?}")]
    InterfaceSetMismatch { type_name: String, stream_set: Vec<String>, registry_set: Vec<String> },
    #[error("unknown type {0} and synthesis is disabled")]
    UnknownType(String),
    #[error("malformed stream: {0}")]
    MalformedStream(String),
    #[error("malformed binding name: {0}")]
    MalformedBindingName(String),
    #[error(transparent)]
    Object(#[from] ObjectError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// Identity bookkeeping for one serialization or deserialization session.
#[derive(Debug, Default, Clone)]
pub struct RefTable {
    /// Serialize side: identities whose full body was already written.
    emitted: IndexSet<u64>,
    /// Serialize side: types whose interface/static items were written.
    types_emitted: IndexSet<String>,
    /// Deserialize side: stream identity to local heap identity.
    resolved: IndexMap<u64, u64>,
    /// Deserialize side: types whose interface sets were verified.
    intf_checked: IndexSet<String>,
    /// Deserialize side: static (type, property) pairs already applied.
    statics_applied: IndexSet<(String, String)>,
}

impl RefTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.emitted.clear();
        self.types_emitted.clear();
        self.resolved.clear();
        self.intf_checked.clear();
        self.statics_applied.clear();
    }

    pub fn emitted_count(&self) -> usize {
        self.emitted.len()
    }

    pub fn resolved_identity(&self, stream_identity: u64) -> Option<u64> {
        self.resolved.get(&stream_identity).copied()
    }
}

/// Empties the identity caches so the next stream starts fresh.
pub fn clear_session(ref_table: &mut RefTable) {
    ref_table.clear();
}

/// One serialization/deserialization session: the reference table plus the
/// warnings collected for tolerated mismatches.
#[derive(Debug, Default)]
pub struct Session {
    pub ref_table: RefTable,
    pub warnings: Vec<String>,
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.ref_table.clear();
        self.warnings.clear();
    }
}

/// Serializes a value under a root name.
pub fn serialize<S: ExpressiveStream>(
    stream: &mut S,
    value: &DynValue,
    name: &str,
    registry: &Registry,
    heap: &Heap,
    session: &mut Session,
) -> Result<(), SerialError> {
    let config = stream.config();
    if is_primitive_value(value) && config.include_type {
        stream.append(StreamItem::TypeInfo { type_name: canonical_type_name(value).to_string() });
    }
    emit_value(stream, value, name, None, true, registry, heap, session)
}

/// Serializes only the type-level portion of a descriptor: type binding,
/// interfaces, static setters and static getter elements.
pub fn serialize_static<S: ExpressiveStream>(
    stream: &mut S,
    descriptor: &TypeDescriptor,
    registry: &Registry,
    heap: &Heap,
    session: &mut Session,
) -> Result<(), SerialError> {
    stream.append(StreamItem::TypeInfo { type_name: descriptor.full_name.clone() });
    emit_type_level(stream, descriptor, registry, heap, session)
}

/// Clones a value by serializing it into a fresh in-memory simplified stream
/// and reading it back. Aliasing among heap objects is preserved.
pub fn clone_value(
    value: &DynValue,
    registry: &mut Registry,
    heap: &mut Heap,
    hooks: &InitHooks,
) -> Result<DynValue, SerialError> {
    if is_primitive_value(value) {
        return Ok(value.clone());
    }
    let mut stream = BufStream::simplified();
    let mut out_session = Session::new();
    serialize(&mut stream, value, "clone", registry, heap, &mut out_session)?;
    let descriptor = match value {
        DynValue::HeapRef(id) if *id != 0 => {
            Some(heap.get(*id).ok_or(ObjectError::DanglingIdentity(*id))?.descriptor.clone())
        }
        DynValue::StackObject(inst) => Some(inst.descriptor.clone()),
        _ => None,
    };
    let mut in_session = Session::new();
    reader::read_simplified_root(&mut stream, descriptor, value, registry, heap, &mut in_session, hooks)
}

pub(crate) fn is_primitive_value(value: &DynValue) -> bool {
    matches!(
        value,
        DynValue::Text(_)
            | DynValue::Integer64(_)
            | DynValue::Unsigned64(_)
            | DynValue::Float64(_)
            | DynValue::Boolean(_)
    )
}

fn declared_is_sealed(declared: Option<&str>, registry: &Registry) -> bool {
    match declared {
        Some(t) => match TypeRef::parse(t) {
            Ok(TypeRef::Named(name)) => registry.get(&name).map(|d| d.is_sealed).unwrap_or(false),
            _ => false,
        },
        None => false,
    }
}

#[allow(clippy::too_many_arguments)]
fn emit_value<S: ExpressiveStream>(
    stream: &mut S,
    value: &DynValue,
    name: &str,
    declared: Option<&str>,
    root: bool,
    registry: &Registry,
    heap: &Heap,
    session: &mut Session,
) -> Result<(), SerialError> {
    let named = stream.config().include_name;
    let item_name = if named { name.to_string() } else { String::new() };
    match value {
        DynValue::Text(text) => {
            stream.append(StreamItem::VString { name: item_name, text: text.clone() });
            Ok(())
        }
        DynValue::Integer64(_) | DynValue::Unsigned64(_) | DynValue::Float64(_) | DynValue::Boolean(_) => {
            let type_name = declared
                .filter(|t| is_primitive_like(t, registry))
                .map(str::to_string)
                .unwrap_or_else(|| canonical_type_name(value).to_string());
            stream.append(StreamItem::Prim { name: item_name, type_name, literal: render_literal(value) });
            Ok(())
        }
        DynValue::Sequence(items) => {
            emit_collection_elements(stream, items, name, "item", None, registry, heap, session)
        }
        DynValue::Keyed(pairs) => {
            emit_keyed_elements(stream, pairs, name, "item", None, None, registry, heap, session)
        }
        DynValue::HeapRef(0) => {
            stream.append(StreamItem::Refer { name: item_name, identity: 0 });
            Ok(())
        }
        DynValue::HeapRef(id) => {
            if session.ref_table.emitted.contains(id) {
                stream.append(StreamItem::Refer { name: item_name, identity: *id });
                return Ok(());
            }
            session.ref_table.emitted.insert(*id);
            emit_record(stream, Marker::Refer(*id), name, declared, root, registry, heap, session)
        }
        DynValue::StackObject(_) => {
            emit_record(stream, Marker::Value(value), name, declared, root, registry, heap, session)
        }
    }
}

enum Marker<'a> {
    Refer(u64),
    Value(&'a DynValue),
}

#[allow(clippy::too_many_arguments)]
fn emit_record<S: ExpressiveStream>(
    stream: &mut S,
    marker: Marker<'_>,
    name: &str,
    declared: Option<&str>,
    root: bool,
    registry: &Registry,
    heap: &Heap,
    session: &mut Session,
) -> Result<(), SerialError> {
    let config = stream.config();
    let named = config.include_name;
    let item_name = if named { name.to_string() } else { String::new() };

    let instance = match &marker {
        Marker::Refer(id) => heap.get(*id).ok_or(ObjectError::DanglingIdentity(*id))?,
        Marker::Value(DynValue::StackObject(inst)) => inst.as_ref(),
        Marker::Value(_) => unreachable!("Marker::Value always wraps a stack object"),
    };
    let descriptor = instance.descriptor.clone();

    // Type binding: always in the complete format; in simplified formats it
    // is omitted only at the root (the receiver supplies the descriptor) and
    // for members whose declared type is sealed.
    let needs_type = config.include_type || !(root || declared_is_sealed(declared, registry));
    if needs_type {
        stream.append(StreamItem::TypeInfo { type_name: descriptor.full_name.clone() });
    }

    if config.include_static && named {
        emit_type_level_once(stream, &descriptor, registry, heap, session)?;
    }

    match marker {
        Marker::Refer(id) => stream.append(StreamItem::Refer { name: item_name, identity: id }),
        Marker::Value(_) => stream.append(StreamItem::Value { name: item_name }),
    }

    // Instance expressive setters.
    for prop in descriptor.expressive_setters() {
        let member_name = encode_binding(SegmentKind::Setter, name, &prop.name);
        let value = instance
            .slots
            .get(&prop.name)
            .cloned()
            .unwrap_or_else(|| default_value(&prop.value_type, prop.default_literal.as_deref(), registry));
        emit_value(stream, &value, &member_name, Some(&prop.value_type), false, registry, heap, session)?;
    }

    // Constructor parameters.
    for param in &descriptor.constructor_params {
        let member_name = encode_binding(SegmentKind::CtorParam, name, &param.getter_name);
        let value = instance
            .slots
            .get(&param.getter_name)
            .cloned()
            .unwrap_or_else(|| default_value(&param.value_type, None, registry));
        emit_value(stream, &value, &member_name, Some(&param.value_type), false, registry, heap, session)?;
    }

    // Collection getter elements.
    for prop in descriptor.expressive_getters() {
        let value = instance
            .slots
            .get(&prop.name)
            .cloned()
            .unwrap_or_else(|| default_value(&prop.value_type, None, registry));
        let type_ref = TypeRef::parse(&prop.value_type)?;
        match (&value, type_ref) {
            (DynValue::Sequence(items), TypeRef::Seq(elem)) => {
                emit_collection_elements(
                    stream,
                    items,
                    name,
                    &prop.name,
                    Some(&elem.to_string()),
                    registry,
                    heap,
                    session,
                )?;
            }
            (DynValue::Keyed(pairs), TypeRef::Map(k, v)) => {
                emit_keyed_elements(
                    stream,
                    pairs,
                    name,
                    &prop.name,
                    Some(&k.to_string()),
                    Some(&v.to_string()),
                    registry,
                    heap,
                    session,
                )?;
            }
            _ => {
                return Err(SerialError::NonExpressiveValue(format!(
                    "{} getter {} holds {}",
                    descriptor.full_name,
                    prop.name,
                    value.kind_name(),
                )))
            }
        }
    }
    Ok(())
}

/// Interfaces and statics, emitted at most once per type per stream session.
fn emit_type_level_once<S: ExpressiveStream>(
    stream: &mut S,
    descriptor: &TypeDescriptor,
    registry: &Registry,
    heap: &Heap,
    session: &mut Session,
) -> Result<(), SerialError> {
    if session.ref_table.types_emitted.contains(&descriptor.full_name) {
        return Ok(());
    }
    session.ref_table.types_emitted.insert(descriptor.full_name.clone());
    emit_type_level(stream, descriptor, registry, heap, session)
}

fn emit_type_level<S: ExpressiveStream>(
    stream: &mut S,
    descriptor: &TypeDescriptor,
    registry: &Registry,
    heap: &Heap,
    session: &mut Session,
) -> Result<(), SerialError> {
    for interface in &descriptor.interfaces {
        stream.append(StreamItem::IntfInfo {
            type_name: descriptor.full_name.clone(),
            interface_name: interface.clone(),
        });
    }
    for prop in &descriptor.statics {
        let owner = descriptor.full_name.as_str();
        let stored = heap.static_value(owner, &prop.name).cloned();
        if prop.is_expressive_setter() {
            let value = stored
                .unwrap_or_else(|| default_value(&prop.value_type, prop.default_literal.as_deref(), registry));
            let member_name = encode_binding(SegmentKind::Setter, owner, &prop.name);
            emit_value(stream, &value, &member_name, Some(&prop.value_type), false, registry, heap, session)?;
        } else if prop.is_expressive_getter() {
            let value = stored.unwrap_or_else(|| default_value(&prop.value_type, None, registry));
            match (&value, TypeRef::parse(&prop.value_type)?) {
                (DynValue::Sequence(items), TypeRef::Seq(elem)) => {
                    emit_collection_elements(
                        stream,
                        items,
                        owner,
                        &prop.name,
                        Some(&elem.to_string()),
                        registry,
                        heap,
                        session,
                    )?;
                }
                (DynValue::Keyed(pairs), TypeRef::Map(k, v)) => {
                    emit_keyed_elements(
                        stream,
                        pairs,
                        owner,
                        &prop.name,
                        Some(&k.to_string()),
                        Some(&v.to_string()),
                        registry,
                        heap,
                        session,
                    )?;
                }
                _ => {}
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn emit_collection_elements<S: ExpressiveStream>(
    stream: &mut S,
    items: &[DynValue],
    owner: &str,
    getter: &str,
    elem_type: Option<&str>,
    registry: &Registry,
    heap: &Heap,
    session: &mut Session,
) -> Result<(), SerialError> {
    if !stream.config().include_name {
        stream.append(StreamItem::Prim {
            name: String::new(),
            type_name: "System.Int32".to_string(),
            literal: items.len().to_string(),
        });
    }
    let member_name = encode_binding(SegmentKind::SeqGetter, owner, getter);
    for item in items {
        emit_value(stream, item, &member_name, elem_type, false, registry, heap, session)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn emit_keyed_elements<S: ExpressiveStream>(
    stream: &mut S,
    pairs: &[(DynValue, DynValue)],
    owner: &str,
    getter: &str,
    key_type: Option<&str>,
    value_type: Option<&str>,
    registry: &Registry,
    heap: &Heap,
    session: &mut Session,
) -> Result<(), SerialError> {
    if !stream.config().include_name {
        stream.append(StreamItem::Prim {
            name: String::new(),
            type_name: "System.Int32".to_string(),
            literal: pairs.len().to_string(),
        });
    }
    let key_name = encode_binding(SegmentKind::KeyedKey, owner, getter);
    let value_name = encode_binding(SegmentKind::KeyedValue, owner, getter);
    for (key, value) in pairs {
        emit_value(stream, key, &key_name, key_type, false, registry, heap, session)?;
        emit_value(stream, value, &value_name, value_type, false, registry, heap, session)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::object_model::{instantiate, TraceEvent};
    use crate::stream_core::StreamConfig;
    use crate::type_model::FIGURE_SCHEMA;

    fn figure_registry() -> Registry {
        let mut reg = Registry::new();
        reg.load_schema(FIGURE_SCHEMA).unwrap();
        reg
    }

    fn figure_instance(reg: &Registry, heap: &mut Heap) -> DynValue {
        let desc = reg.get("UnitTest.MyExpressiveType").unwrap().clone();
        let value = instantiate(&desc, vec![DynValue::Float64(12345.0)], reg, heap).unwrap();
        let DynValue::HeapRef(id) = value else { panic!() };
        let inst = heap.get_mut(id).unwrap();
        inst.slots.insert("MyValue".into(), DynValue::Integer64(6789));
        inst.slots.insert(
            "MyCollection".into(),
            DynValue::Sequence(vec![
                DynValue::Float64(0.123),
                DynValue::Float64(456.7),
                DynValue::Float64(890.0),
            ]),
        );
        value
    }

    #[test]
    fn figure_item_sequence() {
        let reg = figure_registry();
        let mut heap = Heap::new();
        let value = figure_instance(&reg, &mut heap);
        let mut stream = BufStream::complete();
        let mut session = Session::new();
        serialize(&mut stream, &value, "MyExpressiveType", &reg, &heap, &mut session).unwrap();
        let items: Vec<StreamItem> = stream.items().cloned().collect();
        assert_eq!(items[0], StreamItem::TypeInfo { type_name: "UnitTest.MyExpressiveType".into() });
        assert_eq!(
            items[1],
            StreamItem::IntfInfo {
                type_name: "UnitTest.MyExpressiveType".into(),
                interface_name: "UnitTest.MyIntface".into()
            }
        );
        assert!(matches!(&items[2], StreamItem::Refer { name, identity } if name == "MyExpressiveType" && *identity > 0));
        assert_eq!(
            items[3],
            StreamItem::Prim {
                name: "MyExpressiveType.MyValue".into(),
                type_name: "System.Int32".into(),
                literal: "6789".into()
            }
        );
        assert_eq!(
            items[4],
            StreamItem::Prim {
                name: "MyExpressiveType$MyReadonly".into(),
                type_name: "System.Double".into(),
                literal: "12345".into()
            }
        );
        let elems: Vec<&StreamItem> = items[5..].iter().collect();
        assert_eq!(elems.len(), 3);
        for (item, expected) in elems.iter().zip(["0.123", "456.7", "890"]) {
            assert_eq!(
                **item,
                StreamItem::Prim {
                    name: "MyExpressiveType*MyCollection".into(),
                    type_name: "System.Double".into(),
                    literal: expected.into()
                }
            );
        }
    }

    #[test]
    fn root_text_with_type_binding() {
        let reg = Registry::new();
        let heap = Heap::new();
        let mut stream = BufStream::complete();
        let mut session = Session::new();
        serialize(&mut stream, &DynValue::Text("abc".into()), "x", &reg, &heap, &mut session).unwrap();
        let items: Vec<StreamItem> = stream.items().cloned().collect();
        assert_eq!(items[0], StreamItem::TypeInfo { type_name: "System.String".into() });
        assert_eq!(items[1], StreamItem::VString { name: "x".into(), text: "abc".into() });
    }

    #[test]
    fn null_member_is_refer_zero() {
        let mut reg = Registry::new();
        reg.load_schema("type T.Node\n  setter Next: T.Node\n").unwrap();
        let mut heap = Heap::new();
        let desc = reg.get("T.Node").unwrap().clone();
        let value = instantiate(&desc, vec![], &reg, &mut heap).unwrap();
        let mut stream = BufStream::complete();
        let mut session = Session::new();
        serialize(&mut stream, &value, "n", &reg, &heap, &mut session).unwrap();
        assert!(stream.items().any(|i| matches!(i, StreamItem::Refer { name, identity: 0 } if name == "n.Next")));
    }

    #[test]
    fn figure_round_trip_complete() {
        let mut reg = figure_registry();
        let mut heap = Heap::new();
        let value = figure_instance(&reg, &mut heap);
        let mut stream = BufStream::complete();
        let mut session = Session::new();
        serialize(&mut stream, &value, "MyExpressiveType", &reg, &heap, &mut session).unwrap();

        let mut in_session = Session::new();
        let hooks = InitHooks::new();
        let out = deserialize(&mut stream, &mut reg, &mut heap, &mut in_session, &hooks, SynthMode::Disabled)
            .unwrap();
        assert_eq!(out.name, "MyExpressiveType");
        let DynValue::HeapRef(id) = out.value else { panic!() };
        let inst = heap.get(id).unwrap();
        assert_eq!(inst.slots["MyReadonly"], DynValue::Float64(12345.0));
        assert_eq!(inst.slots["MyValue"], DynValue::Integer64(6789));
        assert_eq!(
            inst.slots["MyCollection"],
            DynValue::Sequence(vec![
                DynValue::Float64(0.123),
                DynValue::Float64(456.7),
                DynValue::Float64(890.0)
            ])
        );
        assert!(in_session.warnings.is_empty(), "{:?}", in_session.warnings);
    }

    #[test]
    fn clone_preserves_aliasing() {
        let mut reg = figure_registry();
        let mut heap = Heap::new();
        let value = figure_instance(&reg, &mut heap);
        let hooks = InitHooks::new();
        let cloned = clone_value(&DynValue::Sequence(vec![value.clone(), value.clone()]), &mut reg, &mut heap, &hooks)
            .unwrap();
        let DynValue::Sequence(items) = cloned else { panic!() };
        assert_eq!(items.len(), 2);
        assert_eq!(items[0], items[1], "alias must be preserved");
        assert_ne!(items[0], value, "clone must be a fresh instance");
    }

    #[test]
    fn clone_primitive_is_identity() {
        let mut reg = Registry::new();
        let mut heap = Heap::new();
        let hooks = InitHooks::new();
        let v = clone_value(&DynValue::Integer64(5), &mut reg, &mut heap, &hooks).unwrap();
        assert_eq!(v, DynValue::Integer64(5));
    }

    #[test]
    fn clone_figure_instance_fieldwise() {
        let mut reg = figure_registry();
        let mut heap = Heap::new();
        let value = figure_instance(&reg, &mut heap);
        let hooks = InitHooks::new();
        let cloned = clone_value(&value, &mut reg, &mut heap, &hooks).unwrap();
        let (DynValue::HeapRef(a), DynValue::HeapRef(b)) = (&value, &cloned) else { panic!() };
        assert_ne!(a, b);
        let (ia, ib) = (heap.get(*a).unwrap().clone(), heap.get(*b).unwrap().clone());
        assert_eq!(ia.slots, ib.slots);
    }

    #[test]
    fn emitted_body_appears_once() {
        let mut reg = Registry::new();
        reg.load_schema("type T.Node\n  setter A: T.Node\n  setter B: T.Node\n").unwrap();
        let mut heap = Heap::new();
        let desc = reg.get("T.Node").unwrap().clone();
        let shared = instantiate(&desc, vec![], &reg, &mut heap).unwrap();
        let root = instantiate(&desc, vec![], &reg, &mut heap).unwrap();
        let DynValue::HeapRef(root_id) = root else { panic!() };
        let DynValue::HeapRef(shared_id) = shared else { panic!() };
        {
            let inst = heap.get_mut(root_id).unwrap();
            inst.slots.insert("A".into(), DynValue::HeapRef(shared_id));
            inst.slots.insert("B".into(), DynValue::HeapRef(shared_id));
        }
        let mut stream = BufStream::complete();
        let mut session = Session::new();
        serialize(&mut stream, &DynValue::HeapRef(root_id), "r", &reg, &heap, &mut session).unwrap();
        let refers: Vec<&StreamItem> =
            stream.items().filter(|i| matches!(i, StreamItem::Refer { identity, .. } if *identity == shared_id)).collect();
        assert_eq!(refers.len(), 2, "one body reference and one alias");
        // the body (members) of the shared node appears only under the first path
        let body_members =
            stream.items().filter(|i| i.name().map(|n| n.starts_with("r.A.")).unwrap_or(false)).count();
        let alias_members =
            stream.items().filter(|i| i.name().map(|n| n.starts_with("r.B.")).unwrap_or(false)).count();
        assert!(body_members > 0);
        assert_eq!(alias_members, 0);
    }

    #[test]
    fn cycle_round_trips() {
        let mut reg = Registry::new();
        reg.load_schema("type T.Node\n  setter Next: T.Node\n").unwrap();
        let mut heap = Heap::new();
        let desc = reg.get("T.Node").unwrap().clone();
        let a = instantiate(&desc, vec![], &reg, &mut heap).unwrap();
        let b = instantiate(&desc, vec![], &reg, &mut heap).unwrap();
        let (DynValue::HeapRef(ida), DynValue::HeapRef(idb)) = (&a, &b) else { panic!() };
        heap.get_mut(*ida).unwrap().slots.insert("Next".into(), DynValue::HeapRef(*idb));
        heap.get_mut(*idb).unwrap().slots.insert("Next".into(), DynValue::HeapRef(*ida));

        let hooks = InitHooks::new();
        let cloned = clone_value(&a, &mut reg, &mut heap, &hooks).unwrap();
        let DynValue::HeapRef(ca) = cloned else { panic!() };
        let DynValue::HeapRef(cb) = heap.get(ca).unwrap().slots["Next"] else { panic!() };
        let DynValue::HeapRef(back) = heap.get(cb).unwrap().slots["Next"] else { panic!() };
        assert_eq!(back, ca, "cycle must close on the clone");
        assert_ne!(ca, *ida);
    }

    #[test]
    fn serialize_static_emits_type_level_only() {
        let mut reg = Registry::new();
        reg.load_schema("type T.Conf\n  static setter S: System.Int32\n").unwrap();
        let mut heap = Heap::new();
        heap.set_static("T.Conf", "S", DynValue::Integer64(7));
        let mut stream = BufStream::complete();
        let mut session = Session::new();
        let desc = reg.get("T.Conf").unwrap().clone();
        serialize_static(&mut stream, &desc, &reg, &heap, &mut session).unwrap();
        let items: Vec<StreamItem> = stream.items().cloned().collect();
        assert_eq!(items.len(), 2);
        assert_eq!(items[0], StreamItem::TypeInfo { type_name: "T.Conf".into() });
        assert_eq!(
            items[1],
            StreamItem::Prim { name: "T.Conf.S".into(), type_name: "System.Int32".into(), literal: "7".into() }
        );
    }

    #[test]
    fn deserialize_static_applies_once() {
        let mut reg = Registry::new();
        reg.load_schema("type T.Conf\n  static setter S: System.Int32\n").unwrap();
        let mut heap = Heap::new();
        let mut stream = BufStream::complete();
        // the stream repeats the type twice
        for _ in 0..2 {
            stream.append(StreamItem::TypeInfo { type_name: "T.Conf".into() });
            stream.append(StreamItem::Prim {
                name: "T.Conf.S".into(),
                type_name: "System.Int32".into(),
                literal: "7".into(),
            });
        }
        let mut session = Session::new();
        deserialize_static(&mut stream, &reg, &mut heap, &mut session).unwrap();
        assert_eq!(heap.static_value("T.Conf", "S"), Some(&DynValue::Integer64(7)));
    }

    #[test]
    fn static_type_with_no_statics_emits_type_info_only() {
        let mut reg = Registry::new();
        reg.load_schema("type T.Plain\n  setter X: System.Int32\n").unwrap();
        let heap = Heap::new();
        let mut stream = BufStream::complete();
        let mut session = Session::new();
        let desc = reg.get("T.Plain").unwrap().clone();
        serialize_static(&mut stream, &desc, &reg, &heap, &mut session).unwrap();
        assert_eq!(stream.len(), 1);
    }

    #[test]
    fn missing_member_uses_default() {
        let mut reg = figure_registry();
        let mut heap = Heap::new();
        let mut stream = BufStream::complete();
        // a record that only carries the ctor parameter; MyValue falls back
        // to its declared default of 0
        stream.append(StreamItem::TypeInfo { type_name: "UnitTest.MyExpressiveType".into() });
        stream.append(StreamItem::IntfInfo {
            type_name: "UnitTest.MyExpressiveType".into(),
            interface_name: "UnitTest.MyIntface".into(),
        });
        stream.append(StreamItem::Refer { name: "x".into(), identity: 41 });
        stream.append(StreamItem::Prim {
            name: "x$MyReadonly".into(),
            type_name: "System.Double".into(),
            literal: "1.5".into(),
        });
        let mut session = Session::new();
        let hooks = InitHooks::new();
        let out =
            deserialize(&mut stream, &mut reg, &mut heap, &mut session, &hooks, SynthMode::Disabled).unwrap();
        let DynValue::HeapRef(id) = out.value else { panic!() };
        assert_eq!(heap.get(id).unwrap().slots["MyValue"], DynValue::Integer64(0));
    }

    #[test]
    fn interface_set_mismatch_detected() {
        let mut reg = Registry::new();
        reg.load_schema("type T.Plain\n  setter X: System.Int32\n").unwrap();
        let mut heap = Heap::new();
        let mut stream = BufStream::complete();
        stream.append(StreamItem::TypeInfo { type_name: "T.Plain".into() });
        stream.append(StreamItem::IntfInfo { type_name: "T.Plain".into(), interface_name: "T.IFace".into() });
        stream.append(StreamItem::Refer { name: "x".into(), identity: 9 });
        let mut session = Session::new();
        let hooks = InitHooks::new();
        let err =
            deserialize(&mut stream, &mut reg, &mut heap, &mut session, &hooks, SynthMode::Disabled).unwrap_err();
        assert!(matches!(err, SerialError::InterfaceSetMismatch { .. }));
    }

    #[test]
    fn unknown_type_without_synthesis_is_error() {
        let mut reg = Registry::new();
        let mut heap = Heap::new();
        let mut stream = BufStream::complete();
        stream.append(StreamItem::TypeInfo { type_name: "T.Mystery".into() });
        stream.append(StreamItem::Refer { name: "x".into(), identity: 1 });
        let mut session = Session::new();
        let hooks = InitHooks::new();
        let err =
            deserialize(&mut stream, &mut reg, &mut heap, &mut session, &hooks, SynthMode::Disabled).unwrap_err();
        assert!(matches!(err, SerialError::UnknownType(t) if t == "T.Mystery"));
    }

    #[test]
    fn synthesis_reconstructs_unknown_type() {
        let reg = figure_registry();
        let mut heap = Heap::new();
        let value = figure_instance(&reg, &mut heap);
        let mut stream = BufStream::complete();
        let mut session = Session::new();
        serialize(&mut stream, &value, "MyExpressiveType", &reg, &heap, &mut session).unwrap();

        // read the same stream against an empty registry
        let mut fresh_reg = Registry::new();
        let mut fresh_heap = Heap::new();
        let mut in_session = Session::new();
        let hooks = InitHooks::new();
        let out = deserialize(&mut stream, &mut fresh_reg, &mut fresh_heap, &mut in_session, &hooks, SynthMode::Enabled)
            .unwrap();
        let DynValue::HeapRef(id) = out.value else { panic!() };
        let inst = fresh_heap.get(id).unwrap();
        assert_eq!(inst.slots["MyReadonly"], DynValue::Float64(12345.0));
        assert_eq!(inst.slots["MyValue"], DynValue::Integer64(6789));
        assert!(fresh_reg.get("UnitTest.MyExpressiveType").unwrap().provisional);
    }

    #[test]
    fn clear_session_isolates_streams() {
        let reg = figure_registry();
        let mut heap = Heap::new();
        let value = figure_instance(&reg, &mut heap);
        let mut session = Session::new();

        let mut first = BufStream::complete();
        serialize(&mut first, &value, "a", &reg, &heap, &mut session).unwrap();
        // without clearing, the second stream only aliases
        let mut second = BufStream::complete();
        serialize(&mut second, &value, "b", &reg, &heap, &mut session).unwrap();
        assert!(second.len() < first.len());
        assert!(second.items().all(|i| matches!(i, StreamItem::Refer { .. })));

        // clearing restores the full body
        clear_session(&mut session.ref_table);
        let mut third = BufStream::complete();
        serialize(&mut third, &value, "c", &reg, &heap, &mut session).unwrap();
        assert_eq!(third.len(), first.len());
    }

    #[test]
    fn trace_records_construction_order() {
        let mut reg = figure_registry();
        let mut heap = Heap::new();
        let value = figure_instance(&reg, &mut heap);
        let mut stream = BufStream::complete();
        let mut session = Session::new();
        serialize(&mut stream, &value, "x", &reg, &heap, &mut session).unwrap();

        let mut in_heap = Heap::new();
        in_heap.enable_trace();
        let mut in_session = Session::new();
        let hooks = InitHooks::new();
        deserialize(&mut stream, &mut reg, &mut in_heap, &mut in_session, &hooks, SynthMode::Disabled).unwrap();
        let kinds: Vec<&'static str> = in_heap
            .trace()
            .iter()
            .map(|e| match e {
                TraceEvent::Ctor { .. } => "ctor",
                TraceEvent::Setter { pass: 1, .. } => "set1",
                TraceEvent::Setter { .. } => "set2",
                TraceEvent::Init { .. } => "init",
                TraceEvent::Getter { .. } => "getter",
            })
            .collect();
        assert_eq!(kinds, vec!["ctor", "set1", "init", "init", "set2", "getter"]);
    }

    #[test]
    fn simplified_stream_skips_type_and_name_binding() {
        let mut reg = figure_registry();
        let mut heap = Heap::new();
        let value = figure_instance(&reg, &mut heap);
        let mut stream = BufStream::simplified();
        let mut session = Session::new();
        serialize(&mut stream, &value, "x", &reg, &heap, &mut session).unwrap();
        assert!(stream.items().all(|i| !matches!(i, StreamItem::TypeInfo { .. } | StreamItem::IntfInfo { .. })));
        assert!(stream.items().all(|i| i.name().map(str::is_empty).unwrap_or(true)));

        let desc = reg.get("UnitTest.MyExpressiveType").unwrap().clone();
        let mut in_session = Session::new();
        let hooks = InitHooks::new();
        let out = deserialize_with(&mut stream, &desc, &mut reg, &mut heap, &mut in_session, &hooks).unwrap();
        let DynValue::HeapRef(id) = out.value else { panic!() };
        assert_eq!(heap.get(id).unwrap().slots["MyValue"], DynValue::Integer64(6789));
    }

    #[test]
    fn intf_and_static_items_once_per_stream() {
        let mut reg = Registry::new();
        reg.load_schema("type T.Conf implements T.I\n  setter X: System.Int32\n  static setter S: System.Int32\n")
            .unwrap();
        let mut heap = Heap::new();
        let desc = reg.get("T.Conf").unwrap().clone();
        let a = instantiate(&desc, vec![], &reg, &mut heap).unwrap();
        let b = instantiate(&desc, vec![], &reg, &mut heap).unwrap();
        let mut stream = BufStream::complete();
        let mut session = Session::new();
        serialize(&mut stream, &DynValue::Sequence(vec![a, b]), "pair", &reg, &heap, &mut session).unwrap();
        let intf_count = stream.items().filter(|i| matches!(i, StreamItem::IntfInfo { .. })).count();
        let static_count = stream.items().filter(|i| i.name() == Some("T.Conf.S")).count();
        assert_eq!(intf_count, 1);
        assert_eq!(static_count, 1);
    }
}
