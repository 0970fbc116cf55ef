//! Stream reconstruction.
//!
//! Reading retrieves the complete data set of each instance from the stream,
//! tolerating reordered members within a record, then rebuilds the instance
//! in a fixed order: constructor, setters, init methods in ascending
//! sequence, setters again, getter population. References resolve through
//! the session table so aliases reconnect, and the first occurrence of an
//! identity is the one that carries the full body.

use std::sync::Arc;

use indexmap::{IndexMap, IndexSet};

use crate::object_model::{
    apply_ctor_args, blank_instance, default_value, parse_literal, DynValue, Heap, InitHooks, Instance,
    ObjectError, TraceEvent,
};
use crate::stream_core::{ExpressiveStream, StreamItem};
use crate::type_model::{is_primitive_like, Registry, TypeDescriptor, TypeRef, STRING_TYPE};
use crate::typesynth::{ObservedMember, SynthRecord};

use super::binding::{SegmentKind, DELIMITERS};
use super::{SerialError, Session};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthMode {
    Disabled,
    Enabled,
}

/// Result of reading one root value.
#[derive(Debug)]
pub struct Deserialized {
    pub value: DynValue,
    pub descriptor: Option<Arc<TypeDescriptor>>,
    pub type_name: String,
    pub name: String,
}

fn name_extends(name: &str, base: &str) -> bool {
    name.len() > base.len() && name.starts_with(base) && name[base.len()..].starts_with(DELIMITERS)
}

fn split_relative<'a>(name: &'a str, base: &str) -> Option<(SegmentKind, &'a str)> {
    let rest = &name[base.len()..];
    let delim = rest.chars().next()?;
    let kind = SegmentKind::from_delimiter(delim)?;
    let ident = &rest[delim.len_utf8()..];
    if ident.is_empty() || ident.contains(DELIMITERS) {
        return None;
    }
    Some((kind, ident))
}

enum CtxTarget {
    /// Placeholder already lives in the heap.
    Heap(u64),
    /// Stack instance under construction.
    Stack(Box<Instance>),
    /// Unknown type: identity reserved, instance installed after synthesis.
    SynthHeap { local: u64 },
    SynthStack,
}

struct OpenContext {
    name: String,
    type_name: String,
    descriptor: Option<Arc<TypeDescriptor>>,
    target: CtxTarget,
    members: Vec<(SegmentKind, String, DynValue)>,
    synth: SynthRecord,
}

#[derive(Default)]
struct RootAcc {
    seq: Vec<DynValue>,
    keys: Vec<DynValue>,
    values: Vec<DynValue>,
}

struct Machine<'a> {
    registry: &'a mut Registry,
    heap: &'a mut Heap,
    session: &'a mut Session,
    hooks: &'a InitHooks,
    synth: SynthMode,
    include_static: bool,
    contexts: Vec<OpenContext>,
    claims: IndexMap<String, IndexSet<String>>,
    /// Pending type bindings, deepest last. Every record body is immediately
    /// preceded by its own TypeInfo, so a record-open pops the top; items
    /// that interpose (interface claims, static scalars) leave it alone.
    pending_types: Vec<String>,
    roots: Vec<Deserialized>,
    root_acc: IndexMap<String, RootAcc>,
    getter_statics_touched: IndexSet<(String, String)>,
}

/// Reads every item of a name-bound stream and returns the first root value.
/// Unknown types are synthesized and registered when synthesis is enabled.
pub fn deserialize<S: ExpressiveStream>(
    stream: &mut S,
    registry: &mut Registry,
    heap: &mut Heap,
    session: &mut Session,
    hooks: &InitHooks,
    synth: SynthMode,
) -> Result<Deserialized, SerialError> {
    if !stream.config().include_name {
        return Err(SerialError::MalformedStream(
            "stream carries no name binding; supply the descriptor through deserialize_with".to_string(),
        ));
    }
    let mut machine = Machine {
        registry,
        heap,
        session,
        hooks,
        synth,
        include_static: stream.config().include_static,
        contexts: Vec::new(),
        claims: IndexMap::new(),
        pending_types: Vec::new(),
        roots: Vec::new(),
        root_acc: IndexMap::new(),
        getter_statics_touched: IndexSet::new(),
    };
    while stream.has_next() {
        let item = stream.next()?;
        machine.feed(item)?;
    }
    machine.finish()
}

/// Reads a descriptor-known stream. Name-bound streams go through the
/// ordinary reader; positional streams are read in declaration order.
pub fn deserialize_with<S: ExpressiveStream>(
    stream: &mut S,
    descriptor: &Arc<TypeDescriptor>,
    registry: &mut Registry,
    heap: &mut Heap,
    session: &mut Session,
    hooks: &InitHooks,
) -> Result<Deserialized, SerialError> {
    if stream.config().include_name {
        return deserialize(stream, registry, heap, session, hooks, SynthMode::Disabled);
    }
    let value = read_positional_value(stream, Some(&descriptor.full_name), registry, heap, session, hooks)?;
    Ok(Deserialized {
        value,
        descriptor: Some(Arc::clone(descriptor)),
        type_name: descriptor.full_name.clone(),
        name: String::new(),
    })
}

/// Applies only the type-level items of a stream: interface claims are
/// verified and static properties populated, each at most once per session.
pub fn deserialize_static<S: ExpressiveStream>(
    stream: &mut S,
    registry: &Registry,
    heap: &mut Heap,
    session: &mut Session,
) -> Result<(), SerialError> {
    let mut claims: IndexMap<String, IndexSet<String>> = IndexMap::new();
    let mut getter_touched: IndexSet<(String, String)> = IndexSet::new();
    while stream.has_next() {
        let item = stream.next()?;
        match item {
            StreamItem::TypeInfo { type_name } => {
                if registry.get(&type_name).is_none() {
                    return Err(SerialError::UnknownType(type_name));
                }
            }
            StreamItem::IntfInfo { type_name, interface_name } => {
                claims.entry(type_name).or_default().insert(interface_name);
            }
            StreamItem::Prim { ref name, .. } | StreamItem::VString { ref name, .. } => {
                let Some((desc, kind, prop)) = classify_static(name, registry) else {
                    return Err(SerialError::MalformedStream(format!(
                        "instance item {name} in a static-only stream"
                    )));
                };
                let value = scalar_value(&item, registry)?;
                apply_static(desc, kind, &prop, value, heap, session, &mut getter_touched)?;
            }
            other => {
                return Err(SerialError::MalformedStream(format!(
                    "unexpected item in a static-only stream: {other:?}"
                )))
            }
        }
    }
    for (type_name, set) in claims {
        if session.ref_table.intf_checked.contains(&type_name) {
            continue;
        }
        if let Some(desc) = registry.get(&type_name) {
            check_interfaces(&type_name, &set, desc)?;
        }
        session.ref_table.intf_checked.insert(type_name);
    }
    for key in getter_touched {
        session.ref_table.statics_applied.insert(key);
    }
    Ok(())
}

fn check_interfaces(
    type_name: &str,
    claimed: &IndexSet<String>,
    descriptor: &TypeDescriptor,
) -> Result<(), SerialError> {
    let declared: IndexSet<String> = descriptor.interfaces.iter().cloned().collect();
    if claimed != &declared {
        return Err(SerialError::InterfaceSetMismatch {
            type_name: type_name.to_string(),
            stream_set: claimed.iter().cloned().collect(),
            registry_set: declared.iter().cloned().collect(),
        });
    }
    Ok(())
}

fn scalar_value(item: &StreamItem, registry: &Registry) -> Result<DynValue, SerialError> {
    match item {
        StreamItem::VString { text, .. } => Ok(DynValue::Text(text.clone())),
        StreamItem::Prim { type_name, literal, .. } => Ok(parse_literal(type_name, literal, registry)?),
        _ => Err(SerialError::MalformedStream("expected a primitive item".to_string())),
    }
}

fn classify_static(
    name: &str,
    registry: &Registry,
) -> Option<(Arc<TypeDescriptor>, SegmentKind, String)> {
    let (desc, rest) = registry.resolve_prefix(name)?;
    if rest.is_empty() {
        return None;
    }
    let (kind, ident) = split_relative(name, &name[..name.len() - rest.len()])?;
    if desc.static_prop(ident).is_none() {
        return None;
    }
    Some((Arc::clone(desc), kind, ident.to_string()))
}

fn apply_static(
    desc: Arc<TypeDescriptor>,
    kind: SegmentKind,
    prop: &str,
    value: DynValue,
    heap: &mut Heap,
    session: &mut Session,
    getter_touched: &mut IndexSet<(String, String)>,
) -> Result<(), SerialError> {
    let key = (desc.full_name.clone(), prop.to_string());
    match kind {
        SegmentKind::Setter => {
            if session.ref_table.statics_applied.contains(&key) {
                return Ok(());
            }
            session.ref_table.statics_applied.insert(key);
            heap.set_static(&desc.full_name, prop, value);
        }
        SegmentKind::SeqGetter => {
            if session.ref_table.statics_applied.contains(&key) {
                return Ok(());
            }
            let fresh = getter_touched.insert(key);
            let mut current = if fresh {
                DynValue::Sequence(Vec::new())
            } else {
                heap.static_value(&desc.full_name, prop).cloned().unwrap_or(DynValue::Sequence(Vec::new()))
            };
            if let DynValue::Sequence(items) = &mut current {
                items.push(value);
            }
            heap.set_static(&desc.full_name, prop, current);
        }
        SegmentKind::KeyedKey | SegmentKind::KeyedValue => {
            if session.ref_table.statics_applied.contains(&key) {
                return Ok(());
            }
            let fresh = getter_touched.insert(key);
            let mut current = if fresh {
                DynValue::Keyed(Vec::new())
            } else {
                heap.static_value(&desc.full_name, prop).cloned().unwrap_or(DynValue::Keyed(Vec::new()))
            };
            if let DynValue::Keyed(pairs) = &mut current {
                if kind == SegmentKind::KeyedKey {
                    pairs.push((value, DynValue::null()));
                } else if let Some(last) = pairs.last_mut() {
                    last.1 = value;
                }
            }
            heap.set_static(&desc.full_name, prop, current);
        }
        _ => {
            session.warnings.push(format!("static member {prop} of {} has an unexpected binding", desc.full_name));
        }
    }
    Ok(())
}

impl Machine<'_> {
    fn feed(&mut self, item: StreamItem) -> Result<(), SerialError> {
        match item {
            StreamItem::TypeInfo { type_name } => {
                self.pending_types.push(type_name);
                Ok(())
            }
            StreamItem::IntfInfo { type_name, interface_name } => {
                self.claims.entry(type_name).or_default().insert(interface_name);
                Ok(())
            }
            named => self.feed_named(named),
        }
    }

    fn feed_named(&mut self, item: StreamItem) -> Result<(), SerialError> {
        let name = item.name().unwrap_or("").to_string();
        if name.is_empty() {
            return Err(SerialError::MalformedStream("name binding missing on a stream item".to_string()));
        }

        // Scalar static items are globally scoped and never pop open records.
        if let Some((desc, kind, prop)) = classify_static(&name, self.registry) {
            let value = match &item {
                StreamItem::VString { .. } | StreamItem::Prim { .. } => Some(scalar_value(&item, self.registry)?),
                StreamItem::Refer { identity: 0, .. } => Some(DynValue::null()),
                StreamItem::Refer { identity, .. } => {
                    self.session.ref_table.resolved.get(identity).map(|local| DynValue::HeapRef(*local))
                }
                _ => None,
            };
            if let Some(value) = value {
                let mut touched = std::mem::take(&mut self.getter_statics_touched);
                apply_static(desc, kind, &prop, value, self.heap, self.session, &mut touched)?;
                self.getter_statics_touched = touched;
                return Ok(());
            }
            // An object-valued static opens a record below; its value lands
            // in the static store when the record closes through bind.
            return self.open_record(item, name, false);
        }

        self.open_record(item, name, true)
    }

    fn open_record(&mut self, item: StreamItem, name: String, allow_pop: bool) -> Result<(), SerialError> {
        // Close every open record the name does not extend.
        if allow_pop {
            while let Some(top) = self.contexts.last() {
                if name_extends(&name, &top.name) {
                    break;
                }
                self.pop_context()?;
            }
        }

        match item {
            StreamItem::Refer { identity: 0, .. } => self.bind(&name, DynValue::null(), None),
            StreamItem::Refer { identity, .. } => {
                if let Some(local) = self.session.ref_table.resolved.get(&identity).copied() {
                    let observed = self.heap.get(local).map(|i| i.descriptor.full_name.clone());
                    return self.bind(&name, DynValue::HeapRef(local), observed);
                }
                let type_name = self.pending_types.pop().ok_or_else(|| {
                    SerialError::MalformedStream(format!("reference {identity} introduced without type binding"))
                })?;
                let (descriptor, target) = match self.registry.get(&type_name) {
                    Some(desc) => {
                        let desc = Arc::clone(desc);
                        let local = self.heap.allocate(&desc, self.registry);
                        self.session.ref_table.resolved.insert(identity, local);
                        (Some(desc), CtxTarget::Heap(local))
                    }
                    None if self.synth == SynthMode::Enabled => {
                        let local = self.heap.reserve_identity();
                        self.session.ref_table.resolved.insert(identity, local);
                        (None, CtxTarget::SynthHeap { local })
                    }
                    None => return Err(SerialError::UnknownType(type_name)),
                };
                self.contexts.push(OpenContext {
                    synth: SynthRecord::new(&type_name),
                    name,
                    type_name,
                    descriptor,
                    target,
                    members: Vec::new(),
                });
                Ok(())
            }
            StreamItem::Value { .. } => {
                let type_name = self.pending_types.pop().ok_or_else(|| {
                    SerialError::MalformedStream("stack object introduced without type binding".to_string())
                })?;
                let (descriptor, target) = match self.registry.get(&type_name) {
                    Some(desc) => {
                        let desc = Arc::clone(desc);
                        let instance = blank_instance(&desc, self.registry, None);
                        (Some(desc), CtxTarget::Stack(Box::new(instance)))
                    }
                    None if self.synth == SynthMode::Enabled => (None, CtxTarget::SynthStack),
                    None => return Err(SerialError::UnknownType(type_name)),
                };
                let mut synth = SynthRecord::new(&type_name);
                synth.is_value_kind = true;
                self.contexts.push(OpenContext {
                    synth,
                    name,
                    type_name,
                    descriptor,
                    target,
                    members: Vec::new(),
                });
                Ok(())
            }
            StreamItem::VString { text, .. } => self.bind(&name, DynValue::Text(text), Some(STRING_TYPE.to_string())),
            StreamItem::Prim { type_name, literal, .. } => {
                let value = parse_literal(&type_name, &literal, self.registry)?;
                self.bind(&name, value, Some(type_name))
            }
            StreamItem::TypeInfo { .. } | StreamItem::IntfInfo { .. } => unreachable!(),
        }
    }

    /// Delivers a finished value under its binding name: to the deepest open
    /// record, to the static store, to a root accumulator, or to the roots.
    fn bind(&mut self, name: &str, value: DynValue, observed_type: Option<String>) -> Result<(), SerialError> {
        if let Some(top) = self.contexts.last_mut() {
            if name_extends(name, &top.name) {
                match split_relative(name, &top.name) {
                    Some((kind, ident)) => {
                        top.synth.observe(ObservedMember {
                            kind,
                            name: ident.to_string(),
                            type_name: observed_type,
                        })?;
                        top.members.push((kind, ident.to_string(), value));
                    }
                    None => self
                        .session
                        .warnings
                        .push(format!("member {name} does not bind a direct member of {}", top.name)),
                }
                return Ok(());
            }
        }
        if let Some((desc, kind, prop)) = classify_static(name, self.registry) {
            let mut touched = std::mem::take(&mut self.getter_statics_touched);
            let result = apply_static(desc, kind, &prop, value, self.heap, self.session, &mut touched);
            self.getter_statics_touched = touched;
            return result;
        }
        if !name.contains(DELIMITERS) {
            let type_name = observed_type.unwrap_or_default();
            let descriptor = match &value {
                DynValue::HeapRef(id) if *id != 0 => self.heap.get(*id).map(|i| i.descriptor.clone()),
                DynValue::StackObject(inst) => Some(inst.descriptor.clone()),
                _ => None,
            };
            self.roots.push(Deserialized { value, descriptor, type_name, name: name.to_string() });
            return Ok(());
        }
        // a root-level collection element: `<root><delim>item`
        if let Some(pos) = name.find(DELIMITERS) {
            let (root, _) = name.split_at(pos);
            if !root.contains(DELIMITERS) {
                if let Some((kind, "item")) = split_relative(name, root) {
                    let acc = self.root_acc.entry(root.to_string()).or_default();
                    match kind {
                        SegmentKind::SeqGetter => acc.seq.push(value),
                        SegmentKind::KeyedKey => acc.keys.push(value),
                        SegmentKind::KeyedValue => acc.values.push(value),
                        _ => self.session.warnings.push(format!("unmatched stream member {name}")),
                    }
                    return Ok(());
                }
            }
        }
        // A heap record delivered out of place still lives in the heap and
        // reconnects through its identity; anything else is dropped loudly.
        if !matches!(value, DynValue::HeapRef(_)) {
            self.session.warnings.push(format!("unmatched stream member {name}"));
        }
        Ok(())
    }

    fn pop_context(&mut self) -> Result<(), SerialError> {
        let ctx = self.contexts.pop().expect("pop on empty context stack");
        let OpenContext { name, type_name, descriptor, target, members, synth } = ctx;

        let (descriptor, target) = match (descriptor, target) {
            (Some(desc), t) => (desc, t),
            (None, t) => {
                let mut record = synth;
                if let Some(claimed) = self.claims.get(&type_name) {
                    for interface in claimed {
                        record.add_interface(interface);
                    }
                }
                let desc = self.registry.register_synthesized(record.into_descriptor()?)?;
                let t = match t {
                    CtxTarget::SynthHeap { local } => {
                        let instance = blank_instance(&desc, self.registry, Some(local));
                        self.heap.install(local, instance);
                        CtxTarget::Heap(local)
                    }
                    CtxTarget::SynthStack => {
                        CtxTarget::Stack(Box::new(blank_instance(&desc, self.registry, None)))
                    }
                    other => other,
                };
                (desc, t)
            }
        };

        if self.include_static && !self.session.ref_table.intf_checked.contains(&type_name) {
            let claimed = self.claims.get(&type_name).cloned().unwrap_or_default();
            check_interfaces(&type_name, &claimed, &descriptor)?;
            self.session.ref_table.intf_checked.insert(type_name.clone());
        }

        let gathered = gather_members(&descriptor, members, self.registry, &mut self.session.warnings)?;
        let value = construct(target, &descriptor, gathered, &name, self.registry, self.heap, self.hooks)?;
        self.bind(&name, value, Some(type_name))
    }

    fn finish(mut self) -> Result<Deserialized, SerialError> {
        while !self.contexts.is_empty() {
            self.pop_context()?;
        }
        for key in std::mem::take(&mut self.getter_statics_touched) {
            self.session.ref_table.statics_applied.insert(key);
        }
        for (root, acc) in std::mem::take(&mut self.root_acc) {
            let value = if acc.keys.is_empty() {
                DynValue::Sequence(acc.seq)
            } else {
                if acc.keys.len() != acc.values.len() {
                    return Err(SerialError::MalformedStream(format!(
                        "keyed root {root} has {} keys and {} values",
                        acc.keys.len(),
                        acc.values.len()
                    )));
                }
                DynValue::Keyed(acc.keys.into_iter().zip(acc.values).collect())
            };
            self.roots.push(Deserialized { value, descriptor: None, type_name: String::new(), name: root });
        }
        if self.roots.is_empty() {
            return Err(SerialError::MalformedStream("stream holds no root value".to_string()));
        }
        Ok(self.roots.remove(0))
    }
}

struct Gathered {
    ctor_args: Vec<DynValue>,
    setters: Vec<(String, Option<DynValue>)>,
    getters: Vec<(String, DynValue)>,
}

fn gather_members(
    descriptor: &Arc<TypeDescriptor>,
    members: Vec<(SegmentKind, String, DynValue)>,
    registry: &Registry,
    warnings: &mut Vec<String>,
) -> Result<Gathered, SerialError> {
    let mut by_key: IndexMap<(u8, String), Vec<DynValue>> = IndexMap::new();
    for (kind, ident, value) in members {
        let tag = match kind {
            SegmentKind::Setter => 0u8,
            SegmentKind::CtorParam => 1,
            SegmentKind::SeqGetter => 2,
            SegmentKind::KeyedKey => 3,
            SegmentKind::KeyedValue => 4,
            _ => {
                warnings.push(format!("unexpected binding {ident} on {}", descriptor.full_name));
                continue;
            }
        };
        by_key.entry((tag, ident)).or_default().push(value);
    }

    let mut take_first = |tag: u8, name: &str| -> Option<DynValue> {
        by_key.get_mut(&(tag, name.to_string())).and_then(|v| if v.is_empty() { None } else { Some(v.remove(0)) })
    };

    let mut ctor_args = Vec::new();
    for param in &descriptor.constructor_params {
        let value = take_first(1, &param.getter_name)
            .unwrap_or_else(|| default_value(&param.value_type, None, registry));
        ctor_args.push(value);
    }
    let mut setters = Vec::new();
    for prop in descriptor.expressive_setters() {
        setters.push((prop.name.clone(), take_first(0, &prop.name)));
    }
    let mut getters = Vec::new();
    for prop in descriptor.expressive_getters() {
        match prop.collection_kind {
            crate::type_model::CollectionKind::Sequence => {
                let items = by_key.shift_remove(&(2, prop.name.clone())).unwrap_or_default();
                getters.push((prop.name.clone(), DynValue::Sequence(items)));
            }
            crate::type_model::CollectionKind::Keyed => {
                let keys = by_key.shift_remove(&(3, prop.name.clone())).unwrap_or_default();
                let values = by_key.shift_remove(&(4, prop.name.clone())).unwrap_or_default();
                if keys.len() != values.len() {
                    return Err(SerialError::MalformedStream(format!(
                        "keyed getter {} has {} keys and {} values",
                        prop.name,
                        keys.len(),
                        values.len()
                    )));
                }
                getters.push((prop.name.clone(), DynValue::Keyed(keys.into_iter().zip(values).collect())));
            }
            crate::type_model::CollectionKind::None => {}
        }
    }
    for ((_, ident), values) in by_key {
        if !values.is_empty() {
            warnings.push(format!("unmatched stream member {ident} on {}", descriptor.full_name));
        }
    }
    Ok(Gathered { ctor_args, setters, getters })
}

/// Runs the construction sequence over a gathered record.
fn construct(
    target: CtxTarget,
    descriptor: &Arc<TypeDescriptor>,
    gathered: Gathered,
    label: &str,
    registry: &Registry,
    heap: &mut Heap,
    hooks: &InitHooks,
) -> Result<DynValue, SerialError> {
    match target {
        CtxTarget::Heap(id) => {
            construct_in_heap(id, descriptor, gathered, label, heap, hooks)?;
            Ok(DynValue::HeapRef(id))
        }
        CtxTarget::Stack(mut instance) => {
            construct_in_place(&mut instance, descriptor, gathered, label, heap, hooks)?;
            Ok(DynValue::StackObject(instance))
        }
        CtxTarget::SynthHeap { local } => {
            let instance = blank_instance(descriptor, registry, Some(local));
            heap.install(local, instance);
            construct_in_heap(local, descriptor, gathered, label, heap, hooks)?;
            Ok(DynValue::HeapRef(local))
        }
        CtxTarget::SynthStack => {
            let mut instance = Box::new(blank_instance(descriptor, registry, None));
            construct_in_place(&mut instance, descriptor, gathered, label, heap, hooks)?;
            Ok(DynValue::StackObject(instance))
        }
    }
}

fn construct_in_heap(
    id: u64,
    descriptor: &Arc<TypeDescriptor>,
    gathered: Gathered,
    label: &str,
    heap: &mut Heap,
    hooks: &InitHooks,
) -> Result<(), SerialError> {
    let Gathered { ctor_args, setters, getters } = gathered;
    {
        let instance = heap.get_mut(id).ok_or(ObjectError::DanglingIdentity(id))?;
        apply_ctor_args(instance, ctor_args);
    }
    heap.record(TraceEvent::Ctor { type_name: descriptor.full_name.clone(), instance: label.to_string() });

    for pass in [1u8, 2] {
        if pass == 2 {
            run_inits_traced(id, descriptor, label, heap, hooks)?;
        }
        for (name, value) in &setters {
            if let Some(value) = value {
                let instance = heap.get_mut(id).ok_or(ObjectError::DanglingIdentity(id))?;
                instance.slots.insert(name.clone(), value.clone());
            }
            heap.record(TraceEvent::Setter { instance: label.to_string(), property: name.clone(), pass });
        }
    }

    for (name, value) in getters {
        let instance = heap.get_mut(id).ok_or(ObjectError::DanglingIdentity(id))?;
        instance.slots.insert(name.clone(), value);
        heap.record(TraceEvent::Getter { instance: label.to_string(), property: name });
    }
    Ok(())
}

fn run_inits_traced(
    id: u64,
    descriptor: &Arc<TypeDescriptor>,
    label: &str,
    heap: &mut Heap,
    hooks: &InitHooks,
) -> Result<(), SerialError> {
    for init in &descriptor.inits {
        let ok = {
            let instance = heap.get_mut(id).ok_or(ObjectError::DanglingIdentity(id))?;
            hooks.run(&descriptor.full_name, &init.name, instance)
        };
        heap.record(TraceEvent::Init { instance: label.to_string(), init: init.name.clone(), ok });
        if !ok {
            return Err(SerialError::Object(ObjectError::InitFailed(init.name.clone())));
        }
    }
    Ok(())
}

fn construct_in_place(
    instance: &mut Instance,
    descriptor: &Arc<TypeDescriptor>,
    gathered: Gathered,
    label: &str,
    heap: &mut Heap,
    hooks: &InitHooks,
) -> Result<(), SerialError> {
    let Gathered { ctor_args, setters, getters } = gathered;
    apply_ctor_args(instance, ctor_args);
    heap.record(TraceEvent::Ctor { type_name: descriptor.full_name.clone(), instance: label.to_string() });

    for pass in [1u8, 2] {
        if pass == 2 {
            for init in &descriptor.inits {
                let ok = hooks.run(&descriptor.full_name, &init.name, instance);
                heap.record(TraceEvent::Init { instance: label.to_string(), init: init.name.clone(), ok });
                if !ok {
                    return Err(SerialError::Object(ObjectError::InitFailed(init.name.clone())));
                }
            }
        }
        for (name, value) in &setters {
            if let Some(value) = value {
                instance.slots.insert(name.clone(), value.clone());
            }
            heap.record(TraceEvent::Setter { instance: label.to_string(), property: name.clone(), pass });
        }
    }

    for (name, value) in getters {
        instance.slots.insert(name.clone(), value);
        heap.record(TraceEvent::Getter { instance: label.to_string(), property: name });
    }
    Ok(())
}

/// Entry used by clone: reads a simplified (positional) stream whose root
/// shape is known from the source value.
pub(super) fn read_simplified_root<S: ExpressiveStream>(
    stream: &mut S,
    descriptor: Option<Arc<TypeDescriptor>>,
    shaped_like: &DynValue,
    registry: &mut Registry,
    heap: &mut Heap,
    session: &mut Session,
    hooks: &InitHooks,
) -> Result<DynValue, SerialError> {
    match shaped_like {
        DynValue::Sequence(_) => {
            let count = read_count(stream, registry)?;
            let mut items = Vec::with_capacity(count);
            for _ in 0..count {
                items.push(read_positional_value(stream, None, registry, heap, session, hooks)?);
            }
            Ok(DynValue::Sequence(items))
        }
        DynValue::Keyed(_) => {
            let count = read_count(stream, registry)?;
            let mut pairs = Vec::with_capacity(count);
            for _ in 0..count {
                let key = read_positional_value(stream, None, registry, heap, session, hooks)?;
                let value = read_positional_value(stream, None, registry, heap, session, hooks)?;
                pairs.push((key, value));
            }
            Ok(DynValue::Keyed(pairs))
        }
        _ => {
            let declared = descriptor.as_ref().map(|d| d.full_name.clone());
            read_positional_value(stream, declared.as_deref(), registry, heap, session, hooks)
        }
    }
}

fn read_count<S: ExpressiveStream>(stream: &mut S, registry: &Registry) -> Result<usize, SerialError> {
    match stream.next()? {
        StreamItem::Prim { type_name, literal, .. } => match parse_literal(&type_name, &literal, registry)? {
            DynValue::Integer64(n) if n >= 0 => Ok(n as usize),
            DynValue::Unsigned64(n) => Ok(n as usize),
            other => Err(SerialError::MalformedStream(format!("expected element count, got {other}"))),
        },
        other => Err(SerialError::MalformedStream(format!("expected element count, got {other:?}"))),
    }
}

fn read_positional_value<S: ExpressiveStream>(
    stream: &mut S,
    declared: Option<&str>,
    registry: &mut Registry,
    heap: &mut Heap,
    session: &mut Session,
    hooks: &InitHooks,
) -> Result<DynValue, SerialError> {
    if let Some(declared_text) = declared {
        match TypeRef::parse(declared_text)? {
            TypeRef::Seq(elem) => {
                let count = read_count(stream, registry)?;
                let mut items = Vec::with_capacity(count);
                for _ in 0..count {
                    items.push(read_positional_value(stream, Some(&elem.to_string()), registry, heap, session, hooks)?);
                }
                return Ok(DynValue::Sequence(items));
            }
            TypeRef::Map(k, v) => {
                let count = read_count(stream, registry)?;
                let mut pairs = Vec::with_capacity(count);
                for _ in 0..count {
                    let key = read_positional_value(stream, Some(&k.to_string()), registry, heap, session, hooks)?;
                    let value =
                        read_positional_value(stream, Some(&v.to_string()), registry, heap, session, hooks)?;
                    pairs.push((key, value));
                }
                return Ok(DynValue::Keyed(pairs));
            }
            TypeRef::Named(name) if is_primitive_like(&name, registry) => {
                let item = stream.next()?;
                return scalar_value(&item, registry);
            }
            TypeRef::Named(_) => {}
        }
    }

    let peeked = stream.peek();
    let Some(head) = peeked.next_item else {
        return Err(SerialError::MalformedStream("stream ended inside a record".to_string()));
    };
    match head {
        StreamItem::VString { .. } | StreamItem::Prim { .. } => {
            let item = stream.next()?;
            scalar_value(&item, registry)
        }
        StreamItem::TypeInfo { .. } => {
            let Ok(StreamItem::TypeInfo { type_name }) = stream.next() else { unreachable!() };
            let descriptor = registry
                .get(&type_name)
                .cloned()
                .ok_or_else(|| SerialError::UnknownType(type_name.clone()))?;
            read_positional_record(stream, &descriptor, registry, heap, session, hooks)
        }
        StreamItem::Refer { identity: 0, .. } => {
            stream.next()?;
            Ok(DynValue::null())
        }
        StreamItem::Refer { identity, .. } => {
            if let Some(local) = session.ref_table.resolved.get(identity).copied() {
                stream.next()?;
                return Ok(DynValue::HeapRef(local));
            }
            let declared = declared.ok_or_else(|| {
                SerialError::MalformedStream("object body without type binding or declared type".to_string())
            })?;
            let descriptor = registry
                .get(declared)
                .cloned()
                .ok_or_else(|| SerialError::UnregisteredType(declared.to_string()))?;
            read_positional_record(stream, &descriptor, registry, heap, session, hooks)
        }
        StreamItem::Value { .. } => {
            let declared = declared.ok_or_else(|| {
                SerialError::MalformedStream("stack object without type binding or declared type".to_string())
            })?;
            let descriptor = registry
                .get(declared)
                .cloned()
                .ok_or_else(|| SerialError::UnregisteredType(declared.to_string()))?;
            read_positional_record(stream, &descriptor, registry, heap, session, hooks)
        }
        StreamItem::IntfInfo { .. } => {
            Err(SerialError::MalformedStream("interface item in a positional stream".to_string()))
        }
    }
}

fn read_positional_record<S: ExpressiveStream>(
    stream: &mut S,
    descriptor: &Arc<TypeDescriptor>,
    registry: &mut Registry,
    heap: &mut Heap,
    session: &mut Session,
    hooks: &InitHooks,
) -> Result<DynValue, SerialError> {
    let marker = stream.next()?;
    match marker {
        StreamItem::Refer { identity: 0, .. } => Ok(DynValue::null()),
        StreamItem::Refer { identity, .. } => {
            if let Some(local) = session.ref_table.resolved.get(&identity).copied() {
                return Ok(DynValue::HeapRef(local));
            }
            let local = heap.allocate(descriptor, registry);
            session.ref_table.resolved.insert(identity, local);
            let gathered = read_positional_members(stream, descriptor, registry, heap, session, hooks)?;
            construct(CtxTarget::Heap(local), descriptor, gathered, &local.to_string(), registry, heap, hooks)
        }
        StreamItem::Value { .. } => {
            let instance = Box::new(blank_instance(descriptor, registry, None));
            let gathered = read_positional_members(stream, descriptor, registry, heap, session, hooks)?;
            construct(CtxTarget::Stack(instance), descriptor, gathered, "<stack>", registry, heap, hooks)
        }
        other => Err(SerialError::MalformedStream(format!("expected a Value or Refer marker, got {other:?}"))),
    }
}

fn read_positional_members<S: ExpressiveStream>(
    stream: &mut S,
    descriptor: &Arc<TypeDescriptor>,
    registry: &mut Registry,
    heap: &mut Heap,
    session: &mut Session,
    hooks: &InitHooks,
) -> Result<Gathered, SerialError> {
    let setter_props: Vec<(String, String)> =
        descriptor.expressive_setters().map(|p| (p.name.clone(), p.value_type.clone())).collect();
    let mut setters = Vec::new();
    for (name, value_type) in setter_props {
        let value = read_positional_value(stream, Some(&value_type), registry, heap, session, hooks)?;
        setters.push((name, Some(value)));
    }
    let mut ctor_args = Vec::new();
    for param in &descriptor.constructor_params {
        ctor_args.push(read_positional_value(stream, Some(&param.value_type), registry, heap, session, hooks)?);
    }
    let getter_props: Vec<(String, String)> =
        descriptor.expressive_getters().map(|p| (p.name.clone(), p.value_type.clone())).collect();
    let mut getters = Vec::new();
    for (name, value_type) in getter_props {
        let value = read_positional_value(stream, Some(&value_type), registry, heap, session, hooks)?;
        getters.push((name, value));
    }
    Ok(Gathered { ctor_args, setters, getters })
}
