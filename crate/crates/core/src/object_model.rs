//! Runtime value representation: dynamic values, heap identity and
//! descriptor-driven construction.
//!
//! Heap objects live in a [`Heap`] and are addressed through small integer
//! identities; identity `0` always means null. Stack (value-kind) instances
//! are carried inline and copy on assignment.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

use crate::type_model::{
    classify_primitive, ExpressivenessKind, Registry, TypeDescriptor, TypeRef, STRING_TYPE,
};

#[derive(Debug, Clone, PartialEq)]
pub enum DynValue {
    Text(String),
    Integer64(i64),
    Unsigned64(u64),
    Float64(f64),
    Boolean(bool),
    StackObject(Box<Instance>),
    /// Identity of a heap instance; 0 is null.
    HeapRef(u64),
    Sequence(Vec<DynValue>),
    Keyed(Vec<(DynValue, DynValue)>),
}

impl DynValue {
    pub fn null() -> DynValue {
        DynValue::HeapRef(0)
    }

    pub fn is_null(&self) -> bool {
        matches!(self, DynValue::HeapRef(0))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DynValue::Text(_) => "text",
            DynValue::Integer64(_) => "integer",
            DynValue::Unsigned64(_) => "unsigned",
            DynValue::Float64(_) => "float",
            DynValue::Boolean(_) => "boolean",
            DynValue::StackObject(_) => "stack object",
            DynValue::HeapRef(_) => "heap reference",
            DynValue::Sequence(_) => "sequence",
            DynValue::Keyed(_) => "keyed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub descriptor: Arc<TypeDescriptor>,
    /// One slot per declared instance property plus one per ctor parameter
    /// getter; hidden (non-expressive) properties keep slots too so that
    /// field-level comparison can see them.
    pub slots: IndexMap<String, DynValue>,
    pub identity: Option<u64>,
    constructed: bool,
}

impl Instance {
    pub fn is_constructed(&self) -> bool {
        self.constructed
    }
}

#[derive(Debug, Error)]
pub enum ObjectError {
    #[error("constructor of {type_name} expects {expected} arguments, got {got}")]
    ArityMismatch { type_name: String, expected: usize, got: usize },
    #[error("constructor argument {param} of {type_name} expects {expected}, got {got}")]
    TypeMismatch { type_name: String, param: String, expected: String, got: String },
    #[error("init method {0} returned false")]
    InitFailed(String),
    #[error("unknown property {property} on {type_name}")]
    UnknownProperty { type_name: String, property: String },
    #[error("property {property} of {type_name} is read-only after construction")]
    ReadOnlyProperty { type_name: String, property: String },
    #[error("cannot parse `{literal}` as {type_name}: {reason}")]
    BadLiteral { type_name: String, literal: String, reason: String },
    #[error("no such heap identity {0}")]
    DanglingIdentity(u64),
}

/// Construction-order events recorded by the heap when tracing is on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Ctor { type_name: String, instance: String },
    Setter { instance: String, property: String, pass: u8 },
    Init { instance: String, init: String, ok: bool },
    Getter { instance: String, property: String },
}

/// Per-type init callbacks invoked during the construction sequence. Inits
/// without a registered hook succeed as no-ops.
#[derive(Default)]
pub struct InitHooks {
    hooks: HashMap<(String, String), Box<dyn Fn(&mut Instance) -> bool>>,
}

impl InitHooks {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(
        &mut self,
        type_name: &str,
        init_name: &str,
        hook: impl Fn(&mut Instance) -> bool + 'static,
    ) {
        self.hooks.insert((type_name.to_string(), init_name.to_string()), Box::new(hook));
    }

    pub(crate) fn run(&self, type_name: &str, init_name: &str, instance: &mut Instance) -> bool {
        match self.hooks.get(&(type_name.to_string(), init_name.to_string())) {
            Some(hook) => hook(instance),
            None => true,
        }
    }
}

/// Object heap for one logical session. Also carries the static property
/// store and the optional construction trace.
#[derive(Default)]
pub struct Heap {
    objects: IndexMap<u64, Instance>,
    next_identity: u64,
    statics: IndexMap<(String, String), DynValue>,
    trace: Vec<TraceEvent>,
    tracing: bool,
}

impl Heap {
    pub fn new() -> Self {
        Heap { objects: IndexMap::new(), next_identity: 1, statics: IndexMap::new(), trace: Vec::new(), tracing: false }
    }

    pub fn enable_trace(&mut self) {
        self.tracing = true;
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn record(&mut self, event: TraceEvent) {
        if self.tracing {
            self.trace.push(event);
        }
    }

    pub fn get(&self, identity: u64) -> Option<&Instance> {
        self.objects.get(&identity)
    }

    pub fn get_mut(&mut self, identity: u64) -> Option<&mut Instance> {
        self.objects.get_mut(&identity)
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn identities(&self) -> impl Iterator<Item = u64> + '_ {
        self.objects.keys().copied()
    }

    /// Allocates a default-initialized, not-yet-constructed instance and
    /// returns its fresh identity.
    pub fn allocate(&mut self, descriptor: &Arc<TypeDescriptor>, registry: &Registry) -> u64 {
        let identity = self.reserve_identity();
        let instance = blank_instance(descriptor, registry, Some(identity));
        self.objects.insert(identity, instance);
        identity
    }

    /// Reserves an identity without installing an instance yet.
    pub fn reserve_identity(&mut self) -> u64 {
        let identity = self.next_identity;
        self.next_identity += 1;
        identity
    }

    /// Installs an instance under a previously reserved identity.
    pub fn install(&mut self, identity: u64, mut instance: Instance) {
        instance.identity = Some(identity);
        self.objects.insert(identity, instance);
    }

    pub fn remove(&mut self, identity: u64) -> Option<Instance> {
        self.objects.shift_remove(&identity)
    }

    pub fn static_value(&self, type_name: &str, prop: &str) -> Option<&DynValue> {
        self.statics.get(&(type_name.to_string(), prop.to_string()))
    }

    pub fn set_static(&mut self, type_name: &str, prop: &str, value: DynValue) {
        self.statics.insert((type_name.to_string(), prop.to_string()), value);
    }
}

/// Builds an instance whose slots hold the declared defaults.
pub fn blank_instance(descriptor: &Arc<TypeDescriptor>, registry: &Registry, identity: Option<u64>) -> Instance {
    let mut slots = IndexMap::new();
    for param in &descriptor.constructor_params {
        slots.insert(param.getter_name.clone(), default_value(&param.value_type, None, registry));
    }
    for prop in &descriptor.instance_props {
        slots.insert(prop.name.clone(), default_value(&prop.value_type, prop.default_literal.as_deref(), registry));
    }
    Instance { descriptor: Arc::clone(descriptor), slots, identity, constructed: false }
}

/// The zero value of a declared type, or its parsed `def` literal.
pub fn default_value(value_type: &str, default_literal: Option<&str>, registry: &Registry) -> DynValue {
    if let Some(literal) = default_literal {
        if let Ok(v) = parse_literal(value_type, literal, registry) {
            return v;
        }
    }
    match TypeRef::parse(value_type) {
        Ok(TypeRef::Seq(_)) => DynValue::Sequence(Vec::new()),
        Ok(TypeRef::Map(_, _)) => DynValue::Keyed(Vec::new()),
        Ok(TypeRef::Named(name)) => match classify_primitive(&name, registry) {
            ExpressivenessKind::PrimitiveString => DynValue::Text(String::new()),
            ExpressivenessKind::PrimitiveValue => zero_primitive(&name),
            ExpressivenessKind::ValueWithParse => DynValue::Text(String::new()),
            _ => DynValue::null(),
        },
        Err(_) => DynValue::null(),
    }
}

fn zero_primitive(name: &str) -> DynValue {
    match name {
        "System.Boolean" => DynValue::Boolean(false),
        "System.Single" | "System.Double" => DynValue::Float64(0.0),
        "System.Byte" | "System.UInt16" | "System.UInt32" | "System.UInt64" => DynValue::Unsigned64(0),
        _ => DynValue::Integer64(0),
    }
}

/// Parses a primitive literal according to its declared type name.
pub fn parse_literal(type_name: &str, literal: &str, registry: &Registry) -> Result<DynValue, ObjectError> {
    let bad = |reason: &str| ObjectError::BadLiteral {
        type_name: type_name.to_string(),
        literal: literal.to_string(),
        reason: reason.to_string(),
    };
    match classify_primitive(type_name, registry) {
        ExpressivenessKind::PrimitiveString => Ok(DynValue::Text(literal.to_string())),
        ExpressivenessKind::PrimitiveValue => match type_name {
            "System.Boolean" => match literal {
                "true" | "True" => Ok(DynValue::Boolean(true)),
                "false" | "False" => Ok(DynValue::Boolean(false)),
                _ => Err(bad("expected true or false")),
            },
            "System.Single" | "System.Double" => {
                literal.parse::<f64>().map(DynValue::Float64).map_err(|e| bad(&e.to_string()))
            }
            "System.Byte" | "System.UInt16" | "System.UInt32" | "System.UInt64" => {
                literal.parse::<u64>().map(DynValue::Unsigned64).map_err(|e| bad(&e.to_string()))
            }
            _ => literal.parse::<i64>().map(DynValue::Integer64).map_err(|e| bad(&e.to_string())),
        },
        ExpressivenessKind::ValueWithParse => match registry.convert_literal(type_name, literal) {
            Some(Ok(normalized)) => Ok(DynValue::Text(normalized)),
            Some(Err(reason)) => Err(bad(&reason)),
            None => Err(bad("no conversion registered")),
        },
        _ => Err(bad("not a primitively expressive type")),
    }
}

/// Renders a primitive value back into its literal form.
pub fn render_literal(value: &DynValue) -> String {
    match value {
        DynValue::Text(s) => s.clone(),
        DynValue::Integer64(i) => i.to_string(),
        DynValue::Unsigned64(u) => u.to_string(),
        DynValue::Float64(f) => format!("{f}"),
        DynValue::Boolean(b) => b.to_string(),
        other => format!("<{}>", other.kind_name()),
    }
}

/// The canonical type name used when a bare primitive value is serialized
/// without a declared slot type.
pub fn canonical_type_name(value: &DynValue) -> &'static str {
    match value {
        DynValue::Text(_) => STRING_TYPE,
        DynValue::Integer64(_) => "System.Int64",
        DynValue::Unsigned64(_) => "System.UInt64",
        DynValue::Float64(_) => "System.Double",
        DynValue::Boolean(_) => "System.Boolean",
        _ => "System.Object",
    }
}

fn value_matches_type(value: &DynValue, value_type: &str, registry: &Registry, heap: &Heap) -> bool {
    match TypeRef::parse(value_type) {
        Ok(TypeRef::Seq(_)) => matches!(value, DynValue::Sequence(_)),
        Ok(TypeRef::Map(_, _)) => matches!(value, DynValue::Keyed(_)),
        Ok(TypeRef::Named(name)) => match classify_primitive(&name, registry) {
            ExpressivenessKind::PrimitiveString => matches!(value, DynValue::Text(_)),
            ExpressivenessKind::PrimitiveValue => match name.as_str() {
                "System.Boolean" => matches!(value, DynValue::Boolean(_)),
                "System.Single" | "System.Double" => matches!(value, DynValue::Float64(_)),
                "System.Byte" | "System.UInt16" | "System.UInt32" | "System.UInt64" => {
                    matches!(value, DynValue::Unsigned64(_))
                }
                _ => matches!(value, DynValue::Integer64(_)),
            },
            ExpressivenessKind::ValueWithParse => matches!(value, DynValue::Text(_)),
            _ => match value {
                DynValue::HeapRef(0) => true,
                DynValue::HeapRef(id) => match heap.get(*id) {
                    Some(inst) => {
                        inst.descriptor.full_name == name || inst.descriptor.interfaces.contains(&name)
                    }
                    None => false,
                },
                DynValue::StackObject(inst) => {
                    inst.descriptor.full_name == name || inst.descriptor.interfaces.contains(&name)
                }
                _ => false,
            },
        },
        Err(_) => false,
    }
}

/// Creates a new instance from constructor arguments. Heap-kind types get a
/// fresh identity; value-kind types come back inline. Init methods are not
/// run here — the deserializer drives the full construction sequence.
pub fn instantiate(
    descriptor: &Arc<TypeDescriptor>,
    ctor_args: Vec<DynValue>,
    registry: &Registry,
    heap: &mut Heap,
) -> Result<DynValue, ObjectError> {
    if ctor_args.len() != descriptor.constructor_params.len() {
        return Err(ObjectError::ArityMismatch {
            type_name: descriptor.full_name.clone(),
            expected: descriptor.constructor_params.len(),
            got: ctor_args.len(),
        });
    }
    for (param, arg) in descriptor.constructor_params.iter().zip(&ctor_args) {
        if !value_matches_type(arg, &param.value_type, registry, heap) {
            return Err(ObjectError::TypeMismatch {
                type_name: descriptor.full_name.clone(),
                param: param.param_name.clone(),
                expected: param.value_type.clone(),
                got: arg.kind_name().to_string(),
            });
        }
    }
    if descriptor.is_value_kind {
        let mut instance = blank_instance(descriptor, registry, None);
        apply_ctor_args(&mut instance, ctor_args);
        heap.record(TraceEvent::Ctor {
            type_name: descriptor.full_name.clone(),
            instance: "<stack>".to_string(),
        });
        Ok(DynValue::StackObject(Box::new(instance)))
    } else {
        let identity = heap.allocate(descriptor, registry);
        let instance = heap.get_mut(identity).expect("freshly allocated");
        apply_ctor_args(instance, ctor_args);
        heap.record(TraceEvent::Ctor {
            type_name: descriptor.full_name.clone(),
            instance: identity.to_string(),
        });
        Ok(DynValue::HeapRef(identity))
    }
}

/// Assigns constructor arguments to their getter slots and marks the
/// instance constructed, freezing those slots.
pub fn apply_ctor_args(instance: &mut Instance, ctor_args: Vec<DynValue>) {
    let getters: Vec<String> =
        instance.descriptor.constructor_params.iter().map(|p| p.getter_name.clone()).collect();
    for (getter, arg) in getters.into_iter().zip(ctor_args) {
        instance.slots.insert(getter, arg);
    }
    instance.constructed = true;
}

/// Runs the init callbacks in ascending sequence; stops at the first one
/// returning false.
pub fn run_inits(instance: &mut Instance, hooks: &InitHooks) -> Result<(), ObjectError> {
    let inits = instance.descriptor.inits.clone();
    let type_name = instance.descriptor.full_name.clone();
    for init in &inits {
        if !hooks.run(&type_name, &init.name, instance) {
            return Err(ObjectError::InitFailed(init.name.clone()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessMode {
    Get,
    Set,
}

/// Slot access on an instance. Setting a constructor-parameter getter after
/// construction is refused.
pub fn property_access(
    instance: &mut Instance,
    name: &str,
    mode: AccessMode,
    value: Option<DynValue>,
) -> Result<Option<DynValue>, ObjectError> {
    if !instance.slots.contains_key(name) {
        return Err(ObjectError::UnknownProperty {
            type_name: instance.descriptor.full_name.clone(),
            property: name.to_string(),
        });
    }
    match mode {
        AccessMode::Get => Ok(instance.slots.get(name).cloned()),
        AccessMode::Set => {
            if instance.constructed && instance.descriptor.ctor_param_for_getter(name).is_some() {
                return Err(ObjectError::ReadOnlyProperty {
                    type_name: instance.descriptor.full_name.clone(),
                    property: name.to_string(),
                });
            }
            let value = value.expect("set requires a value");
            instance.slots.insert(name.to_string(), value);
            Ok(None)
        }
    }
}

impl fmt::Display for DynValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynValue::Text(s) => write!(f, "{s:?}"),
            DynValue::Integer64(i) => write!(f, "{i}"),
            DynValue::Unsigned64(u) => write!(f, "{u}"),
            DynValue::Float64(x) => write!(f, "{x}"),
            DynValue::Boolean(b) => write!(f, "{b}"),
            DynValue::StackObject(inst) => write!(f, "{}{{..}}", inst.descriptor.short_name()),
            DynValue::HeapRef(0) => write!(f, "null"),
            DynValue::HeapRef(id) => write!(f, "#{id}"),
            DynValue::Sequence(items) => write!(f, "[{} items]", items.len()),
            DynValue::Keyed(items) => write!(f, "{{{} pairs}}", items.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::type_model::FIGURE_SCHEMA;

    fn setup() -> (Registry, Heap) {
        let mut reg = Registry::new();
        reg.load_schema(FIGURE_SCHEMA).unwrap();
        (reg, Heap::new())
    }

    #[test]
    fn instantiate_assigns_ctor_slot() {
        let (reg, mut heap) = setup();
        let desc = reg.get("UnitTest.MyExpressiveType").unwrap().clone();
        let v = instantiate(&desc, vec![DynValue::Float64(12345.0)], &reg, &mut heap).unwrap();
        let DynValue::HeapRef(id) = v else { panic!("expected heap ref") };
        let inst = heap.get(id).unwrap();
        assert_eq!(inst.slots.get("MyReadonly"), Some(&DynValue::Float64(12345.0)));
        // default literal applied to MyValue
        assert_eq!(inst.slots.get("MyValue"), Some(&DynValue::Integer64(0)));
    }

    #[test]
    fn identities_are_fresh() {
        let (reg, mut heap) = setup();
        let desc = reg.get("UnitTest.MyExpressiveType").unwrap().clone();
        let a = instantiate(&desc, vec![DynValue::Float64(1.0)], &reg, &mut heap).unwrap();
        let b = instantiate(&desc, vec![DynValue::Float64(1.0)], &reg, &mut heap).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn wrong_arity_rejected() {
        let (reg, mut heap) = setup();
        let desc = reg.get("UnitTest.MyExpressiveType").unwrap().clone();
        let err = instantiate(&desc, vec![], &reg, &mut heap).unwrap_err();
        assert!(matches!(err, ObjectError::ArityMismatch { .. }));
    }

    #[test]
    fn wrong_type_rejected() {
        let (reg, mut heap) = setup();
        let desc = reg.get("UnitTest.MyExpressiveType").unwrap().clone();
        let err = instantiate(&desc, vec![DynValue::Text("x".into())], &reg, &mut heap).unwrap_err();
        assert!(matches!(err, ObjectError::TypeMismatch { .. }));
    }

    #[test]
    fn get_after_set() {
        let (reg, mut heap) = setup();
        let desc = reg.get("UnitTest.MyExpressiveType").unwrap().clone();
        let DynValue::HeapRef(id) = instantiate(&desc, vec![DynValue::Float64(0.0)], &reg, &mut heap).unwrap()
        else {
            panic!()
        };
        let inst = heap.get_mut(id).unwrap();
        property_access(inst, "MyValue", AccessMode::Set, Some(DynValue::Integer64(6789))).unwrap();
        let got = property_access(inst, "MyValue", AccessMode::Get, None).unwrap();
        assert_eq!(got, Some(DynValue::Integer64(6789)));
    }

    #[test]
    fn ctor_getter_read_only_after_construction() {
        let (reg, mut heap) = setup();
        let desc = reg.get("UnitTest.MyExpressiveType").unwrap().clone();
        let DynValue::HeapRef(id) = instantiate(&desc, vec![DynValue::Float64(0.0)], &reg, &mut heap).unwrap()
        else {
            panic!()
        };
        let inst = heap.get_mut(id).unwrap();
        let err =
            property_access(inst, "MyReadonly", AccessMode::Set, Some(DynValue::Float64(1.0))).unwrap_err();
        assert!(matches!(err, ObjectError::ReadOnlyProperty { .. }));
    }

    #[test]
    fn unknown_property_rejected() {
        let (reg, mut heap) = setup();
        let desc = reg.get("UnitTest.MyExpressiveType").unwrap().clone();
        let DynValue::HeapRef(id) = instantiate(&desc, vec![DynValue::Float64(0.0)], &reg, &mut heap).unwrap()
        else {
            panic!()
        };
        let inst = heap.get_mut(id).unwrap();
        let err = property_access(inst, "Nope", AccessMode::Get, None).unwrap_err();
        assert!(matches!(err, ObjectError::UnknownProperty { .. }));
    }

    #[test]
    fn inits_run_in_sequence_and_stop_on_false() {
        let (reg, mut heap) = setup();
        let desc = reg.get("UnitTest.MyExpressiveType").unwrap().clone();
        let DynValue::HeapRef(id) = instantiate(&desc, vec![DynValue::Float64(0.0)], &reg, &mut heap).unwrap()
        else {
            panic!()
        };

        let mut hooks = InitHooks::new();
        hooks.register("UnitTest.MyExpressiveType", "ConnectToDB", |inst| {
            inst.slots.insert("MyValue".into(), DynValue::Integer64(1));
            true
        });
        hooks.register("UnitTest.MyExpressiveType", "SetDBLogger", |inst| {
            let DynValue::Integer64(v) = inst.slots["MyValue"] else { return false };
            inst.slots.insert("MyValue".into(), DynValue::Integer64(v + 1));
            true
        });
        run_inits(heap.get_mut(id).unwrap(), &hooks).unwrap();
        assert_eq!(heap.get(id).unwrap().slots["MyValue"], DynValue::Integer64(2));

        let mut failing = InitHooks::new();
        failing.register("UnitTest.MyExpressiveType", "ConnectToDB", |_| false);
        failing.register("UnitTest.MyExpressiveType", "SetDBLogger", |inst| {
            inst.slots.insert("MyValue".into(), DynValue::Integer64(99));
            true
        });
        let err = run_inits(heap.get_mut(id).unwrap(), &failing).unwrap_err();
        assert!(matches!(err, ObjectError::InitFailed(name) if name == "ConnectToDB"));
        // the second init never ran
        assert_eq!(heap.get(id).unwrap().slots["MyValue"], DynValue::Integer64(2));
    }

    #[test]
    fn no_inits_is_success() {
        let mut reg = Registry::new();
        reg.load_schema("type T.Simple\n  setter X: System.Int32\n").unwrap();
        let mut heap = Heap::new();
        let desc = reg.get("T.Simple").unwrap().clone();
        let DynValue::HeapRef(id) = instantiate(&desc, vec![], &reg, &mut heap).unwrap() else { panic!() };
        run_inits(heap.get_mut(id).unwrap(), &InitHooks::new()).unwrap();
    }

    #[test]
    fn float_literals_round_trip_figure_values() {
        for (text, value) in [("12345", 12345.0), ("0.123", 0.123), ("456.7", 456.7), ("890", 890.0)] {
            let reg = Registry::new();
            let parsed = parse_literal("System.Double", text, &reg).unwrap();
            assert_eq!(parsed, DynValue::Float64(value));
            assert_eq!(render_literal(&parsed), text);
        }
    }
}
