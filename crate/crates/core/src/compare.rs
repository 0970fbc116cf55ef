//! Recursive structural comparison and the full-expressiveness check.
//!
//! Two comparison surfaces exist: fieldwise walks every declared slot,
//! hidden ones included; getterwise restricts itself to the public surface
//! (constructor-parameter getters, expressive setters and expressive
//! getters). Both skip members flagged for comparison-ignore, stop at the
//! declared comparison-base type, and treat a pair of instances already
//! under comparison higher in the recursion as equal so cycles terminate.

use std::collections::HashSet;

use crate::object_model::{render_literal, DynValue, Heap, InitHooks, Instance};
use crate::serializer::{clone_value, SerialError};
use crate::type_model::{PropertyDescriptor, Registry, TypeDescriptor};

/// First difference found, if any: a binding-style path plus both renderings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Difference {
    pub path: String,
    pub left: String,
    pub right: String,
}

pub type DiffReport = Option<Difference>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareMode {
    Fieldwise,
    Getterwise,
}

/// Compares every declared slot, hidden members included.
pub fn fieldwise_diff(left: &DynValue, right: &DynValue, registry: &Registry, heap: &Heap) -> DiffReport {
    Differ::new(registry, heap, CompareMode::Fieldwise, 0.0).diff(left, right, root_path(left, heap))
}

/// Compares the public getter surface only.
pub fn getterwise_diff(left: &DynValue, right: &DynValue, registry: &Registry, heap: &Heap) -> DiffReport {
    Differ::new(registry, heap, CompareMode::Getterwise, 0.0).diff(left, right, root_path(left, heap))
}

/// Comparison with an explicit mode and float tolerance. The tolerance
/// defaults to zero everywhere else: values travel as parse/print literals,
/// so equality is exact by construction.
pub fn diff_with(
    left: &DynValue,
    right: &DynValue,
    registry: &Registry,
    heap: &Heap,
    mode: CompareMode,
    float_tolerance: f64,
) -> DiffReport {
    Differ::new(registry, heap, mode, float_tolerance).diff(left, right, root_path(left, heap))
}

/// Clones the sample through a simplified stream and compares the clone with
/// the source; the type is fully expressive when no difference remains.
pub fn is_fully_expressive(
    descriptor: &TypeDescriptor,
    sample: &DynValue,
    registry: &mut Registry,
    heap: &mut Heap,
    hooks: &InitHooks,
    mode: CompareMode,
) -> Result<(bool, DiffReport), SerialError> {
    let _ = descriptor;
    let clone = clone_value(sample, registry, heap, hooks)?;
    let report = diff_with(sample, &clone, registry, heap, mode, 0.0);
    Ok((report.is_none(), report))
}

fn root_path(value: &DynValue, heap: &Heap) -> String {
    match value {
        DynValue::HeapRef(id) if *id != 0 => {
            heap.get(*id).map(|i| i.descriptor.short_name().to_string()).unwrap_or_else(|| "value".into())
        }
        DynValue::StackObject(inst) => inst.descriptor.short_name().to_string(),
        _ => "value".to_string(),
    }
}

fn render(value: &DynValue, heap: &Heap) -> String {
    match value {
        DynValue::HeapRef(id) if *id != 0 => heap
            .get(*id)
            .map(|i| format!("{} instance", i.descriptor.short_name()))
            .unwrap_or_else(|| format!("#{id}")),
        DynValue::StackObject(inst) => format!("{} value", inst.descriptor.short_name()),
        DynValue::Sequence(items) => format!("sequence of {}", items.len()),
        DynValue::Keyed(pairs) => format!("keyed of {}", pairs.len()),
        other => render_literal(other),
    }
}

struct Differ<'a> {
    registry: &'a Registry,
    heap: &'a Heap,
    mode: CompareMode,
    float_tolerance: f64,
    in_progress: HashSet<(u64, u64)>,
    stop_types: Vec<String>,
}

impl<'a> Differ<'a> {
    fn new(registry: &'a Registry, heap: &'a Heap, mode: CompareMode, float_tolerance: f64) -> Self {
        Differ { registry, heap, mode, float_tolerance, in_progress: HashSet::new(), stop_types: Vec::new() }
    }

    fn mismatch(&self, path: String, left: &DynValue, right: &DynValue) -> DiffReport {
        Some(Difference { path, left: render(left, self.heap), right: render(right, self.heap) })
    }

    fn diff(&mut self, left: &DynValue, right: &DynValue, path: String) -> DiffReport {
        match (left, right) {
            (DynValue::Text(a), DynValue::Text(b)) => {
                (a != b).then(|| self.mismatch(path, left, right)).flatten()
            }
            (DynValue::Integer64(a), DynValue::Integer64(b)) => {
                (a != b).then(|| self.mismatch(path, left, right)).flatten()
            }
            (DynValue::Unsigned64(a), DynValue::Unsigned64(b)) => {
                (a != b).then(|| self.mismatch(path, left, right)).flatten()
            }
            (DynValue::Boolean(a), DynValue::Boolean(b)) => {
                (a != b).then(|| self.mismatch(path, left, right)).flatten()
            }
            (DynValue::Float64(a), DynValue::Float64(b)) => {
                let equal = if self.float_tolerance > 0.0 {
                    (a - b).abs() <= self.float_tolerance
                } else {
                    a == b
                };
                (!equal).then(|| self.mismatch(path, left, right)).flatten()
            }
            (DynValue::Sequence(a), DynValue::Sequence(b)) => {
                if a.len() != b.len() {
                    return self.mismatch(path, left, right);
                }
                for (index, (x, y)) in a.iter().zip(b).enumerate() {
                    if let Some(d) = self.diff(x, y, format!("{path}[{index}]")) {
                        return Some(d);
                    }
                }
                None
            }
            (DynValue::Keyed(a), DynValue::Keyed(b)) => {
                if a.len() != b.len() {
                    return self.mismatch(path, left, right);
                }
                for (index, ((ka, va), (kb, vb))) in a.iter().zip(b).enumerate() {
                    if let Some(d) = self.diff(ka, kb, format!("{path}@[{index}]")) {
                        return Some(d);
                    }
                    if let Some(d) = self.diff(va, vb, format!("{path}&[{index}]")) {
                        return Some(d);
                    }
                }
                None
            }
            (DynValue::HeapRef(0), DynValue::HeapRef(0)) => None,
            (DynValue::HeapRef(a), DynValue::HeapRef(b)) => {
                if *a == 0 || *b == 0 {
                    return self.mismatch(path, left, right);
                }
                if self.in_progress.contains(&(*a, *b)) {
                    return None;
                }
                let (Some(la), Some(rb)) = (self.heap.get(*a), self.heap.get(*b)) else {
                    return self.mismatch(path, left, right);
                };
                self.in_progress.insert((*a, *b));
                let (la, rb) = (la.clone(), rb.clone());
                let report = self.diff_instances(&la, &rb, path, left, right);
                self.in_progress.remove(&(*a, *b));
                report
            }
            (DynValue::StackObject(a), DynValue::StackObject(b)) => {
                let (la, rb) = (a.as_ref().clone(), b.as_ref().clone());
                self.diff_instances(&la, &rb, path, left, right)
            }
            _ => self.mismatch(path, left, right),
        }
    }

    fn diff_instances(
        &mut self,
        left: &Instance,
        right: &Instance,
        path: String,
        lv: &DynValue,
        rv: &DynValue,
    ) -> DiffReport {
        if left.descriptor.full_name != right.descriptor.full_name {
            return self.mismatch(path, lv, rv);
        }
        // comparison never descends into instances of a declared stop type
        if self.stop_types.contains(&left.descriptor.full_name) {
            return None;
        }
        let pushed_stop = match &left.descriptor.compare_base_stop {
            Some(stop) => {
                self.stop_types.push(stop.clone());
                true
            }
            None => false,
        };

        let descriptor = left.descriptor.clone();
        let mut report = None;
        for param in &descriptor.constructor_params {
            let member_path = format!("{path}${}", param.getter_name);
            let (Some(a), Some(b)) = (left.slots.get(&param.getter_name), right.slots.get(&param.getter_name))
            else {
                continue;
            };
            if let Some(d) = self.diff(a, b, member_path) {
                report = Some(d);
                break;
            }
        }
        if report.is_none() {
            for prop in &descriptor.instance_props {
                if !self.visits(prop) {
                    continue;
                }
                let delim = match prop.collection_kind {
                    crate::type_model::CollectionKind::Sequence => '*',
                    crate::type_model::CollectionKind::Keyed => '@',
                    crate::type_model::CollectionKind::None => '.',
                };
                let member_path = format!("{path}{delim}{}", prop.name);
                let (a, b) = match (left.slots.get(&prop.name), right.slots.get(&prop.name)) {
                    (Some(a), Some(b)) => (a, b),
                    (None, None) => continue,
                    (a, b) => {
                        report = Some(Difference {
                            path: member_path,
                            left: a.map(|v| render(v, self.heap)).unwrap_or_else(|| "<absent>".into()),
                            right: b.map(|v| render(v, self.heap)).unwrap_or_else(|| "<absent>".into()),
                        });
                        break;
                    }
                };
                if let Some(d) = self.diff(a, b, member_path) {
                    report = Some(d);
                    break;
                }
            }
        }

        if pushed_stop {
            self.stop_types.pop();
        }
        report
    }

    fn visits(&self, prop: &PropertyDescriptor) -> bool {
        if prop.compare_ignore {
            return false;
        }
        let _ = self.registry;
        match self.mode {
            CompareMode::Fieldwise => true,
            CompareMode::Getterwise => prop.is_expressive_setter() || prop.is_expressive_getter(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::object_model::instantiate;
    use crate::type_model::FIGURE_SCHEMA;

    fn figure_pair() -> (Registry, Heap, DynValue, DynValue) {
        let mut reg = Registry::new();
        reg.load_schema(FIGURE_SCHEMA).unwrap();
        let mut heap = Heap::new();
        let desc = reg.get("UnitTest.MyExpressiveType").unwrap().clone();
        let mk = |heap: &mut Heap, reg: &Registry, my_value: i64| {
            let v = instantiate(&desc, vec![DynValue::Float64(12345.0)], reg, heap).unwrap();
            let DynValue::HeapRef(id) = v else { panic!() };
            heap.get_mut(id).unwrap().slots.insert("MyValue".into(), DynValue::Integer64(my_value));
            v
        };
        let a = mk(&mut heap, &reg, 6789);
        let b = mk(&mut heap, &reg, 6789);
        (reg, heap, a, b)
    }

    #[test]
    fn diff_with_self_is_empty() {
        let (reg, heap, a, _) = figure_pair();
        assert_eq!(fieldwise_diff(&a, &a, &reg, &heap), None);
        assert_eq!(getterwise_diff(&a, &a, &reg, &heap), None);
    }

    #[test]
    fn differing_setter_reports_path() {
        let (reg, mut heap, a, b) = figure_pair();
        let DynValue::HeapRef(idb) = b else { panic!() };
        heap.get_mut(idb).unwrap().slots.insert("MyValue".into(), DynValue::Integer64(6790));
        let d = fieldwise_diff(&a, &b, &reg, &heap).unwrap();
        assert!(d.path.ends_with("MyValue"), "{}", d.path);
        assert_eq!(d.left, "6789");
        assert_eq!(d.right, "6790");
    }

    #[test]
    fn compare_ignore_slot_skipped() {
        let mut reg = Registry::new();
        reg.load_schema("type T.A\n  setter X: System.Int32\n  setter Stamp: System.Int64\n  ignore Stamp\n")
            .unwrap();
        let mut heap = Heap::new();
        let desc = reg.get("T.A").unwrap().clone();
        let a = instantiate(&desc, vec![], &reg, &mut heap).unwrap();
        let b = instantiate(&desc, vec![], &reg, &mut heap).unwrap();
        let DynValue::HeapRef(idb) = b else { panic!() };
        heap.get_mut(idb).unwrap().slots.insert("Stamp".into(), DynValue::Integer64(42));
        assert_eq!(fieldwise_diff(&a, &b, &reg, &heap), None);
    }

    #[test]
    fn hidden_slot_visible_to_fieldwise_only() {
        let mut reg = Registry::new();
        reg.load_schema("type T.A\n  setter X: System.Int32\n  hidden Cache: System.Int32\n").unwrap();
        let mut heap = Heap::new();
        let desc = reg.get("T.A").unwrap().clone();
        let a = instantiate(&desc, vec![], &reg, &mut heap).unwrap();
        let b = instantiate(&desc, vec![], &reg, &mut heap).unwrap();
        let DynValue::HeapRef(idb) = b else { panic!() };
        heap.get_mut(idb).unwrap().slots.insert("Cache".into(), DynValue::Integer64(1));
        assert!(fieldwise_diff(&a, &b, &reg, &heap).is_some());
        assert_eq!(getterwise_diff(&a, &b, &reg, &heap), None);
    }

    #[test]
    fn collection_length_difference_reports_getter_path() {
        let (reg, mut heap, a, b) = figure_pair();
        let DynValue::HeapRef(idb) = b else { panic!() };
        heap.get_mut(idb)
            .unwrap()
            .slots
            .insert("MyCollection".into(), DynValue::Sequence(vec![DynValue::Float64(1.0)]));
        let d = getterwise_diff(&a, &b, &reg, &heap).unwrap();
        assert!(d.path.ends_with("*MyCollection"), "{}", d.path);
    }

    #[test]
    fn compare_base_stops_descent() {
        let mut reg = Registry::new();
        reg.load_schema(
            "type T.Inner\n  setter V: System.Int32\ntype T.Outer\n  setter Child: T.Inner\n  comparebase T.Inner\n",
        )
        .unwrap();
        let mut heap = Heap::new();
        let inner = reg.get("T.Inner").unwrap().clone();
        let outer = reg.get("T.Outer").unwrap().clone();
        let ia = instantiate(&inner, vec![], &reg, &mut heap).unwrap();
        let ib = instantiate(&inner, vec![], &reg, &mut heap).unwrap();
        let DynValue::HeapRef(idb) = ib else { panic!() };
        heap.get_mut(idb).unwrap().slots.insert("V".into(), DynValue::Integer64(99));
        let oa = instantiate(&outer, vec![], &reg, &mut heap).unwrap();
        let ob = instantiate(&outer, vec![], &reg, &mut heap).unwrap();
        let DynValue::HeapRef(ida) = oa else { panic!() };
        let DynValue::HeapRef(idob) = ob else { panic!() };
        heap.get_mut(ida).unwrap().slots.insert("Child".into(), ia);
        heap.get_mut(idob).unwrap().slots.insert("Child".into(), ib);
        // the inner difference is invisible behind the comparison base
        assert_eq!(fieldwise_diff(&oa, &ob, &reg, &heap), None);
    }

    #[test]
    fn cyclic_graphs_terminate() {
        let mut reg = Registry::new();
        reg.load_schema("type T.Node\n  setter Next: T.Node\n").unwrap();
        let mut heap = Heap::new();
        let desc = reg.get("T.Node").unwrap().clone();
        let mk_cycle = |heap: &mut Heap, reg: &Registry| {
            let a = instantiate(&desc, vec![], reg, heap).unwrap();
            let b = instantiate(&desc, vec![], reg, heap).unwrap();
            let (DynValue::HeapRef(ia), DynValue::HeapRef(ib)) = (&a, &b) else { panic!() };
            heap.get_mut(*ia).unwrap().slots.insert("Next".into(), DynValue::HeapRef(*ib));
            heap.get_mut(*ib).unwrap().slots.insert("Next".into(), DynValue::HeapRef(*ia));
            a
        };
        let x = mk_cycle(&mut heap, &reg);
        let y = mk_cycle(&mut heap, &reg);
        assert_eq!(fieldwise_diff(&x, &y, &reg, &heap), None);
    }

    #[test]
    fn emptiness_is_symmetric() {
        let (reg, mut heap, a, b) = figure_pair();
        assert_eq!(
            fieldwise_diff(&a, &b, &reg, &heap).is_none(),
            fieldwise_diff(&b, &a, &reg, &heap).is_none()
        );
        let DynValue::HeapRef(idb) = b else { panic!() };
        heap.get_mut(idb).unwrap().slots.insert("MyValue".into(), DynValue::Integer64(1));
        assert_eq!(
            fieldwise_diff(&a, &b, &reg, &heap).is_none(),
            fieldwise_diff(&b, &a, &reg, &heap).is_none()
        );
    }

    #[test]
    fn fully_expressive_on_figure_fixture() {
        let (mut reg, mut heap, a, _) = figure_pair();
        let desc = reg.get("UnitTest.MyExpressiveType").unwrap().clone();
        let hooks = InitHooks::new();
        let (ok, report) =
            is_fully_expressive(&desc, &a, &mut reg, &mut heap, &hooks, CompareMode::Fieldwise).unwrap();
        assert!(ok, "{report:?}");
    }

    #[test]
    fn hidden_slot_breaks_fieldwise_expressiveness() {
        let mut reg = Registry::new();
        reg.load_schema("type T.A\n  setter X: System.Int32\n  hidden Cache: System.Int32\n").unwrap();
        let mut heap = Heap::new();
        let desc = reg.get("T.A").unwrap().clone();
        let a = instantiate(&desc, vec![], &reg, &mut heap).unwrap();
        let DynValue::HeapRef(id) = a else { panic!() };
        heap.get_mut(id).unwrap().slots.insert("Cache".into(), DynValue::Integer64(5));
        let hooks = InitHooks::new();
        let (ok, report) =
            is_fully_expressive(&desc, &a, &mut reg, &mut heap, &hooks, CompareMode::Fieldwise).unwrap();
        assert!(!ok);
        assert!(report.unwrap().path.ends_with("Cache"));
        // on the public surface the same type is fully expressive
        let (ok, _) =
            is_fully_expressive(&desc, &a, &mut reg, &mut heap, &hooks, CompareMode::Getterwise).unwrap();
        assert!(ok);
    }

    #[test]
    fn primitive_is_fully_expressive() {
        let mut reg = Registry::new();
        let mut heap = Heap::new();
        let hooks = InitHooks::new();
        let desc = crate::type_model::TypeDescriptor {
            full_name: "System.Int32".into(),
            interfaces: vec![],
            constructor_params: vec![],
            is_default_ctor: true,
            statics: vec![],
            instance_props: vec![],
            inits: vec![],
            expressiveness: crate::type_model::ExpressivenessKind::PrimitiveValue,
            compare_base_stop: None,
            is_sealed: true,
            is_value_kind: true,
            provisional: false,
        };
        let (ok, _) = is_fully_expressive(
            &desc,
            &DynValue::Integer64(5),
            &mut reg,
            &mut heap,
            &hooks,
            CompareMode::Fieldwise,
        )
        .unwrap();
        assert!(ok);
    }
}
