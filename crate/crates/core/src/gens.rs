//! Deterministic random object graphs for round-trip suites and benches.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::object_model::{blank_instance, DynValue, Heap};
use crate::type_model::Registry;

/// Schema used by the generated graphs: one heap node type with primitive,
/// reference, sequence and keyed members, a sealed leaf type and a stack
/// point type.
pub const GEN_SCHEMA: &str = "\
type Gen.Node implements Gen.INode
  ctor seed: System.Double
  setter Label: System.String
  setter Count: System.Int32
  setter Flag: System.Boolean
  setter Big: System.UInt64
  setter Next: Gen.Node
  setter Leaf: Gen.Leaf
  setter Point: Gen.Pt
  getter Nums: seq<System.Double>
  getter Kids: seq<Gen.Node>
  getter Tags: map<System.String, System.Int32>
sealed type Gen.Leaf
  setter X: System.Int32
value type Gen.Pt
  setter A: System.Double
  setter B: System.Double
";

pub fn gen_registry() -> Registry {
    let mut registry = Registry::new();
    registry.load_schema(GEN_SCHEMA).expect("generator schema is well formed");
    registry
}

#[derive(Debug, Clone)]
pub struct GraphSpec {
    pub max_nodes: usize,
    pub max_depth: usize,
}

impl Default for GraphSpec {
    fn default() -> Self {
        GraphSpec { max_nodes: 50, max_depth: 5 }
    }
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_float(rng: &mut ChaCha8Rng) -> f64 {
    // values that survive parse/print exactly and read well in fixtures
    let mantissa = rng.gen_range(-100_000i64..100_000);
    let scale = 10f64.powi(rng.gen_range(0..4));
    mantissa as f64 / scale
}

fn random_label(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(0..12);
    let mut out = String::new();
    for _ in 0..len {
        let c = match rng.gen_range(0u8..6) {
            0 => rng.gen_range(b'a'..=b'z') as char,
            1 => rng.gen_range(b'A'..=b'Z') as char,
            2 => rng.gen_range(b'0'..=b'9') as char,
            3 => '\t',
            4 => '\n',
            _ => ';',
        };
        out.push(c);
    }
    out
}

/// Builds a random DAG of heap nodes (aliases and nulls included, depth
/// bounded by level assignment) and returns the root reference.
pub fn random_graph(rng: &mut ChaCha8Rng, registry: &Registry, heap: &mut Heap, spec: &GraphSpec) -> DynValue {
    let node_desc = registry.get("Gen.Node").expect("Gen.Node declared").clone();
    let leaf_desc = registry.get("Gen.Leaf").expect("Gen.Leaf declared").clone();
    let pt_desc = registry.get("Gen.Pt").expect("Gen.Pt declared").clone();

    let depth = spec.max_depth.max(1);
    let count = rng.gen_range(1..=spec.max_nodes.max(1));
    // level of each node; the root always sits at level 0
    let mut levels: Vec<usize> = (0..count).map(|i| if i == 0 { 0 } else { rng.gen_range(0..depth) }).collect();
    levels[0] = 0;

    // create deepest levels first so references always point to existing nodes
    let mut ids: Vec<Option<u64>> = vec![None; count];
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(levels[i]));

    for &index in &order {
        let id = heap.allocate(&node_desc, registry);
        ids[index] = Some(id);
        let deeper: Vec<u64> = (0..count)
            .filter(|&j| levels[j] > levels[index])
            .filter_map(|j| ids[j])
            .collect();

        let next = if deeper.is_empty() || rng.gen_bool(0.4) {
            DynValue::null()
        } else {
            DynValue::HeapRef(deeper[rng.gen_range(0..deeper.len())])
        };
        let leaf = if rng.gen_bool(0.5) {
            DynValue::null()
        } else {
            let leaf_id = heap.allocate(&leaf_desc, registry);
            let x = rng.gen_range(-1000i64..1000);
            heap.get_mut(leaf_id).unwrap().slots.insert("X".into(), DynValue::Integer64(x));
            DynValue::HeapRef(leaf_id)
        };
        let mut point = blank_instance(&pt_desc, registry, None);
        point.slots.insert("A".into(), DynValue::Float64(random_float(rng)));
        point.slots.insert("B".into(), DynValue::Float64(random_float(rng)));

        let nums: Vec<DynValue> = (0..rng.gen_range(0..5)).map(|_| DynValue::Float64(random_float(rng))).collect();
        let kid_count = rng.gen_range(0..4.min(deeper.len() + 1));
        let kids: Vec<DynValue> = (0..kid_count)
            .map(|_| {
                if deeper.is_empty() || rng.gen_bool(0.15) {
                    DynValue::null()
                } else {
                    DynValue::HeapRef(deeper[rng.gen_range(0..deeper.len())])
                }
            })
            .collect();
        let tags: Vec<(DynValue, DynValue)> = (0..rng.gen_range(0..4))
            .map(|k| {
                (
                    DynValue::Text(format!("k{k}_{}", rng.gen_range(0..100))),
                    DynValue::Integer64(rng.gen_range(-50i64..50)),
                )
            })
            .collect();

        let instance = heap.get_mut(id).unwrap();
        instance.slots.insert("Seed".into(), DynValue::Float64(random_float(rng)));
        instance.slots.insert("Label".into(), DynValue::Text(random_label(rng)));
        instance.slots.insert("Count".into(), DynValue::Integer64(rng.gen_range(-10_000i64..10_000)));
        instance.slots.insert("Flag".into(), DynValue::Boolean(rng.gen_bool(0.5)));
        instance.slots.insert("Big".into(), DynValue::Unsigned64(rng.gen::<u32>() as u64));
        instance.slots.insert("Next".into(), next);
        instance.slots.insert("Leaf".into(), leaf);
        instance.slots.insert("Point".into(), DynValue::StackObject(Box::new(point)));
        instance.slots.insert("Nums".into(), DynValue::Sequence(nums));
        instance.slots.insert("Kids".into(), DynValue::Sequence(kids));
        instance.slots.insert("Tags".into(), DynValue::Keyed(tags));
    }

    DynValue::HeapRef(ids[0].expect("root created"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let registry = gen_registry();
        let spec = GraphSpec::default();
        let build = || {
            let mut heap = Heap::new();
            let mut rng = rng_for(7);
            let root = random_graph(&mut rng, &registry, &mut heap, &spec);
            let DynValue::HeapRef(id) = root else { panic!() };
            format!("{:?}", heap.get(id).unwrap().slots)
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn respects_node_budget() {
        let registry = gen_registry();
        let mut heap = Heap::new();
        let mut rng = rng_for(3);
        let spec = GraphSpec { max_nodes: 5, max_depth: 3 };
        random_graph(&mut rng, &registry, &mut heap, &spec);
        // every node may add one leaf, so the ceiling is twice the budget
        assert!(heap.len() <= 10);
    }
}
