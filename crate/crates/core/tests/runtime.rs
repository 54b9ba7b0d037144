use std::path::PathBuf;

use abduct_core::frontend;
use abduct_core::logic::{Sort, ValueId};
use abduct_core::runtime::{
    build_sample, library, predicate, run_client, Env, GenConfig, Generator, Kind, Repr, Tree, Value,
};
use proptest::prelude::*;

fn call(f: &str, args: &[Value]) -> Result<Value, String> {
    library(f).unwrap_or_else(|| panic!("no library function {f}")).eval(args)
}

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn list() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(0i64..6, 0..7)
}

/// Batched queues with any split; the front is empty only if the queue is.
fn queue() -> impl Strategy<Value = Value> {
    (list(), list()).prop_map(|(front, back)| {
        let back = if front.is_empty() { vec![] } else { back };
        Value::Queue { front, back }
    })
}

fn tree() -> impl Strategy<Value = Tree> {
    let leaf = Just(Tree::Leaf);
    leaf.prop_recursive(4, 16, 2, |t| (t.clone(), 0i64..6, t).prop_map(|(l, x, r)| Tree::node(l, x, r)))
}

proptest! {
    #[test]
    fn stack_laws(x in 0i64..6, s in list()) {
        let pushed = call("list-push", &[Value::Elem(x), Value::List(s.clone())]).unwrap();
        prop_assert_eq!(call("list-top", &[pushed.clone()]).unwrap(), Value::Elem(x));
        prop_assert_eq!(call("list-tail", &[pushed.clone()]).unwrap(), Value::List(s.clone()));
        prop_assert_eq!(call("list-is-empty", &[pushed]).unwrap(), Value::Bool(false));
        prop_assert_eq!(call("list-is-empty", &[Value::List(s.clone())]).unwrap(), Value::Bool(s.is_empty()));
    }

    #[test]
    fn queue_behaves_as_a_sequence(q in queue(), x in 0i64..6) {
        let seq = q.sequence().unwrap();
        let snoc = call("queue-snoc", &[q.clone(), Value::Elem(x)]).unwrap();
        let mut want = seq.clone();
        want.push(x);
        prop_assert_eq!(snoc.sequence().unwrap(), want);
        prop_assert_eq!(call("queue-is-empty", &[q.clone()]).unwrap(), Value::Bool(seq.is_empty()));
        match (call("queue-head", &[q.clone()]), call("queue-tail", &[q.clone()])) {
            (Ok(h), Ok(t)) => {
                prop_assert_eq!(h, Value::Elem(seq[0]));
                prop_assert_eq!(t.sequence().unwrap(), seq[1..].to_vec());
            }
            (Err(_), Err(_)) => prop_assert!(seq.is_empty()),
            other => prop_assert!(false, "head/tail disagree: {:?}", other),
        }
    }

    #[test]
    fn maket_elements_are_the_union(x in 0i64..6, l in tree(), r in tree()) {
        let t = call("tree-maket", &[Value::Elem(x), Value::Tree(l.clone()), Value::Tree(r.clone())]).unwrap();
        let mut got = t.elements();
        let mut want = Value::Tree(l).elements();
        want.extend(Value::Tree(r).elements());
        want.push(x);
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn element_comparisons(a in -3i64..3, b in -3i64..3) {
        prop_assert_eq!(call("elem-eq", &[Value::Elem(a), Value::Elem(b)]).unwrap(), Value::Bool(a == b));
        prop_assert_eq!(call("elem-lt", &[Value::Elem(a), Value::Elem(b)]).unwrap(), Value::Bool(a < b));
    }

    #[test]
    fn predicates_match_their_definitions(s in list(), u in 0i64..6, v in 0i64..6) {
        let l = Value::List(s.clone());
        let (eu, ev) = (Value::Elem(u), Value::Elem(v));
        prop_assert_eq!(predicate("mem").unwrap().eval(&[l.clone(), eu.clone()]), s.contains(&u));
        prop_assert_eq!(predicate("hd").unwrap().eval(&[l.clone(), eu.clone()]), s.first() == Some(&u));
        let ord = s.iter().enumerate().any(|(i, x)| *x == u && s[i + 1..].contains(&v));
        prop_assert_eq!(predicate("ord").unwrap().eval(&[l, eu, ev]), ord);
    }

    #[test]
    fn generator_is_deterministic(seed in any::<u64>()) {
        let cfg = GenConfig { seed, ..GenConfig::default() };
        let draw = |cfg: GenConfig| {
            let mut g = Generator::new(cfg);
            (0..20).map(|i| g.value(if i % 2 == 0 { Kind::Repr(Repr::List) } else { Kind::Repr(Repr::Tree) })).collect::<Vec<_>>()
        };
        prop_assert_eq!(draw(cfg.clone()), draw(cfg));
    }

    #[test]
    fn generated_values_respect_bounds(seed in any::<u64>()) {
        let cfg = GenConfig { seed, max_container_size: 4, elem_lo: 2, elem_hi: 5, ..GenConfig::default() };
        let mut g = Generator::new(cfg);
        for kind in [Kind::Repr(Repr::List), Kind::Repr(Repr::Queue), Kind::Repr(Repr::Tree), Kind::Elem] {
            let v = g.value(kind);
            prop_assert!(v.size() <= 4, "{}", v);
            prop_assert!(v.elements().iter().all(|e| (2..=5).contains(e)), "{}", v);
        }
    }
}

#[test]
fn concat_runs_as_sequence_concatenation() {
    let cfg = frontend::load(&fixture("concat.cfg")).unwrap();
    let stack = Sort::container("stack");
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..100 {
        use proptest::strategy::ValueTree;
        let (a, b) = (list(), list()).new_tree(&mut runner).unwrap().current();
        let inputs: Env = [
            ("s1".to_string(), (stack.clone(), Value::List(a.clone()))),
            ("s2".to_string(), (stack.clone(), Value::List(b.clone()))),
        ]
        .into();
        let frame = run_client(&cfg.world, &cfg.client, &inputs, 32).unwrap();
        let mut want = a.clone();
        want.extend(&b);
        assert_eq!(frame.result(&cfg.client), Some(&Value::List(want)));
        assert!(!frame.obligation_failed);
    }
}

#[test]
fn insert_keeps_a_search_tree() {
    let cfg = frontend::load(&fixture("tree-insert.cfg")).unwrap();
    let mut t = Value::Tree(Tree::Leaf);
    for x in [3, 1, 4, 1, 5, 0, 2] {
        let inputs: Env = [
            ("x".to_string(), (Sort::Element, Value::Elem(x))),
            ("s".to_string(), (Sort::container("set"), t.clone())),
        ]
        .into();
        t = run_client(&cfg.world, &cfg.client, &inputs, 32).unwrap().result(&cfg.client).unwrap().clone();
    }
    // in-order traversal is sorted and duplicate free
    fn inorder(t: &Tree, out: &mut Vec<i64>) {
        if let Tree::Node(l, x, r) = t {
            inorder(l, out);
            out.push(*x);
            inorder(r, out);
        }
    }
    let Value::Tree(tree) = &t else { panic!() };
    let mut got = Vec::new();
    inorder(tree, &mut got);
    assert_eq!(got, vec![0, 1, 2, 3, 4, 5]);
}

#[test]
fn samples_record_exactly_the_true_tuples() {
    let cfg = frontend::load(&fixture("concat.cfg")).unwrap();
    let stack = Sort::container("stack");
    let env: Env = [
        ("s1".to_string(), (stack.clone(), Value::List(vec![2, 1]))),
        ("s2".to_string(), (stack.clone(), Value::List(vec![]))),
        ("nu".to_string(), (stack, Value::List(vec![2, 1]))),
        ("h".to_string(), (Sort::Element, Value::Elem(4))),
    ]
    .into();
    let s = build_sample(&cfg.world, &env, 2);
    // equal values share an identity
    assert_eq!(s.assignment["s1"], s.assignment["nu"]);
    assert_ne!(s.assignment["s1"], s.assignment["s2"]);
    let values: Vec<(ValueId, Value)> = env
        .iter()
        .filter(|(_, (so, _))| so.is_container())
        .map(|(n, (_, v))| (s.assignment[n].clone(), v.clone()))
        .collect();
    let elems: Vec<i64> = s.elements.iter().chain(s.fresh.iter()).copied().collect();
    assert!(elems.len() >= 4);
    for (mp, imp) in &cfg.world.predicates {
        for (id, v) in &values {
            for e in &elems {
                let want = imp.eval(&[v.clone(), Value::Elem(*e)]);
                assert_eq!(s.holds(&mp.name, &[id.clone(), ValueId::Elem(*e)]), want, "{}({v}, {e})", mp.name);
            }
        }
    }
}
