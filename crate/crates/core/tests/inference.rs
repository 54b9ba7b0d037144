use std::collections::BTreeMap;
use std::path::PathBuf;

use abduct_core::frontend;
use abduct_core::inference::{multi_abduce, violates, Engine, Outcome, SpecConfig, SpecInferResult};
use abduct_core::logic::{all_vectors, classify, cube, substitute, FeatureSet, Interface, Prop};
use abduct_core::runtime::{consistency_violations, Env, Generator, GenConfig, Value};
use abduct_core::smt::VerifyResult;

fn load(name: &str) -> SpecConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    frontend::load(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn safe(cfg: &SpecConfig, d: &Interface) -> bool {
    let v = cfg.verifier();
    let sigs = cfg.signatures();
    cfg.queries().iter().all(|q| {
        let sigma = substitute(q, d, &sigs).unwrap();
        match v.verify(&Prop::implies(sigma, q.phi.clone())) {
            VerifyResult::Ok => true,
            VerifyResult::Sat(_) => false,
            VerifyResult::Unknown(r) => panic!("{}: {r}", q.name),
        }
    })
}

/// Vectors outside some spec of `d` whose addition keeps `d` safe.
fn weakenings(cfg: &SpecConfig, d: &Interface, sets: &BTreeMap<String, FeatureSet>) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (f, phi) in &d.specs {
        let s = &sets[f];
        for fv in all_vectors(s.len()) {
            if classify(phi, s, &fv) {
                continue;
            }
            let wider = s.formula(Prop::or(vec![phi.body.clone(), cube(&fv, s)]));
            if safe(cfg, &d.with(f, wider)) {
                out.push((f.clone(), fv.to_string()));
            }
        }
    }
    out
}

fn interface(cfg: &SpecConfig) -> (Interface, BTreeMap<String, FeatureSet>, abduct_core::inference::Metrics) {
    let run = multi_abduce(cfg);
    match run.outcome {
        Outcome::Interface(d) => (d, run.sets, run.metrics),
        other => panic!("expected an interface, got {other:?}"),
    }
}

#[test]
fn concat_interface_is_safe_and_weakest() {
    let cfg = load("concat.cfg");
    let (d, sets, m) = interface(&cfg);
    assert!(safe(&cfg, &d));
    assert!(m.non_maximal.is_empty());
    assert_eq!(weakenings(&cfg, &d, &sets), vec![]);
    for (f, phi) in &d.specs {
        assert_eq!(m.positive[f], all_vectors(sets[f].len()).filter(|v| classify(phi, &sets[f], v)).count() as u128);
    }
}

#[test]
fn queue_and_tree_interfaces_are_safe_and_weakest() {
    for name in ["queue-append.cfg", "tree-insert.cfg"] {
        let cfg = load(name);
        let (d, sets, m) = interface(&cfg);
        assert!(safe(&cfg, &d), "{name}");
        assert!(m.non_maximal.is_empty(), "{name}");
        assert_eq!(weakenings(&cfg, &d, &sets), vec![], "{name}");
    }
}

#[test]
fn maket_spec_is_exact_union() {
    let cfg = load("tree-insert.cfg");
    let (d, _, _) = interface(&cfg);
    let want = frontend::parse_spec(&cfg, "maket", "(forall (u) (<=> (mem nu u) (or (mem l u) (mem r u) (= x u))))").unwrap();
    assert_eq!(cfg.verifier().equivalent(&d.specs["maket"], &want), Ok(true), "{}", d.specs["maket"].body);
}

#[test]
fn interfaces_are_consistent_with_fresh_executions() {
    for name in ["concat.cfg", "queue-append.cfg", "tree-insert.cfg"] {
        let cfg = load(name);
        let (d, sets, _) = interface(&cfg);
        let mut gen = Generator::new(GenConfig { seed: 0xfeed, ..cfg.gen.clone() });
        let (observed, bad) = consistency_violations(&cfg.world, &cfg.client, &cfg.functions(), &d, &sets, &mut gen, 1, 1000);
        assert!(observed > 500, "{name}: only {observed} executions");
        assert_eq!(bad, 0, "{name}");
    }
}

#[test]
fn unsafe_concat_yields_a_real_counterexample() {
    let cfg = load("concat-unsafe.cfg");
    let run = multi_abduce(&cfg);
    let Outcome::Counterexample(c) = run.outcome else { panic!("{:?}", run.outcome) };
    let inputs: Env = c
        .inputs
        .iter()
        .map(|(n, v)| {
            let sort = cfg.client.params.iter().find(|p| &p.name == n).unwrap().sort.clone();
            (n.clone(), (sort, v.clone()))
        })
        .collect();
    assert!(violates(&cfg, &inputs, 32).is_some(), "{c:?}");
    // the unsafe postcondition fails exactly when some element of s1 is missing from s2
    let elems = |n: &str| inputs[n].1.elements();
    assert!(elems("s1").iter().any(|e| !elems("s2").contains(e)));
    assert!(!matches!(inputs["s1"].1, Value::List(ref v) if v.is_empty()));
}

#[test]
fn consistent_phase_respects_its_progress_bound() {
    for name in ["concat.cfg", "queue-append.cfg", "tree-insert.cfg"] {
        let cfg = load(name);
        let sets = cfg.feature_sets(1).unwrap();
        let bound: usize = sets.values().map(|s| 1usize << s.len()).sum();
        let mut engine = Engine::new(&cfg);
        let r = engine.spec_infer(&sets).unwrap();
        let p = &engine.metrics.progress;
        assert!(p.len() <= bound, "{name}: {} iterations, bound {bound}", p.len());
        assert!(p.windows(2).all(|w| w[0] < w[1]), "{name}: labels did not grow: {p:?}");
        assert!(p.last().is_none_or(|x| *x <= bound), "{name}");
        if let SpecInferResult::Safe(d) = r {
            assert!(safe(&cfg, &d), "{name}");
            let v = cfg.verifier();
            for q in cfg.queries() {
                assert_eq!(v.check_nontrivial(q, &d, &cfg.signatures()), Ok(true), "{name}/{}", q.name);
            }
        }
    }
}

#[test]
fn same_seed_same_interface() {
    let cfg = load("concat.cfg");
    let (a, _, ma) = interface(&cfg);
    let (b, _, mb) = interface(&cfg);
    assert_eq!(a, b);
    assert_eq!(ma.gathered, mb.gathered);
    assert_eq!(ma.cex_count, mb.cex_count);
    assert_eq!(ma.draws, mb.draws);
}
