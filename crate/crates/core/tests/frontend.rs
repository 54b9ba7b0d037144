use std::collections::BTreeSet;
use std::path::PathBuf;

use abduct_core::frontend::{self, interface_text, parse, parse_interface, parse_spec, Stmt};
use abduct_core::logic::{Atom, Interface, PathStep, Prop, Var, VerificationQuery};
use proptest::prelude::*;

fn fixtures() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let mut out: Vec<(String, String)> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().to_string(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    assert!(out.len() >= 4, "fixtures missing from {}", dir.display());
    out
}

fn fixture(name: &str) -> String {
    fixtures().into_iter().find(|(n, _)| n == name).unwrap().1
}

/// Paths through a body, counted on the AST.
fn count_paths(body: &[Stmt]) -> usize {
    let Some((s, rest)) = body.split_first() else { return 0 };
    match s {
        Stmt::Let { .. } => count_paths(rest),
        Stmt::Return { .. } => 1,
        Stmt::If { then, els, .. } => {
            let t: Vec<Stmt> = then.iter().chain(rest).cloned().collect();
            let e: Vec<Stmt> = els.iter().chain(rest).cloned().collect();
            count_paths(&t) + count_paths(&e)
        }
        Stmt::Match { arms, .. } => arms
            .iter()
            .map(|a| count_paths(&a.body.iter().chain(rest).cloned().collect::<Vec<_>>()))
            .sum(),
    }
}

fn branch_points(body: &[Stmt]) -> usize {
    body.iter()
        .map(|s| match s {
            Stmt::If { then, els, .. } => 1 + branch_points(then).max(branch_points(els)),
            Stmt::Match { .. } => 64,
            _ => 0,
        })
        .fold(0, usize::saturating_add)
}

/// Variables a query may mention: inputs, placeholder arguments and
/// results, recursive call results, and constraint variables.
fn housed(q: &VerificationQuery) -> BTreeSet<Var> {
    let mut out: BTreeSet<Var> = q.inputs.iter().cloned().collect();
    for step in &q.trace {
        match step {
            PathStep::Apply(a) => {
                out.extend(a.args.iter().cloned());
                out.insert(a.result.clone());
            }
            PathStep::Recurse { args, result } => {
                out.extend(args.iter().cloned());
                out.insert(result.clone());
            }
            PathStep::Assume(p) => out.extend(p.free_vars()),
        }
    }
    out
}

/// The Boolean branch literals of a path, as (variable, polarity).
fn branch_literals(q: &VerificationQuery) -> Vec<(String, bool)> {
    q.constraints
        .iter()
        .filter_map(|c| match c {
            Prop::Atom(Atom::Bool(v)) => Some((v.name.clone(), true)),
            Prop::Not(b) => match b.as_ref() {
                Prop::Atom(Atom::Bool(v)) => Some((v.name.clone(), false)),
                _ => None,
            },
            _ => None,
        })
        .collect()
}

#[test]
fn concat_has_four_functions_and_two_predicates() {
    let ast = parse(&fixture("concat.cfg")).unwrap();
    assert_eq!(ast.functions.len(), 4);
    assert_eq!(ast.predicates.len(), 2);
    let names: BTreeSet<&str> = ast.functions.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, ["is_empty", "push", "tail", "top"].into());
    let preds: BTreeSet<&str> = ast.predicates.iter().map(|p| p.name.as_str()).collect();
    assert_eq!(preds, ["hd", "mem"].into());
}

#[test]
fn empty_input_is_rejected() {
    assert!(parse("").is_err());
    assert!(parse("  ; only a comment\n").is_err());
}

#[test]
fn syntax_errors_carry_a_position() {
    let e = parse("(datatype stack list)\n(predicate mem (stack elem) mem").unwrap_err();
    assert!(e.pos.is_some(), "{e}");
    let text = fixture("concat.cfg").replace("(let t (tail s1))", "(let t (tial s1))");
    let e = frontend::load(&text).unwrap_err();
    let p = e.pos.expect("unknown function has a position");
    assert!(e.msg.contains("tial"), "{e}");
    assert!(p.line > 1);
}

#[test]
fn unknown_and_unbound_names_are_rejected() {
    let base = fixture("concat.cfg");
    for (from, to) in [
        ("(let r (concat t s2))", "(let r (concat t s3))"),
        ("(predicate mem (stack elem) mem)", "(predicate mem (stack elem) nosuch)"),
        ("(datatype stack list)", "(datatype stack vector)"),
        ("(mem s1 u)", "(mem q u)"),
        ("(let v (push h r))", "(let h (push h r))"),
    ] {
        assert!(base.contains(from), "{from}");
        assert!(frontend::load(&base.replace(from, to)).is_err(), "{to} accepted");
    }
}

#[test]
fn printed_configs_parse_back_equal() {
    for (name, text) in fixtures() {
        let ast = parse(&text).unwrap();
        let printed = ast.to_string();
        let again = parse(&printed).unwrap_or_else(|e| panic!("{name}: {e}\n{printed}"));
        assert_eq!(ast, again, "{name}");
        assert_eq!(printed, again.to_string(), "{name}: printing is not stable");
    }
}

#[test]
fn query_count_matches_path_enumeration() {
    for (name, text) in fixtures() {
        let ast = parse(&text).unwrap();
        let cfg = ast.resolve().unwrap();
        assert_eq!(cfg.queries().len(), count_paths(&ast.client.body), "{name}");
        let b = branch_points(&ast.client.body);
        if b < 64 {
            assert_eq!(cfg.queries().len(), 1 << b, "{name}");
        }
    }
}

#[test]
fn concat_recursive_path_has_the_expected_shape() {
    let cfg = frontend::load(&fixture("concat.cfg")).unwrap();
    let q = cfg.queries().iter().find(|q| q.name == "concat[!b]").unwrap();
    let fs: Vec<&str> = q.sigma.iter().map(|a| a.function.as_str()).collect();
    assert_eq!(fs, ["is_empty", "top", "tail", "push"]);
    assert!(q.constraints.iter().any(|c| c.to_string().contains('b') && matches!(c, Prop::Not(_))));
    assert!(q.trace.iter().any(|s| matches!(s, PathStep::Recurse { .. })));
    let base = cfg.queries().iter().find(|q| q.name == "concat[b]").unwrap();
    assert!(!base.trace.iter().any(|s| matches!(s, PathStep::Recurse { .. })));
}

#[test]
fn every_query_variable_is_housed() {
    for (name, text) in fixtures() {
        let cfg = frontend::load(&text).unwrap();
        for q in cfg.queries() {
            let h = housed(q);
            for v in q.phi.free_vars() {
                assert!(h.contains(&v), "{name}/{}: `{v}` is not bound on its path", q.name);
            }
            for a in &q.sigma {
                for v in a.args.iter().chain([&a.result]) {
                    assert!(h.contains(v));
                }
            }
        }
    }
}

#[test]
fn branch_constraints_partition_valuations() {
    for (name, text) in fixtures() {
        let cfg = frontend::load(&text).unwrap();
        let lits: Vec<Vec<(String, bool)>> = cfg.queries().iter().map(branch_literals).collect();
        // paths distinguished only by match arms differ in their constructor applications
        for i in 0..lits.len() {
            for j in i + 1..lits.len() {
                let opposed = lits[i].iter().any(|(v, b)| lits[j].iter().any(|(w, c)| v == w && b != c));
                let ctor = |q: &VerificationQuery| q.sigma.iter().map(|a| a.function.clone()).collect::<Vec<_>>();
                let (qi, qj) = (&cfg.queries()[i], &cfg.queries()[j]);
                assert!(opposed || ctor(qi) != ctor(qj), "{name}: {} and {} overlap", qi.name, qj.name);
            }
        }
    }
}

/// Body of `n` sequential branches; branch i optionally pushes.
fn sequential(n: usize, pushes: &[bool]) -> String {
    let mut body = String::new();
    for i in 0..n {
        let then = if pushes[i] { format!("(let x{i} (top s2)) (let p{i} (push x{i} s1))") } else { String::new() };
        body.push_str(&format!("(let b{i} (is_empty s2)) (if b{i} ({then}) ()) "));
    }
    body.push_str("(return s1)");
    format!(
        "(datatype stack list)
         (predicate mem (stack elem) mem)
         (function is_empty ((s stack)) (nu bool) list-is-empty)
         (function top ((s stack)) (nu elem) list-top)
         (function push ((x elem) (s stack)) (nu stack) list-push)
         (client f ((s1 stack) (s2 stack)) (nu stack)
           (ensures (forall (u) (=> (mem nu u) (mem s1 u))))
           (body {body}))"
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sequential_branches_give_exclusive_exhaustive_paths(n in 0usize..6, pushes in prop::collection::vec(any::<bool>(), 6)) {
        let text = sequential(n, &pushes);
        let ast = parse(&text).unwrap();
        prop_assert_eq!(parse(&ast.to_string()).unwrap(), ast.clone());
        let cfg = ast.resolve().unwrap();
        prop_assert_eq!(cfg.queries().len(), 1 << n);
        let lits: Vec<Vec<(String, bool)>> = cfg.queries().iter().map(branch_literals).collect();
        for bits in 0u32..(1 << n) {
            let val = |v: &str| bits >> v[1..].parse::<u32>().unwrap() & 1 == 1;
            let hits = lits.iter().filter(|l| l.iter().all(|(v, b)| val(v) == *b)).count();
            prop_assert_eq!(hits, 1, "valuation {:b}", bits);
        }
        for q in cfg.queries() {
            let h = housed(q);
            prop_assert!(q.phi.free_vars().iter().all(|v| h.contains(v)));
        }
    }
}

#[test]
fn interfaces_round_trip_through_text() {
    let cfg = frontend::load(&fixture("concat.cfg")).unwrap();
    let mut d = Interface::all_top(&cfg.functions());
    d = d.with("push", parse_spec(&cfg, "push", "(forall (u) (<=> (mem nu u) (or (mem s u) (= x u))))").unwrap());
    d = d.with("is_empty", parse_spec(&cfg, "is_empty", "(forall (u) (=> nu (not (mem s u))))").unwrap());
    let text = interface_text(&d);
    assert_eq!(parse_interface(&cfg, &text).unwrap(), d);
}

#[test]
fn spec_parser_checks_sorts_and_scope() {
    let cfg = frontend::load(&fixture("concat.cfg")).unwrap();
    assert!(parse_spec(&cfg, "push", "(mem x s)").is_err());
    assert!(parse_spec(&cfg, "push", "(mem s y)").is_err());
    assert!(parse_spec(&cfg, "push", "(forall (u) (mem nu u v))").is_err());
    assert!(parse_spec(&cfg, "push", "(forall ((u stack)) (mem nu x))").is_err());
    assert!(parse_spec(&cfg, "nosuch", "true").is_err());
    // specs are prenex universal
    assert!(parse_spec(&cfg, "is_empty", "(=> nu (forall (u) (not (mem s u))))").is_err());
    assert!(parse_spec(&cfg, "top", "(forall (u) (=> (hd s u) (= nu u)))").is_ok());
}
