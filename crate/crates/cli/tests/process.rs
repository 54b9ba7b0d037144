//! The SMT-LIB subprocess driver against the in-process solver.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use abduct_cli::{run_file, Overrides};
use abduct_core::logic::{Atom, MethodPredicate, Prop, Sort, Var};
use abduct_core::smt::{handshake_counts, ProcessSolver, SatCheck, Verifier};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn preds() -> Vec<MethodPredicate> {
    vec![
        MethodPredicate::new("mem", vec![Sort::container("c"), Sort::Element]),
        MethodPredicate::new("hd", vec![Sort::container("c"), Sort::Element]),
    ]
}

fn random_sentence(rng: &mut ChaCha8Rng, depth: u32, bound: &[Var]) -> Prop {
    let elems: Vec<Var> = ["a", "b"].iter().map(|n| Var::elem(n)).chain(bound.iter().cloned()).collect();
    let conts = [Var::container("s", "c"), Var::container("t", "c")];
    if depth == 0 || rng.gen_bool(0.3) {
        let e = &elems[rng.gen_range(0..elems.len())];
        return match rng.gen_range(0..4) {
            0 => Prop::atom(Atom::eq(e, &elems[rng.gen_range(0..elems.len())])),
            1 => Prop::atom(Atom::Bool(Var::boolean("p"))),
            2 => Prop::atom(Atom::pred("hd", &[&conts[rng.gen_range(0..2)], e])),
            _ => Prop::atom(Atom::pred("mem", &[&conts[rng.gen_range(0..2)], e])),
        };
    }
    match rng.gen_range(0..5) {
        0 => Prop::not(random_sentence(rng, depth - 1, bound)),
        1 => Prop::And(vec![random_sentence(rng, depth - 1, bound), random_sentence(rng, depth - 1, bound)]),
        2 => Prop::Or(vec![random_sentence(rng, depth - 1, bound), random_sentence(rng, depth - 1, bound)]),
        3 => Prop::implies(random_sentence(rng, depth - 1, bound), random_sentence(rng, depth - 1, bound)),
        // quantifiers only outside negations keep the sentence in EPR
        _ if bound.is_empty() => {
            let u = Var::elem("u");
            Prop::forall(vec![u.clone()], random_sentence(rng, depth - 1, &[u]))
        }
        _ => random_sentence(rng, depth - 1, bound),
    }
}

/// Drops forall below negation, implication premises and so on, by only
/// keeping sentences whose quantifiers occur under And/Or/Forall.
fn epr_safe(p: &Prop, positive: bool) -> bool {
    match p {
        Prop::Forall(_, b) => positive && epr_safe(b, positive),
        Prop::Not(b) => !b.has_quantifier(),
        Prop::And(v) | Prop::Or(v) => v.iter().all(|x| epr_safe(x, positive)),
        Prop::Implies(a, b) => !a.has_quantifier() && epr_safe(b, positive),
        Prop::Iff(a, b) => !a.has_quantifier() && !b.has_quantifier(),
        _ => true,
    }
}

fn epr_smt() -> Verifier {
    let solver = ProcessSolver::new(env!("CARGO_BIN_EXE_epr-smt"), vec![]);
    Verifier::new(Arc::new(solver), preds(), Duration::from_secs(10))
}

fn agree(other: &Verifier, label: &str, n: usize) {
    let ground = Verifier::ground(preds());
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut tried = 0;
    let (mut sat, mut unsat) = (0, 0);
    while tried < n {
        let p = random_sentence(&mut rng, 4, &[]);
        if !epr_safe(&p, true) {
            continue;
        }
        tried += 1;
        let g = ground.satisfiable(&p);
        let o = other.satisfiable(&p);
        match (&g, &o) {
            (SatCheck::Sat(_), SatCheck::Sat(_)) => sat += 1,
            (SatCheck::Unsat, SatCheck::Unsat) => unsat += 1,
            _ => panic!("{label} disagrees on {p}: ground {g:?}, other {o:?}"),
        }
    }
    assert!(sat > 0 && unsat > 0, "{label}: {sat} sat, {unsat} unsat");
}

#[test]
fn epr_smt_server_agrees_with_ground_solver() {
    agree(&epr_smt(), "epr-smt", 120);
    assert_eq!(handshake_counts().1, 0);
}

fn z3() -> Option<String> {
    let out = std::process::Command::new("z3").arg("--version").output().ok()?;
    out.status.success().then(|| "z3".to_string())
}

#[test]
fn z3_agrees_with_ground_solver_when_installed() {
    let Some(z3) = z3() else {
        eprintln!("skipped: z3 is not on PATH");
        return;
    };
    let solver = ProcessSolver::new(&z3, vec!["-in".into(), "-smt2".into()]);
    agree(&Verifier::new(Arc::new(solver), preds(), Duration::from_secs(10)), "z3", 120);
    assert_eq!(handshake_counts().1, 0);
}

#[test]
fn inference_through_the_subprocess_matches_in_process() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/concat.cfg");
    let ground = run_file(&path, &Overrides { solver: Some("ground".into()), ..Overrides::default() }).unwrap();
    let remote = run_file(&path, &Overrides { solver: Some(env!("CARGO_BIN_EXE_epr-smt").into()), ..Overrides::default() }).unwrap();
    assert_eq!(ground.outcome, "interface");
    assert_eq!(remote.outcome, "interface");
    assert_eq!(ground.specs, remote.specs);
}
