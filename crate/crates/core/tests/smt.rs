//! The ground EPR solver against a brute-force finite-model search.

use std::collections::BTreeSet;

use abduct_core::logic::{Atom, MethodPredicate, Prop, Sort, ValueId, Var};
use abduct_core::smt::{handshake_counts, SatCheck, Verifier};
use proptest::prelude::*;

// Vocabulary: elements a, b; containers s, t of sort c; Bool p; m(c, elem).
#[derive(Clone, Debug)]
enum E {
    A,
    B,
    U,
}

#[derive(Clone, Debug)]
enum C {
    S,
    T,
}

#[derive(Clone, Debug)]
enum F {
    Mem(C, E),
    Eq(E, E),
    P,
    Not(Box<F>),
    And(Box<F>, Box<F>),
    Or(Box<F>, Box<F>),
}

fn elem(with_u: bool) -> BoxedStrategy<E> {
    if with_u {
        prop_oneof![Just(E::A), Just(E::B), Just(E::U)].boxed()
    } else {
        prop_oneof![Just(E::A), Just(E::B)].boxed()
    }
}

fn qf(with_u: bool) -> impl Strategy<Value = F> {
    let c = prop_oneof![Just(C::S), Just(C::T)];
    let leaf = prop_oneof![
        (c, elem(with_u)).prop_map(|(c, e)| F::Mem(c, e)),
        (elem(with_u), elem(with_u)).prop_map(|(x, y)| F::Eq(x, y)),
        Just(F::P),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| F::Not(Box::new(f))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| F::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| F::Or(Box::new(a), Box::new(b))),
        ]
    })
}

fn evar(e: &E) -> Var {
    Var::elem(match e {
        E::A => "a",
        E::B => "b",
        E::U => "u",
    })
}

fn cvar(c: &C) -> Var {
    Var::container(if matches!(c, C::S) { "s" } else { "t" }, "c")
}

fn to_prop(f: &F) -> Prop {
    match f {
        F::Mem(c, e) => Prop::atom(Atom::pred("m", &[&cvar(c), &evar(e)])),
        F::Eq(x, y) => Prop::atom(Atom::eq(&evar(x), &evar(y))),
        F::P => Prop::atom(Atom::Bool(Var::boolean("p"))),
        F::Not(a) => Prop::not(to_prop(a)),
        F::And(a, b) => Prop::And(vec![to_prop(a), to_prop(b)]),
        F::Or(a, b) => Prop::Or(vec![to_prop(a), to_prop(b)]),
    }
}

/// A finite structure for the vocabulary.
struct Model {
    elems: Vec<i64>,
    a: i64,
    b: i64,
    s: u32,
    t: u32,
    p: bool,
    m: BTreeSet<(u32, i64)>,
}

impl Model {
    fn truth(&self, f: &F, u: i64) -> bool {
        let e = |x: &E| match x {
            E::A => self.a,
            E::B => self.b,
            E::U => u,
        };
        match f {
            F::Mem(c, x) => self.m.contains(&(if matches!(c, C::S) { self.s } else { self.t }, e(x))),
            F::Eq(x, y) => e(x) == e(y),
            F::P => self.p,
            F::Not(a) => !self.truth(a, u),
            F::And(a, b) => self.truth(a, u) && self.truth(b, u),
            F::Or(a, b) => self.truth(a, u) || self.truth(b, u),
        }
    }

    /// g ∧ ∀u. h, or its negation.
    fn sentence(&self, g: &F, h: &F, negated: bool) -> bool {
        let v = self.truth(g, 0) && self.elems.iter().all(|u| self.truth(h, *u));
        v != negated
    }
}

/// Domains of up to three elements and two containers suffice: the
/// sentence has two element constants and at most one existential.
fn brute_force(g: &F, h: &F, negated: bool) -> bool {
    for ne in 1..=3i64 {
        let elems: Vec<i64> = (0..ne).collect();
        for nc in 1..=2u32 {
            let cells: Vec<(u32, i64)> = (0..nc).flat_map(|c| elems.iter().map(move |e| (c, *e))).collect();
            for a in 0..ne {
                for b in 0..ne {
                    for s in 0..nc {
                        for t in 0..nc {
                            for p in [false, true] {
                                for bits in 0u32..(1 << cells.len()) {
                                    let m = cells.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, x)| *x).collect();
                                    let model = Model { elems: elems.clone(), a, b, s, t, p, m };
                                    if model.sentence(g, h, negated) {
                                        return true;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    false
}

fn from_sample(s: &abduct_core::logic::Sample) -> Model {
    let elem = |n: &str| match s.assignment.get(n) {
        Some(ValueId::Elem(e)) => *e,
        other => panic!("{n} bound to {other:?}"),
    };
    let cont = |n: &str| match s.assignment.get(n) {
        Some(ValueId::Container(c)) => *c,
        other => panic!("{n} bound to {other:?}"),
    };
    let m = s
        .relations
        .get("m")
        .into_iter()
        .flatten()
        .map(|t| match t.as_slice() {
            [ValueId::Container(c), ValueId::Elem(e)] => (*c, *e),
            other => panic!("bad tuple {other:?}"),
        })
        .collect();
    Model {
        elems: s.elements.iter().copied().collect(),
        a: elem("a"),
        b: elem("b"),
        s: cont("s"),
        t: cont("t"),
        p: matches!(s.assignment.get("p"), Some(ValueId::Bool(true))),
        m,
    }
}

fn verifier() -> Verifier {
    Verifier::ground(vec![MethodPredicate::new("m", vec![Sort::container("c"), Sort::Element])])
}

/// Mentions every constant so the model assigns all of them.
fn anchor() -> Prop {
    let a = Atom::pred("m", &[&Var::container("s", "c"), &Var::elem("a")]);
    let b = Atom::pred("m", &[&Var::container("t", "c"), &Var::elem("b")]);
    let p = Prop::atom(Atom::Bool(Var::boolean("p")));
    Prop::Or(vec![Prop::And(vec![Prop::atom(a.clone()), Prop::not(Prop::atom(a))]), Prop::atom(b.clone()), Prop::not(Prop::atom(b)), p])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn ground_solver_matches_brute_force(g in qf(false), h in qf(true), negated in any::<bool>()) {
        let u = Var::elem("u");
        let body = Prop::And(vec![to_prop(&g), Prop::forall(vec![u], to_prop(&h))]);
        let sentence = Prop::And(vec![anchor(), if negated { Prop::not(body) } else { body }]);
        let expected = brute_force(&g, &h, negated);
        match verifier().satisfiable(&sentence) {
            SatCheck::Sat(s) => {
                prop_assert!(expected, "solver found a model the oracle says cannot exist: {}", s);
                prop_assert!(from_sample(&s).sentence(&g, &h, negated), "returned model fails: {}", s);
            }
            SatCheck::Unsat => prop_assert!(!expected, "solver missed a model of {}", sentence),
            SatCheck::Unknown(r) => prop_assert!(false, "unknown: {}", r),
        }
    }
}

#[test]
fn validity_of_simple_laws() {
    let v = verifier();
    let (s, a, b) = (Var::container("s", "c"), Var::elem("a"), Var::elem("b"));
    let u = Var::elem("u");
    let m = |x: &Var| Prop::atom(Atom::pred("m", &[&s, x]));
    // instantiation
    let inst = Prop::implies(Prop::forall(vec![u.clone()], m(&u)), m(&a));
    assert!(v.verify(&inst).is_ok());
    // congruence
    let cong = Prop::implies(Prop::And(vec![Prop::atom(Atom::eq(&a, &b)), m(&a)]), m(&b));
    assert!(v.verify(&cong).is_ok());
    // not valid: m(s,a) ⟹ m(s,b)
    assert!(!v.verify(&Prop::implies(m(&a), m(&b))).is_ok());
}

#[test]
fn models_pass_the_handshake() {
    let v = verifier();
    let s = Var::container("s", "c");
    let a = Var::elem("a");
    let _ = v.satisfiable(&Prop::atom(Atom::pred("m", &[&s, &a])));
    let (checked, violations) = handshake_counts();
    assert!(checked >= 1);
    assert_eq!(violations, 0);
}

#[test]
fn oracle_and_solver_on_fixed_cases() {
    let u = Var::elem("u");
    let cases = [
        // m(s,a) ∧ ∀u ¬m(s,u): unsat
        (F::Mem(C::S, E::A), F::Not(Box::new(F::Mem(C::S, E::U))), false),
        // a≠b ∧ ∀u (u=a ∨ m(t,u)): sat
        (F::Not(Box::new(F::Eq(E::A, E::B))), F::Or(Box::new(F::Eq(E::U, E::A)), Box::new(F::Mem(C::T, E::U))), false),
        // ¬(p ∧ ∀u p): sat
        (F::P, F::P, true),
    ];
    for (g, h, negated) in cases {
        let body = Prop::And(vec![to_prop(&g), Prop::forall(vec![u.clone()], to_prop(&h))]);
        let sentence = Prop::And(vec![anchor(), if negated { Prop::not(body) } else { body }]);
        let got = matches!(verifier().satisfiable(&sentence), SatCheck::Sat(_));
        assert_eq!(got, brute_force(&g, &h, negated), "{sentence}");
    }
    assert!(!brute_force(&F::Mem(C::S, E::A), &F::Not(Box::new(F::Mem(C::S, E::U))), false));
}
