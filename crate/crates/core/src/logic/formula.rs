use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    /// An uninterpreted datatype sort, named after its declaration.
    Container(String),
    Element,
    Bool,
}

impl Sort {
    pub fn container(name: &str) -> Sort {
        Sort::Container(name.to_string())
    }

    pub fn is_container(&self) -> bool {
        matches!(self, Sort::Container(_))
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Container(n) => write!(f, "{n}"),
            Sort::Element => write!(f, "elem"),
            Sort::Bool => write!(f, "bool"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Var {
    pub name: String,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: &str, sort: Sort) -> Var {
        Var { name: name.to_string(), sort }
    }

    pub fn elem(name: &str) -> Var {
        Var::new(name, Sort::Element)
    }

    pub fn boolean(name: &str) -> Var {
        Var::new(name, Sort::Bool)
    }

    pub fn container(name: &str, sort: &str) -> Var {
        Var::new(name, Sort::container(sort))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Var(Var),
    /// Element literal.
    Lit(i64),
}

impl Term {
    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(v) => v.sort.clone(),
            Term::Lit(_) => Sort::Element,
        }
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            Term::Lit(_) => None,
        }
    }
}

impl From<Var> for Term {
    fn from(v: Var) -> Term {
        Term::Var(v)
    }
}

impl From<&Var> for Term {
    fn from(v: &Var) -> Term {
        Term::Var(v.clone())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Lit(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Atom {
    Pred { name: String, args: Vec<Term> },
    Eq(Term, Term),
    /// A Boolean-sorted variable used as a proposition.
    Bool(Var),
}

impl Atom {
    pub fn pred(name: &str, args: &[&Var]) -> Atom {
        Atom::Pred {
            name: name.to_string(),
            args: args.iter().map(|v| Term::Var((*v).clone())).collect(),
        }
    }

    pub fn eq(a: &Var, b: &Var) -> Atom {
        Atom::Eq(Term::Var(a.clone()), Term::Var(b.clone()))
    }

    pub fn terms(&self) -> Vec<Term> {
        match self {
            Atom::Pred { args, .. } => args.clone(),
            Atom::Eq(a, b) => vec![a.clone(), b.clone()],
            Atom::Bool(v) => vec![Term::Var(v.clone())],
        }
    }

    /// Same atom up to orientation of equalities.
    pub fn same(&self, other: &Atom) -> bool {
        match (self, other) {
            (Atom::Eq(a, b), Atom::Eq(c, d)) => (a == c && b == d) || (a == d && b == c),
            _ => self == other,
        }
    }

    fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Atom {
        match self {
            Atom::Pred { name, args } => Atom::Pred {
                name: name.clone(),
                args: args.iter().map(|t| f(t)).collect(),
            },
            Atom::Eq(a, b) => Atom::Eq(f(a), f(b)),
            Atom::Bool(v) => match f(&Term::Var(v.clone())) {
                Term::Var(w) => Atom::Bool(w),
                Term::Lit(_) => panic!("boolean variable substituted by an element literal"),
            },
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Pred { name, args } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Atom::Eq(a, b) => write!(f, "{a} = {b}"),
            Atom::Bool(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Prop {
    True,
    False,
    Atom(Atom),
    Not(Box<Prop>),
    And(Vec<Prop>),
    Or(Vec<Prop>),
    Implies(Box<Prop>, Box<Prop>),
    Iff(Box<Prop>, Box<Prop>),
    Forall(Vec<Var>, Box<Prop>),
}

impl Prop {
    pub fn atom(a: Atom) -> Prop {
        Prop::Atom(a)
    }

    pub fn not(p: Prop) -> Prop {
        match p {
            Prop::True => Prop::False,
            Prop::False => Prop::True,
            Prop::Not(inner) => *inner,
            p => Prop::Not(Box::new(p)),
        }
    }

    /// Conjunction with flattening and unit simplification.
    pub fn and(ps: Vec<Prop>) -> Prop {
        let mut out = Vec::new();
        for p in ps {
            match p {
                Prop::True => {}
                Prop::False => return Prop::False,
                Prop::And(inner) => out.extend(inner),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => Prop::True,
            1 => out.pop().unwrap(),
            _ => Prop::And(out),
        }
    }

    pub fn or(ps: Vec<Prop>) -> Prop {
        let mut out = Vec::new();
        for p in ps {
            match p {
                Prop::False => {}
                Prop::True => return Prop::True,
                Prop::Or(inner) => out.extend(inner),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => Prop::False,
            1 => out.pop().unwrap(),
            _ => Prop::Or(out),
        }
    }

    pub fn implies(a: Prop, b: Prop) -> Prop {
        match (&a, &b) {
            (Prop::True, _) => b,
            (Prop::False, _) | (_, Prop::True) => Prop::True,
            _ => Prop::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn iff(a: Prop, b: Prop) -> Prop {
        Prop::Iff(Box::new(a), Box::new(b))
    }

    pub fn forall(vars: Vec<Var>, body: Prop) -> Prop {
        if vars.is_empty() {
            return body;
        }
        match body {
            Prop::True => Prop::True,
            Prop::False => Prop::False,
            body => Prop::Forall(vars, Box::new(body)),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<Var>) {
        match self {
            Prop::True | Prop::False => {}
            Prop::Atom(a) => {
                for t in a.terms() {
                    if let Term::Var(v) = t {
                        if !bound.contains(&v.name) {
                            out.insert(v);
                        }
                    }
                }
            }
            Prop::Not(p) => p.collect_free(bound, out),
            Prop::And(ps) | Prop::Or(ps) => ps.iter().for_each(|p| p.collect_free(bound, out)),
            Prop::Implies(a, b) | Prop::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Prop::Forall(vs, body) => {
                let n = bound.len();
                bound.extend(vs.iter().map(|v| v.name.clone()));
                body.collect_free(bound, out);
                bound.truncate(n);
            }
        }
    }

    /// Every name used anywhere, bound or free.
    pub fn all_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Prop::True | Prop::False => {}
            Prop::Atom(a) => {
                for t in a.terms() {
                    if let Term::Var(v) = t {
                        out.insert(v.name);
                    }
                }
            }
            Prop::Not(p) => p.all_names(out),
            Prop::And(ps) | Prop::Or(ps) => ps.iter().for_each(|p| p.all_names(out)),
            Prop::Implies(a, b) | Prop::Iff(a, b) => {
                a.all_names(out);
                b.all_names(out);
            }
            Prop::Forall(vs, body) => {
                out.extend(vs.iter().map(|v| v.name.clone()));
                body.all_names(out);
            }
        }
    }

    pub fn atoms(&self, out: &mut Vec<Atom>) {
        match self {
            Prop::True | Prop::False => {}
            Prop::Atom(a) => {
                if !out.contains(a) {
                    out.push(a.clone())
                }
            }
            Prop::Not(p) | Prop::Forall(_, p) => p.atoms(out),
            Prop::And(ps) | Prop::Or(ps) => ps.iter().for_each(|p| p.atoms(out)),
            Prop::Implies(a, b) | Prop::Iff(a, b) => {
                a.atoms(out);
                b.atoms(out);
            }
        }
    }

    pub fn has_quantifier(&self) -> bool {
        match self {
            Prop::True | Prop::False | Prop::Atom(_) => false,
            Prop::Forall(..) => true,
            Prop::Not(p) => p.has_quantifier(),
            Prop::And(ps) | Prop::Or(ps) => ps.iter().any(|p| p.has_quantifier()),
            Prop::Implies(a, b) | Prop::Iff(a, b) => a.has_quantifier() || b.has_quantifier(),
        }
    }

    /// Capture-avoiding substitution of free variables by terms (keyed by name).
    pub fn subst(&self, map: &BTreeMap<String, Term>) -> Prop {
        let mut avoid = BTreeSet::new();
        for t in map.values() {
            if let Term::Var(v) = t {
                avoid.insert(v.name.clone());
            }
        }
        self.subst_in(map, &avoid)
    }

    fn subst_in(&self, map: &BTreeMap<String, Term>, avoid: &BTreeSet<String>) -> Prop {
        match self {
            Prop::True => Prop::True,
            Prop::False => Prop::False,
            Prop::Atom(a) => Prop::Atom(a.map_terms(&mut |t| match t {
                Term::Var(v) => map.get(&v.name).cloned().unwrap_or_else(|| t.clone()),
                Term::Lit(_) => t.clone(),
            })),
            Prop::Not(p) => Prop::Not(Box::new(p.subst_in(map, avoid))),
            Prop::And(ps) => Prop::And(ps.iter().map(|p| p.subst_in(map, avoid)).collect()),
            Prop::Or(ps) => Prop::Or(ps.iter().map(|p| p.subst_in(map, avoid)).collect()),
            Prop::Implies(a, b) => Prop::Implies(
                Box::new(a.subst_in(map, avoid)),
                Box::new(b.subst_in(map, avoid)),
            ),
            Prop::Iff(a, b) => Prop::Iff(
                Box::new(a.subst_in(map, avoid)),
                Box::new(b.subst_in(map, avoid)),
            ),
            Prop::Forall(vs, body) => {
                let mut inner = map.clone();
                for v in vs {
                    inner.remove(&v.name);
                }
                let mut used = BTreeSet::new();
                body.all_names(&mut used);
                used.extend(avoid.iter().cloned());
                let mut new_vs = Vec::with_capacity(vs.len());
                for v in vs {
                    if avoid.contains(&v.name) {
                        let fresh = fresh_name(&v.name, &used);
                        used.insert(fresh.clone());
                        let nv = Var::new(&fresh, v.sort.clone());
                        inner.insert(v.name.clone(), Term::Var(nv.clone()));
                        new_vs.push(nv);
                    } else {
                        new_vs.push(v.clone());
                    }
                }
                let mut inner_avoid = avoid.clone();
                for t in inner.values() {
                    if let Term::Var(v) = t {
                        inner_avoid.insert(v.name.clone());
                    }
                }
                Prop::Forall(new_vs, Box::new(body.subst_in(&inner, &inner_avoid)))
            }
        }
    }

    /// Propositional evaluation of a quantifier-free proposition.
    pub fn eval_with(&self, atom: &mut impl FnMut(&Atom) -> bool) -> bool {
        match self {
            Prop::True => true,
            Prop::False => false,
            Prop::Atom(a) => atom(a),
            Prop::Not(p) => !p.eval_with(atom),
            Prop::And(ps) => ps.iter().all(|p| p.eval_with(atom)),
            Prop::Or(ps) => ps.iter().any(|p| p.eval_with(atom)),
            Prop::Implies(a, b) => !a.eval_with(atom) || b.eval_with(atom),
            Prop::Iff(a, b) => a.eval_with(atom) == b.eval_with(atom),
            Prop::Forall(..) => panic!("eval_with called on a quantified proposition"),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Prop::True | Prop::False | Prop::Atom(_) => 1,
            Prop::Not(p) | Prop::Forall(_, p) => 1 + p.size(),
            Prop::And(ps) | Prop::Or(ps) => 1 + ps.iter().map(|p| p.size()).sum::<usize>(),
            Prop::Implies(a, b) | Prop::Iff(a, b) => 1 + a.size() + b.size(),
        }
    }
}

pub fn fresh_name(base: &str, used: &BTreeSet<String>) -> String {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit() || c == '_');
    let stem = if stem.is_empty() { base } else { stem };
    (1..)
        .map(|i| format!("{stem}_{i}"))
        .find(|n| !used.contains(n))
        .unwrap()
}

fn prec(p: &Prop) -> u8 {
    match p {
        Prop::True | Prop::False | Prop::Atom(_) | Prop::Not(_) => 5,
        Prop::And(_) => 4,
        Prop::Or(_) => 3,
        Prop::Implies(..) => 2,
        Prop::Iff(..) => 1,
        Prop::Forall(..) => 0,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, p: &Prop, min: u8) -> fmt::Result {
    if prec(p) < min {
        write!(f, "({p})")
    } else {
        write!(f, "{p}")
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prop::True => write!(f, "true"),
            Prop::False => write!(f, "false"),
            Prop::Atom(a @ Atom::Eq(..)) => write!(f, "{a}"),
            Prop::Atom(a) => write!(f, "{a}"),
            Prop::Not(p) => match &**p {
                Prop::Atom(Atom::Eq(a, b)) => write!(f, "{a} != {b}"),
                p => {
                    write!(f, "!")?;
                    write_child(f, p, 5)
                }
            },
            Prop::And(ps) | Prop::Or(ps) => {
                let (op, lvl) = if matches!(self, Prop::And(_)) {
                    (" & ", 5)
                } else {
                    (" | ", 4)
                };
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{op}")?;
                    }
                    write_child(f, p, lvl)?;
                }
                Ok(())
            }
            Prop::Implies(a, b) => {
                write_child(f, a, 3)?;
                write!(f, " => ")?;
                write_child(f, b, 2)
            }
            Prop::Iff(a, b) => {
                write_child(f, a, 2)?;
                write!(f, " <=> ")?;
                write_child(f, b, 2)
            }
            Prop::Forall(vs, body) => {
                write!(f, "forall")?;
                for v in vs {
                    write!(f, " {}", v.name)?;
                }
                write!(f, ". {body}")
            }
        }
    }
}

/// A prenex-universal formula: the quantifier prefix is kept apart from a
/// quantifier-free body.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Formula {
    pub quantified: Vec<Var>,
    pub body: Prop,
}

impl Formula {
    pub fn new(quantified: Vec<Var>, body: Prop) -> Formula {
        debug_assert!(!body.has_quantifier(), "formula body must be quantifier-free");
        Formula { quantified, body }
    }

    pub fn top() -> Formula {
        Formula { quantified: vec![], body: Prop::True }
    }

    pub fn bottom() -> Formula {
        Formula { quantified: vec![], body: Prop::False }
    }

    pub fn to_prop(&self) -> Prop {
        Prop::forall(self.quantified.clone(), self.body.clone())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.quantified.is_empty() {
            write!(f, "{}", self.body)
        } else {
            write!(f, "{}", self.to_prop())
        }
    }
}
