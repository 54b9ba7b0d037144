//! Effectively propositional problems: NNF, Skolemization of outer
//! existentials into constants, and a universal-only matrix.

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::{Atom, MethodPredicate, Prop, Sort, Term, Var};

use super::SmtError;

/// Negation normal form with explicit existentials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Nnf {
    True,
    False,
    Lit(bool, Atom),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
    Forall(Vec<Var>, Box<Nnf>),
    Exists(Vec<Var>, Box<Nnf>),
}

pub fn nnf(p: &Prop, pos: bool) -> Nnf {
    match p {
        Prop::True => if pos { Nnf::True } else { Nnf::False },
        Prop::False => if pos { Nnf::False } else { Nnf::True },
        Prop::Atom(a) => Nnf::Lit(pos, a.clone()),
        Prop::Not(q) => nnf(q, !pos),
        Prop::And(ps) if pos => Nnf::And(ps.iter().map(|q| nnf(q, true)).collect()),
        Prop::And(ps) => Nnf::Or(ps.iter().map(|q| nnf(q, false)).collect()),
        Prop::Or(ps) if pos => Nnf::Or(ps.iter().map(|q| nnf(q, true)).collect()),
        Prop::Or(ps) => Nnf::And(ps.iter().map(|q| nnf(q, false)).collect()),
        Prop::Implies(a, b) if pos => Nnf::Or(vec![nnf(a, false), nnf(b, true)]),
        Prop::Implies(a, b) => Nnf::And(vec![nnf(a, true), nnf(b, false)]),
        Prop::Iff(a, b) => {
            // (a ∧ b) ∨ (¬a ∧ ¬b), or its negation (a ∧ ¬b) ∨ (¬a ∧ b)
            Nnf::Or(vec![
                Nnf::And(vec![nnf(a, true), nnf(b, pos)]),
                Nnf::And(vec![nnf(a, false), nnf(b, !pos)]),
            ])
        }
        Prop::Forall(vs, body) if pos => Nnf::Forall(vs.clone(), Box::new(nnf(body, true))),
        Prop::Forall(vs, body) => Nnf::Exists(vs.clone(), Box::new(nnf(body, false))),
    }
}

/// A satisfiability problem in the EPR fragment.
#[derive(Clone, Debug)]
pub struct EprProblem {
    /// Free constants (program variables and Skolem constants).
    pub constants: Vec<Var>,
    /// Element literals, pairwise distinct.
    pub literals: BTreeSet<i64>,
    pub predicates: Vec<MethodPredicate>,
    /// Universally quantified matrix in NNF with only `Forall` binders.
    pub matrix: Nnf,
}

impl EprProblem {
    /// Prepares `p` for a satisfiability check: free variables become
    /// constants, outer existentials are Skolemized.
    pub fn satisfiability(p: &Prop, predicates: &[MethodPredicate]) -> Result<EprProblem, SmtError> {
        let mut constants: Vec<Var> = p.free_vars().into_iter().collect();
        let mut used: BTreeSet<String> = BTreeSet::new();
        p.all_names(&mut used);
        let mut sk = Skolemizer { used, constants: &mut constants, counter: 0 };
        let matrix = sk.run(nnf(p, true), false, &BTreeMap::new())?;
        let mut literals = BTreeSet::new();
        collect_literals(&matrix, &mut literals);
        let mut predicates = predicates.to_vec();
        collect_predicates(&matrix, &mut predicates)?;
        let mut seen = BTreeSet::new();
        for c in &constants {
            if !seen.insert(c.name.clone()) {
                return Err(SmtError::Encoding(format!("`{}` is used with two sorts", c.name)));
            }
        }
        Ok(EprProblem { constants, literals, predicates, matrix })
    }

    pub fn sorts(&self) -> BTreeSet<Sort> {
        let mut out = BTreeSet::new();
        for c in &self.constants {
            out.insert(c.sort.clone());
        }
        for p in &self.predicates {
            out.extend(p.signature.iter().cloned());
        }
        if !self.literals.is_empty() {
            out.insert(Sort::Element);
        }
        collect_bound_sorts(&self.matrix, &mut out);
        out.remove(&Sort::Bool);
        out
    }
}

struct Skolemizer<'a> {
    used: BTreeSet<String>,
    constants: &'a mut Vec<Var>,
    counter: usize,
}

impl Skolemizer<'_> {
    fn run(&mut self, n: Nnf, under_forall: bool, ren: &BTreeMap<String, Term>) -> Result<Nnf, SmtError> {
        Ok(match n {
            Nnf::True | Nnf::False => n,
            Nnf::Lit(b, a) => Nnf::Lit(b, rename_atom(&a, ren)),
            Nnf::And(v) => Nnf::And(v.into_iter().map(|x| self.run(x, under_forall, ren)).collect::<Result<_, _>>()?),
            Nnf::Or(v) => Nnf::Or(v.into_iter().map(|x| self.run(x, under_forall, ren)).collect::<Result<_, _>>()?),
            Nnf::Forall(vs, body) => {
                if let Some(v) = vs.iter().find(|v| v.sort == Sort::Bool) {
                    return Err(SmtError::NotEpr(format!("quantifier over boolean `{}`", v.name)));
                }
                let mut inner = ren.clone();
                for v in &vs {
                    inner.remove(&v.name);
                }
                Nnf::Forall(vs, Box::new(self.run(*body, true, &inner)?))
            }
            Nnf::Exists(vs, body) => {
                if under_forall {
                    return Err(SmtError::NotEpr("existential under a universal".into()));
                }
                let mut inner = ren.clone();
                for v in &vs {
                    let name = loop {
                        let n = format!("sk!{}", self.counter);
                        self.counter += 1;
                        if !self.used.contains(&n) {
                            break n;
                        }
                    };
                    let c = Var::new(&name, v.sort.clone());
                    self.constants.push(c.clone());
                    inner.insert(v.name.clone(), Term::Var(c));
                }
                self.run(*body, false, &inner)?
            }
        })
    }
}

fn rename_atom(a: &Atom, ren: &BTreeMap<String, Term>) -> Atom {
    if ren.is_empty() {
        return a.clone();
    }
    let f = |t: &Term| match t {
        Term::Var(v) => ren.get(&v.name).cloned().unwrap_or_else(|| t.clone()),
        Term::Lit(_) => t.clone(),
    };
    match a {
        Atom::Pred { name, args } => Atom::Pred { name: name.clone(), args: args.iter().map(f).collect() },
        Atom::Eq(x, y) => Atom::Eq(f(x), f(y)),
        Atom::Bool(v) => match ren.get(&v.name) {
            Some(Term::Var(w)) => Atom::Bool(w.clone()),
            _ => a.clone(),
        },
    }
}

fn collect_literals(n: &Nnf, out: &mut BTreeSet<i64>) {
    match n {
        Nnf::True | Nnf::False => {}
        Nnf::Lit(_, a) => {
            for t in a.terms() {
                if let Term::Lit(i) = t {
                    out.insert(i);
                }
            }
        }
        Nnf::And(v) | Nnf::Or(v) => v.iter().for_each(|x| collect_literals(x, out)),
        Nnf::Forall(_, b) | Nnf::Exists(_, b) => collect_literals(b, out),
    }
}

fn collect_bound_sorts(n: &Nnf, out: &mut BTreeSet<Sort>) {
    match n {
        Nnf::True | Nnf::False | Nnf::Lit(..) => {}
        Nnf::And(v) | Nnf::Or(v) => v.iter().for_each(|x| collect_bound_sorts(x, out)),
        Nnf::Forall(vs, b) | Nnf::Exists(vs, b) => {
            out.extend(vs.iter().map(|v| v.sort.clone()));
            collect_bound_sorts(b, out);
        }
    }
}

fn collect_predicates(n: &Nnf, out: &mut Vec<MethodPredicate>) -> Result<(), SmtError> {
    match n {
        Nnf::True | Nnf::False => Ok(()),
        Nnf::Lit(_, Atom::Pred { name, args }) => {
            let sig: Vec<Sort> = args.iter().map(|t| t.sort()).collect();
            match out.iter().find(|p| &p.name == name) {
                Some(p) if p.signature != sig => Err(SmtError::Encoding(format!(
                    "predicate `{name}` applied with sorts {sig:?}, declared {:?}",
                    p.signature
                ))),
                Some(_) => Ok(()),
                None => {
                    out.push(MethodPredicate { name: name.clone(), signature: sig });
                    Ok(())
                }
            }
        }
        Nnf::Lit(..) => Ok(()),
        Nnf::And(v) | Nnf::Or(v) => v.iter().try_for_each(|x| collect_predicates(x, out)),
        Nnf::Forall(_, b) | Nnf::Exists(_, b) => collect_predicates(b, out),
    }
}
