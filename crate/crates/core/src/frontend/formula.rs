//! Formulas as s-expressions, both directions.

use std::collections::BTreeMap;

use crate::logic::{Atom, Formula, MethodPredicate, Prop, Sort, Term, Var};
use crate::sexp::Sexp;

use super::FrontendError;

/// Variables in scope and the predicates a formula may use.
pub struct Scope<'a> {
    pub vars: BTreeMap<String, Sort>,
    pub preds: &'a [MethodPredicate],
}

impl<'a> Scope<'a> {
    pub fn new(vars: &[Var], preds: &'a [MethodPredicate]) -> Scope<'a> {
        Scope { vars: vars.iter().map(|v| (v.name.clone(), v.sort.clone())).collect(), preds }
    }

    fn var(&self, s: &Sexp) -> Result<Var, FrontendError> {
        let name = s.as_atom().ok_or_else(|| FrontendError::at(s, "expected a variable"))?;
        match self.vars.get(name) {
            Some(sort) => Ok(Var::new(name, sort.clone())),
            None => Err(FrontendError::at(s, format!("unbound variable `{name}`"))),
        }
    }

    fn term(&self, s: &Sexp) -> Result<Term, FrontendError> {
        if let Some(n) = s.as_atom().and_then(|a| a.parse::<i64>().ok()) {
            return Ok(Term::Lit(n));
        }
        Ok(Term::Var(self.var(s)?))
    }
}

fn binders(s: &Sexp) -> Result<Vec<Var>, FrontendError> {
    let items = s.as_list().ok_or_else(|| FrontendError::at(s, "expected a list of quantified variables"))?;
    let mut out = Vec::new();
    for b in items {
        let v = match (b.as_atom(), b.as_list()) {
            (Some(n), _) => Var::elem(n),
            (_, Some([n, sort])) if n.as_atom().is_some() && sort.as_atom() == Some("elem") => {
                Var::elem(n.as_atom().unwrap())
            }
            _ => return Err(FrontendError::at(b, "quantified variables range over elements: `u` or `(u elem)`")),
        };
        if out.iter().any(|w: &Var| w.name == v.name) {
            return Err(FrontendError::at(b, format!("`{}` bound twice", v.name)));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn parse_prop(s: &Sexp, scope: &Scope) -> Result<Prop, FrontendError> {
    if let Some(a) = s.as_atom() {
        return match a {
            "true" => Ok(Prop::True),
            "false" => Ok(Prop::False),
            _ => {
                let v = scope.var(s)?;
                if v.sort != Sort::Bool {
                    return Err(FrontendError::at(s, format!("`{a}` is not Boolean")));
                }
                Ok(Prop::atom(Atom::Bool(v)))
            }
        };
    }
    let items = s.as_list().unwrap();
    let Some(head) = s.head() else { return Err(FrontendError::at(s, "expected a formula")) };
    let args = &items[1..];
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(FrontendError::at(s, format!("`{head}` takes {n} argument(s)")))
        }
    };
    let sub = |i: usize| parse_prop(&args[i], scope);
    match head {
        "and" => Ok(Prop::And(args.iter().map(|a| parse_prop(a, scope)).collect::<Result<_, _>>()?)),
        "or" => Ok(Prop::Or(args.iter().map(|a| parse_prop(a, scope)).collect::<Result<_, _>>()?)),
        "not" => {
            arity(1)?;
            Ok(Prop::Not(Box::new(sub(0)?)))
        }
        "=>" => {
            arity(2)?;
            Ok(Prop::Implies(Box::new(sub(0)?), Box::new(sub(1)?)))
        }
        "<=>" => {
            arity(2)?;
            Ok(Prop::Iff(Box::new(sub(0)?), Box::new(sub(1)?)))
        }
        "forall" => {
            arity(2)?;
            let vs = binders(&args[0])?;
            let mut inner = Scope { vars: scope.vars.clone(), preds: scope.preds };
            for v in &vs {
                inner.vars.insert(v.name.clone(), v.sort.clone());
            }
            Ok(Prop::Forall(vs, Box::new(parse_prop(&args[1], &inner)?)))
        }
        "=" => {
            arity(2)?;
            let (a, b) = (scope.term(&args[0])?, scope.term(&args[1])?);
            if a.sort() != b.sort() {
                return Err(FrontendError::at(s, format!("`{a}` and `{b}` have different sorts")));
            }
            match (&a, &b) {
                (Term::Var(x), Term::Var(y)) if x.sort == Sort::Bool => {
                    Ok(Prop::Iff(Box::new(Prop::atom(Atom::Bool(x.clone()))), Box::new(Prop::atom(Atom::Bool(y.clone())))))
                }
                _ => Ok(Prop::atom(Atom::Eq(a, b))),
            }
        }
        name => {
            let p = scope
                .preds
                .iter()
                .find(|p| p.name == name)
                .ok_or_else(|| FrontendError::at(s, format!("unknown predicate `{name}`")))?;
            if p.signature.len() != args.len() {
                return Err(FrontendError::at(s, format!("`{name}` takes {} argument(s)", p.signature.len())));
            }
            let mut ts = Vec::new();
            for (a, sort) in args.iter().zip(&p.signature) {
                let t = scope.term(a)?;
                if &t.sort() != sort {
                    return Err(FrontendError::at(a, format!("`{t}` has sort {}, `{name}` expects {sort}", t.sort())));
                }
                ts.push(t);
            }
            Ok(Prop::atom(Atom::Pred { name: name.to_string(), args: ts }))
        }
    }
}

/// A spec over the variables of a signature: a leading `forall` becomes
/// the quantifier prefix.
pub fn parse_formula(s: &Sexp, scope: &Scope) -> Result<Formula, FrontendError> {
    let (vs, body) = match parse_prop(s, scope)? {
        Prop::Forall(vs, body) => (vs, *body),
        p => (vec![], p),
    };
    if body.has_quantifier() {
        return Err(FrontendError::at(s, "a spec quantifies only in its leading forall"));
    }
    Ok(Formula::new(vs, body))
}

fn term_sexp(t: &Term) -> Sexp {
    match t {
        Term::Var(v) => Sexp::atom(&v.name),
        Term::Lit(n) => Sexp::atom(&n.to_string()),
    }
}

fn nary(head: &str, items: impl IntoIterator<Item = Sexp>) -> Sexp {
    let mut v = vec![Sexp::atom(head)];
    v.extend(items);
    Sexp::list(v)
}

pub fn prop_sexp(p: &Prop) -> Sexp {
    match p {
        Prop::True => Sexp::atom("true"),
        Prop::False => Sexp::atom("false"),
        Prop::Atom(Atom::Bool(v)) => Sexp::atom(&v.name),
        Prop::Atom(Atom::Eq(a, b)) => nary("=", [term_sexp(a), term_sexp(b)]),
        Prop::Atom(Atom::Pred { name, args }) => nary(name, args.iter().map(term_sexp)),
        Prop::Not(q) => nary("not", [prop_sexp(q)]),
        Prop::And(ps) => nary("and", ps.iter().map(prop_sexp)),
        Prop::Or(ps) => nary("or", ps.iter().map(prop_sexp)),
        Prop::Implies(a, b) => nary("=>", [prop_sexp(a), prop_sexp(b)]),
        Prop::Iff(a, b) => nary("<=>", [prop_sexp(a), prop_sexp(b)]),
        Prop::Forall(vs, b) => nary("forall", [Sexp::list(vs.iter().map(|v| Sexp::atom(&v.name)).collect()), prop_sexp(b)]),
    }
}

pub fn formula_sexp(f: &Formula) -> Sexp {
    if f.quantified.is_empty() {
        prop_sexp(&f.body)
    } else {
        prop_sexp(&Prop::Forall(f.quantified.clone(), Box::new(f.body.clone())))
    }
}
