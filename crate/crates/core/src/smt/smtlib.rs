//! SMT-LIB v2 text for EPR problems, and a reader for the command subset
//! the driver emits.

use std::collections::BTreeMap;

use crate::logic::{Atom, MethodPredicate, Prop, Sort, Term, Var};
use crate::sexp::Sexp;

use super::epr::{EprProblem, Nnf};
use super::SmtError;

pub fn sort_symbol(s: &Sort) -> String {
    match s {
        Sort::Container(n) => format!("S_{n}"),
        Sort::Element => "Elem".to_string(),
        Sort::Bool => "Bool".to_string(),
    }
}

pub fn const_symbol(name: &str) -> String {
    format!("c_{name}")
}

pub fn pred_symbol(name: &str) -> String {
    format!("p_{name}")
}

pub fn literal_symbol(v: i64) -> String {
    if v < 0 {
        format!("lit_m{}", -v)
    } else {
        format!("lit_{v}")
    }
}

fn bound_symbol(name: &str) -> String {
    format!("v_{name}")
}

fn term_sexp(t: &Term, bound: &[String]) -> Sexp {
    match t {
        Term::Lit(i) => Sexp::atom(&literal_symbol(*i)),
        Term::Var(v) if bound.contains(&v.name) => Sexp::atom(&bound_symbol(&v.name)),
        Term::Var(v) => Sexp::atom(&const_symbol(&v.name)),
    }
}

fn atom_sexp(a: &Atom, bound: &[String]) -> Sexp {
    match a {
        Atom::Pred { name, args } => {
            let mut v = vec![Sexp::atom(&pred_symbol(name))];
            v.extend(args.iter().map(|t| term_sexp(t, bound)));
            Sexp::list(v)
        }
        Atom::Eq(x, y) => Sexp::list(vec![Sexp::atom("="), term_sexp(x, bound), term_sexp(y, bound)]),
        Atom::Bool(v) => term_sexp(&Term::Var(v.clone()), bound),
    }
}

fn nnf_sexp(n: &Nnf, bound: &mut Vec<String>) -> Sexp {
    match n {
        Nnf::True => Sexp::atom("true"),
        Nnf::False => Sexp::atom("false"),
        Nnf::Lit(true, a) => atom_sexp(a, bound),
        Nnf::Lit(false, a) => Sexp::list(vec![Sexp::atom("not"), atom_sexp(a, bound)]),
        Nnf::And(v) | Nnf::Or(v) if v.is_empty() => {
            Sexp::atom(if matches!(n, Nnf::And(_)) { "true" } else { "false" })
        }
        Nnf::And(v) | Nnf::Or(v) => {
            let op = if matches!(n, Nnf::And(_)) { "and" } else { "or" };
            let mut items = vec![Sexp::atom(op)];
            items.extend(v.iter().map(|x| nnf_sexp(x, bound)));
            Sexp::list(items)
        }
        Nnf::Forall(vs, body) | Nnf::Exists(vs, body) => {
            let q = if matches!(n, Nnf::Forall(..)) { "forall" } else { "exists" };
            let decls = vs
                .iter()
                .map(|v| Sexp::list(vec![Sexp::atom(&bound_symbol(&v.name)), Sexp::atom(&sort_symbol(&v.sort))]))
                .collect();
            let base = bound.len();
            bound.extend(vs.iter().map(|v| v.name.clone()));
            let b = nnf_sexp(body, bound);
            bound.truncate(base);
            Sexp::list(vec![Sexp::atom(q), Sexp::list(decls), b])
        }
    }
}

/// The declaration and assertion part of a script, ending in `(check-sat)`.
pub fn script(p: &EprProblem) -> String {
    let mut out = String::new();
    out.push_str("(set-option :produce-models true)\n(set-logic UF)\n");
    for s in p.sorts() {
        out.push_str(&format!("(declare-sort {} 0)\n", Sexp::atom(&sort_symbol(&s))));
    }
    for c in &p.constants {
        out.push_str(&format!(
            "(declare-fun {} () {})\n",
            Sexp::atom(&const_symbol(&c.name)),
            Sexp::atom(&sort_symbol(&c.sort))
        ));
    }
    for l in &p.literals {
        out.push_str(&format!("(declare-fun {} () Elem)\n", literal_symbol(*l)));
    }
    if p.literals.len() > 1 {
        let names: Vec<String> = p.literals.iter().map(|l| literal_symbol(*l)).collect();
        out.push_str(&format!("(assert (distinct {}))\n", names.join(" ")));
    }
    for mp in &p.predicates {
        let sig: Vec<String> = mp.signature.iter().map(|s| Sexp::atom(&sort_symbol(s)).to_string()).collect();
        out.push_str(&format!(
            "(declare-fun {} ({}) Bool)\n",
            Sexp::atom(&pred_symbol(&mp.name)),
            sig.join(" ")
        ));
    }
    out.push_str(&format!("(assert {})\n", nnf_sexp(&p.matrix, &mut Vec::new())));
    out.push_str("(check-sat)\n");
    out
}

/// A parsed command of the supported subset.
#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    SetOption,
    SetLogic,
    SetInfo,
    DeclareSort(String),
    DeclareFun { name: String, args: Vec<String>, result: String },
    Assert(Sexp),
    CheckSat,
    GetValue(Vec<Sexp>),
    GetModel,
    Echo(String),
    Exit,
    Other(String),
}

pub fn parse_command(s: &Sexp) -> Result<Command, SmtError> {
    let items = s.as_list().ok_or_else(|| SmtError::Protocol(format!("expected a command, got {s}")))?;
    let head = s.head().ok_or_else(|| SmtError::Protocol(format!("bad command {s}")))?;
    let sym = |i: usize| -> Result<String, SmtError> {
        items
            .get(i)
            .and_then(|x| x.as_atom())
            .map(String::from)
            .ok_or_else(|| SmtError::Protocol(format!("bad command {s}")))
    };
    Ok(match head {
        "set-option" => Command::SetOption,
        "set-logic" => Command::SetLogic,
        "set-info" => Command::SetInfo,
        "declare-sort" => Command::DeclareSort(sym(1)?),
        "declare-fun" => {
            let args = items
                .get(2)
                .and_then(|x| x.as_list())
                .ok_or_else(|| SmtError::Protocol(format!("bad declare-fun {s}")))?
                .iter()
                .map(|a| a.as_atom().map(String::from).ok_or_else(|| SmtError::Protocol("bad sort".into())))
                .collect::<Result<_, _>>()?;
            Command::DeclareFun { name: sym(1)?, args, result: sym(3)? }
        }
        "declare-const" => Command::DeclareFun { name: sym(1)?, args: vec![], result: sym(2)? },
        "assert" => Command::Assert(items.get(1).cloned().ok_or_else(|| SmtError::Protocol("empty assert".into()))?),
        "check-sat" => Command::CheckSat,
        "get-value" => Command::GetValue(
            items
                .get(1)
                .and_then(|x| x.as_list())
                .ok_or_else(|| SmtError::Protocol("bad get-value".into()))?
                .to_vec(),
        ),
        "get-model" => Command::GetModel,
        "echo" => Command::Echo(sym(1)?),
        "exit" => Command::Exit,
        other => Command::Other(other.to_string()),
    })
}

/// Symbol table for reading terms back into propositions. Every declared
/// sort becomes a container sort of the same name.
#[derive(Default, Debug, Clone)]
pub struct Signature {
    pub sorts: Vec<String>,
    pub consts: BTreeMap<String, Sort>,
    pub preds: BTreeMap<String, Vec<Sort>>,
}

impl Signature {
    pub fn sort(&self, name: &str) -> Result<Sort, SmtError> {
        if name == "Bool" {
            return Ok(Sort::Bool);
        }
        if self.sorts.iter().any(|s| s == name) {
            return Ok(Sort::Container(name.to_string()));
        }
        Err(SmtError::Protocol(format!("unknown sort {name}")))
    }

    pub fn declare(&mut self, cmd: &Command) -> Result<(), SmtError> {
        match cmd {
            Command::DeclareSort(s) => self.sorts.push(s.clone()),
            Command::DeclareFun { name, args, result } => {
                let r = self.sort(result)?;
                if args.is_empty() {
                    self.consts.insert(name.clone(), r);
                } else if r == Sort::Bool {
                    let sig = args.iter().map(|a| self.sort(a)).collect::<Result<_, _>>()?;
                    self.preds.insert(name.clone(), sig);
                } else {
                    return Err(SmtError::Protocol(format!("function symbol {name} is outside EPR")));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn predicates(&self) -> Vec<MethodPredicate> {
        self.preds.iter().map(|(n, s)| MethodPredicate { name: n.clone(), signature: s.clone() }).collect()
    }

    fn var_sort(&self, name: &str, bound: &[Var]) -> Option<Sort> {
        bound
            .iter()
            .rev()
            .find(|v| v.name == name)
            .map(|v| v.sort.clone())
            .or_else(|| self.consts.get(name).cloned())
    }

    fn term(&self, s: &Sexp, bound: &[Var]) -> Result<Term, SmtError> {
        let name = s.as_atom().ok_or_else(|| SmtError::Protocol(format!("expected a symbol, got {s}")))?;
        let sort = self
            .var_sort(name, bound)
            .ok_or_else(|| SmtError::Protocol(format!("unknown symbol {name}")))?;
        Ok(Term::Var(Var::new(name, sort)))
    }

    fn sort_of(&self, s: &Sexp, bound: &[Var]) -> Option<Sort> {
        match s {
            Sexp::Atom(a, _) if a == "true" || a == "false" => Some(Sort::Bool),
            Sexp::Atom(a, _) => self.var_sort(a, bound),
            Sexp::List(..) => Some(Sort::Bool),
        }
    }

    pub fn prop(&self, s: &Sexp, bound: &mut Vec<Var>) -> Result<Prop, SmtError> {
        let bad = || SmtError::Protocol(format!("unsupported term {s}"));
        match s {
            Sexp::Atom(a, _) => match a.as_str() {
                "true" => Ok(Prop::True),
                "false" => Ok(Prop::False),
                _ => match self.var_sort(a, bound) {
                    Some(Sort::Bool) => Ok(Prop::atom(Atom::Bool(Var::boolean(a)))),
                    _ => Err(bad()),
                },
            },
            Sexp::List(items, _) => {
                let head = s.head().ok_or_else(bad)?;
                let args = &items[1..];
                let props = |bound: &mut Vec<Var>| -> Result<Vec<Prop>, SmtError> {
                    args.iter().map(|a| self.prop(a, bound)).collect()
                };
                match head {
                    "not" if args.len() == 1 => Ok(Prop::not(self.prop(&args[0], bound)?)),
                    "and" => Ok(Prop::And(props(bound)?)),
                    "or" => Ok(Prop::Or(props(bound)?)),
                    "=>" if args.len() >= 2 => {
                        let mut ps = props(bound)?;
                        let mut acc = ps.pop().unwrap();
                        while let Some(p) = ps.pop() {
                            acc = Prop::Implies(Box::new(p), Box::new(acc));
                        }
                        Ok(acc)
                    }
                    "=" if args.len() == 2 => {
                        if self.sort_of(&args[0], bound) == Some(Sort::Bool) {
                            let a = self.prop(&args[0], bound)?;
                            let b = self.prop(&args[1], bound)?;
                            Ok(Prop::iff(a, b))
                        } else {
                            Ok(Prop::atom(Atom::Eq(self.term(&args[0], bound)?, self.term(&args[1], bound)?)))
                        }
                    }
                    "distinct" => {
                        let ts = args.iter().map(|a| self.term(a, bound)).collect::<Result<Vec<_>, _>>()?;
                        let mut out = Vec::new();
                        for i in 0..ts.len() {
                            for j in i + 1..ts.len() {
                                out.push(Prop::not(Prop::atom(Atom::Eq(ts[i].clone(), ts[j].clone()))));
                            }
                        }
                        Ok(Prop::and(out))
                    }
                    "ite" if args.len() == 3 => {
                        let c = self.prop(&args[0], bound)?;
                        let a = self.prop(&args[1], bound)?;
                        let b = self.prop(&args[2], bound)?;
                        Ok(Prop::Or(vec![Prop::And(vec![c.clone(), a]), Prop::And(vec![Prop::not(c), b])]))
                    }
                    "forall" | "exists" if args.len() == 2 => {
                        let decls = args[0].as_list().ok_or_else(bad)?;
                        let mut vs = Vec::new();
                        for d in decls {
                            let pair = d.as_list().filter(|p| p.len() == 2).ok_or_else(bad)?;
                            let n = pair[0].as_atom().ok_or_else(bad)?;
                            let so = self.sort(pair[1].as_atom().ok_or_else(bad)?)?;
                            vs.push(Var::new(n, so));
                        }
                        let base = bound.len();
                        bound.extend(vs.iter().cloned());
                        let body = self.prop(&args[1], bound);
                        bound.truncate(base);
                        let body = body?;
                        if head == "forall" {
                            Ok(Prop::Forall(vs, Box::new(body)))
                        } else {
                            Ok(Prop::not(Prop::Forall(vs, Box::new(Prop::not(body)))))
                        }
                    }
                    p if self.preds.contains_key(p) => {
                        let sig = &self.preds[p];
                        if sig.len() != args.len() {
                            return Err(SmtError::Protocol(format!("arity mismatch in {s}")));
                        }
                        let ts = args.iter().map(|a| self.term(a, bound)).collect::<Result<Vec<_>, _>>()?;
                        Ok(Prop::atom(Atom::Pred { name: p.to_string(), args: ts }))
                    }
                    _ => Err(bad()),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexp::parse_all;

    #[test]
    fn printed_script_parses_back() {
        let s = Var::container("s", "stack");
        let u = Var::elem("u");
        let p = Prop::and(vec![
            Prop::forall(vec![u.clone()], Prop::not(Prop::atom(Atom::pred("mem", &[&s, &u])))),
            Prop::atom(Atom::Pred { name: "mem".into(), args: vec![Term::Var(s.clone()), Term::Lit(-2)] }),
        ]);
        let e = EprProblem::satisfiability(&p, &[]).unwrap();
        let text = script(&e);
        assert!(text.contains("(declare-fun lit_m2 () Elem)"));
        let mut sig = Signature::default();
        let mut asserts = Vec::new();
        for c in parse_all(&text).unwrap() {
            let cmd = parse_command(&c).unwrap();
            sig.declare(&cmd).unwrap();
            if let Command::Assert(t) = cmd {
                asserts.push(sig.prop(&t, &mut Vec::new()).unwrap());
            }
        }
        assert_eq!(asserts.len(), 1);
        assert!(asserts[0].has_quantifier());
        assert!(sig.preds.contains_key("p_mem"));
    }
}
