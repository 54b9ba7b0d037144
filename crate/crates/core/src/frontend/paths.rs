//! Client bodies to verification queries, one per control-flow path.

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::{Atom, PathStep, PlaceholderApp, Prop, Sort, Term, Var, VerificationQuery};
use crate::runtime::{Client, World};
use crate::sexp::Pos;

use super::{FrontendError, Stmt};

#[derive(Clone, Default)]
struct Path {
    env: BTreeMap<String, Sort>,
    sigma: Vec<PlaceholderApp>,
    constraints: Vec<Prop>,
    trace: Vec<PathStep>,
    hypotheses: Vec<Prop>,
    obligations: Vec<Prop>,
    labels: Vec<String>,
}

struct Compiler<'a> {
    world: &'a World,
    client: &'a Client,
    /// Names bound by the contract, unusable as program variables.
    reserved: BTreeSet<String>,
    out: Vec<VerificationQuery>,
}

fn err(pos: Pos, msg: impl Into<String>) -> FrontendError {
    FrontendError { pos: Some(pos), msg: msg.into() }
}

impl Compiler<'_> {
    fn lookup(&self, p: &Path, name: &str, at: Pos) -> Result<Var, FrontendError> {
        match p.env.get(name) {
            Some(s) => Ok(Var::new(name, s.clone())),
            None => Err(err(at, format!("unbound variable `{name}`"))),
        }
    }

    fn bind(&self, p: &mut Path, name: &str, sort: Sort, at: Pos) -> Result<Var, FrontendError> {
        if p.env.contains_key(name) || self.reserved.contains(name) {
            return Err(err(at, format!("`{name}` is already bound on this path")));
        }
        p.env.insert(name.to_string(), sort.clone());
        Ok(Var::new(name, sort))
    }

    fn check_args(&self, p: &Path, f: &str, formals: &[Var], args: &[String], at: Pos) -> Result<Vec<Var>, FrontendError> {
        if formals.len() != args.len() {
            return Err(err(at, format!("`{f}` takes {} argument(s), given {}", formals.len(), args.len())));
        }
        let mut out = Vec::new();
        for (formal, a) in formals.iter().zip(args) {
            let v = self.lookup(p, a, at)?;
            if v.sort != formal.sort {
                return Err(err(at, format!("`{a}` has sort {}, `{f}` expects {}", v.sort, formal.sort)));
            }
            out.push(v);
        }
        Ok(out)
    }

    /// The contract at a recursive call site.
    fn rename(&self, prop: &Prop, args: &[Var], result: Option<&Var>) -> Prop {
        let mut map: BTreeMap<String, Term> =
            self.client.params.iter().zip(args).map(|(f, a)| (f.name.clone(), Term::Var(a.clone()))).collect();
        if let Some(r) = result {
            map.insert(self.client.result.name.clone(), Term::Var(r.clone()));
        }
        prop.subst(&map)
    }

    fn walk(&mut self, mut p: Path, stmts: &[&Stmt], end: Pos) -> Result<(), FrontendError> {
        let Some((s, rest)) = stmts.split_first() else {
            return Err(err(end, "a path of the body ends without return"));
        };
        match s {
            Stmt::Let { var, func, args, at } => {
                let at = at.0;
                if func == &self.client.name {
                    let args = self.check_args(&p, func, &self.client.params, args, at)?;
                    let r = self.bind(&mut p, var, self.client.result.sort.clone(), at)?;
                    let pre = self.rename(&self.client.pre, &args, None);
                    let post = self.rename(&self.client.post, &args, Some(&r));
                    p.hypotheses.push(Prop::implies(pre.clone(), post));
                    p.obligations.push(pre);
                    p.trace.push(PathStep::Recurse { args, result: r });
                } else {
                    let (sig, _) = self
                        .world
                        .functions
                        .get(func)
                        .ok_or_else(|| err(at, format!("unknown function `{func}`")))?;
                    let args = self.check_args(&p, func, &sig.params, args, at)?;
                    let r = self.bind(&mut p, var, sig.result.sort.clone(), at)?;
                    let app = PlaceholderApp::new(func, args, r);
                    p.sigma.push(app.clone());
                    p.trace.push(PathStep::Apply(app));
                }
                self.walk(p, rest, end)
            }
            Stmt::If { cond, then, els, at } => {
                let at = at.0;
                let b = self.lookup(&p, cond, at)?;
                if b.sort != Sort::Bool {
                    return Err(err(at, format!("`{cond}` is not Boolean")));
                }
                for (branch, positive) in [(then, true), (els, false)] {
                    let mut q = p.clone();
                    let lit = Prop::atom(Atom::Bool(b.clone()));
                    let lit = if positive { lit } else { Prop::not(lit) };
                    q.constraints.push(lit.clone());
                    q.trace.push(PathStep::Assume(lit));
                    q.labels.push(if positive { cond.clone() } else { format!("!{cond}") });
                    let next: Vec<&Stmt> = branch.iter().chain(rest.iter().copied()).collect();
                    self.walk(q, &next, end)?;
                }
                Ok(())
            }
            Stmt::Match { scrutinee, arms, at } => {
                let at = at.0;
                let v = self.lookup(&p, scrutinee, at)?;
                if !v.sort.is_container() {
                    return Err(err(at, format!("`{scrutinee}` is not a datatype value")));
                }
                let mut seen = BTreeSet::new();
                for arm in arms {
                    let aat = arm.at.0;
                    if !seen.insert(&arm.ctor) {
                        return Err(err(aat, format!("constructor `{}` matched twice", arm.ctor)));
                    }
                    let (sig, imp) = self
                        .world
                        .functions
                        .get(&arm.ctor)
                        .ok_or_else(|| err(aat, format!("unknown constructor `{}`", arm.ctor)))?;
                    if !imp.is_constructor() || sig.result.sort != v.sort {
                        return Err(err(aat, format!("`{}` is not a constructor of {}", arm.ctor, v.sort)));
                    }
                    if sig.params.len() != arm.vars.len() {
                        return Err(err(aat, format!("`{}` binds {} variable(s)", arm.ctor, sig.params.len())));
                    }
                    let mut q = p.clone();
                    let mut bound = Vec::new();
                    for (name, formal) in arm.vars.iter().zip(&sig.params) {
                        bound.push(self.bind(&mut q, name, formal.sort.clone(), aat)?);
                    }
                    let app = PlaceholderApp::new(&arm.ctor, bound, v.clone());
                    q.sigma.push(app.clone());
                    q.trace.push(PathStep::Apply(app));
                    q.labels.push(arm.ctor.clone());
                    let next: Vec<&Stmt> = arm.body.iter().chain(rest.iter().copied()).collect();
                    self.walk(q, &next, aat)?;
                }
                Ok(())
            }
            Stmt::Return { var, at } => {
                let at = at.0;
                if !rest.is_empty() {
                    return Err(err(at, "return must be the last statement of its path"));
                }
                let v = self.lookup(&p, var, at)?;
                let nu = &self.client.result;
                if v.sort != nu.sort {
                    return Err(err(at, format!("`{var}` has sort {}, the client returns {}", v.sort, nu.sort)));
                }
                let eq = Prop::atom(Atom::eq(nu, &v));
                p.constraints.push(eq.clone());
                p.trace.push(PathStep::Assume(eq));
                self.finish(p);
                Ok(())
            }
        }
    }

    fn finish(&mut self, p: Path) {
        let c = self.client;
        let name = if p.labels.is_empty() { c.name.clone() } else { format!("{}[{}]", c.name, p.labels.join(",")) };
        let mut premise = vec![c.pre.clone()];
        premise.extend(p.hypotheses);
        let mut goal = p.obligations;
        goal.push(c.post.clone());
        let phi = Prop::implies(Prop::and(premise), Prop::and(goal));
        self.out.push(VerificationQuery {
            name,
            inputs: c.params.clone(),
            sigma: p.sigma,
            constraints: p.constraints,
            phi,
            trace: p.trace,
        });
    }
}

/// One query per path of `body`, in depth-first order with then-branches
/// and earlier match arms first.
pub fn compile_paths(world: &World, client: &Client, body: &[Stmt]) -> Result<Vec<VerificationQuery>, FrontendError> {
    let mut reserved = BTreeSet::new();
    client.pre.all_names(&mut reserved);
    client.post.all_names(&mut reserved);
    reserved.insert(client.result.name.clone());
    let mut start = Path::default();
    for p in &client.params {
        if start.env.insert(p.name.clone(), p.sort.clone()).is_some() {
            return Err(FrontendError { pos: None, msg: format!("parameter `{}` declared twice", p.name) });
        }
        reserved.remove(&p.name);
    }
    let mut c = Compiler { world, client, reserved, out: vec![] };
    let stmts: Vec<&Stmt> = body.iter().collect();
    c.walk(start, &stmts, Pos::default())?;
    Ok(c.out)
}
