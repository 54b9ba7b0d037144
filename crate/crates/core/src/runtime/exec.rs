use std::collections::{BTreeMap, BTreeSet};

use crate::logic::{Atom, PathStep, Prop, Sample, Sort, Term, ValueId};

use super::{Client, Value, World};

/// Program variables bound to concrete values.
pub type Env = BTreeMap<String, (Sort, Value)>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("path condition does not hold")]
    Infeasible,
    #[error("recursion bound exceeded")]
    Depth,
    #[error("no path of `{0}` applies")]
    NoPath(String),
    #[error("{0}")]
    Malformed(String),
}

/// One completed execution of a client path.
#[derive(Clone, Debug)]
pub struct Frame {
    pub path: usize,
    pub env: Env,
    /// Some recursive call (at any depth) was made outside the precondition.
    pub obligation_failed: bool,
}

impl Frame {
    pub fn result(&self, client: &Client) -> Option<&Value> {
        self.env.get(&client.result.name).map(|(_, v)| v)
    }
}

fn lookup<'a>(env: &'a Env, name: &str) -> Result<&'a Value, ExecError> {
    env.get(name).map(|(_, v)| v).ok_or_else(|| ExecError::Malformed(format!("`{name}` is unbound")))
}

fn term_value(t: &Term, env: &Env, qenv: &BTreeMap<String, Value>) -> Result<Value, ExecError> {
    match t {
        Term::Lit(i) => Ok(Value::Elem(*i)),
        Term::Var(v) => match qenv.get(&v.name) {
            Some(x) => Ok(x.clone()),
            None => lookup(env, &v.name).cloned(),
        },
    }
}

fn literals(p: &Prop, out: &mut BTreeSet<i64>) {
    let mut atoms = Vec::new();
    p.atoms(&mut atoms);
    for a in atoms {
        for t in a.terms() {
            if let Term::Lit(i) = t {
                out.insert(i);
            }
        }
    }
}

fn quantifier_depth(p: &Prop) -> usize {
    match p {
        Prop::Forall(vs, b) => vs.len() + quantifier_depth(b),
        Prop::Not(a) => quantifier_depth(a),
        Prop::And(ps) | Prop::Or(ps) => ps.iter().map(quantifier_depth).max().unwrap_or(0),
        Prop::Implies(a, b) | Prop::Iff(a, b) => quantifier_depth(a).max(quantifier_depth(b)),
        _ => 0,
    }
}

struct Evaluator<'a> {
    world: &'a World,
    env: &'a Env,
    elems: Vec<i64>,
}

impl Evaluator<'_> {
    fn atom(&self, a: &Atom, q: &BTreeMap<String, Value>) -> Result<bool, ExecError> {
        match a {
            Atom::Eq(x, y) => Ok(term_value(x, self.env, q)? == term_value(y, self.env, q)?),
            Atom::Bool(v) => match term_value(&Term::Var(v.clone()), self.env, q)? {
                Value::Bool(b) => Ok(b),
                other => Err(ExecError::Malformed(format!("`{}` is bound to {other}, not a boolean", v.name))),
            },
            Atom::Pred { name, args } => {
                let (_, imp) = self
                    .world
                    .predicates
                    .iter()
                    .find(|(m, _)| &m.name == name)
                    .ok_or_else(|| ExecError::Malformed(format!("unknown predicate `{name}`")))?;
                let vals = args.iter().map(|t| term_value(t, self.env, q)).collect::<Result<Vec<_>, _>>()?;
                Ok(imp.eval(&vals))
            }
        }
    }

    fn prop(&self, p: &Prop, q: &mut BTreeMap<String, Value>) -> Result<bool, ExecError> {
        Ok(match p {
            Prop::True => true,
            Prop::False => false,
            Prop::Atom(a) => self.atom(a, q)?,
            Prop::Not(a) => !self.prop(a, q)?,
            Prop::And(ps) => {
                for x in ps {
                    if !self.prop(x, q)? {
                        return Ok(false);
                    }
                }
                true
            }
            Prop::Or(ps) => {
                for x in ps {
                    if self.prop(x, q)? {
                        return Ok(true);
                    }
                }
                false
            }
            Prop::Implies(a, b) => !self.prop(a, q)? || self.prop(b, q)?,
            Prop::Iff(a, b) => self.prop(a, q)? == self.prop(b, q)?,
            Prop::Forall(vs, body) => self.forall(vs, 0, body, q)?,
        })
    }

    fn forall(&self, vs: &[crate::logic::Var], i: usize, body: &Prop, q: &mut BTreeMap<String, Value>) -> Result<bool, ExecError> {
        if i == vs.len() {
            return self.prop(body, q);
        }
        let dom: Vec<Value> = match &vs[i].sort {
            Sort::Element => self.elems.iter().map(|e| Value::Elem(*e)).collect(),
            Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
            s => self.env.values().filter(|(so, _)| so == s).map(|(_, v)| v.clone()).collect(),
        };
        let saved = q.get(&vs[i].name).cloned();
        let mut all = true;
        for d in dom {
            q.insert(vs[i].name.clone(), d);
            if !self.forall(vs, i + 1, body, q)? {
                all = false;
                break;
            }
        }
        match saved {
            Some(v) => q.insert(vs[i].name.clone(), v),
            None => q.remove(&vs[i].name),
        };
        Ok(all)
    }
}

/// Concrete truth of `p` under `env`. Element quantifiers range over the
/// values present plus enough fresh ones to witness absence.
pub fn eval_concrete(p: &Prop, env: &Env, world: &World) -> Result<bool, ExecError> {
    let mut set: BTreeSet<i64> = env.values().flat_map(|(_, v)| v.elements()).collect();
    literals(p, &mut set);
    let mut next = set.iter().max().map_or(0, |m| m + 1);
    for _ in 0..quantifier_depth(p).max(1) {
        set.insert(next);
        next += 1;
    }
    let ev = Evaluator { world, env, elems: set.into_iter().collect() };
    ev.prop(p, &mut BTreeMap::new())
}

fn bind(env: &mut Env, name: &str, sort: &Sort, v: Value) -> Result<(), ExecError> {
    match env.get(name) {
        Some((_, old)) if *old != v => Err(ExecError::Infeasible),
        Some(_) => Ok(()),
        None => {
            env.insert(name.to_string(), (sort.clone(), v));
            Ok(())
        }
    }
}

fn assume(p: &Prop, env: &mut Env, world: &World) -> Result<(), ExecError> {
    if let Prop::Atom(Atom::Eq(Term::Var(a), Term::Var(b))) = p {
        match (env.contains_key(&a.name), env.contains_key(&b.name)) {
            (false, true) => return bind(env, &a.name, &a.sort, lookup(env, &b.name)?.clone()),
            (true, false) => return bind(env, &b.name, &b.sort, lookup(env, &a.name)?.clone()),
            _ => {}
        }
    }
    if eval_concrete(p, env, world)? {
        Ok(())
    } else {
        Err(ExecError::Infeasible)
    }
}

/// Runs one path of `client` on `inputs`. Fails with `Infeasible` when a
/// branch condition or match does not hold.
pub fn run_path(world: &World, client: &Client, path: usize, inputs: &Env, depth: usize) -> Result<Frame, ExecError> {
    let q = &client.paths[path];
    let mut env = inputs.clone();
    let mut obligation_failed = false;
    for step in &q.trace {
        match step {
            PathStep::Apply(app) => {
                let (_, imp) = world
                    .functions
                    .get(&app.function)
                    .ok_or_else(|| ExecError::Malformed(format!("unknown function `{}`", app.function)))?;
                let bound = app.args.iter().all(|a| env.contains_key(&a.name));
                if !bound && env.contains_key(&app.result.name) && imp.is_constructor() {
                    let v = lookup(&env, &app.result.name)?.clone();
                    let parts = imp.unapply(&v).ok_or(ExecError::Infeasible)?;
                    for (a, x) in app.args.iter().zip(parts) {
                        bind(&mut env, &a.name, &a.sort, x)?;
                    }
                } else {
                    let args = app.args.iter().map(|a| lookup(&env, &a.name).cloned()).collect::<Result<Vec<_>, _>>()?;
                    let v = imp.eval(&args).map_err(ExecError::Domain)?;
                    bind(&mut env, &app.result.name, &app.result.sort, v)?;
                }
            }
            PathStep::Recurse { args, result } => {
                if depth == 0 {
                    return Err(ExecError::Depth);
                }
                let mut callee = Env::new();
                for (formal, actual) in client.params.iter().zip(args) {
                    callee.insert(formal.name.clone(), (formal.sort.clone(), lookup(&env, &actual.name)?.clone()));
                }
                if !eval_concrete(&client.pre, &callee, world)? {
                    obligation_failed = true;
                }
                let f = run_client(world, client, &callee, depth - 1)?;
                obligation_failed |= f.obligation_failed;
                let v = f
                    .result(client)
                    .cloned()
                    .ok_or_else(|| ExecError::Malformed("recursive call produced no result".into()))?;
                bind(&mut env, &result.name, &result.sort, v)?;
            }
            PathStep::Assume(p) => assume(p, &mut env, world)?,
        }
    }
    if !env.contains_key(&client.result.name) {
        return Err(ExecError::Malformed(format!("path {} of `{}` binds no result", q.name, client.name)));
    }
    Ok(Frame { path, env, obligation_failed })
}

/// Runs the first path whose conditions hold.
pub fn run_client(world: &World, client: &Client, inputs: &Env, depth: usize) -> Result<Frame, ExecError> {
    for i in 0..client.paths.len() {
        match run_path(world, client, i, inputs, depth) {
            Ok(f) => return Ok(f),
            Err(ExecError::Infeasible) | Err(ExecError::Domain(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(ExecError::NoPath(client.name.clone()))
}

/// The sample of an execution: ids for containers, all predicate tuples
/// over the values present plus `fresh` fresh elements.
pub fn build_sample(world: &World, env: &Env, fresh: usize) -> Sample {
    let mut s = Sample::new();
    let mut ids: BTreeMap<(String, Value), u32> = BTreeMap::new();
    let mut containers: Vec<(u32, String, Value)> = Vec::new();
    for (name, (sort, v)) in env {
        let id = match (sort, v) {
            (_, Value::Elem(e)) => ValueId::Elem(*e),
            (_, Value::Bool(b)) => ValueId::Bool(*b),
            (so, v) => {
                let key = (so.to_string(), v.clone());
                let next = ids.len() as u32;
                let id = *ids.entry(key).or_insert_with(|| {
                    containers.push((next, so.to_string(), v.clone()));
                    next
                });
                s.containers.insert(id, so.to_string());
                ValueId::Container(id)
            }
        };
        s.assignment.insert(name.clone(), id);
        s.elements.extend(v.elements());
    }
    s.fresh = s.fresh_values(fresh);
    let elems: Vec<i64> = s.elements.iter().chain(s.fresh.iter()).copied().collect();
    for (mp, imp) in &world.predicates {
        let mut rel = BTreeSet::new();
        let (heads, arity): (Vec<(ValueId, Value)>, usize) = match mp.signature.first() {
            Some(Sort::Container(n)) => (
                containers
                    .iter()
                    .filter(|(_, so, _)| so == n)
                    .map(|(id, _, v)| (ValueId::Container(*id), v.clone()))
                    .collect(),
                mp.signature.len() - 1,
            ),
            _ => (vec![], mp.signature.len()),
        };
        let heads: Vec<Option<(ValueId, Value)>> = match mp.signature.first() {
            Some(Sort::Container(_)) => heads.into_iter().map(Some).collect(),
            _ => vec![None],
        };
        let tuples = product(elems.len(), arity);
        for h in &heads {
            for t in &tuples {
                let mut ids: Vec<ValueId> = Vec::new();
                let mut vals: Vec<Value> = Vec::new();
                if let Some((id, v)) = h {
                    ids.push(id.clone());
                    vals.push(v.clone());
                }
                for &i in t {
                    ids.push(ValueId::Elem(elems[i]));
                    vals.push(Value::Elem(elems[i]));
                }
                if imp.eval(&vals) {
                    rel.insert(ids);
                }
            }
        }
        s.relations.insert(mp.name.clone(), rel);
    }
    s
}

/// All index tuples of length `arity` over `0..n`, last position fastest.
fn product(n: usize, arity: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n).map(move |i| {
                    let mut t = t.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}
