use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::features::{FeatureSet, FeatureVector};
use super::formula::{Atom, Prop, Sort, Term, Var};
use super::query::PlaceholderApp;
use super::LogicError;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ValueId {
    Elem(i64),
    /// Opaque container identity.
    Container(u32),
    Bool(bool),
}

impl fmt::Display for ValueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueId::Elem(i) => write!(f, "{i}"),
            ValueId::Container(c) => write!(f, "#{c}"),
            ValueId::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
    Unlabeled,
}

/// Which element values a quantifier ranges over during evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    /// The sample's element universe only.
    Universe,
    /// The universe plus `n` fresh values.
    WithFresh(usize),
}

/// A variable assignment plus closed-world relations for every method predicate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub assignment: BTreeMap<String, ValueId>,
    pub relations: BTreeMap<String, BTreeSet<Vec<ValueId>>>,
    pub elements: BTreeSet<i64>,
    /// Container ids with their sort name.
    pub containers: BTreeMap<u32, String>,
    /// Element values outside `elements` reserved as fresh witnesses. More are
    /// invented on demand; invented ones have no relations.
    pub fresh: Vec<i64>,
    pub label: Label,
}

impl Sample {
    pub fn new() -> Sample {
        Sample {
            assignment: BTreeMap::new(),
            relations: BTreeMap::new(),
            elements: BTreeSet::new(),
            containers: BTreeMap::new(),
            fresh: Vec::new(),
            label: Label::Unlabeled,
        }
    }

    pub fn holds(&self, pred: &str, args: &[ValueId]) -> bool {
        self.relations.get(pred).is_some_and(|r| r.contains(args))
    }

    /// `n` fresh element values, distinct from the universe.
    pub fn fresh_values(&self, n: usize) -> Vec<i64> {
        let mut out: Vec<i64> = self.fresh.iter().copied().take(n).collect();
        let mut next = self
            .elements
            .iter()
            .chain(self.fresh.iter())
            .max()
            .map_or(0, |m| m + 1);
        while out.len() < n {
            out.push(next);
            next += 1;
        }
        out
    }

    /// Assigns variables a model left out because the sentence does not
    /// mention them: elements to an existing element, Booleans to false,
    /// containers to new identities without relations. None of these
    /// changes the truth of the sentence the model satisfies.
    pub fn complete<'a>(&mut self, vars: impl IntoIterator<Item = &'a Var>) {
        for v in vars {
            if self.assignment.contains_key(&v.name) {
                continue;
            }
            let id = match &v.sort {
                Sort::Bool => ValueId::Bool(false),
                Sort::Element => {
                    let e = match self.elements.iter().next() {
                        Some(e) => *e,
                        None => {
                            let e = self.fresh_values(self.fresh.len() + 1)[self.fresh.len()];
                            self.elements.insert(e);
                            e
                        }
                    };
                    ValueId::Elem(e)
                }
                Sort::Container(name) => {
                    let id = self.containers.keys().max().map_or(0, |m| m + 1);
                    self.containers.insert(id, name.clone());
                    ValueId::Container(id)
                }
            };
            self.assignment.insert(v.name.clone(), id);
        }
    }

    fn domain(&self, sort: &Sort, dom: Domain) -> Vec<ValueId> {
        match sort {
            Sort::Element => {
                let mut v: Vec<ValueId> = self.elements.iter().map(|e| ValueId::Elem(*e)).collect();
                if let Domain::WithFresh(n) = dom {
                    v.extend(self.fresh_values(n).into_iter().map(ValueId::Elem));
                }
                v
            }
            Sort::Container(name) => self
                .containers
                .iter()
                .filter(|(_, s)| *s == name)
                .map(|(id, _)| ValueId::Container(*id))
                .collect(),
            Sort::Bool => vec![ValueId::Bool(false), ValueId::Bool(true)],
        }
    }

    fn term_value(&self, t: &Term, env: &BTreeMap<String, ValueId>) -> Result<ValueId, LogicError> {
        match t {
            Term::Lit(i) => Ok(ValueId::Elem(*i)),
            Term::Var(v) => env
                .get(&v.name)
                .or_else(|| self.assignment.get(&v.name))
                .cloned()
                .ok_or_else(|| LogicError::Unassigned(v.name.clone())),
        }
    }

    fn eval_atom(&self, a: &Atom, env: &BTreeMap<String, ValueId>) -> Result<bool, LogicError> {
        match a {
            Atom::Pred { name, args } => {
                let vals = args
                    .iter()
                    .map(|t| self.term_value(t, env))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(self.holds(name, &vals))
            }
            Atom::Eq(x, y) => Ok(self.term_value(x, env)? == self.term_value(y, env)?),
            Atom::Bool(v) => match self.term_value(&Term::Var(v.clone()), env)? {
                ValueId::Bool(b) => Ok(b),
                other => Err(LogicError::IllSorted(format!("{v} is bound to {other}"))),
            },
        }
    }

    /// First-order evaluation under closed-world relations.
    pub fn eval(&self, p: &Prop, dom: Domain) -> Result<bool, LogicError> {
        self.eval_env(p, dom, &mut BTreeMap::new())
    }

    pub fn eval_env(
        &self,
        p: &Prop,
        dom: Domain,
        env: &mut BTreeMap<String, ValueId>,
    ) -> Result<bool, LogicError> {
        Ok(match p {
            Prop::True => true,
            Prop::False => false,
            Prop::Atom(a) => self.eval_atom(a, env)?,
            Prop::Not(q) => !self.eval_env(q, dom, env)?,
            Prop::And(ps) => {
                for q in ps {
                    if !self.eval_env(q, dom, env)? {
                        return Ok(false);
                    }
                }
                true
            }
            Prop::Or(ps) => {
                for q in ps {
                    if self.eval_env(q, dom, env)? {
                        return Ok(true);
                    }
                }
                false
            }
            Prop::Implies(a, b) => !self.eval_env(a, dom, env)? || self.eval_env(b, dom, env)?,
            Prop::Iff(a, b) => self.eval_env(a, dom, env)? == self.eval_env(b, dom, env)?,
            Prop::Forall(vs, body) => self.eval_forall(vs, body, dom, env)?,
        })
    }

    fn eval_forall(
        &self,
        vs: &[Var],
        body: &Prop,
        dom: Domain,
        env: &mut BTreeMap<String, ValueId>,
    ) -> Result<bool, LogicError> {
        let Some((v, rest)) = vs.split_first() else {
            return self.eval_env(body, dom, env);
        };
        let saved = env.get(&v.name).cloned();
        let mut result = true;
        for val in self.domain(&v.sort, dom) {
            env.insert(v.name.clone(), val);
            if !self.eval_forall(rest, body, dom, env)? {
                result = false;
                break;
            }
        }
        match saved {
            Some(s) => env.insert(v.name.clone(), s),
            None => env.remove(&v.name),
        };
        Ok(result)
    }
}

impl Default for Sample {
    fn default() -> Self {
        Sample::new()
    }
}

impl fmt::Display for Sample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<String> = self.assignment.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{{{}}}", vars.join(", "))?;
        for (p, rel) in &self.relations {
            let tuples: Vec<String> = rel
                .iter()
                .map(|t| t.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
                .collect();
            write!(f, " {p}={{{}}}", tuples.join("; "))?;
        }
        Ok(())
    }
}

/// χ_S(s) for one application: every instantiation of the quantified
/// variables over the sample's elements plus fresh values, deduplicated in
/// extraction order.
pub fn extract_feature_vectors(
    s: &FeatureSet,
    sample: &Sample,
    app: &PlaceholderApp,
) -> Result<Vec<FeatureVector>, LogicError> {
    if app.args.len() != s.params.len() {
        return Err(LogicError::Arity(app.function.clone()));
    }
    let mut env = BTreeMap::new();
    for (formal, actual) in s.params.iter().zip(&app.args).chain([(&s.result, &app.result)]) {
        let v = sample
            .assignment
            .get(&actual.name)
            .ok_or_else(|| LogicError::Unassigned(actual.name.clone()))?;
        env.insert(formal.name.clone(), v.clone());
    }
    let k = s.quantified.len();
    let mut dom: Vec<ValueId> = sample.elements.iter().map(|e| ValueId::Elem(*e)).collect();
    dom.extend(sample.fresh_values(k.max(1)).into_iter().map(ValueId::Elem));

    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut idx = vec![0usize; k];
    loop {
        for (q, &i) in s.quantified.iter().zip(&idx) {
            env.insert(q.name.clone(), dom[i].clone());
        }
        let bits = s
            .features
            .iter()
            .map(|a| sample.eval_atom(a, &env))
            .collect::<Result<Vec<_>, _>>()?;
        let fv = FeatureVector(bits);
        if seen.insert(fv.clone()) {
            out.push(fv);
        }
        // odometer over dom^k, last position fastest
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < dom.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}
