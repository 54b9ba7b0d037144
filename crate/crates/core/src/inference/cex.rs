//! Concrete witnesses for countermodels that the hypothesis space cannot
//! rule out.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::logic::{Sample, Sort, ValueId, Var};
use crate::runtime::{
    build_sample, client_inputs, eval_concrete, recursion_depth, run_client, Env, Frame, Generator, Kind, Repr, Tree,
    Value,
};

use super::SpecConfig;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub inputs: Vec<(String, Value)>,
    pub output: Option<Value>,
    /// The client path the execution took.
    pub path: String,
    /// Whether the inputs reproduce the countermodel's shape on the inputs,
    /// rather than only falsifying the assertion.
    pub matches_model: bool,
}

/// The execution of `inputs` if it satisfies the precondition and then
/// falsifies the postcondition or calls the client outside its
/// precondition.
pub fn violates(cfg: &SpecConfig, inputs: &Env, depth: usize) -> Option<Frame> {
    let (world, client) = (&cfg.world, &cfg.client);
    if !eval_concrete(&client.pre, inputs, world).ok()? {
        return None;
    }
    let frame = run_client(world, client, inputs, depth).ok()?;
    let post = eval_concrete(&client.post, &frame.env, world).ok()?;
    (!post || frame.obligation_failed).then_some(frame)
}

/// Relations of a sample restricted to the input variables, with elements
/// renumbered by first occurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Pattern {
    elems: Vec<i64>,
    facts: BTreeSet<(String, String, Vec<usize>)>,
    elem_inputs: BTreeMap<String, usize>,
}

fn pattern(s: &Sample, params: &[Var]) -> Pattern {
    let mut elems: Vec<i64> = Vec::new();
    let index = |e: i64, elems: &mut Vec<i64>| match elems.iter().position(|x| *x == e) {
        Some(i) => i,
        None => {
            elems.push(e);
            elems.len() - 1
        }
    };
    let mut facts = BTreeSet::new();
    let mut elem_inputs = BTreeMap::new();
    for p in params {
        match (s.assignment.get(&p.name), &p.sort) {
            (Some(ValueId::Elem(e)), _) => {
                elem_inputs.insert(p.name.clone(), index(*e, &mut elems));
            }
            (Some(id @ ValueId::Container(_)), Sort::Container(_)) => {
                for (pred, rel) in &s.relations {
                    for t in rel.iter().filter(|t| t.first() == Some(id)) {
                        let mut args = Vec::new();
                        for v in &t[1..] {
                            if let ValueId::Elem(e) = v {
                                args.push(index(*e, &mut elems));
                            }
                        }
                        facts.insert((pred.clone(), p.name.clone(), args));
                    }
                }
            }
            _ => {}
        }
    }
    Pattern { elems, facts, elem_inputs }
}

fn same_shape(a: &Pattern, b: &Pattern) -> bool {
    let n = a.elems.len();
    if n != b.elems.len() || a.facts.len() != b.facts.len() || a.elem_inputs.len() != b.elem_inputs.len() {
        return false;
    }
    let rename = |p: &Pattern, perm: &[usize]| -> (BTreeSet<(String, String, Vec<usize>)>, BTreeMap<String, usize>) {
        (
            p.facts
                .iter()
                .map(|(q, c, args)| (q.clone(), c.clone(), args.iter().map(|i| perm[*i]).collect()))
                .collect(),
            p.elem_inputs.iter().map(|(k, i)| (k.clone(), perm[*i])).collect(),
        )
    };
    fn perms(n: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == n {
            return f(cur);
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                if perms(n, cur, used, f) {
                    return true;
                }
                cur.pop();
                used[i] = false;
            }
        }
        false
    }
    if n > 7 {
        return false;
    }
    let target = (b.facts.clone(), b.elem_inputs.clone());
    perms(n, &mut Vec::new(), &mut vec![false; n], &mut |perm| rename(a, perm) == target)
}

fn sequences(elems: &[i64], max: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..max {
        let mut next = Vec::new();
        for s in &layer {
            for e in elems {
                let mut t: Vec<i64> = s.clone();
                t.push(*e);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn trees(elems: &[i64], n: usize) -> Vec<Tree> {
    if n == 0 {
        return vec![Tree::Leaf];
    }
    let mut out = Vec::new();
    for left in 0..n {
        for l in trees(elems, left) {
            for r in trees(elems, n - 1 - left) {
                for e in elems {
                    out.push(Tree::node(l.clone(), *e, r.clone()));
                }
            }
        }
    }
    out
}

fn small_values(kind: Kind, elems: &[i64], max: usize) -> Vec<Value> {
    match kind {
        Kind::Elem => elems.iter().map(|e| Value::Elem(*e)).collect(),
        Kind::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Kind::Repr(Repr::List) => sequences(elems, max).into_iter().map(Value::List).collect(),
        Kind::Repr(Repr::Queue) => sequences(elems, max).iter().map(|s| Value::queue(s)).collect(),
        Kind::Repr(Repr::Tree) => (0..=max).flat_map(|n| trees(elems, n)).map(Value::Tree).collect(),
    }
}

const EXHAUSTIVE_CAP: usize = 200_000;
const EXHAUSTIVE_SIZE: usize = 3;

/// Searches for client inputs reproducing the input shape of `s_neg` whose
/// execution falsifies the client's assertion: all inputs up to size 3 over
/// a few element values first, then random draws. An execution that
/// falsifies the assertion without matching the shape is returned only if
/// no matching one is found.
pub fn extract_cex(s_neg: &Sample, _query: usize, cfg: &SpecConfig, gen: &mut Generator) -> Option<Counterexample> {
    let (world, client) = (&cfg.world, &cfg.client);
    let mut s_neg = s_neg.clone();
    s_neg.complete(&client.params);
    let want = pattern(&s_neg, &client.params);
    let depth = recursion_depth(gen);
    let mut fallback: Option<Counterexample> = None;
    let consider = |inputs: Env, fallback: &mut Option<Counterexample>| -> Option<Counterexample> {
        let frame = violates(cfg, &inputs, depth)?;
        let got = pattern(&build_sample(world, &inputs, 0), &client.params);
        let cex = Counterexample {
            inputs: client.params.iter().map(|p| (p.name.clone(), inputs[&p.name].1.clone())).collect(),
            output: frame.result(client).cloned(),
            path: client.paths[frame.path].name.clone(),
            matches_model: same_shape(&want, &got),
        };
        if cex.matches_model {
            return Some(cex);
        }
        fallback.get_or_insert(cex);
        None
    };

    // exhaustive over small inputs, smallest total size first
    let m = want.elems.len().clamp(2, 3) as i64;
    let lo = cfg.gen.elem_lo;
    let elems: Vec<i64> = (lo..=(lo + m - 1).min(cfg.gen.elem_hi)).collect();
    let mut domains = Vec::new();
    for p in &client.params {
        let k = world.kind(&p.sort).ok()?;
        domains.push(small_values(k, &elems, EXHAUSTIVE_SIZE));
    }
    let total: usize = domains.iter().map(|d| d.len()).product();
    if total <= EXHAUSTIVE_CAP {
        let mut combos: Vec<Vec<&Value>> = vec![vec![]];
        for d in &domains {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    d.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push(v);
                        c
                    })
                })
                .collect();
        }
        combos.sort_by_key(|c| c.iter().map(|v| v.size()).sum::<usize>());
        for c in combos {
            let inputs: Env = client
                .params
                .iter()
                .zip(c)
                .map(|(p, v)| (p.name.clone(), (p.sort.clone(), v.clone())))
                .collect();
            if let Some(cex) = consider(inputs, &mut fallback) {
                return Some(cex);
            }
        }
    }

    for _ in 0..cfg.limits.cex_budget {
        let Some(inputs) = client_inputs(world, client, gen) else { continue };
        if let Some(cex) = consider(inputs, &mut fallback) {
            return Some(cex);
        }
    }
    fallback
}
