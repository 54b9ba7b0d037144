use std::collections::BTreeMap;

use crate::logic::{classify, extract_feature_vectors, FeatureSet, FeatureVector, Interface, PlaceholderApp, Prop, Sample};

use super::exec::{build_sample, eval_concrete, run_client, Env};
use super::{Client, Generator, World};

/// One concrete execution and the feature vectors it exhibits, per
/// application in the order they occur.
#[derive(Clone, Debug)]
pub struct Observation {
    /// The library function called standalone, or the client path taken.
    pub source: String,
    pub sample: Sample,
    pub vectors: Vec<(String, Vec<FeatureVector>)>,
}

impl Observation {
    /// Vectors that `delta` classifies negative.
    pub fn rejected(&self, delta: &Interface, sets: &BTreeMap<String, FeatureSet>) -> Vec<(String, FeatureVector)> {
        let mut out = Vec::new();
        for (f, vs) in &self.vectors {
            let (Some(phi), Some(s)) = (delta.get(f), sets.get(f)) else { continue };
            for fv in vs {
                if !classify(phi, s, fv) {
                    out.push((f.clone(), fv.clone()));
                }
            }
        }
        out
    }
}

fn vectors_of(
    sample: &Sample,
    apps: &[PlaceholderApp],
    sets: &BTreeMap<String, FeatureSet>,
) -> Vec<(String, Vec<FeatureVector>)> {
    apps.iter()
        .filter_map(|app| {
            let s = sets.get(&app.function)?;
            // an unassigned variable means the application did not run
            let vs = extract_feature_vectors(s, sample, app).ok()?;
            Some((app.function.clone(), vs))
        })
        .collect()
}

pub(crate) fn recursion_depth(gen: &Generator) -> usize {
    2 * gen.cfg.max_container_size + 8
}

/// Random client inputs satisfying the precondition, if one is found
/// within a few tries.
pub(crate) fn client_inputs(world: &World, client: &Client, gen: &mut Generator) -> Option<Env> {
    for _ in 0..20 {
        let mut env = Env::new();
        for p in &client.params {
            let k = world.kind(&p.sort).ok()?;
            env.insert(p.name.clone(), (p.sort.clone(), gen.value(k)));
        }
        if client.pre == Prop::True || eval_concrete(&client.pre, &env, world).unwrap_or(false) {
            return Some(env);
        }
    }
    None
}

/// One draw. Slots below `functions.len()` call that function standalone;
/// the last slot runs the client on random inputs. None if the draw hit a
/// domain error or an infeasible path.
pub fn observe_once(
    world: &World,
    client: &Client,
    functions: &[String],
    sets: &BTreeMap<String, FeatureSet>,
    gen: &mut Generator,
    slot: usize,
    fresh: usize,
) -> Option<Observation> {
    if let Some(f) = functions.get(slot) {
        let (sig, imp) = world.functions.get(f)?;
        let mut env = Env::new();
        let mut args = Vec::new();
        for p in &sig.params {
            let v = gen.value(world.kind(&p.sort).ok()?);
            env.insert(p.name.clone(), (p.sort.clone(), v.clone()));
            args.push(v);
        }
        let r = imp.eval(&args).ok()?;
        env.insert(sig.result.name.clone(), (sig.result.sort.clone(), r));
        let sample = build_sample(world, &env, fresh);
        let app = PlaceholderApp::new(f, sig.params.clone(), sig.result.clone());
        let vectors = vectors_of(&sample, &[app], sets);
        return Some(Observation { source: f.clone(), sample, vectors });
    }
    if client.paths.is_empty() {
        return None;
    }
    let inputs = client_inputs(world, client, gen)?;
    let frame = run_client(world, client, &inputs, recursion_depth(gen)).ok()?;
    let sample = build_sample(world, &frame.env, fresh);
    let q = &client.paths[frame.path];
    let vectors = vectors_of(&sample, &q.sigma, sets);
    Some(Observation { source: q.name.clone(), sample, vectors })
}

fn slots(functions: &[String], client: &Client) -> usize {
    functions.len() + usize::from(!client.paths.is_empty())
}

/// Samples until an observation is rejected by `delta`, or until the
/// configured streak of consistent draws (or the draw cap) is reached.
/// Returns the observation, if any, and the number of draws made.
pub fn find_inconsistency(
    world: &World,
    client: &Client,
    functions: &[String],
    delta: &Interface,
    sets: &BTreeMap<String, FeatureSet>,
    gen: &mut Generator,
    fresh: usize,
) -> (Option<Observation>, usize) {
    let n = slots(functions, client);
    if n == 0 {
        return (None, 0);
    }
    let (cap, stop) = (gen.cfg.samples_per_round.max(1), gen.cfg.consistent_streak_to_stop);
    let mut streak = 0;
    for draw in 0..cap {
        let Some(obs) = observe_once(world, client, functions, sets, gen, draw % n, fresh) else {
            continue;
        };
        if !obs.rejected(delta, sets).is_empty() {
            return (Some(obs), draw + 1);
        }
        streak += 1;
        if streak >= stop {
            return (None, draw + 1);
        }
    }
    (None, cap)
}

/// Counts rejected observations among `draws` draws.
pub fn consistency_violations(
    world: &World,
    client: &Client,
    functions: &[String],
    delta: &Interface,
    sets: &BTreeMap<String, FeatureSet>,
    gen: &mut Generator,
    fresh: usize,
    draws: usize,
) -> (usize, usize) {
    let n = slots(functions, client);
    let (mut observed, mut bad) = (0, 0);
    for draw in 0..draws {
        if let Some(obs) = observe_once(world, client, functions, sets, gen, draw % n.max(1), fresh) {
            observed += 1;
            if !obs.rejected(delta, sets).is_empty() {
                bad += 1;
            }
        }
    }
    (observed, bad)
}
