//! Abduction of maximal verification interfaces: consistent and safe
//! specifications from samples and countermodels, then per-function
//! weakening, over growing quantifier prefixes.

mod cex;
mod spec_infer;
mod weaken;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::logic::{
    build_feature_set, positive_count, quantified_vars, FeatureSet, FunctionSig, Interface, LogicError, MethodPredicate,
    Sample, VerificationQuery,
};
use crate::runtime::{Client, GenConfig, Generator, Value, World};
use crate::smt::{Backend, Verifier};

pub use cex::{extract_cex, violates, Counterexample};
pub use spec_infer::SpecInferResult;
pub use weaken::SWEEP_MAX_FEATURES;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Largest quantifier prefix tried.
    pub k_max: usize,
    pub smt_timeout: Duration,
    /// Wall-clock budget for the whole weakening phase.
    pub weaken_bound: Duration,
    /// Concrete draws during counterexample search, after the exhaustive pass.
    pub cex_budget: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            k_max: 3,
            smt_timeout: Duration::from_secs(10),
            weaken_bound: Duration::from_secs(60),
            cex_budget: 2000,
        }
    }
}

/// Queries (as client paths) together with the predicate set, the library
/// functions and their blackbox implementations.
#[derive(Clone, Debug)]
pub struct SpecConfig {
    pub client: Client,
    pub world: World,
    pub gen: GenConfig,
    pub limits: Limits,
    pub backend: Backend,
}

impl SpecConfig {
    pub fn queries(&self) -> &[VerificationQuery] {
        &self.client.paths
    }

    pub fn predicates(&self) -> Vec<MethodPredicate> {
        self.world.method_predicates()
    }

    /// F: declared functions that occur in some query, in declaration order.
    pub fn functions(&self) -> Vec<String> {
        self.world
            .order
            .iter()
            .filter(|f| self.queries().iter().any(|q| q.mentions(f)))
            .cloned()
            .collect()
    }

    pub fn signatures(&self) -> BTreeMap<String, FunctionSig> {
        self.world.signatures()
    }

    pub fn feature_sets(&self, k: usize) -> Result<BTreeMap<String, FeatureSet>, LogicError> {
        let preds = self.predicates();
        let u = quantified_vars(k);
        self.functions()
            .into_iter()
            .map(|f| {
                let sig = &self.world.functions[&f].0;
                Ok((f, build_feature_set(&preds, sig, &u)?))
            })
            .collect()
    }

    pub fn verifier(&self) -> Verifier {
        Verifier::new(self.backend.solver(), self.predicates(), self.limits.smt_timeout)
    }
}

/// Counters of one run. Names follow the report columns where one exists.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// |u⃗| of the final hypothesis space.
    pub qvars: usize,
    /// Countermodels returned by the verifier during the consistent phase.
    pub cex_count: usize,
    /// Seconds spent finding a safe and consistent interface (all prefixes).
    pub time_consistent: f64,
    /// Vectors labeled during weakening (#Gather).
    pub gathered: usize,
    /// |φ⁺| of each final spec.
    pub positive: BTreeMap<String, u128>,
    pub time_weaken: f64,
    /// Weakening candidates found by the verifier.
    pub weakening_iterations: usize,
    pub weakening_passes: usize,
    /// Outer iterations of the consistent phase, summed over prefixes.
    pub outer_iterations: usize,
    /// Σ(|π|+|ω|) at each outer iteration of the last consistent phase.
    pub progress: Vec<usize>,
    pub draws: usize,
    pub smt_calls: u64,
    /// Functions whose weakening stopped early (time bound or unknown).
    pub non_maximal: BTreeSet<String>,
}

impl Metrics {
    pub fn positive_total(&self) -> u128 {
        self.positive.values().sum()
    }
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Interface(Interface),
    Counterexample(Counterexample),
    Aborted(String),
}

#[derive(Clone, Debug)]
pub struct Run {
    pub outcome: Outcome,
    pub metrics: Metrics,
    /// Feature sets of the final prefix, one per function.
    pub sets: BTreeMap<String, FeatureSet>,
}

/// Shared state of one inference run.
pub struct Engine<'a> {
    pub cfg: &'a SpecConfig,
    pub verifier: Verifier,
    pub gen: Generator,
    pub metrics: Metrics,
    sigs: BTreeMap<String, FunctionSig>,
    functions: Vec<String>,
}

impl<'a> Engine<'a> {
    pub fn new(cfg: &'a SpecConfig) -> Engine<'a> {
        Engine {
            cfg,
            verifier: cfg.verifier(),
            gen: Generator::new(cfg.gen.clone()),
            metrics: Metrics::default(),
            sigs: cfg.signatures(),
            functions: cfg.functions(),
        }
    }

    /// Uses an existing verifier (shared solver, custom timeout).
    pub fn with_verifier(cfg: &'a SpecConfig, verifier: Verifier) -> Engine<'a> {
        Engine { verifier, ..Engine::new(cfg) }
    }

    pub fn functions(&self) -> &[String] {
        &self.functions
    }

    /// Weakens every function in declaration order until a full pass
    /// changes nothing or the time bound runs out.
    pub fn weaken_all(&mut self, delta: Interface, sets: &BTreeMap<String, FeatureSet>) -> Interface {
        let start = Instant::now();
        let deadline = start + self.cfg.limits.weaken_bound;
        let mut delta = delta;
        loop {
            let before = delta.clone();
            let mut cut = BTreeSet::new();
            for f in self.functions.clone() {
                let (phi, maximal) = self.weaken(&delta, &f, sets, deadline);
                if !maximal {
                    cut.insert(f.clone());
                }
                delta = delta.with(&f, phi);
            }
            self.metrics.weakening_passes += 1;
            self.metrics.non_maximal = cut;
            if delta == before || Instant::now() >= deadline {
                break;
            }
        }
        self.metrics.time_weaken += start.elapsed().as_secs_f64();
        delta
    }

    fn finish(mut self, outcome: Outcome, sets: BTreeMap<String, FeatureSet>) -> Run {
        if let Outcome::Interface(d) = &outcome {
            for (f, phi) in &d.specs {
                if let Some(s) = sets.get(f) {
                    self.metrics.positive.insert(f.clone(), positive_count(&phi.body, s));
                }
            }
        }
        self.metrics.smt_calls = self.verifier.calls();
        Run { outcome, metrics: self.metrics, sets }
    }
}

/// The outer loop: grow the quantifier prefix until a safe and consistent
/// interface exists or a concrete counterexample is found, then weaken.
pub fn multi_abduce(cfg: &SpecConfig) -> Run {
    let mut engine = Engine::new(cfg);
    let mut last_sets = BTreeMap::new();
    for k in 0..=cfg.limits.k_max {
        engine.metrics.qvars = k;
        let sets = match cfg.feature_sets(k) {
            Ok(s) => s,
            Err(e) => return engine.finish(Outcome::Aborted(format!("feature sets for |u|={k}: {e}")), last_sets),
        };
        last_sets = sets.clone();
        let t = Instant::now();
        let r = engine.spec_infer(&sets);
        engine.metrics.time_consistent += t.elapsed().as_secs_f64();
        match r {
            Err(reason) => return engine.finish(Outcome::Aborted(reason), sets),
            Ok(SpecInferResult::Safe(delta)) => {
                let delta = engine.weaken_all(delta, &sets);
                return engine.finish(Outcome::Interface(delta), sets);
            }
            Ok(SpecInferResult::FailNone) => continue,
            Ok(SpecInferResult::Fail { query, sample }) => {
                let t = Instant::now();
                let found = extract_cex(&sample, query, cfg, &mut engine.gen);
                engine.metrics.time_consistent += t.elapsed().as_secs_f64();
                if let Some(c) = found {
                    return engine.finish(Outcome::Counterexample(c), sets);
                }
            }
        }
    }
    let reason = format!("no safe and consistent interface with up to {} quantified variables", cfg.limits.k_max);
    engine.finish(Outcome::Aborted(reason), last_sets)
}

/// Concrete inputs for a counterexample search or a report.
pub type Inputs = Vec<(String, Value)>;

/// For tests and the harness: the negative sample left by a failed phase.
pub fn fail_sample(r: &SpecInferResult) -> Option<&Sample> {
    match r {
        SpecInferResult::Fail { sample, .. } => Some(sample),
        _ => None,
    }
}
