use std::collections::{BTreeMap, BTreeSet};

use crate::learner::{learn, LabeledData};
use crate::logic::{
    extract_feature_vectors, substitute, FeatureSet, FeatureVector, Formula, Interface, Prop, Sample,
};
use crate::runtime::find_inconsistency;
use crate::smt::VerifyResult;

use super::Engine;

#[derive(Clone, Debug)]
pub enum SpecInferResult {
    Safe(Interface),
    /// Some Σ_i[Δ] is unsatisfiable.
    FailNone,
    /// A countermodel of query `query` none of whose vectors is new.
    Fail { query: usize, sample: Sample },
}

pub(super) type Labels = BTreeMap<String, BTreeSet<FeatureVector>>;

pub(super) fn relearn(s: &FeatureSet, pi: &BTreeSet<FeatureVector>, omega: &BTreeSet<FeatureVector>) -> Result<Formula, String> {
    learn(&LabeledData { feature_set: s, pi, omega }).map_err(|e| e.to_string())
}

impl Engine<'_> {
    /// Safe and consistent interface over the feature sets `sets` (one
    /// quantifier prefix), or the reason there is none.
    pub fn spec_infer(&mut self, sets: &BTreeMap<String, FeatureSet>) -> Result<SpecInferResult, String> {
        let fresh = sets.values().map(|s| s.quantified.len()).max().unwrap_or(0).max(1);
        let functions = self.functions().to_vec();
        let mut pi: Labels = functions.iter().map(|f| (f.clone(), BTreeSet::new())).collect();
        let mut omega: Labels = pi.clone();
        let mut delta = Interface::all_top(&functions);
        self.metrics.progress.clear();
        loop {
            // consistency: every observed behavior must be admitted
            loop {
                let (obs, draws) = find_inconsistency(
                    &self.cfg.world,
                    &self.cfg.client,
                    &functions,
                    &delta,
                    sets,
                    &mut self.gen,
                    fresh,
                );
                self.metrics.draws += draws;
                let Some(obs) = obs else { break };
                let mut changed = BTreeSet::new();
                for (f, vs) in obs.vectors {
                    let p = pi.get_mut(&f).expect("sampled function has labels");
                    for fv in vs {
                        if p.insert(fv.clone()) {
                            changed.insert(f.clone());
                        }
                    }
                    let o = omega.get_mut(&f).unwrap();
                    o.retain(|fv| !pi[&f].contains(fv));
                }
                if changed.is_empty() {
                    return Err("sampler reported an inconsistency with no new vector".into());
                }
                for f in changed {
                    delta = delta.with(&f, relearn(&sets[&f], &pi[&f], &omega[&f])?);
                }
            }
            self.metrics.outer_iterations += 1;
            self.metrics.progress.push(pi.values().chain(omega.values()).map(|s| s.len()).sum());

            // safety
            let mut changed = BTreeSet::new();
            let mut first_fail = None;
            for (i, q) in self.cfg.queries().iter().enumerate() {
                let sigma = substitute(q, &delta, &self.sigs).map_err(|e| e.to_string())?;
                match self.verifier.verify(&Prop::implies(sigma, q.phi.clone())) {
                    VerifyResult::Ok => {}
                    VerifyResult::Unknown(r) => return Err(format!("verifier gave up on {}: {r}", q.name)),
                    VerifyResult::Sat(mut s) => {
                        s.complete(&q.program_vars());
                        self.metrics.cex_count += 1;
                        for app in &q.sigma {
                            let Some(set) = sets.get(&app.function) else { continue };
                            let vs = extract_feature_vectors(set, &s, app).map_err(|e| e.to_string())?;
                            for fv in vs {
                                let f = &app.function;
                                if !pi[f].contains(&fv) && omega.get_mut(f).unwrap().insert(fv) {
                                    changed.insert(f.clone());
                                }
                            }
                        }
                        first_fail.get_or_insert((i, s));
                    }
                }
            }
            let Some((query, sample)) = first_fail else {
                for q in self.cfg.queries() {
                    match self.verifier.check_nontrivial(q, &delta, &self.sigs) {
                        Ok(true) => {}
                        Ok(false) => return Ok(SpecInferResult::FailNone),
                        Err(r) => return Err(format!("verifier gave up on {}: {r}", q.name)),
                    }
                }
                return Ok(SpecInferResult::Safe(delta));
            };
            if changed.is_empty() {
                return Ok(SpecInferResult::Fail { query, sample });
            }
            for f in changed {
                delta = delta.with(&f, relearn(&sets[&f], &pi[&f], &omega[&f])?);
            }
        }
    }
}
