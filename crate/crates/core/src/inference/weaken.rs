use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use crate::logic::normal::normalize;
use crate::logic::{
    all_vectors, classify, cube, extract_feature_vectors, substitute, FeatureSet, FeatureVector, Formula, Interface, Prop, Sample,
    VerificationQuery,
};
use crate::smt::VerifyResult;

use super::spec_infer::relearn;
use super::Engine;

/// Largest feature set whose vectors the final sweep enumerates.
pub const SWEEP_MAX_FEATURES: usize = 10;

enum Check {
    Safe,
    Unsafe(usize, Sample),
    Unknown,
}

impl Engine<'_> {
    /// Σ_i[Δ] ⟹ Φ_i for every query mentioning `f`.
    fn safe_for(&self, delta: &Interface, qs: &[&VerificationQuery]) -> Check {
        for (i, q) in qs.iter().enumerate() {
            let Ok(sigma) = substitute(q, delta, &self.sigs) else { return Check::Unknown };
            match self.verifier.verify(&Prop::implies(sigma, q.phi.clone())) {
                VerifyResult::Ok => {}
                VerifyResult::Sat(s) => return Check::Unsafe(i, s),
                VerifyResult::Unknown(_) => return Check::Unknown,
            }
        }
        Check::Safe
    }

    /// Sorts each candidate into π (admitting it together with Δ(R_f) and π
    /// stays safe) or ω. None if the verifier gave up.
    #[allow(clippy::too_many_arguments)]
    fn update(
        &mut self,
        delta: &Interface,
        f: &str,
        set: &FeatureSet,
        qs: &[&VerificationQuery],
        cands: Vec<FeatureVector>,
        pi: &mut BTreeSet<FeatureVector>,
        omega: &mut BTreeSet<FeatureVector>,
    ) -> Option<()> {
        let phi = &delta.specs[f];
        for fv in cands {
            if pi.contains(&fv) || omega.contains(&fv) {
                continue;
            }
            let mut parts = vec![phi.body.clone()];
            parts.extend(pi.iter().map(|v| cube(v, set)));
            parts.push(cube(&fv, set));
            let trial = delta.with(f, set.formula(Prop::or(parts)));
            self.metrics.gathered += 1;
            match self.safe_for(&trial, qs) {
                Check::Safe => pi.insert(fv),
                Check::Unsafe(..) => omega.insert(fv),
                Check::Unknown => return None,
            };
        }
        Some(())
    }

    /// Vectors of `f`'s applications in `q` under `s`.
    fn vectors_in(&self, q: &VerificationQuery, f: &str, set: &FeatureSet, s: &Sample) -> Vec<FeatureVector> {
        let mut s = s.clone();
        s.complete(&q.program_vars());
        let s = &s;
        let mut out = Vec::new();
        for app in q.sigma.iter().filter(|a| a.function == f) {
            for fv in extract_feature_vectors(set, s, app).unwrap_or_default() {
                if !out.contains(&fv) {
                    out.push(fv);
                }
            }
        }
        out
    }

    /// Tries every vector outside `phi` in turn, keeping each one whose
    /// addition stays safe. Catches vectors that no model of the weakening
    /// query exhibits, such as behaviors the other specs already exclude.
    /// Skipped above `SWEEP_MAX_FEATURES`.
    fn sweep(
        &mut self,
        delta: &Interface,
        f: &str,
        set: &FeatureSet,
        qs: &[&VerificationQuery],
        phi: Formula,
        deadline: Instant,
    ) -> (Formula, bool) {
        if set.len() > SWEEP_MAX_FEATURES {
            return (phi, true);
        }
        let base = delta.with(f, phi.clone());
        let mut pi = BTreeSet::new();
        let mut omega = BTreeSet::new();
        for fv in all_vectors(set.len()) {
            if classify(&phi, set, &fv) {
                continue;
            }
            if Instant::now() >= deadline || self.update(&base, f, set, qs, vec![fv], &mut pi, &mut omega).is_none() {
                return (phi, false);
            }
        }
        if pi.is_empty() {
            return (phi, true);
        }
        let mut parts = vec![phi.body.clone()];
        parts.extend(pi.iter().map(|v| cube(v, set)));
        (set.formula(normalize(&Prop::or(parts), set)), true)
    }

    /// The weakest safe spec for `f` with the other specs of `delta` fixed.
    /// The flag is false if the search stopped early; the spec returned is
    /// then the last one proven safe.
    pub fn weaken(
        &mut self,
        delta: &Interface,
        f: &str,
        sets: &BTreeMap<String, FeatureSet>,
        deadline: Instant,
    ) -> (Formula, bool) {
        let set = &sets[f];
        let phi = delta.specs[f].clone();
        let cfg = self.cfg;
        let queries = cfg.queries();
        let qs: Vec<&VerificationQuery> = queries.iter().filter(|q| q.mentions(f)).collect();
        let top = delta.with(f, Formula::top());
        let mut pi = BTreeSet::new();
        let mut omega = BTreeSet::new();
        let mut w = set.formula(Prop::False);
        let mut safe = phi.clone();
        loop {
            if Instant::now() >= deadline {
                return (safe, false);
            }
            // a safe execution the current candidate rejects
            let mut admitted = vec![phi.body.clone(), w.body.clone()];
            admitted.extend(omega.iter().map(|v| cube(v, set)));
            let target = delta.with(f, set.formula(Prop::or(admitted)));
            let mut found = None;
            for q in &qs {
                let (Ok(a), Ok(b)) = (substitute(q, &top, &self.sigs), substitute(q, &target, &self.sigs)) else {
                    return (safe, false);
                };
                match self.verifier.verify(&Prop::implies(Prop::and(vec![a, q.phi.clone()]), b)) {
                    VerifyResult::Ok => {}
                    VerifyResult::Sat(s) => {
                        found = Some((*q, s));
                        break;
                    }
                    VerifyResult::Unknown(_) => return (safe, false),
                }
            }
            let Some((q, s)) = found else { return self.sweep(delta, f, set, &qs, safe, deadline) };
            self.metrics.weakening_iterations += 1;
            let cands: Vec<FeatureVector> = self
                .vectors_in(q, f, set, &s)
                .into_iter()
                .filter(|fv| !classify(&phi, set, fv) && !pi.contains(fv) && !omega.contains(fv))
                .collect();
            if cands.is_empty() || self.update(delta, f, set, &qs, cands, &mut pi, &mut omega).is_none() {
                return (safe, false);
            }
            // safety loop: the learner may generalize past what was checked
            loop {
                w = if pi.is_empty() {
                    set.formula(Prop::False)
                } else {
                    match relearn(set, &pi, &omega) {
                        Ok(w) => w,
                        Err(_) => return (safe, false),
                    }
                };
                let cand = set.formula(normalize(&Prop::or(vec![phi.body.clone(), w.body.clone()]), set));
                match self.safe_for(&delta.with(f, cand.clone()), &qs) {
                    Check::Safe => {
                        safe = cand;
                        break;
                    }
                    Check::Unknown => return (safe, false),
                    Check::Unsafe(i, s) => {
                        let cands: Vec<FeatureVector> = self
                            .vectors_in(qs[i], f, set, &s)
                            .into_iter()
                            .filter(|fv| classify(&w, set, fv) && !classify(&phi, set, fv) && !pi.contains(fv))
                            .collect();
                        if cands.is_empty() || self.update(delta, f, set, &qs, cands, &mut pi, &mut omega).is_none() {
                            return (safe, false);
                        }
                    }
                }
            }
        }
    }
}
