//! ID3 decision trees over feature vectors.

use std::collections::BTreeSet;

use crate::logic::normal::{Cube, Dnf};
use crate::logic::{FeatureSet, FeatureVector, Formula};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LearnError {
    #[error("vector {0} is labeled both positive and negative")]
    NotDisjoint(FeatureVector),
    #[error("vector of length {0} does not match a feature set of size {1}")]
    Length(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecisionTree {
    Leaf(bool),
    Node { feature: usize, yes: Box<DecisionTree>, no: Box<DecisionTree> },
}

impl DecisionTree {
    pub fn classify(&self, fv: &FeatureVector) -> bool {
        match self {
            DecisionTree::Leaf(b) => *b,
            DecisionTree::Node { feature, yes, no } => {
                if fv.0[*feature] {
                    yes.classify(fv)
                } else {
                    no.classify(fv)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 0,
            DecisionTree::Node { yes, no, .. } => 1 + yes.depth().max(no.depth()),
        }
    }
}

pub struct LabeledData<'a> {
    pub feature_set: &'a FeatureSet,
    pub pi: &'a BTreeSet<FeatureVector>,
    pub omega: &'a BTreeSet<FeatureVector>,
}

impl LabeledData<'_> {
    fn check(&self) -> Result<(), LearnError> {
        let n = self.feature_set.len();
        for fv in self.pi.iter().chain(self.omega) {
            if fv.len() != n {
                return Err(LearnError::Length(fv.len(), n));
            }
        }
        if let Some(fv) = self.pi.intersection(self.omega).next() {
            return Err(LearnError::NotDisjoint(fv.clone()));
        }
        Ok(())
    }
}

fn entropy(p: usize, n: usize) -> f64 {
    let t = (p + n) as f64;
    let mut h = 0.0;
    for c in [p, n] {
        if c > 0 {
            let q = c as f64 / t;
            h -= q * q.log2();
        }
    }
    h
}

fn build(pos: &[&FeatureVector], neg: &[&FeatureVector], used: &mut Vec<bool>, parent: bool) -> DecisionTree {
    if pos.is_empty() && neg.is_empty() {
        return DecisionTree::Leaf(parent);
    }
    if neg.is_empty() {
        return DecisionTree::Leaf(true);
    }
    if pos.is_empty() {
        return DecisionTree::Leaf(false);
    }
    let total = (pos.len() + neg.len()) as f64;
    let base = entropy(pos.len(), neg.len());
    let mut best: Option<(usize, f64)> = None;
    for i in 0..used.len() {
        if used[i] {
            continue;
        }
        let pt = pos.iter().filter(|v| v.0[i]).count();
        let nt = neg.iter().filter(|v| v.0[i]).count();
        let (pf, nf) = (pos.len() - pt, neg.len() - nt);
        if pt + nt == 0 || pf + nf == 0 {
            continue;
        }
        let gain = base
            - ((pt + nt) as f64 / total) * entropy(pt, nt)
            - ((pf + nf) as f64 / total) * entropy(pf, nf);
        if best.map_or(true, |(_, g)| gain > g + 1e-12) {
            best = Some((i, gain));
        }
    }
    let Some((i, _)) = best else {
        // unreachable for disjoint data: the sets differ on some unused feature
        return DecisionTree::Leaf(pos.len() >= neg.len());
    };
    let majority = pos.len() >= neg.len();
    fn part<'a>(vs: &[&'a FeatureVector], i: usize, b: bool) -> Vec<&'a FeatureVector> {
        vs.iter().copied().filter(|v| v.0[i] == b).collect()
    }
    let split = |vs, b| part(vs, i, b);
    let (pt, pf, nt, nf) = (split(pos, true), split(pos, false), split(neg, true), split(neg, false));
    used[i] = true;
    let yes = build(&pt, &nt, used, majority);
    let no = build(&pf, &nf, used, majority);
    used[i] = false;
    if yes == no {
        return yes;
    }
    DecisionTree::Node { feature: i, yes: Box::new(yes), no: Box::new(no) }
}

pub fn learn_tree(data: &LabeledData) -> Result<DecisionTree, LearnError> {
    data.check()?;
    let pos: Vec<&FeatureVector> = data.pi.iter().collect();
    let neg: Vec<&FeatureVector> = data.omega.iter().collect();
    let mut used = vec![false; data.feature_set.len()];
    Ok(build(&pos, &neg, &mut used, true))
}

pub fn tree_to_dnf(t: &DecisionTree) -> Dnf {
    fn walk(t: &DecisionTree, path: &mut Cube, out: &mut Vec<Cube>) {
        match t {
            DecisionTree::Leaf(true) => out.push(path.clone()),
            DecisionTree::Leaf(false) => {}
            DecisionTree::Node { feature, yes, no } => {
                path.push((*feature, true));
                walk(yes, path, out);
                path.pop();
                path.push((*feature, false));
                walk(no, path, out);
                path.pop();
            }
        }
    }
    let mut cubes = Vec::new();
    walk(t, &mut Vec::new(), &mut cubes);
    Dnf { cubes }.simplify()
}

pub fn tree_to_formula(t: &DecisionTree, s: &FeatureSet) -> Formula {
    s.formula(tree_to_dnf(t).to_prop(s))
}

/// Learns a formula over `s` separating π (positive) from ω (negative).
pub fn learn(data: &LabeledData) -> Result<Formula, LearnError> {
    let t = learn_tree(data)?;
    Ok(tree_to_formula(&t, data.feature_set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{all_vectors, build_feature_set, classify, MethodPredicate, Prop, Sort, Var};
    use crate::logic::FunctionSig;

    fn top_set() -> FeatureSet {
        let sig = FunctionSig::new("top", vec![Var::container("l", "stack")], Var::elem("nu"));
        let p = vec![
            MethodPredicate::new("hd", vec![Sort::container("stack"), Sort::Element]),
            MethodPredicate::new("mem", vec![Sort::container("stack"), Sort::Element]),
        ];
        build_feature_set(&p, &sig, &[Var::elem("u")]).unwrap()
    }

    fn fv(b: &[bool]) -> FeatureVector {
        FeatureVector(b.to_vec())
    }

    #[test]
    fn learns_top_spec_from_tables() {
        let s = top_set();
        let pi: BTreeSet<_> = [fv(&[true, true, true]), fv(&[false, false, false])].into();
        let omega: BTreeSet<_> = [fv(&[false, false, true])].into();
        let phi = learn(&LabeledData { feature_set: &s, pi: &pi, omega: &omega }).unwrap();
        // nu = u => hd(l, u)
        let expected = Prop::implies(s.literal(2, true), s.literal(0, true));
        let disagreements = all_vectors(3)
            .filter(|v| classify(&phi, &s, v) != crate::logic::eval_body(&expected, &s, v))
            .count();
        assert!(classify(&phi, &s, &fv(&[true, true, true])));
        assert!(classify(&phi, &s, &fv(&[false, false, false])));
        assert!(!classify(&phi, &s, &fv(&[false, false, true])));
        assert_eq!(disagreements, 0, "learned {phi}");
    }

    #[test]
    fn empty_data_is_top() {
        let s = top_set();
        let e = BTreeSet::new();
        let phi = learn(&LabeledData { feature_set: &s, pi: &e, omega: &e }).unwrap();
        assert_eq!(phi.body, Prop::True);
    }

    #[test]
    fn leaves_map_to_constants() {
        let s = top_set();
        assert_eq!(tree_to_formula(&DecisionTree::Leaf(true), &s).body, Prop::True);
        assert_eq!(tree_to_formula(&DecisionTree::Leaf(false), &s).body, Prop::False);
    }

    #[test]
    fn overlapping_data_is_rejected() {
        let s = top_set();
        let pi: BTreeSet<_> = [fv(&[true, true, true])].into();
        assert!(matches!(
            learn(&LabeledData { feature_set: &s, pi: &pi, omega: &pi }),
            Err(LearnError::NotDisjoint(_))
        ));
    }
}
