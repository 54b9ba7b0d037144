use std::fmt;

use serde::{Deserialize, Serialize};

use super::formula::{Atom, Formula, Prop, Sort, Term, Var};
use super::LogicError;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MethodPredicate {
    pub name: String,
    /// Container positions first, then element positions.
    pub signature: Vec<Sort>,
}

impl MethodPredicate {
    pub fn new(name: &str, signature: Vec<Sort>) -> MethodPredicate {
        MethodPredicate { name: name.to_string(), signature }
    }

    pub fn validate(&self) -> Result<(), LogicError> {
        if self.signature.is_empty() {
            return Err(LogicError::BadPredicate(self.name.clone(), "empty signature".into()));
        }
        if self.signature.iter().any(|s| *s == Sort::Bool) {
            return Err(LogicError::BadPredicate(
                self.name.clone(),
                "boolean positions are not allowed".into(),
            ));
        }
        let containers = self.signature.iter().filter(|s| s.is_container()).count();
        if containers > 1 {
            return Err(LogicError::BadPredicate(
                self.name.clone(),
                "at most one container position".into(),
            ));
        }
        if containers == 1 && !self.signature[0].is_container() {
            return Err(LogicError::BadPredicate(
                self.name.clone(),
                "the container position must come first".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunctionSig {
    pub name: String,
    pub params: Vec<Var>,
    pub result: Var,
}

impl FunctionSig {
    pub fn new(name: &str, params: Vec<Var>, result: Var) -> FunctionSig {
        FunctionSig { name: name.to_string(), params, result }
    }

    /// Params followed by the result.
    pub fn vars(&self) -> Vec<Var> {
        let mut v = self.params.clone();
        v.push(self.result.clone());
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub function: String,
    pub params: Vec<Var>,
    pub result: Var,
    pub quantified: Vec<Var>,
    pub features: Vec<Atom>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, atom: &Atom) -> Option<usize> {
        self.features.iter().position(|f| f.same(atom))
    }

    pub fn literal(&self, i: usize, value: bool) -> Prop {
        let a = Prop::atom(self.features[i].clone());
        if value {
            a
        } else {
            Prop::not(a)
        }
    }

    pub fn formula(&self, body: Prop) -> Formula {
        Formula::new(self.quantified.clone(), body)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<bool>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn from_bits(bits: u64, n: usize) -> FeatureVector {
        FeatureVector((0..n).map(|i| bits >> i & 1 == 1).collect())
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", if *b { "T" } else { "F" })?;
        }
        write!(f, ")")
    }
}

/// Canonical quantified variable names `u1..uk`.
pub fn quantified_vars(k: usize) -> Vec<Var> {
    (1..=k).map(|i| Var::elem(&format!("u{i}"))).collect()
}

fn tuples(vars: &[Var], n: usize) -> Vec<Vec<Var>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for t in &out {
            for v in vars {
                let mut t = t.clone();
                t.push(v.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Builds the feature set of `f` over `u`.
///
/// Predicate applications take container arguments from the params and the
/// result, element arguments only from `u`. Equalities pair every two distinct
/// element-sorted variables. Boolean params and result come last as atoms.
pub fn build_feature_set(
    preds: &[MethodPredicate],
    sig: &FunctionSig,
    u: &[Var],
) -> Result<FeatureSet, LogicError> {
    for p in preds {
        p.validate()?;
    }
    let all = sig.vars();
    for (i, v) in all.iter().chain(u).enumerate() {
        if all.iter().chain(u).skip(i + 1).any(|w| w.name == v.name) {
            return Err(LogicError::DuplicateVar(v.name.clone()));
        }
    }
    if let Some(q) = u.iter().find(|q| q.sort != Sort::Element) {
        return Err(LogicError::BadQuantifier(q.name.clone()));
    }

    let mut features = Vec::new();
    for cv in all.iter().filter(|v| v.sort.is_container()) {
        for p in preds.iter().filter(|p| p.signature[0] == cv.sort) {
            for t in tuples(u, p.signature.len() - 1) {
                let mut args = vec![Term::Var(cv.clone())];
                args.extend(t.into_iter().map(Term::Var));
                features.push(Atom::Pred { name: p.name.clone(), args });
            }
        }
    }
    for p in preds.iter().filter(|p| !p.signature[0].is_container()) {
        for t in tuples(u, p.signature.len()) {
            features.push(Atom::Pred {
                name: p.name.clone(),
                args: t.into_iter().map(Term::Var).collect(),
            });
        }
    }
    let elems: Vec<&Var> = all.iter().chain(u).filter(|v| v.sort == Sort::Element).collect();
    for i in 0..elems.len() {
        for j in i + 1..elems.len() {
            features.push(Atom::eq(elems[i], elems[j]));
        }
    }
    for b in all.iter().filter(|v| v.sort == Sort::Bool) {
        features.push(Atom::Bool(b.clone()));
    }
    Ok(FeatureSet {
        function: sig.name.clone(),
        params: sig.params.clone(),
        result: sig.result.clone(),
        quantified: u.to_vec(),
        features,
    })
}

/// The cube asserting exactly `fv` (without the quantifier prefix).
pub fn cube(fv: &FeatureVector, s: &FeatureSet) -> Prop {
    assert_eq!(fv.len(), s.len(), "feature vector length mismatch");
    Prop::and(fv.0.iter().enumerate().map(|(i, b)| s.literal(i, *b)).collect())
}

pub fn unitary_classifier(fv: &FeatureVector, s: &FeatureSet) -> Formula {
    s.formula(cube(fv, s))
}

/// Evaluates a quantifier-free body over the atom assignment given by `fv`.
pub fn eval_body(body: &Prop, s: &FeatureSet, fv: &FeatureVector) -> bool {
    body.eval_with(&mut |a| match s.index_of(a) {
        Some(i) => fv.0[i],
        None => panic!("atom {a} is not a feature of {}", s.function),
    })
}

/// Positive iff the body of `phi` is propositionally true under `fv`.
pub fn classify(phi: &Formula, s: &FeatureSet, fv: &FeatureVector) -> bool {
    assert_eq!(fv.len(), s.len(), "feature vector length mismatch");
    eval_body(&phi.body, s, fv)
}

pub fn all_vectors(n: usize) -> impl Iterator<Item = FeatureVector> {
    assert!(n < 32, "refusing to enumerate 2^{n} vectors");
    (0..1u64 << n).map(move |b| FeatureVector::from_bits(b, n))
}

/// |φ⁺|: the number of vectors over `s` classified positive, by Shannon expansion.
pub fn positive_count(body: &Prop, s: &FeatureSet) -> u128 {
    let mut assign: Vec<Option<bool>> = vec![None; s.len()];
    count_models(body, s, &mut assign, 0)
}

fn partial_eval(p: &Prop, s: &FeatureSet, assign: &[Option<bool>]) -> Option<bool> {
    match p {
        Prop::True => Some(true),
        Prop::False => Some(false),
        Prop::Atom(a) => {
            let i = s.index_of(a).unwrap_or_else(|| panic!("atom {a} is not a feature"));
            assign[i]
        }
        Prop::Not(q) => partial_eval(q, s, assign).map(|b| !b),
        Prop::And(ps) => {
            let mut unknown = false;
            for q in ps {
                match partial_eval(q, s, assign) {
                    Some(false) => return Some(false),
                    None => unknown = true,
                    _ => {}
                }
            }
            if unknown {
                None
            } else {
                Some(true)
            }
        }
        Prop::Or(ps) => {
            let mut unknown = false;
            for q in ps {
                match partial_eval(q, s, assign) {
                    Some(true) => return Some(true),
                    None => unknown = true,
                    _ => {}
                }
            }
            if unknown {
                None
            } else {
                Some(false)
            }
        }
        Prop::Implies(a, b) => match (partial_eval(a, s, assign), partial_eval(b, s, assign)) {
            (Some(false), _) | (_, Some(true)) => Some(true),
            (Some(true), Some(false)) => Some(false),
            _ => None,
        },
        Prop::Iff(a, b) => match (partial_eval(a, s, assign), partial_eval(b, s, assign)) {
            (Some(x), Some(y)) => Some(x == y),
            _ => None,
        },
        Prop::Forall(..) => panic!("quantifier inside a formula body"),
    }
}

fn count_models(p: &Prop, s: &FeatureSet, assign: &mut Vec<Option<bool>>, next: usize) -> u128 {
    let free = assign[next..].iter().filter(|a| a.is_none()).count() as u32;
    match partial_eval(p, s, assign) {
        Some(true) => 1u128 << free,
        Some(false) => 0,
        None => {
            let i = (next..assign.len()).find(|&i| assign[i].is_none()).unwrap();
            let mut total = 0;
            for b in [true, false] {
                assign[i] = Some(b);
                total += count_models(p, s, assign, i + 1);
            }
            assign[i] = None;
            total
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack_preds() -> Vec<MethodPredicate> {
        let st = Sort::container("stack");
        vec![
            MethodPredicate::new("hd", vec![st.clone(), Sort::Element]),
            MethodPredicate::new("mem", vec![st, Sort::Element]),
        ]
    }

    fn top_sig() -> FunctionSig {
        FunctionSig::new("top", vec![Var::container("l", "stack")], Var::elem("nu"))
    }

    #[test]
    fn top_feature_set_matches_worked_example() {
        let u = vec![Var::elem("u")];
        let s = build_feature_set(&stack_preds(), &top_sig(), &u).unwrap();
        let shown: Vec<String> = s.features.iter().map(|a| a.to_string()).collect();
        assert_eq!(shown, vec!["hd(l, u)", "mem(l, u)", "nu = u"]);
    }

    #[test]
    fn push_feature_set_matches_worked_example() {
        let sig = FunctionSig::new(
            "push",
            vec![Var::elem("x"), Var::container("l", "stack")],
            Var::container("nu", "stack"),
        );
        let s = build_feature_set(&stack_preds(), &sig, &[Var::elem("u")]).unwrap();
        let shown: Vec<String> = s.features.iter().map(|a| a.to_string()).collect();
        assert_eq!(shown, vec!["hd(l, u)", "mem(l, u)", "hd(nu, u)", "mem(nu, u)", "x = u"]);
    }

    #[test]
    fn elem_to_elem_without_quantifiers() {
        let sig = FunctionSig::new("f", vec![Var::elem("a")], Var::elem("nu"));
        let s = build_feature_set(&[], &sig, &[]).unwrap();
        assert_eq!(s.features, vec![Atom::eq(&Var::elem("a"), &Var::elem("nu"))]);
    }

    #[test]
    fn boolean_result_is_a_feature() {
        let sig = FunctionSig::new("is_empty", vec![Var::container("s", "stack")], Var::boolean("nu"));
        let s = build_feature_set(&stack_preds(), &sig, &[Var::elem("u")]).unwrap();
        assert_eq!(s.features.last(), Some(&Atom::Bool(Var::boolean("nu"))));
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn quantified_pairs_are_included() {
        let s = build_feature_set(&stack_preds(), &top_sig(), &quantified_vars(2)).unwrap();
        // 2 preds x 2 u's, then nu=u1, nu=u2, u1=u2
        assert_eq!(s.len(), 7);
        assert_eq!(s.features[6], Atom::eq(&Var::elem("u1"), &Var::elem("u2")));
    }

    #[test]
    fn unitary_classifier_of_top_vector() {
        let s = build_feature_set(&stack_preds(), &top_sig(), &[Var::elem("u")]).unwrap();
        let f = unitary_classifier(&FeatureVector(vec![false, false, true]), &s);
        assert_eq!(f.to_string(), "forall u. !hd(l, u) & !mem(l, u) & nu = u");
        let empty = FeatureSet { features: vec![], ..s };
        assert_eq!(unitary_classifier(&FeatureVector(vec![]), &empty).body, Prop::True);
    }

    #[test]
    fn classify_learned_top_spec() {
        let s = build_feature_set(&stack_preds(), &top_sig(), &[Var::elem("u")]).unwrap();
        let phi = s.formula(Prop::implies(s.literal(2, true), s.literal(0, true)));
        assert!(!classify(&phi, &s, &FeatureVector(vec![false, false, true])));
        assert!(classify(&phi, &s, &FeatureVector(vec![true, true, true])));
        assert!(classify(&phi, &s, &FeatureVector(vec![false, false, false])));
        assert!(classify(&Formula::top(), &s, &FeatureVector(vec![false, true, false])));
    }

    #[test]
    fn positive_count_matches_enumeration() {
        let s = build_feature_set(&stack_preds(), &top_sig(), &[Var::elem("u")]).unwrap();
        let body = Prop::implies(s.literal(2, true), s.literal(0, true));
        let n = all_vectors(3).filter(|fv| eval_body(&body, &s, fv)).count() as u128;
        assert_eq!(positive_count(&body, &s), n);
        assert_eq!(n, 6);
    }

    #[test]
    fn bad_predicates_are_rejected() {
        let sig = top_sig();
        let p = MethodPredicate::new("bad", vec![Sort::Element, Sort::container("stack")]);
        assert!(build_feature_set(&[p], &sig, &[]).is_err());
    }
}
