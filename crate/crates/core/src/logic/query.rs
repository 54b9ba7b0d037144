use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::features::{all_vectors, eval_body, FeatureSet, FunctionSig};
use super::formula::{fresh_name, Formula, Prop, Term, Var};
use super::LogicError;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlaceholderApp {
    pub function: String,
    pub args: Vec<Var>,
    pub result: Var,
}

impl PlaceholderApp {
    pub fn new(function: &str, args: Vec<Var>, result: Var) -> PlaceholderApp {
        PlaceholderApp { function: function.to_string(), args, result }
    }
}

/// One step of a client path, in program order. Used to run the path
/// concretely; the logical content is mirrored in `sigma`, `constraints`
/// and `phi`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathStep {
    Apply(PlaceholderApp),
    /// Recursive call of the client itself.
    Recurse { args: Vec<Var>, result: Var },
    /// Branch condition or binding equality (a literal).
    Assume(Prop),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationQuery {
    pub name: String,
    /// Client inputs.
    pub inputs: Vec<Var>,
    pub sigma: Vec<PlaceholderApp>,
    /// Equalities and Boolean literals of the path.
    pub constraints: Vec<Prop>,
    pub phi: Prop,
    pub trace: Vec<PathStep>,
}

impl VerificationQuery {
    /// A query without an executable trace.
    pub fn new(name: &str, inputs: Vec<Var>, sigma: Vec<PlaceholderApp>, constraints: Vec<Prop>, phi: Prop) -> Self {
        let mut trace: Vec<PathStep> = sigma.iter().cloned().map(PathStep::Apply).collect();
        trace.extend(constraints.iter().cloned().map(PathStep::Assume));
        VerificationQuery { name: name.to_string(), inputs, sigma, constraints, phi, trace }
    }

    pub fn functions(&self) -> BTreeSet<&str> {
        self.sigma.iter().map(|a| a.function.as_str()).collect()
    }

    pub fn mentions(&self, f: &str) -> bool {
        self.sigma.iter().any(|a| a.function == f)
    }

    /// Every variable of the path: inputs, application arguments and results.
    pub fn program_vars(&self) -> BTreeSet<Var> {
        let mut out: BTreeSet<Var> = self.inputs.iter().cloned().collect();
        for a in &self.sigma {
            out.extend(a.args.iter().cloned());
            out.insert(a.result.clone());
        }
        for c in &self.constraints {
            out.extend(c.free_vars());
        }
        out
    }

    /// Checks that every free variable of phi is housed by the path.
    pub fn check_scoping(&self) -> Result<(), LogicError> {
        let vars = self.program_vars();
        let names: BTreeSet<&str> = vars.iter().map(|v| v.name.as_str()).collect();
        for v in self.phi.free_vars() {
            if !names.contains(v.name.as_str()) {
                return Err(LogicError::Unassigned(v.name));
            }
        }
        Ok(())
    }
}

/// Δ: one formula per library function, over that function's formal
/// parameters, result and quantified variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interface {
    pub specs: BTreeMap<String, Formula>,
}

impl Interface {
    pub fn all_top<'a>(functions: impl IntoIterator<Item = &'a String>) -> Interface {
        Interface { specs: functions.into_iter().map(|f| (f.clone(), Formula::top())).collect() }
    }

    pub fn get(&self, f: &str) -> Option<&Formula> {
        self.specs.get(f)
    }

    pub fn with(&self, f: &str, phi: Formula) -> Interface {
        let mut d = self.clone();
        d.specs.insert(f.to_string(), phi);
        d
    }
}

/// Δ(R_f) instantiated at an application: formals renamed to the actual
/// arguments, quantified variables renamed apart from `avoid`.
pub fn instantiate(
    phi: &Formula,
    sig: &FunctionSig,
    app: &PlaceholderApp,
    avoid: &mut BTreeSet<String>,
) -> Result<Prop, LogicError> {
    if sig.params.len() != app.args.len() {
        return Err(LogicError::Arity(app.function.clone()));
    }
    let mut map = BTreeMap::new();
    for (formal, actual) in sig.params.iter().zip(&app.args).chain([(&sig.result, &app.result)]) {
        if formal.sort != actual.sort {
            return Err(LogicError::IllSorted(format!(
                "{} argument {} has sort {}, expected {}",
                app.function, actual.name, actual.sort, formal.sort
            )));
        }
        map.insert(formal.name.clone(), Term::Var(actual.clone()));
    }
    let mut qs = Vec::new();
    for q in &phi.quantified {
        let n = if avoid.contains(&q.name) { fresh_name(&q.name, avoid) } else { q.name.clone() };
        avoid.insert(n.clone());
        let nv = Var::new(&n, q.sort.clone());
        map.insert(q.name.clone(), Term::Var(nv.clone()));
        qs.push(nv);
    }
    Ok(Prop::forall(qs, phi.body.subst(&map)))
}

/// Σ[Δ]: each application replaced by its instantiated spec, constraints
/// conjoined unchanged.
pub fn substitute(
    q: &VerificationQuery,
    delta: &Interface,
    sigs: &BTreeMap<String, FunctionSig>,
) -> Result<Prop, LogicError> {
    let mut avoid = BTreeSet::new();
    q.phi.all_names(&mut avoid);
    for v in q.program_vars() {
        avoid.insert(v.name);
    }
    let mut parts = Vec::new();
    for app in &q.sigma {
        let phi = delta.get(&app.function).ok_or_else(|| LogicError::MissingSpec(app.function.clone()))?;
        let sig = sigs.get(&app.function).ok_or_else(|| LogicError::MissingSpec(app.function.clone()))?;
        parts.push(instantiate(phi, sig, app, &mut avoid)?);
    }
    parts.extend(q.constraints.iter().cloned());
    Ok(Prop::and(parts))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    /// The second interface is strictly weaker.
    Weaker,
    /// The second interface is strictly stronger.
    Stronger,
    Equal,
    Incomparable,
}

/// Interface order decided by comparing φ⁺ sets on feature vectors.
pub fn interface_order_by_vectors(
    d1: &Interface,
    d2: &Interface,
    sets: &BTreeMap<String, FeatureSet>,
) -> Result<Order, LogicError> {
    let k1: BTreeSet<_> = d1.specs.keys().collect();
    let k2: BTreeSet<_> = d2.specs.keys().collect();
    if k1 != k2 {
        return Err(LogicError::DomainMismatch);
    }
    let (mut le, mut ge) = (true, true);
    for (f, p1) in &d1.specs {
        let p2 = &d2.specs[f];
        let s = sets.get(f).ok_or_else(|| LogicError::MissingSpec(f.clone()))?;
        for fv in all_vectors(s.len()) {
            let (a, b) = (eval_body(&p1.body, s, &fv), eval_body(&p2.body, s, &fv));
            if a && !b {
                le = false;
            }
            if b && !a {
                ge = false;
            }
        }
    }
    Ok(order_of(le, ge))
}

pub fn order_of(d1_implies_d2: bool, d2_implies_d1: bool) -> Order {
    match (d1_implies_d2, d2_implies_d1) {
        (true, true) => Order::Equal,
        (true, false) => Order::Weaker,
        (false, true) => Order::Stronger,
        (false, false) => Order::Incomparable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Atom;

    fn sigs() -> BTreeMap<String, FunctionSig> {
        let mut m = BTreeMap::new();
        m.insert(
            "top".to_string(),
            FunctionSig::new("top", vec![Var::container("l", "stack")], Var::elem("nu")),
        );
        m
    }

    #[test]
    fn substitute_renames_formals_and_quantifiers() {
        let s1 = Var::container("s1", "stack");
        let h = Var::elem("h");
        let u = Var::elem("u");
        let q = VerificationQuery::new(
            "q",
            vec![s1.clone()],
            vec![PlaceholderApp::new("top", vec![s1.clone()], h.clone())],
            vec![],
            Prop::forall(vec![u.clone()], Prop::atom(Atom::pred("mem", &[&s1, &u]))),
        );
        let body = Prop::implies(
            Prop::atom(Atom::eq(&Var::elem("nu"), &u)),
            Prop::atom(Atom::pred("hd", &[&Var::container("l", "stack"), &u])),
        );
        let delta = Interface::all_top(["top".to_string()].iter()).with("top", Formula::new(vec![u.clone()], body));
        let p = substitute(&q, &delta, &sigs()).unwrap();
        assert_eq!(p.to_string(), "forall u_1. h = u_1 => hd(s1, u_1)");
    }

    #[test]
    fn all_top_substitution_is_constraints_only() {
        let b = Var::boolean("b");
        let q = VerificationQuery::new(
            "q",
            vec![],
            vec![PlaceholderApp::new("top", vec![Var::container("s", "stack")], Var::elem("h"))],
            vec![Prop::atom(Atom::Bool(b))],
            Prop::True,
        );
        let delta = Interface::all_top(["top".to_string()].iter());
        assert_eq!(substitute(&q, &delta, &sigs()).unwrap(), q.constraints[0]);
    }

    #[test]
    fn missing_spec_is_reported() {
        let q = VerificationQuery::new(
            "q",
            vec![],
            vec![PlaceholderApp::new("top", vec![Var::container("s", "stack")], Var::elem("h"))],
            vec![],
            Prop::True,
        );
        assert!(matches!(
            substitute(&q, &Interface::default(), &sigs()),
            Err(LogicError::MissingSpec(_))
        ));
    }

    #[test]
    fn ill_sorted_application_is_reported() {
        let q = VerificationQuery::new(
            "q",
            vec![],
            vec![PlaceholderApp::new("top", vec![Var::elem("s")], Var::elem("h"))],
            vec![],
            Prop::True,
        );
        let delta = Interface::all_top(["top".to_string()].iter());
        assert!(matches!(substitute(&q, &delta, &sigs()), Err(LogicError::IllSorted(_))));
    }
}
