//! Verification oracle: validity and satisfiability checks over
//! effectively propositional sentences, with models decoded into samples.

pub mod epr;
pub mod ground;
pub mod process;
pub mod server;
pub mod smtlib;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use crate::logic::{
    substitute, Domain, Formula, FunctionSig, Interface, Label, MethodPredicate, Prop, Sample,
    VerificationQuery,
};

pub use epr::EprProblem;
pub use ground::GroundSolver;
pub use process::ProcessSolver;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SmtError {
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("formula is outside the EPR fragment: {0}")]
    NotEpr(String),
    #[error("solver process: {0}")]
    Process(String),
    #[error("solver protocol: {0}")]
    Protocol(String),
    #[error("unknown: {0}")]
    Unknown(String),
}

#[derive(Clone, Debug)]
pub enum SolveResult {
    Unsat,
    Sat(Sample),
    Unknown(String),
}

pub trait Solver: Send + Sync {
    fn solve(&self, problem: &EprProblem, timeout: Duration) -> Result<SolveResult, SmtError>;
    fn name(&self) -> String;
}

#[derive(Clone, Debug)]
pub enum VerifyResult {
    Ok,
    /// A model of the negation, as a negative sample.
    Sat(Sample),
    Unknown(String),
}

impl VerifyResult {
    pub fn is_ok(&self) -> bool {
        matches!(self, VerifyResult::Ok)
    }
}

/// Solver selection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Backend {
    Ground,
    /// An SMT-LIB v2 solver binary and its arguments.
    Process { program: String, args: Vec<String> },
}

impl Backend {
    /// `ground`, or a command line such as `z3 -in` / `cvc5 --lang smt2`.
    pub fn parse(spec: &str) -> Backend {
        let spec = spec.trim();
        if spec.is_empty() || spec == "ground" {
            return Backend::Ground;
        }
        let mut parts = spec.split_whitespace().map(String::from);
        let program = parts.next().unwrap();
        let mut args: Vec<String> = parts.collect();
        if args.is_empty() {
            let base = std::path::Path::new(&program)
                .file_name()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_default();
            args = match base.as_str() {
                "z3" => vec!["-in".into(), "-smt2".into()],
                "cvc5" | "cvc4" => vec!["--lang".into(), "smt2".into(), "--incremental".into()],
                _ => vec![],
            };
        }
        Backend::Process { program, args }
    }

    pub fn solver(&self) -> Arc<dyn Solver> {
        match self {
            Backend::Ground => Arc::new(GroundSolver::default()),
            Backend::Process { program, args } => Arc::new(ProcessSolver::new(program, args.clone())),
        }
    }
}

static HANDSHAKE_CHECKS: AtomicU64 = AtomicU64::new(0);
static HANDSHAKE_VIOLATIONS: AtomicU64 = AtomicU64::new(0);

/// (models checked, models that failed re-evaluation) since process start.
pub fn handshake_counts() -> (u64, u64) {
    (HANDSHAKE_CHECKS.load(Ordering::SeqCst), HANDSHAKE_VIOLATIONS.load(Ordering::SeqCst))
}

fn handshake(p: &Prop, sample: &Sample, expected: bool) {
    HANDSHAKE_CHECKS.fetch_add(1, Ordering::SeqCst);
    match sample.eval(p, Domain::Universe) {
        Ok(b) if b == expected => {}
        other => {
            HANDSHAKE_VIOLATIONS.fetch_add(1, Ordering::SeqCst);
            eprintln!("model check failed ({other:?}) for {p}\n  model: {sample}");
        }
    }
}

#[derive(Clone, Debug)]
pub enum SatCheck {
    Sat(Sample),
    Unsat,
    Unknown(String),
}

pub struct Verifier {
    solver: Arc<dyn Solver>,
    pub timeout: Duration,
    pub predicates: Vec<MethodPredicate>,
    calls: AtomicU64,
}

impl Verifier {
    pub fn new(solver: Arc<dyn Solver>, predicates: Vec<MethodPredicate>, timeout: Duration) -> Verifier {
        Verifier { solver, timeout, predicates, calls: AtomicU64::new(0) }
    }

    pub fn ground(predicates: Vec<MethodPredicate>) -> Verifier {
        Verifier::new(Arc::new(GroundSolver::default()), predicates, Duration::from_secs(10))
    }

    pub fn solver_name(&self) -> String {
        self.solver.name()
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Satisfiability of `p` with its free variables read as constants.
    pub fn satisfiable(&self, p: &Prop) -> SatCheck {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let problem = match EprProblem::satisfiability(p, &self.predicates) {
            Ok(e) => e,
            Err(e) => return SatCheck::Unknown(e.to_string()),
        };
        match self.solver.solve(&problem, self.timeout) {
            Ok(SolveResult::Unsat) => SatCheck::Unsat,
            Ok(SolveResult::Sat(mut s)) => {
                s.assignment.retain(|k, _| !k.contains('!'));
                handshake(p, &s, true);
                SatCheck::Sat(s)
            }
            Ok(SolveResult::Unknown(r)) => SatCheck::Unknown(r),
            Err(e) => SatCheck::Unknown(e.to_string()),
        }
    }

    /// Validity of a sentence; Sat carries a countermodel.
    pub fn verify(&self, sentence: &Prop) -> VerifyResult {
        let neg = Prop::not(sentence.clone());
        match self.satisfiable(&neg) {
            SatCheck::Unsat => VerifyResult::Ok,
            SatCheck::Sat(mut s) => {
                s.label = Label::Negative;
                VerifyResult::Sat(s)
            }
            SatCheck::Unknown(r) => VerifyResult::Unknown(r),
        }
    }

    /// Σ[Δ] is satisfiable.
    pub fn check_nontrivial(
        &self,
        q: &VerificationQuery,
        delta: &Interface,
        sigs: &BTreeMap<String, FunctionSig>,
    ) -> Result<bool, String> {
        let p = substitute(q, delta, sigs).map_err(|e| e.to_string())?;
        match self.satisfiable(&p) {
            SatCheck::Sat(_) => Ok(true),
            SatCheck::Unsat => Ok(false),
            SatCheck::Unknown(r) => Err(r),
        }
    }

    /// φ1 ⟹ φ2 is valid (free variables shared, quantifiers separate).
    pub fn entails(&self, phi1: &Formula, phi2: &Formula) -> Result<bool, String> {
        match self.verify(&Prop::implies(phi1.to_prop(), phi2.to_prop())) {
            VerifyResult::Ok => Ok(true),
            VerifyResult::Sat(_) => Ok(false),
            VerifyResult::Unknown(r) => Err(r),
        }
    }

    pub fn equivalent(&self, phi1: &Formula, phi2: &Formula) -> Result<bool, String> {
        Ok(self.entails(phi1, phi2)? && self.entails(phi2, phi1)?)
    }
}

/// Interface order decided per function by entailment.
pub fn interface_order(
    v: &Verifier,
    d1: &Interface,
    d2: &Interface,
) -> Result<crate::logic::Order, String> {
    if d1.specs.keys().ne(d2.specs.keys()) {
        return Err("interfaces have different domains".into());
    }
    let (mut le, mut ge) = (true, true);
    for (f, p1) in &d1.specs {
        let p2 = &d2.specs[f];
        le &= v.entails(p1, p2)?;
        ge &= v.entails(p2, p1)?;
    }
    Ok(crate::logic::order_of(le, ge))
}
