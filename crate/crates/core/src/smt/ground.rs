//! In-process decision procedure for EPR problems: instantiate universals
//! over the finite Herbrand universe, add equality axioms, Tseitin-encode and
//! hand the clauses to a SAT solver.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use varisat::{ExtendFormula, Lit, Solver as SatSolver};

use crate::logic::{Atom, Sample, Sort, Term, ValueId};

use super::epr::{EprProblem, Nnf};
use super::{SmtError, SolveResult, Solver};

#[derive(Clone, Debug)]
pub struct GroundSolver {
    /// Give up (Unknown) past this many ground atoms.
    pub max_atoms: usize,
}

impl Default for GroundSolver {
    fn default() -> Self {
        GroundSolver { max_atoms: 2_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum GAtom {
    Pred(usize, Vec<usize>),
    Eq(usize, usize),
    Bool(usize),
    BoolEq(usize, usize),
}

enum Enc {
    Const(bool),
    Lit(Lit),
}

struct Grounder<'a> {
    problem: &'a EprProblem,
    consts: Vec<(String, Sort)>,
    by_name: HashMap<String, usize>,
    lit_const: BTreeMap<i64, usize>,
    domain: BTreeMap<Sort, Vec<usize>>,
    atoms: HashMap<GAtom, Lit>,
    pred_index: HashMap<String, usize>,
    sat: SatSolver<'static>,
    nvars: usize,
    deadline: Instant,
    limit: usize,
}

impl<'a> Grounder<'a> {
    fn new(problem: &'a EprProblem, timeout: Duration, limit: usize) -> Grounder<'a> {
        let mut g = Grounder {
            problem,
            consts: Vec::new(),
            by_name: HashMap::new(),
            lit_const: BTreeMap::new(),
            domain: BTreeMap::new(),
            atoms: HashMap::new(),
            pred_index: HashMap::new(),
            sat: SatSolver::new(),
            nvars: 0,
            deadline: Instant::now() + timeout,
            limit,
        };
        for c in &problem.constants {
            g.add_const(&c.name, c.sort.clone());
        }
        for l in &problem.literals {
            let id = g.add_const(&format!("lit!{l}"), Sort::Element);
            g.lit_const.insert(*l, id);
        }
        for s in problem.sorts() {
            if !g.domain.contains_key(&s) {
                g.add_const(&format!("dom!{s}"), s);
            }
        }
        for (i, p) in problem.predicates.iter().enumerate() {
            g.pred_index.insert(p.name.clone(), i);
        }
        g
    }

    fn add_const(&mut self, name: &str, sort: Sort) -> usize {
        let id = self.consts.len();
        self.consts.push((name.to_string(), sort.clone()));
        self.by_name.insert(name.to_string(), id);
        if sort != Sort::Bool {
            self.domain.entry(sort).or_default().push(id);
        }
        id
    }

    fn fresh(&mut self) -> Lit {
        let l = Lit::from_index(self.nvars, true);
        self.nvars += 1;
        l
    }

    fn atom(&mut self, a: GAtom) -> Lit {
        if let Some(l) = self.atoms.get(&a) {
            return *l;
        }
        let l = self.fresh();
        self.atoms.insert(a, l);
        l
    }

    fn eq_lit(&mut self, a: usize, b: usize) -> Enc {
        if a == b {
            return Enc::Const(true);
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        Enc::Lit(self.atom(GAtom::Eq(a, b)))
    }

    fn term(&self, t: &Term, env: &[(String, usize)]) -> Result<usize, SmtError> {
        match t {
            Term::Lit(i) => Ok(self.lit_const[i]),
            Term::Var(v) => env
                .iter()
                .rev()
                .find(|(n, _)| *n == v.name)
                .map(|(_, c)| *c)
                .or_else(|| self.by_name.get(&v.name).copied())
                .ok_or_else(|| SmtError::Encoding(format!("undeclared symbol `{}`", v.name))),
        }
    }

    fn encode_atom(&mut self, a: &Atom, env: &[(String, usize)]) -> Result<Enc, SmtError> {
        match a {
            Atom::Pred { name, args } => {
                let p = *self
                    .pred_index
                    .get(name)
                    .ok_or_else(|| SmtError::Encoding(format!("undeclared predicate `{name}`")))?;
                let cs = args.iter().map(|t| self.term(t, env)).collect::<Result<Vec<_>, _>>()?;
                Ok(Enc::Lit(self.atom(GAtom::Pred(p, cs))))
            }
            Atom::Eq(x, y) => {
                let (a, b) = (self.term(x, env)?, self.term(y, env)?);
                if self.consts[a].1 == Sort::Bool {
                    if a == b {
                        return Ok(Enc::Const(true));
                    }
                    let (a, b) = if a < b { (a, b) } else { (b, a) };
                    if let Some(l) = self.atoms.get(&GAtom::BoolEq(a, b)) {
                        return Ok(Enc::Lit(*l));
                    }
                    let e = self.atom(GAtom::BoolEq(a, b));
                    let la = self.atom(GAtom::Bool(a));
                    let lb = self.atom(GAtom::Bool(b));
                    self.sat.add_clause(&[!e, !la, lb]);
                    self.sat.add_clause(&[!e, la, !lb]);
                    self.sat.add_clause(&[e, la, lb]);
                    self.sat.add_clause(&[e, !la, !lb]);
                    return Ok(Enc::Lit(e));
                }
                Ok(self.eq_lit(a, b))
            }
            Atom::Bool(v) => {
                let c = self.term(&Term::Var(v.clone()), env)?;
                Ok(Enc::Lit(self.atom(GAtom::Bool(c))))
            }
        }
    }

    fn encode(&mut self, n: &Nnf, env: &mut Vec<(String, usize)>) -> Result<Enc, SmtError> {
        if self.atoms.len() > self.limit {
            return Err(SmtError::Unknown("ground problem too large".into()));
        }
        match n {
            Nnf::True => Ok(Enc::Const(true)),
            Nnf::False => Ok(Enc::Const(false)),
            Nnf::Lit(pos, a) => Ok(match self.encode_atom(a, env)? {
                Enc::Const(b) => Enc::Const(b == *pos),
                Enc::Lit(l) => Enc::Lit(if *pos { l } else { !l }),
            }),
            Nnf::And(ps) => {
                let mut lits = Vec::new();
                for p in ps {
                    match self.encode(p, env)? {
                        Enc::Const(false) => return Ok(Enc::Const(false)),
                        Enc::Const(true) => {}
                        Enc::Lit(l) => lits.push(l),
                    }
                }
                Ok(self.conj(lits))
            }
            Nnf::Or(ps) => {
                let mut lits = Vec::new();
                for p in ps {
                    match self.encode(p, env)? {
                        Enc::Const(true) => return Ok(Enc::Const(true)),
                        Enc::Const(false) => {}
                        Enc::Lit(l) => lits.push(l),
                    }
                }
                Ok(self.disj(lits))
            }
            Nnf::Forall(vs, body) => {
                if Instant::now() > self.deadline {
                    return Err(SmtError::Unknown("timeout while grounding".into()));
                }
                let mut lits = Vec::new();
                let doms: Vec<Vec<usize>> = vs
                    .iter()
                    .map(|v| self.domain.get(&v.sort).cloned().unwrap_or_default())
                    .collect();
                let mut idx = vec![0usize; vs.len()];
                if doms.iter().any(|d| d.is_empty()) {
                    return Ok(Enc::Const(true));
                }
                loop {
                    let base = env.len();
                    for (v, (d, i)) in vs.iter().zip(doms.iter().zip(&idx)) {
                        env.push((v.name.clone(), d[*i]));
                    }
                    let r = self.encode(body, env);
                    env.truncate(base);
                    match r? {
                        Enc::Const(false) => return Ok(Enc::Const(false)),
                        Enc::Const(true) => {}
                        Enc::Lit(l) => lits.push(l),
                    }
                    let mut pos = vs.len();
                    loop {
                        if pos == 0 {
                            return Ok(self.conj(lits));
                        }
                        pos -= 1;
                        idx[pos] += 1;
                        if idx[pos] < doms[pos].len() {
                            break;
                        }
                        idx[pos] = 0;
                    }
                }
            }
            Nnf::Exists(..) => Err(SmtError::NotEpr("existential left in matrix".into())),
        }
    }

    // Plaisted-Greenbaum: the matrix is in NNF, so one direction suffices.
    fn conj(&mut self, lits: Vec<Lit>) -> Enc {
        match lits.len() {
            0 => Enc::Const(true),
            1 => Enc::Lit(lits[0]),
            _ => {
                let x = self.fresh();
                for l in lits {
                    self.sat.add_clause(&[!x, l]);
                }
                Enc::Lit(x)
            }
        }
    }

    fn disj(&mut self, mut lits: Vec<Lit>) -> Enc {
        match lits.len() {
            0 => Enc::Const(false),
            1 => Enc::Lit(lits[0]),
            _ => {
                let x = self.fresh();
                lits.push(!x);
                self.sat.add_clause(&lits);
                Enc::Lit(x)
            }
        }
    }

    fn tuples(&self, sig: &[Sort]) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for s in sig {
            let d = self.domain.get(s).cloned().unwrap_or_default();
            let mut next = Vec::with_capacity(out.len() * d.len());
            for t in &out {
                for c in &d {
                    let mut t = t.clone();
                    t.push(*c);
                    next.push(t);
                }
            }
            out = next;
        }
        out
    }

    fn equality_axioms(&mut self) -> Result<(), SmtError> {
        let domains: Vec<Vec<usize>> = self.domain.values().cloned().collect();
        for d in &domains {
            for i in 0..d.len() {
                for j in i + 1..d.len() {
                    for k in j + 1..d.len() {
                        let (a, b, c) = (d[i], d[j], d[k]);
                        let ab = self.atom(GAtom::Eq(a, b));
                        let bc = self.atom(GAtom::Eq(b, c));
                        let ac = self.atom(GAtom::Eq(a, c));
                        self.sat.add_clause(&[!ab, !bc, ac]);
                        self.sat.add_clause(&[!ab, !ac, bc]);
                        self.sat.add_clause(&[!ac, !bc, ab]);
                    }
                }
            }
        }
        let lits: Vec<usize> = self.lit_const.values().copied().collect();
        for i in 0..lits.len() {
            for j in i + 1..lits.len() {
                let e = self.atom(GAtom::Eq(lits[i], lits[j]));
                self.sat.add_clause(&[!e]);
            }
        }
        let preds = self.problem.predicates.clone();
        for (p, mp) in preds.iter().enumerate() {
            let tuples = self.tuples(&mp.signature);
            if tuples.len() * mp.signature.len() > self.limit {
                return Err(SmtError::Unknown("ground problem too large".into()));
            }
            for t in &tuples {
                let here = self.atom(GAtom::Pred(p, t.clone()));
                for (pos, s) in mp.signature.iter().enumerate() {
                    let dom = self.domain.get(s).cloned().unwrap_or_default();
                    for c in dom {
                        if c <= t[pos] {
                            continue;
                        }
                        let mut t2 = t.clone();
                        t2[pos] = c;
                        let there = self.atom(GAtom::Pred(p, t2));
                        let Enc::Lit(e) = self.eq_lit(t[pos], c) else { unreachable!() };
                        self.sat.add_clause(&[!e, !here, there]);
                        self.sat.add_clause(&[!e, here, !there]);
                    }
                }
            }
        }
        Ok(())
    }

    fn decode(&self, model: &[Lit]) -> Sample {
        let truth: BTreeSet<usize> = model.iter().filter(|l| l.is_positive()).map(|l| l.index()).collect();
        let val = |a: &GAtom| self.atoms.get(a).is_some_and(|l| truth.contains(&l.index()) == l.is_positive());
        // class representative: smallest equal constant
        let mut rep: Vec<usize> = (0..self.consts.len()).collect();
        for d in self.domain.values() {
            for (i, &a) in d.iter().enumerate() {
                for &b in &d[..i] {
                    if val(&GAtom::Eq(b.min(a), b.max(a))) {
                        rep[a] = rep[b];
                        break;
                    }
                }
            }
        }
        let mut sample = Sample::new();
        let mut ids: BTreeMap<usize, ValueId> = BTreeMap::new();
        let literal_values: BTreeSet<i64> = self.lit_const.keys().copied().collect();
        for (l, c) in &self.lit_const {
            ids.insert(rep[*c], ValueId::Elem(*l));
        }
        let mut next_elem = 0i64;
        let mut next_container = 0u32;
        for (s, d) in &self.domain {
            for &c in d {
                let r = rep[c];
                if ids.contains_key(&r) {
                    continue;
                }
                let v = match s {
                    Sort::Element => {
                        while literal_values.contains(&next_elem) {
                            next_elem += 1;
                        }
                        next_elem += 1;
                        ValueId::Elem(next_elem - 1)
                    }
                    Sort::Container(name) => {
                        sample.containers.insert(next_container, name.clone());
                        next_container += 1;
                        ValueId::Container(next_container - 1)
                    }
                    Sort::Bool => unreachable!(),
                };
                ids.insert(r, v);
            }
        }
        for v in ids.values() {
            if let ValueId::Elem(e) = v {
                sample.elements.insert(*e);
            }
        }
        for (i, (name, sort)) in self.consts.iter().enumerate() {
            if name.starts_with("lit!") || name.starts_with("dom!") {
                continue;
            }
            let v = if *sort == Sort::Bool { ValueId::Bool(val(&GAtom::Bool(i))) } else { ids[&rep[i]].clone() };
            sample.assignment.insert(name.clone(), v);
        }
        for (p, mp) in self.problem.predicates.iter().enumerate() {
            let mut rel = BTreeSet::new();
            for t in self.tuples(&mp.signature) {
                if t.iter().any(|c| rep[*c] != *c) {
                    continue;
                }
                if val(&GAtom::Pred(p, t.clone())) {
                    rel.insert(t.iter().map(|c| ids[c].clone()).collect());
                }
            }
            sample.relations.insert(mp.name.clone(), rel);
        }
        sample
    }
}

impl Solver for GroundSolver {
    fn solve(&self, problem: &EprProblem, timeout: Duration) -> Result<SolveResult, SmtError> {
        let mut g = Grounder::new(problem, timeout, self.max_atoms);
        let top = match g.encode(&problem.matrix, &mut Vec::new()) {
            Ok(e) => e,
            Err(SmtError::Unknown(r)) => return Ok(SolveResult::Unknown(r)),
            Err(e) => return Err(e),
        };
        match top {
            Enc::Const(false) => return Ok(SolveResult::Unsat),
            Enc::Const(true) => {}
            Enc::Lit(l) => g.sat.add_clause(&[l]),
        }
        match g.equality_axioms() {
            Ok(()) => {}
            Err(SmtError::Unknown(r)) => return Ok(SolveResult::Unknown(r)),
            Err(e) => return Err(e),
        }
        // make sure every atom variable exists in the solver
        if g.nvars > 0 {
            let x = Lit::from_index(g.nvars - 1, true);
            g.sat.add_clause(&[x, !x]);
        }
        match g.sat.solve() {
            Ok(true) => {
                let model = g.sat.model().unwrap_or_default();
                Ok(SolveResult::Sat(g.decode(&model)))
            }
            Ok(false) => Ok(SolveResult::Unsat),
            Err(e) => Ok(SolveResult::Unknown(e.to_string())),
        }
    }

    fn name(&self) -> String {
        "ground".to_string()
    }
}
