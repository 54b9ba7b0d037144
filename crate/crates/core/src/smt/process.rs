//! SMT-LIB v2 over a child process: one fresh solver per query.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use crate::logic::{Sample, Sort, ValueId, Var};
use crate::sexp::{is_complete, parse_all, Sexp};

use super::epr::EprProblem;
use super::smtlib::{const_symbol, literal_symbol, pred_symbol, script};
use super::{SmtError, SolveResult, Solver};

#[derive(Clone, Debug)]
pub struct ProcessSolver {
    pub program: String,
    pub args: Vec<String>,
    /// Predicate tuples asked per `get-value`.
    pub batch: usize,
}

impl ProcessSolver {
    pub fn new(program: &str, args: Vec<String>) -> ProcessSolver {
        ProcessSolver { program: program.to_string(), args, batch: 256 }
    }
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    deadline: Instant,
}

impl Session {
    fn send(&mut self, text: &str) -> Result<(), SmtError> {
        self.stdin
            .write_all(text.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| SmtError::Process(format!("write failed: {e}")))
    }

    /// Next complete response expression.
    fn read(&mut self) -> Result<Sexp, SmtError> {
        let mut buf = String::new();
        loop {
            let left = self.deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(line) => {
                    buf.push_str(&line);
                    buf.push('\n');
                    if is_complete(&buf) {
                        let mut v = parse_all(&buf).map_err(|e| SmtError::Protocol(e.to_string()))?;
                        if v.len() != 1 {
                            return Err(SmtError::Protocol(format!("expected one response, got `{buf}`")));
                        }
                        let r = v.pop().unwrap();
                        if r.head() == Some("error") {
                            return Err(SmtError::Protocol(r.to_string()));
                        }
                        return Ok(r);
                    }
                }
                Err(RecvTimeoutError::Timeout) => return Err(SmtError::Unknown("timeout".into())),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(SmtError::Process(format!("solver exited, partial output `{buf}`")))
                }
            }
        }
    }

    fn get_values(&mut self, terms: &[String]) -> Result<Vec<(String, Sexp)>, SmtError> {
        if terms.is_empty() {
            return Ok(vec![]);
        }
        self.send(&format!("(get-value ({}))\n", terms.join(" ")))?;
        let r = self.read()?;
        let pairs = r.as_list().ok_or_else(|| SmtError::Protocol(format!("bad get-value answer {r}")))?;
        if pairs.len() != terms.len() {
            return Err(SmtError::Protocol(format!("expected {} values, got {}", terms.len(), pairs.len())));
        }
        pairs
            .iter()
            .zip(terms)
            .map(|(p, t)| match p.as_list() {
                Some([_, v]) => Ok((t.clone(), v.clone())),
                _ => Err(SmtError::Protocol(format!("bad value pair {p}"))),
            })
            .collect()
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        let _ = self.stdin.write_all(b"(exit)\n");
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn quoted(s: &str) -> String {
    Sexp::atom(s).to_string()
}

impl ProcessSolver {
    fn spawn(&self, timeout: Duration) -> Result<Session, SmtError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SmtError::Process(format!("cannot start `{}`: {e}", self.program)))?;
        let stdin = child.stdin.take().unwrap();
        let stdout = child.stdout.take().unwrap();
        let (tx, rx) = channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => {
                        if tx.send(l).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        Ok(Session { child, stdin, lines: rx, deadline: Instant::now() + timeout })
    }

    fn run(&self, p: &EprProblem, timeout: Duration) -> Result<SolveResult, SmtError> {
        let mut s = self.spawn(timeout)?;
        s.send(&script(p))?;
        let answer = s.read()?;
        match answer.as_atom() {
            Some("unsat") => return Ok(SolveResult::Unsat),
            Some("unknown") => return Ok(SolveResult::Unknown("solver answered unknown".into())),
            Some("sat") => {}
            _ => return Err(SmtError::Protocol(format!("unexpected answer {answer}"))),
        }

        // constants, grouped into classes by their printed value
        let mut named: Vec<(String, Var)> = p
            .constants
            .iter()
            .map(|c| (quoted(&const_symbol(&c.name)), c.clone()))
            .collect();
        for l in &p.literals {
            named.push((literal_symbol(*l), Var::elem(&format!("lit!{l}"))));
        }
        let terms: Vec<String> = named.iter().map(|(t, _)| t.clone()).collect();
        let values = s.get_values(&terms)?;

        let mut sample = Sample::new();
        let mut class_of: BTreeMap<(Sort, String), ValueId> = BTreeMap::new();
        let mut reps: BTreeMap<Sort, Vec<(String, ValueId)>> = BTreeMap::new();
        let literal_values: BTreeSet<i64> = p.literals.iter().copied().collect();
        // literals first so their classes keep the literal value
        let order: Vec<usize> = (0..named.len())
            .filter(|&i| named[i].1.name.starts_with("lit!"))
            .chain((0..named.len()).filter(|&i| !named[i].1.name.starts_with("lit!")))
            .collect();
        let mut next_elem = 0i64;
        let mut next_container = 0u32;
        for i in order {
            let (term, var) = &named[i];
            let text = values[i].1.to_string();
            let v = if var.sort == Sort::Bool {
                match text.as_str() {
                    "true" => ValueId::Bool(true),
                    "false" => ValueId::Bool(false),
                    _ => return Err(SmtError::Protocol(format!("non-boolean value {text} for {term}"))),
                }
            } else if let Some(v) = class_of.get(&(var.sort.clone(), text.clone())) {
                v.clone()
            } else {
                let v = match &var.sort {
                    Sort::Element => {
                        if let Some(l) = var.name.strip_prefix("lit!") {
                            ValueId::Elem(l.parse().map_err(|_| SmtError::Protocol("bad literal".into()))?)
                        } else {
                            while literal_values.contains(&next_elem) {
                                next_elem += 1;
                            }
                            next_elem += 1;
                            ValueId::Elem(next_elem - 1)
                        }
                    }
                    Sort::Container(name) => {
                        sample.containers.insert(next_container, name.clone());
                        next_container += 1;
                        ValueId::Container(next_container - 1)
                    }
                    Sort::Bool => unreachable!(),
                };
                class_of.insert((var.sort.clone(), text), v.clone());
                reps.entry(var.sort.clone()).or_default().push((term.clone(), v.clone()));
                if let ValueId::Elem(e) = v {
                    sample.elements.insert(e);
                }
                v
            };
            if !var.name.contains('!') {
                sample.assignment.insert(var.name.clone(), v);
            }
        }

        // predicate relations over class representatives
        for mp in &p.predicates {
            let mut tuples: Vec<Vec<(String, ValueId)>> = vec![vec![]];
            for so in &mp.signature {
                let d = reps.get(so).cloned().unwrap_or_default();
                let mut next = Vec::new();
                for t in &tuples {
                    for r in &d {
                        let mut t = t.clone();
                        t.push(r.clone());
                        next.push(t);
                    }
                }
                tuples = next;
            }
            let mut rel = BTreeSet::new();
            for chunk in tuples.chunks(self.batch.max(1)) {
                let terms: Vec<String> = chunk
                    .iter()
                    .map(|t| {
                        let args: Vec<&str> = t.iter().map(|(n, _)| n.as_str()).collect();
                        format!("({} {})", quoted(&pred_symbol(&mp.name)), args.join(" "))
                    })
                    .collect();
                for ((_, v), t) in s.get_values(&terms)?.into_iter().zip(chunk) {
                    match v.as_atom() {
                        Some("true") => {
                            rel.insert(t.iter().map(|(_, id)| id.clone()).collect());
                        }
                        Some("false") => {}
                        _ => return Err(SmtError::Protocol(format!("non-boolean predicate value {v}"))),
                    }
                }
            }
            sample.relations.insert(mp.name.clone(), rel);
        }
        Ok(SolveResult::Sat(sample))
    }
}

impl Solver for ProcessSolver {
    fn solve(&self, p: &EprProblem, timeout: Duration) -> Result<SolveResult, SmtError> {
        match self.run(p, timeout) {
            Err(SmtError::Unknown(r)) => Ok(SolveResult::Unknown(r)),
            other => other,
        }
    }

    fn name(&self) -> String {
        format!("{} {}", self.program, self.args.join(" ")).trim().to_string()
    }
}
