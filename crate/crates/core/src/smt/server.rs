//! A small SMT-LIB v2 front end over the ground solver, so the subprocess
//! driver can run without an external solver installed.

use std::io::{BufRead, Write};
use std::time::Duration;

use crate::logic::{Domain, Prop, Sample, Sort, ValueId};
use crate::sexp::{is_complete, parse_all, Sexp};

use super::epr::EprProblem;
use super::ground::GroundSolver;
use super::smtlib::{parse_command, Command, Signature};
use super::{SmtError, SolveResult, Solver};

struct Session {
    sig: Signature,
    asserts: Vec<Prop>,
    model: Option<Sample>,
    timeout: Duration,
}

fn value_text(v: &ValueId, s: &Sample) -> String {
    match v {
        ValueId::Bool(b) => b.to_string(),
        ValueId::Container(id) => format!("{}!val!{id}", s.containers.get(id).map_or("?", |n| n.as_str())),
        ValueId::Elem(e) => format!("Elem!val!{e}"),
    }
}

impl Session {
    fn run(&mut self, cmd: Command) -> Result<Option<String>, SmtError> {
        self.sig.declare(&cmd)?;
        Ok(match cmd {
            Command::Assert(t) => {
                self.asserts.push(self.sig.prop(&t, &mut Vec::new())?);
                self.model = None;
                None
            }
            Command::CheckSat => {
                let p = Prop::and(self.asserts.clone());
                let problem = EprProblem::satisfiability(&p, &self.sig.predicates())?;
                match GroundSolver::default().solve(&problem, self.timeout)? {
                    SolveResult::Sat(s) => {
                        self.model = Some(s);
                        Some("sat".into())
                    }
                    SolveResult::Unsat => Some("unsat".into()),
                    SolveResult::Unknown(_) => Some("unknown".into()),
                }
            }
            Command::GetValue(terms) => {
                let m = self.model.as_ref().ok_or_else(|| SmtError::Protocol("no model available".into()))?;
                let mut out = Vec::new();
                for t in terms {
                    let v = match t.as_atom().and_then(|a| self.sig.consts.get(a).map(|s| (a, s))) {
                        Some((a, s)) if *s != Sort::Bool => {
                            let v = m
                                .assignment
                                .get(a)
                                .ok_or_else(|| SmtError::Protocol(format!("no value for {a}")))?;
                            value_text(v, m)
                        }
                        _ => {
                            let p = self.sig.prop(&t, &mut Vec::new())?;
                            m.eval(&p, Domain::Universe).map_err(|e| SmtError::Protocol(e.to_string()))?.to_string()
                        }
                    };
                    out.push(format!("({t} {v})"));
                }
                Some(format!("({})", out.join(" ")))
            }
            Command::GetModel => {
                let m = self.model.as_ref().ok_or_else(|| SmtError::Protocol("no model available".into()))?;
                let mut out = vec!["(".to_string()];
                for (name, sort) in &self.sig.consts {
                    if let Some(v) = m.assignment.get(name) {
                        let so = match sort {
                            Sort::Container(n) => n.clone(),
                            _ => "Bool".to_string(),
                        };
                        out.push(format!("  (define-fun {} () {so} {})", Sexp::atom(name), value_text(v, m)));
                    }
                }
                out.push(")".into());
                Some(out.join("\n"))
            }
            Command::Echo(s) => Some(format!("\"{s}\"")),
            Command::Other(h) => return Err(SmtError::Protocol(format!("unsupported command {h}"))),
            _ => None,
        })
    }
}

/// Reads commands from `input` and writes responses to `output` until
/// `(exit)` or end of input.
pub fn serve(input: impl BufRead, mut output: impl Write, timeout: Duration) -> std::io::Result<()> {
    let mut session = Session { sig: Signature::default(), asserts: vec![], model: None, timeout };
    let mut buf = String::new();
    for line in input.lines() {
        buf.push_str(&line?);
        buf.push('\n');
        if !is_complete(&buf) {
            continue;
        }
        let forms = match parse_all(&buf) {
            Ok(f) => f,
            Err(e) => {
                writeln!(output, "(error \"{}\")", e.to_string().replace('"', "'"))?;
                buf.clear();
                output.flush()?;
                continue;
            }
        };
        buf.clear();
        for f in forms {
            let cmd = match parse_command(&f) {
                Ok(c) => c,
                Err(e) => {
                    writeln!(output, "(error \"{}\")", e.to_string().replace('"', "'"))?;
                    continue;
                }
            };
            if cmd == Command::Exit {
                output.flush()?;
                return Ok(());
            }
            match session.run(cmd) {
                Ok(Some(r)) => writeln!(output, "{r}")?,
                Ok(None) => {}
                Err(e) => writeln!(output, "(error \"{}\")", e.to_string().replace('"', "'"))?,
            }
        }
        output.flush()?;
    }
    Ok(())
}
