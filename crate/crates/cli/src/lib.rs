//! Run reports and the benchmark table behind the `abduct` binary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use abduct_core::frontend::{self, formula_sexp, interface_text, parse_interface};
use abduct_core::inference::{multi_abduce, Outcome, SpecConfig};
use abduct_core::logic::{substitute, Prop};
use abduct_core::smt::{Backend, VerifyResult};

/// Environment variable naming the SMT solver command, below `--solver`.
pub const SOLVER_ENV: &str = "ABDUCT_SOLVER";

/// Overrides from the command line; `None` keeps the config's value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub timeout_smt: Option<f64>,
    pub weaken_bound: Option<f64>,
    pub max_qvars: Option<usize>,
    pub samples: Option<usize>,
    pub solver: Option<String>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut SpecConfig) {
        if let Some(s) = self.seed {
            cfg.gen.seed = s;
        }
        if let Some(t) = self.timeout_smt {
            cfg.limits.smt_timeout = Duration::from_secs_f64(t);
        }
        if let Some(t) = self.weaken_bound {
            cfg.limits.weaken_bound = Duration::from_secs_f64(t);
        }
        if let Some(k) = self.max_qvars {
            cfg.limits.k_max = k;
        }
        if let Some(n) = self.samples {
            cfg.gen.samples_per_round = n;
        }
        let solver = self.solver.clone().or_else(|| std::env::var(SOLVER_ENV).ok().filter(|s| !s.trim().is_empty()));
        if let Some(s) = solver {
            cfg.backend = Backend::parse(&s);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CexReport {
    pub inputs: Vec<(String, String)>,
    pub output: Option<String>,
    pub path: String,
    pub matches_model: bool,
}

/// Wall-clock seconds; the only nondeterministic part of a report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub consistent: f64,
    pub weaken: f64,
    pub total: f64,
}

/// Everything in `Metrics` except timing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub qvars: usize,
    pub cex: usize,
    pub gathered: usize,
    pub positive: BTreeMap<String, u128>,
    pub positive_total: u128,
    pub weakening_iterations: usize,
    pub weakening_passes: usize,
    pub outer_iterations: usize,
    pub draws: usize,
    pub smt_calls: u64,
    pub non_maximal: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub config_hash: String,
    pub seed: u64,
    /// `interface`, `counterexample` or `aborted`.
    pub outcome: String,
    /// Per-function specs as s-expressions.
    pub specs: BTreeMap<String, String>,
    /// The interface in the form accepted by `abduct check`.
    pub interface: Option<String>,
    pub counterexample: Option<CexReport>,
    pub reason: Option<String>,
    /// |F|, |R| and |P| of the benchmark.
    pub functions: usize,
    pub calls: usize,
    pub predicates: usize,
    pub counters: Counters,
    pub timing: Timing,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        match self.outcome.as_str() {
            "interface" => 0,
            "counterexample" => 1,
            _ => 2,
        }
    }

    /// The report with timing zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> RunReport {
        RunReport { timing: Timing::default(), ..self.clone() }
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "benchmark: {} (sha256 {})", self.name, &self.config_hash[..16]);
        let _ = writeln!(out, "seed: {}", self.seed);
        let _ = writeln!(out, "outcome: {}", self.outcome);
        for (f, s) in &self.specs {
            let _ = writeln!(out, "  {f}: {s}");
        }
        if let Some(c) = &self.counterexample {
            let ins: Vec<String> = c.inputs.iter().map(|(n, v)| format!("{n} = {v}")).collect();
            let _ = writeln!(out, "  inputs: {}", ins.join(", "));
            let _ = writeln!(out, "  output: {}", c.output.as_deref().unwrap_or("-"));
            let _ = writeln!(out, "  path: {}", c.path);
            if !c.matches_model {
                let _ = writeln!(out, "  (falsifies the assertion; differs in shape from the solver's model)");
            }
        }
        if let Some(r) = &self.reason {
            let _ = writeln!(out, "  reason: {r}");
        }
        let m = &self.counters;
        let _ = writeln!(
            out,
            "|F|={} |R|={} |P|={} |u|={} |cex|={} time_c={:.2}s #Gather={} |phi+|={} time_w={:.2}s",
            self.functions,
            self.calls,
            self.predicates,
            m.qvars,
            m.cex,
            self.timing.consistent,
            m.gathered,
            m.positive_total,
            self.timing.weaken
        );
        if !m.non_maximal.is_empty() {
            let _ = writeln!(out, "weakening stopped early for: {}", m.non_maximal.join(", "));
        }
        out
    }
}

pub fn config_hash(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

/// Loads a config, applies overrides and runs inference.
pub fn run_text(name: &str, text: &str, ov: &Overrides) -> Result<RunReport> {
    let ast = frontend::parse(text).with_context(|| format!("{name}: invalid config"))?;
    let mut cfg = ast.resolve().with_context(|| format!("{name}: invalid config"))?;
    ov.apply(&mut cfg);
    let start = Instant::now();
    let run = multi_abduce(&cfg);
    let total = start.elapsed().as_secs_f64();
    let m = &run.metrics;
    let mut report = RunReport {
        name: name.to_string(),
        config_hash: config_hash(text),
        seed: cfg.gen.seed,
        outcome: String::new(),
        specs: BTreeMap::new(),
        interface: None,
        counterexample: None,
        reason: None,
        functions: cfg.functions().len(),
        calls: ast.call_sites(),
        predicates: cfg.predicates().len(),
        counters: Counters {
            qvars: m.qvars,
            cex: m.cex_count,
            gathered: m.gathered,
            positive: m.positive.clone(),
            positive_total: m.positive_total(),
            weakening_iterations: m.weakening_iterations,
            weakening_passes: m.weakening_passes,
            outer_iterations: m.outer_iterations,
            draws: m.draws,
            smt_calls: m.smt_calls,
            non_maximal: m.non_maximal.iter().cloned().collect(),
        },
        timing: Timing { consistent: m.time_consistent, weaken: m.time_weaken, total },
    };
    match run.outcome {
        Outcome::Interface(d) => {
            report.outcome = "interface".into();
            report.specs = d.specs.iter().map(|(f, phi)| (f.clone(), formula_sexp(phi).to_string())).collect();
            report.interface = Some(interface_text(&d));
        }
        Outcome::Counterexample(c) => {
            report.outcome = "counterexample".into();
            report.counterexample = Some(CexReport {
                inputs: c.inputs.iter().map(|(n, v)| (n.clone(), v.to_string())).collect(),
                output: c.output.map(|v| v.to_string()),
                path: c.path,
                matches_model: c.matches_model,
            });
        }
        Outcome::Aborted(r) => {
            report.outcome = "aborted".into();
            report.reason = Some(r);
        }
    }
    Ok(report)
}

pub fn run_file(path: &Path, ov: &Overrides) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
    run_text(&name, &text, ov)
}

/// Re-verifies an interface against every query of a config. Returns the
/// queries that do not verify, each with a countermodel.
pub fn check_interface(config_text: &str, interface: &str, ov: &Overrides) -> Result<Vec<(String, String)>> {
    let mut cfg = frontend::load(config_text)?;
    ov.apply(&mut cfg);
    let delta = parse_interface(&cfg, interface)?;
    let verifier = cfg.verifier();
    let sigs = cfg.signatures();
    let mut bad = Vec::new();
    for q in cfg.queries() {
        let sigma = substitute(q, &delta, &sigs)?;
        match verifier.verify(&Prop::implies(sigma, q.phi.clone())) {
            VerifyResult::Ok => {}
            VerifyResult::Sat(m) => bad.push((q.name.clone(), m.to_string())),
            VerifyResult::Unknown(r) => bail!("verifier gave up on {}: {r}", q.name),
        }
    }
    Ok(bad)
}

/// A failed benchmark still gets a row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchRow {
    pub file: String,
    pub report: Option<RunReport>,
    pub error: Option<String>,
}

pub fn bench_rows(dir: &Path, ov: &Overrides, jobs: usize) -> Result<Vec<BenchRow>> {
    use rayon::prelude::*;
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    files.sort();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    Ok(pool.install(|| {
        files
            .par_iter()
            .map(|p| {
                let file = p.file_name().unwrap().to_string_lossy().to_string();
                match run_file(p, ov) {
                    Ok(r) => BenchRow { file, report: Some(r), error: None },
                    Err(e) => BenchRow { file, report: None, error: Some(format!("{e:#}")) },
                }
            })
            .collect()
    }))
}

/// Aligned table of the standard metric columns.
pub fn bench_table(rows: &[BenchRow]) -> String {
    let head = ["benchmark", "outcome", "(|F|,|R|)", "|P|", "|u|", "|cex|", "time_c", "#Gather", "|phi+|", "time_w"];
    let mut cells: Vec<Vec<String>> = vec![head.iter().map(|s| s.to_string()).collect()];
    for r in rows {
        let name = r.file.trim_end_matches(".cfg").to_string();
        match &r.report {
            Some(p) => {
                let m = &p.counters;
                let interface = p.outcome == "interface";
                cells.push(vec![
                    name,
                    p.outcome.clone(),
                    format!("({}, {})", p.functions, p.calls),
                    p.predicates.to_string(),
                    m.qvars.to_string(),
                    m.cex.to_string(),
                    format!("{:.2}", p.timing.consistent),
                    if interface { m.gathered.to_string() } else { "-".into() },
                    if interface { m.positive_total.to_string() } else { "-".into() },
                    if !interface {
                        "-".into()
                    } else if m.non_maximal.is_empty() {
                        format!("{:.2}", p.timing.weaken)
                    } else {
                        "limit".into()
                    },
                ]);
            }
            None => {
                let mut row = vec![name, "error".into()];
                row.extend(std::iter::repeat("-".to_string()).take(head.len() - 2));
                cells.push(row);
            }
        }
    }
    let widths: Vec<usize> = (0..head.len()).map(|i| cells.iter().map(|r| r[i].chars().count()).max().unwrap()).collect();
    let mut out = String::new();
    for r in &cells {
        let line: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    for r in rows.iter().filter(|r| r.error.is_some()) {
        let _ = writeln!(out, "{}: {}", r.file, r.error.as_deref().unwrap());
    }
    out
}
