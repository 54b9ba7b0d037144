use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use abduct_cli::{bench_rows, bench_table, check_interface, run_file, Overrides, RunReport};

/// Infers library specifications that let a client verify, or reports a
/// concrete input on which the client's assertion fails.
#[derive(Parser)]
#[command(name = "abduct", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run inference on one configuration.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: Opts,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run every *.cfg in a directory and print the metric table.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        opts: Opts,
        /// JSON-lines sidecar, one report per benchmark.
        #[arg(long, default_value = "bench.jsonl")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Re-verify an interface (an `(interface ...)` form or a JSON report).
    Check {
        config: PathBuf,
        interface: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args, Clone)]
struct Opts {
    #[arg(long)]
    seed: Option<u64>,
    /// Seconds per solver call.
    #[arg(long)]
    timeout_smt: Option<f64>,
    /// Seconds for the whole weakening phase.
    #[arg(long)]
    weaken_bound: Option<f64>,
    #[arg(long)]
    max_qvars: Option<usize>,
    /// Random draws per consistency round.
    #[arg(long)]
    samples: Option<usize>,
    /// `ground` or an SMT-LIB solver command line such as "z3 -in".
    /// Defaults to $ABDUCT_SOLVER, then the config.
    #[arg(long)]
    solver: Option<String>,
}

impl From<Opts> for Overrides {
    fn from(o: Opts) -> Overrides {
        Overrides {
            seed: o.seed,
            timeout_smt: o.timeout_smt,
            weaken_bound: o.weaken_bound,
            max_qvars: o.max_qvars,
            samples: o.samples,
            solver: o.solver,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    JsonLines,
}

fn render(r: &RunReport, f: Format) -> String {
    match f {
        Format::Text => r.text(),
        Format::JsonLines => serde_json::to_string(r).expect("report serializes") + "\n",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match real_main(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("abduct: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main(cli: Cli) -> anyhow::Result<u8> {
    match cli.cmd {
        Cmd::Run { config, opts, out, format } => {
            let r = run_file(&config, &opts.into())?;
            let text = render(&r, format);
            print!("{text}");
            if let Some(p) = out {
                std::fs::write(&p, &text)?;
            }
            Ok(r.exit_code() as u8)
        }
        Cmd::Bench { dir, opts, out, jobs } => {
            let rows = bench_rows(&dir, &opts.into(), jobs)?;
            print!("{}", bench_table(&rows));
            let mut side = String::new();
            for r in &rows {
                side.push_str(&serde_json::to_string(r)?);
                side.push('\n');
            }
            std::fs::write(&out, side)?;
            Ok(0)
        }
        Cmd::Check { config, interface, opts } => {
            let cfg = std::fs::read_to_string(&config)?;
            let raw = std::fs::read_to_string(&interface)?;
            let iface = match serde_json::from_str::<RunReport>(raw.trim()) {
                Ok(r) => r.interface.ok_or_else(|| anyhow::anyhow!("report has no interface"))?,
                Err(_) => raw,
            };
            let bad = check_interface(&cfg, &iface, &opts.into())?;
            if bad.is_empty() {
                println!("ok");
                Ok(0)
            } else {
                for (q, model) in &bad {
                    println!("fails on {q}:\n{model}");
                }
                Ok(1)
            }
        }
    }
}
