//! A minimal SMT-LIB v2 front for the in-process ground solver, speaking
//! the subset the process driver uses. Reads commands on stdin.

use std::io::{self, BufWriter};
use std::time::Duration;

fn main() {
    let timeout = std::env::args()
        .nth(1)
        .and_then(|s| s.parse::<f64>().ok())
        .map(Duration::from_secs_f64)
        .unwrap_or(Duration::from_secs(30));
    let stdin = io::stdin();
    let stdout = io::stdout();
    if let Err(e) = abduct_core::smt::server::serve(stdin.lock(), BufWriter::new(stdout.lock()), timeout) {
        eprintln!("epr-smt: {e}");
        std::process::exit(2);
    }
}
