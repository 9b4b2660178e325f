//! Runs the four-row accuracy table on the bundled Iris data.
//!
//! `cargo run --release -p ridgekernel --example table1 [seeds]`

use std::time::Instant;

use ridgekernel::pipeline::{iris, run_table1, Table1Config};

fn main() {
    let n_seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let cfg = Table1Config {
        seeds: (0..n_seeds).collect(),
        ..Table1Config::default()
    };
    let start = Instant::now();
    let report = run_table1(&iris(), &cfg).expect("table run");
    print!("{}", report.to_markdown());
    eprintln!("elapsed: {:.1}s", start.elapsed().as_secs_f64());
}
