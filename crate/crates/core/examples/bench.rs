//! Runs a bench grid from a JSON config and prints its boxplot summary.
//!
//! Run with `cargo run --release --example bench -- examples/configs/fig2.json`.

use smoothmc::simbench::{run_benchmark, summarize, BenchConfig};

fn main() -> smoothmc::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/fig0.json").to_string());
    let mut config = BenchConfig::from_path(path.as_ref())?;
    // keep the demo short; the configs carry the full replication count
    config.replications = config.replications.min(20);
    let results = run_benchmark(&config, config.seed)?;
    println!("{:<16} {:<15} {:>5} {:>3} {:>6} {:>10} {:>10} {:>10}", "model", "method", "n", "d", "param", "q1", "median", "q3");
    for row in summarize(&results) {
        println!(
            "{:<16} {:<15} {:>5} {:>3} {:>6.2} {:>10.4} {:>10.4} {:>10.4}",
            row.model, row.method, row.n, row.d, row.param, row.q1, row.median, row.q3
        );
    }
    Ok(())
}
