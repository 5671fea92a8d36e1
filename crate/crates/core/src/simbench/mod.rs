//! Simulation models, the seeded replication harness and result summaries.
//!
//! Every replicate of every cell draws its data from its own stream,
//! seeded from the master seed and the (cell, replicate) pair, and all
//! methods of a cell run on that same dataset. Output order is fixed by
//! (cell, replicate, method), so a run is a pure function of the config and
//! the master seed.

mod bench;
mod models;
mod summary;

pub use bench::{
    method_error, read_results_csv, replicate_data, replicate_seed, run_benchmark, run_benchmark_with,
    write_results_csv, BenchConfig, Cell, GridSpec, Method, ReplicationResult, ResultWriter, RESULT_COLUMNS,
};
pub use models::{generate, generate_with_rng, GeneratedData, ModelKind, ModelSpec};
pub use summary::{median_error, paired_comparison, summarize, write_summary_csv, PairedComparison, SummaryRow};
