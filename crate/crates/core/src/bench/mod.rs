//! Benchmark driver: manufactured solution, sweeps and reports.

mod manufactured;
mod runner;

pub use manufactured::ManufacturedSolution;
pub use runner::{run_benchmark, BenchConfig, BenchError, EtaPolicy, Mode};
