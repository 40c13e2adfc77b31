//! Benchmark harness behind the `kernelweave` binary.
//!
//! A run times every (size, back-end, repetition) point of a [`BenchConfig`]
//! and yields [`BenchRecord`]s, which round-trip through CSV unchanged.
//! Medians over repetitions feed the summary and the relative report.

pub mod config;
pub mod harness;
pub mod record;
pub mod report;

pub use config::{parse_backends, BackendLabel, BenchConfig, KernelKind};
pub use harness::{native_baseline, run_bench, Problem};
pub use record::{gflops, read_records, records_to_string, write_records, BenchRecord};
pub use report::{median, relative_report, ReportRow};

/// Exit status for a clean run.
pub const EXIT_OK: i32 = 0;
/// Exit status when verification failed or a task failed at run time.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status for bad flags or an invalid configuration.
pub const EXIT_USAGE: i32 = 2;

/// Maps an error to the process exit status.
pub fn exit_code(err: &kernelweave::Error) -> i32 {
    if err.is_usage() {
        EXIT_USAGE
    } else {
        EXIT_FAILURE
    }
}

/// Exit status for a finished run: a failure if verification was requested
/// and any record did not match the reference.
pub fn outcome_code(verify: bool, records: &[BenchRecord]) -> i32 {
    if verify && !harness::all_verified(records) {
        EXIT_FAILURE
    } else {
        EXIT_OK
    }
}
