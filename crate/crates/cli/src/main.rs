use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use kernelweave::kernels::DEFAULT_TILE;
use kernelweave::Result;
use kernelweave_cli::config::{DEFAULT_REPS, DEFAULT_THREADS_PER_BLOCK};
use kernelweave_cli::harness::with_baseline;
use kernelweave_cli::report::{format_report, format_summary, write_report};
use kernelweave_cli::{
    exit_code, outcome_code, parse_backends, relative_report, run_bench, write_records, BackendLabel, BenchConfig,
    KernelKind, EXIT_OK,
};

const AFTER_HELP: &str = "\
GFLOPS = flops / seconds / 1e9, with
  axpy:        flops = 2 * N
  gemm-*:      flops = 2 * N^3 + 3 * N^2   (N x N matrices)

Each point is timed as enqueue + wait on an asynchronous queue (monotonic
clock, nanosecond resolution). Allocation, filling, queue construction and one
warm-up run per (back-end, size) are not timed. Summaries use the median over
repetitions.

Exit status: 0 ok, 1 verification or run-time failure, 2 usage error.";

/// Times kernelweave kernels on each back-end and writes one CSV row per
/// repetition.
#[derive(Parser, Debug)]
#[command(name = "kernelweave", version, after_help = AFTER_HELP)]
struct Args {
    /// axpy, gemm-naive or gemm-tiled
    #[arg(long)]
    kernel: KernelKind,

    /// Comma list of serial, blocks, threads, native; `all` is the three
    /// back-ends
    #[arg(long, default_value = "all")]
    backend: String,

    /// Comma list of problem sizes: vector length for axpy, matrix edge for
    /// gemm [default: 1048576 for axpy, 256 for gemm]
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,

    /// Timed repetitions per point, at least 3
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Tile edge of gemm-tiled
    #[arg(long, default_value_t = DEFAULT_TILE)]
    tile: usize,

    /// Threads per block on the threads back-end (gemm-tiled uses a square
    /// of sqrt(tpb) threads per side)
    #[arg(long, default_value_t = DEFAULT_THREADS_PER_BLOCK)]
    tpb: usize,

    /// Elements per thread [default: 1024 for axpy, 16 for gemm-naive]
    #[arg(long)]
    ept: Option<usize>,

    /// Compare every result bitwise against the sequential reference
    #[arg(long)]
    verify: bool,

    /// Write records here instead of stdout; a relative report goes next to
    /// it as <stem>.report.csv
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,

    /// Report median times relative to this back-end (added to the run if
    /// missing)
    #[arg(long, value_name = "BACKEND")]
    baseline: Option<BackendLabel>,

    /// Deliberately poor work division: tile 1 for gemm-tiled, one thread
    /// owning the whole matrix for gemm-naive
    #[arg(long)]
    pessimize: bool,
}

impl Args {
    fn into_config(self) -> Result<BenchConfig> {
        let mut cfg = BenchConfig::new(self.kernel);
        cfg.backends = with_baseline(parse_backends(&self.backend)?, self.baseline);
        if !self.sizes.is_empty() {
            cfg.sizes = self.sizes;
        }
        cfg.reps = self.reps;
        cfg.seed = self.seed;
        cfg.tile = self.tile;
        cfg.threads_per_block = self.tpb;
        cfg.elems_per_thread = self.ept;
        cfg.verify = self.verify;
        cfg.output = self.csv;
        cfg.baseline = self.baseline;
        cfg.pessimize = self.pessimize;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cfg: &BenchConfig) -> Result<i32> {
    let records = run_bench(cfg)?;
    match &cfg.output {
        Some(path) => write_records(BufWriter::new(File::create(path)?), &records)?,
        None => write_records(io::stdout().lock(), &records)?,
    }
    eprint!("{}", format_summary(&records));

    if let Some(baseline) = cfg.baseline {
        let rows = relative_report(&records, baseline)?;
        eprint!("\n{}", format_report(&rows, baseline));
        if let Some(path) = &cfg.output {
            let report_path = path.with_extension("report.csv");
            write_report(BufWriter::new(File::create(&report_path)?), &rows)?;
        }
    }

    let code = outcome_code(cfg.verify, &records);
    if code != EXIT_OK {
        let bad = records.iter().filter(|r| !r.verified).count();
        eprintln!("verification failed for {bad} of {} records", records.len());
    }
    Ok(code)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        // clap exits 2 on usage errors and 0 for --help / --version
        Err(e) => e.exit(),
    };
    let result = args.into_config().and_then(|cfg| run(&cfg));
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
