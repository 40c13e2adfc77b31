use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use kernelweave::kernels::{axpy_work_div, gemm_naive_work_div, gemm_tiled_work_div, DEFAULT_TILE};
use kernelweave::{BackendKind, Error, Result, WorkDiv};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Axpy,
    GemmNaive,
    GemmTiled,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::Axpy, KernelKind::GemmNaive, KernelKind::GemmTiled];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Axpy => "axpy",
            KernelKind::GemmNaive => "gemm-naive",
            KernelKind::GemmTiled => "gemm-tiled",
        }
    }

    pub fn is_gemm(self) -> bool {
        self != KernelKind::Axpy
    }

    /// Floating-point operations for problem size `n`: AXPY does one multiply
    /// and one add per element; an `n x n x n` GEMM does `2n` per dot product
    /// plus three for the `alpha`/`beta` update of each output.
    pub fn flop_count(self, n: usize) -> u64 {
        let n = n as u64;
        match self {
            KernelKind::Axpy => 2 * n,
            KernelKind::GemmNaive | KernelKind::GemmTiled => 2 * n * n * n + 3 * n * n,
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown kernel '{s}' (axpy, gemm-naive, gemm-tiled)")))
    }
}

/// What a record was timed on: one of the back-ends, or the plain sequential
/// loop with no kernel machinery around it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendLabel {
    Serial,
    Blocks,
    Threads,
    Native,
}

impl BackendLabel {
    pub fn accel(self) -> Option<BackendKind> {
        match self {
            BackendLabel::Serial => Some(BackendKind::Serial),
            BackendLabel::Blocks => Some(BackendKind::BlocksParallel),
            BackendLabel::Threads => Some(BackendKind::ThreadsParallel),
            BackendLabel::Native => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BackendLabel::Native => "native",
            other => other.accel().unwrap().name(),
        }
    }
}

impl From<BackendKind> for BackendLabel {
    fn from(b: BackendKind) -> Self {
        match b {
            BackendKind::Serial => BackendLabel::Serial,
            BackendKind::BlocksParallel => BackendLabel::Blocks,
            BackendKind::ThreadsParallel => BackendLabel::Threads,
        }
    }
}

impl fmt::Display for BackendLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BackendLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "native" => Ok(BackendLabel::Native),
            other => Ok(other.parse::<BackendKind>()?.into()),
        }
    }
}

/// Parses a comma-separated back-end list. `all` expands to the three
/// back-ends; `native` has to be asked for by name.
pub fn parse_backends(s: &str) -> Result<Vec<BackendLabel>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if part == "all" {
            out.extend(BackendKind::ALL.map(BackendLabel::from));
        } else {
            out.push(part.parse()?);
        }
    }
    let mut seen = Vec::new();
    out.retain(|b| {
        let fresh = !seen.contains(b);
        seen.push(*b);
        fresh
    });
    if out.is_empty() {
        return Err(Error::InvalidArgument("no back-end given".into()));
    }
    Ok(out)
}

pub const DEFAULT_REPS: usize = 5;
pub const DEFAULT_THREADS_PER_BLOCK: usize = 16;
pub const DEFAULT_AXPY_ELEMS: usize = 1024;
pub const DEFAULT_GEMM_ELEMS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub kernel: KernelKind,
    pub backends: Vec<BackendLabel>,
    /// Vector length for AXPY, matrix edge for GEMM.
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub tile: usize,
    pub threads_per_block: usize,
    /// `None` picks a per-kernel default.
    pub elems_per_thread: Option<usize>,
    pub verify: bool,
    pub output: Option<PathBuf>,
    pub baseline: Option<BackendLabel>,
    pub pessimize: bool,
}

impl BenchConfig {
    pub fn new(kernel: KernelKind) -> Self {
        BenchConfig {
            kernel,
            backends: BackendKind::ALL.map(BackendLabel::from).to_vec(),
            sizes: vec![if kernel.is_gemm() { 256 } else { 1 << 20 }],
            reps: DEFAULT_REPS,
            seed: 1,
            tile: DEFAULT_TILE,
            threads_per_block: DEFAULT_THREADS_PER_BLOCK,
            elems_per_thread: None,
            verify: false,
            output: None,
            baseline: None,
            pessimize: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.reps < 3 {
            return bad(format!("reps must be at least 3, got {}", self.reps));
        }
        if self.sizes.is_empty() {
            return bad("at least one size is required".into());
        }
        if self.backends.is_empty() {
            return bad("at least one back-end is required".into());
        }
        if self.tile == 0 || self.threads_per_block == 0 || self.elems_per_thread == Some(0) {
            return bad("tile, threads per block and elements per thread must be positive".into());
        }
        if self.threads_per_block > kernelweave::accel::MAX_THREADS_PER_BLOCK {
            return bad(format!(
                "at most {} threads per block",
                kernelweave::accel::MAX_THREADS_PER_BLOCK
            ));
        }
        // catch a tile/thread mismatch before anything is timed
        for &b in &self.backends {
            if let Some(backend) = b.accel() {
                self.work_div(backend, 1)?;
            }
        }
        Ok(())
    }

    /// Tile edge actually used by the tiled kernel.
    pub fn effective_tile(&self) -> usize {
        if self.pessimize {
            1
        } else {
            self.tile
        }
    }

    fn tiled_side(&self) -> usize {
        if self.pessimize {
            1
        } else {
            self.threads_per_block.isqrt()
        }
    }

    /// The work division for one benchmark point.
    ///
    /// `threads_per_block` is B for AXPY, a `1 x B` row of threads for naive
    /// GEMM, and a `sqrt(B) x sqrt(B)` square splitting each tile for tiled
    /// GEMM. Pessimized runs use a `1 x 1` tile, or give each naive GEMM
    /// thread the whole matrix.
    pub fn work_div(&self, backend: BackendKind, n: usize) -> Result<WorkDiv> {
        let tpb = self.threads_per_block;
        match self.kernel {
            KernelKind::Axpy => axpy_work_div(n, backend, tpb, self.elems_per_thread.unwrap_or(DEFAULT_AXPY_ELEMS)),
            KernelKind::GemmNaive => {
                let elems = if self.pessimize {
                    (n, n)
                } else {
                    (1, self.elems_per_thread.unwrap_or(DEFAULT_GEMM_ELEMS))
                };
                gemm_naive_work_div(n, n, backend, (1, tpb), elems)
            }
            KernelKind::GemmTiled => gemm_tiled_work_div(n, n, self.effective_tile(), backend, self.tiled_side()),
        }
    }
}
