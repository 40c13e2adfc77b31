//! The three-level work division of a task.

use std::fmt;

use crate::accel::BackendKind;
use crate::error::{Error, Result};
use crate::index::IndexVec;

/// The level an index or extent is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Grid,
    Block,
    Thread,
}

/// The unit an index or extent is counted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Blocks,
    Threads,
    Elems,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Grid => "Grid",
            Origin::Block => "Block",
            Origin::Thread => "Thread",
        })
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Blocks => "Blocks",
            Unit::Threads => "Threads",
            Unit::Elems => "Elems",
        })
    }
}

/// Blocks per grid, threads per block and elements per thread.
///
/// All three share one dimensionality and every component is at least 1; a
/// level that carries no parallelism has extent 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WorkDiv {
    blocks_per_grid: IndexVec,
    threads_per_block: IndexVec,
    elems_per_thread: IndexVec,
}

impl WorkDiv {
    pub fn new(blocks_per_grid: IndexVec, threads_per_block: IndexVec, elems_per_thread: IndexVec) -> Result<Self> {
        blocks_per_grid.check_dim(&threads_per_block)?;
        blocks_per_grid.check_dim(&elems_per_thread)?;
        for v in [blocks_per_grid, threads_per_block, elems_per_thread] {
            if v.as_slice().contains(&0) {
                return Err(Error::ZeroExtent(v));
            }
        }
        Ok(WorkDiv {
            blocks_per_grid,
            threads_per_block,
            elems_per_thread,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.blocks_per_grid.dim()
    }

    #[inline]
    pub fn blocks_per_grid(&self) -> IndexVec {
        self.blocks_per_grid
    }

    #[inline]
    pub fn threads_per_block(&self) -> IndexVec {
        self.threads_per_block
    }

    #[inline]
    pub fn elems_per_thread(&self) -> IndexVec {
        self.elems_per_thread
    }

    /// Extent of `unit`s spanned by one `origin`, e.g. `(Grid, Threads)` is
    /// the number of threads in the whole grid along each axis.
    pub fn total_extent(&self, origin: Origin, unit: Unit) -> Result<IndexVec> {
        let b = &self.blocks_per_grid;
        let t = &self.threads_per_block;
        let e = &self.elems_per_thread;
        match (origin, unit) {
            (Origin::Grid, Unit::Blocks) => Ok(*b),
            (Origin::Grid, Unit::Threads) => b.elementwise_product(t),
            (Origin::Grid, Unit::Elems) => b.elementwise_product(t)?.elementwise_product(e),
            (Origin::Block, Unit::Threads) => Ok(*t),
            (Origin::Block, Unit::Elems) => t.elementwise_product(e),
            (Origin::Thread, Unit::Elems) => Ok(*e),
            (o, u) => Err(Error::UnsupportedPair(o, u)),
        }
    }

    /// Number of (block, thread) pairs a task with this division invokes.
    pub fn invocation_count(&self) -> usize {
        self.blocks_per_grid.product() * self.threads_per_block.product()
    }
}

impl fmt::Display for WorkDiv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "blocks {} threads {} elems {}",
            self.blocks_per_grid, self.threads_per_block, self.elems_per_thread
        )
    }
}

/// Builds the work division a back-end expects for a problem of
/// `problem_extent` elements.
///
/// Block-level back-ends run one thread per block, so the grid gets
/// `ceil(N / V)` blocks. Thread-level back-ends get `ceil(N / (B * V))`
/// blocks of `B` threads. Hints are used verbatim. The result may cover more
/// than `N` elements; kernels guard the tail.
pub fn divide_for_backend(
    problem_extent: IndexVec,
    backend: BackendKind,
    threads_per_block_hint: IndexVec,
    elems_per_thread_hint: IndexVec,
) -> Result<WorkDiv> {
    problem_extent.check_dim(&threads_per_block_hint)?;
    problem_extent.check_dim(&elems_per_thread_hint)?;
    for v in [problem_extent, threads_per_block_hint, elems_per_thread_hint] {
        if v.as_slice().contains(&0) {
            return Err(Error::ZeroExtent(v));
        }
    }
    let threads = if backend.is_thread_level() {
        threads_per_block_hint
    } else {
        IndexVec::ones(problem_extent.dim())?
    };
    let per_block = threads.elementwise_product(&elems_per_thread_hint)?;
    let blocks = problem_extent.ceil_div(&per_block)?;
    WorkDiv::new(blocks, threads, elems_per_thread_hint)
}
