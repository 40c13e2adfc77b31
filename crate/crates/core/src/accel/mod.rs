//! Accelerator back-ends: how the grid / block / thread hierarchy of a task is
//! mapped onto host threads.
//!
//! | back-end          | blocks                    | threads of a block        |
//! |-------------------|---------------------------|---------------------------|
//! | `Serial`          | one after another         | one after another         |
//! | `BlocksParallel`  | spread over a worker pool | one after another         |
//! | `ThreadsParallel` | one after another         | one OS thread each        |
//!
//! Only `ThreadsParallel` can honor a barrier between several threads of a
//! block; the other two expect one thread per block, which is the shape
//! [`divide_for_backend`](crate::workdiv::divide_for_backend) produces for them.

mod acc;
mod barrier;
mod shared;

use std::any::Any;
use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Mutex, OnceLock};
use std::thread;

use rayon::prelude::*;

pub use acc::Acc;
pub use shared::SharedMem;

use crate::error::{Error, Result};
use crate::index::delinearize_unchecked;
use crate::workdiv::WorkDiv;
use acc::{BlockCtx, Cancelled};

/// Environment variable overriding the size of the `BlocksParallel` pool.
pub const POOL_SIZE_ENV: &str = "KERNELWEAVE_POOL_SIZE";

/// Upper bound on threads per block for `ThreadsParallel`, each of which is
/// an OS thread.
pub const MAX_THREADS_PER_BLOCK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackendKind {
    /// One OS thread runs every (block, thread) pair in ascending order.
    Serial,
    /// Blocks are distributed over a worker pool, one thread per block.
    BlocksParallel,
    /// The threads of a block run concurrently on their own OS threads and
    /// share a barrier; blocks run one at a time.
    ThreadsParallel,
}

impl BackendKind {
    pub const ALL: [BackendKind; 3] = [
        BackendKind::Serial,
        BackendKind::BlocksParallel,
        BackendKind::ThreadsParallel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Serial => "serial",
            BackendKind::BlocksParallel => "blocks",
            BackendKind::ThreadsParallel => "threads",
        }
    }

    /// Whether the back-end maps the thread level onto real threads, i.e.
    /// takes `B` threads per block in a work division.
    pub fn is_thread_level(self) -> bool {
        matches!(self, BackendKind::ThreadsParallel)
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "serial" => Ok(BackendKind::Serial),
            "blocks" => Ok(BackendKind::BlocksParallel),
            "threads" => Ok(BackendKind::ThreadsParallel),
            other => Err(Error::InvalidArgument(format!("unknown backend {other:?}"))),
        }
    }
}

/// A single-source kernel, invoked once per (block, thread) pair.
///
/// The kernel value carries no data; everything it works on arrives through
/// `args`, bound by the executor.
pub trait Kernel<A: ?Sized>: Sync {
    fn run(&self, acc: &Acc<'_>, args: &A);
}

impl<A: ?Sized, F> Kernel<A> for F
where
    F: Fn(&Acc<'_>, &A) + Sync,
{
    #[inline]
    fn run(&self, acc: &Acc<'_>, args: &A) {
        self(acc, args)
    }
}

/// Number of workers in the `BlocksParallel` pool.
pub fn pool_size() -> usize {
    pool().current_num_threads()
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let size = std::env::var(POOL_SIZE_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()));
        rayon::ThreadPoolBuilder::new()
            .num_threads(size)
            .thread_name(|i| format!("kernelweave-block-{i}"))
            .build()
            .expect("failed to start the block worker pool")
    })
}

pub(crate) fn validate(backend: BackendKind, wd: &WorkDiv) -> Result<()> {
    if backend == BackendKind::ThreadsParallel {
        let threads = wd.threads_per_block().product();
        if threads > MAX_THREADS_PER_BLOCK {
            return Err(Error::InvalidArgument(format!(
                "{threads} threads per block exceeds the limit of {MAX_THREADS_PER_BLOCK}"
            )));
        }
    }
    Ok(())
}

/// Runs `kernel` over the grid described by `wd` and returns once every
/// invocation has finished.
///
/// A panicking invocation fails the task: blocks that have not started yet
/// are skipped and the panic message is returned as
/// [`Error::KernelFailed`].
pub fn execute_task<K, A>(backend: BackendKind, wd: &WorkDiv, kernel: &K, args: &A) -> Result<()>
where
    K: Kernel<A> + ?Sized,
    A: Sync + ?Sized,
{
    validate(backend, wd)?;
    match backend {
        BackendKind::Serial => run_serial(wd, kernel, args),
        BackendKind::BlocksParallel => run_blocks_parallel(wd, kernel, args),
        BackendKind::ThreadsParallel => run_threads_parallel(wd, kernel, args),
    }
}

fn panic_message(payload: Box<dyn Any + Send>) -> Option<String> {
    if payload.is::<Cancelled>() {
        return None;
    }
    Some(if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "kernel panicked".to_string()
    })
}

fn run_serial<K, A>(wd: &WorkDiv, kernel: &K, args: &A) -> Result<()>
where
    K: Kernel<A> + ?Sized,
    A: Sync + ?Sized,
{
    let blocks = wd.blocks_per_grid();
    let threads = wd.threads_per_block();
    let ctx = BlockCtx::sequential();
    let run = || {
        for b in 0..blocks.product() {
            let block_idx = delinearize_unchecked(b, &blocks);
            ctx.arena.reset();
            for t in 0..threads.product() {
                let thread_idx = delinearize_unchecked(t, &threads);
                let acc = Acc::new(BackendKind::Serial, wd, block_idx, thread_idx, &ctx);
                kernel.run(&acc, args);
            }
        }
    };
    panic::catch_unwind(AssertUnwindSafe(run))
        .map_err(|p| Error::KernelFailed(panic_message(p).unwrap_or_else(|| "cancelled".into())))
}

fn run_blocks_parallel<K, A>(wd: &WorkDiv, kernel: &K, args: &A) -> Result<()>
where
    K: Kernel<A> + ?Sized,
    A: Sync + ?Sized,
{
    let blocks = wd.blocks_per_grid();
    let threads = wd.threads_per_block();
    let failed = AtomicBool::new(false);
    let first_error: Mutex<Option<String>> = Mutex::new(None);

    pool().install(|| {
        (0..blocks.product())
            .into_par_iter()
            .for_each_init(BlockCtx::sequential, |ctx, b| {
                if failed.load(Ordering::Relaxed) {
                    return;
                }
                let block_idx = delinearize_unchecked(b, &blocks);
                ctx.arena.reset();
                let ctx = &*ctx;
                let outcome = panic::catch_unwind(AssertUnwindSafe(|| {
                    for t in 0..threads.product() {
                        let thread_idx = delinearize_unchecked(t, &threads);
                        let acc = Acc::new(BackendKind::BlocksParallel, wd, block_idx, thread_idx, ctx);
                        kernel.run(&acc, args);
                    }
                }));
                if let Err(p) = outcome {
                    failed.store(true, Ordering::Relaxed);
                    let msg = panic_message(p).unwrap_or_else(|| "cancelled".into());
                    first_error.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(msg);
                }
            })
    });

    match first_error.into_inner().unwrap_or_else(|e| e.into_inner()) {
        Some(msg) => Err(Error::KernelFailed(msg)),
        None => Ok(()),
    }
}

fn run_threads_parallel<K, A>(wd: &WorkDiv, kernel: &K, args: &A) -> Result<()>
where
    K: Kernel<A> + ?Sized,
    A: Sync + ?Sized,
{
    let blocks = wd.blocks_per_grid();
    let threads = wd.threads_per_block();
    let n_threads = threads.product();
    let ctx = BlockCtx::concurrent(n_threads);
    let barrier = ctx.barrier.as_ref().expect("concurrent block has a barrier");
    let first_error: Mutex<Option<String>> = Mutex::new(None);

    thread::scope(|s| {
        for t in 0..n_threads {
            let ctx = &ctx;
            let first_error = &first_error;
            thread::Builder::new()
                .name(format!("kernelweave-thread-{t}"))
                .spawn_scoped(s, move || {
                    let thread_idx = delinearize_unchecked(t, &threads);
                    for b in 0..blocks.product() {
                        // Block boundary: the last thread to finish the
                        // previous block discards its shared memory.
                        if b > 0 && barrier.wait_with(|| ctx.arena.reset()).is_err() {
                            return;
                        }
                        let block_idx = delinearize_unchecked(b, &blocks);
                        let outcome = panic::catch_unwind(AssertUnwindSafe(|| {
                            let acc = Acc::new(BackendKind::ThreadsParallel, wd, block_idx, thread_idx, ctx);
                            kernel.run(&acc, args);
                        }));
                        if let Err(p) = outcome {
                            if let Some(msg) = panic_message(p) {
                                first_error.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(msg);
                            }
                            barrier.poison();
                            return;
                        }
                    }
                })
                .expect("failed to spawn block thread");
        }
    });

    match first_error.into_inner().unwrap_or_else(|e| e.into_inner()) {
        Some(msg) => Err(Error::KernelFailed(msg)),
        None => Ok(()),
    }
}
