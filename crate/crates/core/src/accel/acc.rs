use std::cell::Cell;
use std::panic;

use super::barrier::BlockBarrier;
use super::shared::{SharedArena, SharedMem};
use super::BackendKind;
use crate::error::{Error, Result};
use crate::index::IndexVec;
use crate::mem::{AtomicElement, Element, GlobalMut};
use crate::workdiv::{Origin, Unit, WorkDiv};

/// Panic payload used to unwind sibling threads once a block was cancelled.
pub(crate) struct Cancelled;

/// State shared by all threads executing one block.
pub(crate) struct BlockCtx {
    pub(crate) arena: SharedArena,
    pub(crate) barrier: Option<BlockBarrier>,
}

impl BlockCtx {
    pub(crate) fn sequential() -> Self {
        BlockCtx {
            arena: SharedArena::default(),
            barrier: None,
        }
    }

    pub(crate) fn concurrent(threads: usize) -> Self {
        BlockCtx {
            arena: SharedArena::default(),
            barrier: Some(BlockBarrier::new(threads)),
        }
    }
}

/// The kernel-side handle of one thread.
///
/// Everything a kernel knows about where it runs comes from here: its block
/// and thread indices, the work division, block-shared memory and the block
/// barrier. An `Acc` is only valid inside the invocation it was created for.
pub struct Acc<'a> {
    backend: BackendKind,
    work_div: &'a WorkDiv,
    block_idx: IndexVec,
    thread_idx: IndexVec,
    block: &'a BlockCtx,
    shared_calls: Cell<usize>,
}

impl<'a> Acc<'a> {
    pub(crate) fn new(
        backend: BackendKind,
        work_div: &'a WorkDiv,
        block_idx: IndexVec,
        thread_idx: IndexVec,
        block: &'a BlockCtx,
    ) -> Self {
        Acc {
            backend,
            work_div,
            block_idx,
            thread_idx,
            block,
            shared_calls: Cell::new(0),
        }
    }

    #[inline]
    pub fn backend(&self) -> BackendKind {
        self.backend
    }

    #[inline]
    pub fn work_div(&self) -> &WorkDiv {
        self.work_div
    }

    #[inline]
    pub fn grid_block_idx(&self) -> IndexVec {
        self.block_idx
    }

    #[inline]
    pub fn block_thread_idx(&self) -> IndexVec {
        self.thread_idx
    }

    /// `grid_block_idx * threads_per_block + block_thread_idx`
    #[inline]
    pub fn grid_thread_idx(&self) -> IndexVec {
        let tpb = self.work_div.threads_per_block();
        self.block_idx
            .zip_with(&tpb, |b, t| b * t)
            .and_then(|v| v.zip_with(&self.thread_idx, |a, t| a + t))
            .expect("work division dims are consistent")
    }

    #[inline]
    pub fn thread_elem_extent(&self) -> IndexVec {
        self.work_div.elems_per_thread()
    }

    /// Index of this thread counted in `unit`s from `origin`. For the element
    /// unit this is the first element the thread owns.
    pub fn get_idx(&self, origin: Origin, unit: Unit) -> Result<IndexVec> {
        let ept = self.work_div.elems_per_thread();
        match (origin, unit) {
            (Origin::Grid, Unit::Blocks) => Ok(self.block_idx),
            (Origin::Grid, Unit::Threads) => Ok(self.grid_thread_idx()),
            (Origin::Grid, Unit::Elems) => self.grid_thread_idx().elementwise_product(&ept),
            (Origin::Block, Unit::Threads) => Ok(self.thread_idx),
            (Origin::Block, Unit::Elems) => self.thread_idx.elementwise_product(&ept),
            (Origin::Thread, Unit::Elems) => IndexVec::zeros(ept.dim()),
            (o, u) => Err(Error::UnsupportedPair(o, u)),
        }
    }

    pub fn get_work_div(&self, origin: Origin, unit: Unit) -> Result<IndexVec> {
        self.work_div.total_extent(origin, unit)
    }

    /// Allocates `count` zeroed elements of block-shared memory.
    ///
    /// Every thread of the block must make the same sequence of calls; the
    /// `k`-th call of each thread returns the same region. Panics (failing
    /// the task) when the calls diverge.
    pub fn alloc_shared<T: Element>(&self, count: usize) -> SharedMem<'_, T> {
        match self.try_alloc_shared(count) {
            Ok(mem) => mem,
            Err(e) => panic!("{e}"),
        }
    }

    pub fn try_alloc_shared<T: Element>(&self, count: usize) -> Result<SharedMem<'_, T>> {
        let seq = self.shared_calls.get();
        let ptr = self.block.arena.region::<T>(seq, count)?;
        self.shared_calls.set(seq + 1);
        Ok(SharedMem::new(ptr, count))
    }

    /// Block-wide barrier. Must be reached by every thread of the block.
    ///
    /// A no-op for blocks of one thread. Back-ends that run the threads of a
    /// block one after another cannot honor a barrier between them, so
    /// calling this there with more than one thread per block fails the task.
    pub fn sync_block_threads(&self) {
        match &self.block.barrier {
            Some(barrier) => {
                if barrier.wait().is_err() {
                    panic::resume_unwind(Box::new(Cancelled));
                }
            }
            None => {
                if self.work_div.threads_per_block().product() > 1 {
                    panic!(
                        "sync_block_threads with {} threads per block needs the ThreadsParallel back-end",
                        self.work_div.threads_per_block()
                    );
                }
            }
        }
    }

    /// Atomically adds `value` to element `idx` of `target` and returns the
    /// previous value.
    #[inline]
    pub fn atomic_add<T: AtomicElement>(&self, target: &GlobalMut<T>, idx: usize, value: T) -> T {
        target.atomic_add(idx, value)
    }
}
