//! Single-source kernels over a four-level parallelism hierarchy.
//!
//! A kernel is written once against an [`Acc`] and executed over a grid of
//! blocks, each block a set of threads, each thread a run of elements. How
//! that hierarchy meets the hardware is chosen per task by a [`BackendKind`]:
//! the same kernel runs serially, with blocks spread over a worker pool, or
//! with the threads of a block on their own OS threads sharing a barrier.
//!
//! ```
//! use kernelweave::{
//!     Acc, BackendKind, Buffer, Device, Flavor, GlobalMut, IndexVec, Queue, create_exec,
//!     divide_for_backend,
//! };
//!
//! let mut out = Buffer::alloc_for::<u64>(Device::Host, IndexVec::d1(1000))?;
//! let wd = divide_for_backend(
//!     IndexVec::d1(1000),
//!     BackendKind::ThreadsParallel,
//!     IndexVec::d1(4),
//!     IndexVec::d1(8),
//! )?;
//! let fill = |acc: &Acc<'_>, out: &GlobalMut<u64>| {
//!     let first = acc.grid_thread_idx()[0] * acc.thread_elem_extent()[0];
//!     for i in first..(first + acc.thread_elem_extent()[0]).min(1000) {
//!         unsafe { out.set(i, i as u64) };
//!     }
//! };
//! let queue = Queue::new(Device::Host, Flavor::Async);
//! queue.enqueue(create_exec(BackendKind::ThreadsParallel, wd, fill, out.view_mut()?)?)?;
//! queue.wait()?;
//! assert_eq!(out.get::<u64>(&IndexVec::d1(999))?, 999);
//! # Ok::<(), kernelweave::Error>(())
//! ```

pub mod accel;
pub mod error;
pub mod index;
pub mod kernels;
pub mod mem;
pub mod queue;
pub mod workdiv;

pub use accel::{execute_task, Acc, BackendKind, Kernel, SharedMem};
pub use error::{Error, Result};
pub use index::{delinearize, linearize, IndexVec};
pub use mem::{copy, Buffer, Device, Element, Global, GlobalMut};
pub use queue::{create_exec, ExecTask, Flavor, Queue, Task, TaskHandle, TaskStatus};
pub use workdiv::{divide_for_backend, Origin, Unit, WorkDiv};
