use crate::accel::{Acc, BackendKind, Kernel};
use crate::error::{Error, Result};
use crate::index::IndexVec;
use crate::mem::{Buffer, Global, GlobalMut};
use crate::workdiv::{divide_for_backend, WorkDiv};

/// Arguments of [`Axpy`]: `y = alpha * x + y` over `n` elements.
pub struct AxpyArgs {
    pub n: usize,
    pub alpha: f64,
    pub x: Global<f64>,
    pub y: GlobalMut<f64>,
}

impl AxpyArgs {
    pub fn new(alpha: f64, x: &mut Buffer, y: &mut Buffer) -> Result<Self> {
        if x.dim() != 1 || x.extent() != y.extent() {
            return Err(Error::InvalidArgument(format!(
                "axpy needs two 1-D buffers of equal length, got {} and {}",
                x.extent(),
                y.extent()
            )));
        }
        Ok(AxpyArgs {
            n: x.extent()[0],
            alpha,
            x: x.view()?,
            y: y.view_mut()?,
        })
    }
}

/// AXPY with element extension: each thread updates a contiguous run of
/// `elems_per_thread` elements starting at `grid_thread_idx * elems_per_thread`,
/// clamped at `n`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Axpy;

impl Kernel<AxpyArgs> for Axpy {
    #[inline]
    fn run(&self, acc: &Acc<'_>, args: &AxpyArgs) {
        let thread = acc.grid_thread_idx()[0];
        let extent = acc.thread_elem_extent()[0];
        let first = thread * extent;
        if first < args.n {
            let len = extent.min(args.n - first);
            let x = args.x.slice(first, len);
            // SAFETY: threads own disjoint runs of y.
            let y = unsafe { args.y.slice_mut(first, len) };
            for (yi, &xi) in y.iter_mut().zip(x) {
                *yi += args.alpha * xi;
            }
        }
    }
}

/// Work division for AXPY over `n` elements.
pub fn axpy_work_div(
    n: usize,
    backend: BackendKind,
    threads_per_block: usize,
    elems_per_thread: usize,
) -> Result<WorkDiv> {
    divide_for_backend(
        IndexVec::d1(n),
        backend,
        IndexVec::d1(threads_per_block),
        IndexVec::d1(elems_per_thread),
    )
}
