use std::sync::Arc;

use super::{Buffer, Device, Storage};
use crate::error::{Error, Result};
use crate::index::IndexVec;
use crate::queue::{Queue, Task, TaskHandle};

/// A pitched deep copy of the `extent` corner of one buffer into another.
pub struct CopyTask {
    src: Arc<Storage>,
    dst: Arc<Storage>,
    src_extent: IndexVec,
    dst_extent: IndexVec,
    src_pitch: usize,
    dst_pitch: usize,
    elem_size: usize,
    extent: IndexVec,
    devices: (Device, Device),
}

impl CopyTask {
    /// Validates the copy; nothing is transferred until the task runs.
    pub fn new(dst: &mut Buffer, src: &Buffer, extent: IndexVec) -> Result<Self> {
        src.extent().check_dim(&dst.extent())?;
        src.extent().check_dim(&extent)?;
        if src.elem_size() != dst.elem_size() {
            return Err(Error::ElementSize {
                requested: src.elem_size(),
                actual: dst.elem_size(),
            });
        }
        if extent.as_slice().contains(&0) {
            return Err(Error::ZeroExtent(extent));
        }
        for bound in [src.extent(), dst.extent()] {
            if !extent.all_le(&bound) {
                return Err(Error::InvalidArgument(format!(
                    "copy extent {extent} exceeds buffer extent {bound}"
                )));
            }
        }
        Ok(CopyTask {
            src: src.storage().clone(),
            dst: dst.storage().clone(),
            src_extent: src.extent(),
            dst_extent: dst.extent(),
            src_pitch: src.row_pitch(),
            dst_pitch: dst.row_pitch(),
            elem_size: src.elem_size(),
            extent,
            devices: (dst.device(), src.device()),
        })
    }

    /// Performs the copy on the calling thread.
    pub fn run_now(&self) {
        let row_bytes = self.extent.last() * self.elem_size;
        let dim = self.extent.dim();
        let outer = IndexVec::new(&self.extent.as_slice()[..dim - 1]).ok();
        let rows: Box<dyn Iterator<Item = IndexVec>> = match outer {
            Some(outer) => Box::new(outer.iter_box()),
            None => Box::new(std::iter::once(IndexVec::d1(0))),
        };
        for lead in rows {
            let src_row = row_of(&lead, &self.src_extent);
            let dst_row = row_of(&lead, &self.dst_extent);
            // SAFETY: rows lie inside their storages (checked against both
            // extents in `new`), and the storages are distinct allocations
            // since `new` borrowed `dst` mutably alongside `src`.
            unsafe {
                std::ptr::copy_nonoverlapping(
                    self.src.ptr().add(src_row * self.src_pitch),
                    self.dst.ptr().add(dst_row * self.dst_pitch),
                    row_bytes,
                );
            }
        }
    }
}

/// Row number of the leading index `lead` (all axes but the last) in a buffer
/// of `extent`. 1-D buffers have a single row.
fn row_of(lead: &IndexVec, extent: &IndexVec) -> usize {
    let dim = extent.dim();
    if dim == 1 {
        return 0;
    }
    let mut row = 0;
    for k in 0..dim - 1 {
        row = row * extent[k] + lead[k];
    }
    row
}

impl Task for CopyTask {
    fn compatible_with(&self, device: Device) -> bool {
        self.devices.0 == device || self.devices.1 == device
    }

    fn describe(&self) -> String {
        format!("copy {} from {} to {}", self.extent, self.devices.1, self.devices.0)
    }

    fn run(self: Box<Self>) -> Result<()> {
        self.run_now();
        Ok(())
    }
}

/// Enqueues a deep copy of the `extent` corner of `src` into `dst`.
///
/// Both buffers must have the same dimensionality and element size, and
/// `extent` must fit in both. Bytes of `dst` outside the copied extent are
/// left untouched. The queue must belong to the device of either buffer.
pub fn copy(queue: &Queue, dst: &mut Buffer, src: &Buffer, extent: IndexVec) -> Result<TaskHandle> {
    let task = CopyTask::new(dst, src, extent)?;
    queue.enqueue(task)
}
