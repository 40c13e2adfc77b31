use std::any::TypeId;
use std::marker::PhantomData;
use std::ptr::NonNull;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::mem::Element;

#[repr(C, align(64))]
#[derive(Clone, Copy)]
struct Line([u8; 64]);

struct Slot {
    mem: Box<[Line]>,
    count: usize,
    type_id: TypeId,
}

/// Shared-memory regions of the block currently being executed.
///
/// Regions are matched across the threads of a block by the position of the
/// allocation call in each thread's call sequence: the first thread to reach
/// call `k` allocates region `k`, later threads receive the same region.
#[derive(Default)]
pub(crate) struct SharedArena {
    slots: Mutex<Vec<Slot>>,
}

impl SharedArena {
    /// Returns region number `seq`, allocating it zeroed if no thread of the
    /// block has reached this call yet.
    pub(crate) fn region<T: Element>(&self, seq: usize, count: usize) -> Result<NonNull<T>> {
        if count == 0 {
            return Err(Error::InvalidArgument("shared allocation of zero elements".into()));
        }
        let mut slots = self.slots.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(slot) = slots.get_mut(seq) {
            if slot.count != count || slot.type_id != TypeId::of::<T>() {
                return Err(Error::InvalidArgument(format!(
                    "divergent shared allocation #{seq}: {count} x {} requested, {} elements of another shape already allocated",
                    std::any::type_name::<T>(),
                    slot.count
                )));
            }
            return Ok(slot_ptr(slot));
        }
        if seq != slots.len() {
            return Err(Error::InvalidArgument(format!(
                "shared allocation #{seq} out of sequence"
            )));
        }
        let bytes = count
            .checked_mul(std::mem::size_of::<T>())
            .ok_or(Error::Alloc(usize::MAX))?;
        let mem = vec![Line([0; 64]); bytes.div_ceil(64).max(1)].into_boxed_slice();
        slots.push(Slot {
            mem,
            count,
            type_id: TypeId::of::<T>(),
        });
        Ok(slot_ptr(slots.last_mut().unwrap()))
    }

    /// Drops every region. Only called while no thread of the block is
    /// inside the kernel.
    pub(crate) fn reset(&self) {
        self.slots.lock().unwrap_or_else(|e| e.into_inner()).clear();
    }
}

fn slot_ptr<T>(slot: &mut Slot) -> NonNull<T> {
    NonNull::new(slot.mem.as_mut_ptr().cast::<T>()).unwrap()
}

/// A block-shared memory region handed out by
/// [`Acc::alloc_shared`](crate::accel::Acc::alloc_shared).
///
/// All threads of a block see the same region; it is zero-initialized and
/// lives until the block has finished. Threads write and read it
/// concurrently, so element access is `unsafe`: the caller has to order
/// conflicting accesses with
/// [`sync_block_threads`](crate::accel::Acc::sync_block_threads).
pub struct SharedMem<'a, T> {
    ptr: NonNull<T>,
    len: usize,
    _acc: PhantomData<&'a T>,
}

impl<T: Element> SharedMem<'_, T> {
    pub(crate) fn new(ptr: NonNull<T>, len: usize) -> Self {
        SharedMem {
            ptr,
            len,
            _acc: PhantomData,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn as_ptr(&self) -> *mut T {
        self.ptr.as_ptr()
    }

    /// # Safety
    /// No other thread of the block may write element `i` concurrently.
    #[inline]
    pub unsafe fn read(&self, i: usize) -> T {
        assert!(i < self.len, "shared index {i} out of range {}", self.len);
        self.ptr.as_ptr().add(i).read()
    }

    /// # Safety
    /// No other thread of the block may access element `i` concurrently.
    #[inline]
    pub unsafe fn write(&self, i: usize, value: T) {
        assert!(i < self.len, "shared index {i} out of range {}", self.len);
        self.ptr.as_ptr().add(i).write(value)
    }

    /// # Safety
    /// No thread of the block may write the region while the slice is alive.
    #[inline]
    pub unsafe fn as_slice(&self) -> &[T] {
        std::slice::from_raw_parts(self.ptr.as_ptr(), self.len)
    }
}
