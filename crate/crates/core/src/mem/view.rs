use std::marker::PhantomData;
use std::sync::atomic::{AtomicI64, AtomicU64, Ordering};
use std::sync::Arc;

use super::{Element, Storage};
use crate::index::IndexVec;

/// Kernel-side read-only view of a buffer.
///
/// Rows are `row_stride` elements apart; for 1-D views the stride equals the
/// length. Accessors panic on out-of-range indices, which fails the task.
pub struct Global<T> {
    ptr: *const T,
    extent: IndexVec,
    rows: usize,
    cols: usize,
    row_stride: usize,
    _storage: Arc<Storage>,
    _t: PhantomData<T>,
}

/// Kernel-side writable view of a buffer.
///
/// Many threads of a task write through the same view, so plain element
/// access is `unsafe`: each element may be accessed by at most one thread
/// at a time, unless every access to it is atomic.
pub struct GlobalMut<T> {
    ptr: *mut T,
    extent: IndexVec,
    rows: usize,
    cols: usize,
    row_stride: usize,
    _storage: Arc<Storage>,
    _t: PhantomData<T>,
}

// Views are shared by all threads of a task; the contracts above govern
// concurrent access.
unsafe impl<T: Element> Send for Global<T> {}
unsafe impl<T: Element> Sync for Global<T> {}
unsafe impl<T: Element> Send for GlobalMut<T> {}
unsafe impl<T: Element> Sync for GlobalMut<T> {}

macro_rules! common {
    () => {
        #[inline]
        pub fn extent(&self) -> IndexVec {
            self.extent
        }

        /// Elements between the starts of consecutive rows.
        #[inline]
        pub fn row_stride(&self) -> usize {
            self.row_stride
        }

        #[inline]
        pub fn rows(&self) -> usize {
            self.rows
        }

        #[inline]
        pub fn cols(&self) -> usize {
            self.cols
        }

        #[inline]
        fn offset2(&self, r: usize, c: usize) -> usize {
            assert!(
                r < self.rows() && c < self.cols(),
                "({r},{c}) out of range for {}",
                self.extent
            );
            r * self.row_stride + c
        }

        #[inline]
        fn offset1(&self, i: usize) -> usize {
            assert!(
                self.extent.dim() == 1 && i < self.cols(),
                "{i} out of range for {}",
                self.extent
            );
            i
        }

        /// Storage offset of an n-dimensional index.
        #[inline]
        pub fn offset_of(&self, idx: &IndexVec) -> usize {
            assert!(idx.all_lt(&self.extent), "{idx} out of range for {}", self.extent);
            let dim = self.extent.dim();
            let mut row = 0;
            for k in 0..dim - 1 {
                row = row * self.extent[k] + idx[k];
            }
            row * self.row_stride + idx[dim - 1]
        }
    };
}

impl<T: Element> Global<T> {
    pub(crate) fn new(storage: Arc<Storage>, extent: IndexVec, row_stride: usize) -> Self {
        Global {
            ptr: storage.ptr().cast::<T>(),
            extent,
            rows: extent.product() / extent.last(),
            cols: extent.last(),
            row_stride,
            _storage: storage,
            _t: PhantomData,
        }
    }

    common!();

    /// Element `i` of a 1-D view.
    #[inline]
    pub fn get(&self, i: usize) -> T {
        let off = self.offset1(i);
        // SAFETY: in bounds; writers promise not to race readers.
        unsafe { self.ptr.add(off).read() }
    }

    #[inline]
    pub fn get2(&self, r: usize, c: usize) -> T {
        let off = self.offset2(r, c);
        unsafe { self.ptr.add(off).read() }
    }

    #[inline]
    pub fn get_idx(&self, idx: &IndexVec) -> T {
        let off = self.offset_of(idx);
        unsafe { self.ptr.add(off).read() }
    }

    /// Row `r`, without padding.
    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        assert!(r < self.rows(), "row {r} out of range for {}", self.extent);
        unsafe { std::slice::from_raw_parts(self.ptr.add(r * self.row_stride), self.cols()) }
    }

    /// The whole storage as one slice: element `(r, c)` sits at
    /// `r * row_stride() + c`. Padding between rows is included.
    #[inline]
    pub fn as_flat(&self) -> &[T] {
        let len = (self.rows - 1) * self.row_stride + self.cols;
        unsafe { std::slice::from_raw_parts(self.ptr, len) }
    }

    /// `len` elements of a 1-D view starting at `start`.
    #[inline]
    pub fn slice(&self, start: usize, len: usize) -> &[T] {
        assert!(
            self.extent.dim() == 1 && start + len <= self.cols(),
            "{start}+{len} out of range for {}",
            self.extent
        );
        unsafe { std::slice::from_raw_parts(self.ptr.add(start), len) }
    }
}

impl<T: Element> GlobalMut<T> {
    pub(crate) fn new(storage: Arc<Storage>, extent: IndexVec, row_stride: usize) -> Self {
        GlobalMut {
            ptr: storage.ptr().cast::<T>(),
            extent,
            rows: extent.product() / extent.last(),
            cols: extent.last(),
            row_stride,
            _storage: storage,
            _t: PhantomData,
        }
    }

    common!();

    /// # Safety
    /// No other thread may write element `i` concurrently.
    #[inline]
    pub unsafe fn get(&self, i: usize) -> T {
        let off = self.offset1(i);
        self.ptr.add(off).read()
    }

    /// # Safety
    /// No other thread may access element `i` concurrently.
    #[inline]
    pub unsafe fn set(&self, i: usize, value: T) {
        let off = self.offset1(i);
        self.ptr.add(off).write(value)
    }

    /// # Safety
    /// No other thread may write element `(r, c)` concurrently.
    #[inline]
    pub unsafe fn get2(&self, r: usize, c: usize) -> T {
        let off = self.offset2(r, c);
        self.ptr.add(off).read()
    }

    /// # Safety
    /// No other thread may access element `(r, c)` concurrently.
    #[inline]
    pub unsafe fn set2(&self, r: usize, c: usize, value: T) {
        let off = self.offset2(r, c);
        self.ptr.add(off).write(value)
    }

    /// # Safety
    /// No other thread may access element `idx` concurrently.
    #[inline]
    pub unsafe fn set_idx(&self, idx: &IndexVec, value: T) {
        let off = self.offset_of(idx);
        self.ptr.add(off).write(value)
    }

    /// # Safety
    /// No other thread may write element `idx` concurrently.
    #[inline]
    pub unsafe fn get_idx(&self, idx: &IndexVec) -> T {
        let off = self.offset_of(idx);
        self.ptr.add(off).read()
    }

    /// Exclusive access to `len` elements of a 1-D view.
    ///
    /// # Safety
    /// No other thread may access any element of the range while the slice
    /// is alive.
    #[inline]
    #[allow(clippy::mut_from_ref)]
    pub unsafe fn slice_mut(&self, start: usize, len: usize) -> &mut [T] {
        assert!(
            self.extent.dim() == 1 && start + len <= self.cols(),
            "{start}+{len} out of range for {}",
            self.extent
        );
        std::slice::from_raw_parts_mut(self.ptr.add(start), len)
    }

    /// Exclusive access to `len` elements of row `r` starting at column `c`.
    ///
    /// # Safety
    /// As for [`slice_mut`](Self::slice_mut).
    #[inline]
    #[allow(clippy::mut_from_ref)]
    pub unsafe fn row_slice_mut(&self, r: usize, c: usize, len: usize) -> &mut [T] {
        assert!(
            r < self.rows() && c + len <= self.cols(),
            "row {r} cols {c}+{len} out of range for {}",
            self.extent
        );
        std::slice::from_raw_parts_mut(self.ptr.add(r * self.row_stride + c), len)
    }
}

/// Element types supporting [`GlobalMut::atomic_add`].
pub trait AtomicElement: Element {
    /// Adds `value` to `*ptr` atomically and returns the previous value.
    ///
    /// # Safety
    /// `ptr` is valid and aligned, and every concurrent access to it is atomic.
    unsafe fn atomic_add(ptr: *mut Self, value: Self) -> Self;

    /// # Safety
    /// As for [`atomic_add`](Self::atomic_add).
    unsafe fn atomic_load(ptr: *mut Self) -> Self;
}

impl AtomicElement for u64 {
    unsafe fn atomic_add(ptr: *mut u64, value: u64) -> u64 {
        AtomicU64::from_ptr(ptr).fetch_add(value, Ordering::AcqRel)
    }

    unsafe fn atomic_load(ptr: *mut u64) -> u64 {
        AtomicU64::from_ptr(ptr).load(Ordering::Acquire)
    }
}

impl AtomicElement for i64 {
    unsafe fn atomic_add(ptr: *mut i64, value: i64) -> i64 {
        AtomicI64::from_ptr(ptr).fetch_add(value, Ordering::AcqRel)
    }

    unsafe fn atomic_load(ptr: *mut i64) -> i64 {
        AtomicI64::from_ptr(ptr).load(Ordering::Acquire)
    }
}

impl AtomicElement for f64 {
    unsafe fn atomic_add(ptr: *mut f64, value: f64) -> f64 {
        let cell = AtomicU64::from_ptr(ptr.cast::<u64>());
        let mut current = cell.load(Ordering::Relaxed);
        loop {
            let new = (f64::from_bits(current) + value).to_bits();
            match cell.compare_exchange_weak(current, new, Ordering::AcqRel, Ordering::Relaxed) {
                Ok(old) => return f64::from_bits(old),
                Err(actual) => current = actual,
            }
        }
    }

    unsafe fn atomic_load(ptr: *mut f64) -> f64 {
        f64::from_bits(AtomicU64::from_ptr(ptr.cast::<u64>()).load(Ordering::Acquire))
    }
}

impl<T: AtomicElement> GlobalMut<T> {
    /// Atomically adds `value` to element `i` (storage offset; for 1-D views
    /// the element index) and returns the previous value.
    #[inline]
    pub fn atomic_add(&self, i: usize, value: T) -> T {
        assert!(i < self.storage_len(), "atomic index {i} out of range");
        // SAFETY: in bounds and aligned (storage is 64-byte aligned and
        // offsets are whole elements); other accessors of this element are
        // atomic by the unsafe contract of the plain accessors.
        unsafe { T::atomic_add(self.ptr.add(i), value) }
    }

    #[inline]
    pub fn atomic_load(&self, i: usize) -> T {
        assert!(i < self.storage_len(), "atomic index {i} out of range");
        unsafe { T::atomic_load(self.ptr.add(i)) }
    }

    fn storage_len(&self) -> usize {
        (self.rows() - 1) * self.row_stride + self.cols()
    }
}
