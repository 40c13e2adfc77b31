//! Pitched n-dimensional buffers with explicit deep copies.
//!
//! A [`Buffer`] is a byte region plus its device, extent, element size and
//! row pitch. Rows (the last axis) are padded to a multiple of the alignment
//! quantum; 1-D buffers are dense. Kernels never touch a `Buffer` directly:
//! they receive typed views ([`Global`], [`GlobalMut`]) bound into a task.

mod copy;
mod csv_io;
mod view;

use std::alloc::{self, Layout};
use std::fmt;
use std::ptr::NonNull;
use std::sync::atomic::{fence, Ordering};
use std::sync::Arc;

use rand::Rng;

pub use copy::{copy, CopyTask};
pub use view::{AtomicElement, Global, GlobalMut};

use crate::error::{Error, Result};
use crate::index::{linearize, IndexVec};

/// Default alignment quantum for row pitches, in bytes.
pub const DEFAULT_ALIGNMENT: usize = 64;

/// Where a buffer lives. On CPU-only builds devices are tags; copies between
/// different tags still go through the same pitched copy path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Device {
    Host,
    Logical(u32),
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Device::Host => f.write_str("host"),
            Device::Logical(n) => write!(f, "dev{n}"),
        }
    }
}

mod sealed {
    pub trait Sealed {}
}

/// Plain numeric types that may be stored in buffers and shared memory. Any
/// bit pattern, including all zeros, is a valid value.
pub trait Element: sealed::Sealed + Copy + Send + Sync + PartialEq + fmt::Debug + 'static {}

macro_rules! element {
    ($($t:ty),*) => {$(
        impl sealed::Sealed for $t {}
        impl Element for $t {}
    )*};
}

element!(u8, i8, u16, i16, u32, i32, u64, i64, usize, f32, f64);

pub(crate) struct Storage {
    ptr: NonNull<u8>,
    layout: Layout,
}

// The storage is a plain byte region; synchronization is the caller's job.
unsafe impl Send for Storage {}
unsafe impl Sync for Storage {}

impl Storage {
    fn zeroed(bytes: usize, align: usize) -> Result<Self> {
        let layout =
            Layout::from_size_align(bytes.max(1), align.max(DEFAULT_ALIGNMENT)).map_err(|_| Error::Alloc(bytes))?;
        // SAFETY: layout has non-zero size.
        let ptr = unsafe { alloc::alloc_zeroed(layout) };
        NonNull::new(ptr)
            .map(|ptr| Storage { ptr, layout })
            .ok_or(Error::Alloc(bytes))
    }

    #[inline]
    pub(crate) fn ptr(&self) -> *mut u8 {
        self.ptr.as_ptr()
    }
}

impl Drop for Storage {
    fn drop(&mut self) {
        // SAFETY: allocated in `zeroed` with this layout.
        unsafe { alloc::dealloc(self.ptr.as_ptr(), self.layout) }
    }
}

/// A device-associated pitched memory region.
///
/// Host-side access (`get`, `set`, `to_vec`, ...) is only allowed while no
/// view of the buffer is alive, i.e. when no pending task holds it; otherwise
/// it fails with [`Error::BufferInUse`].
pub struct Buffer {
    device: Device,
    extent: IndexVec,
    elem_size: usize,
    row_pitch: usize,
    storage: Arc<Storage>,
}

impl fmt::Debug for Buffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Buffer")
            .field("device", &self.device)
            .field("extent", &self.extent)
            .field("elem_size", &self.elem_size)
            .field("row_pitch", &self.row_pitch)
            .finish()
    }
}

impl Buffer {
    /// Allocates a buffer with the default 64-byte row alignment.
    pub fn alloc(device: Device, extent: IndexVec, elem_size: usize) -> Result<Self> {
        Self::alloc_aligned(device, extent, elem_size, DEFAULT_ALIGNMENT)
    }

    /// Allocates a buffer whose row pitch is a multiple of `alignment` bytes
    /// (a power of two). 1-D buffers are always dense.
    pub fn alloc_aligned(device: Device, extent: IndexVec, elem_size: usize, alignment: usize) -> Result<Self> {
        if extent.as_slice().contains(&0) {
            return Err(Error::ZeroExtent(extent));
        }
        if elem_size == 0 {
            return Err(Error::InvalidArgument("element size must be positive".into()));
        }
        if !alignment.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "alignment {alignment} is not a power of two"
            )));
        }
        let dense = extent.last().checked_mul(elem_size).ok_or(Error::Alloc(usize::MAX))?;
        let row_pitch = if extent.dim() == 1 {
            dense
        } else {
            dense.next_multiple_of(alignment)
        };
        let rows = extent.product() / extent.last();
        let bytes = rows.checked_mul(row_pitch).ok_or(Error::Alloc(usize::MAX))?;
        let storage = Storage::zeroed(bytes, alignment)?;
        Ok(Buffer {
            device,
            extent,
            elem_size,
            row_pitch,
            storage: Arc::new(storage),
        })
    }

    /// Typed convenience for [`alloc`](Self::alloc).
    pub fn alloc_for<T: Element>(device: Device, extent: IndexVec) -> Result<Self> {
        Self::alloc(device, extent, std::mem::size_of::<T>())
    }

    /// Allocates a dense-initialized buffer from row-major `data`.
    pub fn from_slice<T: Element>(device: Device, extent: IndexVec, data: &[T]) -> Result<Self> {
        let mut buf = Self::alloc_for::<T>(device, extent)?;
        buf.copy_from_slice(data)?;
        Ok(buf)
    }

    #[inline]
    pub fn device(&self) -> Device {
        self.device
    }

    #[inline]
    pub fn extent(&self) -> IndexVec {
        self.extent
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.extent.dim()
    }

    #[inline]
    pub fn elem_size(&self) -> usize {
        self.elem_size
    }

    /// Byte stride between consecutive rows.
    #[inline]
    pub fn row_pitch(&self) -> usize {
        self.row_pitch
    }

    /// Number of rows: the product of every axis but the last.
    #[inline]
    pub fn rows(&self) -> usize {
        self.extent.product() / self.extent.last()
    }

    /// Size of the underlying storage in bytes.
    #[inline]
    pub fn byte_len(&self) -> usize {
        self.rows() * self.row_pitch
    }

    /// Byte offset of element `idx`: `row * row_pitch + idx[last] * elem_size`
    /// where `row` is the row-major index over all axes but the last.
    pub fn byte_offset(&self, idx: &IndexVec) -> Result<usize> {
        linearize(idx, &self.extent)?;
        let dim = self.extent.dim();
        let mut row = 0;
        for k in 0..dim - 1 {
            row = row * self.extent[k] + idx[k];
        }
        Ok(row * self.row_pitch + idx[dim - 1] * self.elem_size)
    }

    /// Whether some view or pending task still refers to the storage.
    pub fn in_use(&self) -> bool {
        Arc::strong_count(&self.storage) > 1
    }

    fn host_access(&self) -> Result<()> {
        if self.in_use() {
            return Err(Error::BufferInUse);
        }
        // Pairs with the release decrement of the last dropped view.
        fence(Ordering::Acquire);
        Ok(())
    }

    fn check_type<T: Element>(&self) -> Result<()> {
        let size = std::mem::size_of::<T>();
        if size != self.elem_size {
            return Err(Error::ElementSize {
                requested: size,
                actual: self.elem_size,
            });
        }
        Ok(())
    }

    pub fn get<T: Element>(&self, idx: &IndexVec) -> Result<T> {
        self.check_type::<T>()?;
        let off = self.byte_offset(idx)?;
        self.host_access()?;
        // SAFETY: offset in bounds and aligned; no view is alive.
        Ok(unsafe { self.storage.ptr().add(off).cast::<T>().read() })
    }

    pub fn set<T: Element>(&mut self, idx: &IndexVec, value: T) -> Result<()> {
        self.check_type::<T>()?;
        let off = self.byte_offset(idx)?;
        self.host_access()?;
        // SAFETY: as in `get`.
        unsafe { self.storage.ptr().add(off).cast::<T>().write(value) };
        Ok(())
    }

    /// The raw storage, padding included.
    pub fn as_bytes(&self) -> Result<&[u8]> {
        self.host_access()?;
        // SAFETY: `view`/`view_mut` need `&mut self`, so no task can start
        // writing while this borrow is alive.
        Ok(unsafe { std::slice::from_raw_parts(self.storage.ptr(), self.byte_len()) })
    }

    pub fn as_bytes_mut(&mut self) -> Result<&mut [u8]> {
        self.host_access()?;
        // SAFETY: exclusive borrow and no outstanding views.
        Ok(unsafe { std::slice::from_raw_parts_mut(self.storage.ptr(), self.byte_len()) })
    }

    /// Row `r` (row-major over all axes but the last), without padding.
    pub fn row<T: Element>(&self, r: usize) -> Result<&[T]> {
        self.check_type::<T>()?;
        if r >= self.rows() {
            return Err(Error::LinearOutOfRange {
                index: r,
                extent: self.extent,
            });
        }
        let bytes = self.as_bytes()?;
        let ptr = bytes[r * self.row_pitch..].as_ptr().cast::<T>();
        // SAFETY: row lies inside storage and is aligned for T.
        Ok(unsafe { std::slice::from_raw_parts(ptr, self.extent.last()) })
    }

    pub fn row_mut<T: Element>(&mut self, r: usize) -> Result<&mut [T]> {
        self.check_type::<T>()?;
        if r >= self.rows() {
            return Err(Error::LinearOutOfRange {
                index: r,
                extent: self.extent,
            });
        }
        let cols = self.extent.last();
        let pitch = self.row_pitch;
        let bytes = self.as_bytes_mut()?;
        let ptr = bytes[r * pitch..].as_mut_ptr().cast::<T>();
        // SAFETY: as in `row`, with exclusive access.
        Ok(unsafe { std::slice::from_raw_parts_mut(ptr, cols) })
    }

    /// Dense row-major copy of the logical contents.
    pub fn to_vec<T: Element>(&self) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(self.extent.product());
        for r in 0..self.rows() {
            out.extend_from_slice(self.row::<T>(r)?);
        }
        Ok(out)
    }

    /// Fills the logical contents from dense row-major `data`.
    pub fn copy_from_slice<T: Element>(&mut self, data: &[T]) -> Result<()> {
        self.check_type::<T>()?;
        if data.len() != self.extent.product() {
            return Err(Error::InvalidArgument(format!(
                "{} values for extent {}",
                data.len(),
                self.extent
            )));
        }
        let cols = self.extent.last();
        for (r, chunk) in data.chunks_exact(cols).enumerate() {
            self.row_mut::<T>(r)?.copy_from_slice(chunk);
        }
        Ok(())
    }

    /// Sets every element to `f(idx)`, visiting indices in row-major order.
    pub fn fill_with<T: Element>(&mut self, mut f: impl FnMut(IndexVec) -> T) -> Result<()> {
        self.check_type::<T>()?;
        let extent = self.extent;
        let cols = extent.last();
        let mut indices = extent.iter_box();
        for r in 0..self.rows() {
            let row = self.row_mut::<T>(r)?;
            for slot in row.iter_mut().take(cols) {
                *slot = f(indices.next().expect("box has rows * cols points"));
            }
        }
        Ok(())
    }

    /// Fills an `f64` buffer with independent draws, uniform in `[lo, hi)`,
    /// in row-major order. The same generator state gives the same contents.
    pub fn fill_uniform<R: Rng + ?Sized>(&mut self, rng: &mut R, lo: f64, hi: f64) -> Result<()> {
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN bounds
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!("empty range [{lo}, {hi})")));
        }
        self.fill_with::<f64>(|_| rng.random_range(lo..hi))
    }

    /// Read-only typed view for binding into a task.
    pub fn view<T: Element>(&mut self) -> Result<Global<T>> {
        self.check_type::<T>()?;
        Ok(Global::new(
            self.storage.clone(),
            self.extent,
            self.row_pitch / self.elem_size,
        ))
    }

    /// Writable typed view for binding into a task.
    pub fn view_mut<T: Element>(&mut self) -> Result<GlobalMut<T>> {
        self.check_type::<T>()?;
        Ok(GlobalMut::new(
            self.storage.clone(),
            self.extent,
            self.row_pitch / self.elem_size,
        ))
    }

    pub(crate) fn storage(&self) -> &Arc<Storage> {
        &self.storage
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pitch_rounds_up_rows() {
        let b = Buffer::alloc(Device::Host, IndexVec::d2(10, 10), 8).unwrap();
        assert_eq!(b.row_pitch(), 128);
        let b = Buffer::alloc(Device::Host, IndexVec::d2(8, 8), 8).unwrap();
        assert_eq!(b.row_pitch(), 64);
        let b = Buffer::alloc(Device::Host, IndexVec::d3(2, 3, 5), 4).unwrap();
        assert_eq!(b.row_pitch(), 64);
        assert_eq!(b.rows(), 6);
    }

    #[test]
    fn one_dim_buffers_are_dense() {
        let b = Buffer::alloc(Device::Host, IndexVec::d1(100), 8).unwrap();
        assert_eq!(b.row_pitch(), 800);
        assert_eq!(b.byte_len(), 800);
    }

    #[test]
    fn custom_alignment() {
        let b = Buffer::alloc_aligned(Device::Host, IndexVec::d2(10, 10), 8, 32).unwrap();
        assert_eq!(b.row_pitch(), 96);
        assert!(Buffer::alloc_aligned(Device::Host, IndexVec::d2(1, 1), 8, 48).is_err());
        assert!(Buffer::alloc(Device::Host, IndexVec::d2(0, 1), 8).is_err());
    }

    #[test]
    fn byte_offset_layout() {
        let b = Buffer::alloc(Device::Host, IndexVec::d2(10, 16), 8).unwrap();
        assert_eq!(b.row_pitch(), 128);
        assert_eq!(b.byte_offset(&IndexVec::d2(2, 3)).unwrap(), 2 * 128 + 24);
        assert_eq!(b.byte_offset(&IndexVec::d2(2, 3)).unwrap(), 280);
        assert!(b.byte_offset(&IndexVec::d2(10, 0)).is_err());
    }

    #[test]
    fn get_set_round_trip() {
        let mut b = Buffer::alloc_for::<f64>(Device::Host, IndexVec::d2(5, 7)).unwrap();
        b.set(&IndexVec::d2(4, 6), 3.25f64).unwrap();
        assert_eq!(b.get::<f64>(&IndexVec::d2(4, 6)).unwrap(), 3.25);
        assert!(matches!(
            b.get::<f32>(&IndexVec::d2(0, 0)),
            Err(Error::ElementSize { .. })
        ));
        assert!(b.set(&IndexVec::d2(5, 0), 1.0f64).is_err());
    }

    #[test]
    fn iteration_visits_each_element_once() {
        let extent = IndexVec::d3(3, 4, 5);
        let mut b = Buffer::alloc_for::<u32>(Device::Host, extent).unwrap();
        let mut visits = vec![0u32; extent.product()];
        b.fill_with::<u32>(|idx| {
            let lin = idx.linearize(&extent).unwrap();
            visits[lin] += 1;
            lin as u32
        })
        .unwrap();
        assert!(visits.iter().all(|&v| v == 1));
        let expected: Vec<u32> = (0..60).collect();
        assert_eq!(b.to_vec::<u32>().unwrap(), expected);
    }

    #[test]
    fn host_access_blocked_while_viewed() {
        let mut b = Buffer::alloc_for::<f64>(Device::Host, IndexVec::d1(4)).unwrap();
        let v = b.view_mut::<f64>().unwrap();
        assert_eq!(b.get::<f64>(&IndexVec::d1(0)), Err(Error::BufferInUse));
        drop(v);
        assert_eq!(b.get::<f64>(&IndexVec::d1(0)).unwrap(), 0.0);
    }

    #[test]
    fn fill_uniform_is_deterministic_and_in_range() {
        let extent = IndexVec::d2(33, 17);
        let mut a = Buffer::alloc_for::<f64>(Device::Host, extent).unwrap();
        let mut b = Buffer::alloc_for::<f64>(Device::Host, extent).unwrap();
        a.fill_uniform(&mut ChaCha8Rng::seed_from_u64(9), 0.0, 10.0).unwrap();
        b.fill_uniform(&mut ChaCha8Rng::seed_from_u64(9), 0.0, 10.0).unwrap();
        let av = a.to_vec::<f64>().unwrap();
        assert_eq!(av, b.to_vec::<f64>().unwrap());
        assert!(av.iter().all(|&x| (0.0..10.0).contains(&x)));
        assert!(a.fill_uniform(&mut ChaCha8Rng::seed_from_u64(9), 1.0, 1.0).is_err());
    }

    #[test]
    fn fill_uniform_mean() {
        let mut b = Buffer::alloc_for::<f64>(Device::Host, IndexVec::d1(1_000_000)).unwrap();
        b.fill_uniform(&mut ChaCha8Rng::seed_from_u64(2024), 0.0, 10.0).unwrap();
        let v = b.to_vec::<f64>().unwrap();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        // std of the mean is 10/sqrt(12)/1000 ~ 0.0029, so 0.05 is ~17 sigma
        assert!((mean - 5.0).abs() < 0.05, "mean {mean}");
    }
}
