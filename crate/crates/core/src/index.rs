//! Fixed-dimensionality extents and indices.
//!
//! Every n-dimensional index space in the crate is row-major: the last
//! component varies fastest. A 2-D extent `(rows, cols)` therefore lays out
//! `cols` consecutive elements per row.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::Index;

use crate::error::{Error, Result};

/// Largest supported dimensionality.
pub const MAX_DIM: usize = 3;

/// A vector of 1 to 3 non-negative counts, used for extents and indices alike.
///
/// The dimensionality is a value-level field so tasks of different
/// dimensionality can sit in the same queue.
#[derive(Clone, Copy, Eq)]
pub struct IndexVec {
    dim: u8,
    comps: [usize; MAX_DIM],
}

impl IndexVec {
    #[inline]
    pub fn new(comps: &[usize]) -> Result<Self> {
        if comps.is_empty() || comps.len() > MAX_DIM {
            return Err(Error::InvalidDim(comps.len()));
        }
        let mut out = [0; MAX_DIM];
        out[..comps.len()].copy_from_slice(comps);
        Ok(IndexVec {
            dim: comps.len() as u8,
            comps: out,
        })
    }

    pub const fn d1(x: usize) -> Self {
        IndexVec {
            dim: 1,
            comps: [x, 0, 0],
        }
    }

    pub const fn d2(x: usize, y: usize) -> Self {
        IndexVec {
            dim: 2,
            comps: [x, y, 0],
        }
    }

    pub const fn d3(x: usize, y: usize, z: usize) -> Self {
        IndexVec {
            dim: 3,
            comps: [x, y, z],
        }
    }

    /// A vector of `dim` copies of `value`.
    pub fn splat(dim: usize, value: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidDim(dim));
        }
        let mut comps = [0; MAX_DIM];
        comps[..dim].fill(value);
        Ok(IndexVec { dim: dim as u8, comps })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::splat(dim, 0)
    }

    pub fn ones(dim: usize) -> Result<Self> {
        Self::splat(dim, 1)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn as_slice(&self) -> &[usize] {
        &self.comps[..self.dim as usize]
    }

    /// The fastest-varying component.
    #[inline]
    pub fn last(&self) -> usize {
        self.comps[self.dim as usize - 1]
    }

    /// Product of all components; the number of points in the box `[0, self)`.
    #[inline]
    pub fn product(&self) -> usize {
        let c = &self.comps;
        match self.dim {
            1 => c[0],
            2 => c[0] * c[1],
            _ => c[0] * c[1] * c[2],
        }
    }

    #[inline]
    pub fn check_dim(&self, other: &IndexVec) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }

    pub(crate) fn zip_with(&self, other: &IndexVec, f: impl Fn(usize, usize) -> usize) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = *self;
        for k in 0..self.dim() {
            out.comps[k] = f(self.comps[k], other.comps[k]);
        }
        Ok(out)
    }

    /// Component-wise product.
    pub fn elementwise_product(&self, other: &IndexVec) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn elementwise_add(&self, other: &IndexVec) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Component-wise ceiling division. Divisor components must be non-zero.
    pub fn ceil_div(&self, other: &IndexVec) -> Result<Self> {
        if other.as_slice().contains(&0) {
            return Err(Error::ZeroExtent(*other));
        }
        self.zip_with(other, |a, b| a.div_ceil(b))
    }

    /// True when every component of `self` is strictly below the matching
    /// component of `extent`.
    #[inline]
    pub fn all_lt(&self, extent: &IndexVec) -> bool {
        let (i, e, d) = (&self.comps, &extent.comps, self.dim);
        (d == extent.dim) & (i[0] < e[0]) & ((d < 2) | (i[1] < e[1])) & ((d < 3) | (i[2] < e[2]))
    }

    /// True when every component of `self` is at most the matching component
    /// of `other`.
    pub fn all_le(&self, other: &IndexVec) -> bool {
        self.dim == other.dim && self.as_slice().iter().zip(other.as_slice()).all(|(i, e)| i <= e)
    }

    /// Row-major linear position of `self` inside `extent`.
    #[inline]
    pub fn linearize(&self, extent: &IndexVec) -> Result<usize> {
        linearize(self, extent)
    }

    /// Iterates over every index in the box `[0, self)` in row-major order.
    pub fn iter_box(&self) -> impl Iterator<Item = IndexVec> {
        let extent = *self;
        (0..extent.product()).map(move |lin| delinearize_unchecked(lin, &extent))
    }
}

// Unused components are always zero, so comparing all of them is exact.
// Spelled out because the derived array compare does not inline well.
impl PartialEq for IndexVec {
    #[inline]
    fn eq(&self, other: &Self) -> bool {
        (self.dim == other.dim)
            & (self.comps[0] == other.comps[0])
            & (self.comps[1] == other.comps[1])
            & (self.comps[2] == other.comps[2])
    }
}

impl Hash for IndexVec {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.dim.hash(state);
        self.comps.hash(state);
    }
}

impl Index<usize> for IndexVec {
    type Output = usize;

    #[inline]
    fn index(&self, k: usize) -> &usize {
        &self.as_slice()[k]
    }
}

impl fmt::Debug for IndexVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for IndexVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.as_slice().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Maps an n-dimensional index to its row-major linear position.
#[inline]
pub fn linearize(idx: &IndexVec, extent: &IndexVec) -> Result<usize> {
    idx.check_dim(extent)?;
    if !idx.all_lt(extent) {
        return Err(Error::IndexOutOfRange {
            index: *idx,
            extent: *extent,
        });
    }
    Ok(linearize_unchecked(idx, extent))
}

/// [`linearize`] without the range checks. Out-of-range input yields an
/// unspecified value.
#[inline]
pub fn linearize_unchecked(idx: &IndexVec, extent: &IndexVec) -> usize {
    let mut lin = 0usize;
    for k in 0..extent.dim() {
        lin = lin.wrapping_mul(extent.comps[k]).wrapping_add(idx.comps[k]);
    }
    lin
}

/// Inverse of [`linearize`].
#[inline]
pub fn delinearize(lin: usize, extent: &IndexVec) -> Result<IndexVec> {
    if lin >= extent.product() {
        return Err(Error::LinearOutOfRange {
            index: lin,
            extent: *extent,
        });
    }
    Ok(delinearize_unchecked(lin, extent))
}

#[inline]
pub fn delinearize_unchecked(mut lin: usize, extent: &IndexVec) -> IndexVec {
    let mut out = *extent;
    for k in (1..extent.dim()).rev() {
        let e = extent.comps[k];
        out.comps[k] = lin % e;
        lin /= e;
    }
    // in range, what is left is already below the outermost extent
    out.comps[0] = lin;
    out
}
