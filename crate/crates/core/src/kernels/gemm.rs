use crate::accel::{Acc, BackendKind, Kernel};
use crate::error::{Error, Result};
use crate::index::IndexVec;
use crate::mem::{Buffer, Global, GlobalMut};
use crate::workdiv::{divide_for_backend, Origin, Unit, WorkDiv};

/// Default edge of a tiled-GEMM block tile; a pair of `f64` tiles is 4 KiB.
pub const DEFAULT_TILE: usize = 16;

/// Arguments of the GEMM kernels: `C = alpha * A * B + beta * C` with `A`
/// m x k, `B` k x n and `C` m x n.
pub struct GemmArgs {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub a: Global<f64>,
    pub b: Global<f64>,
    pub c: GlobalMut<f64>,
}

impl GemmArgs {
    pub fn new(alpha: f64, a: &mut Buffer, b: &mut Buffer, beta: f64, c: &mut Buffer) -> Result<Self> {
        let (ae, be, ce) = (a.extent(), b.extent(), c.extent());
        if ae.dim() != 2 || be.dim() != 2 || ce.dim() != 2 {
            return Err(Error::InvalidArgument("gemm needs 2-D buffers".into()));
        }
        let (m, k, n) = (ae[0], ae[1], be[1]);
        if be[0] != k || ce[0] != m || ce[1] != n {
            return Err(Error::InvalidArgument(format!(
                "gemm shapes do not agree: A {ae}, B {be}, C {ce}"
            )));
        }
        Ok(GemmArgs {
            m,
            n,
            k,
            alpha,
            beta,
            a: a.view()?,
            b: b.view()?,
            c: c.view_mut()?,
        })
    }
}

/// Output rows and columns owned by the calling thread, clamped to `m x n`.
#[inline]
fn owned_outputs(acc: &Acc<'_>, m: usize, n: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let t = acc.grid_thread_idx();
    let e = acc.thread_elem_extent();
    let r0 = t[0] * e[0];
    let c0 = t[1] * e[1];
    (r0.min(m)..(r0 + e[0]).min(m), c0.min(n)..(c0 + e[1]).min(n))
}

/// Triple-loop GEMM: every thread computes its own patch of `C`, each entry
/// as one dot product accumulated in ascending `p`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GemmNaive;

impl Kernel<GemmArgs> for GemmNaive {
    fn run(&self, acc: &Acc<'_>, args: &GemmArgs) {
        let (rows, cols) = owned_outputs(acc, args.m, args.n);
        let (k, alpha, beta) = (args.k, args.alpha, args.beta);
        let a = args.a.as_flat();
        let b = args.b.as_flat();
        let (lda, ldb) = (args.a.row_stride(), args.b.row_stride());
        for r in rows {
            for col in cols.clone() {
                let mut sum = 0.0;
                for p in 0..k {
                    sum += a[r * lda + p] * b[p * ldb + col];
                }
                // SAFETY: (r, col) is owned by this thread only.
                unsafe {
                    let old = args.c.get2(r, col);
                    args.c.set2(r, col, alpha * sum + beta * old);
                }
            }
        }
    }
}

/// Hierarchically tiled GEMM.
///
/// One block computes one `T x T` tile of `C`, where `T` is the block's
/// element extent. For each step along `k` the threads of the block stage a
/// tile of `A` and a tile of `B` in shared memory (zero outside the
/// matrices), meet at a barrier, accumulate the partial products of the
/// elements they own, and meet again before the next step.
#[derive(Debug, Clone, Copy, Default)]
pub struct GemmTiled;

impl Kernel<GemmArgs> for GemmTiled {
    fn run(&self, acc: &Acc<'_>, args: &GemmArgs) {
        let block_elems = acc.get_work_div(Origin::Block, Unit::Elems).expect("2-D work division");
        let tile = block_elems[0];
        assert_eq!(
            tile, block_elems[1],
            "tiled gemm needs square block tiles, got {block_elems}"
        );
        let ept = acc.thread_elem_extent();
        let (er, ec) = (ept[0], ept[1]);
        let th = acc.block_thread_idx();
        let (lr0, lc0) = (th[0] * er, th[1] * ec);
        let blk = acc.grid_block_idx();
        let (row0, col0) = (blk[0] * tile, blk[1] * tile);
        let (m, n, k) = (args.m, args.n, args.k);

        let a_tile = acc.alloc_shared::<f64>(tile * tile);
        let b_tile = acc.alloc_shared::<f64>(tile * tile);
        let mut partial = vec![0.0f64; er * ec];

        let a = args.a.as_flat();
        let b = args.b.as_flat();
        let (lda, ldb) = (args.a.row_stride(), args.b.row_stride());

        for k0 in (0..k).step_by(tile) {
            for i in lr0..lr0 + er {
                for j in lc0..lc0 + ec {
                    let (ar, ac) = (row0 + i, k0 + j);
                    let av = if ar < m && ac < k { a[ar * lda + ac] } else { 0.0 };
                    let (br, bc) = (k0 + i, col0 + j);
                    let bv = if br < k && bc < n { b[br * ldb + bc] } else { 0.0 };
                    // SAFETY: each thread stages a disjoint patch of both
                    // tiles; readers wait at the barrier below.
                    unsafe {
                        a_tile.write(i * tile + j, av);
                        b_tile.write(i * tile + j, bv);
                    }
                }
            }
            acc.sync_block_threads();

            let depth = tile.min(k - k0);
            // SAFETY: no thread writes the tiles until the next barrier.
            let (at, bt) = unsafe { (a_tile.as_slice(), b_tile.as_slice()) };
            for (ii, i) in (lr0..lr0 + er).enumerate() {
                let out = &mut partial[ii * ec..(ii + 1) * ec];
                let a_row = &at[i * tile..i * tile + depth];
                for (p, &av) in a_row.iter().enumerate() {
                    let b_row = &bt[p * tile + lc0..p * tile + lc0 + ec];
                    for (o, &bv) in out.iter_mut().zip(b_row) {
                        *o += av * bv;
                    }
                }
            }
            acc.sync_block_threads();
        }

        for (ii, i) in (lr0..lr0 + er).enumerate() {
            let r = row0 + i;
            if r >= m {
                break;
            }
            for (jj, j) in (lc0..lc0 + ec).enumerate() {
                let col = col0 + j;
                if col >= n {
                    break;
                }
                // SAFETY: (r, col) is owned by this thread only.
                unsafe {
                    let old = args.c.get2(r, col);
                    args.c
                        .set2(r, col, args.alpha * partial[ii * ec + jj] + args.beta * old);
                }
            }
        }
    }
}

/// Work division for [`GemmNaive`]: a 2-D grid over the `m x n` outputs,
/// each thread owning `elems` (rows, cols) outputs.
pub fn gemm_naive_work_div(
    m: usize,
    n: usize,
    backend: BackendKind,
    threads_per_block: (usize, usize),
    elems: (usize, usize),
) -> Result<WorkDiv> {
    divide_for_backend(
        IndexVec::d2(m, n),
        backend,
        IndexVec::d2(threads_per_block.0, threads_per_block.1),
        IndexVec::d2(elems.0, elems.1),
    )
}

/// Work division for [`GemmTiled`]: one block per `tile x tile` output tile.
///
/// Thread-level back-ends split the tile over `side x side` threads, so
/// `side` has to divide `tile`; the others run one thread per block owning
/// the whole tile.
pub fn gemm_tiled_work_div(m: usize, n: usize, tile: usize, backend: BackendKind, side: usize) -> Result<WorkDiv> {
    if tile == 0 || side == 0 {
        return Err(Error::InvalidArgument("tile and thread side must be positive".into()));
    }
    let (threads, elems) = if backend.is_thread_level() {
        if !tile.is_multiple_of(side) {
            return Err(Error::InvalidArgument(format!(
                "{side} threads per side do not divide tile {tile}"
            )));
        }
        (side, tile / side)
    } else {
        (1, tile)
    };
    divide_for_backend(
        IndexVec::d2(m, n),
        backend,
        IndexVec::d2(threads, threads),
        IndexVec::d2(elems, elems),
    )
}
