//! Evaluation kernels, written once against [`Acc`](crate::accel::Acc) and
//! run unchanged on every back-end, plus their sequential references.
//!
//! Every kernel accumulates in the same fixed order as its reference, so
//! results are bitwise identical across back-ends and against the reference.

mod axpy;
mod gemm;
mod reference;

pub use axpy::{axpy_work_div, Axpy, AxpyArgs};
pub use gemm::{gemm_naive_work_div, gemm_tiled_work_div, GemmArgs, GemmNaive, GemmTiled, DEFAULT_TILE};
pub use reference::{axpy_reference, gemm_reference};
