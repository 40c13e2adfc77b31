//! Benchmark points shared by the criterion targets.

use kernelweave_cli::{BackendLabel, KernelKind};

pub const SEED: u64 = 7;

/// Labels measured for every kernel: the plain loop first, then the back-ends.
pub const LABELS: [BackendLabel; 4] = [
    BackendLabel::Native,
    BackendLabel::Serial,
    BackendLabel::Blocks,
    BackendLabel::Threads,
];

/// Problem sizes small enough that a full sweep finishes in minutes on one core.
pub fn sizes(kernel: KernelKind) -> &'static [usize] {
    match kernel {
        KernelKind::Axpy => &[1 << 16, 1 << 20],
        KernelKind::GemmNaive | KernelKind::GemmTiled => &[64, 128],
    }
}
