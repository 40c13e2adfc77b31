use std::io::{Read, Write};

use kernelweave::Result;
use serde::{Deserialize, Serialize};

use crate::config::{BackendLabel, KernelKind};

/// One timed repetition. Field order is the CSV column order:
/// `kernel,backend,n,b,v,tile,rep,seconds,gflops,verified`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub kernel: KernelKind,
    pub backend: BackendLabel,
    pub n: usize,
    /// Threads per block (product over dimensions).
    pub b: usize,
    /// Elements per thread (product over dimensions).
    pub v: usize,
    /// Tile edge for the tiled kernel, 0 otherwise.
    pub tile: usize,
    pub rep: usize,
    pub seconds: f64,
    pub gflops: f64,
    pub verified: bool,
}

/// `flops / seconds / 1e9`; zero when no time was measured.
pub fn gflops(kernel: KernelKind, n: usize, seconds: f64) -> f64 {
    if seconds > 0.0 {
        kernel.flop_count(n) as f64 / seconds / 1e9
    } else {
        0.0
    }
}

pub fn write_records<W: Write>(out: W, records: &[BenchRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        // serde only emits the header alongside the first row
        w.write_record([
            "kernel", "backend", "n", "b", "v", "tile", "rep", "seconds", "gflops", "verified",
        ])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<BenchRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in rd.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn records_to_string(records: &[BenchRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_records(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
