use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use kernelweave::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::{BackendLabel, KernelKind};
use crate::record::{gflops, BenchRecord};

/// Median of `values`, averaging the middle pair for even lengths. NaN for
/// an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

type Key = (KernelKind, BackendLabel, usize);

/// Median seconds per (kernel, back-end, n), in order of first appearance.
pub fn median_times(records: &[BenchRecord]) -> Vec<(Key, f64)> {
    let mut order: Vec<Key> = Vec::new();
    let mut times: HashMap<Key, Vec<f64>> = HashMap::new();
    for r in records {
        let key = (r.kernel, r.backend, r.n);
        times
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r.seconds);
    }
    order.into_iter().map(|k| (k, median(&times[&k]))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub kernel: KernelKind,
    pub backend: BackendLabel,
    pub n: usize,
    pub median_seconds: f64,
    pub baseline_seconds: f64,
    /// `median_seconds / baseline_seconds`; above 1 is slower than baseline.
    pub ratio: f64,
}

/// Median time of every (kernel, back-end, n) group relative to the
/// `baseline` group with the same kernel and n.
pub fn relative_report(records: &[BenchRecord], baseline: BackendLabel) -> Result<Vec<ReportRow>> {
    let medians = median_times(records);
    let base: HashMap<(KernelKind, usize), f64> = medians
        .iter()
        .filter(|((_, b, _), _)| *b == baseline)
        .map(|((k, _, n), t)| ((*k, *n), *t))
        .collect();
    medians
        .iter()
        .map(|&((kernel, backend, n), t)| {
            let b = *base
                .get(&(kernel, n))
                .ok_or_else(|| Error::InvalidArgument(format!("no {baseline} records for {kernel} at n={n}")))?;
            Ok(ReportRow {
                kernel,
                backend,
                n,
                median_seconds: t,
                baseline_seconds: b,
                ratio: t / b,
            })
        })
        .collect()
}

pub fn write_report<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn format_report(rows: &[ReportRow], baseline: BackendLabel) -> String {
    let mut s = format!(
        "{:<11} {:<8} {:>7} {:>13} {:>13} {:>8}\n",
        "kernel",
        "backend",
        "n",
        "median [s]",
        baseline.name(),
        "ratio"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<11} {:<8} {:>7} {:>13.6e} {:>13.6e} {:>8.3}",
            r.kernel.name(),
            r.backend.name(),
            r.n,
            r.median_seconds,
            r.baseline_seconds,
            r.ratio
        );
    }
    s
}

/// Per-group medians with GFLOPS computed from the median time.
pub fn format_summary(records: &[BenchRecord]) -> String {
    let mut s = format!(
        "{:<11} {:<8} {:>7} {:>13} {:>9} {:>8}\n",
        "kernel", "backend", "n", "median [s]", "GFLOPS", "verified"
    );
    for ((kernel, backend, n), t) in median_times(records) {
        let ok = records
            .iter()
            .filter(|r| (r.kernel, r.backend, r.n) == (kernel, backend, n))
            .all(|r| r.verified);
        let _ = writeln!(
            s,
            "{:<11} {:<8} {:>7} {:>13.6e} {:>9.3} {:>8}",
            kernel.name(),
            backend.name(),
            n,
            t,
            gflops(kernel, n, t),
            ok
        );
    }
    s
}
