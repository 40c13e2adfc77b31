use std::time::Instant;

use kernelweave::kernels::{axpy_reference, gemm_reference, Axpy, AxpyArgs, GemmArgs, GemmNaive, GemmTiled};
use kernelweave::{create_exec, BackendKind, Buffer, Device, Error, Flavor, IndexVec, Queue, Result, Task, WorkDiv};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{BackendLabel, BenchConfig, KernelKind};
use crate::record::{gflops, BenchRecord};
use crate::report::median;

pub const ALPHA: f64 = 1.5;
pub const BETA: f64 = 0.5;

/// Host-side inputs for one (kernel, size) point, drawn uniformly from
/// `[0, 10)`. The same seed and size always give the same data.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub kernel: KernelKind,
    pub n: usize,
    /// `[x, y]` for AXPY, `[a, b, c]` (dense row-major) for GEMM.
    pub inputs: Vec<Vec<f64>>,
}

impl Problem {
    pub fn generate(kernel: KernelKind, n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(n as u64);
        let (count, len) = if kernel.is_gemm() { (3, n * n) } else { (2, n) };
        let inputs = (0..count)
            .map(|_| (0..len).map(|_| rng.random_range(0.0..10.0)).collect())
            .collect();
        Problem { kernel, n, inputs }
    }

    fn output(&self) -> &[f64] {
        self.inputs.last().unwrap()
    }

    /// The expected result, from the same loop the native baseline times.
    pub fn reference(&self) -> Vec<f64> {
        let mut out = self.output().to_vec();
        self.native_loop(&mut out);
        out
    }

    fn native_loop(&self, out: &mut [f64]) {
        let n = self.n;
        match self.kernel {
            KernelKind::Axpy => axpy_reference(ALPHA, &self.inputs[0], out),
            KernelKind::GemmNaive | KernelKind::GemmTiled => {
                gemm_reference(n, n, n, ALPHA, &self.inputs[0], n, &self.inputs[1], n, BETA, out, n)
            }
        }
    }

    /// Allocates the operands, and for a back-end its asynchronous queue,
    /// once for repeated timed runs on `label`. Back-end labels need the work
    /// division to run under.
    pub fn runner(&self, label: BackendLabel, wd: Option<&WorkDiv>) -> Result<Runner<'_>> {
        let target = match (label.accel(), wd) {
            (Some(backend), Some(wd)) => {
                let ext = if self.kernel.is_gemm() {
                    IndexVec::d2(self.n, self.n)
                } else {
                    IndexVec::d1(self.n)
                };
                let bufs = self
                    .inputs
                    .iter()
                    .map(|data| Buffer::from_slice(Device::Host, ext, data))
                    .collect::<Result<_>>()?;
                Target::Backend(backend, *wd, bufs, Queue::new(Device::Host, Flavor::Async))
            }
            (None, _) => Target::Native(self.output().to_vec()),
            (Some(_), None) => return Err(Error::InvalidArgument(format!("{label} needs a work division"))),
        };
        Ok(Runner { problem: self, target })
    }
}

enum Target {
    Native(Vec<f64>),
    Backend(BackendKind, WorkDiv, Vec<Buffer>, Queue),
}

/// Operands for one (problem, label) pair, reused across repetitions.
pub struct Runner<'p> {
    problem: &'p Problem,
    target: Target,
}

impl Runner<'_> {
    /// Resets the output operand, then times one execution and returns the
    /// seconds taken with a copy of the result.
    ///
    /// On a back-end the clock covers enqueue plus wait; resetting and reading
    /// the result back are outside it. The native loop is timed on its own.
    /// The first run also brings up the queue's worker thread, so callers
    /// discard it.
    pub fn run(&mut self) -> Result<(f64, Vec<f64>)> {
        let p = self.problem;
        match &mut self.target {
            Target::Native(out) => {
                out.copy_from_slice(p.output());
                let start = Instant::now();
                p.native_loop(out);
                Ok((start.elapsed().as_secs_f64(), out.clone()))
            }
            Target::Backend(backend, wd, bufs, queue) => {
                let out = bufs.last_mut().unwrap();
                out.copy_from_slice(p.output())?;
                let secs = match (p.kernel, &mut bufs[..]) {
                    (KernelKind::Axpy, [x, y]) => {
                        let args = AxpyArgs::new(ALPHA, x, y)?;
                        timed(queue, create_exec(*backend, *wd, Axpy, args)?)?
                    }
                    (kernel, [a, b, c]) => {
                        let args = GemmArgs::new(ALPHA, a, b, BETA, c)?;
                        if kernel == KernelKind::GemmNaive {
                            timed(queue, create_exec(*backend, *wd, GemmNaive, args)?)?
                        } else {
                            timed(queue, create_exec(*backend, *wd, GemmTiled, args)?)?
                        }
                    }
                    _ => unreachable!("operand count follows the kernel"),
                };
                Ok((secs, bufs.last().unwrap().to_vec()?))
            }
        }
    }
}

fn timed<T: Task>(queue: &Queue, task: T) -> Result<f64> {
    let start = Instant::now();
    queue.enqueue(task)?;
    queue.wait()?;
    Ok(start.elapsed().as_secs_f64())
}

pub fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Runs every (size, back-end, rep) point of `cfg`, one at a time.
///
/// Each (size, back-end) pair gets one untimed warm-up run first. Size 0 is
/// skipped since there is nothing to time. With `verify` off every record
/// has `verified == false`.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let mut records = Vec::new();
    for &n in &cfg.sizes {
        if n == 0 {
            continue;
        }
        let problem = Problem::generate(cfg.kernel, n, cfg.seed);
        let expected = cfg.verify.then(|| problem.reference());
        for &label in &cfg.backends {
            let wd = label.accel().map(|backend| cfg.work_div(backend, n)).transpose()?;
            let (b, v) = wd.as_ref().map_or((1, 1), |wd| {
                (wd.threads_per_block().product(), wd.elems_per_thread().product())
            });
            let tile = if wd.is_some() && cfg.kernel == KernelKind::GemmTiled {
                cfg.effective_tile()
            } else {
                0
            };
            let mut runner = problem.runner(label, wd.as_ref())?;
            runner.run()?;
            for rep in 0..cfg.reps {
                let (secs, out) = runner.run()?;
                records.push(BenchRecord {
                    kernel: cfg.kernel,
                    backend: label,
                    n,
                    b,
                    v,
                    tile,
                    rep,
                    seconds: secs,
                    gflops: gflops(cfg.kernel, n, secs),
                    verified: expected.as_deref().is_some_and(|e| same_bits(&out, e)),
                });
            }
        }
    }
    Ok(records)
}

/// Median wall time of the native sequential loop for `kernel` at size `n`.
pub fn native_baseline(kernel: KernelKind, n: usize, seed: u64, reps: usize) -> f64 {
    let problem = Problem::generate(kernel, n, seed);
    let mut runner = problem
        .runner(BackendLabel::Native, None)
        .expect("native runner needs no buffers");
    runner.run().expect("native loop cannot fail");
    let times: Vec<f64> = (0..reps.max(1)).map(|_| runner.run().unwrap().0).collect();
    median(&times)
}

/// True when every record passed verification.
pub fn all_verified(records: &[BenchRecord]) -> bool {
    records.iter().all(|r| r.verified)
}

/// Backend labels to run when a baseline is requested but was not listed.
pub fn with_baseline(mut backends: Vec<BackendLabel>, baseline: Option<BackendLabel>) -> Vec<BackendLabel> {
    if let Some(b) = baseline {
        if !backends.contains(&b) {
            backends.insert(0, b);
        }
    }
    backends
}
