//! Acceptance suite. Runs every criterion in sequence (timing criteria must
//! not share the machine with other tests) and prints one PASS, FAIL or SKIP
//! line per criterion. Exits nonzero if any criterion fails.

use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use kernelweave::accel::POOL_SIZE_ENV;
use kernelweave::kernels::{axpy_work_div, gemm_naive_work_div, gemm_tiled_work_div};
use kernelweave::{
    copy, create_exec, delinearize, divide_for_backend, execute_task, linearize, Acc, BackendKind, Buffer, Device,
    Flavor, Global, GlobalMut, IndexVec, Queue, TaskStatus, WorkDiv,
};
use kernelweave_cli::harness::same_bits;
use kernelweave_cli::report::median_times;
use kernelweave_cli::{
    outcome_code, read_records, records_to_string, relative_report, run_bench, BackendLabel, BenchConfig, BenchRecord,
    KernelKind, Problem, EXIT_FAILURE, EXIT_OK, EXIT_USAGE,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion: `None` for not applicable on this machine.
struct Verdict {
    pass: Option<bool>,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass: Some(pass),
        detail: detail.into(),
    }
}

fn rng(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + salt)
}

// ---------------------------------------------------------------- 1

fn gemm_sizes() -> Vec<usize> {
    let mut s: Vec<usize> = (1..=64).collect();
    s.extend([65, 100, 127, 128, 256]);
    s
}

fn run_on(problem: &Problem, backend: BackendKind, wd: &WorkDiv) -> Vec<f64> {
    problem
        .runner(backend.into(), Some(wd))
        .and_then(|mut r| r.run())
        .unwrap_or_else(|e| panic!("{backend} over {wd}: {e}"))
        .1
}

fn cross_backend_determinism() -> Verdict {
    let mut rng = rng(1);
    let sizes = gemm_sizes();
    let mut instances = 0;
    let mut mismatches = Vec::new();
    for kernel in KernelKind::ALL {
        for _ in 0..100 {
            let n = if kernel == KernelKind::Axpy {
                rng.random_range(1..=1 << 16)
            } else {
                *sizes.choose(&mut rng).unwrap()
            };
            let problem = Problem::generate(kernel, n, rng.random());
            let expected = problem.reference();
            let tpb = rng.random_range(1..=8);
            let ept = rng.random_range(1..=16);
            let tile = *[4, 8, 16, 32].choose(&mut rng).unwrap();
            let side = *[1, 2, 4]
                .iter()
                .filter(|&&s| tile % s == 0)
                .collect::<Vec<_>>()
                .choose(&mut rng)
                .unwrap();
            for backend in BackendKind::ALL {
                let wd = match kernel {
                    KernelKind::Axpy => axpy_work_div(n, backend, tpb, ept * 64),
                    KernelKind::GemmNaive => gemm_naive_work_div(n, n, backend, (1, tpb), (1, ept)),
                    KernelKind::GemmTiled => gemm_tiled_work_div(n, n, tile, backend, *side),
                }
                .unwrap();
                if !same_bits(&run_on(&problem, backend, &wd), &expected) {
                    mismatches.push(format!("{kernel} n={n} {backend} {wd}"));
                }
            }
            instances += 1;
        }
    }
    verdict(
        mismatches.is_empty(),
        format!(
            "{instances} seeded instances x 3 back-ends bitwise equal to the reference; {} mismatches{}",
            mismatches.len(),
            mismatches.first().map(|m| format!(" (first: {m})")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------- 2

fn random_extent(rng: &mut ChaCha8Rng, dim: usize, max_product: usize) -> IndexVec {
    let mut comps = [1usize; 3];
    let mut budget = max_product;
    for c in comps.iter_mut().take(dim) {
        *c = rng.random_range(1..=budget.clamp(1, 24));
        budget /= *c;
    }
    IndexVec::new(&comps[..dim]).unwrap()
}

fn invocation_coverage() -> Verdict {
    let mut rng = rng(2);
    let mut failures = Vec::new();
    let mut total_pairs = 0;
    for _ in 0..50 {
        let dim = rng.random_range(1..=3);
        let threads = random_extent(&mut rng, dim, 256);
        let blocks = random_extent(&mut rng, dim, 10_000 / threads.product());
        let elems = random_extent(&mut rng, dim, 16);
        let wd = WorkDiv::new(blocks, threads, elems).unwrap();
        let pairs = wd.invocation_count();
        total_pairs += pairs;

        let mut expected: Vec<(usize, usize)> = (0..blocks.product())
            .flat_map(|b| (0..threads.product()).map(move |t| (b, t)))
            .collect();
        expected.sort_unstable();
        for backend in BackendKind::ALL {
            let seen = Mutex::new(Vec::with_capacity(pairs));
            let record = |acc: &Acc<'_>, seen: &Mutex<Vec<(usize, usize)>>| {
                let b = linearize(&acc.grid_block_idx(), &acc.work_div().blocks_per_grid()).unwrap();
                let t = linearize(&acc.block_thread_idx(), &acc.work_div().threads_per_block()).unwrap();
                seen.lock().unwrap().push((b, t));
            };
            execute_task(backend, &wd, &record, &seen).unwrap();
            let mut got = seen.into_inner().unwrap();
            got.sort_unstable();
            if got != expected {
                failures.push(format!("{backend} {wd}"));
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "50 work divisions, {total_pairs} (block, thread) pairs, each seen exactly once per back-end; {} failures",
            failures.len()
        ),
    )
}

// ---------------------------------------------------------------- 3

const INDEX_LIMIT: usize = 10_000;

// Nested loops with the last axis innermost are the oracle for row-major
// order; matching them position by position also proves the map is a
// bijection onto [0, product).
#[inline(always)]
fn index_agrees(extent: &IndexVec, lin: usize, want: IndexVec) -> bool {
    let back = matches!(linearize(&want, extent), Ok(l) if l == lin);
    match delinearize(lin, extent) {
        Ok(idx) => back & (idx == want),
        Err(_) => false,
    }
}

fn rejects_out_of_range(extent: &IndexVec) -> bool {
    let mut comps = vec![0; extent.dim()];
    *comps.last_mut().unwrap() = extent.last();
    let past = IndexVec::new(&comps).unwrap();
    delinearize(extent.product(), extent).is_err() && linearize(&past, extent).is_err()
}

fn index_algebra() -> Verdict {
    let mut extents = 0usize;
    let mut points = 0usize;
    let mut bad = 0usize;
    for a in 1..=INDEX_LIMIT {
        let e = IndexVec::d1(a);
        let mut ok = rejects_out_of_range(&e);
        for i in 0..a {
            ok &= index_agrees(&e, i, IndexVec::d1(i));
        }
        bad += !ok as usize;
        extents += 1;
        points += a;
    }
    for a in 1..=INDEX_LIMIT {
        for b in 1..=INDEX_LIMIT / a {
            let e = IndexVec::d2(a, b);
            let mut ok = rejects_out_of_range(&e);
            let mut lin = 0;
            for i in 0..a {
                for j in 0..b {
                    ok &= index_agrees(&e, lin, IndexVec::d2(i, j));
                    lin += 1;
                }
            }
            bad += !ok as usize;
            extents += 1;
            points += lin;
        }
    }
    for a in 1..=INDEX_LIMIT {
        for b in 1..=INDEX_LIMIT / a {
            for c in 1..=INDEX_LIMIT / (a * b) {
                let e = IndexVec::d3(a, b, c);
                let mut ok = rejects_out_of_range(&e);
                let mut lin = 0;
                for i in 0..a {
                    for j in 0..b {
                        for k in 0..c {
                            ok &= index_agrees(&e, lin, IndexVec::d3(i, j, k));
                            lin += 1;
                        }
                    }
                }
                bad += !ok as usize;
                extents += 1;
                points += lin;
            }
        }
    }
    verdict(
        bad == 0,
        format!(
            "{extents} extents (dims 1-3, product <= {INDEX_LIMIT}), {points} indices round-tripped; {bad} bad extents"
        ),
    )
}

// ---------------------------------------------------------------- 4

fn work_division_law() -> Verdict {
    let mut rng = rng(4);
    let mut failures = Vec::new();
    for _ in 0..1000 {
        let dim = rng.random_range(1..=3);
        let pick = |rng: &mut ChaCha8Rng, hi: usize| {
            IndexVec::new(&(0..dim).map(|_| rng.random_range(1..=hi)).collect::<Vec<_>>()).unwrap()
        };
        let n = pick(&mut rng, 100_000);
        let b = pick(&mut rng, 32);
        let v = pick(&mut rng, 64);
        for backend in BackendKind::ALL {
            let wd = divide_for_backend(n, backend, b, v).unwrap();
            let (blocks, threads, elems) = (wd.blocks_per_grid(), wd.threads_per_block(), wd.elems_per_thread());
            let shape_ok = if backend.is_thread_level() {
                threads == b
            } else {
                threads.as_slice().iter().all(|&t| t == 1)
            };
            let per_block: Vec<usize> = (0..dim).map(|k| threads[k] * elems[k]).collect();
            let covers = (0..dim).all(|k| blocks[k] * per_block[k] >= n[k]);
            let minimal = (0..dim).all(|k| (blocks[k] - 1) * per_block[k] < n[k]);
            if !(shape_ok && covers && minimal && elems == v) {
                failures.push(format!("{backend} N={n} B={b} V={v} -> {wd}"));
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "1000 random (N, B, V) x 3 back-ends: coverage, minimal blocks, thread shape; {} failures{}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------- 5

struct ReduceArgs {
    input: Global<i64>,
    partial: GlobalMut<i64>,
}

fn staged_reduce(acc: &Acc<'_>, args: &ReduceArgs) {
    let threads = acc.work_div().threads_per_block()[0];
    let blocks = acc.work_div().blocks_per_grid()[0];
    let t = acc.block_thread_idx()[0];
    let b = acc.grid_block_idx()[0];
    let len = args.input.cols();
    let seg = len.div_ceil(blocks);
    let (lo, hi) = ((b * seg).min(len), ((b + 1) * seg).min(len));

    let scratch = acc.alloc_shared::<i64>(threads);
    let mut local = 0i64;
    let mut i = lo + t;
    while i < hi {
        local += args.input.get(i);
        i += threads;
    }
    unsafe { scratch.write(t, local) };
    acc.sync_block_threads();
    let mut stride = threads / 2;
    while stride > 0 {
        if t < stride {
            unsafe { scratch.write(t, scratch.read(t) + scratch.read(t + stride)) };
        }
        acc.sync_block_threads();
        stride /= 2;
    }
    if t == 0 {
        unsafe { args.partial.set(b, scratch.read(0)) };
    }
}

fn shared_and_barrier() -> Verdict {
    let mut rng = rng(5);
    let mut wrong = 0;
    let mut runs = 0;
    for threads in [2usize, 4, 8, 16] {
        for _ in 0..1000 {
            let len = rng.random_range(1..=4096);
            let values: Vec<i64> = (0..len)
                .map(|_| rng.random_range(-1_000_000_000..=1_000_000_000))
                .collect();
            let blocks = rng.random_range(1..=4);
            let mut input = Buffer::from_slice(Device::Host, IndexVec::d1(len), &values).unwrap();
            let mut partial = Buffer::alloc_for::<i64>(Device::Host, IndexVec::d1(blocks)).unwrap();
            let args = ReduceArgs {
                input: input.view().unwrap(),
                partial: partial.view_mut().unwrap(),
            };
            let wd = WorkDiv::new(IndexVec::d1(blocks), IndexVec::d1(threads), IndexVec::d1(1)).unwrap();
            execute_task(BackendKind::ThreadsParallel, &wd, &staged_reduce, &args).unwrap();
            drop(args);
            let sum: i64 = partial.to_vec::<i64>().unwrap().iter().sum();
            wrong += (sum != values.iter().sum::<i64>()) as usize;
            runs += 1;
        }
    }

    // Each block stamps its region, yields, and checks nobody else wrote it.
    let corrupted = AtomicUsize::new(0);
    let stamp_kernel = |acc: &Acc<'_>, corrupted: &AtomicUsize| {
        let region = acc.alloc_shared::<u64>(128);
        let wd = acc.work_div();
        let block = linearize(&acc.grid_block_idx(), &wd.blocks_per_grid()).unwrap() as u64;
        let t = linearize(&acc.block_thread_idx(), &wd.threads_per_block()).unwrap();
        let threads = wd.threads_per_block().product();
        let mine = 0xC0DE_0000_0000 | (block << 8) | t as u64;
        for i in (t..128).step_by(threads) {
            unsafe {
                if region.read(i) != 0 {
                    corrupted.fetch_add(1, Ordering::Relaxed);
                }
                region.write(i, mine | (i as u64) << 40);
            }
        }
        std::thread::yield_now();
        for i in (t..128).step_by(threads) {
            if unsafe { region.read(i) } != mine | (i as u64) << 40 {
                corrupted.fetch_add(1, Ordering::Relaxed);
            }
        }
    };
    for backend in BackendKind::ALL {
        let threads = if backend.is_thread_level() { 4 } else { 1 };
        let wd = WorkDiv::new(IndexVec::d2(16, 16), IndexVec::d2(1, threads), IndexVec::d2(1, 1)).unwrap();
        for _ in 0..4 {
            execute_task(backend, &wd, &stamp_kernel, &corrupted).unwrap();
        }
    }
    let corrupted = corrupted.into_inner();
    verdict(
        wrong == 0 && corrupted == 0,
        format!(
            "{runs} block reductions over 2/4/8/16 threads, {wrong} wrong; shared canaries over 3 back-ends x 1024 blocks, {corrupted} corrupted"
        ),
    )
}

// ---------------------------------------------------------------- 6

fn one_invocation() -> WorkDiv {
    WorkDiv::new(IndexVec::d1(1), IndexVec::d1(1), IndexVec::d1(1)).unwrap()
}

/// Cell 0 is the state; a write folds a step into it, a read copies it to a
/// log slot.
fn write_step(step: u64) -> impl Fn(&Acc<'_>, &GlobalMut<u64>) + Send + Sync + 'static {
    move |_, cells| unsafe { cells.set(0, cells.get(0).wrapping_mul(1_000_003).wrapping_add(step)) }
}

fn read_into(slot: usize) -> impl Fn(&Acc<'_>, &GlobalMut<u64>) + Send + Sync + 'static {
    move |_, cells| unsafe { cells.set(slot, cells.get(0)) }
}

fn queue_ordering() -> Verdict {
    let mut rng = rng(6);
    let queues: Vec<Queue> = (0..4).map(|_| Queue::new(Device::Host, Flavor::Async)).collect();
    let mut chains = Vec::new();
    for c in 0..1000 {
        let pairs = rng.random_range(1..=6);
        let mut cells = Buffer::alloc_for::<u64>(Device::Host, IndexVec::d1(1 + pairs)).unwrap();
        let queue = &queues[c % queues.len()];
        let mut state = 0u64;
        let mut expected = vec![0u64; pairs];
        for (slot, want) in expected.iter_mut().enumerate() {
            let step = rng.random_range(1..1_000_000);
            state = state.wrapping_mul(1_000_003).wrapping_add(step);
            *want = state;
            let wb = *BackendKind::ALL.choose(&mut rng).unwrap();
            let rb = *BackendKind::ALL.choose(&mut rng).unwrap();
            queue
                .enqueue(create_exec(wb, one_invocation(), write_step(step), cells.view_mut::<u64>().unwrap()).unwrap())
                .unwrap();
            queue
                .enqueue(
                    create_exec(
                        rb,
                        one_invocation(),
                        read_into(slot + 1),
                        cells.view_mut::<u64>().unwrap(),
                    )
                    .unwrap(),
                )
                .unwrap();
        }
        chains.push((cells, expected));
    }
    for q in &queues {
        q.wait().unwrap();
    }
    let reordered = chains
        .iter()
        .filter(|(cells, expected)| cells.to_vec::<u64>().unwrap()[1..] != expected[..])
        .count();

    let sync = Queue::new(Device::Host, Flavor::Sync);
    let mut cell = Buffer::alloc_for::<u64>(Device::Host, IndexVec::d1(2)).unwrap();
    let mut sync_bad = 0;
    for k in 1..=200u64 {
        let backend = BackendKind::ALL[k as usize % 3];
        let h = sync
            .enqueue(
                create_exec(
                    backend,
                    one_invocation(),
                    write_step(k),
                    cell.view_mut::<u64>().unwrap(),
                )
                .unwrap(),
            )
            .unwrap();
        let visible = !cell.in_use() && cell.get::<u64>(&IndexVec::d1(0)).is_ok();
        sync_bad += (h.status() != TaskStatus::Done || !visible) as usize;
    }
    verdict(
        reordered == 0 && sync_bad == 0,
        format!("1000 write/read chains on 4 async queues, {reordered} reordered; 200 sync enqueues, {sync_bad} not complete on return"),
    )
}

// ---------------------------------------------------------------- 7

const CANARY: u8 = 0xA5;

fn pitched_copy() -> Verdict {
    let mut rng = rng(7);
    let pattern = |idx: IndexVec| (idx[0] * 1009 + idx[1] * 7 + 1) as u32;
    let mut failures = 0;
    let mut mismatched = 0;
    for case in 0..1000 {
        let src_ext = IndexVec::d2(rng.random_range(1..=64), rng.random_range(1..=64));
        let dst_ext = IndexVec::d2(rng.random_range(1..=64), rng.random_range(1..=64));
        let copy_ext = IndexVec::d2(
            rng.random_range(1..=src_ext[0].min(dst_ext[0])),
            rng.random_range(1..=src_ext[1].min(dst_ext[1])),
        );
        let align = |rng: &mut ChaCha8Rng| 1usize << rng.random_range(2..=8);
        let mut src = Buffer::alloc_aligned(Device::Host, src_ext, 4, align(&mut rng)).unwrap();
        let mut dst = Buffer::alloc_aligned(Device::Logical(1), dst_ext, 4, align(&mut rng)).unwrap();
        mismatched += (src.row_pitch() != dst.row_pitch()) as usize;
        src.fill_with::<u32>(pattern).unwrap();
        dst.as_bytes_mut().unwrap().fill(CANARY);

        let flavor = if case % 2 == 0 { Flavor::Async } else { Flavor::Sync };
        let queue = Queue::new(Device::Logical(1), flavor);
        copy(&queue, &mut dst, &src, copy_ext).unwrap();
        queue.wait().unwrap();

        let pitch = dst.row_pitch();
        let bytes = dst.as_bytes().unwrap();
        let mut ok = true;
        for r in 0..dst_ext[0] {
            for c in 0..pitch / 4 {
                let at = r * pitch + c * 4;
                let word = u32::from_ne_bytes(bytes[at..at + 4].try_into().unwrap());
                ok &= if r < copy_ext[0] && c < copy_ext[1] {
                    word == pattern(IndexVec::d2(r, c))
                } else {
                    word == u32::from_ne_bytes([CANARY; 4])
                };
            }
        }
        failures += !ok as usize;
    }
    verdict(
        failures == 0,
        format!("1000 random copies within (64,64), {mismatched} with differing pitches; {failures} with a wrong value or touched canary"),
    )
}

// ---------------------------------------------------------------- 8

const OVERHEAD_BOUND: f64 = 1.5;

fn serial_vs_native(kernel: KernelKind, sizes: Vec<usize>) -> Vec<(usize, f64)> {
    let mut cfg = BenchConfig::new(kernel);
    cfg.backends = vec![BackendLabel::Native, BackendLabel::Serial];
    cfg.sizes = sizes;
    cfg.reps = 9;
    cfg.verify = true;
    let records = run_bench(&cfg).unwrap();
    assert!(records.iter().all(|r| r.verified), "{kernel} failed verification");
    relative_report(&records, BackendLabel::Native)
        .unwrap()
        .into_iter()
        .filter(|r| r.backend == BackendLabel::Serial)
        .map(|r| (r.n, r.ratio))
        .collect()
}

fn zero_overhead() -> Verdict {
    let mut ratios = serial_vs_native(KernelKind::Axpy, vec![1 << 20]);
    let axpy = ratios.len();
    ratios.extend(serial_vs_native(KernelKind::GemmNaive, vec![256, 512]));
    let shown: Vec<String> = ratios
        .iter()
        .enumerate()
        .map(|(i, (n, r))| format!("{} {n}: {r:.3}", if i < axpy { "axpy" } else { "gemm-naive" }))
        .collect();
    verdict(
        ratios.iter().all(|(_, r)| *r <= OVERHEAD_BOUND),
        format!(
            "serial / native median time (bound {OVERHEAD_BOUND}): {}",
            shown.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- 9

fn hardware_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn median_seconds(records: &[BenchRecord], backend: BackendLabel) -> f64 {
    median_times(records)
        .into_iter()
        .find(|((_, b, _), _)| *b == backend)
        .map(|(_, t)| t)
        .unwrap()
}

fn parallel_speedup() -> Verdict {
    let hw = hardware_threads();
    if hw < 4 {
        return Verdict {
            pass: None,
            detail: format!("needs at least 4 hardware threads, this machine has {hw}"),
        };
    }
    let mut cfg = BenchConfig::new(KernelKind::GemmTiled);
    cfg.backends = vec![BackendLabel::Serial, BackendLabel::Blocks];
    cfg.sizes = vec![512];
    cfg.reps = 5;
    cfg.verify = true;
    let records = run_bench(&cfg).unwrap();
    let speedup = median_seconds(&records, BackendLabel::Serial) / median_seconds(&records, BackendLabel::Blocks);
    verdict(
        speedup >= 2.0 && records.iter().all(|r| r.verified),
        format!("gemm-tiled n=512 blocks speedup over serial {speedup:.2}x on {hw} hardware threads (bound 2x)"),
    )
}

// ---------------------------------------------------------------- 10

fn pessimization() -> Verdict {
    let mut cfg = BenchConfig::new(KernelKind::GemmTiled);
    cfg.backends = vec![BackendLabel::Serial];
    cfg.sizes = vec![512];
    cfg.reps = 3;
    cfg.verify = true;
    cfg.tile = 16;
    let tuned = run_bench(&cfg).unwrap();
    cfg.pessimize = true;
    let poor = run_bench(&cfg).unwrap();
    let verified = tuned.iter().chain(&poor).all(|r| r.verified);
    let slowdown = median_seconds(&poor, BackendLabel::Serial) / median_seconds(&tuned, BackendLabel::Serial);
    verdict(
        slowdown >= 2.0 && verified && poor.iter().all(|r| r.tile == 1),
        format!("gemm-tiled n=512 serial, tile 1 is {slowdown:.1}x slower than tile 16 (bound 2x)"),
    )
}

// ---------------------------------------------------------------- 11

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_kernelweave"))
        .args(args)
        .output()
        .expect("failed to start kernelweave");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

fn csv_contract() -> Verdict {
    let mut problems = Vec::new();

    let mut cfg = BenchConfig::new(KernelKind::Axpy);
    cfg.backends = vec![
        BackendLabel::Native,
        BackendLabel::Serial,
        BackendLabel::Blocks,
        BackendLabel::Threads,
    ];
    cfg.sizes = vec![1000, 4096];
    cfg.reps = 3;
    cfg.verify = true;
    let records = run_bench(&cfg).unwrap();
    let text = records_to_string(&records).unwrap();
    let parsed = read_records(text.as_bytes()).unwrap();
    if parsed != records || records_to_string(&parsed).unwrap() != text {
        problems.push("library round trip".to_string());
    }

    let dir = std::env::temp_dir().join(format!("kernelweave-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("out.csv");
    let path_s = path.to_str().unwrap();
    let (code, _) = cli(&[
        "--kernel",
        "gemm-tiled",
        "--sizes",
        "17,32",
        "--reps",
        "3",
        "--verify",
        "--baseline",
        "native",
        "--csv",
        path_s,
    ]);
    if code != EXIT_OK {
        problems.push(format!("clean run exited {code}"));
    }
    let bytes = std::fs::read_to_string(&path).unwrap_or_default();
    match read_records(bytes.as_bytes()) {
        Ok(recs) if recs.len() == 24 && records_to_string(&recs).unwrap() == bytes => {}
        _ => problems.push("binary output does not round-trip".into()),
    }
    if !dir.join("out.report.csv").exists() {
        problems.push("no report csv".into());
    }
    let (code, stdout) = cli(&[
        "--kernel",
        "axpy",
        "--backend",
        "serial",
        "--sizes",
        "64",
        "--reps",
        "3",
    ]);
    if code != EXIT_OK || read_records(stdout.as_bytes()).map(|r| r.len()).ok() != Some(3) {
        problems.push("stdout csv".into());
    }
    let _ = std::fs::remove_dir_all(&dir);

    let usage_cases: [&[&str]; 6] = [
        &["--kernel", "fft"],
        &["--kernel", "axpy", "--backend", "gpu"],
        &["--kernel", "axpy", "--reps", "2"],
        &["--kernel", "gemm-tiled", "--tile", "16", "--tpb", "9"],
        &["--kernel", "axpy", "--sizes", "ten"],
        &[],
    ];
    for args in usage_cases {
        let (code, _) = cli(args);
        if code != EXIT_USAGE {
            problems.push(format!("{args:?} exited {code}, want {EXIT_USAGE}"));
        }
    }

    let mut failed = records.clone();
    failed[4].verified = false;
    if outcome_code(true, &failed) != EXIT_FAILURE || outcome_code(true, &records) != EXIT_OK {
        problems.push("verification exit status".into());
    }
    if relative_report(&records, BackendLabel::Native).is_err()
        || relative_report(&records[3..], BackendLabel::Native)
            .map_err(|e| kernelweave_cli::exit_code(&e))
            .err()
            != Some(EXIT_USAGE)
    {
        problems.push("missing baseline is not a usage error".into());
    }

    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "{} records round-trip byte-exactly; exit codes 0/1/2 as documented",
                records.len()
            )
        } else {
            problems.join("; ")
        },
    )
}

// ----------------------------------------------------------------

/// (id, name, time budget in seconds, check)
type Criterion = (u32, &'static str, u64, fn() -> Verdict);

fn main() {
    // With fewer than four hardware threads the block pool would run one
    // block at a time; force a few workers so blocks really interleave.
    if hardware_threads() < 4 && std::env::var_os(POOL_SIZE_ENV).is_none() {
        std::env::set_var(POOL_SIZE_ENV, "4");
    }

    let criteria: [Criterion; 11] = [
        (1, "cross-backend determinism", 120, cross_backend_determinism),
        (2, "invocation coverage", 30, invocation_coverage),
        (3, "index algebra", 10, index_algebra),
        (4, "work-division law", 5, work_division_law),
        (5, "shared memory and barrier", 30, shared_and_barrier),
        (6, "queue ordering", 60, queue_ordering),
        (7, "pitched copy", 30, pitched_copy),
        (8, "zero-overhead analogue", 180, zero_overhead),
        (9, "parallel speedup", 180, parallel_speedup),
        (10, "pessimization analogue", 120, pessimization),
        (11, "csv contract", 5, csv_contract),
    ];

    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let v = check();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(budget);
        let status = match v.pass {
            None => "SKIP",
            Some(true) if in_time => "PASS",
            Some(_) => {
                failed += 1;
                "FAIL"
            }
        };
        let late = if in_time { "" } else { " OVER BUDGET" };
        println!(
            "{status} {id:>2} {name}: {} [{:.1}s of {budget}s{late}]",
            v.detail,
            took.as_secs_f64()
        );
    }
    println!("acceptance: {failed} failed, {} hardware threads", hardware_threads());
    if failed > 0 {
        std::process::exit(1);
    }
}
