//! In-order work queues and the executor task.
//!
//! Nothing in a queue starts before everything enqueued earlier on the same
//! queue has finished. A [`Flavor::Sync`] queue runs each task on the
//! enqueuing thread before `enqueue` returns; a [`Flavor::Async`] queue hands
//! tasks to its own worker thread and returns at once.
//!
//! A failed task does not stop the queue: later tasks still run, and the
//! failure is reported by its [`TaskHandle`] and by the next
//! [`Queue::wait`].

use std::collections::VecDeque;
use std::fmt;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};

use crate::accel::{self, BackendKind, Kernel};
use crate::error::{Error, Result};
use crate::mem::Device;
use crate::workdiv::WorkDiv;

/// A unit of work that can be enqueued.
pub trait Task: Send + 'static {
    /// Whether the task may run on a queue of `device`.
    fn compatible_with(&self, device: Device) -> bool;

    fn describe(&self) -> String;

    fn run(self: Box<Self>) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Sync,
    Async,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskStatus {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug)]
struct HandleState {
    status: TaskStatus,
    error: Option<Error>,
}

/// Observes the progress of one enqueued task. Polling never blocks.
#[derive(Debug, Clone)]
pub struct TaskHandle {
    inner: Arc<(Mutex<HandleState>, Condvar)>,
}

impl TaskHandle {
    fn new() -> Self {
        TaskHandle {
            inner: Arc::new((
                Mutex::new(HandleState {
                    status: TaskStatus::Pending,
                    error: None,
                }),
                Condvar::new(),
            )),
        }
    }

    fn state(&self) -> MutexGuard<'_, HandleState> {
        self.inner.0.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn status(&self) -> TaskStatus {
        self.state().status
    }

    pub fn error(&self) -> Option<Error> {
        self.state().error.clone()
    }

    /// Blocks until the task has finished and returns its outcome.
    pub fn wait(&self) -> Result<()> {
        let mut st = self.state();
        while matches!(st.status, TaskStatus::Pending | TaskStatus::Running) {
            st = self.inner.1.wait(st).unwrap_or_else(|e| e.into_inner());
        }
        match &st.error {
            Some(e) => Err(e.clone()),
            None => Ok(()),
        }
    }

    fn set_running(&self) {
        self.state().status = TaskStatus::Running;
    }

    fn finish(&self, outcome: &Result<()>) {
        let mut st = self.state();
        match outcome {
            Ok(()) => st.status = TaskStatus::Done,
            Err(e) => {
                st.status = TaskStatus::Failed;
                st.error = Some(e.clone());
            }
        }
        self.inner.1.notify_all();
    }
}

struct State {
    pending: VecDeque<(Box<dyn Task>, TaskHandle)>,
    enqueued: u64,
    completed: u64,
    failures: Vec<Error>,
    shut_down: bool,
}

struct Shared {
    state: Mutex<State>,
    work: Condvar,
    done: Condvar,
    // Serializes execution on sync queues shared between host threads.
    sync_exec: Mutex<()>,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// An in-order queue of tasks for one device. Safe to share between host
/// threads; concurrent enqueues are ordered by arrival.
pub struct Queue {
    device: Device,
    flavor: Flavor,
    shared: Arc<Shared>,
    worker: Mutex<Option<JoinHandle<()>>>,
}

impl fmt::Debug for Queue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Queue")
            .field("device", &self.device)
            .field("flavor", &self.flavor)
            .finish()
    }
}

fn run_task(task: Box<dyn Task>, handle: &TaskHandle) -> Result<()> {
    handle.set_running();
    // `run` consumes the task, so its buffer views are released before the
    // handle reports completion.
    let outcome = task.run();
    handle.finish(&outcome);
    outcome
}

impl Queue {
    pub fn new(device: Device, flavor: Flavor) -> Self {
        let shared = Arc::new(Shared {
            state: Mutex::new(State {
                pending: VecDeque::new(),
                enqueued: 0,
                completed: 0,
                failures: Vec::new(),
                shut_down: false,
            }),
            work: Condvar::new(),
            done: Condvar::new(),
            sync_exec: Mutex::new(()),
        });
        let worker = match flavor {
            Flavor::Sync => None,
            Flavor::Async => {
                let shared = shared.clone();
                Some(
                    thread::Builder::new()
                        .name(format!("kernelweave-queue-{device}"))
                        .spawn(move || worker_loop(&shared))
                        .expect("failed to spawn queue worker"),
                )
            }
        };
        Queue {
            device,
            flavor,
            shared,
            worker: Mutex::new(worker),
        }
    }

    #[inline]
    pub fn device(&self) -> Device {
        self.device
    }

    #[inline]
    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    /// Appends `task` to the queue. On a sync queue the task has finished
    /// when this returns; a task failure is reported through the handle and
    /// the next [`wait`](Self::wait), not here.
    pub fn enqueue<T: Task>(&self, task: T) -> Result<TaskHandle> {
        self.enqueue_boxed(Box::new(task))
    }

    pub fn enqueue_boxed(&self, task: Box<dyn Task>) -> Result<TaskHandle> {
        if !task.compatible_with(self.device) {
            return Err(Error::DeviceMismatch {
                task: task.describe(),
                queue: self.device.to_string(),
            });
        }
        let handle = TaskHandle::new();
        match self.flavor {
            Flavor::Async => {
                let mut st = self.shared.lock();
                if st.shut_down {
                    return Err(Error::QueueShutDown);
                }
                st.enqueued += 1;
                st.pending.push_back((task, handle.clone()));
                self.shared.work.notify_one();
            }
            Flavor::Sync => {
                let _exec = self.shared.sync_exec.lock().unwrap_or_else(|e| e.into_inner());
                {
                    let mut st = self.shared.lock();
                    if st.shut_down {
                        return Err(Error::QueueShutDown);
                    }
                    st.enqueued += 1;
                }
                let outcome = run_task(task, &handle);
                let mut st = self.shared.lock();
                st.completed += 1;
                if let Err(e) = outcome {
                    st.failures.push(e);
                }
                self.shared.done.notify_all();
            }
        }
        Ok(handle)
    }

    /// Blocks until every task enqueued before the call has finished.
    ///
    /// Returns the first failure among tasks that finished since the previous
    /// `wait`; each failure is reported once.
    pub fn wait(&self) -> Result<()> {
        let mut st = self.shared.lock();
        let target = st.enqueued;
        while st.completed < target {
            st = self.shared.done.wait(st).unwrap_or_else(|e| e.into_inner());
        }
        let failures = std::mem::take(&mut st.failures);
        match failures.into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// True when every enqueued task has finished. Never blocks on a task.
    pub fn is_idle(&self) -> bool {
        let st = self.shared.lock();
        st.completed == st.enqueued
    }

    /// Rejects further enqueues. Tasks already queued still run; the async
    /// worker exits once the queue is drained.
    pub fn shutdown(&self) {
        let mut st = self.shared.lock();
        st.shut_down = true;
        self.shared.work.notify_all();
    }
}

impl Drop for Queue {
    fn drop(&mut self) {
        self.shutdown();
        if let Some(worker) = self.worker.lock().unwrap_or_else(|e| e.into_inner()).take() {
            let _ = worker.join();
        }
    }
}

fn worker_loop(shared: &Shared) {
    loop {
        let (task, handle) = {
            let mut st = shared.lock();
            loop {
                if let Some(next) = st.pending.pop_front() {
                    break next;
                }
                if st.shut_down {
                    return;
                }
                st = shared.work.wait(st).unwrap_or_else(|e| e.into_inner());
            }
        };
        let outcome = run_task(task, &handle);
        let mut st = shared.lock();
        st.completed += 1;
        if let Err(e) = outcome {
            st.failures.push(e);
        }
        shared.done.notify_all();
    }
}

/// Binds a back-end, a work division, a kernel and its arguments into a
/// task. Nothing runs until the task is enqueued.
pub struct ExecTask<K, A> {
    backend: BackendKind,
    work_div: WorkDiv,
    kernel: K,
    args: A,
}

/// Creates an executor task; see [`ExecTask`].
pub fn create_exec<K, A>(backend: BackendKind, work_div: WorkDiv, kernel: K, args: A) -> Result<ExecTask<K, A>>
where
    K: Kernel<A> + Send + 'static,
    A: Send + Sync + 'static,
{
    accel::validate(backend, &work_div)?;
    Ok(ExecTask {
        backend,
        work_div,
        kernel,
        args,
    })
}

impl<K, A> ExecTask<K, A>
where
    K: Kernel<A> + Send + 'static,
    A: Send + Sync + 'static,
{
    pub fn backend(&self) -> BackendKind {
        self.backend
    }

    pub fn work_div(&self) -> &WorkDiv {
        &self.work_div
    }

    pub fn args(&self) -> &A {
        &self.args
    }

    /// Runs the task on the calling thread, bypassing any queue.
    pub fn run_now(&self) -> Result<()> {
        accel::execute_task(self.backend, &self.work_div, &self.kernel, &self.args)
    }
}

impl<K, A> Task for ExecTask<K, A>
where
    K: Kernel<A> + Send + 'static,
    A: Send + Sync + 'static,
{
    fn compatible_with(&self, _device: Device) -> bool {
        // Every CPU back-end can serve every device tag.
        true
    }

    fn describe(&self) -> String {
        format!("{} kernel over {}", self.backend, self.work_div)
    }

    fn run(self: Box<Self>) -> Result<()> {
        self.run_now()
    }
}
