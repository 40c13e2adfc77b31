use std::sync::{Condvar, Mutex};

/// Returned by [`BlockBarrier::wait`] once another thread of the block failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Poisoned;

#[derive(Debug)]
struct State {
    arrived: usize,
    generation: u64,
    poisoned: bool,
}

/// A reusable barrier for the threads of one block that can be poisoned, so a
/// failing thread releases its siblings instead of leaving them blocked.
#[derive(Debug)]
pub(crate) struct BlockBarrier {
    parties: usize,
    state: Mutex<State>,
    cv: Condvar,
}

impl BlockBarrier {
    pub(crate) fn new(parties: usize) -> Self {
        BlockBarrier {
            parties,
            state: Mutex::new(State {
                arrived: 0,
                generation: 0,
                poisoned: false,
            }),
            cv: Condvar::new(),
        }
    }

    pub(crate) fn wait(&self) -> Result<(), Poisoned> {
        self.wait_with(|| ())
    }

    /// Like [`wait`](Self::wait), but the last thread to arrive runs
    /// `on_release` before any thread is let through.
    pub(crate) fn wait_with(&self, on_release: impl FnOnce()) -> Result<(), Poisoned> {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        if st.poisoned {
            return Err(Poisoned);
        }
        st.arrived += 1;
        if st.arrived == self.parties {
            on_release();
            st.arrived = 0;
            st.generation = st.generation.wrapping_add(1);
            self.cv.notify_all();
            return Ok(());
        }
        let generation = st.generation;
        while st.generation == generation && !st.poisoned {
            st = self.cv.wait(st).unwrap_or_else(|e| e.into_inner());
        }
        if st.generation == generation {
            Err(Poisoned)
        } else {
            Ok(())
        }
    }

    pub(crate) fn poison(&self) {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        st.poisoned = true;
        self.cv.notify_all();
    }
}
