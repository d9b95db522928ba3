//! In-flight window accounting: a counting gate that blocks ingestion when
//! the configured number of windows is already being processed, and records
//! the high-water mark for the backpressure bound check.

use std::sync::{Condvar, Mutex};

#[derive(Debug, Default)]
struct GateState {
    current: usize,
    peak: usize,
    poisoned: bool,
}

/// Bounded admission gate. Ingestion acquires a slot before assembling the
/// next window; the joiner releases it once the prediction (or gap) is
/// emitted, so at most `limit` windows are resident at any time.
#[derive(Debug)]
pub struct InflightGate {
    limit: usize,
    state: Mutex<GateState>,
    cv: Condvar,
}

impl InflightGate {
    pub fn new(limit: usize) -> Self {
        Self {
            limit: limit.max(1),
            state: Mutex::new(GateState::default()),
            cv: Condvar::new(),
        }
    }

    /// Blocks until a slot frees. Returns false when the gate was poisoned
    /// (the run is aborting) and the caller should stop producing.
    pub fn acquire(&self) -> bool {
        let mut state = self.state.lock().expect("gate lock");
        loop {
            if state.poisoned {
                return false;
            }
            if state.current < self.limit {
                state.current += 1;
                state.peak = state.peak.max(state.current);
                return true;
            }
            state = self.cv.wait(state).expect("gate lock");
        }
    }

    pub fn release(&self) {
        let mut state = self.state.lock().expect("gate lock");
        state.current = state.current.saturating_sub(1);
        self.cv.notify_all();
    }

    /// Wake all waiters and make further acquires fail.
    pub fn poison(&self) {
        let mut state = self.state.lock().expect("gate lock");
        state.poisoned = true;
        self.cv.notify_all();
    }

    pub fn peak(&self) -> usize {
        self.state.lock().expect("gate lock").peak
    }

    pub fn current(&self) -> usize {
        self.state.lock().expect("gate lock").current
    }
}
