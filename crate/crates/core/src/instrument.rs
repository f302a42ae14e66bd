//! Per-thread call counters for the numeric kernels.
//!
//! Counters are thread-local so concurrent callers (parallel tests, Monte
//! Carlo trials) never observe each other's counts.

use std::cell::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    /// Any call to [`crate::linalg::triangularize`].
    Triangularize,
    /// Any right triangular solve.
    TriangularSolve,
    /// The triangularization inside [`crate::linalg::block_condition`].
    ConditioningQr,
    /// The gain solve against the marginal factor inside `block_condition`.
    GainSolve,
    /// Rank-one Cholesky downdates.
    Downdate,
}

const KERNELS: [Kernel; 5] = [
    Kernel::Triangularize,
    Kernel::TriangularSolve,
    Kernel::ConditioningQr,
    Kernel::GainSolve,
    Kernel::Downdate,
];

thread_local! {
    static COUNTS: [Cell<u64>; 5] = const { [const { Cell::new(0) }; 5] };
}

fn slot(kernel: Kernel) -> usize {
    KERNELS.iter().position(|&k| k == kernel).unwrap()
}

pub(crate) fn bump(kernel: Kernel) {
    COUNTS.with(|c| {
        let cell = &c[slot(kernel)];
        cell.set(cell.get() + 1);
    });
}

/// Snapshot of the calling thread's counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts([u64; 5]);

impl Counts {
    pub fn get(&self, kernel: Kernel) -> u64 {
        self.0[slot(kernel)]
    }

    /// Counts accumulated since `earlier`.
    pub fn since(&self, earlier: &Counts) -> Counts {
        let mut out = [0; 5];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.0[i] - earlier.0[i];
        }
        Counts(out)
    }
}

pub fn snapshot() -> Counts {
    COUNTS.with(|c| {
        let mut out = [0; 5];
        for (o, cell) in out.iter_mut().zip(c.iter()) {
            *o = cell.get();
        }
        Counts(out)
    })
}

pub fn reset() {
    COUNTS.with(|c| c.iter().for_each(|cell| cell.set(0)));
}
