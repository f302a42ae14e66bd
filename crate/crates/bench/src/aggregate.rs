use std::collections::{BTreeMap, BTreeSet};

use crate::config::{Method, Precision};
use crate::error::BenchError;
use crate::experiment::{Status, TrialRecord};

/// Mean errors of one cell at one time step over trials that completed.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanRow {
    pub method: Method,
    pub precision: Precision,
    pub time: usize,
    pub trials_ok: usize,
    pub failures: usize,
    pub pos_err: Option<f64>,
    pub vel_err: Option<f64>,
    pub omega_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailures {
    pub method: Method,
    pub precision: Precision,
    pub trials: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregates {
    pub rows: Vec<MeanRow>,
    pub cells: Vec<CellFailures>,
}

impl Aggregates {
    pub fn row(&self, method: Method, precision: Precision, time: usize) -> Option<&MeanRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.precision == precision && r.time == time)
    }

    pub fn cell(&self, method: Method, precision: Precision) -> Option<&CellFailures> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.precision == precision)
    }

    /// Mean rows of one cell, ordered by time.
    pub fn series(&self, method: Method, precision: Precision) -> Vec<&MeanRow> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.precision == precision)
            .collect()
    }
}

#[derive(Default)]
struct Acc {
    n: usize,
    sums: [f64; 3],
}

/// Per-(method, precision, time) arithmetic means over ok records, plus
/// failure counts per cell. Time steps are those with at least one ok
/// record in any cell; a cell without ok records there gets absent means.
pub fn aggregate(records: &[TrialRecord]) -> Result<Aggregates, BenchError> {
    if records.is_empty() {
        return Err(BenchError::EmptyInput);
    }
    let mut trials: BTreeMap<(Method, Precision), BTreeSet<usize>> = BTreeMap::new();
    let mut failed: BTreeMap<(Method, Precision), BTreeSet<usize>> = BTreeMap::new();
    let mut acc: BTreeMap<(Method, Precision, usize), Acc> = BTreeMap::new();
    let mut times = BTreeSet::new();

    for r in records {
        let cell = (r.method, r.precision);
        trials.entry(cell).or_default().insert(r.trial);
        if r.status != Status::Ok {
            failed.entry(cell).or_default().insert(r.trial);
            continue;
        }
        let (Some(p), Some(v), Some(w)) = (r.pos_err, r.vel_err, r.omega_err) else {
            continue;
        };
        times.insert(r.time);
        let a = acc.entry((r.method, r.precision, r.time)).or_default();
        a.n += 1;
        a.sums[0] += p;
        a.sums[1] += v;
        a.sums[2] += w;
    }

    let cells: Vec<CellFailures> = trials
        .iter()
        .map(|(&(method, precision), t)| CellFailures {
            method,
            precision,
            trials: t.len(),
            failures: failed.get(&(method, precision)).map_or(0, BTreeSet::len),
        })
        .collect();

    let mut rows = Vec::new();
    for c in &cells {
        for &time in &times {
            let a = acc.get(&(c.method, c.precision, time));
            let mean = |k: usize| a.filter(|a| a.n > 0).map(|a| a.sums[k] / a.n as f64);
            rows.push(MeanRow {
                method: c.method,
                precision: c.precision,
                time,
                trials_ok: a.map_or(0, |a| a.n),
                failures: c.failures,
                pos_err: mean(0),
                vel_err: mean(1),
                omega_err: mean(2),
            });
        }
    }
    Ok(Aggregates { rows, cells })
}
