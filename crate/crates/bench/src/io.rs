//! CSV output of trial records and per-step means.

use std::fs::File;
use std::path::{Path, PathBuf};

use crate::aggregate::{Aggregates, MeanRow};
use crate::error::BenchError;
use crate::experiment::{Status, TrialRecord};

pub const RECORD_HEADER: [&str; 9] = [
    "trial",
    "time",
    "method",
    "precision",
    "pos_err",
    "vel_err",
    "omega_err",
    "status",
    "failure_step",
];

pub const MEAN_HEADER: [&str; 8] = [
    "method",
    "precision",
    "time",
    "trials_ok",
    "failures",
    "pos_err",
    "vel_err",
    "omega_err",
];

/// Positional decimal with 17 significant digits; parses back to the same
/// `f64`.
pub fn format_f64(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (16 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

/// `results.csv` -> `results_mean.csv`.
pub fn mean_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_mean.{}", ext.to_string_lossy()),
        None => format!("{stem}_mean"),
    };
    path.with_file_name(name)
}

fn writer(path: &Path) -> Result<csv::Writer<File>, BenchError> {
    let file = File::create(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> BenchError + '_ {
    move |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_records(path: &Path, records: &[TrialRecord]) -> Result<(), BenchError> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(RECORD_HEADER).map_err(&err)?;
    for r in records {
        w.write_record([
            r.trial.to_string(),
            r.time.to_string(),
            r.method.tag().to_string(),
            r.precision.tag().to_string(),
            opt_f64(r.pos_err),
            opt_f64(r.vel_err),
            opt_f64(r.omega_err),
            r.status.tag().to_string(),
            r.failure_step.map(|s| s.to_string()).unwrap_or_default(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_aggregates(path: &Path, aggregates: &Aggregates) -> Result<(), BenchError> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(MEAN_HEADER).map_err(&err)?;
    for MeanRow {
        method,
        precision,
        time,
        trials_ok,
        failures,
        pos_err,
        vel_err,
        omega_err,
    } in &aggregates.rows
    {
        w.write_record([
            method.tag().to_string(),
            precision.tag().to_string(),
            time.to_string(),
            trials_ok.to_string(),
            failures.to_string(),
            opt_f64(*pos_err),
            opt_f64(*vel_err),
            opt_f64(*omega_err),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Records to `path`, means (if any) to the `_mean` sibling.
pub fn emit_csv(records: &[TrialRecord], aggregates: Option<&Aggregates>, path: &Path) -> Result<(), BenchError> {
    write_records(path, records)?;
    if let Some(a) = aggregates {
        write_aggregates(&mean_path(path), a)?;
    }
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>, BenchError> {
    let file = File::open(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(file);
    let err = csv_err(path);
    let headers = reader.headers().map_err(&err)?.clone();
    if headers.iter().ne(RECORD_HEADER) {
        return Err(BenchError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("unexpected header `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(&err)?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |message: String| BenchError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let int = |i: usize| {
            row[i]
                .parse::<usize>()
                .map_err(|e| bad(format!("{}: {e}", RECORD_HEADER[i])))
        };
        let float = |i: usize| -> Result<Option<f64>, BenchError> {
            if row[i].is_empty() {
                return Ok(None);
            }
            row[i]
                .parse::<f64>()
                .map(Some)
                .map_err(|e| bad(format!("{}: {e}", RECORD_HEADER[i])))
        };
        out.push(TrialRecord {
            trial: int(0)?,
            time: int(1)?,
            method: row[2].parse().map_err(|e| bad(format!("{e}")))?,
            precision: row[3].parse().map_err(|e| bad(format!("{e}")))?,
            pos_err: float(4)?,
            vel_err: float(5)?,
            omega_err: float(6)?,
            status: Status::parse(&row[7]).ok_or_else(|| bad(format!("unknown status `{}`", &row[7])))?,
            failure_step: if row[8].is_empty() { None } else { Some(int(8)?) },
        });
    }
    Ok(out)
}
