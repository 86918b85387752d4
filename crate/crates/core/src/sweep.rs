//! Parallel `(lambda, g)` grid scans with deterministic output, CSV
//! serialization and resumable binary checkpoints.
//!
//! Checkpoint layout (little endian): the magic `DTC1`, one length-prefixed
//! UTF-8 header describing the grid, then length-prefixed entries of
//! `(u64 grid index, 7 x f64 record fields)`.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::diagnostics::{relative_order_parameter, stroboscopic_average};
use crate::error::{DtcError, Result};
use crate::floquet::DriveParams;
use crate::hilbert::SystemShape;
use crate::observables::trajectory;

pub const CSV_HEADER: &str = "lambda,g,avg_m_sat,avg_m_c,avg_entropy,o_rel_sat,o_rel_c";
pub const CSV_COMMENT: &str = "# avg_entropy: mean entanglement entropy over periods 1..=periods; \
avg_m_sat, avg_m_c: stroboscopic means at the grid stride; o_rel_*: mean (-1)^n M(nT) minus mean M(nT) over periods 1..=periods";
pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DTC1";
/// Environment variable capping the worker count.
pub const WORKERS_ENV: &str = "DTC_WORKERS";

const ENTRY_LEN: usize = 8 + 7 * 8;

/// Evenly spaced samples `lo..=hi`; a single step yields `lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl AxisRange {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Self {
        Self { lo, hi, steps }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.steps <= 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }
}

/// A rectangular scan of the drive plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lambda_range: AxisRange,
    pub g_range: AxisRange,
    pub shape: SystemShape,
    pub periods: usize,
    pub stride: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_range.steps == 0 || self.g_range.steps == 0 {
            return Err(DtcError::Validation(
                "grid ranges need at least one step".into(),
            ));
        }
        let bounds = [
            self.lambda_range.lo,
            self.lambda_range.hi,
            self.g_range.lo,
            self.g_range.hi,
        ];
        if bounds.iter().any(|v| !v.is_finite()) {
            return Err(DtcError::Validation("grid bounds must be finite".into()));
        }
        if self.stride == 0 || self.periods < self.stride {
            return Err(DtcError::Validation(format!(
                "need 1 <= stride <= periods (stride {}, periods {})",
                self.stride, self.periods
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.lambda_range.steps * self.g_range.steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major: lambda is the outer index, g the inner one.
    pub fn point(&self, index: usize) -> (f64, f64) {
        let steps = self.g_range.steps;
        (
            self.lambda_range.value(index / steps),
            self.g_range.value(index % steps),
        )
    }

    fn fingerprint(&self) -> String {
        let r = |a: &AxisRange| {
            format!(
                "{:016x}:{:016x}:{}",
                a.lo.to_bits(),
                a.hi.to_bits(),
                a.steps
            )
        };
        format!(
            "n_sat={};two_s={};periods={};stride={};lambda={};g={}",
            self.shape.n_sat(),
            self.shape.two_s(),
            self.periods,
            self.stride,
            r(&self.lambda_range),
            r(&self.g_range)
        )
    }
}

/// Time-averaged observables at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMapRecord {
    pub lambda: f64,
    pub g: f64,
    pub avg_m_sat: f64,
    pub avg_m_c: f64,
    pub avg_entropy: f64,
    pub o_rel_sat: f64,
    pub o_rel_c: f64,
}

impl PhaseMapRecord {
    fn fields(&self) -> [f64; 7] {
        [
            self.lambda,
            self.g,
            self.avg_m_sat,
            self.avg_m_c,
            self.avg_entropy,
            self.o_rel_sat,
            self.o_rel_c,
        ]
    }

    fn from_fields(f: [f64; 7]) -> Self {
        Self {
            lambda: f[0],
            g: f[1],
            avg_m_sat: f[2],
            avg_m_c: f[3],
            avg_entropy: f[4],
            o_rel_sat: f[5],
            o_rel_c: f[6],
        }
    }

    /// Placeholder row for a point that could not be computed.
    pub fn failed(lambda: f64, g: f64) -> Self {
        let nan = f64::NAN;
        Self {
            lambda,
            g,
            avg_m_sat: nan,
            avg_m_c: nan,
            avg_entropy: nan,
            o_rel_sat: nan,
            o_rel_c: nan,
        }
    }

    /// Bitwise equality, treating identical NaN payloads as equal.
    pub fn bits_eq(&self, other: &Self) -> bool {
        self.fields()
            .iter()
            .zip(other.fields())
            .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Evaluates one grid point from the x-polarized initial state.
pub fn compute_point(spec: &GridSpec, index: usize) -> Result<PhaseMapRecord> {
    let (lambda, g) = spec.point(index);
    let traj = trajectory(spec.shape, DriveParams::new(lambda, g), spec.periods)?;
    let m_sat: Vec<f64> = traj.iter().map(|r| r.m_sat_x).collect();
    let m_c: Vec<f64> = traj.iter().map(|r| r.m_c_x).collect();
    let count = spec.periods / spec.stride;
    let avg_entropy = traj[1..].iter().map(|r| r.entropy).sum::<f64>() / spec.periods as f64;
    Ok(PhaseMapRecord {
        lambda,
        g,
        avg_m_sat: stroboscopic_average(&m_sat, spec.stride, count)?,
        avg_m_c: stroboscopic_average(&m_c, spec.stride, count)?,
        avg_entropy,
        o_rel_sat: relative_order_parameter(&m_sat, spec.periods)?.o_rel,
        o_rel_c: relative_order_parameter(&m_c, spec.periods)?.o_rel,
    })
}

/// Outcome for a single grid point.
#[derive(Debug, Clone, PartialEq)]
pub enum PointOutcome {
    Done(PhaseMapRecord),
    Failed {
        lambda: f64,
        g: f64,
        error: DtcError,
    },
}

impl PointOutcome {
    pub fn record(&self) -> Option<&PhaseMapRecord> {
        match self {
            PointOutcome::Done(r) => Some(r),
            PointOutcome::Failed { .. } => None,
        }
    }

    /// The record, or a NaN-filled row for failed points.
    pub fn row(&self) -> PhaseMapRecord {
        match self {
            PointOutcome::Done(r) => *r,
            PointOutcome::Failed { lambda, g, .. } => PhaseMapRecord::failed(*lambda, *g),
        }
    }
}

/// Execution options for `run_grid_with`.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses `default_workers()`.
    pub workers: Option<usize>,
    /// Checkpoint file, read on start and appended to as points finish.
    pub checkpoint: Option<PathBuf>,
    /// Stop after this many newly computed points (simulates an interruption).
    pub max_new_points: Option<usize>,
}

/// Result of a (possibly partial) grid run.
#[derive(Debug, Clone)]
pub struct GridRun {
    /// One slot per grid index in row-major order; `None` if not reached.
    pub outcomes: Vec<Option<PointOutcome>>,
    /// Points evolved in this run (excludes points restored from a checkpoint).
    pub evolved_points: usize,
    /// Floquet periods applied in this run.
    pub evolved_periods: u64,
    /// Points restored from the checkpoint.
    pub restored_points: usize,
}

impl GridRun {
    pub fn is_complete(&self) -> bool {
        self.outcomes.iter().all(Option::is_some)
    }

    /// Rows in grid order, NaN-filled for failed points; errors if incomplete.
    pub fn rows(&self) -> Result<Vec<PhaseMapRecord>> {
        self.outcomes
            .iter()
            .map(|o| {
                o.as_ref()
                    .map(PointOutcome::row)
                    .ok_or_else(|| DtcError::InsufficientData("grid run is incomplete".into()))
            })
            .collect()
    }

    pub fn failures(&self) -> Vec<(usize, &PointOutcome)> {
        self.outcomes
            .iter()
            .enumerate()
            .filter_map(|(i, o)| match o {
                Some(p @ PointOutcome::Failed { .. }) => Some((i, p)),
                _ => None,
            })
            .collect()
    }
}

/// Worker count: available parallelism, capped by `DTC_WORKERS` if set.
pub fn default_workers() -> usize {
    let hw = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    match std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        Some(cap) if cap >= 1 => hw.min(cap),
        _ => hw,
    }
}

/// Runs the full grid with default options and returns rows in grid order.
pub fn run_grid(spec: &GridSpec) -> Result<Vec<PhaseMapRecord>> {
    run_grid_with(spec, &RunOptions::default())?.rows()
}

pub fn run_grid_with(spec: &GridSpec, options: &RunOptions) -> Result<GridRun> {
    spec.validate()?;
    let workers = options.workers.unwrap_or_else(default_workers).max(1);
    let mut outcomes: Vec<Option<PointOutcome>> = vec![None; spec.len()];
    let mut restored_points = 0;
    let mut writer = None;
    if let Some(path) = &options.checkpoint {
        let existing = if path.exists() {
            read_checkpoint_for(path, spec)?
        } else {
            Vec::new()
        };
        // Rewrite so that a torn trailing entry is discarded before appending.
        let mut w = CheckpointWriter::create(path, spec)?;
        for (index, rec) in &existing {
            w.append(*index, rec)?;
            if outcomes[*index].is_none() {
                restored_points += 1;
            }
            outcomes[*index] = Some(PointOutcome::Done(*rec));
        }
        w.flush()?;
        writer = Some(w);
    }

    let mut pending: Vec<usize> = (0..spec.len()).filter(|&i| outcomes[i].is_none()).collect();
    if let Some(limit) = options.max_new_points {
        pending.truncate(limit);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| DtcError::Io(format!("thread pool: {e}")))?;
    let batch = workers * 4;
    let mut evolved_points = 0;
    for chunk in pending.chunks(batch) {
        let results: Vec<(usize, PointOutcome)> = pool.install(|| {
            chunk
                .par_iter()
                .map(|&i| {
                    let outcome = match compute_point(spec, i) {
                        Ok(rec) => PointOutcome::Done(rec),
                        Err(error) => {
                            let (lambda, g) = spec.point(i);
                            PointOutcome::Failed { lambda, g, error }
                        }
                    };
                    (i, outcome)
                })
                .collect()
        });
        for (i, outcome) in results {
            if let (Some(w), PointOutcome::Done(rec)) = (writer.as_mut(), &outcome) {
                w.append(i, rec)?;
            }
            outcomes[i] = Some(outcome);
            evolved_points += 1;
        }
        if let Some(w) = writer.as_mut() {
            w.flush()?;
        }
    }
    Ok(GridRun {
        outcomes,
        evolved_points,
        evolved_periods: (evolved_points as u64) * spec.periods as u64,
        restored_points,
    })
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text: comment line, header, one row per record.
pub fn to_csv_string(records: &[PhaseMapRecord]) -> String {
    let mut out = String::with_capacity(64 + records.len() * 180);
    out.push_str(CSV_COMMENT);
    out.push('\n');
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let row: Vec<String> = r.fields().iter().map(|&x| fmt_float(x)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(records: &[PhaseMapRecord], destination: &Path) -> Result<()> {
    std::fs::write(destination, to_csv_string(records))?;
    Ok(())
}

/// Parses text produced by `to_csv_string`. Row numbers in errors are
/// 1-based file line numbers.
pub fn parse_csv(text: &str) -> Result<Vec<PhaseMapRecord>> {
    let mut header_seen = false;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let line = line.trim_end_matches('\r');
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line != CSV_HEADER {
                return Err(DtcError::Parse {
                    row,
                    message: format!("expected header '{CSV_HEADER}'"),
                });
            }
            header_seen = true;
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 7 {
            return Err(DtcError::Parse {
                row,
                message: format!("expected 7 fields, found {}", cells.len()),
            });
        }
        let mut f = [0.0; 7];
        for (slot, cell) in f.iter_mut().zip(&cells) {
            *slot = cell.trim().parse::<f64>().map_err(|e| DtcError::Parse {
                row,
                message: format!("'{cell}': {e}"),
            })?;
        }
        out.push(PhaseMapRecord::from_fields(f));
    }
    if !header_seen {
        return Err(DtcError::Parse {
            row: 0,
            message: "missing header".into(),
        });
    }
    Ok(out)
}

pub fn read_csv(source: &Path) -> Result<Vec<PhaseMapRecord>> {
    parse_csv(&std::fs::read_to_string(source)?)
}

struct CheckpointWriter {
    out: BufWriter<File>,
}

impl CheckpointWriter {
    fn create(path: &Path, spec: &GridSpec) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(path)?;
        let mut out = BufWriter::new(file);
        out.write_all(CHECKPOINT_MAGIC)?;
        let header = spec.fingerprint();
        out.write_all(&(header.len() as u32).to_le_bytes())?;
        out.write_all(header.as_bytes())?;
        Ok(Self { out })
    }

    fn append(&mut self, index: usize, rec: &PhaseMapRecord) -> Result<()> {
        let mut buf = Vec::with_capacity(4 + ENTRY_LEN);
        buf.extend_from_slice(&(ENTRY_LEN as u32).to_le_bytes());
        buf.extend_from_slice(&(index as u64).to_le_bytes());
        for x in rec.fields() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        self.out.write_all(&buf)?;
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        self.out.get_ref().sync_data()?;
        Ok(())
    }
}

/// Grid description stored in a checkpoint together with its entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: String,
    pub entries: Vec<(usize, PhaseMapRecord)>,
}

/// Reads a checkpoint file. A torn final entry is ignored.
pub fn read_checkpoint(source: &Path) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    File::open(source)?.read_to_end(&mut bytes)?;
    if bytes.len() < 8 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(DtcError::Parse {
            row: 0,
            message: "missing DTC1 magic".into(),
        });
    }
    let u32_at =
        |pos: usize| u32::from_le_bytes(bytes[pos..pos + 4].try_into().expect("4 bytes")) as usize;
    let header_len = u32_at(4);
    let mut pos = 8 + header_len;
    if pos > bytes.len() {
        return Err(DtcError::Parse {
            row: 0,
            message: "truncated checkpoint header".into(),
        });
    }
    let header = String::from_utf8(bytes[8..pos].to_vec()).map_err(|_| DtcError::Parse {
        row: 0,
        message: "header is not UTF-8".into(),
    })?;
    let mut entries = Vec::new();
    while pos + 4 <= bytes.len() {
        let len = u32_at(pos);
        if len != ENTRY_LEN {
            return Err(DtcError::Parse {
                row: entries.len() + 1,
                message: format!("entry length {len}, expected {ENTRY_LEN}"),
            });
        }
        if pos + 4 + len > bytes.len() {
            break;
        }
        let body = &bytes[pos + 4..pos + 4 + len];
        let index = u64::from_le_bytes(body[..8].try_into().expect("8 bytes")) as usize;
        let mut f = [0.0; 7];
        for (k, slot) in f.iter_mut().enumerate() {
            *slot = f64::from_le_bytes(body[8 + 8 * k..16 + 8 * k].try_into().expect("8 bytes"));
        }
        entries.push((index, PhaseMapRecord::from_fields(f)));
        pos += 4 + len;
    }
    Ok(Checkpoint { header, entries })
}

fn read_checkpoint_for(path: &Path, spec: &GridSpec) -> Result<Vec<(usize, PhaseMapRecord)>> {
    let cp = read_checkpoint(path)?;
    if cp.header != spec.fingerprint() {
        return Err(DtcError::Validation(format!(
            "checkpoint {} was written for a different grid",
            path.display()
        )));
    }
    if let Some((i, _)) = cp.entries.iter().find(|(i, _)| *i >= spec.len()) {
        return Err(DtcError::Validation(format!(
            "checkpoint index {i} outside the grid"
        )));
    }
    Ok(cp.entries)
}
