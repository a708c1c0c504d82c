//! Per-step trajectory log and its CSV form.
//!
//! Columns: `t, q0..q5, qdot0..qdot5, y0..y8, xhat0..xhat11, dhat0, dhat1,
//! phat0, phat1, tau0..tau7, fz, phir, thetar, Vc, Vr, alloc_residual`.
//! Floats are written in Rust's shortest round-trip notation, so a log read
//! back is bit-identical to the one written.

use nalgebra::{SVector, Vector2};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimation::MeasVec;
use crate::kinematics::Vec6;
use crate::multibody::Thrusts;

pub const NUM_COLUMNS: usize = 52;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogRow {
    pub t: f64,
    pub q: Vec6,
    pub qdot: Vec6,
    pub y: MeasVec,
    pub xhat: SVector<f64, 12>,
    pub dhat: Vector2<f64>,
    pub phat: Vector2<f64>,
    pub tau: Thrusts,
    pub fz: f64,
    pub phir: f64,
    pub thetar: f64,
    pub vc: f64,
    pub vr: f64,
    pub alloc_residual: f64,
}

pub fn header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    let mut group = |name: &str, n: usize| h.extend((0..n).map(|i| format!("{name}{i}")));
    group("q", 6);
    group("qdot", 6);
    group("y", 9);
    group("xhat", 12);
    group("dhat", 2);
    group("phat", 2);
    group("tau", 8);
    h.extend(
        ["fz", "phir", "thetar", "Vc", "Vr", "alloc_residual"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

impl LogRow {
    pub fn to_values(&self) -> [f64; NUM_COLUMNS] {
        let mut v = [0.0; NUM_COLUMNS];
        let mut i = 0;
        let mut put = |xs: &[f64]| {
            v[i..i + xs.len()].copy_from_slice(xs);
            i += xs.len();
        };
        put(&[self.t]);
        put(self.q.as_slice());
        put(self.qdot.as_slice());
        put(self.y.as_slice());
        put(self.xhat.as_slice());
        put(self.dhat.as_slice());
        put(self.phat.as_slice());
        put(self.tau.as_slice());
        put(&[self.fz, self.phir, self.thetar, self.vc, self.vr, self.alloc_residual]);
        v
    }

    pub fn from_values(v: &[f64; NUM_COLUMNS]) -> Self {
        let mut i = 0;
        let mut take = |n: usize| {
            let s = &v[i..i + n];
            i += n;
            s
        };
        let t = take(1)[0];
        let q = Vec6::from_column_slice(take(6));
        let qdot = Vec6::from_column_slice(take(6));
        let y = MeasVec::from_column_slice(take(9));
        let xhat = SVector::<f64, 12>::from_column_slice(take(12));
        let dhat = Vector2::from_column_slice(take(2));
        let phat = Vector2::from_column_slice(take(2));
        let tau = Thrusts::from_column_slice(take(8));
        let tail = take(6);
        Self {
            t,
            q,
            qdot,
            y,
            xhat,
            dhat,
            phat,
            tau,
            fz: tail[0],
            phir: tail[1],
            thetar: tail[2],
            vc: tail[3],
            vr: tail[4],
            alloc_residual: tail[5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    pub rows: Vec<LogRow>,
}

impl TrajectoryLog {
    pub fn push(&mut self, row: LogRow) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io {
            path: "<csv>".into(),
            reason: e.to_string(),
        };
        w.write_record(header()).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.to_values().iter().map(|v| format!("{v:?}")))
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            reason: e.to_string(),
        })
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let found: Vec<String> = r
            .headers()
            .map_err(|e| Error::LogParse { row: 0, reason: e.to_string() })?
            .iter()
            .map(str::to_string)
            .collect();
        if found != header() {
            return Err(Error::LogParse {
                row: 0,
                reason: "header does not match the expected column order".into(),
            });
        }
        let mut log = Self::default();
        for (k, rec) in r.records().enumerate() {
            let row = k + 1;
            let rec = rec.map_err(|e| Error::LogParse { row, reason: e.to_string() })?;
            let mut v = [0.0; NUM_COLUMNS];
            for (j, field) in rec.iter().enumerate() {
                v[j] = field.parse().map_err(|_| Error::LogParse {
                    row,
                    reason: format!("column `{}`: cannot parse `{field}`", header()[j]),
                })?;
            }
            log.push(LogRow::from_values(&v));
        }
        Ok(log)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}
