//! Per-step trajectory rows and their CSV form.
//!
//! Header: `step,L1,L2,L1_mod,L2_mod,c1,c2,K1,K2,p,p1,p2,xi_norm,diverged,theta1,theta2`.
//! Reals are written in shortest round-trip form; parameter blocks are
//! `;`-separated lists. Each row describes the state at the start of `step`
//! and the diagnostics of the update taken from it.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub step: usize,
    pub l1: f64,
    pub l2: f64,
    pub l1_mod: f64,
    pub l2_mod: f64,
    pub c1: f64,
    pub c2: f64,
    pub k1: f64,
    pub k2: f64,
    pub p: f64,
    pub p1: f64,
    pub p2: f64,
    /// Norm of the simultaneous gradient each player is descending.
    pub xi_norm: f64,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub diverged: bool,
}

pub const CSV_HEADER: [&str; 16] = [
    "step", "L1", "L2", "L1_mod", "L2_mod", "c1", "c2", "K1", "K2", "p", "p1", "p2", "xi_norm", "diverged", "theta1", "theta2",
];

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn split(s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(parse_f64).collect()
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Config(format!("bad real '{s}' in trajectory CSV")))
}

pub fn write_csv<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let reals = [r.l1, r.l2, r.l1_mod, r.l2_mod, r.c1, r.c2, r.k1, r.k2, r.p, r.p1, r.p2, r.xi_norm];
        let mut row = vec![r.step.to_string()];
        row.extend(reals.iter().map(|v| v.to_string()));
        row.push(r.diverged.to_string());
        row.push(join(&r.theta1));
        row.push(join(&r.theta2));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Config("unexpected trajectory CSV header".into()));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let f = |i: usize| parse_f64(&row[i]);
        out.push(RunRecord {
            step: row[0].parse().map_err(|_| Error::Config(format!("bad step '{}'", &row[0])))?,
            l1: f(1)?,
            l2: f(2)?,
            l1_mod: f(3)?,
            l2_mod: f(4)?,
            c1: f(5)?,
            c2: f(6)?,
            k1: f(7)?,
            k2: f(8)?,
            p: f(9)?,
            p1: f(10)?,
            p2: f(11)?,
            xi_norm: f(12)?,
            diverged: row[13].parse().map_err(|_| Error::Config(format!("bad flag '{}'", &row[13])))?,
            theta1: split(&row[14])?,
            theta2: split(&row[15])?,
        });
    }
    Ok(out)
}
