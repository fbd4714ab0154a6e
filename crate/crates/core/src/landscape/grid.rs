use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use super::family::{ChannelFamily, FamilyKind};
use crate::capacity::FD_BA_TOL;
use crate::error::{Error, Result};
use crate::thermo::{dmc_thermo, DEFAULT_SUPPORT_EPS};

/// One evaluated grid point. Numeric fields are NaN when `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub u: f64,
    pub v: f64,
    pub capacity: f64,
    pub t_mix: f64,
    pub beta_inv_mix: f64,
    pub f_mix: f64,
    pub entropy: f64,
    pub p_star: Vec<f64>,
    pub degenerate: bool,
    /// Error code of the failed evaluation.
    pub error: Option<String>,
}

impl CellRecord {
    fn failed(u: f64, v: f64, n: usize, code: &str) -> Self {
        Self {
            u,
            v,
            capacity: f64::NAN,
            t_mix: f64::NAN,
            beta_inv_mix: f64::NAN,
            f_mix: f64::NAN,
            entropy: f64::NAN,
            p_star: vec![f64::NAN; n],
            degenerate: false,
            error: Some(code.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_u: usize,
    pub n_v: usize,
    pub margin: f64,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
    pub ba_tol: f64,
    pub support_eps: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_u: 101,
            n_v: 101,
            margin: 0.02,
            workers: 0,
            ba_tol: FD_BA_TOL,
            support_eps: DEFAULT_SUPPORT_EPS,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_u < 2 {
            return Err(Error::OutOfRange { name: "n_u", value: self.n_u as f64 });
        }
        if self.n_v < 2 {
            return Err(Error::OutOfRange { name: "n_v", value: self.n_v as f64 });
        }
        if !(0.0..0.5).contains(&self.margin) {
            return Err(Error::OutOfRange { name: "margin", value: self.margin });
        }
        if !(self.ba_tol > 0.0) {
            return Err(Error::OutOfRange { name: "ba_tol", value: self.ba_tol });
        }
        if !(self.support_eps >= 0.0 && self.support_eps < 1.0) {
            return Err(Error::OutOfRange { name: "support_eps", value: self.support_eps });
        }
        Ok(())
    }
}

/// `n` evenly spaced points from `margin` to `1 − margin`.
pub fn grid_axis(n: usize, margin: f64) -> Vec<f64> {
    let span = 1.0 - 2.0 * margin;
    (0..n).map(|i| margin + span * i as f64 / (n - 1) as f64).collect()
}

/// A complete sweep over the unit square, stored with `u` as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid {
    pub family: Option<FamilyKind>,
    pub n_u: usize,
    pub n_v: usize,
    pub margin: f64,
    /// Alphabet size (number of `p` columns).
    pub n: usize,
    pub cells: Vec<CellRecord>,
}

impl LandscapeGrid {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_v + j
    }

    pub fn cell(&self, i: usize, j: usize) -> &CellRecord {
        &self.cells[self.index(i, j)]
    }

    /// Grid spacing along `u` and `v`.
    pub fn steps(&self) -> (f64, f64) {
        let span = |first: f64, last: f64, n: usize| (last - first) / (n - 1) as f64;
        let last = self.cell(self.n_u - 1, self.n_v - 1);
        let first = &self.cells[0];
        (span(first.u, last.u, self.n_u), span(first.v, last.v, self.n_v))
    }

    pub fn error_count(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_ok()).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["u", "v", "C", "t_mix", "beta_inv_mix", "F_mix", "H"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((1..=self.n).map(|k| format!("p{k}")));
        header.push("degenerate".into());
        header.push("error".into());
        writer.write_record(&header).map_err(csv_error)?;
        for cell in &self.cells {
            let mut row: Vec<String> = [cell.u, cell.v, cell.capacity, cell.t_mix, cell.beta_inv_mix, cell.f_mix, cell.entropy]
                .iter()
                .map(|&x| format_float(x))
                .collect();
            row.extend(cell.p_star.iter().map(|&x| format_float(x)));
            row.push(cell.degenerate.to_string());
            row.push(cell.error.clone().unwrap_or_default());
            writer.write_record(&row).map_err(csv_error)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads a grid written by [`Self::write_csv`]. Resolution is recovered
    /// from the distinct `u` values; the family is not stored in the file.
    pub fn read_csv<R: Read>(input: R, family: Option<FamilyKind>) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let header = reader.headers().map_err(csv_error)?.clone();
        let fixed = ["u", "v", "C", "t_mix", "beta_inv_mix", "F_mix", "H"];
        if header.len() < fixed.len() + 2 || fixed.iter().zip(header.iter()).any(|(a, b)| *a != b) {
            return Err(Error::Parse("unexpected grid CSV header".into()));
        }
        let n = header.len() - fixed.len() - 2;
        if n == 0 {
            return Err(Error::MissingPStar);
        }
        let mut cells = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_error)?;
            let num = |i: usize| -> Result<f64> {
                record[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("column {}: {e}", header[i].to_string())))
            };
            let p_star = (0..n).map(|k| num(fixed.len() + k)).collect::<Result<Vec<_>>>()?;
            let degenerate = match record[fixed.len() + n].trim() {
                "true" => true,
                "false" => false,
                other => return Err(Error::Parse(format!("degenerate flag {other:?}"))),
            };
            let error = Some(record[fixed.len() + n + 1].trim().to_string()).filter(|s| !s.is_empty());
            cells.push(CellRecord {
                u: num(0)?,
                v: num(1)?,
                capacity: num(2)?,
                t_mix: num(3)?,
                beta_inv_mix: num(4)?,
                f_mix: num(5)?,
                entropy: num(6)?,
                p_star,
                degenerate,
                error,
            });
        }
        if cells.is_empty() {
            return Err(Error::Parse("grid CSV has no rows".into()));
        }
        let first_u = cells[0].u;
        let n_v = cells.iter().take_while(|c| c.u == first_u).count();
        if n_v < 2 || cells.len() % n_v != 0 || cells.len() / n_v < 2 {
            return Err(Error::Parse("grid CSV is not a complete rectangular grid".into()));
        }
        let n_u = cells.len() / n_v;
        for (r, cell) in cells.iter().enumerate() {
            let (i, j) = (r / n_v, r % n_v);
            if cell.u != cells[i * n_v].u || cell.v != cells[j].v {
                return Err(Error::Parse(format!("row {r} breaks the grid ordering")));
            }
        }
        let family = family.or(if n == 2 { Some(FamilyKind::Biodmc) } else { None });
        Ok(Self { family, n_u, n_v, margin: first_u, n, cells })
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Seventeen significant digits: enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn evaluate_cell(family: &ChannelFamily, u: f64, v: f64, config: &SweepConfig) -> CellRecord {
    let n = family.alphabet_size();
    let outcome = family
        .evaluate(u, v)
        .and_then(|w| dmc_thermo(&w, config.ba_tol, config.support_eps));
    match outcome {
        Ok(t) => CellRecord {
            u,
            v,
            capacity: t.capacity.capacity,
            t_mix: t.t_mix,
            beta_inv_mix: t.beta_inv_mix(),
            f_mix: t.f_mix,
            entropy: t.entropy,
            p_star: t.capacity.p_star.weights().to_vec(),
            degenerate: t.degenerate,
            error: None,
        },
        Err(e) => CellRecord::failed(u, v, n, e.code()),
    }
}

/// Evaluates the channel thermodynamics at every grid point.
///
/// Per-cell failures are recorded in the cell. Every cell is a pure function
/// of its coordinates, so the result does not depend on `workers`.
pub fn sweep(family: &ChannelFamily, config: &SweepConfig) -> Result<LandscapeGrid> {
    config.validate()?;
    let us = grid_axis(config.n_u, config.margin);
    let vs = grid_axis(config.n_v, config.margin);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let cells = pool.install(|| {
        (0..config.n_u * config.n_v)
            .into_par_iter()
            .map(|idx| evaluate_cell(family, us[idx / config.n_v], vs[idx % config.n_v], config))
            .collect()
    });
    Ok(LandscapeGrid {
        family: Some(family.kind()),
        n_u: config.n_u,
        n_v: config.n_v,
        margin: config.margin,
        n: family.alphabet_size(),
        cells,
    })
}
