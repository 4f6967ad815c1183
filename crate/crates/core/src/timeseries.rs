//! Uniformly sampled multivariate trajectories and their CSV form.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// A multivariate trajectory sampled at strictly increasing instants.
///
/// Rows of `values` are samples, columns are state channels. When the grid
/// is uniform `dt` holds the step.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: DMatrix<f64>,
    pub dt: Option<f64>,
    pub channel_names: Vec<String>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: DMatrix<f64>, channel_names: Vec<String>) -> Result<Self> {
        if times.len() != values.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "{} time instants vs {} value rows",
                times.len(),
                values.nrows()
            )));
        }
        if channel_names.len() != values.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "{} channel names vs {} channels",
                channel_names.len(),
                values.ncols()
            )));
        }
        for w in times.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::NonUniformSampling(
                    "times must be strictly increasing".into(),
                ));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("time series values".into()));
        }
        let dt = detect_uniform_step(&times);
        Ok(Self {
            times,
            values,
            dt,
            channel_names,
        })
    }

    /// Builds a series on a uniform grid starting at `t0`.
    pub fn uniform(t0: f64, dt: f64, values: DMatrix<f64>, channel_names: Vec<String>) -> Result<Self> {
        let times = (0..values.nrows()).map(|i| t0 + i as f64 * dt).collect();
        Self::new(times, values, channel_names)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_uniform(&self) -> bool {
        self.dt.is_some()
    }

    /// Writes CSV with header `t,x1,..,xm` (channel names used when set).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "t")?;
        for name in &self.channel_names {
            write!(out, ",{name}")?;
        }
        writeln!(out)?;
        for i in 0..self.len() {
            write!(out, "{}", self.times[i])?;
            for j in 0..self.dim() {
                write!(out, ",{}", self.values[(i, j)])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn from_csv_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(BufReader::new(file))
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty CSV".into()))??;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 2 || cols[0].trim() != "t" {
            return Err(Error::Parse(format!(
                "expected header starting with 't', got '{header}'"
            )));
        }
        let channel_names: Vec<String> = cols[1..].iter().map(|s| s.trim().to_string()).collect();
        let m = channel_names.len();
        let mut times = Vec::new();
        let mut data = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != m + 1 {
                return Err(Error::Parse(format!(
                    "line {}: expected {} fields, got {}",
                    lineno + 2,
                    m + 1,
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))
            };
            times.push(parse(fields[0])?);
            for f in &fields[1..] {
                data.push(parse(f)?);
            }
        }
        let n = times.len();
        let values = DMatrix::from_row_slice(n, m, &data);
        Self::new(times, values, channel_names)
    }
}

fn detect_uniform_step(times: &[f64]) -> Option<f64> {
    if times.len() < 2 {
        return None;
    }
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs() {
            return None;
        }
    }
    Some(dt)
}

/// Default channel names `x1..xm`.
pub fn default_channel_names(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("x{i}")).collect()
}
