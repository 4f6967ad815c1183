//! Spatiotemporal field data on a uniform 1-D space x time lattice.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

/// Scalar field u(t, x) on a uniform lattice. Rows index time, columns
/// index space.
#[derive(Debug, Clone)]
pub struct FieldData {
    pub x0: f64,
    pub t0: f64,
    pub dx: f64,
    pub dt: f64,
    pub values: DMatrix<f64>,
    pub periodic: bool,
}

/// JSON sidecar describing the binary lattice layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldMeta {
    pub nx: usize,
    pub nt: usize,
    pub x0: f64,
    pub t0: f64,
    pub dx: f64,
    pub dt: f64,
    pub periodic: bool,
}

impl FieldData {
    pub fn new(
        x0: f64,
        t0: f64,
        dx: f64,
        dt: f64,
        values: DMatrix<f64>,
        periodic: bool,
    ) -> Result<Self> {
        if dx <= 0.0 || dt <= 0.0 {
            return Err(Error::InvalidDimension("spacings must be positive".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values".into()));
        }
        Ok(Self {
            x0,
            t0,
            dx,
            dt,
            values,
            periodic,
        })
    }

    pub fn nt(&self) -> usize {
        self.values.nrows()
    }

    pub fn nx(&self) -> usize {
        self.values.ncols()
    }

    pub fn x_at(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn t_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn meta(&self) -> FieldMeta {
        FieldMeta {
            nx: self.nx(),
            nt: self.nt(),
            x0: self.x0,
            t0: self.t0,
            dx: self.dx,
            dt: self.dt,
            periodic: self.periodic,
        }
    }

    /// Long-form CSV `t,x,u`, one row per lattice point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,x,u")?;
        for i in 0..self.nt() {
            for j in 0..self.nx() {
                writeln!(out, "{},{},{}", self.t_at(i), self.x_at(j), self.values[(i, j)])?;
            }
        }
        Ok(())
    }

    /// Reads the long-form CSV, inferring the lattice from the traversal
    /// order (time-major, as written by `write_csv`).
    pub fn read_csv<R: BufRead>(reader: R, periodic: bool) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty field CSV".into()))??;
        if header.trim() != "t,x,u" {
            return Err(Error::Parse(format!("expected header 't,x,u', got '{header}'")));
        }
        let mut ts = Vec::new();
        let mut xs = Vec::new();
        let mut us = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 fields", lineno + 2)));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))
            };
            ts.push(parse(f[0])?);
            xs.push(parse(f[1])?);
            us.push(parse(f[2])?);
        }
        if us.is_empty() {
            return Err(Error::Parse("no field rows".into()));
        }
        // count the leading run of equal t values to find nx
        let t0 = ts[0];
        let nx = ts.iter().take_while(|&&t| t == t0).count();
        if nx < 2 || us.len() % nx != 0 {
            return Err(Error::Parse("lattice shape could not be inferred".into()));
        }
        let nt = us.len() / nx;
        let dx = xs[1] - xs[0];
        let dt = if nt > 1 { ts[nx] - ts[0] } else { 1.0 };
        let values = DMatrix::from_row_slice(nt, nx, &us);
        Self::new(xs[0], t0, dx, dt, values, periodic)
    }

    pub fn to_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn from_csv_file(path: &Path, periodic: bool) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(BufReader::new(file), periodic)
    }

    /// Writes the row-major f64 little-endian lattice plus a JSON sidecar
    /// at `<path>.json`.
    pub fn to_binary_file(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        for i in 0..self.nt() {
            for j in 0..self.nx() {
                file.write_all(&self.values[(i, j)].to_le_bytes())?;
            }
        }
        let sidecar = path.with_extension(format!(
            "{}json",
            path.extension()
                .map(|e| format!("{}.", e.to_string_lossy()))
                .unwrap_or_default()
        ));
        let json = serde_json::to_string_pretty(&self.meta())?;
        std::fs::write(sidecar, json)?;
        Ok(())
    }

    pub fn from_binary_file(path: &Path) -> Result<Self> {
        let sidecar = path.with_extension(format!(
            "{}json",
            path.extension()
                .map(|e| format!("{}.", e.to_string_lossy()))
                .unwrap_or_default()
        ));
        let meta: FieldMeta = serde_json::from_str(&std::fs::read_to_string(sidecar)?)?;
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut buf = vec![0u8; 8];
        let mut data = Vec::with_capacity(meta.nt * meta.nx);
        for _ in 0..meta.nt * meta.nx {
            file.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf[..8].try_into().unwrap()));
        }
        let values = DMatrix::from_row_slice(meta.nt, meta.nx, &data);
        Self::new(meta.x0, meta.t0, meta.dx, meta.dt, values, meta.periodic)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> FieldData {
        let values = DMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 * 0.5);
        FieldData::new(0.0, 0.0, 0.25, 0.1, values, true).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let f = sample_field();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = FieldData::read_csv(&buf[..], true).unwrap();
        assert_eq!(back.nt(), 3);
        assert_eq!(back.nx(), 4);
        assert_eq!(back.values, f.values);
        assert!((back.dx - 0.25).abs() < 1e-12);
        assert!((back.dt - 0.1).abs() < 1e-12);
    }

    #[test]
    fn binary_round_trip() {
        let f = sample_field();
        let dir = std::env::temp_dir().join("sparsedyn_field_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.bin");
        f.to_binary_file(&path).unwrap();
        let back = FieldData::from_binary_file(&path).unwrap();
        assert_eq!(back.values, f.values);
        assert_eq!(back.periodic, f.periodic);
    }
}
