//! Uniform periodic grids on `[-1/2, 1/2)^2` and real fields sampled on them.
//!
//! Values are stored row-major with the first index along `x`:
//! `values[i * n + j] = f(x_i, y_j)` where `x_i = -1/2 + i h`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const FIELD_MAGIC: &[u8; 16] = b"BCPATCH-FIELD-01";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n = {n}: need an even number of points, at least 16")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -0.5 + i as f64 * self.h()
    }

    /// Index of the point `-x_i` (mod 1).
    pub fn reflect(&self, i: usize) -> usize {
        (self.n - i) % self.n
    }

    /// Index of the coordinate origin, `x = 0`.
    pub fn origin(&self) -> usize {
        self.n / 2
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// Is `(i, j)` on one of the lattice lines `x = 0`, `x = -1/2`, `y = 0`, `y = -1/2`?
    pub fn on_separatrix(&self, i: usize, j: usize) -> bool {
        let o = self.origin();
        i == 0 || i == o || j == 0 || j == o
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            let x = grid.coord(i);
            for j in 0..n {
                values.push(f(x, grid.coord(j)));
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at flat index {k}")));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(self.grid.n(), other.grid.n()));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn norm_c0(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `||f||_C1 = max|f| + max|grad f|`, with the gradient taken spectrally.
    pub fn norm_c1(&self) -> f64 {
        crate::spectral::SpectralWorkspace::new(self.grid).norm_c1(self)
    }

    /// Discrete `L^p` norm `(h^2 sum |f|^p)^{1/p}`.
    pub fn norm_lp(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("L^p norm needs p >= 1, got {p}")));
        }
        let h2 = self.grid.h() * self.grid.h();
        let s: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        Ok((h2 * s).powf(1.0 / p))
    }

    /// Average over the 8-element group generated by `x -> -x`, `y -> -y`
    /// (with sign flips) and the diagonal swap.
    pub fn project_symmetry(&self) -> Self {
        let g = self.grid;
        let n = g.n();
        let f = &self.values;
        let mut out = vec![0.0; g.len()];
        for i in 0..n {
            let ri = g.reflect(i);
            for j in 0..n {
                let rj = g.reflect(j);
                // grouped so that the symmetries hold bit for bit
                let c = (f[g.idx(i, j)] + f[g.idx(ri, rj)]) - (f[g.idx(ri, j)] + f[g.idx(i, rj)]);
                let ct = (f[g.idx(j, i)] + f[g.idx(rj, ri)]) - (f[g.idx(j, ri)] + f[g.idx(rj, i)]);
                out[g.idx(i, j)] = 0.125 * (c + ct);
            }
        }
        Self { grid: g, values: out }
    }

    pub fn symmetry_defect(&self) -> f64 {
        let p = self.project_symmetry();
        self.values.iter().zip(&p.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn require_symmetric(&self, tol: f64) -> Result<()> {
        let d = self.symmetry_defect();
        if d > tol {
            return Err(Error::Symmetry(d));
        }
        Ok(())
    }

    pub fn write_dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&self.to_dump_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn to_dump_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 8 * self.values.len());
        out.extend_from_slice(FIELD_MAGIC);
        out.extend_from_slice(&(self.grid.n() as u32).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn read_dump(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        Self::from_dump_bytes(&bytes)
    }

    pub fn from_dump_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 20 || &bytes[..16] != FIELD_MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let n = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
        let grid = Grid::new(n).map_err(|e| Error::Format(e.to_string()))?;
        let body = &bytes[20..];
        if body.len() != 8 * grid.len() {
            return Err(Error::Format(format!(
                "expected {} payload bytes for n = {n}, found {}",
                8 * grid.len(),
                body.len()
            )));
        }
        let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Self::from_values(grid, values).map_err(|e| Error::Format(e.to_string()))
    }

    /// CSV rows `x,y,value` with shortest round-trip float formatting.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["x", "y", "value"]).map_err(csv_err)?;
        let n = self.grid.n();
        for i in 0..n {
            let x = self.grid.coord(i).to_string();
            for j in 0..n {
                w.write_record([x.as_str(), &self.grid.coord(j).to_string(), &self.at(i, j).to_string()])
                    .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let mut vals = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let v: f64 = rec
                .get(2)
                .ok_or_else(|| Error::Format("missing value column".into()))?
                .parse()
                .map_err(|e| Error::Format(format!("{e}")))?;
            vals.push(v);
        }
        let n = (vals.len() as f64).sqrt().round() as usize;
        let grid = Grid::new(n).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_values(grid, vals)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
