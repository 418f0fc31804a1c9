//! Uniform grid on the slab (-1, 1) with homogeneous Dirichlet values.
//!
//! Only interior nodes are stored; boundary values are implicitly zero, so
//! every discrete operator acts on `R^n`.

use crate::error::{Error, Result};

/// Uniform grid of `n` interior nodes on (-1, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    h: f64,
}

impl Grid {
    /// Builds a grid with `n >= 3` interior nodes and spacing `2 / (n + 1)`.
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 3 interior nodes, got {n}"
            )));
        }
        Ok(Self {
            n,
            h: 2.0 / (n as f64 + 1.0),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Coordinate of interior node `i` (zero based), `x = -1 + (i + 1) h`.
    pub fn node(&self, i: usize) -> f64 {
        -1.0 + (i as f64 + 1.0) * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub(crate) fn check(&self, other: &Grid) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }
}

/// Grid function: one value per interior node.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch {
                expected: grid.n,
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at the interior nodes.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            grid,
            values: (0..grid.n).map(|i| f(grid.node(i))).collect(),
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.n],
        }
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

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    /// `self + a * other`, nodewise.
    pub fn axpy(&self, a: f64, other: &Field) -> Result<Field> {
        self.grid.check(&other.grid)?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
        })
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|x| a * x)
    }

    pub fn max_norm(&self) -> f64 {
        max_norm(&self.values)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// h-weighted L1 norm.
    pub fn l1_norm(&self) -> f64 {
        self.grid.h * self.values.iter().map(|x| x.abs()).sum::<f64>()
    }

    /// h-weighted L2 norm.
    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// h-weighted inner product. Panics on grid mismatch.
    pub fn dot(&self, other: &Field) -> f64 {
        assert_eq!(self.len(), other.len(), "dot product across grids");
        self.grid.h * dot(&self.values, &other.values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    /// Largest `max(other - self, 0)` over the nodes; zero iff `self >= other`.
    pub fn deficit_below(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (b - a).max(0.0))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn max_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Applies `(-f[i-1] + 2 f[i] - f[i+1]) / h^2` with zero boundary values.
pub(crate) fn neg_laplacian_into(h: f64, f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let inv_h2 = 1.0 / (h * h);
    for i in 0..n {
        let left = if i > 0 { f[i - 1] } else { 0.0 };
        let right = if i + 1 < n { f[i + 1] } else { 0.0 };
        out[i] = (2.0 * f[i] - left - right) * inv_h2;
    }
}

/// Discrete negative Laplacian with homogeneous Dirichlet data.
pub fn neg_laplacian_apply(f: &Field) -> Field {
    let mut out = Field::zeros(f.grid);
    neg_laplacian_into(f.grid.h, &f.values, &mut out.values);
    out
}
