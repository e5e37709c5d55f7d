//! Inter-regional structural connectivity.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Symmetric non-negative coupling weights with a zero diagonal.
///
/// The network coupling divides by each row sum, so rows must sum to a
/// strictly positive value whenever there is more than one region. A single
/// region has no neighbors; its (empty) network input is defined as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connectivity {
    n: usize,
    /// Row-major N x N weights.
    u: Vec<f64>,
    row_sums: Vec<f64>,
}

impl Connectivity {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("connectivity must have at least one region"));
        }
        let mut u = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "connectivity row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            u.extend_from_slice(row);
        }
        for (idx, &w) in u.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(format!(
                    "connectivity entry ({}, {}) must be finite and non-negative, got {w}",
                    idx / n,
                    idx % n
                )));
            }
        }
        for i in 0..n {
            if u[i * n + i] != 0.0 {
                return Err(Error::invalid(format!(
                    "connectivity diagonal entry ({i}, {i}) must be zero, got {}",
                    u[i * n + i]
                )));
            }
            for j in (i + 1)..n {
                let (a, b) = (u[i * n + j], u[j * n + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::invalid(format!(
                        "connectivity not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        let row_sums: Vec<f64> = (0..n).map(|i| u[i * n..(i + 1) * n].iter().sum()).collect();
        if n > 1 {
            if let Some(i) = row_sums.iter().position(|&s| s <= 0.0) {
                return Err(Error::invalid(format!(
                    "connectivity row {i} sums to {}; every region needs a positive total coupling",
                    row_sums[i]
                )));
            }
        }
        Ok(Connectivity { n, u, row_sums })
    }

    /// Default synthetic connectome: distance-decay weights
    /// u_ij = exp(-|i - j| / lambda) with lambda = N/4, zero diagonal.
    pub fn synthetic_exponential(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("connectivity must have at least one region"));
        }
        let lambda = n as f64 / 4.0;
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            0.0
                        } else {
                            (-((i as f64 - j as f64).abs()) / lambda).exp()
                        }
                    })
                    .collect()
            })
            .collect();
        Connectivity::from_rows(rows)
    }

    /// Synthetic modular connectome: regions are grouped into independent
    /// blocks of `block_size` with unit coupling inside a block and none
    /// across blocks. Identical regions coupled all-to-all synchronize, so a
    /// connected network of clones produces uniformly saturated functional
    /// connectivity; keeping the blocks mutually disconnected lets them
    /// evolve independently, which is what makes small benchmark networks
    /// show contrast in their correlation structure.
    pub fn synthetic_modular(n: usize, block_size: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("connectivity must have at least one region"));
        }
        if block_size < 2 {
            return Err(Error::invalid(format!(
                "modular connectivity needs block_size >= 2 so every row couples somewhere, got {block_size}"
            )));
        }
        if n % block_size != 0 {
            return Err(Error::invalid(format!(
                "modular connectivity needs block_size ({block_size}) to divide the region count ({n})"
            )));
        }
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i != j && i / block_size == j / block_size {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Connectivity::from_rows(rows)
    }

    pub fn region_count(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.u[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.u[i * self.n..(i + 1) * self.n]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row_sums[i]
    }

    /// Parse an N x N decimal CSV matrix.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|e| {
                        Error::invalid(format!(
                            "connectivity csv line {}: cannot parse {:?}: {e}",
                            lineno + 1,
                            cell.trim()
                        ))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Connectivity::from_rows(rows)
    }

    pub fn from_csv_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Connectivity::from_csv_str(&text)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|w| format!("{w}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}
