//! Structural and correlative sensitivity analysis (SCSA): first-order HDMR
//! component functions fit by joint least squares on shifted Legendre bases,
//! and an uncorrelated sensitivity index per input.
//!
//! The uncorrelated index of input i isolates the part of its component
//! function that no other input's component can mimic: the sample vector of
//! f_i is projected onto the orthogonal complement of the span of the other
//! components, and the residual's energy is normalized by the total output
//! variance. This operationalizes the exclusive contribution of an input
//! when sampling-induced correlations are present; other decompositions of
//! the shared variance exist, this projection form is the one implemented.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_RCOND};
use crate::nn::Mlp;
use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const DEFAULT_DEGREE: usize = 3;

/// Orthonormal shifted Legendre polynomial of degree `n` on [0, 1]:
/// sqrt(2n+1) times the Legendre polynomial evaluated at 2x - 1.
pub fn legendre_shifted(n: usize, x: f64) -> f64 {
    let t = 2.0 * x - 1.0;
    // Bonnet recurrence for P_n(t).
    let mut p_prev = 1.0;
    let mut p = t;
    if n == 0 {
        return 1.0;
    }
    for m in 1..n {
        let next = ((2 * m + 1) as f64 * t * p - m as f64 * p_prev) / (m + 1) as f64;
        p_prev = p;
        p = next;
    }
    ((2 * n + 1) as f64).sqrt() * p
}

/// First-order HDMR fit: per-input component functions on a common basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HdmrFit {
    /// coef[i][d-1] multiplies basis degree d of input i.
    pub coef: Vec<Vec<f64>>,
    pub degree: usize,
    pub y_mean: f64,
    pub input_names: Vec<String>,
}

impl HdmrFit {
    /// Evaluate component function f_i at a scalar input value.
    pub fn component(&self, i: usize, x: f64) -> f64 {
        self.coef[i]
            .iter()
            .enumerate()
            .map(|(d, &c)| c * legendre_shifted(d + 1, x))
            .sum()
    }

    /// Sample matrix F with F[s, i] = f_i(x[s, i]).
    pub fn component_samples(&self, x: &Array2<f64>) -> Array2<f64> {
        let (n, i_dim) = x.dim();
        let mut f = Array2::zeros((n, i_dim));
        for s in 0..n {
            for i in 0..i_dim {
                f[[s, i]] = self.component(i, x[[s, i]]);
            }
        }
        f
    }
}

/// Joint ordinary least squares of the centered output on the union of
/// shifted-Legendre bases (degrees 1..=degree) of every input column.
pub fn fit_hdmr(
    x: &Array2<f64>,
    y: &Array1<f64>,
    degree: usize,
    input_names: &[String],
) -> Result<HdmrFit> {
    let (n, i_dim) = x.dim();
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n} sample rows but {} output values",
            y.len()
        )));
    }
    if input_names.len() != i_dim {
        return Err(Error::ShapeMismatch(format!(
            "{i_dim} inputs but {} names",
            input_names.len()
        )));
    }
    if degree == 0 {
        return Err(Error::invalid("basis degree must be at least 1"));
    }
    if n <= i_dim * degree + 1 {
        return Err(Error::invalid(format!(
            "need more than {} samples for {} basis columns, got {n}",
            i_dim * degree + 1,
            i_dim * degree
        )));
    }
    for i in 0..i_dim {
        let first = x[[0, i]];
        if (0..n).all(|s| x[[s, i]] == first) {
            return Err(Error::invalid(format!(
                "input column {} is constant; its components are unidentifiable",
                input_names[i]
            )));
        }
    }
    let y_mean = y.sum() / n as f64;
    let y_centered = y.mapv(|v| v - y_mean);
    let p = i_dim * degree;
    let mut design = Array2::zeros((n, p));
    for s in 0..n {
        for i in 0..i_dim {
            for d in 1..=degree {
                design[[s, i * degree + (d - 1)]] = legendre_shifted(d, x[[s, i]]);
            }
        }
    }
    let fit = linalg::lstsq(&design, &y_centered, DEFAULT_RCOND)?;
    if !fit.null_space.is_empty() {
        // Name every input whose basis columns participate in a null
        // direction; those inputs are mutually collinear in sample space.
        let mut involved: Vec<String> = Vec::new();
        for ns in &fit.null_space {
            let max_abs = ns.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            for i in 0..i_dim {
                let hit = (0..degree).any(|d| ns[i * degree + d].abs() > 1e-6 * max_abs);
                if hit && !involved.contains(&input_names[i]) {
                    involved.push(input_names[i].clone());
                }
            }
        }
        return Err(Error::RankDeficient { inputs: involved });
    }
    let coef: Vec<Vec<f64>> = (0..i_dim)
        .map(|i| fit.coef[i * degree..(i + 1) * degree].to_vec())
        .collect();
    Ok(HdmrFit { coef, degree, y_mean, input_names: input_names.to_vec() })
}

/// Uncorrelated sensitivity per input: the energy of f_i's sample vector
/// after projecting out the span of the other components, over the total
/// output variance sum.
pub fn uncorrelated_index(f_samples: &Array2<f64>, y: &Array1<f64>) -> Result<Vec<f64>> {
    let (n, i_dim) = f_samples.dim();
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n} component rows but {} output values",
            y.len()
        )));
    }
    let y_mean = y.sum() / n as f64;
    let ss_tot: f64 = y.iter().map(|&v| (v - y_mean) * (v - y_mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedSensitivity(
            "output variance is zero; sensitivities are undefined".into(),
        ));
    }
    let mut out = Vec::with_capacity(i_dim);
    for i in 0..i_dim {
        let target = Array1::from_iter(f_samples.column(i).iter().cloned());
        let mut basis = Array2::zeros((n, i_dim - 1));
        let mut col = 0;
        for m in 0..i_dim {
            if m == i {
                continue;
            }
            for s in 0..n {
                basis[[s, col]] = f_samples[[s, m]];
            }
            col += 1;
        }
        let resid = linalg::residual_after_projection(&basis, &target)?;
        let energy: f64 = resid.iter().map(|&r| r * r).sum();
        out.push(energy / ss_tot);
    }
    Ok(out)
}

/// Training inputs paired with their latent encodings.
pub fn latent_samples(model: &Mlp, ds: &Dataset) -> Result<(Array2<f64>, Array2<f64>)> {
    let (tx, _) = ds.train_xy();
    let latents = model.encode(&tx)?;
    Ok((tx, latents))
}

/// I x J matrix of uncorrelated sensitivities: inputs by latent columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityMatrix {
    /// s_unc[i][j]: sensitivity of latent j to input i.
    pub s_unc: Vec<Vec<f64>>,
    pub basis_degree: usize,
    pub sample_count: usize,
    pub input_names: Vec<String>,
}

impl SensitivityMatrix {
    pub fn input_count(&self) -> usize {
        self.s_unc.len()
    }

    pub fn latent_count(&self) -> usize {
        self.s_unc.first().map_or(0, |r| r.len())
    }

    pub fn validate(&self) -> Result<()> {
        for row in &self.s_unc {
            for &v in row {
                if !(v >= 0.0 && v <= 1.0 + 1e-6) {
                    return Err(Error::invalid(format!(
                        "sensitivity {v} outside [0, 1] tolerance"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// SCSA over every latent column of the encoder.
pub fn sensitivity_matrix(model: &Mlp, ds: &Dataset, degree: usize) -> Result<SensitivityMatrix> {
    let (tx, latents) = latent_samples(model, ds)?;
    let names: Vec<String> = ds.space.free_names().iter().map(|s| s.to_string()).collect();
    let j_dim = latents.ncols();
    let columns: Vec<Result<Vec<f64>>> = (0..j_dim)
        .into_par_iter()
        .map(|j| {
            let y = Array1::from_iter(latents.column(j).iter().cloned());
            let fit = fit_hdmr(&tx, &y, degree, &names)?;
            let f = fit.component_samples(&tx);
            uncorrelated_index(&f, &y)
        })
        .collect();
    let mut s_unc = vec![vec![0.0; j_dim]; tx.ncols()];
    for (j, col) in columns.into_iter().enumerate() {
        let col = col?;
        for (i, &v) in col.iter().enumerate() {
            s_unc[i][j] = v;
        }
    }
    let m = SensitivityMatrix {
        s_unc,
        basis_degree: degree,
        sample_count: tx.nrows(),
        input_names: names,
    };
    m.validate()?;
    Ok(m)
}

/// CSV matrix: rows are inputs, columns are latent dimensions.
pub fn write_sensitivity_csv(m: &SensitivityMatrix, path: &Path) -> Result<()> {
    let mut out = String::from("input");
    for j in 0..m.latent_count() {
        out.push_str(&format!(",L{}", j + 1));
    }
    out.push('\n');
    for (i, name) in m.input_names.iter().enumerate() {
        out.push_str(name);
        for j in 0..m.latent_count() {
            out.push_str(&format!(",{}", m.s_unc[i][j]));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
