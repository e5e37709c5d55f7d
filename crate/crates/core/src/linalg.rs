//! Small dense symmetric linear algebra: cyclic Jacobi eigendecomposition and
//! eigenvalue-based least squares with rank diagnostics.
//!
//! The problem sizes here are tiny (design matrices with a few dozen
//! columns), so the quadratically convergent Jacobi sweep is plenty and keeps
//! the numerics dependency-free and deterministic.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};

/// Relative eigenvalue threshold below which a direction is treated as null.
pub const DEFAULT_RCOND: f64 = 1e-12;

/// Eigendecomposition of a symmetric matrix. Eigenvalues ascending,
/// eigenvectors as the corresponding columns of an orthogonal matrix.
pub fn jacobi_eigh(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), Array2::zeros((0, 0))));
    }
    // Work on the symmetrized copy so tiny asymmetries from accumulation
    // cannot stall convergence.
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            m[[i, j]] = 0.5 * (a[[i, j]] + a[[j, i]]);
            if !m[[i, j]].is_finite() {
                return Err(Error::invalid("eigendecomposition input must be finite"));
            }
        }
    }
    let mut v: Array2<f64> = Array2::eye(n);
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..200 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[[p, q]] * m[[p, q]])
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                m[[p, p]] = app - t * apq;
                m[[q, q]] = aqq + t * apq;
                m[[p, q]] = 0.0;
                m[[q, p]] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = m[[r, p]];
                        let arq = m[[r, q]];
                        m[[r, p]] = arp - s * (arq + tau * arp);
                        m[[p, r]] = m[[r, p]];
                        m[[r, q]] = arq + s * (arp - tau * arq);
                        m[[q, r]] = m[[r, q]];
                    }
                }
                for r in 0..n {
                    let vrp = v[[r, p]];
                    let vrq = v[[r, q]];
                    v[[r, p]] = vrp - s * (vrq + tau * vrp);
                    v[[r, q]] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[i, i]].partial_cmp(&m[[j, j]]).unwrap());
    let eigvals: Vec<f64> = order.iter().map(|&i| m[[i, i]]).collect();
    let mut eigvecs = Array2::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        for r in 0..n {
            eigvecs[[r, col]] = v[[r, i]];
        }
    }
    Ok((eigvals, eigvecs))
}

/// Outcome of a normal-equations least-squares solve with rank diagnostics.
pub struct Lstsq {
    pub coef: Vec<f64>,
    /// Numerical rank of the design's Gram matrix.
    pub rank: usize,
    /// Orthonormal null-space basis vectors in coefficient space (empty for
    /// full rank). Nonzero entries identify the collinear columns.
    pub null_space: Vec<Vec<f64>>,
}

/// Solve min ||design c - y||_2 via the eigendecomposition of the Gram
/// matrix. Eigenvalues below `rcond` times the largest are treated as zero;
/// their directions go to the null space and receive zero coefficient
/// (minimum-norm solution).
pub fn lstsq(design: &Array2<f64>, y: &Array1<f64>, rcond: f64) -> Result<Lstsq> {
    let n = design.nrows();
    let p = design.ncols();
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "design has {n} rows but target has {} entries",
            y.len()
        )));
    }
    if p == 0 {
        return Ok(Lstsq { coef: Vec::new(), rank: 0, null_space: Vec::new() });
    }
    let gram = design.t().dot(design);
    let rhs = design.t().dot(y);
    let (eigvals, eigvecs) = jacobi_eigh(&gram)?;
    let max_eig = eigvals.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cutoff = rcond * max_eig;
    let mut coef = vec![0.0; p];
    let mut rank = 0usize;
    let mut null_space = Vec::new();
    for (k, &lam) in eigvals.iter().enumerate() {
        let vk: Vec<f64> = (0..p).map(|r| eigvecs[[r, k]]).collect();
        if lam.abs() <= cutoff || max_eig == 0.0 {
            null_space.push(vk);
            continue;
        }
        rank += 1;
        let proj: f64 = vk.iter().enumerate().map(|(r, &vr)| vr * rhs[r]).sum();
        let w = proj / lam;
        for (r, &vr) in vk.iter().enumerate() {
            coef[r] += w * vr;
        }
    }
    Ok(Lstsq { coef, rank, null_space })
}

/// Project `target` onto the column span of `basis` (minimum-norm
/// coefficients when the basis is rank deficient) and return the residual
/// `target - projection`.
pub fn residual_after_projection(basis: &Array2<f64>, target: &Array1<f64>) -> Result<Array1<f64>> {
    if basis.ncols() == 0 {
        return Ok(target.clone());
    }
    let fit = lstsq(basis, target, DEFAULT_RCOND)?;
    let coef = Array1::from_vec(fit.coef);
    let projection = basis.dot(&coef);
    Ok(target - &projection)
}
