//! Global fitting of latent parameters to a target output through the
//! decoder: BFGS local minimization of the residual sum of squares inside a
//! basin-hopping loop with Metropolis acceptance.
//!
//! All optimization happens in the unit hypercube; an affine map carries unit
//! points to the native latent bounds. Proposals are clipped to the cube and
//! a quadratic penalty discourages excursions during line searches.

use crate::dataset::{Dataset, KeplerDatasetConfig, OutputTransform};
use crate::error::{Error, Result};
use crate::kepler::{kepler_orbit, KeplerParams};
use crate::nn::Mlp;
use crate::params::ParamSpace;
use crate::rng::{self, derive_seed, stream};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const DEFAULT_PENALTY_WEIGHT: f64 = 1e3;
pub const DEFAULT_GRAD_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 500;
pub const TEMPERATURE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Native latent bounds, one (lo, hi) per dimension.
    pub bounds: Vec<(f64, f64)>,
    /// Metropolis temperature in objective units. When absent, set to
    /// one tenth of the objective at the initial local minimum.
    pub temperature: Option<f64>,
    /// Proposal displacement as a fraction of the unit cube.
    pub step_size: f64,
    pub n_hops: usize,
    /// Starting unit-cube point; all 0.5 when absent.
    pub init: Option<Vec<f64>>,
    pub seed: u64,
    pub penalty_weight: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl FitConfig {
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        FitConfig {
            bounds,
            temperature: None,
            step_size: 0.2,
            n_hops: 100,
            init: None,
            seed: 0,
            penalty_weight: DEFAULT_PENALTY_WEIGHT,
            grad_tol: DEFAULT_GRAD_TOL,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.is_empty() {
            return Err(Error::invalid("fit needs at least one latent dimension"));
        }
        for &(lo, hi) in &self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!("bounds must satisfy lo < hi, got ({lo}, {hi})")));
            }
        }
        if let Some(t) = self.temperature {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::invalid(format!("temperature must be positive, got {t}")));
            }
        }
        if !(self.step_size > 0.0 && self.step_size <= 1.0) {
            return Err(Error::invalid(format!(
                "step_size must lie in (0, 1], got {}",
                self.step_size
            )));
        }
        if let Some(init) = &self.init {
            if init.len() != self.bounds.len() {
                return Err(Error::ShapeMismatch(format!(
                    "init has {} coordinates for {} bounds",
                    init.len(),
                    self.bounds.len()
                )));
            }
            if init.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::invalid("init must lie in the unit cube"));
            }
        }
        Ok(())
    }

    /// Affine map from a unit-cube point to native latent coordinates.
    pub fn to_native(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(&self.bounds)
            .map(|(&u, &(lo, hi))| lo + u * (hi - lo))
            .collect()
    }
}

/// One basin-hopping step: the proposed start, the local minimum it reached,
/// its objective, and whether the chain moved there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopRecord {
    pub proposal: Vec<f64>,
    pub local_min: Vec<f64>,
    pub objective: f64,
    pub accepted: bool,
    /// True when the local search aborted on a failed line search.
    pub line_search_failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Best point in native latent coordinates.
    pub best_latent: Vec<f64>,
    /// Best point in unit-cube coordinates.
    pub best_unit: Vec<f64>,
    pub best_objective: f64,
    /// Initial minimization followed by one record per hop.
    pub trace: Vec<HopRecord>,
    pub evaluations: usize,
    /// Temperature actually used.
    pub temperature: f64,
}

impl FitResult {
    pub fn validate(&self) -> Result<()> {
        let min = self
            .trace
            .iter()
            .map(|h| h.objective)
            .fold(f64::INFINITY, f64::min);
        if self.best_objective != min {
            return Err(Error::invalid(format!(
                "best objective {} does not equal the trace minimum {min}",
                self.best_objective
            )));
        }
        Ok(())
    }
}

/// Per-dimension min/max of the training latents, widened by 10% of the
/// range on each side.
pub fn latent_bounds(model: &Mlp, ds: &Dataset) -> Result<Vec<(f64, f64)>> {
    let (tx, _) = ds.train_xy();
    let latents = model.encode(&tx)?;
    let k = latents.ncols();
    let mut bounds = Vec::with_capacity(k);
    for j in 0..k {
        let col = latents.column(j);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in col.iter() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let range = hi - lo;
        if !(range > 0.0) {
            return Err(Error::invalid(format!(
                "latent dimension {j} has zero range; bounds are degenerate"
            )));
        }
        bounds.push((lo - 0.1 * range, hi + 0.1 * range));
    }
    Ok(bounds)
}

/// Quadratic out-of-cube penalty and its gradient contribution.
fn cube_penalty(u: &[f64], weight: f64, grad: &mut [f64]) -> f64 {
    let mut pen = 0.0;
    for (i, &v) in u.iter().enumerate() {
        let excess = (v - 0.5).abs() - 0.5;
        if excess > 0.0 {
            pen += weight * excess * excess;
            grad[i] += 2.0 * weight * excess * (v - 0.5).signum();
        }
    }
    pen
}

/// Residual sum of squares between decode(latent(u)) and the target, plus
/// the out-of-cube penalty. Returns the value and its gradient with respect
/// to u (decoder backprop composed with the affine bounds map).
pub fn objective(
    model: &Mlp,
    target: &[f64],
    u: &[f64],
    bounds: &[(f64, f64)],
    penalty_weight: f64,
) -> Result<(f64, Vec<f64>)> {
    let k = bounds.len();
    if u.len() != k {
        return Err(Error::ShapeMismatch(format!("{} coordinates for {k} bounds", u.len())));
    }
    let native: Vec<f64> = u
        .iter()
        .zip(bounds)
        .map(|(&v, &(lo, hi))| lo + v * (hi - lo))
        .collect();
    let latent = Array2::from_shape_vec((1, k), native).unwrap();
    let cache = model.decode_cached(&latent)?;
    let out = cache.output();
    if out.ncols() != target.len() {
        return Err(Error::ShapeMismatch(format!(
            "decoder yields {} outputs, target has {}",
            out.ncols(),
            target.len()
        )));
    }
    let mut rss = 0.0;
    let mut cot = Array2::zeros((1, target.len()));
    for (j, &t) in target.iter().enumerate() {
        let r = out[[0, j]] - t;
        rss += r * r;
        cot[[0, j]] = 2.0 * r;
    }
    let grads = model.backward(&cache, &cot)?;
    let mut du: Vec<f64> = (0..k)
        .map(|i| grads.dx[[0, i]] * (bounds[i].1 - bounds[i].0))
        .collect();
    let pen = cube_penalty(u, penalty_weight, &mut du);
    Ok((rss + pen, du))
}

/// Outcome of one BFGS run.
#[derive(Debug, Clone, PartialEq)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub line_search_failed: bool,
}

/// Quasi-Newton minimization with an inverse-Hessian BFGS update and an
/// Armijo backtracking line search. Stops when the gradient norm falls below
/// `grad_tol` or after `max_iters` iterations; a failed line search returns
/// the best point found, flagged.
pub fn bfgs_minimize(
    f: &mut impl FnMut(&[f64]) -> (f64, Vec<f64>),
    x0: &[f64],
    grad_tol: f64,
    max_iters: usize,
) -> BfgsOutcome {
    const ARMIJO_C: f64 = 1e-4;
    const SHRINK: f64 = 0.5;
    const MAX_BACKTRACKS: usize = 60;
    let n = x0.len();
    let mut x = Array1::from_vec(x0.to_vec());
    let (mut fx, g0) = f(x0);
    let mut g = Array1::from_vec(g0);
    let mut h: Array2<f64> = Array2::eye(n);
    let mut best_x = x.clone();
    let mut best_f = fx;
    let mut line_search_failed = false;
    let mut iterations = 0;

    for _ in 0..max_iters {
        let g_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if g_norm < grad_tol || !g_norm.is_finite() {
            break;
        }
        iterations += 1;
        let mut p = -h.dot(&g);
        let mut slope: f64 = p.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            // Not a descent direction; restart from steepest descent.
            h = Array2::eye(n);
            p = -g.clone();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand = &x + &(t * &p);
            let cand_slice = cand.as_slice().unwrap();
            let (fc, gc) = f(cand_slice);
            if fc.is_finite() && fc <= fx + ARMIJO_C * t * slope {
                accepted = Some((cand, fc, Array1::from_vec(gc)));
                break;
            }
            t *= SHRINK;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            line_search_failed = true;
            break;
        };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy: f64 = s.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
        let s_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > 1e-12 * s_norm * y_norm && sy > 0.0 {
            // Inverse BFGS update: H <- (I - r s y') H (I - r y s') + r s s'.
            let rho = 1.0 / sy;
            let mut a = Array2::eye(n);
            for i in 0..n {
                for j in 0..n {
                    a[[i, j]] -= rho * s[i] * y[j];
                }
            }
            let mut h_new = a.dot(&h).dot(&a.t());
            for i in 0..n {
                for j in 0..n {
                    h_new[[i, j]] += rho * s[i] * s[j];
                }
            }
            h = h_new;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        if fx < best_f {
            best_f = fx;
            best_x = x.clone();
        }
    }
    if fx < best_f {
        best_f = fx;
        best_x = x.clone();
    }
    let grad_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    BfgsOutcome {
        x: best_x.to_vec(),
        f: best_f,
        grad_norm,
        iterations,
        line_search_failed,
    }
}

/// Metropolis acceptance: improvements always pass; a deterioration of df at
/// temperature t passes with probability exp(-df / t).
pub fn metropolis_accept(
    df: f64,
    t: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> bool {
    if df <= 0.0 {
        return true;
    }
    let p = (-df / t).exp();
    rng::uniform(rng) < p
}

/// Basin hopping over the unit cube: local-minimize from the start point,
/// then repeatedly displace, re-minimize, and Metropolis-accept. The global
/// best is tracked independently of chain acceptance.
pub fn basin_hop(
    f: &mut impl FnMut(&[f64]) -> (f64, Vec<f64>),
    cfg: &FitConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    let dim = cfg.dim();
    let mut evaluations = 0usize;
    let init = cfg.init.clone().unwrap_or_else(|| vec![0.5; dim]);
    let mut rng = rng::seeded(derive_seed(cfg.seed, &[stream::FIT]));

    let mut eval = |x: &[f64]| {
        evaluations += 1;
        f(x)
    };
    let first = bfgs_minimize(&mut eval, &init, cfg.grad_tol, cfg.max_iters);
    let temperature = cfg
        .temperature
        .unwrap_or_else(|| (0.1 * first.f).max(TEMPERATURE_FLOOR));
    let mut trace = vec![HopRecord {
        proposal: init.clone(),
        local_min: first.x.clone(),
        objective: first.f,
        accepted: true,
        line_search_failed: first.line_search_failed,
    }];
    let mut current = (first.x.clone(), first.f);
    let mut best = (first.x, first.f);

    for _hop in 0..cfg.n_hops {
        let proposal: Vec<f64> = current
            .0
            .iter()
            .map(|&v| {
                (v + rng::uniform_in(&mut rng, -cfg.step_size, cfg.step_size)).clamp(0.0, 1.0)
            })
            .collect();
        let local = bfgs_minimize(&mut eval, &proposal, cfg.grad_tol, cfg.max_iters);
        let df = local.f - current.1;
        let accepted = metropolis_accept(df, temperature, &mut rng);
        trace.push(HopRecord {
            proposal,
            local_min: local.x.clone(),
            objective: local.f,
            accepted,
            line_search_failed: local.line_search_failed,
        });
        if local.f < best.1 {
            best = (local.x.clone(), local.f);
        }
        if accepted {
            current = (local.x, local.f);
        }
    }

    Ok(FitResult {
        best_latent: cfg.to_native(&best.0),
        best_unit: best.0,
        best_objective: best.1,
        trace,
        evaluations,
        temperature,
    })
}

/// Fit the latent parameters of a trained model to a (transformed) target.
pub fn fit_latent(model: &Mlp, target: &[f64], cfg: &FitConfig) -> Result<FitResult> {
    if cfg.dim() != model.spec.latent_dim() {
        return Err(Error::ShapeMismatch(format!(
            "{} bounds for a latent width of {}",
            cfg.dim(),
            model.spec.latent_dim()
        )));
    }
    let mut obj = |u: &[f64]| {
        objective(model, target, u, &cfg.bounds, cfg.penalty_weight)
            .expect("shapes validated before the loop")
    };
    basin_hop(&mut obj, cfg)
}

/// Central finite-difference gradient of a scalar function.
pub fn fd_gradient(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let up = f(&probe);
        probe[i] = x[i] - step;
        let down = f(&probe);
        probe[i] = x[i];
        grad.push((up - down) / (2.0 * step));
    }
    grad
}

/// Native-space contrast objective: RSS between the transformed orbit of the
/// four native orbit parameters (unit-cube coordinates) and a target row.
/// Gradients come from central finite differences; invalid (unbounded)
/// orbits map to a large objective that grows with the eccentricity so the
/// search is steered back.
pub fn kepler_native_objective<'a>(
    target: &'a [f64],
    transform: &'a OutputTransform,
    space: &'a ParamSpace,
    cfg: &'a KeplerDatasetConfig,
    penalty_weight: f64,
) -> impl FnMut(&[f64]) -> (f64, Vec<f64>) + 'a {
    let scalar = move |u: &[f64]| -> f64 {
        let mut pen_grad = vec![0.0; u.len()];
        let pen = cube_penalty(u, penalty_weight, &mut pen_grad);
        let clipped: Vec<f64> = u.iter().map(|&v| v.clamp(0.0, 1.0)).collect();
        let native = space.scale(&clipped).expect("clipped point is in the cube");
        let params = match KeplerParams::new(native[0], native[1], native[2], native[3], cfg.g) {
            Ok(p) => p,
            Err(_) => return 1e9 + pen,
        };
        match kepler_orbit(&params, cfg.n_theta) {
            Ok(orbit) => match transform.apply(&orbit.radii) {
                Ok(y) => {
                    let rss: f64 = y
                        .iter()
                        .zip(target)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    rss + pen
                }
                Err(_) => 1e9 + pen,
            },
            Err(Error::UnboundedOrbit { e }) => 1e9 * e + pen,
            Err(_) => 1e9 + pen,
        }
    };
    let mut scalar_for_grad = scalar;
    move |u: &[f64]| {
        let f = scalar_for_grad(u);
        let g = fd_gradient(&mut scalar_for_grad, u, 1e-6);
        (f, g)
    }
}

/// fit.json payload: configuration echo plus the result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub config: FitConfig,
    pub result: FitResult,
}

pub fn write_fit_json(report: &FitReport, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// CSV trace: hop, objective, accepted, line_search_failed, then the local
/// minimum coordinates.
pub fn write_fit_trace_csv(result: &FitResult, path: &Path) -> Result<()> {
    let dim = result.best_unit.len();
    let mut out = String::from("hop,objective,accepted,line_search_failed");
    for i in 0..dim {
        out.push_str(&format!(",u{i}"));
    }
    out.push('\n');
    for (hop, rec) in result.trace.iter().enumerate() {
        out.push_str(&format!(
            "{hop},{},{},{}",
            rec.objective, rec.accepted, rec.line_search_failed
        ));
        for v in &rec.local_min {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{split_indices, Provenance};
    use crate::nn::{Activation, MlpSpec};
    use crate::params::{ParamSpace, ParamSpec};
    use crate::sobol::sobol_points;
    use std::collections::BTreeMap;

    fn linear_model(weight: f64, bias: f64) -> Mlp {
        let spec = MlpSpec::new(vec![2, 2, 2], vec![Activation::Linear, Activation::Linear], 1)
            .unwrap();
        let mut m = Mlp::init(spec, 0).unwrap();
        m.weights[0] = Array2::eye(2) * weight;
        m.weights[1] = Array2::eye(2);
        m.biases[0].fill(bias);
        m.biases[1].fill(0.0);
        m
    }

    fn dataset_with_endpoints() -> Dataset {
        let n = 64;
        let mut x = sobol_points(2, n, 1).unwrap();
        x[[0, 0]] = 0.0;
        x[[0, 1]] = 0.0;
        x[[1, 0]] = 1.0;
        x[[1, 1]] = 1.0;
        let y = x.clone();
        let (train_idx, val_idx) = split_indices(n);
        Dataset {
            x,
            y,
            train_idx,
            val_idx,
            transform: OutputTransform::identity(),
            space: ParamSpace::new(vec![
                ParamSpec::free("a", 0.0, 1.0),
                ParamSpec::free("b", 0.0, 1.0),
            ])
            .unwrap(),
            provenance: Provenance {
                seed: 0,
                skip: 1,
                n_raw: n,
                retained: n,
                rejected: BTreeMap::new(),
            },
        }
    }

    #[test]
    fn bounds_widen_by_ten_percent_each_side() {
        // Encoder latent = 2x - 1 spans [-1, 1] over training inputs that
        // include both cube corners, so the bounds come out (-1.2, 1.2).
        let model = linear_model(2.0, -1.0);
        let ds = dataset_with_endpoints();
        let bounds = latent_bounds(&model, &ds).unwrap();
        for &(lo, hi) in &bounds {
            assert!((lo + 1.2).abs() < 1e-12, "lo = {lo}");
            assert!((hi - 1.2).abs() < 1e-12, "hi = {hi}");
        }
        // Bounds contain every training latent.
        let (tx, _) = ds.train_xy();
        let latents = model.encode(&tx).unwrap();
        for row in latents.rows() {
            for (j, &v) in row.iter().enumerate() {
                assert!(bounds[j].0 <= v && v <= bounds[j].1);
            }
        }
        // Deterministic.
        assert_eq!(bounds, latent_bounds(&model, &ds).unwrap());
    }

    #[test]
    fn degenerate_latent_dimension_is_an_error() {
        let model = linear_model(0.0, 0.3);
        let ds = dataset_with_endpoints();
        assert!(latent_bounds(&model, &ds).is_err());
    }

    #[test]
    fn objective_is_zero_with_zero_gradient_at_perfect_fit() {
        let model = linear_model(1.0, 0.0);
        let bounds = vec![(0.0, 1.0), (0.0, 1.0)];
        let u = vec![0.3, 0.7];
        let latent = Array2::from_shape_vec((1, 2), u.clone()).unwrap();
        let target: Vec<f64> = model.decode(&latent).unwrap().row(0).to_vec();
        let (f, g) = objective(&model, &target, &u, &bounds, DEFAULT_PENALTY_WEIGHT).unwrap();
        assert_eq!(f, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn objective_gradient_matches_finite_differences() {
        let spec = MlpSpec::new(
            vec![3, 5, 2, 6, 4],
            vec![Activation::Tanh, Activation::Linear, Activation::Tanh, Activation::Linear],
            2,
        )
        .unwrap();
        let model = Mlp::init(spec, 21).unwrap();
        let bounds = vec![(-1.5, 2.0), (0.5, 3.0)];
        let target = vec![0.2, -0.1, 0.4, 0.05];
        // Points inside and outside the cube (the penalty is C1).
        for u in [vec![0.3, 0.6], vec![0.9, 0.1], vec![1.2, -0.15]] {
            let (_, g) = objective(&model, &target, &u, &bounds, DEFAULT_PENALTY_WEIGHT).unwrap();
            let mut scalar = |p: &[f64]| {
                objective(&model, &target, p, &bounds, DEFAULT_PENALTY_WEIGHT)
                    .unwrap()
                    .0
            };
            let fd = fd_gradient(&mut scalar, &u, 1e-5);
            for (a, b) in g.iter().zip(&fd) {
                let denom = a.abs().max(b.abs()).max(1e-8);
                assert!((a - b).abs() / denom < 1e-4, "analytic {a} vs fd {b} at {u:?}");
            }
        }
    }

    #[test]
    fn doubling_residuals_quadruples_the_objective() {
        let model = linear_model(1.0, 0.0);
        let bounds = vec![(0.0, 1.0), (0.0, 1.0)];
        let u = vec![0.4, 0.6];
        let latent = Array2::from_shape_vec((1, 2), u.clone()).unwrap();
        let out: Vec<f64> = model.decode(&latent).unwrap().row(0).to_vec();
        let target1: Vec<f64> = out.iter().map(|&v| v + 0.1).collect();
        let target2: Vec<f64> = out.iter().map(|&v| v + 0.2).collect();
        let (f1, _) = objective(&model, &target1, &u, &bounds, 0.0).unwrap();
        let (f2, _) = objective(&model, &target2, &u, &bounds, 0.0).unwrap();
        assert!((f2 - 4.0 * f1).abs() < 1e-12);
    }

    #[test]
    fn bfgs_solves_a_quadratic_exactly() {
        let c = [0.3, -1.7, 2.5];
        let mut f = |x: &[f64]| {
            let v: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
            let g: Vec<f64> = x.iter().zip(&c).map(|(a, b)| 2.0 * (a - b)).collect();
            (v, g)
        };
        let out = bfgs_minimize(&mut f, &[10.0, 10.0, 10.0], 1e-10, 500);
        for (a, b) in out.x.iter().zip(&c) {
            assert!((a - b).abs() < 1e-8, "{:?}", out.x);
        }
        assert!(!out.line_search_failed);
    }

    #[test]
    fn bfgs_solves_rosenbrock() {
        let mut f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            (v, g)
        };
        let out = bfgs_minimize(&mut f, &[-1.2, 1.0], 1e-10, 500);
        assert!((out.x[0] - 1.0).abs() < 1e-5, "{:?}", out.x);
        assert!((out.x[1] - 1.0).abs() < 1e-5, "{:?}", out.x);
    }

    #[test]
    fn bfgs_returns_immediately_at_a_stationary_start() {
        let mut f = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>(), vec![0.0; x.len()]);
        let out = bfgs_minimize(&mut f, &[0.7, -0.3], 1e-8, 500);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.x, vec![0.7, -0.3]);
    }

    #[test]
    fn metropolis_rules() {
        let mut rng = rng::seeded(1);
        // Improvements and ties always pass.
        for _ in 0..100 {
            assert!(metropolis_accept(-0.5, 1.0, &mut rng));
            assert!(metropolis_accept(0.0, 1.0, &mut rng));
        }
        // df = T accepts at rate 1/e.
        let mut rng = rng::seeded(2);
        let trials = 10_000;
        let accepted = (0..trials)
            .filter(|_| metropolis_accept(1.0, 1.0, &mut rng))
            .count();
        let rate = accepted as f64 / trials as f64;
        assert!((rate - (-1.0f64).exp()).abs() < 0.03, "rate {rate}");
    }

    /// Two-basin test function on the unit square with minima near
    /// u = (0.2, 0.5) and u = (0.8, 0.5); the right basin is deeper.
    fn two_basin(u: &[f64]) -> (f64, Vec<f64>) {
        let (x, y) = (u[0], u[1]);
        let left = (x - 0.2) * (x - 0.2);
        let right = (x - 0.8) * (x - 0.8);
        // Smooth minimum of the two wells plus a centering term in y.
        let beta = 40.0;
        let e_l = (-beta * left).exp();
        let e_r = (-beta * (right - 0.02)).exp();
        let soft = -(e_l + e_r).ln() / beta;
        let gy = (y - 0.5) * (y - 0.5);
        let dsoft_dx = (e_l * 2.0 * (x - 0.2) + e_r * 2.0 * (x - 0.8)) / (e_l + e_r);
        (soft + gy, vec![dsoft_dx, 2.0 * (y - 0.5)])
    }

    #[test]
    fn basin_hop_finds_the_deeper_basin_and_tracks_the_best() {
        let mut cfg = FitConfig::new(vec![(0.0, 1.0), (0.0, 1.0)]);
        cfg.n_hops = 40;
        cfg.seed = 3;
        cfg.temperature = Some(0.05);
        cfg.step_size = 0.45;
        cfg.init = Some(vec![0.2, 0.5]);
        let result = basin_hop(&mut two_basin, &cfg).unwrap();
        result.validate().unwrap();
        assert!((result.best_unit[0] - 0.8).abs() < 1e-4, "{:?}", result.best_unit);
        assert_eq!(result.trace.len(), cfg.n_hops + 1);
        // Global best is non-increasing along the trace.
        let mut running = f64::INFINITY;
        for rec in &result.trace {
            running = running.min(rec.objective);
        }
        assert_eq!(running, result.best_objective);
        // Improving hops are always accepted.
        let mut cur = f64::INFINITY;
        for rec in &result.trace {
            if rec.objective < cur {
                assert!(rec.accepted, "improving hop rejected");
            }
            if rec.accepted {
                cur = rec.objective;
            }
        }
        assert!(result.evaluations > 0);
    }

    #[test]
    fn basin_hop_is_bit_reproducible() {
        let mut cfg = FitConfig::new(vec![(0.0, 1.0), (0.0, 1.0)]);
        cfg.n_hops = 25;
        cfg.seed = 11;
        let a = basin_hop(&mut two_basin, &cfg).unwrap();
        let b = basin_hop(&mut two_basin, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fit_latent_recovers_a_known_latent_point() {
        let model = linear_model(1.0, 0.0);
        let latent_true = Array2::from_shape_vec((1, 2), vec![0.3, 0.7]).unwrap();
        let target: Vec<f64> = model.decode(&latent_true).unwrap().row(0).to_vec();
        let mut cfg = FitConfig::new(vec![(0.0, 1.0), (0.0, 1.0)]);
        cfg.n_hops = 5;
        let result = fit_latent(&model, &target, &cfg).unwrap();
        assert!(result.best_objective < 1e-15);
        assert!((result.best_latent[0] - 0.3).abs() < 1e-7, "{:?}", result.best_latent);
        assert!((result.best_latent[1] - 0.7).abs() < 1e-7, "{:?}", result.best_latent);
    }

    #[test]
    fn native_map_applies_the_bounds() {
        let cfg = FitConfig::new(vec![(-2.0, 2.0), (1.0, 3.0)]);
        let native = cfg.to_native(&[0.5, 0.0]);
        assert_eq!(native, vec![0.0, 1.0]);
    }

    #[test]
    fn kepler_native_objective_is_finite_and_matches_fd() {
        let space = crate::dataset::kepler_param_space();
        let cfg = KeplerDatasetConfig::default();
        let transform = OutputTransform { log: true, min: -3.0, max: 1.0 };
        // A valid target from an in-filter parameter point.
        let p = KeplerParams::new(0.3, 0.81, 0.9, 1.0, 0.5).unwrap();
        let orbit = kepler_orbit(&p, cfg.n_theta).unwrap();
        let target = transform.apply(&orbit.radii).unwrap();
        let mut obj = kepler_native_objective(&target, &transform, &space, &cfg, 1e3);
        let u = space.unscale(&[0.3, 0.81, 0.9, 1.0]).unwrap();
        let (f, g) = obj(&u);
        assert!(f < 1e-20, "objective at the generating point: {f}");
        assert!(g.iter().all(|v| v.is_finite()));
        let (f2, _) = obj(&[0.9, 0.2, 0.9, 0.9]);
        assert!(f2.is_finite());
    }

    #[test]
    fn fit_report_roundtrips_and_trace_csv_is_stable() {
        let mut cfg = FitConfig::new(vec![(0.0, 1.0), (0.0, 1.0)]);
        cfg.n_hops = 8;
        cfg.seed = 5;
        let result = basin_hop(&mut two_basin, &cfg).unwrap();
        let report = FitReport { config: cfg, result };
        let dir = tempfile::tempdir().unwrap();
        let json_path = dir.path().join("fit.json");
        let csv_path = dir.path().join("trace.csv");
        write_fit_json(&report, &json_path).unwrap();
        write_fit_trace_csv(&report.result, &csv_path).unwrap();
        let parsed: FitReport = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(parsed.result, report.result);
        let csv1 = std::fs::read(&csv_path).unwrap();
        write_fit_trace_csv(&report.result, &csv_path).unwrap();
        assert_eq!(csv1, std::fs::read(&csv_path).unwrap());
        let text = String::from_utf8(csv1).unwrap();
        assert_eq!(text.lines().count(), 1 + report.result.trace.len());
    }
}
