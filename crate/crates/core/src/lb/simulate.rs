//! Fixed-step RK4 integration of the network.

use super::{lb_derivative_into, Connectivity, LbParams};
use crate::error::{Error, Result};
use crate::rng;
use ndarray::Array2;

pub const DEFAULT_DT_MS: f64 = 0.1;
pub const DEFAULT_DURATION_MS: f64 = 300_000.0;

/// Initial condition: either an explicit state or a seed for a randomized
/// start near the attractor.
#[derive(Debug, Clone)]
pub enum LbInit {
    Seed(u64),
    State {
        v: Vec<f64>,
        z: Vec<f64>,
        w: Vec<f64>,
    },
}

/// Recorded state trajectories on a uniform time grid (ms).
#[derive(Debug, Clone, PartialEq)]
pub struct RegionTimeSeries {
    /// Time stamps in ms, one per recorded column.
    pub t: Vec<f64>,
    /// N x T trajectories.
    pub v: Array2<f64>,
    pub z: Array2<f64>,
    pub w: Array2<f64>,
}

impl RegionTimeSeries {
    pub fn region_count(&self) -> usize {
        self.v.nrows()
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Copy of the series with the first `t_ms` of samples dropped.
    pub fn discard_initial(&self, t_ms: f64) -> Result<RegionTimeSeries> {
        let start = self.t.iter().position(|&t| t >= t_ms).ok_or_else(|| {
            Error::invalid(format!(
                "cannot discard {t_ms} ms: series ends at {} ms",
                self.t.last().copied().unwrap_or(0.0)
            ))
        })?;
        Ok(RegionTimeSeries {
            t: self.t[start..].to_vec(),
            v: self.v.slice(ndarray::s![.., start..]).to_owned(),
            z: self.z.slice(ndarray::s![.., start..]).to_owned(),
            w: self.w.slice(ndarray::s![.., start..]).to_owned(),
        })
    }
}

fn initial_state(n: usize, p: &LbParams, init: &LbInit) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    match init {
        LbInit::State { v, z, w } => {
            if v.len() != n || z.len() != n || w.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "initial state sized {}/{}/{} for {n} regions",
                    v.len(),
                    z.len(),
                    w.len()
                )));
            }
            if v.iter().chain(z).chain(w).any(|x| !x.is_finite()) {
                return Err(Error::invalid("non-finite initial state"));
            }
            Ok((v.clone(), z.clone(), w.clone()))
        }
        LbInit::Seed(seed) => {
            // V starts slightly below threshold (its stationary mean sits
            // near -0.1 at reference parameters); W starts at the potassium
            // gate's quasi-equilibrium for that V.
            let mut r = rng::seeded(*seed);
            let v: Vec<f64> = (0..n).map(|_| rng::uniform_in(&mut r, -0.25, 0.05)).collect();
            let z: Vec<f64> = (0..n).map(|_| rng::uniform_in(&mut r, -0.1, 0.1)).collect();
            let w: Vec<f64> = v
                .iter()
                .map(|&vi| 0.5 * (1.0 + ((vi - p.t_k) / p.delta_k).tanh()))
                .collect();
            Ok((v, z, w))
        }
    }
}

/// Integrate and record every `record_every`-th step (plus the initial
/// state). The step count is duration/dt rounded to nearest.
pub fn lb_simulate_recorded(
    p: &LbParams,
    conn: &Connectivity,
    duration_ms: f64,
    dt_ms: f64,
    record_every: usize,
    init: &LbInit,
) -> Result<RegionTimeSeries> {
    if !(dt_ms.is_finite() && dt_ms > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt_ms}")));
    }
    if !(duration_ms.is_finite() && duration_ms >= dt_ms) {
        return Err(Error::invalid(format!(
            "duration {duration_ms} ms must cover at least one step of {dt_ms} ms"
        )));
    }
    if record_every == 0 {
        return Err(Error::invalid("record_every must be >= 1"));
    }
    let n = conn.region_count();
    let n_steps = (duration_ms / dt_ms).round() as usize;
    let n_recorded = n_steps / record_every + 1;

    let (mut v, mut z, mut w) = initial_state(n, p, init)?;

    let mut t_grid = Vec::with_capacity(n_recorded);
    let mut v_rec = Array2::zeros((n, n_recorded));
    let mut z_rec = Array2::zeros((n, n_recorded));
    let mut w_rec = Array2::zeros((n, n_recorded));

    // RK4 stage buffers.
    let mut qv = vec![0.0; n];
    let mut k1 = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();

    let record = |col: usize, step: usize, v: &[f64], z: &[f64], w: &[f64],
                      t_grid: &mut Vec<f64>,
                      v_rec: &mut Array2<f64>,
                      z_rec: &mut Array2<f64>,
                      w_rec: &mut Array2<f64>| {
        t_grid.push(step as f64 * dt_ms);
        for i in 0..n {
            v_rec[[i, col]] = v[i];
            z_rec[[i, col]] = z[i];
            w_rec[[i, col]] = w[i];
        }
    };

    record(0, 0, &v, &z, &w, &mut t_grid, &mut v_rec, &mut z_rec, &mut w_rec);
    let mut col = 1;

    for step in 1..=n_steps {
        lb_derivative_into(&v, &z, &w, p, conn, &mut qv, &mut k1.0, &mut k1.1, &mut k1.2);
        stage(&v, &z, &w, &k1, 0.5 * dt_ms, &mut tmp);
        lb_derivative_into(&tmp.0, &tmp.1, &tmp.2, p, conn, &mut qv, &mut k2.0, &mut k2.1, &mut k2.2);
        stage(&v, &z, &w, &k2, 0.5 * dt_ms, &mut tmp);
        lb_derivative_into(&tmp.0, &tmp.1, &tmp.2, p, conn, &mut qv, &mut k3.0, &mut k3.1, &mut k3.2);
        stage(&v, &z, &w, &k3, dt_ms, &mut tmp);
        lb_derivative_into(&tmp.0, &tmp.1, &tmp.2, p, conn, &mut qv, &mut k4.0, &mut k4.1, &mut k4.2);

        let h6 = dt_ms / 6.0;
        let mut finite = true;
        for i in 0..n {
            v[i] += h6 * (k1.0[i] + 2.0 * k2.0[i] + 2.0 * k3.0[i] + k4.0[i]);
            z[i] += h6 * (k1.1[i] + 2.0 * k2.1[i] + 2.0 * k3.1[i] + k4.1[i]);
            w[i] += h6 * (k1.2[i] + 2.0 * k2.2[i] + 2.0 * k3.2[i] + k4.2[i]);
            finite &= v[i].is_finite() && z[i].is_finite() && w[i].is_finite();
        }
        if !finite {
            return Err(Error::Divergence { t_ms: step as f64 * dt_ms });
        }
        if step % record_every == 0 {
            record(col, step, &v, &z, &w, &mut t_grid, &mut v_rec, &mut z_rec, &mut w_rec);
            col += 1;
        }
    }
    debug_assert_eq!(col, n_recorded);

    Ok(RegionTimeSeries { t: t_grid, v: v_rec, z: z_rec, w: w_rec })
}

/// Integrate recording every step.
pub fn lb_simulate(
    p: &LbParams,
    conn: &Connectivity,
    duration_ms: f64,
    dt_ms: f64,
    init: &LbInit,
) -> Result<RegionTimeSeries> {
    lb_simulate_recorded(p, conn, duration_ms, dt_ms, 1, init)
}

#[inline]
fn stage(
    v: &[f64],
    z: &[f64],
    w: &[f64],
    k: &(Vec<f64>, Vec<f64>, Vec<f64>),
    h: f64,
    out: &mut (Vec<f64>, Vec<f64>, Vec<f64>),
) {
    for i in 0..v.len() {
        out.0[i] = v[i] + h * k.0[i];
        out.1[i] = z[i] + h * k.1[i];
        out.2[i] = w[i] + h * k.2[i];
    }
}

/// True when the mean over regions of the V amplitude (max - min) strictly
/// exceeds `amp_threshold`. Expects the transient to be discarded already.
pub fn is_oscillatory(ts: &RegionTimeSeries, amp_threshold: f64) -> bool {
    let n = ts.region_count();
    if n == 0 || ts.is_empty() {
        return false;
    }
    let mut mean_amp = 0.0;
    for i in 0..n {
        let row = ts.v.row(i);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in row {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        mean_amp += hi - lo;
    }
    mean_amp /= n as f64;
    mean_amp > amp_threshold
}
