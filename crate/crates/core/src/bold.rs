//! Hemodynamic (Balloon-Windkessel) BOLD conversion, zero-phase bandpass,
//! and Pearson functional connectivity.
//!
//! Per region, the neural drive u(t) = V(t) feeds the four-state hemodynamic
//! system (Friston et al. 2003 formulation, canonical parameter values):
//!
//! ```text
//! ds/dt = u - kappa s - gamma (f - 1)
//! df/dt = s
//! tau dv/dt = f - v^(1/alpha)
//! tau dq/dt = f E(f)/rho - v^(1/alpha) q / v,   E(f) = 1 - (1 - rho)^(1/f)
//! y = v0 (k1 (1 - q) + k2 (1 - q/v) + k3 (1 - v))
//! ```
//!
//! f, v, q are integrated as log-states so they stay positive wherever the
//! fractional powers are evaluated; s is integrated directly. The BOLD series
//! is sampled every TR, mean-removed, bandpassed with an ideal zero-phase FFT
//! mask, and correlated across regions.

use crate::error::{Error, Result};
use crate::lb::RegionTimeSeries;
use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

/// Fields omitted from a serialized config fall back to the canonical
/// defaults, so partial overrides stay valid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoldConfig {
    /// Signal decay rate (1/s).
    pub kappa: f64,
    /// Flow-dependent elimination rate (1/s).
    pub gamma: f64,
    /// Hemodynamic transit time (s).
    pub tau: f64,
    /// Grubb's vessel stiffness exponent.
    pub alpha: f64,
    /// Resting oxygen extraction fraction.
    pub rho: f64,
    /// Resting venous blood volume fraction.
    pub v0: f64,
    /// Initial hemodynamic state (s, f, v, q).
    pub init: [f64; 4],
    /// BOLD sampling interval (s).
    pub tr: f64,
    /// Bandpass corner frequencies (Hz).
    pub band: (f64, f64),
    /// Initial window of BOLD volumes dropped after conversion (s); covers
    /// both the neural and the hemodynamic settling transients.
    pub transient_discard: f64,
}

impl Default for BoldConfig {
    fn default() -> Self {
        BoldConfig {
            kappa: 0.65,
            gamma: 0.41,
            tau: 0.98,
            alpha: 0.32,
            rho: 0.34,
            v0: 0.02,
            init: [0.0, 1.0, 1.0, 1.0],
            tr: 0.8,
            band: (0.01, 0.1),
            transient_discard: 20.0,
        }
    }
}

impl BoldConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.band;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
            return Err(Error::invalid(format!("bandpass corners must satisfy 0 < f_lo < f_hi, got ({lo}, {hi})")));
        }
        if !(self.tr.is_finite() && self.tr > 0.0) {
            return Err(Error::invalid(format!("TR must be positive, got {}", self.tr)));
        }
        for (name, v) in [
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("tau", self.tau),
            ("alpha", self.alpha),
            ("rho", self.rho),
            ("v0", self.v0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("hemodynamic parameter {name} must be positive, got {v}")));
            }
        }
        if self.rho >= 1.0 {
            return Err(Error::invalid(format!("rho must be below 1, got {}", self.rho)));
        }
        if self.init[1] <= 0.0 || self.init[2] <= 0.0 || self.init[3] <= 0.0 {
            return Err(Error::invalid("initial f, v, q must be positive"));
        }
        if self.transient_discard < 0.0 {
            return Err(Error::invalid("transient_discard must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FCMatrix {
    /// N x N Pearson correlations.
    pub c: Array2<f64>,
}

impl FCMatrix {
    pub fn region_count(&self) -> usize {
        self.c.nrows()
    }

    /// Strict upper triangle, row-major: (0,1), (0,2), ..., (N-2,N-1).
    pub fn flatten_upper(&self) -> Vec<f64> {
        let n = self.c.nrows();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.c[[i, j]]);
            }
        }
        out
    }

    /// Mean of the strict upper triangle.
    pub fn mean_fc(&self) -> f64 {
        let flat = self.flatten_upper();
        if flat.is_empty() {
            return 0.0;
        }
        flat.iter().sum::<f64>() / flat.len() as f64
    }
}

/// Hemodynamic state in integration coordinates: (s, ln f, ln v, ln q).
#[derive(Clone, Copy)]
struct HemoState([f64; 4]);

fn hemo_derivative(x: &HemoState, u: f64, cfg: &BoldConfig) -> [f64; 4] {
    let [s, lf, lv, lq] = x.0;
    let f = lf.exp();
    let v = lv.exp();
    let inv_alpha = 1.0 / cfg.alpha;
    let outflow = v.powf(inv_alpha); // v^(1/alpha)
    let extraction = 1.0 - (1.0 - cfg.rho).powf(1.0 / f);
    [
        u - cfg.kappa * s - cfg.gamma * (f - 1.0),
        s / f,
        (f - outflow) / (cfg.tau * v),
        (f * extraction / cfg.rho - outflow * lq.exp() / v) / (cfg.tau * lq.exp()),
    ]
}

/// Integrate the hemodynamic system over the neural grid, returning the BOLD
/// signal on that same grid. `u` is the neural drive, `dt_s` its spacing in
/// seconds.
fn balloon_windkessel(u: &[f64], dt_s: f64, cfg: &BoldConfig) -> Result<Vec<f64>> {
    let k1 = 7.0 * cfg.rho;
    let k2 = 2.0;
    let k3 = 2.0 * cfg.rho - 0.2;
    let mut x = HemoState([
        cfg.init[0],
        cfg.init[1].ln(),
        cfg.init[2].ln(),
        cfg.init[3].ln(),
    ]);
    let bold_of = |x: &HemoState| {
        let v = x.0[2].exp();
        let q = x.0[3].exp();
        cfg.v0 * (k1 * (1.0 - q) + k2 * (1.0 - q / v) + k3 * (1.0 - v))
    };
    let mut out = Vec::with_capacity(u.len());
    out.push(bold_of(&x));
    for i in 1..u.len() {
        // RK4 with the drive linearly interpolated at the half step.
        let (u0, u1) = (u[i - 1], u[i]);
        let um = 0.5 * (u0 + u1);
        let k1v = hemo_derivative(&x, u0, cfg);
        let x2 = HemoState(std::array::from_fn(|d| x.0[d] + 0.5 * dt_s * k1v[d]));
        let k2v = hemo_derivative(&x2, um, cfg);
        let x3 = HemoState(std::array::from_fn(|d| x.0[d] + 0.5 * dt_s * k2v[d]));
        let k3v = hemo_derivative(&x3, um, cfg);
        let x4 = HemoState(std::array::from_fn(|d| x.0[d] + dt_s * k3v[d]));
        let k4v = hemo_derivative(&x4, u1, cfg);
        for d in 0..4 {
            x.0[d] += dt_s / 6.0 * (k1v[d] + 2.0 * k2v[d] + 2.0 * k3v[d] + k4v[d]);
        }
        if x.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { t_ms: i as f64 * dt_s * 1000.0 });
        }
        out.push(bold_of(&x));
    }
    Ok(out)
}

/// Zero-phase ideal bandpass: remove the mean, FFT, zero every bin whose
/// frequency lies outside [f_lo, f_hi], inverse FFT, take the real part.
pub fn bandpass(signal: &[f64], sample_rate_hz: f64, band: (f64, f64)) -> Vec<f64> {
    let n = signal.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = signal.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x - mean, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let freq = k.min(n - k) as f64 * sample_rate_hz / n as f64;
        if !(band.0 <= freq && freq <= band.1) {
            *c = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Pearson correlation matrix of row signals; errors on a zero-variance row.
pub fn fc_from_signals(signals: &Array2<f64>) -> Result<FCMatrix> {
    let n = signals.nrows();
    let t = signals.ncols();
    if t < 2 {
        return Err(Error::invalid(format!("need >= 2 samples per region for correlation, got {t}")));
    }
    let mut centered = signals.to_owned();
    let mut norms = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = centered.row_mut(i);
        let mean = row.sum() / t as f64;
        row.mapv_inplace(|x| x - mean);
        let norm = row.iter().map(|&x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::UndefinedCorrelation { region: i });
        }
        norms.push(norm);
    }
    let mut c = Array2::zeros((n, n));
    for i in 0..n {
        c[[i, i]] = 1.0;
        for j in (i + 1)..n {
            let dot: f64 = centered
                .row(i)
                .iter()
                .zip(centered.row(j).iter())
                .map(|(&a, &b)| a * b)
                .sum();
            let r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            c[[i, j]] = r;
            c[[j, i]] = r;
        }
    }
    Ok(FCMatrix { c })
}

/// Full post-processing: V -> hemodynamics over the whole series -> sample
/// at TR -> drop the volumes inside the transient window -> zero-phase
/// bandpass -> Pearson FC. Returns the matrix and its strict-upper-triangle
/// flattening. Discarding BOLD volumes rather than neural samples lets the
/// hemodynamic states settle from their resting initial conditions during
/// the dropped window, the same way fMRI pipelines drop the first volumes
/// of a run.
pub fn bold_fc(ts: &RegionTimeSeries, cfg: &BoldConfig) -> Result<(FCMatrix, Vec<f64>)> {
    cfg.validate()?;
    if ts.len() < 2 {
        return Err(Error::invalid("time series too short for BOLD conversion"));
    }
    let t0 = ts.t[0];
    let t_end = *ts.t.last().unwrap();
    let transient_ms = cfg.transient_discard * 1000.0;
    if t_end - t0 <= transient_ms {
        return Err(Error::invalid(format!(
            "series spans {:.3} ms, inside the {transient_ms} ms transient",
            t_end - t0
        )));
    }
    let dt_s = (ts.t[1] - ts.t[0]) / 1000.0;
    let n = ts.region_count();

    // Volume instants: every TR from the start of the series. Volumes whose
    // time offset is inside the transient window are dropped.
    let duration_s = (t_end - t0) / 1000.0;
    let n_total = (duration_s / cfg.tr).floor() as usize + 1;
    let first_kept = (0..n_total)
        .position(|k| k as f64 * cfg.tr * 1000.0 >= transient_ms)
        .unwrap_or(n_total);
    let n_bold = n_total - first_kept;
    if n_bold < 2 {
        return Err(Error::invalid(format!(
            "only {n_bold} BOLD samples retained in {duration_s:.3} s at TR {}; need >= 2",
            cfg.tr
        )));
    }

    let sample_rate = 1.0 / cfg.tr;
    let mut filtered = Array2::zeros((n, n_bold));
    for i in 0..n {
        let drive: Vec<f64> = ts.v.row(i).iter().cloned().collect();
        let bold = balloon_windkessel(&drive, dt_s, cfg)?;
        let sampled: Vec<f64> = (first_kept..n_total)
            .map(|k| {
                let idx = ((k as f64 * cfg.tr) / dt_s).round() as usize;
                bold[idx.min(bold.len() - 1)]
            })
            .collect();
        let band = bandpass(&sampled, sample_rate, cfg.band);
        for (k, &x) in band.iter().enumerate() {
            filtered[[i, k]] = x;
        }
    }
    let fc = fc_from_signals(&filtered)?;
    let flat = fc.flatten_upper();
    Ok((fc, flat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lb::{lb_simulate, Connectivity, LbInit, LbParams};
    use proptest::prelude::*;

    fn series_from_rows(rows: Vec<Vec<f64>>, dt_ms: f64) -> RegionTimeSeries {
        let n = rows.len();
        let t_len = rows[0].len();
        let mut v = Array2::zeros((n, t_len));
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                v[[i, j]] = x;
            }
        }
        RegionTimeSeries {
            t: (0..t_len).map(|j| j as f64 * dt_ms).collect(),
            v,
            z: Array2::zeros((n, t_len)),
            w: Array2::zeros((n, t_len)),
        }
    }

    /// Fast test config: tiny transient, wide band.
    fn test_cfg() -> BoldConfig {
        BoldConfig {
            transient_discard: 0.5,
            ..BoldConfig::default()
        }
    }

    #[test]
    fn flat_length_matches_upper_triangle() {
        // N = 78 gives the 3003 reported correlations.
        let n = 78;
        let t_len = 200;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..t_len)
                    .map(|j| ((i + 1) as f64 * 0.37 * j as f64).sin() * (0.02 + 0.001 * i as f64))
                    .collect()
            })
            .collect();
        // 100 ms neural grid keeps this test cheap; the flat length is what
        // matters here.
        let ts = series_from_rows(rows, 100.0);
        let (fc, flat) = bold_fc(&ts, &test_cfg()).unwrap();
        assert_eq!(fc.region_count(), 78);
        assert_eq!(flat.len(), 3003);
        assert_eq!(flat.len(), n * (n - 1) / 2);
    }

    #[test]
    fn duplicated_regions_correlate_to_one() {
        let base: Vec<f64> = (0..4000)
            .map(|j| 0.05 + 0.1 * (0.013 * j as f64).sin() + 0.03 * (0.041 * j as f64).cos())
            .collect();
        let ts = series_from_rows(vec![base.clone(), base], 100.0);
        let (fc,flat) = bold_fc(&ts, &test_cfg()).unwrap();
        assert!((fc.c[[0, 1]] - 1.0).abs() < 1e-12);
        assert_eq!(flat, vec![fc.c[[0, 1]]]);
    }

    #[test]
    fn sign_flipped_filtered_signals_correlate_to_minus_one() {
        // The bandpass is linear, so correlating x with -x gives exactly -1.
        let x: Vec<f64> = (0..256).map(|j| (0.2 * j as f64).sin() + 0.1 * (0.07 * j as f64).cos()).collect();
        let flipped: Vec<f64> = x.iter().map(|&v| -v).collect();
        let a = bandpass(&x, 1.25, (0.01, 0.1));
        let b = bandpass(&flipped, 1.25, (0.01, 0.1));
        let mut m = Array2::zeros((2, a.len()));
        for (j, (&xa, &xb)) in a.iter().zip(&b).enumerate() {
            m[[0, j]] = xa;
            m[[1, j]] = xb;
        }
        let fc = fc_from_signals(&m).unwrap();
        assert!((fc.c[[0, 1]] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_region_is_a_named_error() {
        // Region 1 is constant; after mean removal it is exactly zero, which
        // must surface as an undefined correlation naming that region.
        let live: Vec<f64> = (0..200).map(|j| 0.1 * (0.11 * j as f64).sin()).collect();
        let dead = vec![0.25; 200];
        let mut m = Array2::zeros((2, 200));
        for j in 0..200 {
            m[[0, j]] = live[j];
            m[[1, j]] = dead[j];
        }
        match fc_from_signals(&m) {
            Err(Error::UndefinedCorrelation { region }) => assert_eq!(region, 1),
            other => panic!("expected undefined correlation, got {other:?}"),
        }
    }

    #[test]
    fn bandpass_is_zero_phase_and_band_limited() {
        // A pure in-band sinusoid passes with no phase shift; an out-of-band
        // one is removed.
        let n = 400;
        let tr = 0.8;
        let fs = 1.0 / tr;
        let f_in = 0.05;
        let f_out = 0.3;
        let in_band: Vec<f64> = (0..n).map(|j| (2.0 * std::f64::consts::PI * f_in * j as f64 * tr).sin()).collect();
        let out_band: Vec<f64> = (0..n).map(|j| (2.0 * std::f64::consts::PI * f_out * j as f64 * tr).sin()).collect();
        let mixed: Vec<f64> = in_band.iter().zip(&out_band).map(|(a, b)| a + b).collect();
        let filtered = bandpass(&mixed, fs, (0.01, 0.1));
        // f_in = 16/(400*0.8) sits exactly on bin 16, f_out on bin 96.
        let err: f64 = filtered
            .iter()
            .zip(&in_band)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!(err < 1e-18, "residual power {err}");
    }

    #[test]
    fn constant_signal_bandpasses_to_exact_zero() {
        let out = bandpass(&vec![3.7; 128], 1.25, (0.01, 0.1));
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn lb_simulation_produces_valid_fc() {
        let p = LbParams::reference();
        let conn = Connectivity::synthetic_exponential(3).unwrap();
        let ts = lb_simulate(&p, &conn, 40_000.0, 0.5, &LbInit::Seed(1)).unwrap();
        let cfg = BoldConfig {
            transient_discard: 5.0,
            ..BoldConfig::default()
        };
        let (fc, flat) = bold_fc(&ts, &cfg).unwrap();
        assert_eq!(flat.len(), 3);
        for i in 0..3 {
            assert_eq!(fc.c[[i, i]], 1.0);
            for j in 0..3 {
                assert_eq!(fc.c[[i, j]], fc.c[[j, i]]);
                assert!(fc.c[[i, j]].abs() <= 1.0);
            }
        }
    }

    #[test]
    fn config_validation_catches_bad_bands() {
        let mut cfg = BoldConfig::default();
        cfg.band = (0.1, 0.01);
        assert!(cfg.validate().is_err());
        cfg.band = (0.0, 0.1);
        assert!(cfg.validate().is_err());
        let mut cfg = BoldConfig::default();
        cfg.tr = 0.0;
        assert!(cfg.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn fc_invariants_on_random_signals(seed in 0u64..1000) {
            let mut rng = crate::rng::seeded(seed);
            let n = 4;
            let t = 64;
            let mut m = Array2::zeros((n, t));
            for i in 0..n {
                for j in 0..t {
                    m[[i, j]] = crate::rng::uniform(&mut rng) - 0.5;
                }
            }
            let fc = fc_from_signals(&m).unwrap();
            for i in 0..n {
                prop_assert!((fc.c[[i, i]] - 1.0).abs() < 1e-15);
                for j in 0..n {
                    prop_assert_eq!(fc.c[[i, j]], fc.c[[j, i]]);
                    prop_assert!(fc.c[[i, j]].abs() <= 1.0);
                }
            }
        }
    }
}
