//! The coupled state derivative.

use super::{Connectivity, LbParams};

/// Excitatory firing rate of one region.
#[inline]
fn q_v(p: &LbParams, v: f64) -> f64 {
    0.5 * p.q_v_max * (1.0 + ((v - p.v_t) / p.delta).tanh())
}

/// Inhibitory firing rate. The threshold is Z_T; the argument is the
/// excitatory voltage V, following the model statement this code implements.
#[inline]
fn q_z(p: &LbParams, v: f64) -> f64 {
    0.5 * p.q_z_max * (1.0 + ((v - p.z_t) / p.delta).tanh())
}

#[inline]
fn gate(v: f64, threshold: f64, variance: f64) -> f64 {
    0.5 * (1.0 + ((v - threshold) / variance).tanh())
}

/// Write dV, dZ, dW into the provided buffers. `qv_buf` holds the per-region
/// excitatory rates and must be N long; it is filled here.
///
/// Total on finite inputs: a zero row sum (single region) contributes a zero
/// network term rather than a division by zero.
pub fn lb_derivative_into(
    v: &[f64],
    z: &[f64],
    w: &[f64],
    p: &LbParams,
    conn: &Connectivity,
    qv_buf: &mut [f64],
    dv: &mut [f64],
    dz: &mut [f64],
    dw: &mut [f64],
) {
    let n = conn.region_count();
    debug_assert!(v.len() == n && z.len() == n && w.len() == n);
    for i in 0..n {
        qv_buf[i] = q_v(p, v[i]);
    }
    for i in 0..n {
        let row = conn.row(i);
        let row_sum = conn.row_sum(i);
        let q_net = if row_sum > 0.0 {
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * qv_buf[j];
            }
            acc / row_sum
        } else {
            0.0
        };
        let exc = (1.0 - p.c) * qv_buf[i] + p.c * q_net;
        let vi = v[i];
        let m_ca = gate(vi, p.t_ca, p.delta_ca);
        let m_na = gate(vi, p.t_na, p.delta_na);
        let m_k = gate(vi, p.t_k, p.delta_k);
        dv[i] = -(p.g_ca + p.r_nmda * p.a_ee * exc) * m_ca * (vi - p.v_ca)
            - (p.g_na * m_na + p.a_ee * exc) * (vi - p.v_na)
            - p.g_k * w[i] * (vi - p.v_k)
            - p.g_l * (vi - p.v_l)
            - p.a_ie * z[i] * q_z(p, vi)
            + p.a_ne * p.i_0;
        dz[i] = p.b * (p.a_ni * p.i_0 + p.a_ei * vi * qv_buf[i]);
        dw[i] = p.phi * (m_k - w[i]) / p.tau_k;
    }
}

/// Allocating wrapper around [`lb_derivative_into`].
pub fn lb_derivative(
    v: &[f64],
    z: &[f64],
    w: &[f64],
    p: &LbParams,
    conn: &Connectivity,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = conn.region_count();
    let mut qv = vec![0.0; n];
    let mut dv = vec![0.0; n];
    let mut dz = vec![0.0; n];
    let mut dw = vec![0.0; n];
    lb_derivative_into(v, z, w, p, conn, &mut qv, &mut dv, &mut dz, &mut dw);
    (dv, dz, dw)
}
