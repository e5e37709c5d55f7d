//! The 30 model parameters, their free subset, and reference fixed values.

use crate::error::{Error, Result};
use crate::params::{ParamSpace, ParamSpec};
use serde::{Deserialize, Serialize};

/// The 11 free parameters, in the canonical sampling order, with their
/// biologically relevant ranges.
pub const FREE_NAMES: [&str; 11] = [
    "c", "delta", "g_ca", "v_ca", "g_k", "v_k", "g_na", "v_na", "a_ee", "a_ei", "r_nmda",
];

const FREE_RANGES: [(f64, f64); 11] = [
    (0.2, 0.5),    // c
    (0.64, 0.7),   // delta
    (0.95, 1.05),  // g_ca
    (0.95, 1.01),  // v_ca
    (1.95, 2.05),  // g_k
    (-0.75, -0.65),// v_k
    (6.6, 6.8),    // g_na
    (0.48, 0.58),  // v_na
    (0.33, 0.39),  // a_ee
    (1.95, 2.05),  // a_ei
    (0.2, 0.3),    // r_nmda
];

/// The 19 parameters that stay fixed during sampling.
///
/// Reference values are the standard published set for this model
/// (Breakspear, Terry & Friston 2003, as used by Endo et al. 2020); they are
/// externally sourced data, not derived in this repository, and also ship as
/// configs/lb_fixed.json so deployments can swap them without rebuilding.
/// Fields omitted from a serialized config fall back to the reference
/// values, so partial overrides stay valid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbFixedParams {
    pub v_l: f64,
    pub g_l: f64,
    pub t_na: f64,
    pub t_k: f64,
    pub t_ca: f64,
    pub delta_na: f64,
    pub delta_k: f64,
    pub delta_ca: f64,
    pub v_t: f64,
    pub z_t: f64,
    pub q_v_max: f64,
    pub q_z_max: f64,
    pub a_ie: f64,
    pub a_ne: f64,
    pub a_ni: f64,
    pub i_0: f64,
    pub b: f64,
    pub phi: f64,
    pub tau_k: f64,
}

impl Default for LbFixedParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl LbFixedParams {
    pub fn reference() -> Self {
        LbFixedParams {
            v_l: -0.5,
            g_l: 0.5,
            t_na: 0.3,
            t_k: 0.0,
            t_ca: -0.01,
            delta_na: 0.15,
            delta_k: 0.3,
            delta_ca: 0.15,
            v_t: 0.0,
            z_t: 0.0,
            q_v_max: 1.0,
            q_z_max: 1.0,
            a_ie: 2.0,
            a_ne: 1.0,
            a_ni: 0.4,
            i_0: 0.3,
            b: 0.1,
            phi: 0.7,
            tau_k: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.v_l, self.g_l, self.t_na, self.t_k, self.t_ca, self.delta_na, self.delta_k,
            self.delta_ca, self.v_t, self.z_t, self.q_v_max, self.q_z_max, self.a_ie, self.a_ne,
            self.a_ni, self.i_0, self.b, self.phi, self.tau_k,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite fixed parameter value"));
        }
        for (name, v) in [
            ("delta_na", self.delta_na),
            ("delta_k", self.delta_k),
            ("delta_ca", self.delta_ca),
            ("tau_k", self.tau_k),
        ] {
            if v <= 0.0 {
                return Err(Error::invalid(format!("fixed parameter {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// A full 30-parameter configuration of one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbParams {
    // Free subset (sampled).
    pub c: f64,
    pub delta: f64,
    pub g_ca: f64,
    pub v_ca: f64,
    pub g_k: f64,
    pub v_k: f64,
    pub g_na: f64,
    pub v_na: f64,
    pub a_ee: f64,
    pub a_ei: f64,
    pub r_nmda: f64,
    // Fixed subset.
    pub v_l: f64,
    pub g_l: f64,
    pub t_na: f64,
    pub t_k: f64,
    pub t_ca: f64,
    pub delta_na: f64,
    pub delta_k: f64,
    pub delta_ca: f64,
    pub v_t: f64,
    pub z_t: f64,
    pub q_v_max: f64,
    pub q_z_max: f64,
    pub a_ie: f64,
    pub a_ne: f64,
    pub a_ni: f64,
    pub i_0: f64,
    pub b: f64,
    pub phi: f64,
    pub tau_k: f64,
}

impl LbParams {
    /// Assemble a full parameter set from fixed values plus the free vector
    /// in [`FREE_NAMES`] order.
    pub fn from_free(fixed: &LbFixedParams, free: &[f64]) -> Result<Self> {
        fixed.validate()?;
        if free.len() != FREE_NAMES.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} free parameters, got {}",
                FREE_NAMES.len(),
                free.len()
            )));
        }
        if free.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite free parameter value"));
        }
        Ok(LbParams {
            c: free[0],
            delta: free[1],
            g_ca: free[2],
            v_ca: free[3],
            g_k: free[4],
            v_k: free[5],
            g_na: free[6],
            v_na: free[7],
            a_ee: free[8],
            a_ei: free[9],
            r_nmda: free[10],
            v_l: fixed.v_l,
            g_l: fixed.g_l,
            t_na: fixed.t_na,
            t_k: fixed.t_k,
            t_ca: fixed.t_ca,
            delta_na: fixed.delta_na,
            delta_k: fixed.delta_k,
            delta_ca: fixed.delta_ca,
            v_t: fixed.v_t,
            z_t: fixed.z_t,
            q_v_max: fixed.q_v_max,
            q_z_max: fixed.q_z_max,
            a_ie: fixed.a_ie,
            a_ne: fixed.a_ne,
            a_ni: fixed.a_ni,
            i_0: fixed.i_0,
            b: fixed.b,
            phi: fixed.phi,
            tau_k: fixed.tau_k,
        })
    }

    /// Free vector at the midpoint of every sampling range.
    pub fn midpoint_free() -> Vec<f64> {
        FREE_RANGES.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    /// Reference configuration: fixed values plus midpoint free values.
    pub fn reference() -> Self {
        LbParams::from_free(&LbFixedParams::reference(), &Self::midpoint_free())
            .expect("reference configuration is valid")
    }

    /// The free values of this configuration, in [`FREE_NAMES`] order.
    pub fn free_vector(&self) -> Vec<f64> {
        vec![
            self.c, self.delta, self.g_ca, self.v_ca, self.g_k, self.v_k, self.g_na, self.v_na,
            self.a_ee, self.a_ei, self.r_nmda,
        ]
    }

    /// True when every free value lies inside its sampling range.
    pub fn free_in_ranges(&self) -> bool {
        self.free_vector()
            .iter()
            .zip(FREE_RANGES.iter())
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }
}

/// The 11-dimensional sampling space with the published ranges.
pub fn param_space() -> ParamSpace {
    let specs = FREE_NAMES
        .iter()
        .zip(FREE_RANGES.iter())
        .map(|(name, (lo, hi))| ParamSpec::free(name, *lo, *hi))
        .collect();
    ParamSpace::new(specs).expect("free ranges are valid")
}

/// Upper corner of the sampling space where the dynamics oscillate reliably.
///
/// Most of the full box sits at a stable fixed point and would be rejected
/// by the oscillation filter, so small benchmark runs sample from the top
/// `1 - LOWER_FRACTION` of every range instead of burning simulation time on
/// quiescent samples. Every value still lies inside the published ranges.
pub fn param_space_excitable() -> ParamSpace {
    const LOWER_FRACTION: f64 = 0.85;
    let specs = FREE_NAMES
        .iter()
        .zip(FREE_RANGES.iter())
        .map(|(name, (lo, hi))| {
            ParamSpec::free(name, lo + LOWER_FRACTION * (hi - lo), *hi)
        })
        .collect();
    ParamSpace::new(specs).expect("restricted ranges are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_eleven_free_parameters() {
        assert_eq!(FREE_NAMES.len(), 11);
        assert_eq!(param_space().dim(), 11);
    }

    #[test]
    fn excitable_subspace_stays_inside_the_full_ranges() {
        let sub = param_space_excitable();
        assert_eq!(sub.dim(), 11);
        for (spec, (lo, hi)) in sub.specs.iter().zip(FREE_RANGES.iter()) {
            assert!(spec.lower > *lo && spec.lower < *hi);
            assert_eq!(spec.upper, *hi);
            assert!(spec.lower < spec.upper);
        }
        // A sample drawn anywhere in the subspace is a valid configuration.
        let native = sub.scale(&vec![0.5; 11]).unwrap();
        let p = LbParams::from_free(&LbFixedParams::reference(), &native).unwrap();
        assert!(p.free_in_ranges());
    }

    #[test]
    fn thirty_parameters_total() {
        // 11 free + 19 fixed.
        let json = serde_json::to_value(LbParams::reference()).unwrap();
        assert_eq!(json.as_object().unwrap().len(), 30);
        let fixed = serde_json::to_value(LbFixedParams::reference()).unwrap();
        assert_eq!(fixed.as_object().unwrap().len(), 19);
    }

    #[test]
    fn reference_free_values_inside_ranges() {
        assert!(LbParams::reference().free_in_ranges());
        let mut shifted = LbParams::reference();
        shifted.c = 0.9;
        assert!(!shifted.free_in_ranges());
    }

    #[test]
    fn from_free_respects_order() {
        let mut free = LbParams::midpoint_free();
        free[0] = 0.25; // c
        free[10] = 0.21; // r_nmda
        let p = LbParams::from_free(&LbFixedParams::reference(), &free).unwrap();
        assert_eq!(p.c, 0.25);
        assert_eq!(p.r_nmda, 0.21);
        assert_eq!(p.free_vector(), free);
    }

    #[test]
    fn from_free_rejects_bad_input() {
        let fixed = LbFixedParams::reference();
        assert!(LbParams::from_free(&fixed, &[0.3; 10]).is_err());
        let mut free = LbParams::midpoint_free();
        free[3] = f64::NAN;
        assert!(LbParams::from_free(&fixed, &free).is_err());
    }

    #[test]
    fn shipped_fixed_config_matches_the_reference_set() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/lb_fixed.json");
        let text = std::fs::read_to_string(path).unwrap();
        let parsed: LbFixedParams = serde_json::from_str(&text).unwrap();
        parsed.validate().unwrap();
        assert_eq!(parsed, LbFixedParams::reference());
    }
}
