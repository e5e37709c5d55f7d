//! Named parameter spaces and affine unit-cube scaling.
//!
//! A [`ParamSpace`] is an ordered list of parameter specs. Free parameters
//! span `[lower, upper]` and together define the unit cube the samplers and
//! networks work in; fixed parameters carry a single value that is spliced
//! back into the native vector on [`ParamSpace::scale`].

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    /// Fixed parameters keep this value and do not count toward the cube
    /// dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<f64>,
}

impl ParamSpec {
    pub fn free(name: &str, lower: f64, upper: f64) -> Self {
        ParamSpec {
            name: name.to_string(),
            lower,
            upper,
            fixed: None,
        }
    }

    pub fn fixed(name: &str, value: f64) -> Self {
        ParamSpec {
            name: name.to_string(),
            lower: value,
            upper: value,
            fixed: Some(value),
        }
    }

    pub fn is_free(&self) -> bool {
        self.fixed.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub specs: Vec<ParamSpec>,
}

impl ParamSpace {
    pub fn new(specs: Vec<ParamSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::invalid("parameter space must not be empty"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &specs {
            if !s.lower.is_finite() || !s.upper.is_finite() {
                return Err(Error::invalid(format!("parameter {}: non-finite bounds", s.name)));
            }
            if s.is_free() && s.lower >= s.upper {
                return Err(Error::invalid(format!(
                    "parameter {}: lower {} must be below upper {}",
                    s.name, s.lower, s.upper
                )));
            }
            if let Some(v) = s.fixed {
                if !v.is_finite() {
                    return Err(Error::invalid(format!("parameter {}: non-finite fixed value", s.name)));
                }
            }
            if !seen.insert(s.name.clone()) {
                return Err(Error::invalid(format!("duplicate parameter name {}", s.name)));
            }
        }
        Ok(ParamSpace { specs })
    }

    /// Number of free parameters; the dimension of the unit cube.
    pub fn dim(&self) -> usize {
        self.specs.iter().filter(|s| s.is_free()).count()
    }

    /// Total number of parameters, free and fixed.
    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn free_names(&self) -> Vec<&str> {
        self.specs
            .iter()
            .filter(|s| s.is_free())
            .map(|s| s.name.as_str())
            .collect()
    }

    /// Map a unit-cube point (one coordinate per free parameter) to the full
    /// native vector, fixed values spliced in at their positions.
    pub fn scale(&self, unit: &[f64]) -> Result<Vec<f64>> {
        if unit.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "unit point has {} coordinates, space has {} free parameters",
                unit.len(),
                self.dim()
            )));
        }
        let mut out = Vec::with_capacity(self.specs.len());
        let mut u = unit.iter();
        for s in &self.specs {
            match s.fixed {
                Some(v) => out.push(v),
                None => {
                    let &x = u.next().expect("checked length");
                    if !(0.0..=1.0).contains(&x) {
                        return Err(Error::invalid(format!(
                            "unit coordinate {} for parameter {} outside [0, 1]",
                            x, s.name
                        )));
                    }
                    out.push(s.lower + x * (s.upper - s.lower));
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`scale`]: recover the unit-cube coordinates of the free
    /// parameters from a full native vector.
    pub fn unscale(&self, native: &[f64]) -> Result<Vec<f64>> {
        if native.len() != self.specs.len() {
            return Err(Error::ShapeMismatch(format!(
                "native vector has {} entries, space has {} parameters",
                native.len(),
                self.specs.len()
            )));
        }
        let mut out = Vec::with_capacity(self.dim());
        for (s, &v) in self.specs.iter().zip(native) {
            if s.is_free() {
                out.push((v - s.lower) / (s.upper - s.lower));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn space() -> ParamSpace {
        ParamSpace::new(vec![
            ParamSpec::free("a", 0.1, 1.0),
            ParamSpec::fixed("g", 0.5),
            ParamSpec::free("b", -2.0, 3.0),
        ])
        .unwrap()
    }

    #[test]
    fn endpoints_map_to_bounds() {
        let s = space();
        assert_eq!(s.scale(&[0.0, 0.0]).unwrap(), vec![0.1, 0.5, -2.0]);
        assert_eq!(s.scale(&[1.0, 1.0]).unwrap(), vec![1.0, 0.5, 3.0]);
    }

    #[test]
    fn dim_counts_free_only() {
        assert_eq!(space().dim(), 2);
        assert_eq!(space().len(), 3);
        assert_eq!(space().free_names(), vec!["a", "b"]);
    }

    #[test]
    fn wrong_arity_is_an_error() {
        assert!(space().scale(&[0.5]).is_err());
        assert!(space().unscale(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ParamSpace::new(vec![]).is_err());
        assert!(ParamSpace::new(vec![ParamSpec::free("a", 1.0, 1.0)]).is_err());
        assert!(ParamSpace::new(vec![
            ParamSpec::free("a", 0.0, 1.0),
            ParamSpec::free("a", 0.0, 1.0),
        ])
        .is_err());
    }

    proptest! {
        #[test]
        fn scale_roundtrip(u0 in 0.0f64..=1.0, u1 in 0.0f64..=1.0) {
            let s = space();
            let native = s.scale(&[u0, u1]).unwrap();
            let back = s.unscale(&native).unwrap();
            prop_assert!((back[0] - u0).abs() < 1e-12);
            prop_assert!((back[1] - u1).abs() < 1e-12);
        }
    }
}
