//! Unscrambled Sobol low-discrepancy sequence.
//!
//! Dimension 1 is the base-2 radical inverse; dimensions 2..=21 use the
//! Joe-Kuo primitive polynomials and initial direction numbers
//! (new-joe-kuo-6.21201 table). Points are produced in Gray-code order with
//! 52 output bits, so every coordinate is an exact multiple of 2^-52 and the
//! sequence is identical on every platform.
//!
//! Point 0 of the sequence is the origin; callers normally skip it
//! (`skip = 1`).

use crate::error::{Error, Result};
use ndarray::Array2;

/// Largest supported dimension.
pub const MAX_DIM: usize = 21;

/// Output precision in bits.
const BITS: u32 = 52;

/// Joe-Kuo table rows for dimensions 2..=21: (degree s, coefficient a, m_i).
/// `a` encodes the interior coefficients of the primitive polynomial; the
/// leading and trailing 1 are implicit.
const JOE_KUO: [(u32, u64, &[u64]); 20] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 57]),
    (7, 4, &[1, 3, 3, 7, 9, 31, 29]),
];

/// Direction integers for one dimension, v[k] for k = 1..=BITS (index 0 unused).
fn direction_integers(dim_index: usize) -> Vec<u64> {
    let mut v = vec![0u64; BITS as usize + 1];
    if dim_index == 0 {
        for k in 1..=BITS as usize {
            v[k] = 1u64 << (BITS as usize - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim_index - 1];
    let s = s as usize;
    for k in 1..=s.min(BITS as usize) {
        v[k] = m[k - 1] << (BITS as usize - k);
    }
    for k in (s + 1)..=(BITS as usize) {
        let mut vk = v[k - s] ^ (v[k - s] >> s);
        for i in 1..s {
            if (a >> (s - 1 - i)) & 1 == 1 {
                vk ^= v[k - i];
            }
        }
        v[k] = vk;
    }
    v
}

/// Incremental Sobol generator.
pub struct SobolSeq {
    dim: usize,
    /// Index of the next point to be produced.
    index: u64,
    /// Current Gray-code state per dimension.
    state: Vec<u64>,
    /// Direction integers per dimension.
    v: Vec<Vec<u64>>,
}

impl SobolSeq {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension { dim, max: MAX_DIM });
        }
        Ok(SobolSeq {
            dim,
            index: 0,
            state: vec![0u64; dim],
            v: (0..dim).map(direction_integers).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index of the point `next_point` will return.
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Produce the next point of the sequence.
    pub fn next_point(&mut self) -> Vec<f64> {
        // Point 0 is the all-zeros state; later points flip the direction
        // integer selected by the lowest zero bit of the previous index.
        if self.index > 0 {
            let c = (self.index - 1).trailing_ones() as usize + 1;
            for (j, s) in self.state.iter_mut().enumerate() {
                *s ^= self.v[j][c];
            }
        }
        self.index += 1;
        let scale = 1.0 / (1u64 << BITS) as f64;
        self.state.iter().map(|&s| s as f64 * scale).collect()
    }

    /// Advance without producing output.
    pub fn skip(&mut self, n: u64) {
        for _ in 0..n {
            self.next_point();
        }
    }
}

/// `n` points of the `dim`-dimensional sequence starting at index `skip`,
/// as an n x dim matrix.
pub fn sobol_points(dim: usize, n: usize, skip: u64) -> Result<Array2<f64>> {
    let mut seq = SobolSeq::new(dim)?;
    seq.skip(skip);
    let mut out = Array2::zeros((n, dim));
    for i in 0..n {
        let p = seq.next_point();
        for j in 0..dim {
            out[[i, j]] = p[j];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dim1_radical_inverse_prefix() {
        let pts = sobol_points(1, 3, 1).unwrap();
        assert_eq!(pts[[0, 0]], 0.5);
        assert_eq!(pts[[1, 0]], 0.75);
        assert_eq!(pts[[2, 0]], 0.25);
    }

    #[test]
    fn dim2_first_point_after_origin() {
        let pts = sobol_points(2, 1, 1).unwrap();
        assert_eq!(pts[[0, 0]], 0.5);
        assert_eq!(pts[[0, 1]], 0.5);
    }

    #[test]
    fn origin_is_point_zero() {
        let pts = sobol_points(5, 1, 0).unwrap();
        for j in 0..5 {
            assert_eq!(pts[[0, j]], 0.0);
        }
    }

    #[test]
    fn skip_matches_contiguous_generation() {
        let all = sobol_points(11, 40, 0).unwrap();
        let tail = sobol_points(11, 10, 30).unwrap();
        for i in 0..10 {
            for j in 0..11 {
                assert_eq!(tail[[i, j]], all[[30 + i, j]]);
            }
        }
    }

    #[test]
    fn rejects_unsupported_dimension() {
        assert!(matches!(
            sobol_points(22, 1, 0),
            Err(Error::UnsupportedDimension { dim: 22, max: 21 })
        ));
        assert!(sobol_points(0, 1, 0).is_err());
    }

    #[test]
    fn low_dims_balance_in_halves() {
        // Every power-of-two block of the sequence puts exactly half the
        // points in each half-interval, per coordinate.
        for dim in [1usize, 2, 4, 11, 21] {
            let pts = sobol_points(dim, 64, 0).unwrap();
            for j in 0..dim {
                let low = (0..64).filter(|&i| pts[[i, j]] < 0.5).count();
                assert_eq!(low, 32, "dim {dim} coord {j}");
            }
        }
    }

    proptest! {
        #[test]
        fn coords_in_unit_interval(dim in 1usize..=21, n in 1usize..64, skip in 0u64..256) {
            let pts = sobol_points(dim, n, skip).unwrap();
            for &x in pts.iter() {
                prop_assert!((0.0..1.0).contains(&x));
            }
        }

        #[test]
        fn deterministic(dim in 1usize..=21, n in 1usize..32, skip in 0u64..64) {
            let a = sobol_points(dim, n, skip).unwrap();
            let b = sobol_points(dim, n, skip).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
