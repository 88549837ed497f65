//! Sup-norm of a degree `n−1` polynomial against its values on the shifted
//! nodes `x_i = cos(2π(i+θ)/n)`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::error::{invalid, Result};

/// Dense-grid points per node.
const GRID_FACTOR: usize = 64;

/// Result of one polynomial check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebyshevCheck {
    /// Number of nodes, one more than the degree.
    pub n: usize,
    /// `max_i |Q(x_i)|`, which plays the role of `aⁿ`.
    pub node_max: f64,
    /// `max_{x∈[−1,1]} |Q(x)|` on the dense grid.
    pub global_max: f64,
    /// `a = node_max^{1/n}`.
    pub a: f64,
    /// `global_max / (n·aⁿ)`, the smallest constant making the bound hold.
    pub implied_c: f64,
}

/// `cos(2π(i+θ)/n)` for `i = 1..=n`.
pub fn chebyshev_nodes(n: usize, theta: f64) -> Vec<f64> {
    (1..=n).map(|i| (2.0 * PI * (i as f64 + theta) / n as f64).cos()).collect()
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Evaluates `Q` (ascending monomial coefficients, degree `n−1`) on the nodes
/// and on a grid of `64n + 1` points of `[−1, 1]`.
pub fn chebyshev_bound_check(coeffs: &[f64], theta: f64) -> Result<ChebyshevCheck> {
    if !(theta > 0.0 && theta < 0.5) {
        return Err(invalid("theta must lie in (0, 1/2)"));
    }
    let n = coeffs.len();
    if n == 0 {
        return Err(invalid("polynomial needs at least one coefficient"));
    }
    if coeffs.iter().all(|&c| c == 0.0) {
        return Ok(ChebyshevCheck { n, node_max: 0.0, global_max: 0.0, a: 0.0, implied_c: 0.0 });
    }
    let node_max = chebyshev_nodes(n, theta).into_iter().map(|x| horner(coeffs, x).abs()).fold(0.0, f64::max);
    let points = GRID_FACTOR * n;
    let global_max =
        (0..=points).map(|k| -1.0 + 2.0 * k as f64 / points as f64).map(|x| horner(coeffs, x).abs()).fold(0.0, f64::max);
    let a = node_max.powf(1.0 / n as f64);
    let implied_c = if node_max > 0.0 { global_max / (n as f64 * node_max) } else { f64::INFINITY };
    Ok(ChebyshevCheck { n, node_max, global_max, a, implied_c })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_polynomial() {
        for n in [1, 4, 9] {
            let mut c = alloc::vec![0.0; n];
            c[0] = 1.0;
            let chk = chebyshev_bound_check(&c, 0.25).unwrap();
            assert_eq!(chk.node_max, 1.0);
            assert_eq!(chk.global_max, 1.0);
            assert!((chk.implied_c - 1.0 / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_polynomial_and_bad_theta() {
        let chk = chebyshev_bound_check(&[0.0, 0.0, 0.0], 0.25).unwrap();
        assert_eq!((chk.node_max, chk.global_max, chk.implied_c), (0.0, 0.0, 0.0));
        assert!(chebyshev_bound_check(&[1.0], 0.0).is_err());
        assert!(chebyshev_bound_check(&[1.0], 0.5).is_err());
    }

    #[test]
    fn nodes_are_distinct_for_quarter_shift() {
        let mut x = chebyshev_nodes(16, 0.25);
        x.sort_by(f64::total_cmp);
        assert!(x.windows(2).all(|w| w[1] - w[0] > 1e-6));
    }
}
