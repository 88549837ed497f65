//! Symmetric tridiagonal kernels: Sturm counts and LU with partial pivoting.

use alloc::vec;
use alloc::vec::Vec;

/// Number of eigenvalues strictly below `x`.
pub(crate) fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let pivmin = pivot_min(off);
    let mut count = 0;
    let mut q = 1.0;
    for (i, &d) in diag.iter().enumerate() {
        q = if i == 0 { d - x } else { d - x - off[i - 1] * off[i - 1] / q };
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn pivot_min(off: &[f64]) -> f64 {
    let emax = off.iter().fold(1.0_f64, |m, e| m.max(e * e));
    f64::MIN_POSITIVE * emax
}

/// Gershgorin interval containing the spectrum.
pub(crate) fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// LU factorization of `T − shift·I` with row interchanges.
pub(crate) struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    pub(crate) fn factor(diag: &[f64], off: &[f64], shift: f64) -> Self {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
        let mut dl = off.to_vec();
        let mut du = off.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        Self { dl, d, du, du2, swapped }
    }

    /// Smallest pivot magnitude.
    pub(crate) fn min_pivot(&self) -> f64 {
        self.d.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    /// Solves in place. Pivots smaller than `floor` in magnitude are replaced
    /// by `±floor` (inverse iteration needs this; pass 0 for an exact solve).
    pub(crate) fn solve(&self, b: &mut [f64], floor: f64) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        let piv = |v: f64| {
            if v.abs() < floor {
                if v < 0.0 {
                    -floor
                } else {
                    floor
                }
            } else {
                v
            }
        };
        b[n - 1] /= piv(self.d[n - 1]);
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / piv(self.d[n - 2]);
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / piv(self.d[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matvec(diag: &[f64], off: &[f64], shift: f64, x: &[f64]) -> Vec<f64> {
        let n = diag.len();
        (0..n)
            .map(|i| {
                let mut s = (diag[i] - shift) * x[i];
                if i > 0 {
                    s += off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn lu_solves_with_pivoting() {
        let diag = [0.0, 1e-3, 2.0, -1.0, 0.5, 0.0];
        let off = [1.0; 5];
        let rhs = [1.0, -2.0, 0.5, 3.0, -1.0, 2.0];
        let lu = TridiagLu::factor(&diag, &off, 0.25);
        let mut x = rhs;
        lu.solve(&mut x, 0.0);
        let back = matvec(&diag, &off, 0.25, &x);
        for (a, b) in back.iter().zip(rhs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sturm_counts_free_spectrum() {
        // free 3 sites: eigenvalues -√2, 0, √2
        let diag = [0.0; 3];
        let off = [1.0; 2];
        assert_eq!(sturm_count(&diag, &off, -2.0), 0);
        assert_eq!(sturm_count(&diag, &off, -1.0), 1);
        assert_eq!(sturm_count(&diag, &off, 0.5), 2);
        assert_eq!(sturm_count(&diag, &off, 1.5), 3);
    }
}
