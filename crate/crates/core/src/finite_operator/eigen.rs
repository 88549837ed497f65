//! Full eigendecomposition of symmetric tridiagonal matrices.
//!
//! Eigenvalues come from Sturm-sequence bisection; eigenvectors from inverse
//! iteration, with modified Gram–Schmidt inside clusters of close eigenvalues.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tridiag::{gershgorin, sturm_count, TridiagLu};

/// Relative gap (to the matrix norm) below which neighbors are treated as a cluster.
const CLUSTER_GAP: f64 = 1e-4;
const MAX_ITERATIONS: usize = 8;

/// Eigenvalues ascending and eigenvectors as unit columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    start: i64,
    values: Vec<f64>,
    vectors: Vec<f64>,
}

impl EigenSystem {
    pub(crate) fn new(start: i64, values: Vec<f64>, vectors: Vec<f64>) -> Self {
        debug_assert_eq!(values.len() * values.len(), vectors.len());
        Self { start, values, vectors }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Closed window `[a, b]` the vectors live on.
    pub fn window(&self) -> (i64, i64) {
        (self.start, self.start + self.values.len() as i64 - 1)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvector `k` as values on `a..=b`.
    pub fn vector(&self, k: usize) -> &[f64] {
        let n = self.len();
        &self.vectors[k * n..(k + 1) * n]
    }

    /// `u_k(site)`, or `None` outside the window.
    pub fn amplitude(&self, k: usize, site: i64) -> Option<f64> {
        self.index_of(site).map(|i| self.vector(k)[i])
    }

    pub(crate) fn index_of(&self, site: i64) -> Option<usize> {
        let (a, b) = self.window();
        (a..=b).contains(&site).then(|| (site - a) as usize)
    }
}

/// Eigenvalues of the symmetric tridiagonal matrix `(diag, off)`, ascending.
pub(crate) fn bisection_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let (gl, gu) = gershgorin(diag, off);
    let tnorm = gl.abs().max(gu.abs()).max(f64::MIN_POSITIVE);
    let pad = 2.0 * f64::EPSILON * tnorm * n as f64;
    let (gl, gu) = (gl - pad, gu + pad);
    let abstol = 2.0 * f64::EPSILON * tnorm;

    let mut upper = vec![gu; n];
    let mut values = Vec::with_capacity(n);
    let mut lo = gl;
    for k in 0..n {
        let mut hi = upper[k];
        while hi - lo > abstol.max(2.0 * f64::EPSILON * lo.abs().max(hi.abs())) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let c = sturm_count(diag, off, mid);
            if c > k {
                hi = mid;
                for u in &mut upper[k + 1..c] {
                    *u = u.min(mid);
                }
            } else {
                lo = mid;
            }
        }
        values.push(0.5 * (lo + hi));
    }
    values
}

/// Full decomposition; vectors stored column by column.
pub(crate) fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    if n == 1 {
        return (diag.to_vec(), vec![1.0]);
    }
    let values = bisection_eigenvalues(diag, off);
    let onenrm = (0..n)
        .map(|i| diag[i].abs() + if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 })
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let ortol = CLUSTER_GAP * onenrm;
    let pertol = 10.0 * eps * onenrm;
    let floor = eps * onenrm;
    let converged = 1e3 * eps * onenrm;

    let mut vectors = vec![0.0; n * n];
    let mut cluster_start = 0;
    let mut prev_shift = f64::NEG_INFINITY;
    for k in 0..n {
        if k > 0 && values[k] - values[k - 1] > ortol {
            cluster_start = k;
        }
        let mut shift = values[k];
        if k > cluster_start && shift - prev_shift < pertol {
            shift = prev_shift + pertol;
        }
        prev_shift = shift;

        let lu = TridiagLu::factor(diag, off, shift);
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        normalize(&mut x);
        let mut extra = 0;
        for _ in 0..MAX_ITERATIONS {
            lu.solve(&mut x, floor);
            for j in cluster_start..k {
                let prev = &vectors[j * n..(j + 1) * n];
                let dot: f64 = prev.iter().zip(&x).map(|(p, v)| p * v).sum();
                x.iter_mut().zip(prev).for_each(|(v, p)| *v -= dot * p);
            }
            let growth = normalize(&mut x);
            if growth > 0.0 && 1.0 / growth <= converged {
                extra += 1;
                if extra > 1 {
                    break;
                }
            }
        }
        // sign convention: largest-magnitude entry positive
        let imax = x.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map(|(i, _)| i).unwrap_or(0);
        if x[imax] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        vectors[k * n..(k + 1) * n].copy_from_slice(&x);
    }
    (values, vectors)
}

fn normalize(x: &mut [f64]) -> f64 {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let norm = scale * x.iter().map(|v| (v / scale) * (v / scale)).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn free_dirichlet_closed_form() {
        let n = 50;
        let values = bisection_eigenvalues(&vec![0.0; n], &vec![1.0; n - 1]);
        for (j, v) in values.iter().enumerate() {
            let exact = 2.0 * (PI * (n - j) as f64 / (n + 1) as f64).cos();
            assert!((v - exact).abs() <= 1e-12, "{j}: {v} vs {exact}");
        }
    }

    #[test]
    fn degenerate_blocks_stay_orthonormal() {
        // two decoupled identical blocks: exact double eigenvalues
        let diag = vec![0.3, -0.2, 0.9, 0.3, -0.2, 0.9];
        let off = vec![1.0, 1.0, 0.0, 1.0, 1.0];
        let (values, vectors) = tridiagonal_eigen(&diag, &off);
        let n = diag.len();
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|s| vectors[i * n + s] * vectors[j * n + s]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10, "({i},{j}) = {dot}");
            }
        }
        assert!((values[0] - values[1]).abs() < 1e-14);
    }
}
