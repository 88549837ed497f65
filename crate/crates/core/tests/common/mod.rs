//! Dense brute-force linear algebra used as independent oracles.
#![allow(dead_code)]

use locword_core::{Word, WordDistribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row-major dense `H − E` for the Dirichlet restriction with diagonal `v`.
pub fn dense_shifted(v: &[f64], energy: f64) -> Vec<Vec<f64>> {
    let n = v.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        m[i][i] = v[i] - energy;
        if i + 1 < n {
            m[i][i + 1] = 1.0;
            m[i + 1][i] = 1.0;
        }
    }
    m
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn dense_det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn dense_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(p, c);
        let piv = a[c][c];
        a[c].iter_mut().for_each(|x| *x /= piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    for k in 0..2 * n {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `det(E − H)` on `v`, the determinant convention of the transfer identity.
pub fn det_e_minus_h(v: &[f64], energy: f64) -> f64 {
    if v.is_empty() {
        return 1.0;
    }
    let m = dense_shifted(v, energy).into_iter().map(|r| r.into_iter().map(|x| -x).collect()).collect();
    dense_det(m)
}

/// Plain 2×2 product of one-step matrices, no renormalization.
pub fn naive_transfer(v: &[f64], energy: f64) -> [f64; 4] {
    let mut m = [1.0, 0.0, 0.0, 1.0];
    for &x in v {
        let c = energy - x;
        m = [c * m[0] - m[2], c * m[1] - m[3], m[0], m[1]];
    }
    m
}

pub fn random_distribution(rng: &mut ChaCha8Rng) -> WordDistribution {
    let count = rng.random_range(1..=4);
    let words: Vec<Word> = (0..count)
        .map(|_| {
            let len = rng.random_range(1..=3);
            Word::new((0..len).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
        })
        .collect();
    let raw: Vec<f64> = (0..count).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let head: f64 = weights[..count - 1].iter().sum();
    weights[count - 1] = 1.0 - head;
    WordDistribution::new(words, weights).unwrap()
}

pub fn presets() -> Vec<WordDistribution> {
    vec![
        WordDistribution::dimer(1.0).unwrap(),
        WordDistribution::dimer(0.5).unwrap(),
        WordDistribution::bernoulli_anderson(0.0, 4.0, 0.5).unwrap(),
        WordDistribution::from_letters(vec![vec![2.0], vec![-1.0, 0.5, 3.0]], vec![0.3, 0.7]).unwrap(),
    ]
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
