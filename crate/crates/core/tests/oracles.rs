mod common;

use common::*;
use locword_core::finite_operator::{chebyshev_bound_check, chebyshev_nodes, restrict, transfer_determinant_entries};
use locword_core::transfer::{interval_transfer, lyapunov_estimate, LyapunovConfig};
use locword_core::word_model::sample_potential;
use locword_core::{GreenMethod, Sequential, TridiagonalOperator, WordDistribution};
use rand::Rng;
use std::f64::consts::PI;

#[test]
fn transfer_entries_match_dense_determinants() {
    let mut rng = rng(11);
    for case in 0..1000 {
        let dist = if case % 2 == 0 { random_distribution(&mut rng) } else { presets()[case % 4].clone() };
        let r = sample_potential(&dist, rng.random(), -20, 20).unwrap();
        let len = rng.random_range(1..=12);
        let a = rng.random_range(-20..=20 - (len as i64 - 1));
        let b = a + len as i64 - 1;
        let e = rng.random_range(-5.0..5.0);
        let v = r.slice(a, b).unwrap();
        let t = transfer_determinant_entries(&r, a, b, e).unwrap().entries();
        let inner = if len >= 2 { &v[1..len - 1] } else { &[][..] };
        let oracle = [
            det_e_minus_h(v, e),
            -det_e_minus_h(&v[1..], e),
            det_e_minus_h(&v[..len - 1], e),
            if len >= 2 { -det_e_minus_h(inner, e) } else { 0.0 },
        ];
        let naive = naive_transfer(v, e);
        for k in 0..4 {
            assert!(rel_err(t[k], oracle[k]) <= 1e-9, "case {case} entry {k}: {} vs {}", t[k], oracle[k]);
            assert!(rel_err(naive[k], oracle[k]) <= 1e-9, "case {case} product entry {k}");
        }
    }
}

#[test]
fn renormalized_product_matches_naive_product() {
    let mut rng = rng(12);
    for _ in 0..200 {
        let dist = random_distribution(&mut rng);
        let r = sample_potential(&dist, rng.random(), 0, 40).unwrap();
        let e = rng.random_range(-4.0..4.0);
        let p = interval_transfer(&r, 0, 40, e).unwrap();
        let naive = naive_transfer(r.values(), e);
        let scale = naive.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (x, y) in p.reconstruct().entries().iter().zip(naive) {
            assert!((x - y).abs() <= 1e-10 * scale);
        }
        assert!((p.log_norm() - scale.ln()).abs() < 1e-10);
    }
}

#[test]
fn green_two_methods_match_dense_inverse() {
    let mut rng = rng(13);
    let mut checked = 0;
    for _ in 0..1000 {
        let dist = random_distribution(&mut rng);
        let n = rng.random_range(1..=64);
        let r = sample_potential(&dist, rng.random(), 1, n).unwrap();
        let op = restrict(&r, 1, n).unwrap();
        let e = rng.random_range(-5.0..5.0);
        let x = rng.random_range(1..=n);
        let y = rng.random_range(1..=n);
        let norm = op.norm_bound();
        let dist_spec = op.eigenvalues().iter().map(|l| (l - e).abs()).fold(f64::INFINITY, f64::min);
        if dist_spec < 1e-6 * norm {
            continue;
        }
        let (Ok(c), Ok(d)) = (op.green(e, x, y, GreenMethod::Cramer), op.green(e, x, y, GreenMethod::Direct)) else {
            continue;
        };
        let inv = dense_inverse(&dense_shifted(r.values(), e));
        let oracle = inv[(x - 1) as usize][(y - 1) as usize];
        assert!(rel_err(c.value, d.value) <= 1e-8, "{} vs {}", c.value, d.value);
        assert!(rel_err(d.value, oracle.abs()) <= 1e-8);
        let signed = op.green_entry(e, x, y).unwrap();
        assert!(rel_err(signed, oracle) <= 1e-8, "signed {signed} vs {oracle}");
        checked += 1;
    }
    assert!(checked > 900, "only {checked} cases off the spectrum");
}

#[test]
fn free_lyapunov_closed_form() {
    let free = WordDistribution::free();
    let cfg = LyapunovConfig::new(100_000, 8).unwrap();
    let g3 = lyapunov_estimate(&free, 3.0, &cfg, 1, &Sequential).unwrap();
    let exact = ((3.0 + 5.0_f64.sqrt()) / 2.0).ln();
    assert!((exact - 0.962424).abs() < 1e-6);
    assert!((g3.gamma - exact).abs() < 0.01);
    let g0 = lyapunov_estimate(&free, 0.0, &cfg, 1, &Sequential).unwrap();
    assert!(g0.gamma.abs() < 5e-3);
}

#[test]
fn free_box_closed_form_spectrum_and_vectors() {
    let n = 50;
    let op = TridiagonalOperator::new(1, vec![0.0; n]).unwrap();
    let eig = op.eigensystem();
    for j in 1..=n {
        // ascending order: index n − j holds 2cos(πj/51)
        let k = n - j;
        assert!((eig.eigenvalues()[k] - 2.0 * (PI * j as f64 / 51.0).cos()).abs() <= 1e-9);
        let norm = (2.0 / 51.0_f64).sqrt();
        let u = eig.vector(k);
        let sign =
            if u.iter().map(|x| x.abs()).fold(0.0, f64::max) == u.iter().copied().fold(f64::MIN, f64::max) { 1.0 } else { -1.0 };
        let dot: f64 = (1..=n).map(|s| u[s - 1] * norm * (PI * (j * s) as f64 / 51.0).sin()).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-9, "j={j} overlap {dot}");
        assert!(sign > 0.0);
    }
}

#[test]
fn interlacing_under_one_site_removal() {
    let mut rng = rng(14);
    for _ in 0..100 {
        let dist = random_distribution(&mut rng);
        let n = rng.random_range(2..=80);
        let r = sample_potential(&dist, rng.random(), 0, n - 1).unwrap();
        let big = restrict(&r, 0, n - 1).unwrap().eigenvalues();
        let small = restrict(&r, 0, n - 2).unwrap().eigenvalues();
        for (k, mu) in small.iter().enumerate() {
            assert!(big[k] <= mu + 1e-12 && *mu <= big[k + 1] + 1e-12);
        }
    }
}

#[test]
fn chebyshev_polynomial_oracle() {
    // Q = T_{n−1}: node values are cos((n−1)θ_i) and the sup on [−1, 1] is 1 at the endpoints
    for n in [2usize, 4, 8, 12] {
        let mut prev = vec![1.0];
        let mut cur = vec![0.0, 1.0];
        let coeffs = if n == 1 {
            prev.clone()
        } else {
            for _ in 2..n {
                let mut next = vec![0.0; cur.len() + 1];
                for (i, c) in cur.iter().enumerate() {
                    next[i + 1] += 2.0 * c;
                }
                for (i, c) in prev.iter().enumerate() {
                    next[i] -= c;
                }
                prev = cur;
                cur = next;
            }
            cur.clone()
        };
        assert_eq!(coeffs.len(), n);
        let chk = chebyshev_bound_check(&coeffs, 0.25).unwrap();
        let node_oracle =
            (1..=n).map(|i| ((n - 1) as f64 * (2.0 * PI * (i as f64 + 0.25) / n as f64)).cos().abs()).fold(0.0, f64::max);
        assert!((chk.node_max - node_oracle).abs() < 1e-10, "n={n}");
        assert!((chk.global_max - 1.0).abs() < 1e-10);
        assert_eq!(chebyshev_nodes(n, 0.25).len(), n);
    }
}
