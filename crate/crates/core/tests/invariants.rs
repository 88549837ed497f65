mod common;

use common::*;
use locword_core::dynamics::{evolve_amplitude, projected_amplitude, projected_kernel_sup_bound};
use locword_core::finite_operator::restrict;
use locword_core::transfer::{interval_transfer, potential_transfer, word_transfer};
use locword_core::word_model::{sample_potential, shift_realization};
use locword_core::{SpectralProjection, WordDistribution};
use proptest::prelude::*;
use rand::Rng;

fn preset(i: usize) -> WordDistribution {
    presets()[i % 4].clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn short_products_are_unimodular(which in 0usize..4, seed in any::<u64>(), len in 1i64..20, e in -4.0f64..4.0) {
        let r = sample_potential(&preset(which), seed, 0, len - 1).unwrap();
        let p = interval_transfer(&r, 0, len - 1, e).unwrap();
        let m = p.reconstruct();
        let scale = m.frobenius().powi(2).max(1.0);
        prop_assert!((m.det() - 1.0).abs() <= 1e-12 * scale);
    }

    #[test]
    fn cocycle_law(which in 0usize..4, seed in any::<u64>(), a in -30i64..0, mid in 0i64..20, c in 20i64..50, e in -4.0f64..4.0) {
        let r = sample_potential(&preset(which), seed, a, c).unwrap();
        let whole = interval_transfer(&r, a, c, e).unwrap();
        let left = interval_transfer(&r, a, mid, e).unwrap();
        let right = interval_transfer(&r, mid + 1, c, e).unwrap();
        let joined = left.then(&right);
        prop_assert!((joined.log_norm() - whole.log_norm()).abs() < 1e-9);
        let (x, y) = (joined.matrix().entries(), whole.matrix().entries());
        let shift = (joined.log_scale() - whole.log_scale()).exp();
        for k in 0..4 {
            prop_assert!((x[k] * shift - y[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn word_products_match_site_products(which in 0usize..4, seed in any::<u64>(), e in -4.0f64..4.0) {
        let dist = preset(which);
        let r = sample_potential(&dist, seed, -40, 40).unwrap();
        let whole: Vec<_> = r.segments().iter().filter(|s| s.start >= -40 && s.end() <= 40).copied().collect();
        prop_assume!(!whole.is_empty());
        let (a, b) = (whole[0].start, whole.last().unwrap().end());
        let mut m = [1.0, 0.0, 0.0, 1.0];
        for s in &whole {
            let t = word_transfer(e, &dist.words()[s.word]).entries();
            m = [t[0] * m[0] + t[1] * m[2], t[0] * m[1] + t[1] * m[3], t[2] * m[0] + t[3] * m[2], t[2] * m[1] + t[3] * m[3]];
        }
        let direct = naive_transfer(r.slice(a, b).unwrap(), e);
        let scale = direct.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        for k in 0..4 {
            prop_assert!((m[k] - direct[k]).abs() <= 1e-10 * scale);
        }
        let renorm = potential_transfer(r.slice(a, b).unwrap(), e);
        prop_assert!((renorm.reconstruct().entries()[0] - direct[0]).abs() <= 1e-10 * scale);
    }

    #[test]
    fn shifts_compose(which in 0usize..4, seed in any::<u64>(), s in -15i64..15, t in -15i64..15) {
        let r = sample_potential(&preset(which), seed, -40, 40).unwrap();
        let once = shift_realization(&r, s + t);
        let twice = shift_realization(&shift_realization(&r, s), t);
        for site in -40..=40 {
            prop_assert_eq!(once.value(site), twice.value(site));
        }
        prop_assert_eq!(shift_realization(&r, t).value(0), r.extend_to(-80, 80).unwrap().value(t));
    }

    #[test]
    fn deterministic_extension(which in 0usize..4, seed in any::<u64>()) {
        let small = sample_potential(&preset(which), seed, -5, 5).unwrap();
        let big = sample_potential(&preset(which), seed, -60, 60).unwrap();
        prop_assert_eq!(small.values(), big.slice(-5, 5).unwrap());
        let extended = small.extend_to(-60, 60).unwrap();
        prop_assert_eq!(extended.values(), big.values());
    }

    #[test]
    fn scales_are_monotone(which in 0usize..4, seed in any::<u64>()) {
        let r = sample_potential(&preset(which), seed, -10, 200).unwrap();
        let mut prev = r.random_scales(1).unwrap();
        for n in 2..40 {
            let sc = r.random_scales(n).unwrap();
            prop_assert!(sc.r_n >= prev.r_n && sc.q_n >= prev.q_n);
            prop_assert_eq!(sc.q_n - prev.q_n, sc.lengths[n - 1] as i64);
            prev = sc;
        }
    }

    #[test]
    fn evolution_is_unitary_and_kernels_dominate(which in 0usize..4, seed in any::<u64>(), n in 2i64..60, lo in -4.0f64..2.0, width in 0.0f64..3.0) {
        let r = sample_potential(&preset(which), seed, 0, n - 1).unwrap();
        let eig = restrict(&r, 0, n - 1).unwrap().eigensystem();
        let proj = SpectralProjection::new(&eig, lo, lo + width).unwrap();
        let mut rng = rng(seed);
        for _ in 0..10 {
            let q = rng.random_range(0..n);
            let p = rng.random_range(0..n);
            let t = rng.random_range(-50.0..50.0);
            let mass: f64 = (0..n).map(|s| evolve_amplitude(&eig, s, q, t).unwrap().norm_sqr()).sum();
            prop_assert!((mass - 1.0).abs() <= 1e-9);
            let bound = projected_kernel_sup_bound(&eig, &proj, p, q).unwrap();
            prop_assert!((bound - projected_kernel_sup_bound(&eig, &proj, q, p).unwrap()).abs() <= 1e-12);
            prop_assert!(bound <= 1.0 + 1e-12);
            prop_assert!(projected_amplitude(&eig, &proj, p, q, t).unwrap().norm() <= bound + 1e-10);
            let amp = evolve_amplitude(&eig, p, q, t).unwrap();
            let back = evolve_amplitude(&eig, q, p, t).unwrap();
            prop_assert!((amp - back).norm() <= 1e-12);
        }
    }
}

/// Exact stationary mean of `f(V(0))`: each word letter weighted by `w/⟨L⟩`.
fn stationary_mean(dist: &WordDistribution, f: impl Fn(f64) -> f64) -> f64 {
    let total: f64 =
        dist.words().iter().zip(dist.weights()).map(|(w, p)| p * w.letters().iter().map(|&x| f(x)).sum::<f64>()).sum();
    total / dist.mean_word_length()
}

#[test]
fn sampling_is_stationary() {
    let n = 4000;
    let sites = [-37i64, -1, 0, 1, 2, 50];
    let powers: [fn(f64) -> f64; 2] = [|x| x, |x| x * x];
    for dist in presets() {
        let draws: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let r = sample_potential(&dist, locword_core::realization_seed(99, i as u64), -40, 60).unwrap();
                sites.iter().map(|&s| r.value(s).unwrap()).collect()
            })
            .collect();
        for f in powers {
            let exact = stationary_mean(&dist, f);
            for j in 0..sites.len() {
                let col: Vec<f64> = draws.iter().map(|d| f(d[j])).collect();
                let (mean, se) = locword_core::stats::mean_and_stderr(&col);
                assert!((mean - exact).abs() <= 4.0 * se + 1e-12, "site {} mean {mean} vs {exact}", sites[j]);
                // paired difference against the first site, judged by its own spread
                let diff: Vec<f64> = draws.iter().map(|d| f(d[j]) - f(d[0])).collect();
                let (dm, dse) = locword_core::stats::mean_and_stderr(&diff);
                assert!(dm.abs() <= 3.0 * dse + 1e-12, "sites {} vs {}: {dm}", sites[j], sites[0]);
            }
        }
    }
}

#[test]
fn random_scales_lower_bound_for_dimer() {
    let dist = WordDistribution::dimer(1.0).unwrap();
    let (n, eps, m) = (100usize, 0.1, 2.0);
    let mut good = 0;
    for i in 0..1000 {
        let r = sample_potential(&dist, locword_core::realization_seed(5, i), -4, 2 * n as i64 + 8).unwrap();
        let sc = r.random_scales(n).unwrap();
        if n as f64 * (dist.mean_word_length() - eps) / 2.0 - m <= sc.r_n as f64 {
            good += 1;
        }
    }
    assert!(good >= 990, "{good}");
}
