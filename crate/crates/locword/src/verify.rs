//! Randomized invariant and oracle suites behind `locword verify`.

use std::time::Instant;

use locword_core::dynamics::{evolve_amplitude, projected_amplitude, projected_kernel_sup_bound};
use locword_core::finite_operator::{restrict, transfer_determinant_entries};
use locword_core::stats::mean_and_stderr;
use locword_core::transfer::{interval_transfer, word_transfer};
use locword_core::word_model::sample_potential;
use locword_core::{realization_seed, Executor, GreenMethod, SpectralProjection, WordDistribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::*;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub violations: usize,
    /// Largest observed error in the suite's own metric.
    pub max_error: f64,
    pub tolerance: f64,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.cases > 0
    }
}

fn case_rng(seed: u64, suite: u64, i: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(realization_seed(seed ^ suite.wrapping_mul(0x9e37_79b9_7f4a_7c15), i as u64))
}

fn pick_distribution(rng: &mut ChaCha8Rng, i: usize) -> WordDistribution {
    if i % 2 == 0 {
        random_distribution(rng)
    } else {
        presets().swap_remove((i / 2) % 4)
    }
}

/// Per-case errors in, report out. `None` marks a skipped case.
fn tally<X: Executor>(
    name: &'static str,
    cases: usize,
    tolerance: f64,
    exec: &X,
    f: impl Fn(usize) -> Option<f64> + Sync + Send,
) -> SuiteReport {
    let start = Instant::now();
    let errors: Vec<f64> = exec.map_indexed(cases, f).into_iter().flatten().collect();
    SuiteReport {
        name,
        cases: errors.len(),
        violations: errors.iter().filter(|e| !(**e <= tolerance)).count(),
        max_error: errors.iter().copied().fold(0.0, f64::max),
        tolerance,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Transfer entries against dense determinants, windows of at most 12 sites.
pub fn determinant_identity<X: Executor>(cases: usize, seed: u64, exec: &X) -> SuiteReport {
    tally("determinant-identity", cases, 1e-9, exec, |i| {
        let mut rng = case_rng(seed, 1, i);
        let dist = pick_distribution(&mut rng, i);
        let r = sample_potential(&dist, rng.random(), -20, 20).ok()?;
        let len = rng.random_range(1..=12usize);
        let a = rng.random_range(-20..=20 - (len as i64 - 1));
        let b = a + len as i64 - 1;
        let e = rng.random_range(-5.0..5.0);
        let v = r.slice(a, b).ok()?;
        let t = transfer_determinant_entries(&r, a, b, e).ok()?.entries();
        let inner = if len >= 2 { det_e_minus_h(&v[1..len - 1], e) } else { 0.0 };
        let oracle = [det_e_minus_h(v, e), -det_e_minus_h(&v[1..], e), det_e_minus_h(&v[..len - 1], e), -inner];
        Some((0..4).map(|k| rel_err(t[k], oracle[k])).fold(0.0, f64::max))
    })
}

/// One random Green's function case.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenCase {
    pub n: usize,
    pub energy: f64,
    pub x: i64,
    pub y: i64,
    pub spectral_distance: f64,
    /// `None` when `E` is within `1e−6·‖H‖` of the spectrum.
    pub values: Option<GreenValues>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenValues {
    pub cramer: f64,
    pub direct: f64,
    pub dense: f64,
    pub rel_error: f64,
}

/// Cramer and direct routes against each other and a dense inverse.
pub fn green_cases<X: Executor>(cases: usize, max_n: usize, seed: u64, exec: &X) -> Vec<GreenCase> {
    exec.map_indexed(cases, |i| {
        let mut rng = case_rng(seed, 2, i);
        let dist = pick_distribution(&mut rng, i);
        let n = rng.random_range(1..=max_n.max(1));
        let r = sample_potential(&dist, rng.random(), 1, n as i64).expect("window");
        let op = restrict(&r, 1, n as i64).expect("window");
        let e = rng.random_range(-5.0..5.0);
        let x = rng.random_range(1..=n as i64);
        let y = rng.random_range(1..=n as i64);
        let spectral_distance = op.eigenvalues().iter().map(|l| (l - e).abs()).fold(f64::INFINITY, f64::min);
        let mut case = GreenCase { n, energy: e, x, y, spectral_distance, values: None };
        if spectral_distance < 1e-6 * op.norm_bound() {
            return case;
        }
        let (Ok(c), Ok(d)) = (op.green(e, x, y, GreenMethod::Cramer), op.green(e, x, y, GreenMethod::Direct)) else {
            return case;
        };
        let dense = dense_inverse(&dense_shifted(r.values(), e))[(x - 1) as usize][(y - 1) as usize].abs();
        let rel_error = rel_err(c.value, d.value).max(rel_err(d.value, dense));
        case.values = Some(GreenValues { cramer: c.value, direct: d.value, dense, rel_error });
        case
    })
}

pub fn green_agreement<X: Executor>(cases: usize, seed: u64, exec: &X) -> SuiteReport {
    let start = Instant::now();
    let all = green_cases(cases, 64, seed, exec);
    let errors: Vec<f64> = all.iter().filter_map(|c| c.values.map(|v| v.rel_error)).collect();
    SuiteReport {
        name: "green-agreement",
        cases: errors.len(),
        violations: errors.iter().filter(|e| !(**e <= 1e-8)).count(),
        max_error: errors.iter().copied().fold(0.0, f64::max),
        tolerance: 1e-8,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// `max(residual/‖H‖, |⟨u_i, u_j⟩ − δ_ij|)` on random boxes of up to 300 sites.
pub fn eigen_residuals<X: Executor>(cases: usize, seed: u64, exec: &X) -> SuiteReport {
    tally("eigen-residuals", cases, 1e-9, exec, |i| {
        let mut rng = case_rng(seed, 3, i);
        let dist = pick_distribution(&mut rng, i);
        let n = rng.random_range(1..=300usize);
        let r = sample_potential(&dist, rng.random(), 0, n as i64 - 1).ok()?;
        let op = restrict(&r, 0, n as i64 - 1).ok()?;
        let eig = op.eigensystem();
        let scale = op.norm_bound().max(1.0);
        let mut worst = 0.0f64;
        for k in 0..n {
            worst = worst.max(op.residual_norm(eig.eigenvalues()[k], eig.vector(k)) / scale);
            for j in k..n {
                let dot: f64 = eig.vector(k).iter().zip(eig.vector(j)).map(|(a, b)| a * b).sum();
                worst = worst.max((dot - if j == k { 1.0 } else { 0.0 }).abs());
            }
        }
        Some(worst)
    })
}

/// `|det T − 1|` relative to `‖T‖²` for windows of at most 20 sites.
pub fn unimodularity<X: Executor>(cases: usize, seed: u64, exec: &X) -> SuiteReport {
    tally("unimodularity", cases, 1e-12, exec, |i| {
        let mut rng = case_rng(seed, 4, i);
        let dist = pick_distribution(&mut rng, i);
        let len = rng.random_range(1..=20);
        let r = sample_potential(&dist, rng.random(), 0, len - 1).ok()?;
        let m = interval_transfer(&r, 0, len - 1, rng.random_range(-4.0..4.0)).ok()?.reconstruct();
        Some((m.det() - 1.0).abs() / m.frobenius().powi(2).max(1.0))
    })
}

/// `T_{[a,c]} = T_{[b+1,c]}·T_{[a,b]}` in log-norm and direction.
pub fn cocycle_law<X: Executor>(cases: usize, seed: u64, exec: &X) -> SuiteReport {
    tally("cocycle-law", cases, 1e-9, exec, |i| {
        let mut rng = case_rng(seed, 5, i);
        let dist = pick_distribution(&mut rng, i);
        let (a, c) = (rng.random_range(-200..0), rng.random_range(1..200));
        let b = rng.random_range(a..c);
        let e = rng.random_range(-4.0..4.0);
        let r = sample_potential(&dist, rng.random(), a, c).ok()?;
        let whole = interval_transfer(&r, a, c, e).ok()?;
        let joined = interval_transfer(&r, a, b, e).ok()?.then(&interval_transfer(&r, b + 1, c, e).ok()?);
        let shift = (joined.log_scale() - whole.log_scale()).exp();
        let (x, y) = (joined.matrix().entries(), whole.matrix().entries());
        let dir = (0..4).map(|k| (x[k] * shift - y[k]).abs()).fold(0.0, f64::max);
        Some(dir.max((joined.log_norm() - whole.log_norm()).abs()))
    })
}

/// Products of word matrices against site-by-site products over whole words.
pub fn word_consistency<X: Executor>(cases: usize, seed: u64, exec: &X) -> SuiteReport {
    tally("word-consistency", cases, 1e-10, exec, |i| {
        let mut rng = case_rng(seed, 6, i);
        let dist = pick_distribution(&mut rng, i);
        let e = rng.random_range(-4.0..4.0);
        let r = sample_potential(&dist, rng.random(), -15, 15).ok()?;
        let whole: Vec<_> = r.segments().iter().filter(|s| s.start >= -15 && s.end() <= 15).copied().collect();
        let (a, b) = (whole.first()?.start, whole.last()?.end());
        let m = whole.iter().fold([1.0, 0.0, 0.0, 1.0], |m, s| mul2(word_transfer(e, &dist.words()[s.word]).entries(), m));
        let direct = naive_transfer(r.slice(a, b).ok()?, e);
        let scale = direct.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        Some((0..4).map(|k| (m[k] - direct[k]).abs() / scale).fold(0.0, f64::max))
    })
}

fn random_eigensystem(rng: &mut ChaCha8Rng, i: usize) -> Option<(locword_core::EigenSystem, i64)> {
    let dist = pick_distribution(rng, i);
    let n = rng.random_range(2..=80);
    let r = sample_potential(&dist, rng.random(), 0, n - 1).ok()?;
    Some((restrict(&r, 0, n - 1).ok()?.eigensystem(), n))
}

/// `|Σ_n |⟨δ_n, e^{−itH} δ_q⟩|² − 1|` at 10 random `(t, q)` per box.
pub fn unitarity<X: Executor>(cases: usize, seed: u64, exec: &X) -> SuiteReport {
    tally("unitarity", cases, 1e-9, exec, |i| {
        let mut rng = case_rng(seed, 7, i);
        let (eig, n) = random_eigensystem(&mut rng, i)?;
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let q = rng.random_range(0..n);
            let t = rng.random_range(-100.0..100.0);
            let mass: f64 = (0..n).map(|s| evolve_amplitude(&eig, s, q, t).map(|z| z.norm_sqr()).unwrap_or(f64::NAN)).sum();
            worst = worst.max((mass - 1.0).abs());
        }
        Some(worst)
    })
}

/// Excess of `|⟨δ_p, P_I e^{−itH} δ_q⟩|` over the dominating kernel, plus its asymmetry.
pub fn kernel_domination<X: Executor>(cases: usize, seed: u64, exec: &X) -> SuiteReport {
    tally("kernel-domination", cases, 1e-10, exec, |i| {
        let mut rng = case_rng(seed, 8, i);
        let (eig, n) = random_eigensystem(&mut rng, i)?;
        let lo = rng.random_range(-4.0..3.0);
        let proj = SpectralProjection::new(&eig, lo, lo + rng.random_range(0.0..3.0)).ok()?;
        let (p, q) = (rng.random_range(0..n), rng.random_range(0..n));
        let bound = projected_kernel_sup_bound(&eig, &proj, p, q).ok()?;
        let sym = (bound - projected_kernel_sup_bound(&eig, &proj, q, p).ok()?).abs();
        let mut worst = sym.max(bound - 1.0);
        for _ in 0..100 {
            let t = rng.random_range(-200.0..200.0);
            worst = worst.max(projected_amplitude(&eig, &proj, p, q, t).ok()?.norm() - bound);
        }
        Some(worst.max(0.0))
    })
}

/// Eigenvalues of `[a, b−1]` interlace those of `[a, b]`; error is the worst crossing.
pub fn interlacing<X: Executor>(cases: usize, seed: u64, exec: &X) -> SuiteReport {
    tally("interlacing", cases, 1e-12, exec, |i| {
        let mut rng = case_rng(seed, 9, i);
        let dist = pick_distribution(&mut rng, i);
        let n = rng.random_range(2..=80);
        let r = sample_potential(&dist, rng.random(), 0, n - 1).ok()?;
        let big = restrict(&r, 0, n - 1).ok()?.eigenvalues();
        let small = restrict(&r, 0, n - 2).ok()?.eigenvalues();
        Some(small.iter().enumerate().map(|(k, mu)| (big[k] - mu).max(mu - big[k + 1]).max(0.0)).fold(0.0, f64::max))
    })
}

/// Paired differences of `V(s)` and `V(s)²` between sites, in standard errors.
///
/// Each preset contributes `sites × 2` comparisons over 4000 realizations;
/// the tolerance is 3 standard errors of the paired difference.
pub fn stationarity<X: Executor>(seed: u64, exec: &X) -> SuiteReport {
    let start = Instant::now();
    let sites = [-37i64, -1, 0, 1, 2, 50];
    let n = 4000;
    let mut zs = Vec::new();
    for dist in presets() {
        let draws: Vec<Vec<f64>> = exec.map_indexed(n, |i| {
            let r = sample_potential(&dist, realization_seed(seed ^ 10, i as u64), -40, 60).expect("window");
            sites.iter().map(|&s| r.value(s).expect("inside")).collect()
        });
        for power in [1, 2] {
            for j in 1..sites.len() {
                let diff: Vec<f64> = draws.iter().map(|d| d[j].powi(power) - d[0].powi(power)).collect();
                let (m, se) = mean_and_stderr(&diff);
                zs.push(if se > 0.0 {
                    m.abs() / se
                } else if m == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                });
            }
        }
    }
    SuiteReport {
        name: "stationarity",
        cases: zs.len(),
        violations: zs.iter().filter(|z| !(**z <= 3.0)).count(),
        max_error: zs.iter().copied().fold(0.0, f64::max),
        tolerance: 3.0,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// The default `verify` run.
pub fn run_all<X: Executor>(cases: usize, seed: u64, exec: &X) -> Vec<SuiteReport> {
    let small = (cases / 10).max(1);
    vec![
        determinant_identity(cases, seed, exec),
        green_agreement(cases, seed, exec),
        eigen_residuals((cases / 20).max(1), seed, exec),
        unimodularity(cases, seed, exec),
        cocycle_law(cases, seed, exec),
        word_consistency(cases, seed, exec),
        unitarity(small, seed, exec),
        kernel_domination(small, seed, exec),
        interlacing(small, seed, exec),
        stationarity(seed, exec),
    ]
}

/// Fixed-width pass/fail table.
pub fn render_table(reports: &[SuiteReport]) -> String {
    let mut s = format!(
        "{:<22} {:>6} {:>10} {:>12} {:>10} {:>8}  result\n",
        "suite", "cases", "violations", "max error", "tolerance", "seconds"
    );
    for r in reports {
        s.push_str(&format!(
            "{:<22} {:>6} {:>10} {:>12.3e} {:>10.1e} {:>8.2}  {}\n",
            r.name,
            r.cases,
            r.violations,
            r.max_error,
            r.tolerance,
            r.seconds,
            if r.passed() { "PASS" } else { "FAIL" }
        ));
    }
    s
}
