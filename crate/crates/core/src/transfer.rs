//! Transfer matrices and the Lyapunov exponent.
//!
//! Solutions of `Hψ = Eψ` propagate by
//! `(ψ(n+1), ψ(n))ᵀ = T_{V(n),E} (ψ(n), ψ(n−1))ᵀ` with
//! `T_{v,E} = [[E−v, −1], [1, 0]]`. Products over long intervals grow like
//! `e^{γ(E)·n}`, so they are accumulated as a bounded matrix times an explicit
//! log-scale.

use alloc::vec::Vec;
use core::ops::Mul;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::exec::{realization_seed, Executor};
use crate::stats::{mean_and_stderr, CompensatedSum};
use crate::word_model::{sample_potential, PotentialRealization, Word, WordDistribution};

/// Real 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl TransferMatrix {
    pub const IDENTITY: Self = Self { a11: 1.0, a12: 0.0, a21: 0.0, a22: 1.0 };

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    fn frobenius_sq(&self) -> f64 {
        self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    /// Inverse of a unimodular matrix.
    pub fn inverse(&self) -> Self {
        let d = self.det();
        Self::new(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d)
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn apply(&self, v: (f64, f64)) -> (f64, f64) {
        (self.a11 * v.0 + self.a12 * v.1, self.a21 * v.0 + self.a22 * v.1)
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, r: TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            a11: self.a11 * r.a11 + self.a12 * r.a21,
            a12: self.a11 * r.a12 + self.a12 * r.a22,
            a21: self.a21 * r.a11 + self.a22 * r.a21,
            a22: self.a21 * r.a12 + self.a22 * r.a22,
        }
    }
}

/// `T_{v,E} = [[E−v, −1], [1, 0]]`.
pub fn one_step(energy: f64, v: f64) -> TransferMatrix {
    TransferMatrix::new(energy - v, -1.0, 1.0, 0.0)
}

/// `T_{w,E} = T_{w_j,E} ⋯ T_{w_1,E}`.
pub fn word_transfer(energy: f64, word: &Word) -> TransferMatrix {
    word.letters().iter().fold(TransferMatrix::IDENTITY, |acc, &v| one_step(energy, v) * acc)
}

const RENORM_LOW_SQ: f64 = 0.25;
const RENORM_HIGH_SQ: f64 = 16.0;

/// Cocycle product stored as `e^{log_scale} · matrix`.
///
/// The stored matrix is rescaled to unit Frobenius norm whenever its norm
/// leaves `[0.5, 4]`; the extracted logarithms are summed with compensation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormProduct {
    matrix: TransferMatrix,
    log_scale: CompensatedSum,
    steps: usize,
}

impl Default for LogNormProduct {
    fn default() -> Self {
        Self::identity()
    }
}

impl LogNormProduct {
    pub fn identity() -> Self {
        Self { matrix: TransferMatrix::IDENTITY, log_scale: CompensatedSum::new(), steps: 0 }
    }

    /// Renormalized stored matrix.
    pub fn matrix(&self) -> TransferMatrix {
        self.matrix
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale.value()
    }

    /// Number of sites consumed.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Left-multiplies by `T_{v,E}`.
    #[inline]
    pub fn push_site(&mut self, energy: f64, v: f64) {
        let m = &mut self.matrix;
        let c = energy - v;
        let (b11, b12) = (c * m.a11 - m.a21, c * m.a12 - m.a22);
        m.a21 = m.a11;
        m.a22 = m.a12;
        m.a11 = b11;
        m.a12 = b12;
        self.steps += 1;
        self.renormalize();
    }

    /// Left-multiplies by an arbitrary matrix covering `sites` sites.
    pub fn push_matrix(&mut self, t: &TransferMatrix, sites: usize) {
        self.matrix = *t * self.matrix;
        self.steps += sites;
        self.renormalize();
    }

    #[inline]
    fn renormalize(&mut self) {
        let f2 = self.matrix.frobenius_sq();
        if !(RENORM_LOW_SQ..=RENORM_HIGH_SQ).contains(&f2) && f2 > 0.0 {
            let f = f2.sqrt();
            self.matrix = self.matrix.scale(1.0 / f);
            self.log_scale.add(f.ln());
        }
    }

    /// `later · self`, the product over the concatenated interval.
    pub fn then(&self, later: &LogNormProduct) -> LogNormProduct {
        let mut out =
            LogNormProduct { matrix: later.matrix * self.matrix, log_scale: self.log_scale, steps: self.steps + later.steps };
        out.log_scale.add(later.log_scale());
        out.renormalize();
        out
    }

    /// `log ‖product‖_F`.
    pub fn log_norm(&self) -> f64 {
        self.log_scale() + self.matrix.frobenius().ln()
    }

    /// `e^{log_scale} · matrix`. Overflows for long products.
    pub fn reconstruct(&self) -> TransferMatrix {
        self.matrix.scale(self.log_scale().exp())
    }

    /// `|det(product) − 1|`, evaluated in the log domain.
    pub fn unimodularity_defect(&self) -> f64 {
        let d = self.matrix.det();
        let log_det = d.abs().ln() + 2.0 * self.log_scale();
        (d.signum() * log_det.exp() - 1.0).abs()
    }
}

/// `T_{[a,b],E} = T_{V(b),E} ⋯ T_{V(a),E}` over a realization.
pub fn interval_transfer(r: &PotentialRealization, a: i64, b: i64, energy: f64) -> Result<LogNormProduct> {
    let values = r.slice(a, b)?;
    Ok(potential_transfer(values, energy))
}

/// Product of one-step matrices over a raw potential slice, first site first.
pub fn potential_transfer(values: &[f64], energy: f64) -> LogNormProduct {
    let mut p = LogNormProduct::identity();
    for &v in values {
        p.push_site(energy, v);
    }
    p
}

/// Per-site Lyapunov estimate `γ̂(E)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    pub energy: f64,
    pub gamma: f64,
    pub std_error: f64,
    pub sites: usize,
}

/// Ensemble size for Lyapunov estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LyapunovConfig {
    pub sites: usize,
    pub realizations: usize,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self { sites: 1_000_000, realizations: 8 }
    }
}

pub const MIN_LYAPUNOV_SITES: usize = 10_000;
pub const MIN_LYAPUNOV_REALIZATIONS: usize = 8;

impl LyapunovConfig {
    pub fn new(sites: usize, realizations: usize) -> Result<Self> {
        let cfg = Self { sites, realizations };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.sites < MIN_LYAPUNOV_SITES {
            return Err(invalid("Lyapunov estimates need at least 10^4 sites"));
        }
        if self.realizations < MIN_LYAPUNOV_REALIZATIONS {
            return Err(invalid("Lyapunov estimates need at least 8 realizations"));
        }
        Ok(())
    }
}

/// Per-realization rates `(1/sites)·log‖T_{[1,sites],E}‖` for every energy.
fn realization_rates(dist: &WordDistribution, energies: &[f64], sites: usize, seed: u64) -> Vec<f64> {
    let r = sample_potential(dist, seed, 1, sites as i64).expect("nonempty window");
    energies.iter().map(|&e| potential_transfer(r.values(), e).log_norm() / sites as f64).collect()
}

fn ensemble_rates<X: Executor>(
    dist: &WordDistribution,
    energies: &[f64],
    cfg: &LyapunovConfig,
    seed: u64,
    exec: &X,
) -> Vec<LyapunovEstimate> {
    let per_realization =
        exec.map_indexed(cfg.realizations, |i| realization_rates(dist, energies, cfg.sites, realization_seed(seed, i as u64)));
    energies
        .iter()
        .enumerate()
        .map(|(j, &energy)| {
            let rates: Vec<f64> = per_realization.iter().map(|r| r[j]).collect();
            let (gamma, std_error) = mean_and_stderr(&rates);
            LyapunovEstimate { energy, gamma, std_error, sites: cfg.sites }
        })
        .collect()
}

/// `γ̂(E)` averaged over `cfg.realizations` independent paths.
pub fn lyapunov_estimate<X: Executor>(
    dist: &WordDistribution,
    energy: f64,
    cfg: &LyapunovConfig,
    seed: u64,
    exec: &X,
) -> Result<LyapunovEstimate> {
    cfg.validate()?;
    Ok(ensemble_rates(dist, &[energy], cfg, seed, exec)[0])
}

/// `γ̂` on an energy grid, with critical neighborhoods flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCurve {
    pub estimates: Vec<LyapunovEstimate>,
    /// Threshold used for flagging, if any.
    pub threshold: Option<f64>,
    /// Grid points in a flagged critical neighborhood.
    pub flagged: Vec<bool>,
    /// `min γ̂` over unflagged grid points; `None` when every point is flagged.
    pub v_floor: Option<f64>,
}

impl LyapunovCurve {
    /// Builds a curve from estimates, flagging sub-threshold clusters and
    /// their immediate grid neighbors.
    pub fn from_estimates(estimates: Vec<LyapunovEstimate>, threshold: Option<f64>) -> Self {
        let n = estimates.len();
        let mut flagged = alloc::vec![false; n];
        if let Some(th) = threshold {
            for (i, e) in estimates.iter().enumerate() {
                if e.gamma < th {
                    flagged[i.saturating_sub(1)..(i + 2).min(n)].iter_mut().for_each(|f| *f = true);
                }
            }
        }
        let v_floor = estimates
            .iter()
            .zip(&flagged)
            .filter(|(_, f)| !**f)
            .map(|(e, _)| e.gamma)
            .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.min(g))));
        Self { estimates, threshold, flagged, v_floor }
    }

    pub fn energies(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.energy).collect()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.gamma).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }
}

/// Ascending grid `lo, lo+step, …` up to `hi` (inclusive within rounding).
pub fn energy_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid("energy grid needs lo <= hi and step > 0"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

/// Lyapunov curve on an ascending grid with shared ensemble seeds.
pub fn lyapunov_curve<X: Executor>(
    dist: &WordDistribution,
    grid: &[f64],
    cfg: &LyapunovConfig,
    seed: u64,
    threshold: Option<f64>,
    exec: &X,
) -> Result<LyapunovCurve> {
    cfg.validate()?;
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("energy grid must be strictly ascending"));
    }
    let estimates = ensemble_rates(dist, grid, cfg, seed, exec);
    Ok(LyapunovCurve::from_estimates(estimates, threshold))
}

/// Clusters of consecutive grid points with `γ̂ < threshold`, as index ranges.
fn critical_clusters(curve: &LyapunovCurve, threshold: f64) -> Vec<(usize, usize)> {
    let mut clusters = Vec::new();
    let mut start = None;
    for (i, e) in curve.estimates.iter().enumerate() {
        match (e.gamma < threshold, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                clusters.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        clusters.push((s, curve.estimates.len() - 1));
    }
    clusters
}

fn cluster_minimizer(curve: &LyapunovCurve, (lo, hi): (usize, usize)) -> usize {
    (lo..=hi).min_by(|&i, &j| curve.estimates[i].gamma.total_cmp(&curve.estimates[j].gamma)).expect("nonempty cluster")
}

/// Energies where `γ̂ < threshold`, one per cluster of adjacent grid points,
/// each represented by its minimizing grid energy.
pub fn detect_critical_energies(curve: &LyapunovCurve, threshold: f64) -> Result<Vec<f64>> {
    if curve.is_empty() {
        return Err(Error::Input("empty Lyapunov curve".into()));
    }
    if !(threshold >= 0.0) {
        return Err(invalid("threshold must be nonnegative"));
    }
    Ok(critical_clusters(curve, threshold).into_iter().map(|c| curve.estimates[cluster_minimizer(curve, c)].energy).collect())
}

/// Detection followed by one refinement pass per cluster: `γ̂` is evaluated at
/// the two half-step neighbors of the cluster minimizer and at the midpoint
/// between the best point and its better side (three extra evaluations).
pub fn refine_critical_energies<X: Executor>(
    dist: &WordDistribution,
    curve: &LyapunovCurve,
    threshold: f64,
    cfg: &LyapunovConfig,
    seed: u64,
    exec: &X,
) -> Result<Vec<LyapunovEstimate>> {
    detect_critical_energies(curve, threshold)?;
    let step = match curve.estimates.as_slice() {
        [a, b, ..] => b.energy - a.energy,
        _ => return Ok(curve.estimates.iter().filter(|e| e.gamma < threshold).copied().collect()),
    };
    let mut out = Vec::new();
    for cluster in critical_clusters(curve, threshold) {
        let best = curve.estimates[cluster_minimizer(curve, cluster)];
        let e0 = best.energy;
        let pair = lyapunov_curve(dist, &[e0 - step / 2.0, e0 + step / 2.0], cfg, seed, None, exec)?;
        let (left, right) = (pair.estimates[0], pair.estimates[1]);
        let third_energy = if left.gamma < best.gamma.min(right.gamma) {
            left.energy - step / 4.0
        } else if right.gamma < best.gamma {
            right.energy + step / 4.0
        } else if left.gamma < right.gamma {
            e0 - step / 4.0
        } else {
            e0 + step / 4.0
        };
        let third = lyapunov_estimate(dist, third_energy, cfg, seed, exec)?;
        let winner = [best, left, right, third].into_iter().min_by(|a, b| a.gamma.total_cmp(&b.gamma)).expect("four candidates");
        out.push(winner);
    }
    Ok(out)
}

/// Word-normalized rate alongside the per-site rate on the same paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationCheck {
    /// `(1/S_k)·log‖T(1,k)‖` averaged over realizations.
    pub per_site: (f64, f64),
    /// `(1/(k⟨L⟩))·log‖T(1,k)‖` averaged over realizations.
    pub per_word: (f64, f64),
    pub words: usize,
}

/// Compares per-site and per-word normalizations of `log‖T_{ω,E}(1,k)‖`
/// over `k` words right of the origin word.
pub fn normalization_check<X: Executor>(
    dist: &WordDistribution,
    energy: f64,
    words: usize,
    realizations: usize,
    seed: u64,
    exec: &X,
) -> Result<NormalizationCheck> {
    if words == 0 || realizations < 2 {
        return Err(invalid("need at least one word and two realizations"));
    }
    let mean_len = dist.mean_word_length();
    let span = (words * dist.max_word_length()) as i64 + dist.max_word_length() as i64;
    let pairs = exec.map_indexed(realizations, |i| {
        let r = sample_potential(dist, realization_seed(seed, i as u64), 0, span).expect("window");
        let scales = r.random_scales(words).expect("window covers k words");
        let origin = r.segments().iter().position(|s| s.start <= 0 && 0 <= s.end()).expect("origin");
        let mut p = LogNormProduct::identity();
        for seg in &r.segments()[origin + 1..=origin + words] {
            p.push_matrix(&word_transfer(energy, &dist.words()[seg.word]), seg.len);
        }
        let log_norm = p.log_norm();
        (log_norm / scales.s_n as f64, log_norm / (words as f64 * mean_len))
    });
    let site: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let word: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(NormalizationCheck { per_site: mean_and_stderr(&site), per_word: mean_and_stderr(&word), words })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use approx::assert_relative_eq;

    #[test]
    fn one_step_examples() {
        assert_eq!(one_step(0.0, 0.0).entries(), [0.0, -1.0, 1.0, 0.0]);
        assert_eq!(one_step(3.0, 1.0).entries(), [2.0, -1.0, 1.0, 0.0]);
        for (e, v) in [(0.3, -1.7), (12.5, 3.25), (-4.0, 0.125)] {
            assert_eq!(one_step(e, v).det(), 1.0);
        }
    }

    #[test]
    fn word_transfer_examples() {
        let lam = 0.75;
        let w = Word::new(alloc::vec![lam, lam]).unwrap();
        assert_eq!(word_transfer(lam, &w).entries(), [-1.0, 0.0, 0.0, -1.0]);
        let w = Word::new(alloc::vec![-1.0, -1.0]).unwrap();
        let t = word_transfer(1.0, &w);
        assert_eq!(t.entries(), [3.0, -2.0, 2.0, -1.0]);
        assert_eq!(t.det(), 1.0);
    }

    #[test]
    fn renormalization_keeps_norm_bounded() {
        let mut p = LogNormProduct::identity();
        for i in 0..10_000 {
            p.push_site(3.0, if i % 3 == 0 { 1.0 } else { -0.5 });
            let f = p.matrix().frobenius();
            assert!(f <= 4.0 * (1.0 + 4.5) + 1e-12);
        }
        assert!(p.log_norm().is_finite());
        // the determinant of a near rank-one product is only meaningful for short runs
        let mut q = LogNormProduct::identity();
        for i in 0..5 {
            q.push_site(3.0, if i % 3 == 0 { 1.0 } else { -0.5 });
        }
        assert!(q.unimodularity_defect() < 1e-10);
    }

    #[test]
    fn free_band_center_rotation() {
        let values = alloc::vec![0.0; 4];
        let p = potential_transfer(&values, 0.0);
        // rotation by a quarter turn, four times
        let m = p.reconstruct();
        assert_relative_eq!(m.a11, 1.0, epsilon = 1e-15);
        assert_relative_eq!(m.a12, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn grid_construction() {
        let g = energy_grid(-1.9, 1.9, 0.1).unwrap();
        assert_eq!(g.len(), 39);
        assert!((g[38] - 1.9).abs() < 1e-12);
        assert_eq!(energy_grid(0.5, 0.5, 0.1).unwrap(), [0.5]);
        assert!(energy_grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn detection_rules() {
        let est = |e: f64, g: f64| LyapunovEstimate { energy: e, gamma: g, std_error: 0.0, sites: 1 };
        let curve = LyapunovCurve::from_estimates(
            alloc::vec![est(-1.0, 0.5), est(-0.9, 0.01), est(-0.8, 0.005), est(-0.7, 0.3), est(0.0, 0.001)],
            Some(0.02),
        );
        assert_eq!(detect_critical_energies(&curve, 0.02).unwrap(), [-0.8, 0.0]);
        assert!(detect_critical_energies(&curve, 0.0).unwrap().is_empty());
        assert_eq!(curve.flagged, [true, true, true, true, true]);
        let empty = LyapunovCurve::from_estimates(alloc::vec![], None);
        assert!(detect_critical_energies(&empty, 0.1).is_err());
        let lone = LyapunovCurve::from_estimates(
            alloc::vec![est(0.0, 0.4), est(0.1, 0.3), est(0.2, 0.01), est(0.3, 0.2), est(0.4, 0.25), est(0.5, 0.6)],
            Some(0.02),
        );
        assert_eq!(lone.v_floor, Some(0.25));
    }

    #[test]
    fn config_validation() {
        assert!(LyapunovConfig::new(9_999, 8).is_err());
        assert!(LyapunovConfig::new(10_000, 7).is_err());
        let d = WordDistribution::free();
        let bad = LyapunovConfig { sites: 100, realizations: 8 };
        assert!(lyapunov_estimate(&d, 0.0, &bad, 1, &Sequential).is_err());
    }
}
