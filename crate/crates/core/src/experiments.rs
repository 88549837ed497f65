//! Disorder-averaged Monte Carlo studies on finite boxes.
//!
//! Every estimator here is a pure function of its inputs: realization `i` of
//! an ensemble uses the seed `realization_seed(base, i)` and per-realization
//! results are reduced in index order.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::dynamics::{
    correlator_by_center, projected_kernel_row, transport_series, SpectralProjection, TransportSeries, BALLISTIC_MARGIN,
};
use crate::error::{invalid, Error, Result};
use crate::exec::{realization_seed, Executor};
use crate::finite_operator::{center_of_localization, regularity_on, restrict, TridiagonalOperator};
use crate::stats::{binomial_stderr, linear_fit, median};
use crate::transfer::{lyapunov_estimate, LyapunovConfig, LyapunovEstimate};
use crate::word_model::{sample_potential, PotentialRealization, WordDistribution};

/// A disorder ensemble on the box `[−half_width, half_width]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub dist: WordDistribution,
    pub half_width: i64,
    pub realizations: usize,
    pub seed: u64,
    /// Energy window `I`.
    pub window: (f64, f64),
    /// Distance kept clear of the box edges; defaults to an eighth of the box.
    pub margin: Option<i64>,
}

impl EnsembleSpec {
    pub fn new(dist: WordDistribution, half_width: i64, realizations: usize, seed: u64, window: (f64, f64)) -> Result<Self> {
        let spec = Self { dist, half_width, realizations, seed, window, margin: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_margin(mut self, margin: i64) -> Result<Self> {
        self.margin = Some(margin);
        self.validate()?;
        Ok(self)
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Result<Self> {
        self.window = (lo, hi);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(invalid("ensemble needs at least one realization"));
        }
        if self.half_width < 1 {
            return Err(invalid("box half-width must be positive"));
        }
        if !(self.window.0 <= self.window.1) {
            return Err(invalid("energy window needs lo <= hi"));
        }
        let m = self.margin();
        if m < 0 || m > self.half_width {
            return Err(invalid("sub-box margin must lie within the box"));
        }
        Ok(())
    }

    /// Number of sites per box side-to-side, `2·half_width` (the center site aside).
    pub fn box_size(&self) -> i64 {
        2 * self.half_width
    }

    pub fn box_window(&self) -> (i64, i64) {
        (-self.half_width, self.half_width)
    }

    pub fn margin(&self) -> i64 {
        self.margin.unwrap_or((self.box_size() + 7) / 8)
    }

    /// Buffered sub-box where statistics are collected.
    pub fn sub_box(&self) -> (i64, i64) {
        let m = self.margin();
        (-self.half_width + m, self.half_width - m)
    }

    pub fn realization(&self, index: usize) -> PotentialRealization {
        let (a, b) = self.box_window();
        sample_potential(&self.dist, realization_seed(self.seed, index as u64), a, b).expect("nonempty box")
    }

    pub fn operator(&self, index: usize) -> TridiagonalOperator {
        let r = self.realization(index);
        let (a, b) = self.box_window();
        restrict(&r, a, b).expect("box covered")
    }

    /// Default decay-fit distances `[box/20, box/4]`.
    pub fn default_fit_range(&self) -> (usize, usize) {
        let b = self.box_size() as usize;
        (b / 20, b / 4)
    }
}

/// Exponential fit `log value ≈ intercept + rate·distance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Slope of `log value`; negative for decay.
    pub rate: f64,
    pub intercept: f64,
    pub r2: f64,
    pub fit_lo: f64,
    pub fit_hi: f64,
}

impl DecayFit {
    /// `−rate`, the fitted decay constant.
    pub fn decay(&self) -> f64 {
        -self.rate
    }
}

/// Fits `log y` against `x` over points with `x ∈ [lo, hi]`.
pub fn fit_exponential(xs: &[f64], ys: &[f64], lo: f64, hi: f64) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(x, _)| **x >= lo && **x <= hi).map(|(x, y)| (*x, *y)).collect();
    if pts.len() < 5 {
        return Err(Error::Input("decay fit needs at least 5 points".into()));
    }
    if pts.iter().any(|(_, y)| !(*y > 0.0)) {
        return Err(Error::Input("decay fit needs positive values".into()));
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(DecayFit { rate: fit.slope, intercept: fit.intercept, r2: fit.r2, fit_lo: lo, fit_hi: hi })
}

/// Which large-deviation event is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `|P_{[1,n]}(E)| ≥ e^{(γ+ε)n}`.
    Plus,
    /// `|P_{[1,n]}(E)| ≤ e^{(γ−ε)n}`.
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationSpec {
    pub energy: f64,
    pub n: usize,
    pub epsilon: f64,
    pub side: Side,
}

/// Reference value of `γ(E)` with its statistical error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaReference {
    pub gamma: f64,
    pub std_error: f64,
}

impl From<LyapunovEstimate> for GammaReference {
    fn from(e: LyapunovEstimate) -> Self {
        Self { gamma: e.gamma, std_error: e.std_error }
    }
}

/// Empirical frequency with binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityEstimate {
    pub probability: f64,
    pub stderr: f64,
    pub hits: usize,
    pub trials: usize,
}

impl ProbabilityEstimate {
    fn from_counts(hits: usize, trials: usize) -> Self {
        let p = if trials == 0 { f64::NAN } else { hits as f64 / trials as f64 };
        Self { probability: p, stderr: binomial_stderr(p, trials), hits, trials }
    }
}

pub const MIN_DEVIATION_TRIALS: usize = 100;

/// Deviation frequencies for every `n` in `ns` from shared realizations on `[1, max n]`.
///
/// The reference error is added to `ε` so that only deviations beyond the
/// uncertainty of `γ̂` count.
pub fn deviation_curve<X: Executor>(
    dist: &WordDistribution,
    energy: f64,
    epsilon: f64,
    side: Side,
    ns: &[usize],
    trials: usize,
    seed: u64,
    reference: GammaReference,
    exec: &X,
) -> Result<Vec<ProbabilityEstimate>> {
    if trials < MIN_DEVIATION_TRIALS {
        return Err(invalid("deviation probabilities need at least 100 trials"));
    }
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon must be positive"));
    }
    if ns.iter().any(|&n| n < 2) || ns.is_empty() {
        return Err(invalid("interval lengths must be at least 2"));
    }
    let n_max = *ns.iter().max().expect("nonempty");
    let slack = epsilon + reference.std_error.max(0.0);
    let events = exec.map_indexed(trials, |i| {
        let r = sample_potential(dist, realization_seed(seed, i as u64), 1, n_max as i64).expect("window");
        let op = TridiagonalOperator::new(1, r.values().to_vec()).expect("finite potential");
        let logs = op.prefix_determinants(energy);
        ns.iter()
            .map(|&n| {
                let ln_abs = logs[n].ln_abs;
                match side {
                    Side::Plus => ln_abs >= (reference.gamma + slack) * n as f64,
                    Side::Minus => ln_abs <= (reference.gamma - slack) * n as f64,
                }
            })
            .collect::<Vec<bool>>()
    });
    Ok((0..ns.len()).map(|j| ProbabilityEstimate::from_counts(events.iter().filter(|e| e[j]).count(), trials)).collect())
}

/// Empirical probability of the deviation event `B±`.
pub fn deviation_probability<X: Executor>(
    dist: &WordDistribution,
    spec: &DeviationSpec,
    trials: usize,
    seed: u64,
    reference: GammaReference,
    exec: &X,
) -> Result<ProbabilityEstimate> {
    Ok(deviation_curve(dist, spec.energy, spec.epsilon, spec.side, &[spec.n], trials, seed, reference, exec)?[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdpFit {
    pub fit: DecayFit,
    /// `η̂ = −rate`.
    pub eta: f64,
    pub ns: Vec<usize>,
    pub points: Vec<ProbabilityEstimate>,
    pub reference: GammaReference,
}

/// Fits `log P[B±]` against `n`.
pub fn ldp_rate_fit<X: Executor>(
    dist: &WordDistribution,
    energy: f64,
    epsilon: f64,
    side: Side,
    ns: &[usize],
    trials: usize,
    seed: u64,
    reference: GammaReference,
    exec: &X,
) -> Result<LdpFit> {
    if ns.len() < 5 {
        return Err(invalid("rate fits need at least 5 interval lengths"));
    }
    let points = deviation_curve(dist, energy, epsilon, side, ns, trials, seed, reference, exec)?;
    if let Some((&n, _)) = ns.iter().zip(&points).find(|(_, p)| p.hits == 0) {
        return Err(Error::InsufficientTrials { n });
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.probability).collect();
    let fit = fit_exponential(&xs, &ys, f64::NEG_INFINITY, f64::INFINITY)?;
    Ok(LdpFit { eta: fit.decay(), fit, ns: ns.to_vec(), points, reference })
}

/// Closest approach of fitted eigenvector decay to the box edge.
const EIGEN_FIT_MIN_DISTANCE: i64 = 5;
/// Amplitudes below this are treated as rounding noise.
const EIGEN_AMPLITUDE_FLOOR: f64 = 1e-12;

/// Fitted decay constant of `log|u(n)|` against `|n − center|`.
pub fn eigenvector_decay_rate(u: &[f64], start: i64, center: i64, d_min: i64, d_max: i64) -> Option<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, v) in u.iter().enumerate() {
        let d = (start + i as i64 - center).abs();
        if d >= d_min && d <= d_max && v.abs() >= EIGEN_AMPLITUDE_FLOOR {
            xs.push(d as f64);
            ys.push(v.abs().ln());
        }
    }
    if xs.len() < 5 {
        return None;
    }
    linear_fit(&xs, &ys).ok().map(|f| -f.slope)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecaySummary {
    pub band: (f64, f64),
    /// Median fitted decay constant over used eigenvectors.
    pub median_rate: f64,
    /// `γ̂` at the band midpoint.
    pub reference: LyapunovEstimate,
    /// `median_rate / γ̂`.
    pub ratio: f64,
    pub rates: Vec<f64>,
    /// Whether the median rate is resolvable against the fit range.
    pub localized: bool,
}

/// Eigenvector decay rates in an energy band against `γ̂` at the band midpoint.
pub fn eigen_decay_vs_lyapunov<X: Executor>(
    ens: &EnsembleSpec,
    band: (f64, f64),
    critical: &[f64],
    lyapunov: &LyapunovConfig,
    exec: &X,
) -> Result<EigenDecaySummary> {
    if !(band.0 <= band.1) {
        return Err(invalid("band needs lo <= hi"));
    }
    if critical.iter().any(|e| band.0 <= *e && *e <= band.1) {
        return Err(invalid("band must avoid the critical energies"));
    }
    let (sub_lo, sub_hi) = ens.sub_box();
    let d_max = ens.box_size() / 4;
    let per_realization = exec.map_indexed(ens.realizations, |i| {
        let eig = ens.operator(i).eigensystem();
        let (a, _) = eig.window();
        let mut in_band = 0usize;
        let mut rates = Vec::new();
        for (k, &e) in eig.eigenvalues().iter().enumerate() {
            if e < band.0 || e > band.1 {
                continue;
            }
            in_band += 1;
            let u = eig.vector(k);
            let center = center_of_localization(u, a).expect("unit eigenvector");
            if center < sub_lo || center > sub_hi {
                continue;
            }
            if let Some(rate) = eigenvector_decay_rate(u, a, center, EIGEN_FIT_MIN_DISTANCE, d_max) {
                rates.push(rate);
            }
        }
        (in_band, rates)
    });
    let rates: Vec<f64> = per_realization.iter().flat_map(|(_, r)| r.iter().copied()).collect();
    let median_rate = match median(&rates) {
        Some(m) => m,
        None => return Err(Error::EmptyBand { lo: band.0, hi: band.1 }),
    };
    let reference = lyapunov_estimate(&ens.dist, 0.5 * (band.0 + band.1), lyapunov, ens.seed, exec)?;
    Ok(EigenDecaySummary {
        band,
        median_rate,
        reference,
        ratio: median_rate / reference.gamma,
        localized: median_rate * d_max as f64 >= 3.0,
        rates,
    })
}

/// Ensemble mean of a per-site profile, folded by distance from a site.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    pub site: i64,
    pub distances: Vec<usize>,
    pub values: Vec<f64>,
    /// Exponential fit over the fit window, when every value there is positive.
    pub fit: Option<DecayFit>,
}

fn fold_by_distance(row: &[f64], start: i64, site: i64, max_d: usize, out: &mut [f64]) {
    for d in 0..=max_d {
        let mut sum = 0.0;
        let mut count = 0.0;
        let d = d as i64;
        let sides: &[i64] = if d == 0 { &[site] } else { &[site - d, site + d] };
        for &s in sides {
            if let Some(v) = usize::try_from(s - start).ok().and_then(|i| row.get(i)) {
                sum += v;
                count += 1.0;
            }
        }
        if count > 0.0 {
            out[d as usize] += sum / count;
        }
    }
}

fn check_site(ens: &EnsembleSpec, site: i64) -> Result<()> {
    let (a, b) = ens.box_window();
    if site < a || site > b {
        return Err(Error::Coverage { requested: (site, site), window: (a, b) });
    }
    let (lo, hi) = ens.sub_box();
    if site < lo || site > hi {
        return Err(invalid("site must lie in the buffered sub-box"));
    }
    Ok(())
}

fn profile<X, F>(ens: &EnsembleSpec, site: i64, fit_range: Option<(usize, usize)>, exec: &X, row: F) -> Result<DistanceProfile>
where
    X: Executor,
    F: Fn(&crate::EigenSystem, &SpectralProjection) -> Vec<f64> + Sync + Send,
{
    check_site(ens, site)?;
    let (a, b) = ens.box_window();
    let max_d = (site - a).max(b - site) as usize;
    let rows = exec.map_indexed(ens.realizations, |i| {
        let eig = ens.operator(i).eigensystem();
        let proj = SpectralProjection::new(&eig, ens.window.0, ens.window.1).expect("validated window");
        let mut folded = vec![0.0; max_d + 1];
        fold_by_distance(&row(&eig, &proj), a, site, max_d, &mut folded);
        folded
    });
    let mut values = vec![0.0; max_d + 1];
    for r in &rows {
        values.iter_mut().zip(r).for_each(|(acc, v)| *acc += v);
    }
    Ok(finish_profile(ens, site, values, ens.realizations as f64, fit_range))
}

/// `E[Σ_{E_k∈I, center(u_k)=l} u_k(s)²]` against `|s − l|`.
pub fn correlator_profile<X: Executor>(
    ens: &EnsembleSpec,
    l: i64,
    fit_range: Option<(usize, usize)>,
    exec: &X,
) -> Result<DistanceProfile> {
    profile(ens, l, fit_range, exec, |eig, proj| correlator_by_center(eig, proj, l).expect("site inside box").values)
}

/// `E[Σ_{E_k∈I} |u_k(p)||u_k(q)|]` against `|p − q|`.
pub fn edl_kernel_decay<X: Executor>(
    ens: &EnsembleSpec,
    p: i64,
    fit_range: Option<(usize, usize)>,
    exec: &X,
) -> Result<DistanceProfile> {
    profile(ens, p, fit_range, exec, |eig, proj| projected_kernel_row(eig, proj, p).expect("site inside box"))
}

fn pooled_fold(eig: &crate::EigenSystem, proj: &SpectralProjection, sub: (i64, i64), max_d: usize, out: &mut [f64]) {
    let (a, _) = eig.window();
    for &k in proj.indices() {
        let u = eig.vector(k);
        let c = center_of_localization(u, a).expect("unit eigenvector");
        if c < sub.0 || c > sub.1 {
            continue;
        }
        let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
        fold_by_distance(&sq, a, c, max_d, out);
    }
}

fn finish_profile(
    ens: &EnsembleSpec,
    site: i64,
    mut values: Vec<f64>,
    scale: f64,
    fit_range: Option<(usize, usize)>,
) -> DistanceProfile {
    values.iter_mut().for_each(|v| *v /= scale);
    let distances: Vec<usize> = (0..values.len()).collect();
    let (lo, hi) = fit_range.unwrap_or_else(|| ens.default_fit_range());
    let xs: Vec<f64> = distances.iter().map(|&d| d as f64).collect();
    let fit = fit_exponential(&xs, &values, lo as f64, hi as f64).ok();
    DistanceProfile { site, distances, values, fit }
}

/// Correlator profile averaged over every center in the sub-box.
///
/// By stationarity the single-center profile depends only on `|s − l|`, so
/// pooling centers estimates the same mean with far less variance.
/// The reported `site` is the sub-box midpoint.
pub fn pooled_correlator_profile<X: Executor>(
    ens: &EnsembleSpec,
    fit_range: Option<(usize, usize)>,
    exec: &X,
) -> Result<DistanceProfile> {
    let mid = (ens.sub_box().0 + ens.sub_box().1) / 2;
    Ok(localization_profiles(ens, mid, fit_range, exec)?.correlator)
}

/// Pooled correlator and dominating-kernel profiles from one eigensolve per realization.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationProfiles {
    /// Pooled over centers, see [`pooled_correlator_profile`].
    pub correlator: DistanceProfile,
    /// Kernel row at the requested site, see [`edl_kernel_decay`].
    pub kernel: DistanceProfile,
    /// Unfolded ensemble-mean row `q ↦ E[Σ_{E_k∈I} |u_k(p)||u_k(q)|]` over the box.
    pub kernel_row: Vec<f64>,
}

pub fn localization_profiles<X: Executor>(
    ens: &EnsembleSpec,
    p: i64,
    fit_range: Option<(usize, usize)>,
    exec: &X,
) -> Result<LocalizationProfiles> {
    check_site(ens, p)?;
    let sub = ens.sub_box();
    let (a, b) = ens.box_window();
    let pooled_d = (sub.1 - a).max(b - sub.0) as usize;
    let kernel_d = (p - a).max(b - p) as usize;
    let rows = exec.map_indexed(ens.realizations, |i| {
        let eig = ens.operator(i).eigensystem();
        let proj = SpectralProjection::new(&eig, ens.window.0, ens.window.1).expect("validated window");
        let mut pooled = vec![0.0; pooled_d + 1];
        pooled_fold(&eig, &proj, sub, pooled_d, &mut pooled);
        let row = projected_kernel_row(&eig, &proj, p).expect("site inside box");
        let mut kernel = vec![0.0; kernel_d + 1];
        fold_by_distance(&row, a, p, kernel_d, &mut kernel);
        (pooled, kernel, row)
    });
    let mut pooled = vec![0.0; pooled_d + 1];
    let mut kernel = vec![0.0; kernel_d + 1];
    let mut kernel_row = vec![0.0; (b - a + 1) as usize];
    for (c, k, r) in &rows {
        pooled.iter_mut().zip(c).for_each(|(acc, v)| *acc += v);
        kernel.iter_mut().zip(k).for_each(|(acc, v)| *acc += v);
        kernel_row.iter_mut().zip(r).for_each(|(acc, v)| *acc += v);
    }
    let n = ens.realizations as f64;
    kernel_row.iter_mut().for_each(|v| *v /= n);
    let centers = (sub.1 - sub.0 + 1) as f64;
    Ok(LocalizationProfiles {
        correlator: finish_profile(ens, (sub.0 + sub.1) / 2, pooled, n * centers, fit_range),
        kernel: finish_profile(ens, p, kernel, n, fit_range),
        kernel_row,
    })
}

/// Ensemble mean of time-averaged transport moments on `[−half_width, half_width]`.
pub fn transport_ensemble<X: Executor>(
    dist: &WordDistribution,
    half_width: i64,
    realizations: usize,
    seed: u64,
    q_exp: f64,
    times: &[f64],
    samples: usize,
    exec: &X,
) -> Result<TransportSeries> {
    if realizations == 0 {
        return Err(invalid("ensemble needs at least one realization"));
    }
    if half_width < 1 {
        return Err(invalid("box half-width must be positive"));
    }
    // fail before the eigensolves
    if let Some(&t) = times.iter().find(|&&t| (half_width as f64) < BALLISTIC_MARGIN * t) {
        return Err(Error::Reflection { half_width, required: BALLISTIC_MARGIN * t });
    }
    let series = exec.map_indexed(realizations, |i| {
        let r = sample_potential(dist, realization_seed(seed, i as u64), -half_width, half_width).expect("window");
        let eig = restrict(&r, -half_width, half_width).expect("window").eigensystem();
        transport_series(&eig, q_exp, times, samples)
    });
    let mut values = vec![0.0; times.len()];
    for s in series {
        let s = s?;
        values.iter_mut().zip(&s.values).for_each(|(acc, v)| *acc += v / realizations as f64);
    }
    Ok(TransportSeries { q_exp, times: times.to_vec(), values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityEstimate {
    pub probability: f64,
    pub stderr: f64,
    pub regular: usize,
    pub evaluated: usize,
    /// Probes skipped because `E` sat on the local spectrum.
    pub near_singular: usize,
}

/// Probe sites `0, ±(2n+1), ±2(2n+1), …` inside the sub-box with `[x−n, x+n]` in the box.
pub fn regularity_probe_sites(ens: &EnsembleSpec, n_scale: usize) -> Vec<i64> {
    let (sub_lo, sub_hi) = ens.sub_box();
    let (a, b) = ens.box_window();
    let n = n_scale as i64;
    let step = 2 * n + 1;
    let ok = |x: i64| x >= sub_lo && x <= sub_hi && x - n >= a && x + n <= b;
    let mut sites = Vec::new();
    if ok(0) {
        sites.push(0);
    }
    let mut j = 1;
    loop {
        let (l, r) = (-j * step, j * step);
        let (okl, okr) = (ok(l), ok(r));
        if !okl && !okr {
            break;
        }
        if okl {
            sites.push(l);
        }
        if okr {
            sites.push(r);
        }
        j += 1;
    }
    sites.sort_unstable();
    sites
}

/// Fraction of `(realization, probe)` pairs that are `(c, n, E)`-regular.
/// Near-singular probes are skipped; if every probe is, `NearSingular` is returned.
pub fn regularity_probability<X: Executor>(
    ens: &EnsembleSpec,
    rate: f64,
    n_scale: usize,
    energy: f64,
    exec: &X,
) -> Result<RegularityEstimate> {
    let probes = regularity_probe_sites(ens, n_scale);
    if probes.is_empty() {
        return Err(invalid("box too small for the requested scale"));
    }
    let n = n_scale as i64;
    let tallies = exec.map_indexed(ens.realizations, |i| {
        let r = ens.realization(i);
        let (mut regular, mut evaluated, mut singular) = (0usize, 0usize, 0usize);
        for &x in &probes {
            let op = restrict(&r, x - n, x + n).expect("probe inside box");
            match regularity_on(&op, x, n_scale, energy, rate) {
                Ok(v) => {
                    evaluated += 1;
                    regular += v.is_regular() as usize;
                }
                Err(Error::NearSingular { .. }) => singular += 1,
                Err(e) => panic!("unexpected regularity failure: {e}"),
            }
        }
        (regular, evaluated, singular)
    });
    let regular = tallies.iter().map(|t| t.0).sum();
    let evaluated: usize = tallies.iter().map(|t| t.1).sum();
    let near_singular = tallies.iter().map(|t| t.2).sum();
    if evaluated == 0 {
        return Err(Error::NearSingular { energy, window: ens.box_window() });
    }
    let est = ProbabilityEstimate::from_counts(regular, evaluated);
    Ok(RegularityEstimate { probability: est.probability, stderr: est.stderr, regular, evaluated, near_singular })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;

    #[test]
    fn synthetic_exponential_fit() {
        let xs: Vec<f64> = (10..=60).step_by(10).map(|n| n as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|n| (-0.3 * n).exp()).collect();
        let fit = fit_exponential(&xs, &ys, 0.0, 1e9).unwrap();
        assert!((fit.decay() - 0.3).abs() < 1e-9);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(fit_exponential(&xs[..4], &ys[..4], 0.0, 1e9).is_err());
    }

    #[test]
    fn deviation_trivial_cases() {
        let free = WordDistribution::free();
        let zero = GammaReference { gamma: 0.0, std_error: 0.0 };
        let spec = DeviationSpec { energy: 0.0, n: 2, epsilon: 0.1, side: Side::Minus };
        let p = deviation_probability(&free, &spec, 100, 1, zero, &Sequential).unwrap();
        assert_eq!(p.probability, 0.0);

        let dimer = WordDistribution::dimer(1.0).unwrap();
        let e = 0.7;
        let huge = 10.0 * (2.0 + dimer.amplitude_bound() + e);
        let spec = DeviationSpec { energy: e, n: 40, epsilon: huge, side: Side::Plus };
        let p = deviation_probability(&dimer, &spec, 200, 2, zero, &Sequential).unwrap();
        assert_eq!(p.hits, 0);

        assert!(deviation_probability(&dimer, &spec, 99, 2, zero, &Sequential).is_err());
    }

    #[test]
    fn ldp_zero_cell_is_reported() {
        let dimer = WordDistribution::dimer(1.0).unwrap();
        let r = GammaReference { gamma: 0.1, std_error: 0.0 };
        let err = ldp_rate_fit(&dimer, 1.5, 50.0, Side::Plus, &[10, 20, 30, 40, 50], 100, 3, r, &Sequential);
        assert_eq!(err, Err(Error::InsufficientTrials { n: 10 }));
    }

    #[test]
    fn ensemble_geometry() {
        let ens = EnsembleSpec::new(WordDistribution::free(), 200, 2, 0, (0.0, 1.0)).unwrap();
        assert_eq!(ens.box_window(), (-200, 200));
        assert_eq!(ens.margin(), 50);
        assert_eq!(ens.sub_box(), (-150, 150));
        assert_eq!(ens.default_fit_range(), (20, 100));
        assert!(EnsembleSpec::new(WordDistribution::free(), 200, 0, 0, (0.0, 1.0)).is_err());
        assert!(EnsembleSpec::new(WordDistribution::free(), 200, 1, 0, (1.0, 0.0)).is_err());
        assert!(ens.clone().with_margin(201).is_err());
    }

    #[test]
    fn probe_sites_fit_in_box() {
        let ens = EnsembleSpec::new(WordDistribution::free(), 100, 1, 0, (0.0, 1.0)).unwrap();
        let sites = regularity_probe_sites(&ens, 20);
        assert_eq!(sites, [-41, 0, 41]);
        assert!(regularity_probe_sites(&ens, 200).is_empty());
    }

    #[test]
    fn profiles_empty_window_are_zero() {
        let ens = EnsembleSpec::new(WordDistribution::dimer(1.0).unwrap(), 40, 3, 9, (-10.0, -9.0)).unwrap();
        let c = correlator_profile(&ens, 0, None, &Sequential).unwrap();
        assert!(c.values.iter().all(|&v| v == 0.0));
        assert!(c.fit.is_none());
        let k = edl_kernel_decay(&ens, 0, None, &Sequential).unwrap();
        assert!(k.values.iter().all(|&v| v == 0.0));
        assert!(correlator_profile(&ens, 39, None, &Sequential).is_err());
    }

    #[test]
    fn pooled_profile_matches_kernel_pass() {
        let ens = EnsembleSpec::new(WordDistribution::dimer(1.0).unwrap(), 30, 4, 2, (1.2, 1.8)).unwrap();
        let both = localization_profiles(&ens, 0, Some((2, 10)), &Sequential).unwrap();
        let k = edl_kernel_decay(&ens, 0, Some((2, 10)), &Sequential).unwrap();
        assert_eq!(both.kernel, k);
        let c = pooled_correlator_profile(&ens, Some((2, 10)), &Sequential).unwrap();
        assert_eq!(both.correlator, c);
        // each centered eigenvector has unit mass, so the folded profile sums to at most one
        assert!(c.values[0] <= 1.0 && c.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn transport_ensemble_guards_and_normalizes() {
        let free = WordDistribution::free();
        let err = transport_ensemble(&free, 40, 2, 1, 2.0, &[10.0, 20.0], 64, &Sequential);
        assert_eq!(err, Err(Error::Reflection { half_width: 40, required: 50.0 }));
        let s = transport_ensemble(&free, 40, 2, 1, 0.0, &[4.0, 8.0], 64, &Sequential).unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn regularity_with_zero_rate_is_certain_off_spectrum() {
        let ens = EnsembleSpec::new(WordDistribution::dimer(1.0).unwrap(), 60, 5, 4, (0.0, 1.0)).unwrap();
        // E far above the spectrum: all |G| <= 1/dist < 1
        let est = regularity_probability(&ens, 0.0, 10, 6.0, &Sequential).unwrap();
        assert_eq!(est.probability, 1.0);
        assert_eq!(est.near_singular, 0);
    }

    #[test]
    fn regularity_all_probes_singular() {
        // 0 = 2cos(π·10/20) is an eigenvalue of every free 19-site box
        let ens = EnsembleSpec::new(WordDistribution::free(), 40, 2, 4, (0.0, 1.0)).unwrap();
        let err = regularity_probability(&ens, 0.1, 9, 0.0, &Sequential).unwrap_err();
        assert!(matches!(err, Error::NearSingular { .. }), "{err:?}");
    }
}
