//! Time evolution on a finite box through its eigenexpansion,
//! `⟨δ_p, e^{−itH} δ_q⟩ = Σ_k e^{−iE_k t} u_k(p) u_k(q)`.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::finite_operator::{center_of_localization, EigenSystem};
use crate::stats::linear_fit;

/// Box half-width required per unit of time; hopping 1 bounds the group velocity by 2.
pub const BALLISTIC_MARGIN: f64 = 2.5;
pub const MIN_TIME_SAMPLES: usize = 64;
pub const DEFAULT_TIME_SAMPLES: usize = 256;

/// Eigen-indices with `E_k ∈ [lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProjection {
    pub lo: f64,
    pub hi: f64,
    indices: Vec<usize>,
}

impl SpectralProjection {
    pub fn new(eig: &EigenSystem, lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(invalid("projection interval needs lo <= hi"));
        }
        let indices = eig.eigenvalues().iter().enumerate().filter(|(_, &e)| lo <= e && e <= hi).map(|(k, _)| k).collect();
        Ok(Self { lo, hi, indices })
    }

    /// Projection onto the whole spectrum.
    pub fn full(eig: &EigenSystem) -> Self {
        let (lo, hi) = match eig.eigenvalues() {
            [] => (0.0, 0.0),
            v => (v[0], v[v.len() - 1]),
        };
        Self { lo, hi, indices: (0..eig.len()).collect() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn site_index(eig: &EigenSystem, site: i64) -> Result<usize> {
    let (a, b) = eig.window();
    if !(a..=b).contains(&site) {
        return Err(Error::Coverage { requested: (site, site), window: (a, b) });
    }
    Ok((site - a) as usize)
}

fn amplitude_over<I: Iterator<Item = usize>>(eig: &EigenSystem, ks: I, p: usize, q: usize, t: f64) -> Complex64 {
    let values = eig.eigenvalues();
    ks.map(|k| {
        let w = eig.vector(k);
        let phase = -values[k] * t;
        Complex64::new(phase.cos(), phase.sin()) * (w[p] * w[q])
    })
    .fold(Complex64::new(0.0, 0.0), |acc, z| acc + z)
}

/// `⟨δ_p, e^{−itH} δ_q⟩`.
pub fn evolve_amplitude(eig: &EigenSystem, p: i64, q: i64, t: f64) -> Result<Complex64> {
    let (pi, qi) = (site_index(eig, p)?, site_index(eig, q)?);
    Ok(amplitude_over(eig, 0..eig.len(), pi, qi, t))
}

/// `⟨δ_p, P_I e^{−itH} δ_q⟩`.
pub fn projected_amplitude(eig: &EigenSystem, proj: &SpectralProjection, p: i64, q: i64, t: f64) -> Result<Complex64> {
    let (pi, qi) = (site_index(eig, p)?, site_index(eig, q)?);
    Ok(amplitude_over(eig, proj.indices.iter().copied(), pi, qi, t))
}

/// `Σ_{E_k∈I} |u_k(p)||u_k(q)|`, which dominates `sup_t |⟨δ_p, P_I e^{−itH} δ_q⟩|`.
pub fn projected_kernel_sup_bound(eig: &EigenSystem, proj: &SpectralProjection, p: i64, q: i64) -> Result<f64> {
    let (pi, qi) = (site_index(eig, p)?, site_index(eig, q)?);
    Ok(proj
        .indices
        .iter()
        .map(|&k| {
            let w = eig.vector(k);
            (w[pi] * w[qi]).abs()
        })
        .sum())
}

/// Kernel row `q ↦ Σ_{E_k∈I} |u_k(p)||u_k(q)|` over the whole window.
pub fn projected_kernel_row(eig: &EigenSystem, proj: &SpectralProjection, p: i64) -> Result<Vec<f64>> {
    let pi = site_index(eig, p)?;
    let mut row = vec![0.0; eig.len()];
    for &k in &proj.indices {
        let w = eig.vector(k);
        let wp = w[pi].abs();
        row.iter_mut().zip(w).for_each(|(r, v)| *r += wp * v.abs());
    }
    Ok(row)
}

/// `s ↦ Σ_{k: E_k∈I, center(u_k)=l} u_k(s)²` on the window.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterCorrelator {
    pub start: i64,
    pub values: Vec<f64>,
    /// Selected eigenvectors centered at `l`.
    pub centered: usize,
}

impl CenterCorrelator {
    pub fn value(&self, site: i64) -> Option<f64> {
        let i = site.checked_sub(self.start)?;
        usize::try_from(i).ok().and_then(|i| self.values.get(i).copied())
    }
}

/// Eigenfunction correlator restricted to eigenvectors centered at `l`.
pub fn correlator_by_center(eig: &EigenSystem, proj: &SpectralProjection, l: i64) -> Result<CenterCorrelator> {
    site_index(eig, l)?;
    let (a, _) = eig.window();
    let mut values = vec![0.0; eig.len()];
    let mut centered = 0;
    for &k in &proj.indices {
        let w = eig.vector(k);
        if center_of_localization(w, a)? == l {
            centered += 1;
            values.iter_mut().zip(w).for_each(|(acc, v)| *acc += v * v);
        }
    }
    Ok(CenterCorrelator { start: a, values, centered })
}

/// Time-averaged `|X|^q` moments of the state started at `δ₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportSeries {
    pub q_exp: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Precomputed expansion of `δ₀` in the eigenbasis.
struct Wavepacket<'a> {
    eig: &'a EigenSystem,
    terms: Vec<(usize, f64)>,
    weights: Vec<f64>,
}

impl<'a> Wavepacket<'a> {
    fn new(eig: &'a EigenSystem, q_exp: f64) -> Result<Self> {
        let origin = site_index(eig, 0)?;
        let terms = (0..eig.len()).map(|k| (k, eig.vector(k)[origin])).filter(|(_, c)| c.abs() > 1e-15).collect();
        let (a, _) = eig.window();
        let weights = (0..eig.len()).map(|i| ((a + i as i64).abs() as f64).powf(q_exp)).collect();
        Ok(Self { eig, terms, weights })
    }

    fn moment_at(&self, t: f64, re: &mut [f64], im: &mut [f64]) -> f64 {
        re.iter_mut().for_each(|v| *v = 0.0);
        im.iter_mut().for_each(|v| *v = 0.0);
        let values = self.eig.eigenvalues();
        for &(k, c) in &self.terms {
            let phase = values[k] * t;
            let (ca, cb) = (c * phase.cos(), -c * phase.sin());
            let u = self.eig.vector(k);
            for ((r, i), &x) in re.iter_mut().zip(im.iter_mut()).zip(u) {
                *r += ca * x;
                *i += cb * x;
            }
        }
        self.weights.iter().zip(re.iter().zip(im.iter())).map(|(w, (r, i))| w * (r * r + i * i)).sum()
    }

    fn time_average(&self, horizon: f64, samples: usize) -> f64 {
        let n = self.eig.len();
        let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
        let sum: f64 = (1..=samples).map(|i| self.moment_at(horizon * (i as f64 - 0.5) / samples as f64, &mut re, &mut im)).sum();
        sum / samples as f64
    }
}

fn check_transport(eig: &EigenSystem, horizon: f64, samples: usize) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("time horizon must be positive"));
    }
    if samples < MIN_TIME_SAMPLES {
        return Err(invalid("transport moments need at least 64 time samples"));
    }
    let (a, b) = eig.window();
    let half_width = (-a).min(b);
    let required = BALLISTIC_MARGIN * horizon;
    if (half_width as f64) < required {
        return Err(Error::Reflection { half_width, required });
    }
    Ok(())
}

/// `(1/samples)·Σ_i Σ_n |n|^q |⟨δ_n, e^{−iHt_i} δ₀⟩|²` at midpoints `t_i` of `[0, T]`.
pub fn transport_moment(eig: &EigenSystem, q_exp: f64, horizon: f64, samples: usize) -> Result<f64> {
    check_transport(eig, horizon, samples)?;
    Ok(Wavepacket::new(eig, q_exp)?.time_average(horizon, samples))
}

/// Transport moments on a grid of horizons.
pub fn transport_series(eig: &EigenSystem, q_exp: f64, times: &[f64], samples: usize) -> Result<TransportSeries> {
    for &t in times {
        check_transport(eig, t, samples)?;
    }
    let packet = Wavepacket::new(eig, q_exp)?;
    let values = times.iter().map(|&t| packet.time_average(t, samples)).collect();
    Ok(TransportSeries { q_exp, times: times.to_vec(), values })
}

/// Log-spaced horizons `lo … hi`, `count ≥ 2` points.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || count < 2 {
        return Err(invalid("log grid needs 0 < lo < hi and at least two points"));
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    Ok((0..count).map(|i| (l0 + (l1 - l0) * i as f64 / (count - 1) as f64).exp()).collect())
}

/// `value ≈ e^{intercept} · T^{exponent}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least squares of `log value` against `log T` over `T ∈ [t_lo, t_hi]`.
pub fn growth_exponent_fit(series: &TransportSeries, t_lo: f64, t_hi: f64) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> =
        series.times.iter().zip(&series.values).filter(|(t, _)| **t >= t_lo && **t <= t_hi).map(|(t, v)| (*t, *v)).collect();
    if pts.len() < 5 {
        return Err(Error::Input("growth fit needs at least 5 points in the window".into()));
    }
    if pts.iter().any(|(t, v)| !(*v > 0.0) || !(*t > 0.0)) {
        return Err(Error::Input("growth fit needs positive values".into()));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(PowerFit { exponent: fit.slope, intercept: fit.intercept, r2: fit.r2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_operator::TridiagonalOperator;

    fn free(a: i64, n: usize) -> EigenSystem {
        TridiagonalOperator::new(a, vec![0.0; n]).unwrap().eigensystem()
    }

    #[test]
    fn amplitude_examples() {
        let eig = free(-5, 11);
        let one = evolve_amplitude(&eig, 2, 2, 0.0).unwrap();
        assert!((one.re - 1.0).abs() < 1e-12 && one.im.abs() < 1e-12);
        let zero = evolve_amplitude(&eig, 2, -1, 0.0).unwrap();
        assert!(zero.norm() < 1e-12);
        let single = TridiagonalOperator::new(0, vec![2.0]).unwrap().eigensystem();
        let z = evolve_amplitude(&single, 0, 0, 1.0).unwrap();
        assert!((z.re - 2.0_f64.cos()).abs() < 1e-15 && (z.im + 2.0_f64.sin()).abs() < 1e-15);
        assert!(evolve_amplitude(&eig, 6, 0, 0.0).is_err());
    }

    #[test]
    fn kernel_examples() {
        let eig = free(-5, 11);
        let all = SpectralProjection::full(&eig);
        assert!((projected_kernel_sup_bound(&eig, &all, 3, 3).unwrap() - 1.0).abs() < 1e-12);
        let none = SpectralProjection::new(&eig, 10.0, 11.0).unwrap();
        assert!(none.is_empty());
        assert_eq!(projected_kernel_sup_bound(&eig, &none, 3, -2).unwrap(), 0.0);
        let row = projected_kernel_row(&eig, &all, 1).unwrap();
        assert!((row[(4 + 5) as usize] - projected_kernel_sup_bound(&eig, &all, 1, 4).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn correlator_examples() {
        let single = TridiagonalOperator::new(3, vec![0.5]).unwrap().eigensystem();
        let proj = SpectralProjection::full(&single);
        let c = correlator_by_center(&single, &proj, 3).unwrap();
        assert_eq!(c.values, [1.0]);
        let eig = free(-5, 11);
        let proj = SpectralProjection::full(&eig);
        let c = correlator_by_center(&eig, &proj, -5).unwrap();
        // no free eigenvector peaks at the boundary site
        assert_eq!(c.centered, 0);
        assert!(c.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn transport_guards_and_limits() {
        let eig = free(-100, 201);
        assert!(matches!(transport_moment(&eig, 2.0, 50.0, 64), Err(Error::Reflection { .. })));
        assert!(transport_moment(&eig, 2.0, 10.0, 8).is_err());
        assert!(transport_moment(&eig, 2.0, 1e-9, 64).unwrap() < 1e-12);
        for horizon in [1.0, 10.0, 40.0] {
            let m0 = transport_moment(&eig, 0.0, horizon, 64).unwrap();
            assert!((m0 - 1.0).abs() < 1e-10, "{m0}");
        }
    }

    #[test]
    fn power_fit_exact() {
        let times = log_spaced(1.0, 100.0, 9).unwrap();
        let series = TransportSeries { q_exp: 2.0, values: times.iter().map(|t| t.powf(1.5)).collect(), times };
        let fit = growth_exponent_fit(&series, 0.0, 1e9).unwrap();
        assert!((fit.exponent - 1.5).abs() < 1e-9);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        let flat = TransportSeries { values: vec![3.0; 9], ..series.clone() };
        assert!(growth_exponent_fit(&flat, 0.0, 1e9).unwrap().exponent.abs() < 1e-12);
        let bad = TransportSeries { values: vec![0.0; 9], ..series };
        assert!(growth_exponent_fit(&bad, 0.0, 1e9).is_err());
    }
}
