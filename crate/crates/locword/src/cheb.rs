//! Random-polynomial study of the node-to-interval sup bound.

use locword_core::finite_operator::{chebyshev_bound_check, ChebyshevCheck};
use locword_core::{realization_seed, Executor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq)]
pub struct NodeCountSummary {
    pub n: usize,
    pub checks: Vec<ChebyshevCheck>,
    pub max_c: f64,
    pub mean_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChebStudy {
    pub theta: f64,
    pub per_n: Vec<NodeCountSummary>,
    /// `max_n max C(n) / max C(first n)`.
    pub growth: f64,
}

impl ChebStudy {
    /// Bounded in the sense of the acceptance check: growth within a factor 2.
    pub fn bounded(&self) -> bool {
        self.growth <= 2.0
    }
}

/// `polys` polynomials per node count with i.i.d. standard-normal monomial coefficients.
pub fn random_polynomial_study<X: Executor>(
    degrees: &[usize],
    polys: usize,
    theta: f64,
    seed: u64,
    exec: &X,
) -> CliResult<ChebStudy> {
    let mut per_n = Vec::new();
    for &n in degrees {
        let checks = exec.map_indexed(polys, |i| {
            let mut rng = ChaCha8Rng::seed_from_u64(realization_seed(seed ^ (n as u64) << 32, i as u64));
            let coeffs: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            chebyshev_bound_check(&coeffs, theta)
        });
        let checks = checks.into_iter().collect::<Result<Vec<_>, _>>()?;
        let max_c = checks.iter().map(|c| c.implied_c).fold(0.0, f64::max);
        let mean_c = checks.iter().map(|c| c.implied_c).sum::<f64>() / checks.len().max(1) as f64;
        per_n.push(NodeCountSummary { n, checks, max_c, mean_c });
    }
    let first = per_n.first().map(|s| s.max_c).unwrap_or(0.0);
    let top = per_n.iter().map(|s| s.max_c).fold(0.0, f64::max);
    Ok(ChebStudy { theta, per_n, growth: if first > 0.0 { top / first } else { f64::INFINITY } })
}
