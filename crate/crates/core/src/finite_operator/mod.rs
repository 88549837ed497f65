//! Finite Dirichlet restrictions `H_{[a,b]}` and their spectral data.
//!
//! Determinants `P_{[a,b]}(E) = det(H_{[a,b]} − E)` follow the three-term
//! recursion `P_k = (V_k − E)·P_{k−1} − P_{k−2}` with `P_∅ = 1`. An interval
//! `[c, d]` with `d = c − 1` is empty; `d < c − 1` is reversed and has
//! determinant 0.

mod chebyshev;
mod eigen;
pub(crate) mod tridiag;

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::transfer::TransferMatrix;
use crate::word_model::PotentialRealization;

pub use self::chebyshev::{chebyshev_bound_check, chebyshev_nodes, ChebyshevCheck};
pub use self::eigen::EigenSystem;
use self::tridiag::{sturm_count, TridiagLu};

/// Windows longer than this use the log-magnitude determinant.
const LOG_DOMAIN_THRESHOLD: usize = 64;

/// Relative distance to the spectrum below which Green's functions are refused.
pub const NEAR_SINGULAR_TOLERANCE: f64 = 1e-10;

/// `sign · e^{ln_abs}`; zero is `(0, −∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: f64,
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ONE: Self = Self { sign: 1.0, ln_abs: 0.0 };
    pub const ZERO: Self = Self { sign: 0.0, ln_abs: f64::NEG_INFINITY };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self { sign: x.signum(), ln_abs: x.abs().ln() }
        }
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }
}

/// Determinant recursion carried with a shared log scale.
struct LogRecursion {
    prev: f64,
    cur: f64,
    log_scale: f64,
}

impl LogRecursion {
    fn new() -> Self {
        // P_{-1} = 0 (reversed), P_0 = 1 (empty)
        Self { prev: 0.0, cur: 1.0, log_scale: 0.0 }
    }

    #[inline]
    fn step(&mut self, c: f64) {
        let next = c * self.cur - self.prev;
        self.prev = self.cur;
        self.cur = next;
        let big = self.cur.abs().max(self.prev.abs());
        if big > 1e150 || (big < 1e-150 && big > 0.0) {
            self.cur /= big;
            self.prev /= big;
            self.log_scale += big.ln();
        }
    }

    fn value(&self) -> SignedLog {
        if self.cur == 0.0 {
            SignedLog::ZERO
        } else {
            SignedLog { sign: self.cur.signum(), ln_abs: self.cur.abs().ln() + self.log_scale }
        }
    }
}

/// `H_{[a,b]}` with diagonal `V(a..=b)` and unit hopping.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    start: i64,
    diagonal: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(start: i64, diagonal: Vec<f64>) -> Result<Self> {
        if diagonal.is_empty() {
            return Err(invalid("operator needs at least one site"));
        }
        if diagonal.iter().any(|v| !v.is_finite()) {
            return Err(invalid("diagonal entries must be finite"));
        }
        Ok(Self { start, diagonal })
    }

    pub fn window(&self) -> (i64, i64) {
        (self.start, self.start + self.diagonal.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    fn off_diagonal(&self) -> Vec<f64> {
        vec![1.0; self.len() - 1]
    }

    /// Row-sum bound on `‖H‖`, exact up to the Schur/Gershgorin estimate.
    pub fn norm_bound(&self) -> f64 {
        let n = self.len();
        (0..n).map(|i| self.diagonal[i].abs() + (i > 0) as u8 as f64 + (i + 1 < n) as u8 as f64).fold(0.0, f64::max)
    }

    fn index(&self, site: i64) -> Result<usize> {
        let (a, b) = self.window();
        if !(a..=b).contains(&site) {
            return Err(Error::Coverage { requested: (site, site), window: (a, b) });
        }
        Ok((site - a) as usize)
    }

    /// `det(H − E)`. Windows above 64 sites go through the log-domain
    /// recursion and may overflow to `±∞` on conversion.
    pub fn char_poly(&self, energy: f64) -> f64 {
        if self.len() > LOG_DOMAIN_THRESHOLD {
            return self.char_poly_log(energy).to_f64();
        }
        let (mut prev, mut cur) = (0.0, 1.0);
        for &v in &self.diagonal {
            let next = (v - energy) * cur - prev;
            prev = cur;
            cur = next;
        }
        cur
    }

    /// `det(H − E)` as sign and log-magnitude.
    pub fn char_poly_log(&self, energy: f64) -> SignedLog {
        let mut rec = LogRecursion::new();
        for &v in &self.diagonal {
            rec.step(v - energy);
        }
        rec.value()
    }

    /// `P_{[a, a+i−1]}` for `i = 0..=n`.
    pub fn prefix_determinants(&self, energy: f64) -> Vec<SignedLog> {
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut rec = LogRecursion::new();
        out.push(rec.value());
        for &v in &self.diagonal {
            rec.step(v - energy);
            out.push(rec.value());
        }
        out
    }

    /// `P_{[a+i, b]}` for `i = 0..=n`.
    pub fn suffix_determinants(&self, energy: f64) -> Vec<SignedLog> {
        let n = self.len();
        let mut out = vec![SignedLog::ONE; n + 1];
        let mut rec = LogRecursion::new();
        for i in (0..n).rev() {
            rec.step(self.diagonal[i] - energy);
            out[i] = rec.value();
        }
        out
    }

    /// Whether `E` lies within `1e−10·(‖H‖+1)` of the spectrum.
    pub fn is_near_spectrum(&self, energy: f64) -> bool {
        let delta = NEAR_SINGULAR_TOLERANCE * (self.norm_bound() + 1.0);
        let off = self.off_diagonal();
        sturm_count(&self.diagonal, &off, energy - delta) != sturm_count(&self.diagonal, &off, energy + delta)
    }

    fn ensure_off_spectrum(&self, energy: f64) -> Result<()> {
        if self.is_near_spectrum(energy) {
            return Err(Error::NearSingular { energy, window: self.window() });
        }
        Ok(())
    }

    /// Signed `G(x, y)` from the determinant formula, in the log domain.
    fn green_cramer_signed(&self, energy: f64, x: i64, y: i64) -> Result<SignedLog> {
        let (x, y) = if x <= y { (x, y) } else { (y, x) };
        let (i, j) = (self.index(x)?, self.index(y)?);
        let prefix = self.prefix_determinants(energy);
        let suffix = self.suffix_determinants(energy);
        let (left, right, total) = (prefix[i], suffix[j + 1], prefix[self.len()]);
        if total.sign == 0.0 {
            return Err(Error::NearSingular { energy, window: self.window() });
        }
        let parity = if (j - i) % 2 == 0 { 1.0 } else { -1.0 };
        let sign = parity * left.sign * right.sign * total.sign;
        Ok(SignedLog { sign, ln_abs: left.ln_abs + right.ln_abs - total.ln_abs })
    }

    /// Column `y` of `(H − E)^{-1}` by a pivoted LU solve.
    fn green_column(&self, energy: f64, y: i64) -> Result<Vec<f64>> {
        let j = self.index(y)?;
        let lu = TridiagLu::factor(&self.diagonal, &self.off_diagonal(), energy);
        if lu.min_pivot() == 0.0 {
            return Err(Error::NearSingular { energy, window: self.window() });
        }
        let mut rhs = vec![0.0; self.len()];
        rhs[j] = 1.0;
        lu.solve(&mut rhs, 0.0);
        Ok(rhs)
    }

    /// Signed Green's function entry (determinant route).
    pub fn green_entry(&self, energy: f64, x: i64, y: i64) -> Result<f64> {
        self.ensure_off_spectrum(energy)?;
        Ok(self.green_cramer_signed(energy, x, y)?.to_f64())
    }

    /// `|G_{[a,b],E}(x, y)|` by the requested method.
    pub fn green(&self, energy: f64, x: i64, y: i64, method: GreenMethod) -> Result<GreenValue> {
        self.ensure_off_spectrum(energy)?;
        let (x, y) = if x <= y { (x, y) } else { (y, x) };
        let value = match method {
            GreenMethod::Cramer => self.green_cramer_signed(energy, x, y)?.ln_abs.exp(),
            GreenMethod::Direct => {
                let col = self.green_column(energy, y)?;
                col[self.index(x)?].abs()
            }
        };
        Ok(GreenValue { x, y, value, method })
    }

    /// `log|G(x, y)|` by the determinant route; never underflows.
    pub fn log_green(&self, energy: f64, x: i64, y: i64) -> Result<f64> {
        self.ensure_off_spectrum(energy)?;
        Ok(self.green_cramer_signed(energy, x, y)?.ln_abs)
    }

    /// `|ψ(x) + G(x,a)ψ(a−1) + G(x,b)ψ(b+1)|` for `ψ` given on `[a−1, b+1]`.
    pub fn eigenfunction_identity_residual(&self, psi: &[f64], energy: f64, x: i64) -> Result<f64> {
        if psi.len() != self.len() + 2 {
            return Err(invalid("psi must be given on [a-1, b+1]"));
        }
        let (a, b) = self.window();
        let i = self.index(x)?;
        self.ensure_off_spectrum(energy)?;
        let g_xa = self.green_cramer_signed(energy, x, a)?.to_f64();
        let g_xb = self.green_cramer_signed(energy, x, b)?.to_f64();
        Ok((psi[i + 1] + g_xa * psi[0] + g_xb * psi[self.len() + 1]).abs())
    }

    /// Full eigendecomposition.
    pub fn eigensystem(&self) -> EigenSystem {
        let (values, vectors) = eigen::tridiagonal_eigen(&self.diagonal, &self.off_diagonal());
        EigenSystem::new(self.start, values, vectors)
    }

    /// Eigenvalues only (bisection).
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigen::bisection_eigenvalues(&self.diagonal, &self.off_diagonal())
    }

    /// Number of eigenvalues strictly below `energy`.
    pub fn count_below(&self, energy: f64) -> usize {
        sturm_count(&self.diagonal, &self.off_diagonal(), energy)
    }

    /// `H u − λ u`, 2-norm.
    pub fn residual_norm(&self, lambda: f64, u: &[f64]) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = (self.diagonal[i] - lambda) * u[i];
                if i > 0 {
                    s += u[i - 1];
                }
                if i + 1 < n {
                    s += u[i + 1];
                }
                s * s
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// How a Green's function value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GreenMethod {
    /// Ratio of determinants, log domain.
    Cramer,
    /// Pivoted LU solve of `(H − E) g = δ_y`.
    Direct,
}

/// `|G(x, y)|` with `x ≤ y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenValue {
    pub x: i64,
    pub y: i64,
    pub value: f64,
    pub method: GreenMethod,
}

/// `H_{ω,[a,b]}` from a realization.
pub fn restrict(r: &PotentialRealization, a: i64, b: i64) -> Result<TridiagonalOperator> {
    TridiagonalOperator::new(a, r.slice(a, b)?.to_vec())
}

/// Determinant on a sub-interval of `op`'s window with empty/reversed conventions.
fn sub_determinant(values: &[f64], lo: i64, hi: i64, energy: f64) -> f64 {
    if hi == lo - 1 {
        return 1.0;
    }
    if hi < lo - 1 {
        return 0.0;
    }
    let (mut prev, mut cur) = (0.0, 1.0);
    for &v in &values[lo as usize..=hi as usize] {
        let next = (v - energy) * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `det(E − H_{[c,d]}) = (−1)^{d−c+1}·det(H_{[c,d]} − E)`.
fn reversed_determinant(values: &[f64], lo: i64, hi: i64, energy: f64) -> f64 {
    let p = sub_determinant(values, lo, hi, energy);
    let len = hi - lo + 1;
    if len > 0 && len % 2 == 1 {
        -p
    } else {
        p
    }
}

/// The transfer matrix over `[a, b]` assembled from determinants:
/// `[[D_{[a,b]}, −D_{[a+1,b]}], [D_{[a,b−1]}, −D_{[a+1,b−1]}]]` with
/// `D = det(E − H)`, which is `±P` according to interval parity.
pub fn transfer_determinant_entries(r: &PotentialRealization, a: i64, b: i64, energy: f64) -> Result<TransferMatrix> {
    let values = r.slice(a, b)?;
    let (lo, hi) = (0_i64, b - a);
    Ok(TransferMatrix::new(
        reversed_determinant(values, lo, hi, energy),
        -reversed_determinant(values, lo + 1, hi, energy),
        reversed_determinant(values, lo, hi - 1, energy),
        -reversed_determinant(values, lo + 1, hi - 1, energy),
    ))
}

/// Outcome of the two boundary Green's bounds on `[x−n, x+n]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityVerdict {
    pub site: i64,
    pub scale: usize,
    pub rate: f64,
    /// `log|G(x, x−n)|`.
    pub log_left: f64,
    /// `log|G(x, x+n)|`.
    pub log_right: f64,
    pub left_ok: bool,
    pub right_ok: bool,
}

impl RegularityVerdict {
    pub fn is_regular(&self) -> bool {
        self.left_ok && self.right_ok
    }

    pub fn is_singular(&self) -> bool {
        !self.is_regular()
    }
}

/// `(c, n, E, ω)`-regularity of site `x`.
pub fn regularity(r: &PotentialRealization, x: i64, n: usize, energy: f64, rate: f64) -> Result<RegularityVerdict> {
    let n_i = n as i64;
    let op = restrict(r, x - n_i, x + n_i)?;
    regularity_on(&op, x, n, energy, rate)
}

/// Regularity with an already restricted operator on `[x−n, x+n]`.
pub fn regularity_on(op: &TridiagonalOperator, x: i64, n: usize, energy: f64, rate: f64) -> Result<RegularityVerdict> {
    let n_i = n as i64;
    if op.window() != (x - n_i, x + n_i) {
        return Err(invalid("operator window must be [x-n, x+n]"));
    }
    op.ensure_off_spectrum(energy)?;
    let log_left = op.green_cramer_signed(energy, x - n_i, x)?.ln_abs;
    let log_right = op.green_cramer_signed(energy, x, x + n_i)?.ln_abs;
    let bound = -rate * n as f64;
    Ok(RegularityVerdict {
        site: x,
        scale: n,
        rate,
        log_left,
        log_right,
        left_ok: log_left <= bound,
        right_ok: log_right <= bound,
    })
}

/// `argmax |u(n)|`; ties go to the smallest `|n|`, then the smallest `n`.
pub fn center_of_localization(u: &[f64], start: i64) -> Result<i64> {
    let mut best: Option<(f64, i64)> = None;
    for (i, v) in u.iter().enumerate() {
        let site = start + i as i64;
        let mag = v.abs();
        best = match best {
            None => Some((mag, site)),
            Some((m, s)) => {
                let better = mag > m || (mag == m && (site.abs(), site) < (s.abs(), s));
                Some(if better { (mag, site) } else { (m, s) })
            }
        };
    }
    match best {
        Some((m, s)) if m > 0.0 => Ok(s),
        _ => Err(Error::Input("zero vector has no center of localization".into())),
    }
}
