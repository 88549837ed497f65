//! Finite-support word measures and the stationary potential process.
//!
//! A potential is a bi-infinite concatenation `… ω₋₁ ω₀ ω₁ …` of i.i.d. words
//! together with an offset `k` that places site 0 on the `k`-th letter of
//! `ω₀`. Under the suspension measure the word covering site 0 is drawn
//! length-biased and `k` is uniform on `1..=|ω₀|`, which makes `V` translation
//! invariant in law.
//!
//! Sampling is counter-based: a realization is keyed by a 64-bit seed, and the
//! word sequence to the right and to the left of the origin come from two
//! fixed ChaCha streams. Enlarging a window therefore extends the same path and
//! never resamples sites already seen.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

const WEIGHT_TOLERANCE: f64 = 1e-12;

const ORIGIN_STREAM: u64 = 0;
const RIGHT_STREAM: u64 = 1;
const LEFT_STREAM: u64 = 2;

/// A finite block of potential values.
#[derive(Debug, Clone, PartialEq)]
pub struct Word {
    letters: Vec<f64>,
}

impl Word {
    pub fn new(letters: Vec<f64>) -> Result<Self> {
        if letters.is_empty() {
            return Err(invalid("a word needs at least one letter"));
        }
        if letters.iter().any(|v| !v.is_finite()) {
            return Err(invalid("word letters must be finite"));
        }
        Ok(Self { letters })
    }

    pub fn letters(&self) -> &[f64] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

/// Word measure `ν` with finite support.
///
/// `max_len` is `m` (longest word) and `amplitude` is `M` (largest letter
/// magnitude). Zero-weight words are kept for bookkeeping but never sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct WordDistribution {
    words: Vec<Word>,
    weights: Vec<f64>,
    max_len: usize,
    amplitude: f64,
    support: Vec<usize>,
    cdf: Vec<f64>,
    biased_cdf: Vec<f64>,
}

impl WordDistribution {
    pub fn new(words: Vec<Word>, weights: Vec<f64>) -> Result<Self> {
        if words.is_empty() {
            return Err(invalid("distribution has no words"));
        }
        if words.len() != weights.len() {
            return Err(invalid("words and weights differ in length"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(invalid("weights must sum to 1"));
        }
        let max_len = words.iter().map(Word::len).max().unwrap_or(0);
        let amplitude = words.iter().flat_map(|w| w.letters.iter()).fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let support: Vec<usize> = (0..words.len()).filter(|&i| weights[i] > 0.0).collect();
        if support.is_empty() {
            return Err(invalid("no word has positive weight"));
        }

        let mean_len: f64 = support.iter().map(|&i| weights[i] * words[i].len() as f64).sum();
        let mut cdf = Vec::with_capacity(support.len());
        let mut biased_cdf = Vec::with_capacity(support.len());
        let (mut acc, mut acc_biased) = (0.0, 0.0);
        for &i in &support {
            acc += weights[i];
            acc_biased += weights[i] * words[i].len() as f64 / mean_len;
            cdf.push(acc);
            biased_cdf.push(acc_biased);
        }
        Ok(Self { words, weights, max_len, amplitude, support, cdf, biased_cdf })
    }

    /// Builds a distribution from raw letter lists.
    pub fn from_letters(words: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let words = words.into_iter().map(Word::new).collect::<Result<Vec<_>>>()?;
        Self::new(words, weights)
    }

    /// Random dimer model: `(λ,λ)` or `(−λ,−λ)` with probability ½ each.
    pub fn dimer(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("dimer coupling must be positive"));
        }
        Self::from_letters(alloc::vec![alloc::vec![lambda, lambda], alloc::vec![-lambda, -lambda]], alloc::vec![0.5, 0.5])
    }

    /// Anderson model with single-site law `p·δ_a + (1−p)·δ_b`.
    pub fn bernoulli_anderson(a: f64, b: f64, p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid("Bernoulli probability must lie in (0, 1)"));
        }
        if !(a.is_finite() && b.is_finite()) {
            return Err(invalid("Bernoulli values must be finite"));
        }
        Self::from_letters(alloc::vec![alloc::vec![a], alloc::vec![b]], alloc::vec![p, 1.0 - p])
    }

    /// The free Laplacian, `V ≡ 0`.
    pub fn free() -> Self {
        Self::from_letters(alloc::vec![alloc::vec![0.0]], alloc::vec![1.0]).expect("free preset is valid")
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `m`, the longest word length.
    pub fn max_word_length(&self) -> usize {
        self.max_len
    }

    /// `M`, the largest letter magnitude.
    pub fn amplitude_bound(&self) -> f64 {
        self.amplitude
    }

    /// Indices of positive-weight words.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// `⟨L⟩ = Σ_j j·ν(W_j)`.
    pub fn mean_word_length(&self) -> f64 {
        self.support.iter().map(|&i| self.weights[i] * self.words[i].len() as f64).sum()
    }

    /// Whether two support words fail to commute under concatenation.
    pub fn check_noncommuting(&self) -> bool {
        let s = &self.support;
        for (pos, &i) in s.iter().enumerate() {
            for &j in &s[pos + 1..] {
                let (u, v) = (self.words[i].letters(), self.words[j].letters());
                let uv = u.iter().chain(v);
                let vu = v.iter().chain(u);
                if uv.zip(vu).any(|(x, y)| x != y) {
                    return true;
                }
            }
        }
        false
    }

    /// Whether `ν` is invariant under `V ↦ −V`.
    pub fn is_sign_symmetric(&self) -> bool {
        self.support.iter().all(|&i| {
            let w = self.words[i].letters();
            let mass: f64 = self
                .support
                .iter()
                .filter(|&&j| {
                    let v = self.words[j].letters();
                    v.len() == w.len() && v.iter().zip(w).all(|(a, b)| *a == -*b)
                })
                .map(|&j| self.weights[j])
                .sum();
            (mass - self.weights[i]).abs() <= WEIGHT_TOLERANCE
        })
    }

    fn pick(&self, cdf: &[f64], u: f64) -> usize {
        let pos = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        self.support[pos]
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        self.pick(&self.cdf, rng.random::<f64>())
    }

    fn draw_length_biased(&self, rng: &mut ChaCha8Rng) -> usize {
        self.pick(&self.biased_cdf, rng.random::<f64>())
    }
}

/// Named constructors addressable from the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Dimer { lambda: f64 },
    BernoulliAnderson { a: f64, b: f64, p: f64 },
    Free,
}

impl Preset {
    pub fn distribution(&self) -> Result<WordDistribution> {
        match *self {
            Preset::Dimer { lambda } => WordDistribution::dimer(lambda),
            Preset::BernoulliAnderson { a, b, p } => WordDistribution::bernoulli_anderson(a, b, p),
            Preset::Free => Ok(WordDistribution::free()),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Dimer { lambda } => write!(f, "dimer:{lambda}"),
            Preset::BernoulliAnderson { a, b, p } => write!(f, "anderson:{a},{b},{p}"),
            Preset::Free => f.write_str("free"),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    /// Accepts `dimer:<λ>`, `anderson:<a>,<b>,<p>` (alias `bernoulli`) and `free`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums = || -> Result<Vec<f64>> {
            args.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<f64>().map_err(|_| invalid("preset arguments must be numbers")))
                .collect()
        };
        match name.trim() {
            "dimer" => match nums()?.as_slice() {
                [lambda] => Ok(Preset::Dimer { lambda: *lambda }),
                _ => Err(invalid("dimer preset takes one argument, e.g. dimer:1")),
            },
            "anderson" | "bernoulli" => match nums()?.as_slice() {
                [a, b, p] => Ok(Preset::BernoulliAnderson { a: *a, b: *b, p: *p }),
                _ => Err(invalid("anderson preset takes three arguments, e.g. anderson:0,4,0.5")),
            },
            "free" => Ok(Preset::Free),
            other => Err(Error::InvalidParameter(alloc::format!("unknown preset `{other}`"))),
        }
    }
}

/// One word placed on the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    /// First site covered by the word.
    pub start: i64,
    /// Index into [`WordDistribution::words`].
    pub word: usize,
    /// Word length.
    pub len: usize,
}

impl Segment {
    /// Last site covered by the word.
    pub fn end(&self) -> i64 {
        self.start + self.len as i64 - 1
    }
}

/// Lazily extended sample path in path coordinates.
struct SamplePath<'a> {
    dist: &'a WordDistribution,
    origin: Segment,
    right: ChaCha8Rng,
    left: ChaCha8Rng,
    right_words: Vec<usize>,
    left_words: Vec<usize>,
    right_end: i64,
    left_start: i64,
}

impl<'a> SamplePath<'a> {
    fn new(dist: &'a WordDistribution, seed: u64) -> Self {
        let stream = |id| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        let mut origin_rng = stream(ORIGIN_STREAM);
        let word = dist.draw_length_biased(&mut origin_rng);
        let len = dist.words[word].len();
        let k = ((origin_rng.random::<f64>() * len as f64) as usize).min(len - 1) + 1;
        let origin = Segment { start: 1 - k as i64, word, len };
        Self {
            dist,
            origin,
            right: stream(RIGHT_STREAM),
            left: stream(LEFT_STREAM),
            right_words: Vec::new(),
            left_words: Vec::new(),
            right_end: origin.end(),
            left_start: origin.start,
        }
    }

    fn cover(&mut self, lo: i64, hi: i64) {
        while self.right_end < hi {
            let w = self.dist.draw(&mut self.right);
            self.right_end += self.dist.words[w].len() as i64;
            self.right_words.push(w);
        }
        while self.left_start > lo {
            let w = self.dist.draw(&mut self.left);
            self.left_start -= self.dist.words[w].len() as i64;
            self.left_words.push(w);
        }
    }

    /// Segments in left-to-right order, path coordinates.
    fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        let words = &self.dist.words;
        let mut start = self.left_start;
        self.left_words
            .iter()
            .rev()
            .copied()
            .chain(core::iter::once(self.origin.word))
            .chain(self.right_words.iter().copied())
            .map(move |w| {
                let seg = Segment { start, word: w, len: words[w].len() };
                start += seg.len as i64;
                seg
            })
    }
}

/// A sampled potential on the closed window `[a, b]`.
///
/// Site `n` of the realization is site `n + shift` of the underlying path
/// keyed by `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialRealization {
    dist: WordDistribution,
    seed: u64,
    shift: i64,
    window: (i64, i64),
    values: Vec<f64>,
    /// Words meeting `[min(a,0), max(b,0)]`, left to right.
    segments: Vec<Segment>,
    origin_index: usize,
    origin_offset: usize,
}

impl PotentialRealization {
    fn build(dist: &WordDistribution, seed: u64, shift: i64, a: i64, b: i64) -> Result<Self> {
        if a > b {
            return Err(Error::Input(alloc::format!("empty window [{a}, {b}]")));
        }
        let lo = a.min(0);
        let hi = b.max(0);
        let mut path = SamplePath::new(dist, seed);
        path.cover(lo + shift, hi + shift);

        let mut segments = Vec::new();
        let mut values = Vec::with_capacity((b - a + 1) as usize);
        let mut origin_index = 0;
        for seg in path.segments() {
            let seg = Segment { start: seg.start - shift, ..seg };
            if seg.end() < lo || seg.start > hi {
                continue;
            }
            if seg.start <= 0 && 0 <= seg.end() {
                origin_index = segments.len();
            }
            for (i, &v) in dist.words[seg.word].letters().iter().enumerate() {
                let site = seg.start + i as i64;
                if (a..=b).contains(&site) {
                    values.push(v);
                }
            }
            segments.push(seg);
        }
        let origin_offset = (1 - segments[origin_index].start) as usize;
        Ok(Self { dist: dist.clone(), seed, shift, window: (a, b), values, segments, origin_index, origin_offset })
    }

    pub fn distribution(&self) -> &WordDistribution {
        &self.dist
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn window(&self) -> (i64, i64) {
        self.window
    }

    /// Potential values `V(a), …, V(b)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, site: i64) -> Option<f64> {
        let (a, b) = self.window;
        (a..=b).contains(&site).then(|| self.values[(site - a) as usize])
    }

    /// Values on `[a, b]`, or a coverage error.
    pub fn slice(&self, a: i64, b: i64) -> Result<&[f64]> {
        let (wa, wb) = self.window;
        if a > b || a < wa || b > wb {
            return Err(Error::Coverage { requested: (a, b), window: self.window });
        }
        Ok(&self.values[(a - wa) as usize..=(b - wa) as usize])
    }

    /// `k`: position of site 0 inside its word, 1-based.
    pub fn origin_offset(&self) -> usize {
        self.origin_offset
    }

    /// Index of the word `ω₀` covering site 0.
    pub fn origin_word(&self) -> usize {
        self.segments[self.origin_index].word
    }

    /// Words meeting the window or the origin, left to right.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Sites inside the window where a new word begins.
    pub fn boundaries(&self) -> Vec<i64> {
        let (a, b) = self.window;
        self.segments.iter().map(|s| s.start).filter(|s| (a..=b).contains(s)).collect()
    }

    /// The same sample path on a different window.
    pub fn extend_to(&self, a: i64, b: i64) -> Result<Self> {
        Self::build(&self.dist, self.seed, self.shift, a, b)
    }

    /// Applies the suspension shift `t` times: `V'(n) = V(n + t)` on the same window.
    pub fn shifted(&self, t: i64) -> Self {
        let (a, b) = self.window;
        Self::build(&self.dist, self.seed, self.shift + t, a, b).expect("window already validated")
    }

    /// Word-boundary scales after `n` words right of the origin word.
    pub fn random_scales(&self, n: usize) -> Result<WordScales> {
        let last = self.origin_index + n;
        let (_, b) = self.window;
        let covered = last < self.segments.len() && self.segments[last].end() <= b;
        if !covered {
            let end = self.segments[self.origin_index].end() + (n * self.dist.max_len) as i64;
            return Err(Error::Coverage { requested: (0, end), window: self.window });
        }
        let origin_length = self.segments[self.origin_index].len;
        let lengths: Vec<usize> = self.segments[self.origin_index + 1..=last].iter().map(|s| s.len).collect();
        Ok(WordScales::new(origin_length, self.origin_offset, lengths, self.dist.max_len))
    }
}

/// Samples the stationary potential on `[a, b]`.
pub fn sample_potential(dist: &WordDistribution, seed: u64, a: i64, b: i64) -> Result<PotentialRealization> {
    PotentialRealization::build(dist, seed, 0, a, b)
}

/// `V'(n) = V(n + t)` with the offset and word indices moved accordingly.
pub fn shift_realization(r: &PotentialRealization, t: i64) -> PotentialRealization {
    r.shifted(t)
}

/// Random scales `S_n`, `R_n`, `Q_n` of a realization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordScales {
    pub n: usize,
    /// `S_n = Y₁ + … + Y_n`.
    pub s_n: i64,
    /// `Y₀ = |ω₀|`.
    pub origin_length: usize,
    /// `k`.
    pub origin_offset: usize,
    /// `Y₁, …, Y_n`.
    pub lengths: Vec<usize>,
    pub r_n: i64,
    /// `Q_n = S_n + 2m`.
    pub q_n: i64,
}

impl WordScales {
    pub fn new(origin_length: usize, origin_offset: usize, lengths: Vec<usize>, max_len: usize) -> Self {
        let s_n: i64 = lengths.iter().map(|&y| y as i64).sum();
        let half = if s_n % 2 == 0 { s_n / 2 } else { (s_n - 1) / 2 };
        let r_n = half - origin_length as i64 - origin_offset as i64 + 1;
        let q_n = s_n + 2 * max_len as i64;
        Self { n: lengths.len(), s_n, origin_length, origin_offset, lengths, r_n, q_n }
    }
}

pub fn mean_word_length(dist: &WordDistribution) -> f64 {
    dist.mean_word_length()
}

pub fn check_noncommuting(dist: &WordDistribution) -> bool {
    dist.check_noncommuting()
}

pub fn random_scales(r: &PotentialRealization, n: usize) -> Result<WordScales> {
    r.random_scales(n)
}
