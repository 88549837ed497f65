//! Run configuration: JSON file and command-line flags share one schema.
//!
//! Precedence is defaults < config file < flags < `LOCWORD_SEED` (seed only).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use locword_core::word_model::Preset;
use locword_core::WordDistribution;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::formats::{canonical_json, read_json, DistributionDoc};

pub const SEED_ENV: &str = "LOCWORD_SEED";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_PRESET: &str = "dimer:1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Lyapunov,
    Critical,
    Spectrum,
    GreenCheck,
    Regularity,
    Ldp,
    Correlator,
    Edl,
    Transport,
    ChebCheck,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Lyapunov => "lyapunov",
            Command::Critical => "critical",
            Command::Spectrum => "spectrum",
            Command::GreenCheck => "green-check",
            Command::Regularity => "regularity",
            Command::Ldp => "ldp",
            Command::Correlator => "correlator",
            Command::Edl => "edl",
            Command::Transport => "transport",
            Command::ChebCheck => "cheb-check",
            Command::Verify => "verify",
        }
    }

    fn uses_distribution(self) -> bool {
        !matches!(self, Command::GreenCheck | Command::ChebCheck | Command::Verify)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed real interval written `lo:hi`; serialized as `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Interval {
    fn from(v: [f64; 2]) -> Self {
        Self { lo: v[0], hi: v[1] }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl FromStr for Interval {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
        let lo: f64 = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
        let hi: f64 = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
        if !(lo <= hi) {
            return Err(format!("interval needs lo <= hi, got {s:?}"));
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    Plus,
    Minus,
}

/// Integer count that also accepts float notation such as `1e6`.
fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("not a count: {s:?}"))?;
    if x >= 0.0 && x.fract() == 0.0 && x <= 1e15 {
        Ok(x as usize)
    } else {
        Err(format!("not a nonnegative integer: {s:?}"))
    }
}

/// Every tunable of every subcommand. Unused fields are ignored by a
/// subcommand and dropped from its effective configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Subcommand (config files only)
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<Command>,

    /// Preset distribution: `dimer:LAMBDA`, `anderson:A,B,P` or `free`
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Word distribution inline as {words, weights}; in flags, a path to such a JSON file
    #[arg(long = "distribution", value_name = "FILE")]
    #[serde(skip)]
    pub distribution_file: Option<PathBuf>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionDoc>,
    /// Base seed (overridden by LOCWORD_SEED)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,

    /// Energy grid lower end
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emin: Option<f64>,
    /// Energy grid upper end
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emax: Option<f64>,
    /// Energy grid spacing
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Sites per Lyapunov path (accepts 1e6)
    #[arg(long, value_parser = parse_count)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    /// Independent paths per Lyapunov estimate
    #[arg(long, value_parser = parse_count)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    /// Critical-energy threshold on γ̂
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Energy E
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,

    /// Box side length; the box is [-box/2, box/2]
    #[arg(long = "box", value_parser = parse_count)]
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    pub box_size: Option<usize>,
    /// Disorder realizations in the ensemble
    #[arg(long = "N", value_parser = parse_count)]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<usize>,
    /// Energy window I as lo:hi
    #[arg(long = "I", allow_hyphen_values = true)]
    #[serde(rename = "I", skip_serializing_if = "Option::is_none")]
    pub window: Option<Interval>,
    /// Sub-box margin kept clear of the box edges (default box/8)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<i64>,
    /// Decay-fit distances as lo:hi (default box/20:box/4)
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<Interval>,

    /// Left end of an explicit window
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<i64>,
    /// Right end of an explicit window
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<i64>,
    /// Also dump eigenvectors
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vectors: Option<bool>,
    /// Reference site (correlator center l, kernel row p)
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub site: Option<i64>,

    /// Regularity half-width n
    #[arg(long, value_parser = parse_count)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<usize>,
    /// Regularity rate c (default γ̂(E)/2)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,

    /// Deviation size ε
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Deviation side
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<SideArg>,
    /// Interval lengths n, comma separated
    #[arg(long, value_delimiter = ',', value_parser = parse_count)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<usize>>,
    /// Trials per probability
    #[arg(long, value_parser = parse_count)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,

    /// Moment exponent q
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Smallest time horizon
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tmin: Option<f64>,
    /// Largest time horizon
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tmax: Option<f64>,
    /// Number of log-spaced horizons
    #[arg(long, value_parser = parse_count)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<usize>,
    /// Time samples per horizon
    #[arg(long, value_parser = parse_count)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,

    /// Node counts n (polynomial degree n-1), comma separated
    #[arg(long, value_delimiter = ',', value_parser = parse_count)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degrees: Option<Vec<usize>>,
    /// Node shift θ in (0, 1/2)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Random polynomials per node count
    #[arg(long, value_parser = parse_count)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polys: Option<usize>,

    /// Random cases per oracle suite
    #[arg(long, value_parser = parse_count)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cases: Option<usize>,
    /// Largest matrix size in random oracle cases
    #[arg(long = "max-n", value_parser = parse_count)]
    #[serde(rename = "max-n", skip_serializing_if = "Option::is_none")]
    pub max_n: Option<usize>,
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Effective parameters: defaults filled in, irrelevant fields cleared.
    pub params: Params,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

impl RunConfig {
    /// Merges file and flags, applies `LOCWORD_SEED`, fills defaults.
    pub fn resolve(
        command: Option<Command>,
        config_file: Option<&PathBuf>,
        flags: Params,
        seed_env: Option<String>,
    ) -> CliResult<Self> {
        let mut merged = match config_file {
            Some(path) => {
                let value: Value = read_json(path)?;
                if !value.is_object() {
                    return Err(CliError::usage(format!("{}: config must be a JSON object", path.display())));
                }
                value
            }
            None => Value::Object(Default::default()),
        };
        let mut flags = flags;
        if let Some(path) = flags.distribution_file.take() {
            flags.distribution = Some(read_json(&path)?);
        }
        let overlay = serde_json::to_value(&flags).map_err(|e| CliError::usage(e.to_string()))?;
        if let (Value::Object(base), Value::Object(top)) = (&mut merged, overlay) {
            for (k, v) in top {
                base.insert(k, v);
            }
        }
        let mut params: Params = serde_json::from_value(merged).map_err(|e| CliError::usage(format!("config: {e}")))?;
        if let Some(s) = seed_env {
            params.seed = Some(s.trim().parse().map_err(|_| CliError::usage(format!("{SEED_ENV} is not a u64: {s:?}")))?);
        }
        let command = match (command, params.subcommand) {
            (Some(c), _) => c,
            (None, Some(c)) => c,
            (None, None) => return Err(CliError::usage("no subcommand given (the config file has no \"subcommand\")")),
        };
        let out = params.out.take().unwrap_or_else(|| PathBuf::from("runs").join(command.name()));
        let workers = params.workers.take();
        let params = effective(command, params)?;
        Ok(Self { command, params, out, workers })
    }

    pub fn seed(&self) -> u64 {
        self.params.seed.expect("resolved")
    }

    /// Canonical JSON of the effective configuration.
    pub fn canonical(&self) -> CliResult<String> {
        canonical_json(&self.params)
    }

    /// SHA-256 of [`RunConfig::canonical`], lowercase hex.
    pub fn hash(&self) -> CliResult<String> {
        let digest = Sha256::digest(self.canonical()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn distribution(&self) -> CliResult<WordDistribution> {
        match (&self.params.preset, &self.params.distribution) {
            (Some(p), None) => {
                let preset: Preset = p.parse().map_err(|e: locword_core::Error| CliError::usage(e.to_string()))?;
                Ok(preset.distribution()?)
            }
            (None, Some(doc)) => doc.to_distribution(),
            _ => Err(CliError::usage("this subcommand takes a distribution")),
        }
    }
}

/// Keeps the fields `command` reads, filling defaults for missing ones.
fn effective(command: Command, p: Params) -> CliResult<Params> {
    let mut e = Params { subcommand: Some(command), seed: Some(p.seed.unwrap_or(DEFAULT_SEED)), ..Params::default() };
    if command.uses_distribution() {
        match (p.preset, p.distribution) {
            (Some(_), Some(_)) => return Err(CliError::usage("give either a preset or a distribution, not both")),
            (None, Some(d)) => e.distribution = Some(d),
            (preset, None) => e.preset = Some(preset.unwrap_or_else(|| DEFAULT_PRESET.into())),
        }
    }
    let lyapunov = |e: &mut Params| {
        e.sites = Some(p.sites.unwrap_or(1_000_000));
        e.realizations = Some(p.realizations.unwrap_or(8));
    };
    let ensemble = |e: &mut Params, box_size: usize, n: usize, window: Interval| {
        e.box_size = Some(p.box_size.unwrap_or(box_size));
        e.ensemble = Some(p.ensemble.unwrap_or(n));
        e.window = Some(p.window.unwrap_or(window));
        e.margin = p.margin;
        e.fit = p.fit;
    };
    match command {
        Command::Lyapunov | Command::Critical => {
            e.emin = Some(p.emin.unwrap_or(-3.0));
            e.emax = Some(p.emax.unwrap_or(3.0));
            e.step = Some(p.step.unwrap_or(0.05));
            lyapunov(&mut e);
            e.threshold = Some(p.threshold.unwrap_or(0.01));
        }
        Command::Spectrum => {
            e.a = Some(p.a.unwrap_or(-50));
            e.b = Some(p.b.unwrap_or(50));
            e.vectors = Some(p.vectors.unwrap_or(false));
        }
        Command::GreenCheck => {
            e.cases = Some(p.cases.unwrap_or(1000));
            e.max_n = Some(p.max_n.unwrap_or(64));
        }
        Command::Regularity => {
            e.box_size = Some(p.box_size.unwrap_or(400));
            e.ensemble = Some(p.ensemble.unwrap_or(100));
            e.margin = p.margin;
            e.energy = Some(p.energy.unwrap_or(1.5));
            e.scale = Some(p.scale.unwrap_or(20));
            e.rate = p.rate;
            lyapunov(&mut e);
        }
        Command::Ldp => {
            e.energy = Some(p.energy.unwrap_or(1.5));
            e.epsilon = Some(p.epsilon.unwrap_or(0.15));
            e.side = Some(p.side.unwrap_or(SideArg::Minus));
            e.ns = Some(p.ns.unwrap_or_else(|| vec![50, 100, 150, 200, 300]));
            e.trials = Some(p.trials.unwrap_or(10_000));
            lyapunov(&mut e);
        }
        Command::Correlator => {
            ensemble(&mut e, 400, 200, Interval { lo: 1.2, hi: 1.8 });
            e.site = p.site;
        }
        Command::Edl => {
            ensemble(&mut e, 400, 200, Interval { lo: 1.2, hi: 1.8 });
            e.site = Some(p.site.unwrap_or(0));
        }
        Command::Transport => {
            e.box_size = Some(p.box_size.unwrap_or(1600));
            e.ensemble = Some(p.ensemble.unwrap_or(20));
            e.q = Some(p.q.unwrap_or(2.0));
            e.tmin = Some(p.tmin.unwrap_or(20.0));
            e.tmax = Some(p.tmax.unwrap_or(300.0));
            e.times = Some(p.times.unwrap_or(8));
            e.samples = Some(p.samples.unwrap_or(64));
        }
        Command::ChebCheck => {
            e.degrees = Some(p.degrees.unwrap_or_else(|| vec![8, 16, 32, 64]));
            e.theta = Some(p.theta.unwrap_or(0.25));
            e.polys = Some(p.polys.unwrap_or(1000));
        }
        Command::Verify => {
            e.cases = Some(p.cases.unwrap_or(1000));
        }
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn counts_accept_float_notation() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("250"), Ok(250));
        assert!(parse_count("1.5").is_err() && parse_count("-3").is_err());
    }

    #[test]
    fn intervals_parse() {
        assert_eq!("1.2:1.8".parse::<Interval>(), Ok(Interval { lo: 1.2, hi: 1.8 }));
        assert_eq!("-0.5:0.5".parse::<Interval>(), Ok(Interval { lo: -0.5, hi: 0.5 }));
        assert!("2:1".parse::<Interval>().is_err() && "1".parse::<Interval>().is_err());
    }

    #[test]
    fn flags_override_file_and_env_overrides_seed() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"subcommand": "edl", "N": 7, "box": 100, "seed": 5, "preset": "dimer:0.5"}}"#).unwrap();
        let path = f.path().to_path_buf();
        let flags = Params { ensemble: Some(9), ..Params::default() };
        let cfg = RunConfig::resolve(None, Some(&path), flags.clone(), None).unwrap();
        assert_eq!(cfg.command, Command::Edl);
        assert_eq!(cfg.params.ensemble, Some(9));
        assert_eq!(cfg.params.box_size, Some(100));
        assert_eq!(cfg.seed(), 5);
        assert_eq!(cfg.params.site, Some(0));
        let cfg2 = RunConfig::resolve(None, Some(&path), flags, Some("77".into())).unwrap();
        assert_eq!(cfg2.seed(), 77);
        assert_ne!(cfg.hash().unwrap(), cfg2.hash().unwrap());
    }

    #[test]
    fn effective_config_drops_unused_fields_and_is_stable() {
        let flags = Params { epsilon: Some(0.3), out: Some("x".into()), workers: Some(3), ..Params::default() };
        let cfg = RunConfig::resolve(Some(Command::Transport), None, flags, None).unwrap();
        assert_eq!(cfg.params.epsilon, None);
        assert_eq!(cfg.out, PathBuf::from("x"));
        let other = RunConfig::resolve(Some(Command::Transport), None, Params::default(), None).unwrap();
        assert_eq!(cfg.hash().unwrap(), other.hash().unwrap());
        assert_eq!(cfg.hash().unwrap().len(), 64);
    }

    #[test]
    fn config_errors_are_usage_errors() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"subcommand": "edl", "bogus": 1}}"#).unwrap();
        let err = RunConfig::resolve(None, Some(&f.path().to_path_buf()), Params::default(), None).unwrap_err();
        assert_eq!(err.code, crate::error::ExitCode::Usage);
        let err = RunConfig::resolve(None, None, Params::default(), None).unwrap_err();
        assert_eq!(err.code, crate::error::ExitCode::Usage);
        let both = Params {
            preset: Some("free".into()),
            distribution: Some(DistributionDoc { words: vec![vec![0.0]], weights: vec![1.0] }),
            ..Params::default()
        };
        assert!(RunConfig::resolve(Some(Command::Ldp), None, both, None).is_err());
    }
}
