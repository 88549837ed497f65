//! Subcommand bodies. Each one writes its CSV/JSON/SVG outputs into the run
//! directory and returns a short human-readable report for stdout.

use locword_core::dynamics::{growth_exponent_fit, log_spaced};
use locword_core::experiments::{
    correlator_profile, deviation_curve, fit_exponential, localization_profiles, pooled_correlator_profile,
    regularity_probability, transport_ensemble, DecayFit, DistanceProfile, EnsembleSpec, GammaReference, Side,
};
use locword_core::finite_operator::restrict;
use locword_core::transfer::{energy_grid, lyapunov_curve, lyapunov_estimate, refine_critical_energies, LyapunovConfig};
use locword_core::word_model::sample_potential;
use locword_core::{realization_seed, Error, Executor, LyapunovCurve, LyapunovEstimate, WordDistribution};
use serde_json::{json, Value};

use crate::cheb::random_polynomial_study;
use crate::config::{Command, RunConfig, SideArg};
use crate::error::{CliError, CliResult, ExitCode};
use crate::formats::{Cell, OperatorDoc, Table};
use crate::output::OutputDir;
use crate::svg::LinePlot;
use crate::verify::{green_cases, render_table, run_all};

/// Stream tag separating the `γ̂` reference ensemble from the main one.
const REFERENCE_STREAM: u64 = 1 << 40;

const GREEN_TOLERANCE: f64 = 1e-8;

struct Run<'a, X> {
    cfg: &'a RunConfig,
    exec: &'a X,
    out: &'a mut OutputDir,
}

impl<X: Executor> Run<'_, X> {
    fn seed(&self) -> u64 {
        self.cfg.seed()
    }

    fn lyapunov_config(&self) -> CliResult<LyapunovConfig> {
        let p = &self.cfg.params;
        Ok(LyapunovConfig::new(p.sites.expect("resolved"), p.realizations.expect("resolved"))?)
    }

    fn reference_gamma(&self, dist: &WordDistribution, energy: f64) -> CliResult<LyapunovEstimate> {
        let cfg = self.lyapunov_config()?;
        Ok(lyapunov_estimate(dist, energy, &cfg, realization_seed(self.seed(), REFERENCE_STREAM), self.exec)?)
    }

    fn ensemble(&self, dist: WordDistribution) -> CliResult<EnsembleSpec> {
        let p = &self.cfg.params;
        let box_size = p.box_size.expect("resolved");
        if box_size < 2 {
            return Err(CliError::new(ExitCode::InvalidInput, "--box must be at least 2"));
        }
        let window = p.window.map(|w| (w.lo, w.hi)).unwrap_or((0.0, 0.0));
        let ens = EnsembleSpec::new(dist, (box_size / 2) as i64, p.ensemble.expect("resolved"), self.seed(), window)?;
        Ok(match p.margin {
            Some(m) => ens.with_margin(m)?,
            None => ens,
        })
    }

    fn fit_range(&self) -> CliResult<Option<(usize, usize)>> {
        match self.cfg.params.fit {
            None => Ok(None),
            Some(f) if f.lo >= 0.0 && f.hi >= f.lo => Ok(Some((f.lo.round() as usize, f.hi.round() as usize))),
            Some(_) => Err(CliError::usage("--fit needs 0 <= lo <= hi")),
        }
    }

    /// Summary document shared by every subcommand.
    fn summary(&mut self, body: Value) -> CliResult<()> {
        let mut doc = json!({
            "subcommand": self.cfg.command.name(),
            "seed": self.seed(),
            "config_hash": self.cfg.hash()?,
            "params": serde_json::to_value(&self.cfg.params).map_err(|e| CliError::new(ExitCode::Internal, e.to_string()))?,
        });
        if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
            d.extend(b);
        }
        self.out.write_json("summary.json", &doc)
    }
}

fn fit_json(fit: Option<&DecayFit>) -> Value {
    match fit {
        Some(f) => json!({
            "rate": f.rate,
            "decay": f.decay(),
            "intercept": f.intercept,
            "r2": f.r2,
            "range": [f.fit_lo, f.fit_hi],
        }),
        None => Value::Null,
    }
}

fn curve_table(curve: &LyapunovCurve) -> Table {
    let mut t = Table::new(&["energy", "gamma", "std_error", "sites"]);
    for e in &curve.estimates {
        t.push(vec![e.energy.into(), e.gamma.into(), e.std_error.into(), e.sites.into()]);
    }
    t
}

fn profile_table(profile: &DistanceProfile) -> Table {
    let mut t = Table::new(&["distance", "value"]);
    for (d, v) in profile.distances.iter().zip(&profile.values) {
        t.push(vec![(*d).into(), (*v).into()]);
    }
    t
}

fn profile_plot(title: &str, y_label: &str, profile: &DistanceProfile) -> LinePlot {
    let points = profile.distances.iter().zip(&profile.values).filter(|(_, v)| **v > 0.0).map(|(d, v)| (*d as f64, *v)).collect();
    LinePlot::new(title, "distance", y_label, points).log_y()
}

/// A profile that is zero everywhere means no eigenvalue fell into the window.
fn require_band(profile: &DistanceProfile, ens: &EnsembleSpec) -> CliResult<()> {
    if profile.values.iter().all(|v| *v == 0.0) {
        return Err(Error::EmptyBand { lo: ens.window.0, hi: ens.window.1 }.into());
    }
    Ok(())
}

fn describe_fit(fit: Option<&DecayFit>) -> String {
    match fit {
        Some(f) => format!("decay rate {:.6} (r² = {:.4}, fit on [{}, {}])", f.decay(), f.r2, f.fit_lo, f.fit_hi),
        None => "no fit (profile not positive on the fit range)".into(),
    }
}

/// Executes `cfg.command`, writing outputs into `out`.
pub fn execute<X: Executor>(cfg: &RunConfig, exec: &X, out: &mut OutputDir) -> CliResult<String> {
    let mut run = Run { cfg, exec, out };
    match cfg.command {
        Command::Lyapunov => lyapunov(&mut run),
        Command::Critical => critical(&mut run),
        Command::Spectrum => spectrum(&mut run),
        Command::GreenCheck => green_check(&mut run),
        Command::Regularity => regularity(&mut run),
        Command::Ldp => ldp(&mut run),
        Command::Correlator => correlator(&mut run),
        Command::Edl => edl(&mut run),
        Command::Transport => transport(&mut run),
        Command::ChebCheck => cheb_check(&mut run),
        Command::Verify => verify(&mut run),
    }
}

fn curve<X: Executor>(run: &mut Run<'_, X>, dist: &WordDistribution) -> CliResult<LyapunovCurve> {
    let p = &run.cfg.params;
    let grid = energy_grid(p.emin.expect("resolved"), p.emax.expect("resolved"), p.step.expect("resolved"))?;
    let cfg = run.lyapunov_config()?;
    let curve = lyapunov_curve(dist, &grid, &cfg, run.seed(), p.threshold, run.exec)?;
    run.out.write_csv("lyapunov.csv", &curve_table(&curve))?;
    let points = curve.estimates.iter().map(|e| (e.energy, e.gamma)).collect();
    run.out.write_svg("lyapunov.svg", &LinePlot::new("Lyapunov exponent", "E", "gamma", points))?;
    Ok(curve)
}

fn lyapunov<X: Executor>(run: &mut Run<'_, X>) -> CliResult<String> {
    let dist = run.cfg.distribution()?;
    let curve = curve(run, &dist)?;
    let max_se = curve.estimates.iter().map(|e| e.std_error).fold(0.0, f64::max);
    let flagged = curve.flagged.iter().filter(|f| **f).count();
    run.summary(json!({
        "points": curve.estimates.len(),
        "flagged": flagged,
        "v_floor": curve.v_floor,
        "max_std_error": max_se,
    }))?;
    Ok(format!(
        "{} energies, {} flagged as critical, min gamma off critical points: {}",
        curve.estimates.len(),
        flagged,
        curve.v_floor.map_or("n/a".into(), |v| format!("{v:.6}"))
    ))
}

fn critical<X: Executor>(run: &mut Run<'_, X>) -> CliResult<String> {
    let dist = run.cfg.distribution()?;
    let curve = curve(run, &dist)?;
    let threshold = run.cfg.params.threshold.expect("resolved");
    let cfg = run.lyapunov_config()?;
    let found = refine_critical_energies(&dist, &curve, threshold, &cfg, run.seed(), run.exec)?;
    let mut t = Table::new(&["energy", "gamma", "std_error", "sites"]);
    for e in &found {
        t.push(vec![e.energy.into(), e.gamma.into(), e.std_error.into(), e.sites.into()]);
    }
    run.out.write_csv("critical.csv", &t)?;
    let list: Vec<Value> =
        found.iter().map(|e| json!({"energy": e.energy, "gamma": e.gamma, "std_error": e.std_error})).collect();
    run.summary(json!({ "critical": list, "threshold": threshold, "v_floor": curve.v_floor }))?;
    let energies: Vec<String> = found.iter().map(|e| format!("{:.4}", e.energy)).collect();
    Ok(format!("{} critical energies: [{}]", found.len(), energies.join(", ")))
}

fn spectrum<X: Executor>(run: &mut Run<'_, X>) -> CliResult<String> {
    let dist = run.cfg.distribution()?;
    let p = &run.cfg.params;
    let (a, b) = (p.a.expect("resolved"), p.b.expect("resolved"));
    if a > b {
        return Err(CliError::new(ExitCode::InvalidInput, "spectrum needs a <= b"));
    }
    let r = sample_potential(&dist, run.seed(), a, b)?;
    let op = restrict(&r, a, b)?;
    run.out.write_json("operator.json", &OperatorDoc::from_operator(&op))?;
    let eig = op.eigensystem();
    let mut t = Table::new(&["index", "eigenvalue"]);
    for (k, l) in eig.eigenvalues().iter().enumerate() {
        t.push(vec![k.into(), (*l).into()]);
    }
    run.out.write_csv("eigenvalues.csv", &t)?;
    if p.vectors == Some(true) {
        let mut v = Table::new(&["index", "site", "value"]);
        for k in 0..eig.len() {
            for (j, x) in eig.vector(k).iter().enumerate() {
                v.push(vec![k.into(), (a + j as i64).into(), (*x).into()]);
            }
        }
        run.out.write_csv("eigenvectors.csv", &v)?;
    }
    let points = eig.eigenvalues().iter().enumerate().map(|(k, l)| (k as f64, *l)).collect();
    run.out.write_svg("eigenvalues.svg", &LinePlot::new("Eigenvalues", "index", "eigenvalue", points))?;
    let values = eig.eigenvalues();
    let (lo, hi) = (values.first().copied().unwrap_or(0.0), values.last().copied().unwrap_or(0.0));
    run.summary(json!({ "sites": op.len(), "min": lo, "max": hi, "norm_bound": op.norm_bound() }))?;
    Ok(format!("{} eigenvalues in [{lo:.6}, {hi:.6}]", op.len()))
}

fn green_check<X: Executor>(run: &mut Run<'_, X>) -> CliResult<String> {
    let p = &run.cfg.params;
    let cases = green_cases(p.cases.expect("resolved"), p.max_n.expect("resolved"), run.seed(), run.exec);
    let mut t = Table::new(&["case", "n", "energy", "x", "y", "spectral_distance", "cramer", "direct", "dense", "rel_error"]);
    let (mut checked, mut violations, mut max_err) = (0usize, 0usize, 0.0f64);
    for (i, c) in cases.iter().enumerate() {
        let mut row: Vec<Cell> = vec![i.into(), c.n.into(), c.energy.into(), c.x.into(), c.y.into(), c.spectral_distance.into()];
        match c.values {
            Some(v) => {
                checked += 1;
                max_err = max_err.max(v.rel_error);
                if !(v.rel_error <= GREEN_TOLERANCE) {
                    violations += 1;
                }
                row.extend([v.cramer.into(), v.direct.into(), v.dense.into(), v.rel_error.into()]);
            }
            None => row.extend((0..4).map(|_| Cell::from(""))),
        }
        t.push(row);
    }
    run.out.write_csv("green_check.csv", &t)?;
    run.summary(json!({
        "cases": cases.len(),
        "checked": checked,
        "skipped": cases.len() - checked,
        "violations": violations,
        "max_rel_error": max_err,
        "tolerance": GREEN_TOLERANCE,
    }))?;
    let report = format!(
        "{checked} of {} cases checked, {violations} above {GREEN_TOLERANCE:e}, max rel. error {max_err:.3e}",
        cases.len()
    );
    if violations > 0 || checked == 0 {
        return Err(CliError::new(ExitCode::VerificationFailed, report));
    }
    Ok(report)
}

fn regularity<X: Executor>(run: &mut Run<'_, X>) -> CliResult<String> {
    let dist = run.cfg.distribution()?;
    let p = &run.cfg.params;
    let energy = p.energy.expect("resolved");
    let scale = p.scale.expect("resolved");
    let (rate, gamma) = match p.rate {
        Some(c) => (c, None),
        None => {
            let g = run.reference_gamma(&dist, energy)?;
            (g.gamma / 2.0, Some(g))
        }
    };
    let ens = run.ensemble(dist)?;
    let est = regularity_probability(&ens, rate, scale, energy, run.exec)?;
    let mut t = Table::new(&["energy", "scale", "rate", "probability", "stderr", "regular", "evaluated", "near_singular"]);
    t.push(vec![
        energy.into(),
        scale.into(),
        rate.into(),
        est.probability.into(),
        est.stderr.into(),
        est.regular.into(),
        est.evaluated.into(),
        est.near_singular.into(),
    ]);
    run.out.write_csv("regularity.csv", &t)?;
    run.summary(json!({
        "rate": rate,
        "gamma": gamma.map(|g| json!({"gamma": g.gamma, "std_error": g.std_error})),
        "probability": est.probability,
        "stderr": est.stderr,
        "regular": est.regular,
        "evaluated": est.evaluated,
        "near_singular": est.near_singular,
    }))?;
    Ok(format!(
        "P[regular] = {:.4} ± {:.4} ({} of {} probes, rate {rate:.6})",
        est.probability, est.stderr, est.regular, est.evaluated
    ))
}

fn ldp<X: Executor>(run: &mut Run<'_, X>) -> CliResult<String> {
    let dist = run.cfg.distribution()?;
    let p = &run.cfg.params;
    let energy = p.energy.expect("resolved");
    let epsilon = p.epsilon.expect("resolved");
    let side = match p.side.expect("resolved") {
        SideArg::Plus => Side::Plus,
        SideArg::Minus => Side::Minus,
    };
    let ns = p.ns.clone().expect("resolved");
    let trials = p.trials.expect("resolved");
    let gamma = run.reference_gamma(&dist, energy)?;
    let reference = GammaReference::from(gamma);
    let points = deviation_curve(&dist, energy, epsilon, side, &ns, trials, run.seed(), reference, run.exec)?;
    let mut t = Table::new(&["n", "probability", "stderr", "hits", "trials"]);
    for (n, pt) in ns.iter().zip(&points) {
        t.push(vec![(*n).into(), pt.probability.into(), pt.stderr.into(), pt.hits.into(), pt.trials.into()]);
    }
    run.out.write_csv("ldp.csv", &t)?;
    let plot: Vec<(f64, f64)> =
        ns.iter().zip(&points).filter(|(_, pt)| pt.probability > 0.0).map(|(n, pt)| (*n as f64, pt.probability)).collect();
    run.out.write_svg("ldp.svg", &LinePlot::new("Deviation probability", "n", "P", plot).log_y())?;
    let gamma_json = json!({"gamma": gamma.gamma, "std_error": gamma.std_error});
    if let Some((n, _)) = ns.iter().zip(&points).find(|(_, pt)| pt.hits == 0) {
        run.summary(json!({ "gamma": gamma_json, "fit": Value::Null }))?;
        return Err(Error::InsufficientTrials { n: *n }.into());
    }
    let xs: Vec<f64> = ns.iter().map(|n| *n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|pt| pt.probability).collect();
    let (lo, hi) = (xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(0.0, f64::max));
    let fit = fit_exponential(&xs, &ys, lo, hi)?;
    run.summary(json!({ "gamma": gamma_json, "fit": fit_json(Some(&fit)), "eta": fit.decay() }))?;
    Ok(format!("gamma {:.6} ± {:.2e}, deviation rate eta {:.6} (r² = {:.4})", gamma.gamma, gamma.std_error, fit.decay(), fit.r2))
}

fn correlator<X: Executor>(run: &mut Run<'_, X>) -> CliResult<String> {
    let dist = run.cfg.distribution()?;
    let ens = run.ensemble(dist)?;
    let fit_range = run.fit_range()?;
    let (profile, pooled) = match run.cfg.params.site {
        Some(l) => (correlator_profile(&ens, l, fit_range, run.exec)?, false),
        None => (pooled_correlator_profile(&ens, fit_range, run.exec)?, true),
    };
    run.out.write_csv("correlator.csv", &profile_table(&profile))?;
    run.out.write_svg("correlator.svg", &profile_plot("Eigenfunction correlator", "correlator", &profile))?;
    run.summary(json!({ "site": profile.site, "pooled": pooled, "fit": fit_json(profile.fit.as_ref()) }))?;
    require_band(&profile, &ens)?;
    Ok(format!("correlator {}", describe_fit(profile.fit.as_ref())))
}

fn edl<X: Executor>(run: &mut Run<'_, X>) -> CliResult<String> {
    let dist = run.cfg.distribution()?;
    let ens = run.ensemble(dist)?;
    let fit_range = run.fit_range()?;
    let site = run.cfg.params.site.expect("resolved");
    let prof = localization_profiles(&ens, site, fit_range, run.exec)?;
    run.out.write_csv("edl.csv", &profile_table(&prof.kernel))?;
    run.out.write_csv("correlator.csv", &profile_table(&prof.correlator))?;
    let mut k = Table::new(&["p", "q", "value"]);
    let start = ens.box_window().0;
    for (j, v) in prof.kernel_row.iter().enumerate() {
        k.push(vec![site.into(), (start + j as i64).into(), (*v).into()]);
    }
    run.out.write_csv("kernel.csv", &k)?;
    run.out.write_svg("edl.svg", &profile_plot("Projected kernel decay", "kernel", &prof.kernel))?;
    let alpha = prof.kernel.fit.map(|f| f.decay());
    run.summary(json!({
        "site": site,
        "alpha": alpha,
        "fit": fit_json(prof.kernel.fit.as_ref()),
        "correlator_fit": fit_json(prof.correlator.fit.as_ref()),
    }))?;
    require_band(&prof.kernel, &ens)?;
    Ok(format!("kernel {}", describe_fit(prof.kernel.fit.as_ref())))
}

fn transport<X: Executor>(run: &mut Run<'_, X>) -> CliResult<String> {
    let dist = run.cfg.distribution()?;
    let p = &run.cfg.params;
    let (tmin, tmax) = (p.tmin.expect("resolved"), p.tmax.expect("resolved"));
    let times = log_spaced(tmin, tmax, p.times.expect("resolved"))?;
    let half_width = (p.box_size.expect("resolved") / 2) as i64;
    let series = transport_ensemble(
        &dist,
        half_width,
        p.ensemble.expect("resolved"),
        run.seed(),
        p.q.expect("resolved"),
        &times,
        p.samples.expect("resolved"),
        run.exec,
    )?;
    let mut t = Table::new(&["T", "value"]);
    for (time, v) in series.times.iter().zip(&series.values) {
        t.push(vec![(*time).into(), (*v).into()]);
    }
    run.out.write_csv("transport.csv", &t)?;
    let points = series.times.iter().copied().zip(series.values.iter().copied()).collect();
    run.out.write_svg("transport.svg", &LinePlot::new("Transport moment", "T", "moment", points).log_x().log_y())?;
    let fit = growth_exponent_fit(&series, tmin, tmax)?;
    run.summary(json!({
        "fit": {"exponent": fit.exponent, "intercept": fit.intercept, "r2": fit.r2},
        "exponent": fit.exponent,
    }))?;
    Ok(format!("growth exponent {:.4} (r² = {:.4})", fit.exponent, fit.r2))
}

fn cheb_check<X: Executor>(run: &mut Run<'_, X>) -> CliResult<String> {
    let p = &run.cfg.params;
    let degrees = p.degrees.clone().expect("resolved");
    if degrees.is_empty() {
        return Err(CliError::usage("--degrees needs at least one node count"));
    }
    let study = random_polynomial_study(&degrees, p.polys.expect("resolved"), p.theta.expect("resolved"), run.seed(), run.exec)?;
    let mut t = Table::new(&["n", "poly", "node_max", "global_max", "a", "implied_c"]);
    for s in &study.per_n {
        for (i, c) in s.checks.iter().enumerate() {
            t.push(vec![c.n.into(), i.into(), c.node_max.into(), c.global_max.into(), c.a.into(), c.implied_c.into()]);
        }
    }
    run.out.write_csv("cheb.csv", &t)?;
    let points = study.per_n.iter().map(|s| (s.n as f64, s.max_c)).collect();
    run.out.write_svg("cheb.svg", &LinePlot::new("Implied constant", "n", "max C", points).log_x())?;
    let per_n: Vec<Value> = study.per_n.iter().map(|s| json!({"n": s.n, "max_c": s.max_c, "mean_c": s.mean_c})).collect();
    run.summary(json!({ "per_n": per_n, "growth": study.growth, "bounded": study.bounded() }))?;
    Ok(format!("max implied C grows by a factor {:.3} over n = {:?}", study.growth, degrees))
}

fn verify<X: Executor>(run: &mut Run<'_, X>) -> CliResult<String> {
    let reports = run_all(run.cfg.params.cases.expect("resolved"), run.seed(), run.exec);
    let mut t = Table::new(&["suite", "cases", "violations", "max_error", "tolerance", "passed"]);
    for r in &reports {
        t.push(vec![
            r.name.into(),
            r.cases.into(),
            r.violations.into(),
            r.max_error.into(),
            r.tolerance.into(),
            r.passed().into(),
        ]);
    }
    run.out.write_csv("verify.csv", &t)?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
    run.summary(json!({ "suites": reports.len(), "failed": failed }))?;
    let table = render_table(&reports);
    if !failed.is_empty() {
        return Err(CliError::new(ExitCode::VerificationFailed, format!("{table}failed suites: {}", failed.join(", "))));
    }
    Ok(table.trim_end().to_string())
}
