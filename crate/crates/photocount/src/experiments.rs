//! The experiment commands. Each one turns resolved [`Settings`] into a CSV
//! [`Table`].
//!
//! Sweeps reuse the same seed at every point, so neighbouring points share
//! random numbers and their differences are less noisy than their levels.

use std::path::Path;

use photocount_core::design::{default_tau_grid, default_xi_grid, select_params, DesignMode, DesignResult};
use photocount_core::detector::{analytic_rule, error_prob_analytic, MlRule};
use photocount_core::mc::{fit_equivalent, EquivalentFit, MomentEstimate};
use photocount_core::moments::{
    binomial_approx, moments_approx_noiseless, moments_exact_noiseless, moments_full, moments_shot, BinomialApprox,
    CountMoments,
};
use photocount_core::stats::CountHistogram;
use photocount_core::subpoisson::subpoisson_pmf;
use photocount_core::waveform::EdgeMode;
use photocount_core::{derive_params, ChannelParams, ReceiverConfig};
use serde::Serialize;

use crate::config::Settings;
use crate::error::CliError;
use crate::mc::Engine;
use crate::output::{Cell, Table};

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Pmf,
    Moments,
    Fit,
    SweepSampling,
    SweepNoise,
    ApproxParams,
    Design,
    Ber,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pmf => "pmf",
            Command::Moments => "moments",
            Command::Fit => "fit",
            Command::SweepSampling => "sweep-sampling",
            Command::SweepNoise => "sweep-noise",
            Command::ApproxParams => "approx-params",
            Command::Design => "design",
            Command::Ber => "ber",
        }
    }
}

/// Settings resolved into typed values shared by the commands.
struct Ctx<'a> {
    s: &'a Settings,
    engine: &'a Engine,
    edge: EdgeMode,
    trials: u64,
    seed: u64,
}

pub fn run(cmd: Command, s: &Settings, engine: &Engine) -> Result<Table, CliError> {
    let edge = match s.edge.as_deref() {
        None | Some("stationary") => EdgeMode::Stationary,
        Some("start-low") => EdgeMode::StartLow,
        Some(other) => return Err(CliError::Config(format!("edge must be `stationary` or `start-low`, got `{other}`"))),
    };
    let trials = s.trials.unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    let ctx = Ctx { s, engine, edge, trials, seed: s.seed.unwrap_or(DEFAULT_SEED) };
    match cmd {
        Command::Pmf => pmf(&ctx),
        Command::Moments => moments(&ctx),
        Command::Fit => fit(&ctx),
        Command::SweepSampling => sweep_sampling(&ctx),
        Command::SweepNoise => sweep_noise(&ctx),
        Command::ApproxParams => approx_params(&ctx),
        Command::Design => design(&ctx),
        Command::Ber => ber(&ctx),
    }
}

fn req(v: Option<f64>, name: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing parameter `{name}`")))
}

fn values(list: &Option<Vec<f64>>, single: Option<f64>, name: &str) -> Result<Vec<f64>, CliError> {
    match (list, single) {
        (Some(l), _) => Ok(l.clone()),
        (None, Some(v)) => Ok(vec![v]),
        (None, None) => Err(CliError::Config(format!("missing parameter `{name}` (or `{name}-list`)"))),
    }
}

/// Receiver with the given `T` and `tau`; threshold and noise default to a
/// noise-free receiver with `xi = 0.5`.
fn receiver(s: &Settings, t: f64, tau: f64) -> Result<ReceiverConfig, CliError> {
    Ok(ReceiverConfig::new(t, tau, s.xi.unwrap_or(0.5), s.sigma.unwrap_or(0.0), s.sigma0.unwrap_or(0.0))?)
}

/// Channels from `lambda0` and either `lambda-s-list` or `lambda1`.
fn channels(s: &Settings) -> Result<Vec<ChannelParams>, CliError> {
    let lambda0 = req(s.lambda0, "lambda0")?;
    let ones: Vec<f64> = match (&s.lambda_s_list, s.lambda1) {
        (Some(list), _) => list.iter().map(|ls| lambda0 + ls).collect(),
        (None, Some(l1)) => vec![l1],
        (None, None) => return Err(CliError::Config("missing parameter `lambda1` (or `lambda-s-list`)".into())),
    };
    ones.into_iter().map(|l1| Ok(ChannelParams::new(lambda0, l1)?)).collect()
}

fn pmf(ctx: &Ctx) -> Result<Table, CliError> {
    let dist = subpoisson_pmf(req(ctx.s.lambda, "lambda")?, req(ctx.s.tau, "tau")?)?;
    let mut table = Table::new(&["n", "probability"]);
    for (n, &p) in dist.pmf.iter().enumerate() {
        table.push(vec![n.into(), p.into()]);
    }
    Ok(table)
}

fn moments(ctx: &Ctx) -> Result<Table, CliError> {
    let s = ctx.s;
    let lambda = req(s.lambda, "lambda")?;
    let cfg = receiver(s, req(s.t, "T")?, req(s.tau, "tau")?)?;
    let d = derive_params(&cfg)?;
    let mut table = Table::new(&[
        "model",
        "mean",
        "variance",
        "mean_std_error",
        "lambda_equiv",
        "tau_equiv",
        "valid",
        "binomial_n",
        "binomial_p",
    ]);
    let mut models: Vec<(&str, CountMoments)> = Vec::new();
    if cfg.shot_sigma == 0.0 && cfg.thermal_sigma == 0.0 {
        models.push(("exact_noiseless", moments_exact_noiseless(lambda, &cfg)?));
        models.push(("approx_noiseless", moments_approx_noiseless(lambda, &cfg)?));
    }
    if cfg.thermal_sigma == 0.0 {
        models.push(("shot", moments_shot(lambda, &cfg)?));
    }
    models.push(("full", moments_full(lambda, &cfg)?));
    for (name, m) in models {
        let b = binomial_approx(&m, &d).ok();
        table.push(vec![
            name.into(),
            m.mean.into(),
            m.variance.into(),
            Cell::Text(String::new()),
            m.lambda_equiv.into(),
            m.tau_equiv.into(),
            m.validity.is_valid().into(),
            b.map(|b| b.n_trials).into(),
            b.map(|b| b.prob).into(),
        ]);
    }
    if s.trials.is_some() {
        let h = ctx.engine.histogram(lambda, &cfg, ctx.edge, ctx.seed, ctx.trials);
        let e = MomentEstimate::from_histogram(&h);
        let fit = fit_equivalent(&h).ok();
        let b = BinomialApprox::from_moments(e.mean, e.variance).ok();
        table.push(vec![
            "monte_carlo".into(),
            e.mean.into(),
            e.variance.into(),
            e.std_error.into(),
            fit.map(|f| f.lambda).into(),
            fit.map(|f| f.tau).into(),
            e.variance_defined.into(),
            b.map(|b| b.n_trials).into(),
            b.map(|b| b.prob).into(),
        ]);
    }
    Ok(table)
}

/// Reads a count histogram from CSV with columns `n,count`.
pub fn read_histogram(path: &Path) -> Result<CountHistogram, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read histogram `{}`: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| CliError::Config(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("histogram CSV needs a `{name}` column")))
    };
    let (n_col, c_col) = (col("n")?, col("count")?);
    let mut counts = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(e.to_string()))?;
        let parse = |c: usize| -> Result<u64, CliError> {
            rec.get(c)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| CliError::Config(format!("histogram row {}: expected non-negative integers", i + 1)))
        };
        let (n, c) = (parse(n_col)? as usize, parse(c_col)?);
        if n >= counts.len() {
            counts.resize(n + 1, 0);
        }
        counts[n] += c;
    }
    let h = CountHistogram::from_counts(counts);
    if h.total() < 2 {
        return Err(CliError::Config("histogram needs at least two observations".into()));
    }
    Ok(h)
}

fn fit_cells(f: &EquivalentFit) -> Vec<Cell> {
    vec![f.tau.into(), f.lambda.into(), f.tau_se.into(), f.lambda_se.into()]
}

fn fit(ctx: &Ctx) -> Result<Table, CliError> {
    let s = ctx.s;
    let h = match &s.input {
        Some(path) => read_histogram(path)?,
        None => {
            let cfg = receiver(s, req(s.t, "T")?, req(s.tau, "tau")?)?;
            ctx.engine.histogram(req(s.lambda, "lambda")?, &cfg, ctx.edge, ctx.seed, ctx.trials)
        }
    };
    let f = fit_equivalent(&h)?;
    let b = BinomialApprox::from_moments(f.moments.mean, f.moments.variance).ok();
    let mut table = Table::new(&[
        "trials", "mean", "variance", "tau_fit", "lambda_fit", "tau_fit_se", "lambda_fit_se", "binomial_n", "binomial_p",
    ]);
    let mut row = vec![f.moments.trials.into(), f.moments.mean.into(), f.moments.variance.into()];
    row.extend(fit_cells(&f));
    row.push(b.map(|b| b.n_trials).into());
    row.push(b.map(|b| b.prob).into());
    table.push(row);
    Ok(table)
}

fn sweep_sampling(ctx: &Ctx) -> Result<Table, CliError> {
    let s = ctx.s;
    let lambda = req(s.lambda, "lambda")?;
    let mut table = Table::new(&[
        "tau",
        "T",
        "tau_fit",
        "lambda_fit",
        "tau_fit_se",
        "lambda_fit_se",
        "tau_theory",
        "lambda_theory",
    ]);
    for tau in values(&s.tau_list, s.tau, "tau")? {
        for t in values(&s.t_list, s.t, "T")? {
            // Noise-free receiver; the threshold only has to lie in (0, 1].
            let cfg = ReceiverConfig::noiseless(t, tau)?;
            let theory = moments_approx_noiseless(lambda, &cfg)?;
            let h = ctx.engine.histogram(lambda, &cfg, ctx.edge, ctx.seed, ctx.trials);
            let f = fit_equivalent(&h)?;
            let mut row: Vec<Cell> = vec![tau.into(), t.into()];
            row.extend(fit_cells(&f));
            row.push(theory.tau_equiv.into());
            row.push(theory.lambda_equiv.into());
            table.push(row);
        }
    }
    Ok(table)
}

fn sweep_noise(ctx: &Ctx) -> Result<Table, CliError> {
    let s = ctx.s;
    let lambda = req(s.lambda, "lambda")?;
    let t = req(s.t, "T")?;
    let mut table = Table::new(&[
        "tau",
        "sigma",
        "q",
        "tau_fit",
        "lambda_fit",
        "tau_fit_se",
        "lambda_fit_se",
        "tau_theory",
        "lambda_theory",
    ]);
    for tau in values(&s.tau_list, s.tau, "tau")? {
        for sigma in values(&s.sigma_list, s.sigma, "sigma")? {
            let cfg = ReceiverConfig::new(t, tau, req(s.xi, "xi")?, sigma, s.sigma0.unwrap_or(0.0))?;
            let d = derive_params(&cfg)?;
            let theory = moments_full(lambda, &cfg)?;
            let h = ctx.engine.histogram(lambda, &cfg, ctx.edge, ctx.seed, ctx.trials);
            let f = fit_equivalent(&h)?;
            let mut row: Vec<Cell> = vec![tau.into(), sigma.into(), d.q.into()];
            row.extend(fit_cells(&f));
            row.push(theory.tau_equiv.into());
            row.push(theory.lambda_equiv.into());
            table.push(row);
        }
    }
    Ok(table)
}

fn approx_params(ctx: &Ctx) -> Result<Table, CliError> {
    let s = ctx.s;
    let lambda = req(s.lambda, "lambda")?;
    let t = req(s.t, "T")?;
    let mut table = Table::new(&[
        "tau",
        "xi",
        "n_theory",
        "p_theory",
        "n_fit",
        "p_fit",
        "mean_mc",
        "variance_mc",
        "mean_theory",
        "variance_theory",
    ]);
    for tau in values(&s.tau_list, s.tau, "tau")? {
        for xi in values(&s.xi_list, s.xi, "xi")? {
            let cfg = ReceiverConfig::new(t, tau, xi, req(s.sigma, "sigma")?, req(s.sigma0, "sigma0")?)?;
            let d = derive_params(&cfg)?;
            let m = moments_full(lambda, &cfg)?;
            let theory = binomial_approx(&m, &d)?;
            let e = ctx.engine.estimate_moments(lambda, &cfg, ctx.edge, ctx.seed, ctx.trials);
            let fitted = BinomialApprox::from_moments(e.mean, e.variance)?;
            table.push(vec![
                tau.into(),
                xi.into(),
                theory.n_trials.into(),
                theory.prob.into(),
                fitted.n_trials.into(),
                fitted.prob.into(),
                e.mean.into(),
                e.variance.into(),
                m.mean.into(),
                m.variance.into(),
            ]);
        }
    }
    Ok(table)
}

fn design_mode(s: &Settings) -> Result<DesignMode, CliError> {
    match s.mode.as_deref() {
        None | Some("auto") => Ok(DesignMode::Auto),
        Some("fast") => Ok(DesignMode::Fast),
        Some("full") => Ok(DesignMode::Full),
        Some("both") => Ok(DesignMode::Both),
        Some(other) => Err(CliError::Config(format!("mode must be auto, fast, full or both, got `{other}`"))),
    }
}

fn design(ctx: &Ctx) -> Result<Table, CliError> {
    let s = ctx.s;
    let t = req(s.t, "T")?;
    let template = ReceiverConfig::new(t, t, 0.5, s.sigma.unwrap_or(0.0), s.sigma0.unwrap_or(0.0))?;
    let xi_grid = s.xi_list.clone().unwrap_or_else(|| default_xi_grid(&template));
    let tau_grid = s.tau_list.clone().unwrap_or_else(|| default_tau_grid(t));
    let mode = design_mode(s)?;
    let with_mc = s.trials.is_some();
    let mut table = Table::new(&[
        "lambda0",
        "lambda1",
        "path",
        "selected",
        "xi_star",
        "tau_star",
        "kl_01",
        "kl_10",
        "objective",
        "predicted_ber",
        "conditions_hold",
        "lemma1",
        "lemma2",
        "p_bound",
        "kl_gap_bound",
        "kl_gap_value",
        "skipped_points",
        "ber_mc",
        "ber_std_error",
    ]);
    for channel in channels(s)? {
        let report = select_params(&channel, &template, &xi_grid, &tau_grid, mode)?;
        let mut results: Vec<(DesignResult, bool)> = Vec::new();
        for r in [report.fast, report.full].into_iter().flatten() {
            results.push((r, r == report.selected));
        }
        if results.is_empty() {
            results.push((report.selected, true));
        }
        for (r, selected) in results {
            let (ber, se) = if with_mc {
                let cfg = template.with_threshold(r.xi_star).with_holding_time(r.tau_star);
                let (_, tally) = ctx.engine.ber_mc(&channel, &cfg, ctx.edge, ctx.seed, ctx.trials)?;
                (Some(tally.ber()), Some(tally.std_error()))
            } else {
                (None, None)
            };
            let c = &r.conditions;
            table.push(vec![
                channel.lambda0.into(),
                channel.lambda1.into(),
                match r.path {
                    photocount_core::design::DesignPath::Fast => "fast",
                    photocount_core::design::DesignPath::Full => "full",
                }
                .into(),
                selected.into(),
                r.xi_star.into(),
                r.tau_star.into(),
                r.kl_01.into(),
                r.kl_10.into(),
                r.objective.into(),
                r.predicted_ber.into(),
                c.all().into(),
                c.lemma1_asymmetry.into(),
                c.lemma2_tau.into(),
                c.p_bound.into(),
                c.kl_gap_bound.into(),
                c.margins.kl_gap_bound.into(),
                report.skipped.len().into(),
                ber.into(),
                se.into(),
            ]);
        }
    }
    Ok(table)
}

/// Thresholds `0.05, 0.10, ..., 0.95`.
pub fn default_ber_xi_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

fn ber(ctx: &Ctx) -> Result<Table, CliError> {
    let s = ctx.s;
    let t_values = values(&s.t_list, s.t, "T")?;
    let sweep = s.sweep.as_deref();
    if let Some(axis) = sweep {
        if !matches!(axis, "xi" | "tau" | "T" | "lambda-s") {
            return Err(CliError::Config(format!("sweep axis must be xi, tau, T or lambda-s, got `{axis}`")));
        }
    }
    let xi_values = match (&s.xi_list, sweep) {
        (Some(l), _) => l.clone(),
        (None, Some("xi")) => default_ber_xi_grid(),
        (None, _) => vec![req(s.xi, "xi")?],
    };
    let fitted = match s.rule.as_deref() {
        None | Some("analytic") => false,
        Some("fitted") => true,
        Some(other) => return Err(CliError::Config(format!("rule must be `analytic` or `fitted`, got `{other}`"))),
    };
    let mut table = Table::new(&[
        "lambda0",
        "lambda1",
        "T",
        "tau",
        "xi",
        "threshold",
        "ber",
        "std_error",
        "p10",
        "p01",
        "analytic_pe",
    ]);
    for channel in channels(s)? {
        for &t in &t_values {
            let tau_values = match (&s.tau_list, sweep) {
                (Some(l), _) => l.clone(),
                (None, Some("tau")) => (1..=5).map(|k| k as f64 * t).collect(),
                (None, _) => vec![s.tau.unwrap_or(t)],
            };
            for &tau in &tau_values {
                for &xi in &xi_values {
                    let cfg = ReceiverConfig::new(t, tau, xi, req(s.sigma, "sigma")?, req(s.sigma0, "sigma0")?)?;
                    let rule: MlRule = if fitted {
                        ctx.engine.fitted_rule(&channel, &cfg, ctx.edge, ctx.seed, ctx.trials)?
                    } else {
                        analytic_rule(&channel, &cfg)?
                    };
                    let tally = ctx.engine.ber_tally(&channel, &cfg, ctx.edge, &rule, ctx.seed, ctx.trials);
                    let rate = |i: usize| {
                        if tally.sent[i] == 0 {
                            0.0
                        } else {
                            tally.errors[i] as f64 / tally.sent[i] as f64
                        }
                    };
                    table.push(vec![
                        channel.lambda0.into(),
                        channel.lambda1.into(),
                        t.into(),
                        tau.into(),
                        xi.into(),
                        rule.threshold.into(),
                        tally.ber().into(),
                        tally.std_error().into(),
                        rate(1).into(),
                        rate(0).into(),
                        error_prob_analytic(&rule).pe.into(),
                    ]);
                }
            }
        }
    }
    Ok(table)
}
