//! Command-line front end.
//!
//! Exit status: 0 success, 1 internal error, 2 invalid configuration,
//! 3 approximation breakdown at a requested point.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, Settings};
use crate::error::CliError;
use crate::experiments::{self, Command, DEFAULT_SEED, DEFAULT_TRIALS};
use crate::mc::Engine;
use crate::output::{manifest_path, Manifest};
use crate::presets::{self, PRESETS};

#[derive(Debug, Parser)]
#[command(name = "photocount", version, about = "Photon-counting receiver models, simulation and design sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Dead-time counting distribution, columns n, probability.
    Pmf,
    /// Count moments under each noise model (plus simulation with --trials).
    Moments,
    /// Equivalent rate and dead time fitted to a simulated or supplied histogram.
    Fit,
    /// Fitted vs predicted equivalent parameters over sampling periods.
    SweepSampling,
    /// Fitted vs predicted equivalent parameters over shot-noise levels.
    SweepNoise,
    /// Predicted vs fitted binomial parameters over thresholds.
    ApproxParams,
    /// Threshold and holding-time selection.
    Design,
    /// Simulated bit error rate of the ML detector.
    Ber,
    /// List the bundled presets.
    Presets,
}

#[derive(Debug, Args, Default)]
pub struct Options {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "PHOTOCOUNT_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Simulated symbols per point.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// CSV output path; a `<out>.manifest.json` is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` settings file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub preset: Option<String>,

    /// Sampling period (1/T samples per symbol).
    #[arg(long = "T", global = true)]
    pub t: Option<f64>,
    /// Pulse holding time.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Decision threshold of the sample quantizer.
    #[arg(long, global = true)]
    pub xi: Option<f64>,
    /// Shot-noise deviation of pulse amplitudes.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Thermal-noise deviation of samples.
    #[arg(long, global = true)]
    pub sigma0: Option<f64>,
    /// Mean photoelectrons per symbol.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Mean photoelectrons for symbol 0.
    #[arg(long, global = true)]
    pub lambda0: Option<f64>,
    /// Mean photoelectrons for symbol 1.
    #[arg(long, global = true)]
    pub lambda1: Option<f64>,
    #[arg(long = "T-list", global = true, value_delimiter = ',')]
    pub t_list: Option<Vec<f64>>,
    #[arg(long = "tau-list", global = true, value_delimiter = ',')]
    pub tau_list: Option<Vec<f64>>,
    #[arg(long = "xi-list", global = true, value_delimiter = ',')]
    pub xi_list: Option<Vec<f64>>,
    #[arg(long = "sigma-list", global = true, value_delimiter = ',')]
    pub sigma_list: Option<Vec<f64>>,
    /// Signal levels; symbol 1 uses lambda0 + each value.
    #[arg(long = "lambda-s-list", global = true, value_delimiter = ',')]
    pub lambda_s_list: Option<Vec<f64>>,
    /// Swept axis for `ber` without an explicit list: xi or tau.
    #[arg(long, global = true)]
    pub sweep: Option<String>,
    /// Symbol start convention: stationary or start-low.
    #[arg(long, global = true)]
    pub edge: Option<String>,
    /// Detection rule for `ber`: analytic or fitted.
    #[arg(long, global = true)]
    pub rule: Option<String>,
    /// Design search: auto, fast, full or both.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Histogram CSV (columns n, count) for `fit`.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
}

impl Options {
    fn flag_settings(&self) -> Settings {
        Settings {
            t: self.t,
            tau: self.tau,
            xi: self.xi,
            sigma: self.sigma,
            sigma0: self.sigma0,
            lambda: self.lambda,
            lambda0: self.lambda0,
            lambda1: self.lambda1,
            t_list: self.t_list.clone(),
            tau_list: self.tau_list.clone(),
            xi_list: self.xi_list.clone(),
            sigma_list: self.sigma_list.clone(),
            lambda_s_list: self.lambda_s_list.clone(),
            sweep: self.sweep.clone(),
            edge: self.edge.clone(),
            rule: self.rule.clone(),
            mode: self.mode.clone(),
            input: self.input.clone(),
            trials: self.trials,
            seed: self.seed,
        }
    }
}

fn command_of(sub: &Sub) -> Option<Command> {
    Some(match sub {
        Sub::Pmf => Command::Pmf,
        Sub::Moments => Command::Moments,
        Sub::Fit => Command::Fit,
        Sub::SweepSampling => Command::SweepSampling,
        Sub::SweepNoise => Command::SweepNoise,
        Sub::ApproxParams => Command::ApproxParams,
        Sub::Design => Command::Design,
        Sub::Ber => Command::Ber,
        Sub::Presets => return None,
    })
}

/// Preset, then config file, then flags.
pub fn resolve_settings(cmd: Command, opts: &Options) -> Result<Settings, CliError> {
    let mut settings = Settings::default();
    if let Some(name) = &opts.preset {
        let preset = presets::find(name).ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?;
        if preset.command != cmd {
            return Err(CliError::Config(format!(
                "preset `{name}` belongs to `{}`, not `{}`",
                preset.command.name(),
                cmd.name()
            )));
        }
        settings = (preset.settings)();
    }
    if let Some(path) = &opts.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config `{}`: {e}", path.display())))?;
        settings = settings.overlay(parse_config(&text)?);
    }
    Ok(settings.overlay(opts.flag_settings()))
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let Some(cmd) = command_of(&cli.command) else {
        for p in PRESETS {
            writeln!(stdout, "{:<6} {:<15} {} ({})", p.name, p.command.name(), p.description, p.expected_runtime)?;
        }
        return Ok(());
    };
    let started = Instant::now();
    let settings = resolve_settings(cmd, &cli.opts)?;
    let workers = cli.opts.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(CliError::Config("workers must be at least 1".into()));
    }
    let engine = Engine::new(workers).map_err(|e| CliError::Internal(e.to_string()))?;
    let table = experiments::run(cmd, &settings, &engine)?;
    match &cli.opts.out {
        None => table.write_to(stdout)?,
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            table.write_to(std::fs::File::create(path)?)?;
            let manifest = Manifest {
                command: cmd.name().to_string(),
                preset: cli.opts.preset.clone(),
                params: serde_json::to_value(&settings).map_err(|e| CliError::Internal(e.to_string()))?,
                seed: settings.seed.unwrap_or(DEFAULT_SEED),
                trials: settings.trials.unwrap_or(DEFAULT_TRIALS),
                workers,
                version: env!("CARGO_PKG_VERSION"),
                wall_time_s: started.elapsed().as_secs_f64(),
                output: path.display().to_string(),
            };
            let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))?;
            std::fs::write(manifest_path(path), json + "\n")?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status. Errors go to `stderr`.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{rendered}") } else { write!(stderr, "{rendered}") };
            return code;
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "photocount: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("photocount").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_preset() {
        let cli = parse(&["sweep-sampling", "--preset", "fig3", "--trials", "10", "--T-list", "0.01,0.02"]);
        let s = resolve_settings(Command::SweepSampling, &cli.opts).unwrap();
        assert_eq!(s.trials, Some(10));
        assert_eq!(s.t_list, Some(vec![0.01, 0.02]));
        assert_eq!(s.lambda, Some(10.0));
    }

    #[test]
    fn preset_must_match_command() {
        let cli = parse(&["ber", "--preset", "fig3"]);
        assert!(matches!(resolve_settings(Command::Ber, &cli.opts), Err(CliError::Config(_))));
    }
}
