//! Run settings and their layering: command-line flags over config file over
//! preset.
//!
//! Config files are flat `key = value` lines. `#` starts a comment, list values
//! are comma separated, and keys use the flag names without dashes (`T`,
//! `sigma0`, `xi-list`; `_` and `-` are interchangeable).

use std::path::PathBuf;

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Settings {
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(rename = "T-list", skip_serializing_if = "Option::is_none")]
    pub t_list: Option<Vec<f64>>,
    #[serde(rename = "tau-list", skip_serializing_if = "Option::is_none")]
    pub tau_list: Option<Vec<f64>>,
    #[serde(rename = "xi-list", skip_serializing_if = "Option::is_none")]
    pub xi_list: Option<Vec<f64>>,
    #[serde(rename = "sigma-list", skip_serializing_if = "Option::is_none")]
    pub sigma_list: Option<Vec<f64>>,
    #[serde(rename = "lambda-s-list", skip_serializing_if = "Option::is_none")]
    pub lambda_s_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

macro_rules! overlay_fields {
    ($lower:ident, $upper:ident, $($f:ident),*) => {
        Settings { $($f: $upper.$f.or($lower.$f)),* }
    };
}

impl Settings {
    /// `self` with every field set in `upper` replaced.
    pub fn overlay(self, upper: Settings) -> Settings {
        let lower = self;
        overlay_fields!(
            lower, upper, t, tau, xi, sigma, sigma0, lambda, lambda0, lambda1, t_list, tau_list, xi_list,
            sigma_list, lambda_s_list, sweep, edge, rule, mode, input, trials, seed
        )
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key_norm = key.replace('_', "-");
        match key_norm.as_str() {
            "T" => self.t = Some(number(key, value)?),
            "tau" => self.tau = Some(number(key, value)?),
            "xi" => self.xi = Some(number(key, value)?),
            "sigma" => self.sigma = Some(number(key, value)?),
            "sigma0" => self.sigma0 = Some(number(key, value)?),
            "lambda" => self.lambda = Some(number(key, value)?),
            "lambda0" => self.lambda0 = Some(number(key, value)?),
            "lambda1" => self.lambda1 = Some(number(key, value)?),
            "T-list" => self.t_list = Some(list(key, value)?),
            "tau-list" => self.tau_list = Some(list(key, value)?),
            "xi-list" => self.xi_list = Some(list(key, value)?),
            "sigma-list" => self.sigma_list = Some(list(key, value)?),
            "lambda-s-list" => self.lambda_s_list = Some(list(key, value)?),
            "sweep" => self.sweep = Some(value.to_string()),
            "edge" => self.edge = Some(value.to_string()),
            "rule" => self.rule = Some(value.to_string()),
            "mode" => self.mode = Some(value.to_string()),
            "input" => self.input = Some(PathBuf::from(value)),
            "trials" => self.trials = Some(integer(key, value)?),
            "seed" => self.seed = Some(integer(key, value)?),
            _ => return Err(CliError::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }
}

fn number(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::Config(format!("`{key}`: `{value}` is not a number")))
}

fn integer(key: &str, value: &str) -> Result<u64, CliError> {
    value
        .trim()
        .parse::<u64>()
        .map_err(|_| CliError::Config(format!("`{key}`: `{value}` is not a non-negative integer")))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    let values: Vec<f64> = value.split(',').map(|v| number(key, v)).collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(CliError::Config(format!("`{key}` is empty")));
    }
    Ok(values)
}

/// Parses a flat `key = value` config file.
pub fn parse_config(text: &str) -> Result<Settings, CliError> {
    let mut s = Settings::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
        s.set(key.trim(), value.trim())?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let s = parse_config("# receiver\nT = 0.01\ntau=0.02 # holding\n\nxi_list = 0.2, 0.3\nseed = 7\n").unwrap();
        assert_eq!(s.t, Some(0.01));
        assert_eq!(s.tau, Some(0.02));
        assert_eq!(s.xi_list, Some(vec![0.2, 0.3]));
        assert_eq!(s.seed, Some(7));
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(matches!(parse_config("temperature = 300"), Err(CliError::Config(_))));
        assert!(matches!(parse_config("T 0.01"), Err(CliError::Config(_))));
        assert!(matches!(parse_config("T = fast"), Err(CliError::Config(_))));
    }

    #[test]
    fn upper_layer_wins() {
        let preset = Settings { t: Some(0.01), tau: Some(0.02), seed: Some(1), ..Default::default() };
        let file = Settings { tau: Some(0.03), ..Default::default() };
        let flags = Settings { seed: Some(9), ..Default::default() };
        let s = preset.overlay(file).overlay(flags);
        assert_eq!((s.t, s.tau, s.seed), (Some(0.01), Some(0.03), Some(9)));
    }
}
