//! Bundled experiment settings, one per reproduced figure.
//!
//! Runtimes are for one core of a recent desktop CPU at the preset trial count.

use crate::config::Settings;
use crate::experiments::Command;

pub struct Preset {
    pub name: &'static str,
    pub command: Command,
    pub description: &'static str,
    pub expected_runtime: &'static str,
    pub settings: fn() -> Settings,
}

const SAMPLING_PERIODS: [f64; 6] = [0.0025, 0.005, 0.01, 0.02, 0.025, 0.05];
const HOLDING_TIMES: [f64; 3] = [0.01, 0.02, 0.03];

fn sampling_sweep() -> Settings {
    Settings {
        lambda: Some(10.0),
        tau_list: Some(vec![0.005, 0.01, 0.02]),
        t_list: Some(SAMPLING_PERIODS.to_vec()),
        trials: Some(1_000_000),
        ..Default::default()
    }
}

fn noise_sweep() -> Settings {
    Settings {
        lambda: Some(10.0),
        t: Some(0.01),
        tau_list: Some(HOLDING_TIMES.to_vec()),
        xi: Some(0.3),
        sigma0: Some(0.0),
        sigma_list: Some(vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3]),
        trials: Some(1_000_000),
        ..Default::default()
    }
}

fn binomial_sweep() -> Settings {
    Settings {
        lambda: Some(10.0),
        t: Some(0.01),
        tau_list: Some(HOLDING_TIMES.to_vec()),
        sigma: Some(0.2),
        sigma0: Some(0.02),
        xi_list: Some((1..=9).map(|i| i as f64 * 0.1).collect()),
        trials: Some(1_000_000),
        ..Default::default()
    }
}

fn ber_base() -> Settings {
    Settings {
        lambda0: Some(1.0),
        lambda1: Some(11.0),
        sigma: Some(0.2),
        sigma0: Some(0.02),
        trials: Some(100_000),
        ..Default::default()
    }
}

pub static PRESETS: &[Preset] = &[
    Preset {
        name: "fig3",
        command: Command::SweepSampling,
        description: "equivalent dead time vs sampling period, lambda = 10, no noise",
        expected_runtime: "about 1 min",
        settings: sampling_sweep,
    },
    Preset {
        name: "fig4",
        command: Command::SweepSampling,
        description: "equivalent arrival rate vs sampling period, lambda = 10, no noise",
        expected_runtime: "about 1 min",
        settings: sampling_sweep,
    },
    Preset {
        name: "fig5",
        command: Command::SweepNoise,
        description: "equivalent dead time vs shot noise, lambda = 10, 100 samples per symbol, xi = 0.3",
        expected_runtime: "about 1 min",
        settings: noise_sweep,
    },
    Preset {
        name: "fig6",
        command: Command::SweepNoise,
        description: "equivalent arrival rate vs shot noise, lambda = 10, 100 samples per symbol, xi = 0.3",
        expected_runtime: "about 1 min",
        settings: noise_sweep,
    },
    Preset {
        name: "fig7",
        command: Command::ApproxParams,
        description: "binomial N vs threshold, sigma = 0.2, sigma0 = 0.02",
        expected_runtime: "about 3 min",
        settings: binomial_sweep,
    },
    Preset {
        name: "fig8",
        command: Command::ApproxParams,
        description: "binomial P vs threshold, sigma = 0.2, sigma0 = 0.02",
        expected_runtime: "about 3 min",
        settings: binomial_sweep,
    },
    Preset {
        name: "fig9",
        command: Command::Ber,
        description: "BER vs holding time for several sampling periods, xi = 0.3",
        expected_runtime: "about 30 s",
        settings: || Settings {
            t_list: Some(vec![0.005, 0.01, 0.02]),
            xi: Some(0.3),
            sweep: Some("tau".into()),
            ..ber_base()
        },
    },
    Preset {
        name: "fig10",
        command: Command::Ber,
        description: "BER vs threshold for several signal levels, T = tau = 0.01",
        expected_runtime: "about 40 s",
        settings: || Settings {
            t: Some(0.01),
            tau: Some(0.01),
            lambda_s_list: Some(vec![5.0, 10.0, 20.0]),
            sweep: Some("xi".into()),
            ..ber_base()
        },
    },
    Preset {
        name: "fig11",
        command: Command::Design,
        description: "fast design rule vs full max-min search over signal level, with simulated BER",
        expected_runtime: "about 20 s",
        settings: || Settings {
            t: Some(0.01),
            lambda_s_list: Some(vec![4.0, 6.0, 8.0, 10.0, 12.0]),
            lambda1: None,
            mode: Some("both".into()),
            ..ber_base()
        },
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
