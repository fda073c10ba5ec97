//! Receiver and channel parameters, derived noise probabilities and the
//! Gaussian tail function.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Result};

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Relative slack used when splitting `tau` into whole sampling periods, so that
/// `tau = k * T` lands on `alpha = k` rather than `k - 1`.
const MULTIPLE_SLACK: f64 = 1e-12;

/// Gaussian tail probability `Q(x) = P(Z > x)` for a standard normal `Z`.
///
/// Evaluated as `erfc(x / sqrt 2) / 2`. Underflows to 0 for `x` beyond about 37.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * libm::erfc(x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Thermal noise standard deviation from physical quantities, normalized to
/// the mean pulse height: `sqrt(2 k T0 Ts / R) / pulse_height`.
pub fn thermal_sigma_from_physical(
    temperature_k: f64,
    symbol_duration_s: f64,
    load_ohm: f64,
    pulse_height: f64,
) -> f64 {
    (2.0 * BOLTZMANN * temperature_k * symbol_duration_s / load_ohm).sqrt() / pulse_height
}

/// Receiver front-end configuration, in symbol-normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverConfig {
    /// Sampling period `T`; `1/T` must be an integer.
    pub sampling_period: f64,
    /// Holding time (pulse width, dead time) `tau`.
    pub holding_time: f64,
    /// Decision threshold `xi` relative to the mean pulse height.
    pub threshold: f64,
    /// Standard deviation `sigma` of the pulse amplitude.
    pub shot_sigma: f64,
    /// Standard deviation `sigma0` of the additive per-sample noise.
    pub thermal_sigma: f64,
}

impl ReceiverConfig {
    /// Builds and validates a configuration.
    pub fn new(
        sampling_period: f64,
        holding_time: f64,
        threshold: f64,
        shot_sigma: f64,
        thermal_sigma: f64,
    ) -> Result<Self> {
        let cfg = Self { sampling_period, holding_time, threshold, shot_sigma, thermal_sigma };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Noise-free configuration (`sigma = sigma0 = 0`) with threshold 0.5.
    pub fn noiseless(sampling_period: f64, holding_time: f64) -> Result<Self> {
        Self::new(sampling_period, holding_time, 0.5, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.sampling_period;
        if !(t > 0.0 && t <= 1.0) {
            return Err(invalid("T", "sampling period must lie in (0, 1]"));
        }
        let n = 1.0 / t;
        if (n - n.round()).abs() > 1e-9 * n {
            return Err(invalid("T", "1/T must be an integer number of samples"));
        }
        if !(self.holding_time > 0.0 && self.holding_time < 1.0) {
            return Err(invalid("tau", "holding time must lie in (0, 1)"));
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(invalid("xi", "threshold must be positive and finite"));
        }
        if !(self.shot_sigma >= 0.0 && self.shot_sigma.is_finite()) {
            return Err(invalid("sigma", "shot noise deviation must be finite and >= 0"));
        }
        if !(self.thermal_sigma >= 0.0 && self.thermal_sigma.is_finite()) {
            return Err(invalid("sigma0", "thermal noise deviation must be finite and >= 0"));
        }
        Ok(())
    }

    /// Number of samples per symbol, `1/T`.
    pub fn samples_per_symbol(&self) -> usize {
        (1.0 / self.sampling_period).round() as usize
    }

    pub fn regime(&self) -> Regime {
        if self.sampling_period <= self.holding_time {
            Regime::TleTau
        } else {
            Regime::TgtTau
        }
    }

    pub fn with_threshold(mut self, xi: f64) -> Self {
        self.threshold = xi;
        self
    }

    pub fn with_holding_time(mut self, tau: f64) -> Self {
        self.holding_time = tau;
        self
    }
}

/// Sampling regime relative to the holding time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Sampling period longer than the holding time (`T > tau`).
    TgtTau,
    /// Sampling period at most the holding time (`T <= tau`).
    TleTau,
}

/// On-off keying photon rates per symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Mean photoelectrons when symbol 0 is sent (background).
    pub lambda0: f64,
    /// Mean photoelectrons when symbol 1 is sent.
    pub lambda1: f64,
}

impl ChannelParams {
    pub fn new(lambda0: f64, lambda1: f64) -> Result<Self> {
        if !(lambda0 >= 0.0 && lambda0.is_finite()) {
            return Err(invalid("lambda0", "must be finite and >= 0"));
        }
        if !(lambda1 > 0.0 && lambda1.is_finite()) {
            return Err(invalid("lambda1", "must be finite and > 0"));
        }
        if lambda1 < lambda0 {
            return Err(invalid("lambda1", "must be >= lambda0"));
        }
        Ok(Self { lambda0, lambda1 })
    }

    /// Signal contribution `lambda_s = lambda1 - lambda0`.
    pub fn lambda_s(&self) -> f64 {
        self.lambda1 - self.lambda0
    }
}

/// Quantities derived from a [`ReceiverConfig`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// Probability that a single pulse sample falls below the threshold.
    pub q: f64,
    /// Probability that a noise-only sample exceeds the threshold.
    pub p: f64,
    /// Whole sampling periods in the holding time, `floor(tau/T)`.
    pub alpha: u32,
    /// Remainder `tau - alpha*T`, in `[0, T)`.
    pub delta: f64,
    /// Equivalent dead time of the regime: `3T/2` if `T > tau`, else `tau + T/2`.
    pub tau_equiv: f64,
    /// Count cap `floor(1/tau_equiv) + 1`.
    pub max_count: usize,
    pub regime: Regime,
    /// Sampling period `T` the quantities were derived for.
    pub sampling_period: f64,
}

/// Computes `q`, `p`, `alpha`, `delta` and the count cap for a configuration.
pub fn derive_params(cfg: &ReceiverConfig) -> Result<DerivedParams> {
    cfg.validate()?;
    let t = cfg.sampling_period;
    let tau = cfg.holding_time;
    let xi = cfg.threshold;

    let q = if cfg.shot_sigma > 0.0 {
        gaussian_q((1.0 - xi) / cfg.shot_sigma)
    } else if xi > 1.0 {
        1.0
    } else {
        0.0
    };
    let p = if cfg.thermal_sigma > 0.0 { gaussian_q(xi / cfg.thermal_sigma) } else { 0.0 };

    let alpha = (tau / t + MULTIPLE_SLACK).floor();
    let delta = (tau - alpha * t).max(0.0);
    let regime = cfg.regime();
    let tau_equiv = match regime {
        Regime::TgtTau => 1.5 * t,
        Regime::TleTau => tau + 0.5 * t,
    };
    Ok(DerivedParams {
        q,
        p,
        alpha: alpha as u32,
        delta,
        tau_equiv,
        max_count: (1.0 / tau_equiv).floor() as usize + 1,
        regime,
        sampling_period: t,
    })
}
