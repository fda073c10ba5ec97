//! Mean and variance of the recorded pulse count `n_s` for a receiver that
//! samples every `T`, in the noise-free, shot-noise and shot-plus-thermal-noise
//! cases, and the binomial model matched to those moments.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::params::{derive_params, DerivedParams, ReceiverConfig, Regime};

/// Noise model a set of moments was computed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    None,
    Shot,
    ShotThermal,
}

/// Whether the small-rate approximations behind a result are expected to hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Validity {
    /// `lambda*tau < 0.5` and `lambda*T < 0.5`.
    pub small_rate: bool,
    /// The variance came out strictly positive.
    pub positive_variance: bool,
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        self.small_rate && self.positive_variance
    }
}

/// First two moments of the recorded count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountMoments {
    pub mean: f64,
    pub variance: f64,
    pub second_moment: f64,
    pub regime: Regime,
    pub noise: NoiseModel,
    /// Equivalent arrival rate `lambda'` of the matching ideal counter.
    pub lambda_equiv: f64,
    /// Equivalent dead time `tau'`: `3T/2` if `T > tau`, `tau + T/2` otherwise.
    pub tau_equiv: f64,
    /// Rate of pulses that clear the threshold, `(1-q) lambda`.
    pub pulse_rate: f64,
    pub validity: Validity,
}

impl CountMoments {
    fn new(
        mean: f64,
        variance: f64,
        cfg: &ReceiverConfig,
        lambda: f64,
        noise: NoiseModel,
        lambda_equiv: f64,
        pulse_rate: f64,
    ) -> Self {
        let regime = cfg.regime();
        let t = cfg.sampling_period;
        let tau_equiv = match regime {
            Regime::TgtTau => 1.5 * t,
            Regime::TleTau => cfg.holding_time + 0.5 * t,
        };
        let validity = Validity {
            small_rate: lambda * cfg.holding_time < 0.5 && lambda * t < 0.5,
            positive_variance: variance > 0.0,
        };
        Self {
            mean,
            variance,
            second_moment: variance + mean * mean,
            regime,
            noise,
            lambda_equiv,
            tau_equiv,
            pulse_rate,
            validity,
        }
    }
}

/// Exact moments for a noise-free receiver (`sigma`, `sigma0` ignored).
///
/// For `T > tau`: mean `e^{-l tau}(1 - e^{-l tau})/T` and
/// `E[n^2] = mean + (1 - 3T + 2T^2) mean^2`.
/// For `T <= tau` with `tau = alpha T + delta`: mean `e^{-l tau}(1 - e^{-l T})/T` and
/// `E[n^2] = mean + mean^2 [(1-(a+1)T)(1-(a+2)T) + 2T(1-(a+1)T)(1-e^{-l(T-delta)})/(1-e^{-l T})]`.
pub fn moments_exact_noiseless(lambda: f64, cfg: &ReceiverConfig) -> Result<CountMoments> {
    let d = derive_params(cfg)?;
    let t = cfg.sampling_period;
    let tau = cfg.holding_time;
    let (mean, second) = if lambda == 0.0 {
        (0.0, 0.0)
    } else {
        match d.regime {
            Regime::TgtTau => {
                let e = (-lambda * tau).exp();
                let mean = e * (1.0 - e) / t;
                (mean, mean + mean * mean * (1.0 - 3.0 * t + 2.0 * t * t))
            }
            Regime::TleTau => {
                let a = d.alpha as f64;
                let mean = (-lambda * tau).exp() * (-(-lambda * t).exp_m1()) / t;
                let ratio = (-lambda * (t - d.delta)).exp_m1() / (-lambda * t).exp_m1();
                let coef = (1.0 - (a + 1.0) * t) * (1.0 - (a + 2.0) * t)
                    + 2.0 * t * (1.0 - (a + 1.0) * t) * ratio;
                (mean, mean + mean * mean * coef)
            }
        }
    };
    let lambda_equiv = structural_rate(lambda, cfg);
    Ok(CountMoments::new(mean, second - mean * mean, cfg, lambda, NoiseModel::None, lambda_equiv, lambda))
}

/// Small-rate approximation for a noise-free receiver: `lambda' e^{-lambda' tau'}`
/// with `(lambda', tau') = (tau lambda / T, 3T/2)` if `T > tau`, `(lambda, tau + T/2)` otherwise.
pub fn moments_approx_noiseless(lambda: f64, cfg: &ReceiverConfig) -> Result<CountMoments> {
    cfg.validate()?;
    Ok(dead_time_form(lambda, lambda, cfg, NoiseModel::None))
}

/// Shot noise only (`sigma0` ignored): the pulse rate drops to `(1-q) lambda`
/// and the noise-free approximation applies with that rate.
pub fn moments_shot(lambda: f64, cfg: &ReceiverConfig) -> Result<CountMoments> {
    let d = derive_params(cfg)?;
    Ok(dead_time_form(lambda, (1.0 - d.q) * lambda, cfg, NoiseModel::Shot))
}

fn structural_rate(pulse_rate: f64, cfg: &ReceiverConfig) -> f64 {
    match cfg.regime() {
        Regime::TgtTau => pulse_rate * cfg.holding_time / cfg.sampling_period,
        Regime::TleTau => pulse_rate,
    }
}

fn dead_time_form(lambda: f64, pulse_rate: f64, cfg: &ReceiverConfig, noise: NoiseModel) -> CountMoments {
    let t = cfg.sampling_period;
    let lambda_equiv = structural_rate(pulse_rate, cfg);
    let tau_equiv = match cfg.regime() {
        Regime::TgtTau => 1.5 * t,
        Regime::TleTau => cfg.holding_time + 0.5 * t,
    };
    let mean = lambda_equiv * (-lambda_equiv * tau_equiv).exp();
    let variance = mean - 2.0 * tau_equiv * mean * mean;
    CountMoments::new(mean, variance, cfg, lambda, noise, lambda_equiv, pulse_rate)
}

/// Mean count with shot and thermal noise when `T > tau`.
pub(crate) fn full_mean_tgt(pulse_rate: f64, tau: f64, t: f64, p: f64) -> f64 {
    let s = (-pulse_rate * tau).exp() * (1.0 - p);
    s * (1.0 - s) / t
}

/// Mean count with shot and thermal noise when `T <= tau`.
pub(crate) fn full_mean_tle(pulse_rate: f64, tau: f64, t: f64, p: f64) -> f64 {
    (-pulse_rate * tau).exp() * (1.0 - p) * (1.0 - (-pulse_rate * t).exp() * (1.0 - p)) / t
}

/// Moments with both shot noise (`sigma`) and thermal noise (`sigma0`).
///
/// With `l' = (1-q) lambda`, for `T > tau` the mean is
/// `e^{-l' tau}(1-p)[1 - e^{-l' tau}(1-p)]/T` and the variance `mean + (2T^2 - 3T) mean^2`.
/// For `T <= tau` the mean is `e^{-l' tau}(1-p)[1 - e^{-l' T}(1-p)]/T` and the
/// variance `mean[1 + 2(alpha-1)p] + 2 mean^2 [-(tau + T/2) + p delta/(l' T + p)]`.
/// When `l' T + p = 0` nothing can ever be recorded and zero moments are returned.
pub fn moments_full(lambda: f64, cfg: &ReceiverConfig) -> Result<CountMoments> {
    let d = derive_params(cfg)?;
    Ok(full_with(lambda, cfg, &d))
}

pub(crate) fn full_with(lambda: f64, cfg: &ReceiverConfig, d: &DerivedParams) -> CountMoments {
    let t = cfg.sampling_period;
    let tau = cfg.holding_time;
    let p = d.p;
    let rate = (1.0 - d.q) * lambda;
    let lambda_equiv = structural_rate(rate, cfg);
    let (mean, variance) = match d.regime {
        Regime::TgtTau => {
            let mean = full_mean_tgt(rate, tau, t, p);
            (mean, mean + (2.0 * t * t - 3.0 * t) * mean * mean)
        }
        Regime::TleTau => {
            let denom = rate * t + p;
            if denom == 0.0 {
                (0.0, 0.0)
            } else {
                let mean = full_mean_tle(rate, tau, t, p);
                let a = d.alpha as f64;
                let variance = mean * (1.0 + 2.0 * (a - 1.0) * p)
                    + 2.0 * mean * mean * (-(tau + 0.5 * t) + p * d.delta / denom);
                (mean, variance)
            }
        }
    };
    CountMoments::new(mean, variance, cfg, lambda, NoiseModel::ShotThermal, lambda_equiv, rate)
}

/// Binomial law `B(N, P)` with real-valued `N`, used as the count likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialApprox {
    pub n_trials: f64,
    pub prob: f64,
}

impl BinomialApprox {
    /// Validated constructor: `N > 0`, `0 < P < 1`.
    pub fn new(n_trials: f64, prob: f64) -> Result<Self> {
        if !(n_trials > 0.0 && n_trials.is_finite()) {
            return Err(Error::Breakdown { flag: "binomial_n", detail: "trial count must be positive" });
        }
        if !(prob > 0.0 && prob < 1.0) {
            return Err(Error::Breakdown { flag: "binomial_p", detail: "success probability outside (0, 1)" });
        }
        Ok(Self { n_trials, prob })
    }

    /// Matches `N P = mean`, `N P (1-P) = variance`.
    pub fn from_moments(mean: f64, variance: f64) -> Result<Self> {
        if !(mean > 0.0) {
            return Err(Error::Breakdown { flag: "binomial_p", detail: "mean count is not positive" });
        }
        let prob = 1.0 - variance / mean;
        Self::new(mean / prob, prob)
    }

    pub fn mean(&self) -> f64 {
        self.n_trials * self.prob
    }

    pub fn variance(&self) -> f64 {
        self.n_trials * self.prob * (1.0 - self.prob)
    }

    /// Largest count in the support, `floor(N)`.
    pub fn support_max(&self) -> usize {
        self.n_trials.floor() as usize
    }

    /// Unnormalized log-probability of `n` counts, using `ln Gamma` for the
    /// binomial coefficient so that `N` need not be an integer.
    pub fn ln_pmf(&self, n: usize) -> f64 {
        let n_f = n as f64;
        if n_f > self.n_trials {
            return f64::NEG_INFINITY;
        }
        ln_binomial(self.n_trials, n_f) + n_f * self.prob.ln() + (self.n_trials - n_f) * (-self.prob).ln_1p()
    }

    /// Probabilities over `0..=floor(N)`, renormalized to sum to one, together
    /// with the deviation of the raw sum from one.
    pub fn pmf_table(&self) -> (Vec<f64>, f64) {
        let raw: Vec<f64> = (0..=self.support_max()).map(|n| self.ln_pmf(n).exp()).collect();
        let total: f64 = raw.iter().sum();
        let table = raw.iter().map(|v| v / total).collect();
        (table, (total - 1.0).abs())
    }
}

/// `ln C(N, n)` through `ln Gamma`.
pub fn ln_binomial(n_trials: f64, n: f64) -> f64 {
    libm::lgamma(n_trials + 1.0) - libm::lgamma(n + 1.0) - libm::lgamma(n_trials - n + 1.0)
}

/// Binomial parameters matched to moments from [`moments_full`] (or one of the
/// noise-free special cases).
///
/// For `T > tau`: `N = 1/(2 tau')`, `P = 2 tau' N^` with `tau' = 3T/2`. For
/// `T <= tau` both are corrected by `B = p delta/(tau'(l'T + p)) + (alpha-1)p/(N^ tau')`:
/// `N = 1/(2 tau' (1 - B))`, `P = 2 tau' N^ (1 - B)`.
pub fn binomial_approx(m: &CountMoments, d: &DerivedParams) -> Result<BinomialApprox> {
    let nhat = m.mean;
    if !(nhat > 0.0) {
        return Err(Error::Breakdown { flag: "binomial_p", detail: "mean count is not positive" });
    }
    let tau_equiv = m.tau_equiv;
    let scale = match m.regime {
        Regime::TgtTau => 1.0,
        Regime::TleTau => {
            let denom = m.pulse_rate * d.sampling_period + d.p;
            let first = if denom > 0.0 { d.p * d.delta / (tau_equiv * denom) } else { 0.0 };
            1.0 - (first + (d.alpha as f64 - 1.0) * d.p / (nhat * tau_equiv))
        }
    };
    let n_trials = 1.0 / (2.0 * tau_equiv * scale);
    let prob = 2.0 * tau_equiv * nhat * scale;
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::Breakdown { flag: "binomial_p", detail: "success probability outside (0, 1)" });
    }
    if !(n_trials > nhat) {
        return Err(Error::Breakdown { flag: "binomial_n", detail: "trial count does not exceed the mean" });
    }
    Ok(BinomialApprox { n_trials, prob })
}
