//! Monte Carlo building blocks over trial index ranges.
//!
//! Every trial draws from its own stream ([`trial_rng`]), and results are
//! integer tallies, so any partition of a trial range into chunks merges back to
//! exactly the same outcome.

use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::detector::{classify, MlRule, Symbol};
use crate::error::Result;
use crate::params::{ChannelParams, ReceiverConfig};
use crate::stats::{proportion_std_error, CountHistogram};
use crate::subpoisson::invert_moments;
use crate::waveform::{gen_arrivals, trial_rng, EdgeMode, Simulator};

/// Histogram of recorded counts for trials `trials` of the receiver simulation.
pub fn count_histogram(
    lambda: f64,
    cfg: &ReceiverConfig,
    edge: EdgeMode,
    seed: u64,
    trials: Range<u64>,
) -> CountHistogram {
    let mut sim = Simulator::new(*cfg, edge);
    let mut h = CountHistogram::new();
    for trial in trials {
        let mut rng = trial_rng(seed, trial);
        h.add(sim.simulate(lambda, &mut rng).n_s);
    }
    h
}

/// Histogram of an ideal dead-time counter: Poisson(`lambda`) arrivals on
/// `[0, 1)`, an arrival is counted iff it comes more than `tau` after the
/// previous arrival, counted or not.
pub fn dead_time_histogram(lambda: f64, tau: f64, seed: u64, trials: Range<u64>) -> CountHistogram {
    let mut h = CountHistogram::new();
    for trial in trials {
        let mut rng = trial_rng(seed, trial);
        let arrivals = gen_arrivals(lambda, &mut rng);
        let mut prev = f64::NEG_INFINITY;
        let mut n = 0;
        for &t in &arrivals.times {
            if t - prev > tau {
                n += 1;
            }
            prev = t;
        }
        h.add(n);
    }
    h
}

/// Sample moments of a count histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    /// Unbiased sample variance; 0 when fewer than two trials.
    pub variance: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    pub trials: u64,
    /// False when the variance could not be estimated (one trial).
    pub variance_defined: bool,
}

impl MomentEstimate {
    pub fn from_histogram(h: &CountHistogram) -> Self {
        let trials = h.total();
        let mean = h.mean();
        match h.variance() {
            Some(v) => Self { mean, variance: v, std_error: (v / trials as f64).sqrt(), trials, variance_defined: true },
            None => Self { mean, variance: 0.0, std_error: 0.0, trials, variance_defined: false },
        }
    }
}

/// Equivalent sub-Poisson parameters fitted to a count histogram, with
/// delta-method standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalentFit {
    pub lambda: f64,
    pub tau: f64,
    pub lambda_se: f64,
    pub tau_se: f64,
    pub moments: MomentEstimate,
}

/// Fits `(lambda', tau')` by moment matching. The standard errors propagate the
/// sampling covariance of (mean, variance) through a numerical gradient of the
/// inversion.
pub fn fit_equivalent(h: &CountHistogram) -> Result<EquivalentFit> {
    let moments = MomentEstimate::from_histogram(h);
    let (m, v) = (moments.mean, moments.variance);
    let (lambda, tau) = invert_moments(m, v)?;
    let n = moments.trials as f64;
    let (m2, m3, m4) = h.central_moments();
    let var_m = m2 / n;
    let var_v = (m4 - m2 * m2) / n;
    let cov_mv = m3 / n;

    let hm = 1e-6 * m.max(1e-12);
    let hv = 1e-6 * v.max(1e-12);
    let grad = |dm: f64, dv: f64| -> Option<(f64, f64)> {
        let plus = invert_moments(m + dm, v + dv).ok()?;
        let minus = invert_moments(m - dm, v - dv).ok()?;
        let h2 = 2.0 * (dm + dv);
        Some(((plus.0 - minus.0) / h2, (plus.1 - minus.1) / h2))
    };
    let (lambda_se, tau_se) = match (grad(hm, 0.0), grad(0.0, hv)) {
        (Some((dl_dm, dt_dm)), Some((dl_dv, dt_dv))) => {
            let se = |a: f64, b: f64| (a * a * var_m + 2.0 * a * b * cov_mv + b * b * var_v).max(0.0).sqrt();
            (se(dl_dm, dl_dv), se(dt_dm, dt_dv))
        }
        _ => (f64::NAN, f64::NAN),
    };
    Ok(EquivalentFit { lambda, tau, lambda_se, tau_se, moments })
}

/// Decision outcomes of a batch of simulated symbols.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BerTally {
    /// Symbols sent, indexed by bit.
    pub sent: [u64; 2],
    /// Wrong decisions, indexed by the bit that was sent.
    pub errors: [u64; 2],
}

impl BerTally {
    pub fn merge(&mut self, other: &BerTally) {
        for i in 0..2 {
            self.sent[i] += other.sent[i];
            self.errors[i] += other.errors[i];
        }
    }

    pub fn symbols(&self) -> u64 {
        self.sent[0] + self.sent[1]
    }

    pub fn error_count(&self) -> u64 {
        self.errors[0] + self.errors[1]
    }

    pub fn ber(&self) -> f64 {
        let n = self.symbols();
        if n == 0 {
            return 0.0;
        }
        self.error_count() as f64 / n as f64
    }

    pub fn std_error(&self) -> f64 {
        proportion_std_error(self.error_count(), self.symbols())
    }
}

/// Sends equiprobable random symbols (one per trial index) through the receiver
/// and decides each with `rule`.
pub fn ber_tally(
    channel: &ChannelParams,
    cfg: &ReceiverConfig,
    edge: EdgeMode,
    rule: &MlRule,
    seed: u64,
    symbols: Range<u64>,
) -> BerTally {
    let mut sim = Simulator::new(*cfg, edge);
    let mut tally = BerTally::default();
    for trial in symbols {
        let mut rng = trial_rng(seed, trial);
        let sent = if rng.random::<bool>() { Symbol::One } else { Symbol::Zero };
        let lambda = match sent {
            Symbol::Zero => channel.lambda0,
            Symbol::One => channel.lambda1,
        };
        let n_s = sim.simulate(lambda, &mut rng).n_s;
        let bit = sent.bit() as usize;
        tally.sent[bit] += 1;
        if classify(n_s, rule) != sent {
            tally.errors[bit] += 1;
        }
    }
    tally
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::analytic_rule;
    use crate::subpoisson::subpoisson_moments;

    #[test]
    fn chunking_does_not_change_histogram() {
        let cfg = ReceiverConfig::new(0.01, 0.02, 0.3, 0.2, 0.02).unwrap();
        let whole = count_histogram(10.0, &cfg, EdgeMode::Stationary, 7, 0..300);
        let mut parts = count_histogram(10.0, &cfg, EdgeMode::Stationary, 7, 200..300);
        parts.merge(&count_histogram(10.0, &cfg, EdgeMode::Stationary, 7, 0..77));
        parts.merge(&count_histogram(10.0, &cfg, EdgeMode::Stationary, 7, 77..200));
        assert_eq!(whole, parts);
    }

    #[test]
    fn single_trial_flags_missing_variance() {
        let cfg = ReceiverConfig::noiseless(0.01, 0.01).unwrap();
        let e = MomentEstimate::from_histogram(&count_histogram(10.0, &cfg, EdgeMode::Stationary, 1, 0..1));
        assert!(!e.variance_defined);
        assert_eq!(e.variance, 0.0);
        assert_eq!(e.trials, 1);
    }

    #[test]
    fn dead_time_counter_mean() {
        let h = dead_time_histogram(10.0, 0.01, 3, 0..100_000);
        let e = MomentEstimate::from_histogram(&h);
        let (mean, _) = subpoisson_moments(10.0, 0.01);
        assert!((e.mean - mean).abs() < 4.0 * e.std_error, "{} vs {mean}", e.mean);
    }

    #[test]
    fn fit_recovers_known_parameters() {
        // Binomial(4, 1/2) frequencies: mean 2, variance 1.
        let h = CountHistogram::from_counts(alloc::vec![1, 4, 6, 4, 1].into_iter().map(|c| c * 1000).collect());
        let f = fit_equivalent(&h).unwrap();
        let (m, v) = (f.moments.mean, f.moments.variance);
        assert!((m - 2.0).abs() < 1e-12);
        assert!((f.tau - (m - v) / (2.0 * m * m)).abs() < 1e-12);
        assert!((f.lambda * (-f.lambda * f.tau).exp() - m).abs() < 1e-9);
        assert!(f.lambda_se > 0.0 && f.tau_se > 0.0);
    }

    #[test]
    fn equal_rates_give_half_error() {
        let cfg = ReceiverConfig::new(0.01, 0.01, 0.3, 0.2, 0.02).unwrap();
        let channel = ChannelParams::new(5.0, 5.0).unwrap();
        let rule = analytic_rule(&ChannelParams::new(1.0, 20.0).unwrap(), &cfg).unwrap();
        let t = ber_tally(&channel, &cfg, EdgeMode::Stationary, &rule, 11, 0..20_000);
        // Conditional error rates of indistinguishable symbols sum to one.
        let r0 = t.errors[0] as f64 / t.sent[0] as f64;
        let r1 = t.errors[1] as f64 / t.sent[1] as f64;
        assert!((r0 + r1 - 1.0).abs() < 0.03, "{r0} + {r1}");
    }
}
