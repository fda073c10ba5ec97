//! Parallel Monte Carlo over fixed-size trial chunks.
//!
//! Trials are split into chunks of [`CHUNK`] consecutive indices regardless of
//! the worker count, and chunk results are integer tallies, so results depend
//! only on the seed and the trial count.

use std::ops::Range;

use photocount_core::detector::{analytic_rule, MlRule};
use photocount_core::mc::{self, BerTally, MomentEstimate};
use photocount_core::moments::BinomialApprox;
use photocount_core::stats::CountHistogram;
use photocount_core::waveform::EdgeMode;
use photocount_core::{ChannelParams, ReceiverConfig};
use rayon::prelude::*;

pub const CHUNK: u64 = 4096;

/// Seed offsets for the simulations that train a fitted detection rule, kept
/// apart from the streams used to measure its error rate.
const FIT_SEED_OFFSET: [u64; 2] = [0x5eed_0000_0000_0001, 0x5eed_0000_0000_0002];

pub struct Engine {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl Engine {
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let workers = workers.max(1);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
        Ok(Self { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    fn chunks(trials: u64) -> Vec<Range<u64>> {
        (0..trials.div_ceil(CHUNK)).map(|i| i * CHUNK..((i + 1) * CHUNK).min(trials)).collect()
    }

    fn histogram_with<F>(&self, trials: u64, f: F) -> CountHistogram
    where
        F: Fn(Range<u64>) -> CountHistogram + Sync,
    {
        self.pool.install(|| {
            Self::chunks(trials).into_par_iter().map(&f).reduce(CountHistogram::new, |mut a, b| {
                a.merge(&b);
                a
            })
        })
    }

    /// Count histogram of `trials` simulated symbols at rate `lambda`.
    pub fn histogram(&self, lambda: f64, cfg: &ReceiverConfig, edge: EdgeMode, seed: u64, trials: u64) -> CountHistogram {
        self.histogram_with(trials, |r| mc::count_histogram(lambda, cfg, edge, seed, r))
    }

    /// Count histogram of the ideal dead-time counter.
    pub fn dead_time_histogram(&self, lambda: f64, tau: f64, seed: u64, trials: u64) -> CountHistogram {
        self.histogram_with(trials, |r| mc::dead_time_histogram(lambda, tau, seed, r))
    }

    /// Mean, variance and standard error of the recorded count.
    pub fn estimate_moments(&self, lambda: f64, cfg: &ReceiverConfig, edge: EdgeMode, seed: u64, trials: u64) -> MomentEstimate {
        MomentEstimate::from_histogram(&self.histogram(lambda, cfg, edge, seed, trials))
    }

    /// Error tally of `rule` over `symbols` random equiprobable symbols.
    pub fn ber_tally(
        &self,
        channel: &ChannelParams,
        cfg: &ReceiverConfig,
        edge: EdgeMode,
        rule: &MlRule,
        seed: u64,
        symbols: u64,
    ) -> BerTally {
        self.pool.install(|| {
            Self::chunks(symbols)
                .into_par_iter()
                .map(|r| mc::ber_tally(channel, cfg, edge, rule, seed, r))
                .reduce(BerTally::default, |mut a, b| {
                    a.merge(&b);
                    a
                })
        })
    }

    /// Error rate of the rule built from the analytic count models.
    pub fn ber_mc(
        &self,
        channel: &ChannelParams,
        cfg: &ReceiverConfig,
        edge: EdgeMode,
        seed: u64,
        symbols: u64,
    ) -> photocount_core::Result<(MlRule, BerTally)> {
        let rule = analytic_rule(channel, cfg)?;
        let tally = self.ber_tally(channel, cfg, edge, &rule, seed, symbols);
        Ok((rule, tally))
    }

    /// Rule built from binomials matched to simulated count moments of each
    /// symbol (`trials` symbols each).
    pub fn fitted_rule(
        &self,
        channel: &ChannelParams,
        cfg: &ReceiverConfig,
        edge: EdgeMode,
        seed: u64,
        trials: u64,
    ) -> photocount_core::Result<MlRule> {
        let fit = |lambda: f64, offset: u64| {
            let e = self.estimate_moments(lambda, cfg, edge, seed ^ offset, trials);
            BinomialApprox::from_moments(e.mean, e.variance)
        };
        let b0 = fit(channel.lambda0, FIT_SEED_OFFSET[0])?;
        let b1 = fit(channel.lambda1, FIT_SEED_OFFSET[1])?;
        MlRule::from_binomials(b0, b1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_range() {
        let c = Engine::chunks(2 * CHUNK + 5);
        assert_eq!(c.len(), 3);
        assert_eq!(c[0], 0..CHUNK);
        assert_eq!(c[2], 2 * CHUNK..2 * CHUNK + 5);
        assert!(Engine::chunks(0).is_empty());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = ReceiverConfig::new(0.01, 0.02, 0.3, 0.2, 0.02).unwrap();
        let one = Engine::new(1).unwrap();
        let four = Engine::new(4).unwrap();
        let trials = 3 * CHUNK + 17;
        assert_eq!(
            one.histogram(10.0, &cfg, EdgeMode::Stationary, 3, trials),
            four.histogram(10.0, &cfg, EdgeMode::Stationary, 3, trials)
        );
        let channel = ChannelParams::new(1.0, 20.0).unwrap();
        let a = one.ber_mc(&channel, &cfg, EdgeMode::Stationary, 3, trials).unwrap().1;
        let b = four.ber_mc(&channel, &cfg, EdgeMode::Stationary, 3, trials).unwrap().1;
        assert_eq!(a, b);
    }
}
