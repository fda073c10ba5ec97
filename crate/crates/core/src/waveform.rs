//! Event-level simulation of the receiver chain for one symbol: Poisson photon
//! arrivals, rectangular held pulses with Gaussian amplitudes, Gaussian sample
//! noise, sampling every `T`, thresholding and rising-edge counting.
//!
//! Samples are taken at `t_k = k/N`, `k = 1..=N` with `N = 1/T`. The sample at
//! `t_0 = 0` only supplies the state preceding the symbol. Under
//! [`EdgeMode::Stationary`] (the default) that state comes from pulses that
//! started during `(-tau, 0]`, drawn at the same rate, so the symbol looks like
//! a window cut from a long stationary stream. Under [`EdgeMode::StartLow`] the
//! receiver starts low and nothing before `t = 0` exists. Pulses extending past
//! `t = 1` are truncated.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::params::ReceiverConfig;

/// Per-trial random stream: ChaCha8 keyed by the master seed, with the trial
/// index as stream id. Any trial can be replayed without the others.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// How the receiver state at the start of a symbol is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeMode {
    /// Pulses from arrivals in `(-tau, 0]` may cover the start of the symbol.
    #[default]
    Stationary,
    /// The receiver output is low at `t = 0`.
    StartLow,
}

/// Photon arrival epochs for one symbol.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArrivalSet {
    /// Sorted epochs in `[0, 1)`.
    pub times: Vec<f64>,
    /// Sorted epochs in `(-tau, 0]` whose pulses reach into the symbol.
    pub lead_in: Vec<f64>,
}

impl ArrivalSet {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn pulses(&self) -> impl Iterator<Item = f64> + '_ {
        self.lead_in.iter().chain(self.times.iter()).copied()
    }
}

/// Analog and quantized samples for one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    /// `F(t_k)` for `k = 1..=N`.
    pub values: Vec<f64>,
    /// `1` where `values[k] >= xi`.
    pub bits: Vec<u8>,
    /// Quantized state at `t = 0`.
    pub initial_bit: u8,
}

/// Outcome of one simulated symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialResult {
    /// Recorded pulse count.
    pub n_s: usize,
    /// Photons that arrived during the symbol.
    pub arrivals: usize,
}

fn poisson_count<R: RngCore + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive Poisson mean");
    let n: f64 = dist.sample(rng);
    n as usize
}

/// Poisson(`lambda`) arrivals, uniform on `[0, 1)`, sorted.
pub fn gen_arrivals<R: RngCore + ?Sized>(lambda: f64, rng: &mut R) -> ArrivalSet {
    let n = poisson_count(lambda, rng);
    let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    times.sort_by(f64::total_cmp);
    ArrivalSet { times, lead_in: Vec::new() }
}

/// Arrivals during `(-tau, 0]` at rate `lambda`, sorted.
pub fn gen_lead_in<R: RngCore + ?Sized>(lambda: f64, tau: f64, rng: &mut R) -> Vec<f64> {
    let n = poisson_count(lambda * tau, rng);
    let mut times: Vec<f64> = (0..n).map(|_| -tau * rng.random::<f64>()).collect();
    times.sort_by(f64::total_cmp);
    times
}

/// Arrivals for one symbol under the given edge convention: lead-in first,
/// then the symbol itself.
pub fn gen_symbol_arrivals<R: RngCore + ?Sized>(
    lambda: f64,
    tau: f64,
    edge: EdgeMode,
    rng: &mut R,
) -> ArrivalSet {
    let lead_in = match edge {
        EdgeMode::Stationary => gen_lead_in(lambda, tau, rng),
        EdgeMode::StartLow => Vec::new(),
    };
    let mut set = gen_arrivals(lambda, rng);
    set.lead_in = lead_in;
    set
}

/// Sample indices `k` in `0..=n` with `t <= k/n < t + tau`, as a half-open range.
fn covered_range(t: f64, tau: f64, n: usize) -> (usize, usize) {
    (first_sample_at_or_after(t, n), first_sample_at_or_after(t + tau, n))
}

fn first_sample_at_or_after(t: f64, n: usize) -> usize {
    let nf = n as f64;
    let at = |k: usize| k as f64 / nf;
    if t <= 0.0 {
        return 0;
    }
    let mut k = ((t * nf).ceil() as usize).min(n + 1);
    while k > 0 && at(k - 1) >= t {
        k -= 1;
    }
    while k <= n && at(k) < t {
        k += 1;
    }
    k
}

fn draw_amplitude<R: RngCore + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    if sigma > 0.0 {
        let z: f64 = StandardNormal.sample(rng);
        1.0 + sigma * z
    } else {
        1.0
    }
}

/// Builds the sampled waveform for a set of arrivals: each pulse adds its
/// amplitude (drawn once per pulse, lead-in first) to every sample it covers,
/// then independent noise of deviation `sigma0` is added to every sample.
pub fn synth_samples<R: RngCore + ?Sized>(
    arrivals: &ArrivalSet,
    cfg: &ReceiverConfig,
    edge: EdgeMode,
    rng: &mut R,
) -> SampleStream {
    let n = cfg.samples_per_symbol();
    let tau = cfg.holding_time;
    let mut values = vec![0.0; n + 1];
    for t in arrivals.pulses() {
        let a = draw_amplitude(cfg.shot_sigma, rng);
        let (s, e) = covered_range(t, tau, n);
        for v in &mut values[s..e] {
            *v += a;
        }
    }
    let first_noisy = match edge {
        EdgeMode::Stationary => 0,
        EdgeMode::StartLow => 1,
    };
    if cfg.thermal_sigma > 0.0 {
        for v in &mut values[first_noisy..] {
            let z: f64 = StandardNormal.sample(rng);
            *v += cfg.thermal_sigma * z;
        }
    }
    let xi = cfg.threshold;
    let initial_bit = match edge {
        EdgeMode::Stationary => u8::from(values[0] >= xi),
        EdgeMode::StartLow => 0,
    };
    let values = values.split_off(1);
    let bits = values.iter().map(|&v| u8::from(v >= xi)).collect();
    SampleStream { values, bits, initial_bit }
}

/// Number of `0 -> 1` transitions, with an implicit `0` before the first bit.
pub fn count_rising_edges(bits: &[u8]) -> usize {
    count_rising_edges_from(0, bits)
}

/// Number of `0 -> 1` transitions, starting from state `initial`.
pub fn count_rising_edges_from(initial: u8, bits: &[u8]) -> usize {
    let mut prev = initial != 0;
    let mut edges = 0;
    for &b in bits {
        let cur = b != 0;
        if cur && !prev {
            edges += 1;
        }
        prev = cur;
    }
    edges
}

/// Reusable single-symbol simulator.
///
/// Without sample noise (`sigma0 = 0`) only samples covered by some pulse are
/// visited; the result is identical to building the full [`SampleStream`].
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: ReceiverConfig,
    edge: EdgeMode,
    samples: usize,
    values: Vec<f64>,
    ranges: Vec<(usize, usize)>,
}

impl Simulator {
    pub fn new(cfg: ReceiverConfig, edge: EdgeMode) -> Self {
        let samples = cfg.samples_per_symbol();
        Self { cfg, edge, samples, values: vec![0.0; samples + 1], ranges: Vec::new() }
    }

    pub fn config(&self) -> &ReceiverConfig {
        &self.cfg
    }

    pub fn edge_mode(&self) -> EdgeMode {
        self.edge
    }

    /// Simulates one symbol with photon rate `lambda`.
    pub fn simulate<R: RngCore + ?Sized>(&mut self, lambda: f64, rng: &mut R) -> TrialResult {
        let arrivals = gen_symbol_arrivals(lambda, self.cfg.holding_time, self.edge, rng);
        let n_s = if self.cfg.thermal_sigma > 0.0 {
            let s = synth_samples(&arrivals, &self.cfg, self.edge, rng);
            count_rising_edges_from(s.initial_bit, &s.bits)
        } else {
            self.count_sparse(&arrivals, rng)
        };
        TrialResult { n_s, arrivals: arrivals.len() }
    }

    fn count_sparse<R: RngCore + ?Sized>(&mut self, arrivals: &ArrivalSet, rng: &mut R) -> usize {
        let tau = self.cfg.holding_time;
        let xi = self.cfg.threshold;
        let n = self.samples;
        self.ranges.clear();
        // Pulses arrive in time order, so range starts are nondecreasing;
        // overlapping or touching ranges are merged into clusters.
        for t in arrivals.pulses() {
            let a = draw_amplitude(self.cfg.shot_sigma, rng);
            let (s, e) = covered_range(t, tau, n);
            if s >= e {
                continue;
            }
            for v in &mut self.values[s..e] {
                *v += a;
            }
            match self.ranges.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => self.ranges.push((s, e)),
            }
        }
        let mut edges = 0;
        for &(s, e) in &self.ranges {
            let mut prev = if s == 0 {
                self.edge == EdgeMode::Stationary && self.values[0] >= xi
            } else {
                false
            };
            for k in s.max(1)..e {
                let cur = self.values[k] >= xi;
                if cur && !prev {
                    edges += 1;
                }
                prev = cur;
            }
            self.values[s..e].fill(0.0);
        }
        edges
    }
}

/// One symbol with the default edge convention.
pub fn simulate_symbol<R: RngCore + ?Sized>(lambda: f64, cfg: &ReceiverConfig, rng: &mut R) -> TrialResult {
    Simulator::new(*cfg, EdgeMode::default()).simulate(lambda, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(t: f64, tau: f64, xi: f64, sigma: f64, sigma0: f64) -> ReceiverConfig {
        ReceiverConfig::new(t, tau, xi, sigma, sigma0).unwrap()
    }

    #[test]
    fn edge_counter_examples() {
        assert_eq!(count_rising_edges(&[0, 0, 0, 0, 0, 0]), 0);
        assert_eq!(count_rising_edges(&[0, 1, 1, 0, 1, 1]), 2);
        assert_eq!(count_rising_edges(&[1, 0, 1]), 2);
        assert_eq!(count_rising_edges_from(1, &[1, 0, 1]), 1);
        assert_eq!(count_rising_edges(&[]), 0);
    }

    #[test]
    fn single_pulse_geometry() {
        let c = cfg(0.01, 0.02, 0.3, 0.0, 0.0);
        let arrivals = ArrivalSet { times: vec![0.005], lead_in: vec![] };
        let mut rng = trial_rng(1, 0);
        let s = synth_samples(&arrivals, &c, EdgeMode::StartLow, &mut rng);
        assert_eq!(s.bits.len(), 100);
        let high: Vec<usize> = s.bits.iter().enumerate().filter(|(_, &b)| b == 1).map(|(k, _)| k + 1).collect();
        assert_eq!(high, vec![1, 2]);
        assert_eq!(count_rising_edges_from(s.initial_bit, &s.bits), 1);
    }

    #[test]
    fn no_arrivals_no_counts() {
        let c = cfg(0.01, 0.02, 0.3, 0.2, 0.0);
        let mut sim = Simulator::new(c, EdgeMode::Stationary);
        for trial in 0..100 {
            let r = sim.simulate(0.0, &mut trial_rng(7, trial));
            assert_eq!(r, TrialResult { n_s: 0, arrivals: 0 });
        }
        let s = synth_samples(&ArrivalSet::default(), &c, EdgeMode::Stationary, &mut trial_rng(0, 0));
        assert!(s.bits.iter().all(|&b| b == 0));
    }

    #[test]
    fn lead_in_pulse_holds_initial_state() {
        let c = cfg(0.01, 0.02, 0.3, 0.0, 0.0);
        let arrivals = ArrivalSet { times: vec![], lead_in: vec![-0.005] };
        let s = synth_samples(&arrivals, &c, EdgeMode::Stationary, &mut trial_rng(0, 0));
        assert_eq!(s.initial_bit, 1);
        assert_eq!(s.bits[0], 1);
        assert_eq!(s.bits[1], 0);
        assert_eq!(count_rising_edges_from(s.initial_bit, &s.bits), 0);
    }

    #[test]
    fn coverage_is_half_open() {
        assert_eq!(covered_range(0.005, 0.02, 100), (1, 3));
        assert_eq!(covered_range(0.01, 0.01, 100), (1, 2));
        assert_eq!(covered_range(-0.015, 0.02, 100), (0, 1));
        assert_eq!(covered_range(0.995, 0.02, 100), (100, 101));
    }

    #[test]
    fn trial_streams_are_replayable() {
        let c = cfg(0.01, 0.02, 0.3, 0.2, 0.02);
        let mut a = Simulator::new(c, EdgeMode::Stationary);
        let mut b = Simulator::new(c, EdgeMode::Stationary);
        let first: Vec<_> = (0..50).map(|i| a.simulate(10.0, &mut trial_rng(9, i))).collect();
        let second: Vec<_> = (0..50).rev().map(|i| b.simulate(10.0, &mut trial_rng(9, i))).collect();
        let mut second = second;
        second.reverse();
        assert_eq!(first, second);
        assert_ne!(gen_arrivals(10.0, &mut trial_rng(9, 0)), gen_arrivals(10.0, &mut trial_rng(9, 1)));
    }
}
