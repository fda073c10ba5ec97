//! Count histograms and the statistics derived from them.
//!
//! Histograms hold integer counts, so merging partial histograms is exact and
//! independent of how trials were split between workers.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountHistogram {
    counts: Vec<u64>,
}

impl CountHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a histogram from `counts[n]` = number of trials with `n` counts.
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let mut h = Self { counts };
        h.trim();
        h
    }

    pub fn add(&mut self, n: usize) {
        if n >= self.counts.len() {
            self.counts.resize(n + 1, 0);
        }
        self.counts[n] += 1;
    }

    pub fn merge(&mut self, other: &CountHistogram) {
        if other.counts.len() > self.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn max_value(&self) -> Option<usize> {
        self.counts.iter().rposition(|&c| c > 0)
    }

    pub fn frequency(&self, n: usize) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.counts.get(n).copied().unwrap_or(0) as f64 / total as f64
    }

    pub fn mean(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let sum: u128 = self.counts.iter().enumerate().map(|(n, &c)| n as u128 * c as u128).sum();
        sum as f64 / total as f64
    }

    /// Unbiased sample variance, or `None` with fewer than two trials.
    pub fn variance(&self) -> Option<f64> {
        let total = self.total() as u128;
        if total < 2 {
            return None;
        }
        let (mut s1, mut s2) = (0u128, 0u128);
        for (n, &c) in self.counts.iter().enumerate() {
            let n = n as u128;
            s1 += n * c as u128;
            s2 += n * n * c as u128;
        }
        // total * s2 - s1^2 is exact in integers.
        let num = total * s2 - s1 * s1;
        Some(num as f64 / (total * (total - 1)) as f64)
    }

    /// Central moments `(m2, m3, m4)` about the sample mean (population form).
    pub fn central_moments(&self) -> (f64, f64, f64) {
        let total = self.total();
        if total == 0 {
            return (0.0, 0.0, 0.0);
        }
        let mean = self.mean();
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for (n, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let d = n as f64 - mean;
            let w = c as f64;
            m2 += w * d * d;
            m3 += w * d * d * d;
            m4 += w * d * d * d * d;
        }
        let t = total as f64;
        (m2 / t, m3 / t, m4 / t)
    }

    /// Total-variation distance `0.5 * sum |f(n) - pmf(n)|`.
    pub fn total_variation(&self, pmf: &[f64]) -> f64 {
        let len = self.counts.len().max(pmf.len());
        let mut sum = 0.0;
        for n in 0..len {
            let p = pmf.get(n).copied().unwrap_or(0.0);
            sum += (self.frequency(n) - p).abs();
        }
        0.5 * sum
    }

    fn trim(&mut self) {
        while self.counts.last() == Some(&0) {
            self.counts.pop();
        }
    }
}

/// Standard error of a proportion `k / n`.
pub fn proportion_std_error(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let p = successes as f64 / trials as f64;
    (p * (1.0 - p) / trials as f64).sqrt()
}
