//! Maximum-likelihood on-off keying detection from pulse counts, with the
//! count likelihoods modelled as binomials.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::moments::{binomial_approx, full_with, BinomialApprox};
use crate::params::{derive_params, ChannelParams, ReceiverConfig};

/// Relative tolerance under which two trial counts are treated as equal.
const SAME_N_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Zero,
    One,
}

impl Symbol {
    pub fn bit(self) -> u8 {
        match self {
            Symbol::Zero => 0,
            Symbol::One => 1,
        }
    }
}

/// Threshold rule: decide 1 iff `n_s > threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlRule {
    pub threshold: usize,
    /// Count model under symbol 0.
    pub approx0: BinomialApprox,
    /// Count model under symbol 1.
    pub approx1: BinomialApprox,
}

impl MlRule {
    /// Rule with an explicitly chosen threshold.
    pub fn with_threshold(threshold: usize, approx0: BinomialApprox, approx1: BinomialApprox) -> Self {
        Self { threshold, approx0, approx1 }
    }

    /// Likelihood-ratio threshold between two binomial count models.
    ///
    /// With equal `N` the log-likelihood ratio is linear in `n` and the
    /// threshold is `floor(N a / (a + b))`, `a = ln((1-P0)/(1-P1))`,
    /// `b = ln(P1/P0)`. Otherwise the ratio is scanned over the joint support and
    /// the threshold is one below the first count favouring symbol 1.
    pub fn from_binomials(approx0: BinomialApprox, approx1: BinomialApprox) -> Result<Self> {
        if approx1.mean() <= approx0.mean() {
            return Err(Error::NotSeparable("symbol-1 mean count does not exceed symbol-0 mean count"));
        }
        let (n0, n1) = (approx0.n_trials, approx1.n_trials);
        let threshold = if (n0 - n1).abs() <= SAME_N_TOL * n0.max(n1) {
            equal_n_threshold(n0, approx0.prob, approx1.prob)?
        } else {
            scanned_threshold(&approx0, &approx1)
        };
        Ok(Self { threshold, approx0, approx1 })
    }

    /// Log-likelihood ratio `ln p1(n) - ln p0(n)`.
    pub fn log_likelihood_ratio(&self, n: usize) -> f64 {
        self.approx1.ln_pmf(n) - self.approx0.ln_pmf(n)
    }
}

fn equal_n_threshold(n_trials: f64, p0: f64, p1: f64) -> Result<usize> {
    if p1 <= p0 {
        return Err(Error::NotSeparable("symbol-1 success probability does not exceed symbol-0"));
    }
    let a = ((1.0 - p0) / (1.0 - p1)).ln();
    let b = (p1 / p0).ln();
    Ok((n_trials * a / (a + b)).floor() as usize)
}

fn scanned_threshold(approx0: &BinomialApprox, approx1: &BinomialApprox) -> usize {
    let top = approx0.support_max().max(approx1.support_max());
    (0..=top)
        .find(|&n| approx1.ln_pmf(n) > approx0.ln_pmf(n))
        .map_or(top, |n| n.saturating_sub(1))
}

/// Threshold for `tau = T`, where both count models have `N = 1/(3T)` and
/// `P_i = 3T N^_i`: `floor(N a/(a + b))` with `a = ln((1 - 3T N^0)/(1 - 3T N^1))`
/// and `b = ln(N^1/N^0)`. Returns 0 when `N^0 = 0` (any count means symbol 1).
pub fn ml_threshold(nhat1: f64, nhat0: f64, t: f64) -> Result<usize> {
    if !(nhat1 > nhat0) {
        return Err(Error::NotSeparable("N^1 must exceed N^0"));
    }
    if !(nhat0 >= 0.0) {
        return Err(Error::InvalidParameter { name: "nhat0", reason: "mean count must be >= 0" });
    }
    if !(3.0 * t * nhat1 < 1.0) {
        return Err(Error::Breakdown { flag: "binomial_p", detail: "3 T N^1 must be below 1" });
    }
    if nhat0 == 0.0 {
        return Ok(0);
    }
    let n_trials = 1.0 / (3.0 * t);
    let threshold = equal_n_threshold(n_trials, 3.0 * t * nhat0, 3.0 * t * nhat1)?;
    debug_assert!((threshold as f64) < n_trials);
    Ok(threshold)
}

/// Decision for an observed count. Ties (`n_s == threshold`) decide 0.
pub fn classify(n_s: usize, rule: &MlRule) -> Symbol {
    if n_s > rule.threshold {
        Symbol::One
    } else {
        Symbol::Zero
    }
}

/// Error probabilities of a rule under its own count models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorProbability {
    /// `(p10 + p01) / 2`.
    pub pe: f64,
    /// Probability of deciding 0 when 1 was sent.
    pub p10: f64,
    /// Probability of deciding 1 when 0 was sent.
    pub p01: f64,
    /// Largest deviation from one of the raw binomial sums over `0..=floor(N)`
    /// before renormalization.
    pub normalization_deviation: f64,
}

/// Average error probability with equiprobable symbols, summing each model over
/// its integer support `0..=floor(N)`.
pub fn error_prob_analytic(rule: &MlRule) -> ErrorProbability {
    let (pmf0, dev0) = rule.approx0.pmf_table();
    let (pmf1, dev1) = rule.approx1.pmf_table();
    let th = rule.threshold;
    let p10: f64 = pmf1.iter().take(th + 1).sum();
    let p01: f64 = pmf0.iter().skip(th + 1).sum();
    ErrorProbability { pe: 0.5 * (p10 + p01), p10, p01, normalization_deviation: dev0.max(dev1) }
}

/// Count models for both symbols from the shot-and-thermal moment formulas.
pub fn analytic_models(channel: &ChannelParams, cfg: &ReceiverConfig) -> Result<(BinomialApprox, BinomialApprox)> {
    let d = derive_params(cfg)?;
    let b0 = binomial_approx(&full_with(channel.lambda0, cfg, &d), &d)?;
    let b1 = binomial_approx(&full_with(channel.lambda1, cfg, &d), &d)?;
    Ok((b0, b1))
}

/// Detection rule built from the analytic count models.
pub fn analytic_rule(channel: &ChannelParams, cfg: &ReceiverConfig) -> Result<MlRule> {
    let (b0, b1) = analytic_models(channel, cfg)?;
    MlRule::from_binomials(b0, b1)
}

/// Signs of the log-likelihood ratio over `0..=top`, for inspection.
pub fn llr_signs(rule: &MlRule, top: usize) -> Vec<bool> {
    (0..=top).map(|n| rule.log_likelihood_ratio(n) > 0.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::moments_full;

    fn op_point() -> ReceiverConfig {
        ReceiverConfig::new(0.01, 0.01, 0.3, 0.2, 0.02).unwrap()
    }

    #[test]
    fn golden_threshold_at_operating_point() {
        let cfg = op_point();
        let n0 = moments_full(1.0, &cfg).unwrap().mean;
        let n1 = moments_full(20.0, &cfg).unwrap().mean;
        assert!((n0 - 0.984_890_312_400_006_5).abs() < 1e-12);
        assert!((n1 - 14.838_642_276_860_703).abs() < 1e-11);
        assert_eq!(ml_threshold(n1, n0, 0.01).unwrap(), 5);
    }

    #[test]
    fn threshold_matches_llr_sign_change() {
        let cfg = op_point();
        for (l0, l1) in [(1.0, 20.0), (0.5, 5.0), (2.0, 8.0), (0.1, 3.0)] {
            let n0 = moments_full(l0, &cfg).unwrap().mean;
            let n1 = moments_full(l1, &cfg).unwrap().mean;
            let th = ml_threshold(n1, n0, 0.01).unwrap();
            let rule = MlRule::from_binomials(
                BinomialApprox::new(1.0 / 0.03, 0.03 * n0).unwrap(),
                BinomialApprox::new(1.0 / 0.03, 0.03 * n1).unwrap(),
            )
            .unwrap();
            assert_eq!(rule.threshold, th);
            for (n, positive) in llr_signs(&rule, 33).into_iter().enumerate() {
                assert_eq!(positive, n > th, "lambda0 {l0}, lambda1 {l1}, n {n}");
                assert_eq!(classify(n, &rule) == Symbol::One, positive);
            }
        }
    }

    #[test]
    fn threshold_monotone_in_separation() {
        let t = 0.01;
        let n0 = 2.0;
        let mut prev = 0;
        for i in 1..=200 {
            let n1 = n0 * (1.0 + i as f64 * 0.05);
            let th = ml_threshold(n1, n0, t).unwrap();
            assert!(th >= prev);
            assert!((th as f64) < 1.0 / (3.0 * t));
            prev = th;
        }
    }

    #[test]
    fn threshold_rejects_unseparable() {
        assert!(matches!(ml_threshold(2.0, 2.0, 0.01), Err(Error::NotSeparable(_))));
        assert!(ml_threshold(40.0, 1.0, 0.01).is_err());
        assert_eq!(ml_threshold(5.0, 0.0, 0.01).unwrap(), 0);
    }

    #[test]
    fn classify_boundary() {
        let b0 = BinomialApprox::new(30.0, 0.05).unwrap();
        let b1 = BinomialApprox::new(30.0, 0.3).unwrap();
        let rule = MlRule::from_binomials(b0, b1).unwrap();
        assert_eq!(classify(0, &rule), Symbol::Zero);
        assert_eq!(classify(rule.threshold, &rule), Symbol::Zero);
        assert_eq!(classify(rule.threshold + 1, &rule), Symbol::One);
    }

    #[test]
    fn unequal_n_rule_follows_likelihoods() {
        let b0 = BinomialApprox::new(25.3, 0.04).unwrap();
        let b1 = BinomialApprox::new(21.7, 0.4).unwrap();
        let rule = MlRule::from_binomials(b0, b1).unwrap();
        for n in 0..=rule.threshold {
            assert!(b1.ln_pmf(n) <= b0.ln_pmf(n));
        }
        assert!(b1.ln_pmf(rule.threshold + 1) > b0.ln_pmf(rule.threshold + 1));
    }

    #[test]
    fn indistinguishable_models_give_half() {
        let b = BinomialApprox::new(33.3, 0.1).unwrap();
        for th in [0, 3, 10, 40] {
            let pe = error_prob_analytic(&MlRule::with_threshold(th, b, b)).pe;
            assert!((pe - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn separated_models_have_small_error() {
        let cfg = op_point();
        let rule = analytic_rule(&ChannelParams::new(0.5, 25.0).unwrap(), &cfg).unwrap();
        let e = error_prob_analytic(&rule);
        assert!(e.pe < 1e-3);
        assert!(e.normalization_deviation < 1e-6);
    }
}
