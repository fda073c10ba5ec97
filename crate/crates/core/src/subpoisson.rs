//! Counting law of an ideal (infinitely fast) counter with a paralyzable dead
//! time: an arrival is counted only if no other arrival occurred during the
//! preceding `tau`.
//!
//! With `c = lambda * exp(-lambda*tau)` the probability of `n` counts is
//!
//! ```text
//! P(n) = sum_{m=0}^{M-n} (-1)^m / (n! m!) * [(1 - (n+m-1) tau) c]^(n+m),   M = floor(1/tau) + 1
//! ```
//!
//! The series alternates and its terms reach `exp(2c)` while the result is of
//! order one, so it is summed in fixed-point big-integer arithmetic whose
//! precision grows with `c`.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{Float, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};

/// Largest `lambda * tau` accepted by [`subpoisson_pmf`].
pub const MAX_RATE_DEAD_TIME: f64 = 0.5;

/// Largest `c = lambda * exp(-lambda*tau)` accepted by [`subpoisson_pmf`].
/// Cost grows roughly with `c^3`; beyond this the evaluation is too slow to be
/// useful.
pub const MAX_SERIES_SCALE: f64 = 400.0;

const NORMALIZATION_TOL: f64 = 1e-4;
const NEGATIVE_TOL: f64 = 1e-9;

/// Probability mass function of the dead-time limited count.
#[derive(Debug, Clone, PartialEq)]
pub struct SubPoissonDist {
    pub lambda: f64,
    pub tau: f64,
    /// Largest count with nonzero probability, `floor(1/tau) + 1`.
    pub max_count: usize,
    /// `pmf[n]` for `n = 0..=max_count`.
    pub pmf: Vec<f64>,
}

impl SubPoissonDist {
    pub fn total(&self) -> f64 {
        self.pmf.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.pmf.iter().enumerate().map(|(n, p)| (n as f64 - mean).powi(2) * p).sum()
    }

    /// Probability of `n` counts (0 beyond the support).
    pub fn prob(&self, n: usize) -> f64 {
        self.pmf.get(n).copied().unwrap_or(0.0)
    }
}

/// Exact counting distribution for rate `lambda` and dead time `tau`.
///
/// Requires `lambda * tau <= 0.5`. Fails with [`Error::Breakdown`] if the
/// evaluated series does not form a distribution.
pub fn subpoisson_pmf(lambda: f64, tau: f64) -> Result<SubPoissonDist> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", "rate must be finite and >= 0"));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(invalid("tau", "dead time must lie in (0, 1)"));
    }
    if lambda * tau > MAX_RATE_DEAD_TIME {
        return Err(Error::Breakdown {
            flag: "lambda_tau_gate",
            detail: "series evaluation requires lambda * tau <= 0.5",
        });
    }
    let max_count = (1.0 / tau + 1e-9).floor() as usize + 1;
    let mut pmf = vec![0.0; max_count + 1];
    if lambda == 0.0 {
        pmf[0] = 1.0;
        return Ok(SubPoissonDist { lambda, tau, max_count, pmf });
    }

    let c = lambda * (-lambda * tau).exp();
    if c > MAX_SERIES_SCALE {
        return Err(Error::Breakdown {
            flag: "series_scale",
            detail: "lambda * exp(-lambda * tau) exceeds the supported series range",
        });
    }
    // Terms reach about exp(2c); keep 160 bits below that.
    let frac_bits = (2.0 * c * core::f64::consts::LOG2_E).ceil() as usize + 160;
    let frac_bits = frac_bits.max(224);

    let one = BigUint::from(1u8) << frac_bits;
    let c_fx = to_fixed(c, frac_bits);
    let step = (&c_fx * to_fixed(tau, frac_bits)) >> frac_bits;

    let mut pos: Vec<BigUint> = vec![BigUint::zero(); max_count + 1];
    let mut neg: Vec<BigUint> = vec![BigUint::zero(); max_count + 1];
    let mut powers: Vec<BigUint> = Vec::with_capacity(max_count + 1);

    for k in 0..=max_count {
        // y_k = (1 - (k-1) tau) c
        let y = if k == 0 {
            &c_fx + &step
        } else {
            let used = &step * BigUint::from(k - 1);
            if used >= c_fx {
                BigUint::zero()
            } else {
                &c_fx - used
            }
        };
        // powers[j] = y^j / j!, stopping once it underflows the fixed point.
        powers.clear();
        powers.push(one.clone());
        for j in 0..k {
            let next = ((&powers[j] * &y) >> frac_bits) / BigUint::from(j + 1);
            if next.is_zero() {
                break;
            }
            powers.push(next);
        }
        let len = powers.len();
        let lo = (k + 1).saturating_sub(len);
        let hi = k.min(len - 1);
        for n in lo..=hi {
            let m = k - n;
            let term = (&powers[n] * &powers[m]) >> frac_bits;
            if m % 2 == 0 {
                pos[n] += term;
            } else {
                neg[n] += term;
            }
        }
    }

    for n in 0..=max_count {
        let diff = BigInt::from_biguint(Sign::Plus, core::mem::take(&mut pos[n]))
            - BigInt::from_biguint(Sign::Plus, core::mem::take(&mut neg[n]));
        let mut v = fixed_to_f64(&diff, frac_bits);
        if v < 0.0 {
            if v < -NEGATIVE_TOL {
                return Err(Error::Breakdown {
                    flag: "negative_probability",
                    detail: "series produced a negative probability",
                });
            }
            v = 0.0;
        }
        pmf[n] = v;
    }

    let total: f64 = pmf.iter().sum();
    if !total.is_finite() || (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Breakdown {
            flag: "normalization",
            detail: "series does not sum to one",
        });
    }
    Ok(SubPoissonDist { lambda, tau, max_count, pmf })
}

/// Closed-form mean `lambda e^{-lambda tau}` and variance
/// `mean - (1 - (1-tau)^2) mean^2` of the ideal counter.
pub fn subpoisson_moments(lambda: f64, tau: f64) -> (f64, f64) {
    let mean = lambda * (-lambda * tau).exp();
    let variance = mean - (1.0 - (1.0 - tau) * (1.0 - tau)) * mean * mean;
    (mean, variance)
}

/// Equivalent `(lambda', tau')` of the small-dead-time model that reproduces a
/// given mean and variance:
/// `mean = lambda' e^{-lambda' tau'}` and `variance = mean - 2 tau' mean^2`.
///
/// Rejects super-Poisson input (`variance > mean`) and moment pairs for which
/// no `lambda'` on the increasing branch exists (`e * mean * tau' > 1`).
pub fn invert_moments(mean: f64, variance: f64) -> Result<(f64, f64)> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(invalid("mean", "must be positive and finite"));
    }
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(invalid("variance", "must be finite and >= 0"));
    }
    if variance > mean {
        return Err(Error::Breakdown {
            flag: "super_poisson",
            detail: "variance exceeds mean; the dead-time model does not apply",
        });
    }
    let tau = (mean - variance) / (2.0 * mean * mean);
    if tau == 0.0 {
        return Ok((mean, 0.0));
    }
    if mean * tau * core::f64::consts::E > 1.0 {
        return Err(Error::Breakdown {
            flag: "no_equivalent_rate",
            detail: "mean exceeds the largest count reachable with the fitted dead time",
        });
    }
    let f = |l: f64| l * (-l * tau).exp() - mean;
    let mut lo = mean;
    let mut hi = mean * core::f64::consts::E;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok((0.5 * (lo + hi), tau))
}

fn to_fixed(x: f64, frac_bits: usize) -> BigUint {
    debug_assert!(x >= 0.0);
    let (mantissa, exponent, _) = x.integer_decode();
    let shift = exponent as i64 + frac_bits as i64;
    let m = BigUint::from(mantissa);
    if shift >= 0 {
        m << shift as usize
    } else {
        m >> (-shift) as usize
    }
}

fn fixed_to_f64(v: &BigInt, frac_bits: usize) -> f64 {
    let bits = v.bits() as usize;
    let drop = bits.saturating_sub(512);
    let head = if drop > 0 { v >> drop } else { v.clone() };
    let x = head.to_f64().unwrap_or(f64::NAN);
    libm::ldexp(x, drop as i32 - frac_bits as i32)
}
