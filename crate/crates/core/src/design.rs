//! Kullback-Leibler distances between binomial count models and the choice of
//! threshold `xi` and holding time `tau` that keeps both distances large.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::detector::{error_prob_analytic, MlRule};
use crate::error::{invalid, Error, Result};
use crate::moments::{binomial_approx, full_with, BinomialApprox};
use crate::params::{derive_params, ChannelParams, ReceiverConfig};

/// Ceiling on the loss of `D(P0||P1)` from fixing `tau = T` that is considered
/// negligible.
pub const KL_GAP_CEILING: f64 = 0.0102;

const SAME_N_TOL: f64 = 1e-9;
const GOLDEN_ITERATIONS: usize = 60;

fn check_probabilities(b0: &BinomialApprox, b1: &BinomialApprox) -> Result<()> {
    for p in [b0.prob, b1.prob] {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InfiniteDivergence("success probability is 0 or 1"));
        }
    }
    Ok(())
}

/// Terms of `D(Pa||Pb)` that are linear in the parameters:
/// `Na Pa ln(Pa/Pb) + Na (1-Pa) ln((1-Pa)/(1-Pb)) + (Na - Nb) ln(1-Pb)`.
fn linear_part(a: &BinomialApprox, b: &BinomialApprox) -> f64 {
    let (na, pa) = (a.n_trials, a.prob);
    let (nb, pb) = (b.n_trials, b.prob);
    let mut d = na * pa * (pa / pb).ln() + na * (1.0 - pa) * ((1.0 - pa) / (1.0 - pb)).ln();
    if na != nb {
        d += (na - nb) * (-pb).ln_1p();
    }
    d
}

/// `D(Pa||Pb)` and the probability mass of `Pa` beyond the support of `Pb`
/// that was left out of the expectation term.
fn directed_kl(a: &BinomialApprox, b: &BinomialApprox) -> (f64, f64) {
    let linear = linear_part(a, b);
    if a.n_trials == b.n_trials {
        return (linear, 0.0);
    }
    let (pmf, _) = a.pmf_table();
    let limit = if a.n_trials > b.n_trials { b.support_max() } else { a.support_max() };
    let mut expectation = 0.0;
    let mut excluded = 0.0;
    for (n, &w) in pmf.iter().enumerate() {
        if n > limit {
            excluded += w;
            continue;
        }
        let nf = n as f64;
        expectation += w * (crate::moments::ln_binomial(a.n_trials, nf) - crate::moments::ln_binomial(b.n_trials, nf));
    }
    (linear + expectation, excluded)
}

/// Both distances for models with the same `N`:
/// `D(P0||P1) = N [P0 ln(P0/P1) + (1-P0) ln((1-P0)/(1-P1))]` and its mirror.
pub fn kl_equal_n(b0: &BinomialApprox, b1: &BinomialApprox) -> Result<(f64, f64)> {
    check_probabilities(b0, b1)?;
    if (b0.n_trials - b1.n_trials).abs() >= SAME_N_TOL {
        return Err(invalid("n_trials", "models must share the same trial count"));
    }
    let b1_same = BinomialApprox { n_trials: b0.n_trials, prob: b1.prob };
    Ok((linear_part(b0, &b1_same), linear_part(&b1_same, b0)))
}

/// Distances between models with possibly different `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralKl {
    pub kl_01: f64,
    pub kl_10: f64,
    /// Mass of `P0` on counts above `floor(N1)`, omitted from `kl_01`.
    pub excluded_01: f64,
    /// Mass of `P1` on counts above `floor(N0)`, omitted from `kl_10`.
    pub excluded_10: f64,
}

impl GeneralKl {
    pub fn min(&self) -> f64 {
        self.kl_01.min(self.kl_10)
    }
}

/// Distances between binomials with real-valued, possibly different `N`.
///
/// Beyond the linear terms, `D(Pa||Pb)` contains `E_a[ln C(Na,n) - ln C(Nb,n)]`,
/// evaluated over the integer support of `Pa` with `ln Gamma` coefficients. When
/// `Na > Nb` the counts above `floor(Nb)` have no `Pb` coefficient; they are left
/// out and their mass is reported.
pub fn kl_general_n(b0: &BinomialApprox, b1: &BinomialApprox) -> Result<GeneralKl> {
    check_probabilities(b0, b1)?;
    let (kl_01, excluded_01) = directed_kl(b0, b1);
    let (kl_10, excluded_10) = directed_kl(b1, b0);
    Ok(GeneralKl { kl_01, kl_10, excluded_01, excluded_10 })
}

/// Small-probability approximation of `D(P0||P1)`:
/// `N1 ln((1-P0)/(1-P1)) + N0 P0 [ln(P0/P1) - ln((1-P0)/(1-P1))]`.
pub fn kl_approx_01(b0: &BinomialApprox, b1: &BinomialApprox) -> f64 {
    let r = ((1.0 - b0.prob) / (1.0 - b1.prob)).ln();
    b1.n_trials * r + b0.n_trials * b0.prob * ((b0.prob / b1.prob).ln() - r)
}

/// Mirror of [`kl_approx_01`] for `D(P1||P0)`.
pub fn kl_approx_10(b0: &BinomialApprox, b1: &BinomialApprox) -> f64 {
    let r = ((1.0 - b1.prob) / (1.0 - b0.prob)).ln();
    b0.n_trials * r + b1.n_trials * b1.prob * ((b1.prob / b0.prob).ln() - r)
}

/// Boolean outcomes of the design conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Conditions {
    /// `ln(N^1/N^0) > (1 + tau'/tau'_0)/(1 - 2 tau' N^1)`: then `D(P0||P1)` is
    /// the smaller distance.
    pub lemma1_asymmetry: bool,
    /// `p < 1/2 - ln g/(2(g-1)) - lambda1' tau` with `g = N^1/N^0`: `tau = T` is
    /// optimal for short holding times.
    pub lemma2_tau: bool,
    /// `p` lies below all three bounds of [`ConditionMargins::p_limits`].
    pub p_bound: bool,
    /// The bound on `D01(tau) - D01(T)` is below [`KL_GAP_CEILING`].
    pub kl_gap_bound: bool,
    pub margins: ConditionMargins,
}

impl Conditions {
    pub fn all(&self) -> bool {
        self.lemma1_asymmetry && self.lemma2_tau && self.p_bound && self.kl_gap_bound
    }
}

/// Numeric sides of each condition.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConditionMargins {
    pub nhat0: f64,
    pub nhat1: f64,
    pub lemma1_lhs: f64,
    pub lemma1_rhs: f64,
    /// Right side of the `tau = T` condition, `1/2 - ln g/(2(g-1)) - lambda1' tau`.
    pub lemma2_rhs: f64,
    /// The same with `g tau` in place of `lambda1' tau`, a stricter variant that
    /// fails whenever the background is weak.
    pub lemma2_rhs_gamma_form: f64,
    pub p: f64,
    /// `[1 - e^{-(l1' T)^3}, (1 - l0 tau')/(alpha + 1/2), 1 - 2(alpha-1)/(2 alpha+1) e^{l0'(tau+T)}]`.
    pub p_limits: [f64; 3],
    /// Largest bound on `D01(tau) - D01(T)` over `tau = T, 2T, ..., alpha T`.
    pub kl_gap_bound: f64,
}

fn x_ln_inv_x(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.ln()
    } else {
        0.0
    }
}

/// Evaluates the design conditions at `cfg`. The `D01` gap bound is maximized
/// over holding times `T, 2T, ...` up to `cfg`'s holding time.
pub fn check_conditions(channel: &ChannelParams, cfg: &ReceiverConfig) -> Result<Conditions> {
    let d = derive_params(cfg)?;
    let t = cfg.sampling_period;
    let tau = cfg.holding_time;
    let m0 = full_with(channel.lambda0, cfg, &d);
    let m1 = full_with(channel.lambda1, cfg, &d);
    let (nhat0, nhat1) = (m0.mean, m1.mean);
    let tau_equiv = d.tau_equiv;
    let tau_equiv0 = 1.5 * t;
    let rate0 = (1.0 - d.q) * channel.lambda0;
    let rate1 = (1.0 - d.q) * channel.lambda1;

    let lemma1_lhs = if nhat0 > 0.0 { (nhat1 / nhat0).ln() } else { f64::INFINITY };
    let lemma1_rhs = (1.0 + tau_equiv / tau_equiv0) / (1.0 - 2.0 * tau_equiv * nhat1);
    let lemma1_ok = 1.0 - 2.0 * tau_equiv * nhat1 > 0.0 && lemma1_lhs > lemma1_rhs;

    let gamma = if nhat0 > 0.0 { nhat1 / nhat0 } else { f64::INFINITY };
    let log_term = if gamma.is_infinite() {
        0.0
    } else if (gamma - 1.0).abs() < 1e-12 {
        0.5
    } else {
        gamma.ln() / (2.0 * (gamma - 1.0))
    };
    let lemma2_rhs = 0.5 - log_term - rate1 * tau;
    let lemma2_rhs_gamma_form = 0.5 - log_term - gamma * tau;

    let alpha = d.alpha as f64;
    let p_limits = [
        1.0 - (-(rate1 * t).powi(3)).exp(),
        (1.0 - channel.lambda0 * tau_equiv) / (alpha + 0.5),
        1.0 - 2.0 * (alpha - 1.0) / (2.0 * alpha + 1.0) * (rate0 * (tau + t)).exp(),
    ];
    let p_ok = p_limits.iter().all(|&limit| d.p <= limit);

    let mut gap = f64::NEG_INFINITY;
    for k in 1..=d.alpha.max(1) {
        let cfg_k = cfg.with_holding_time(k as f64 * t);
        let dk = derive_params(&cfg_k)?;
        let mk0 = full_with(channel.lambda0, &cfg_k, &dk);
        let mk1 = full_with(channel.lambda1, &cfg_k, &dk);
        let (p0, p1) = match (binomial_approx(&mk0, &dk), binomial_approx(&mk1, &dk)) {
            (Ok(b0), Ok(b1)) => (b0.prob, b1.prob),
            _ => (2.0 * dk.tau_equiv * mk0.mean, 2.0 * dk.tau_equiv * mk1.mean),
        };
        let tau_k = cfg_k.holding_time;
        let ak = dk.alpha as f64;
        let inner = p0
            + tau_k * x_ln_inv_x(rate0)
            + rate0 * tau_k * (((2.0 * ak + 3.0) * rate1 / 3.0).ln() + (-p1).ln_1p());
        gap = gap.max(inner * mk0.mean);
    }

    Ok(Conditions {
        lemma1_asymmetry: lemma1_ok,
        lemma2_tau: d.p < lemma2_rhs,
        p_bound: p_ok,
        kl_gap_bound: gap <= KL_GAP_CEILING,
        margins: ConditionMargins {
            nhat0,
            nhat1,
            lemma1_lhs,
            lemma1_rhs,
            lemma2_rhs,
            lemma2_rhs_gamma_form,
            p: d.p,
            p_limits,
            kl_gap_bound: gap,
        },
    })
}

/// Which search produced a [`DesignResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignPath {
    /// `tau = T`, `xi` maximizing the approximate `D(P0||P1)`.
    Fast,
    /// `(xi, tau)` maximizing `min(D(P0||P1), D(P1||P0))` over the grid.
    Full,
}

/// Which searches [`select_params`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DesignMode {
    /// Fast search; fall back to the full search unless all conditions hold.
    #[default]
    Auto,
    Fast,
    Full,
    /// Run both and select as in `Auto`.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignResult {
    pub xi_star: f64,
    pub tau_star: f64,
    pub kl_01: f64,
    pub kl_10: f64,
    /// Value of the objective the search maximized.
    pub objective: f64,
    pub conditions: Conditions,
    /// Analytic error probability of the ML rule at the chosen point.
    pub predicted_ber: Option<f64>,
    pub path: DesignPath,
    /// False when the two symbols produce identical count models.
    pub separable: bool,
}

/// A grid point that could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedPoint {
    pub xi: f64,
    pub tau: f64,
    pub reason: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub selected: DesignResult,
    pub fast: Option<DesignResult>,
    pub full: Option<DesignResult>,
    pub skipped: Vec<SkippedPoint>,
}

/// 64 thresholds strictly inside `(max(6 sigma0, 0.05), 1 + 3 sigma)`.
pub fn default_xi_grid(cfg: &ReceiverConfig) -> Vec<f64> {
    let lo = (6.0 * cfg.thermal_sigma).max(0.05);
    let hi = 1.0 + 3.0 * cfg.shot_sigma;
    (0..64).map(|i| lo + (hi - lo) * (i + 1) as f64 / 65.0).collect()
}

/// Holding times `T, 2T, ..., 10T` (those below one symbol).
pub fn default_tau_grid(t: f64) -> Vec<f64> {
    (1..=10).map(|k| k as f64 * t).filter(|&tau| tau < 1.0).collect()
}

fn models_at(channel: &ChannelParams, cfg: &ReceiverConfig) -> Result<(BinomialApprox, BinomialApprox)> {
    let d = derive_params(cfg)?;
    let b0 = binomial_approx(&full_with(channel.lambda0, cfg, &d), &d)?;
    let b1 = binomial_approx(&full_with(channel.lambda1, cfg, &d), &d)?;
    Ok((b0, b1))
}

fn predicted_ber(b0: BinomialApprox, b1: BinomialApprox) -> Option<f64> {
    MlRule::from_binomials(b0, b1).ok().map(|rule| error_prob_analytic(&rule).pe)
}

/// Conditions relevant to fixing `tau = T` at threshold `xi`: the asymmetry and
/// `tau = T` lemmas at `tau = T`, the `p` limits and `D01` gap bound up to the
/// longest holding time considered.
fn fast_path_conditions(channel: &ChannelParams, template: &ReceiverConfig, xi: f64, tau_max: f64) -> Result<Conditions> {
    let t = template.sampling_period;
    let at_t = check_conditions(channel, &template.with_threshold(xi).with_holding_time(t))?;
    let at_max = check_conditions(channel, &template.with_threshold(xi).with_holding_time(tau_max))?;
    Ok(Conditions {
        lemma1_asymmetry: at_t.lemma1_asymmetry,
        lemma2_tau: at_t.lemma2_tau,
        p_bound: at_max.p_bound,
        kl_gap_bound: at_max.kl_gap_bound,
        margins: ConditionMargins {
            p_limits: at_max.margins.p_limits,
            kl_gap_bound: at_max.margins.kl_gap_bound,
            ..at_t.margins
        },
    })
}

fn golden_max<F: Fn(f64) -> Option<f64>>(f: F, mut a: f64, mut b: f64) -> Option<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..GOLDEN_ITERATIONS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Some(if fc >= fd { (c, fc) } else { (d, fd) })
}

fn fast_search(
    channel: &ChannelParams,
    template: &ReceiverConfig,
    xi_grid: &[f64],
    tau_max: f64,
    skipped: &mut Vec<SkippedPoint>,
) -> Result<DesignResult> {
    let t = template.sampling_period;
    let objective = |xi: f64| -> Result<f64> {
        let (b0, b1) = models_at(channel, &template.with_threshold(xi).with_holding_time(t))?;
        Ok(kl_approx_01(&b0, &b1))
    };
    let mut best: Option<(usize, f64)> = None;
    for (i, &xi) in xi_grid.iter().enumerate() {
        match objective(xi) {
            Ok(v) if v.is_finite() => {
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((i, v));
                }
            }
            Ok(_) => skipped.push(SkippedPoint {
                xi,
                tau: t,
                reason: Error::InfiniteDivergence("objective is not finite"),
            }),
            Err(reason) => skipped.push(SkippedPoint { xi, tau: t, reason }),
        }
    }
    let (i, mut value) = best.ok_or(Error::Breakdown {
        flag: "design_grid",
        detail: "no threshold on the grid gives a valid binomial model",
    })?;
    let mut xi_star = xi_grid[i];
    if xi_grid.len() >= 3 {
        let lo = xi_grid[i.saturating_sub(1)];
        let hi = xi_grid[(i + 1).min(xi_grid.len() - 1)];
        if let Some((x, v)) = golden_max(|x| objective(x).ok().filter(|v| v.is_finite()), lo, hi) {
            if v > value {
                xi_star = x;
                value = v;
            }
        }
    }
    let cfg = template.with_threshold(xi_star).with_holding_time(t);
    let (b0, b1) = models_at(channel, &cfg)?;
    let kl = kl_general_n(&b0, &b1)?;
    Ok(DesignResult {
        xi_star,
        tau_star: t,
        kl_01: kl.kl_01,
        kl_10: kl.kl_10,
        objective: value,
        conditions: fast_path_conditions(channel, template, xi_star, tau_max)?,
        predicted_ber: predicted_ber(b0, b1),
        path: DesignPath::Fast,
        separable: true,
    })
}

fn full_search(
    channel: &ChannelParams,
    template: &ReceiverConfig,
    xi_grid: &[f64],
    tau_grid: &[f64],
    skipped: &mut Vec<SkippedPoint>,
) -> Result<DesignResult> {
    let mut best: Option<(f64, f64, GeneralKl, BinomialApprox, BinomialApprox)> = None;
    for &tau in tau_grid {
        for &xi in xi_grid {
            let cfg = template.with_threshold(xi).with_holding_time(tau);
            let eval = models_at(channel, &cfg).and_then(|(b0, b1)| Ok((kl_general_n(&b0, &b1)?, b0, b1)));
            match eval {
                Ok((kl, b0, b1)) if kl.min().is_finite() => {
                    if best.as_ref().is_none_or(|(_, _, bk, _, _)| kl.min() > bk.min()) {
                        best = Some((xi, tau, kl, b0, b1));
                    }
                }
                Ok(_) => skipped.push(SkippedPoint {
                    xi,
                    tau,
                    reason: Error::InfiniteDivergence("divergence is not finite"),
                }),
                Err(reason) => skipped.push(SkippedPoint { xi, tau, reason }),
            }
        }
    }
    let (xi, tau, kl, b0, b1) = best.ok_or(Error::Breakdown {
        flag: "design_grid",
        detail: "no grid point gives valid binomial models",
    })?;
    Ok(DesignResult {
        xi_star: xi,
        tau_star: tau,
        kl_01: kl.kl_01,
        kl_10: kl.kl_10,
        objective: kl.min(),
        conditions: check_conditions(channel, &template.with_threshold(xi).with_holding_time(tau))?,
        predicted_ber: predicted_ber(b0, b1),
        path: DesignPath::Full,
        separable: true,
    })
}

fn validate_grids(template: &ReceiverConfig, xi_grid: &[f64], tau_grid: &[f64]) -> Result<()> {
    if xi_grid.is_empty() {
        return Err(invalid("xi_grid", "must not be empty"));
    }
    if tau_grid.is_empty() {
        return Err(invalid("tau_grid", "must not be empty"));
    }
    if xi_grid.iter().any(|&xi| !(xi > 0.0 && xi.is_finite())) {
        return Err(invalid("xi_grid", "thresholds must be positive and finite"));
    }
    let t = template.sampling_period;
    for &tau in tau_grid {
        let k = tau / t;
        if k.round() < 1.0 || (k - k.round()).abs() > 1e-9 * k.max(1.0) || tau >= 1.0 {
            return Err(invalid("tau_grid", "holding times must be whole multiples of T below 1"));
        }
    }
    Ok(())
}

/// Chooses `(xi*, tau*)`.
///
/// The fast search fixes `tau* = T` and maximizes the approximate `D(P0||P1)`
/// over `xi_grid`, then refines `xi` by golden-section search between the
/// neighbouring grid points. The full search maximizes
/// `min(D(P0||P1), D(P1||P0))` over `tau_grid x xi_grid`, keeping the first
/// maximum in `tau`-major order. Grid points whose binomial model breaks down
/// are skipped and listed in the report.
pub fn select_params(
    channel: &ChannelParams,
    template: &ReceiverConfig,
    xi_grid: &[f64],
    tau_grid: &[f64],
    mode: DesignMode,
) -> Result<DesignReport> {
    template.validate()?;
    validate_grids(template, xi_grid, tau_grid)?;
    let t = template.sampling_period;
    let tau_max = tau_grid.iter().copied().fold(t, f64::max);

    if channel.lambda1 == channel.lambda0 {
        let result = DesignResult {
            xi_star: xi_grid[0],
            tau_star: t,
            kl_01: 0.0,
            kl_10: 0.0,
            objective: 0.0,
            conditions: Conditions::default(),
            predicted_ber: Some(0.5),
            path: DesignPath::Fast,
            separable: false,
        };
        return Ok(DesignReport { selected: result, fast: None, full: None, skipped: Vec::new() });
    }

    let mut skipped = Vec::new();
    let fast = match mode {
        DesignMode::Full => None,
        _ => Some(fast_search(channel, template, xi_grid, tau_max, &mut skipped)?),
    };
    let need_full = match mode {
        DesignMode::Fast => false,
        DesignMode::Full | DesignMode::Both => true,
        DesignMode::Auto => !fast.as_ref().is_some_and(|f| f.conditions.all()),
    };
    let full = if need_full { Some(full_search(channel, template, xi_grid, tau_grid, &mut skipped)?) } else { None };
    let selected = match (&fast, &full) {
        (Some(f), _) if f.conditions.all() || mode == DesignMode::Fast => *f,
        (_, Some(g)) => *g,
        (Some(f), None) => *f,
        (None, None) => unreachable!("at least one search runs"),
    };
    Ok(DesignReport { selected, fast, full, skipped })
}
