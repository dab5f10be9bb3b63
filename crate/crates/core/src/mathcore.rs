//! Special functions and the beta-binomial machinery the decision rules are
//! built on.
//!
//! The beta-binomial here accepts a non-integer number of trials. The
//! generalized coefficient `Γ(t+1) / (Γ(k+1) Γ(t-k+1))` is evaluated in log
//! space and the support is truncated at `floor(t)`, so for a fractional `t`
//! the masses do not sum to one. That is intended: the fractional part is
//! follow-up time that cannot host a whole extra event.

use serde::{Deserialize, Serialize};
use statrs::function::{beta as sbeta, gamma as sgamma};

use crate::error::{domain, Error, Result};

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            domain(format!("{value} is not a probability"))
        }
    }

    /// Clamp a computed quantity into `[0, 1]`. Rounding can push sums of
    /// masses a few ulps past the bounds.
    pub(crate) fn clamped(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        Probability(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl std::fmt::Display for Probability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Shape parameters of a beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaShape {
    alpha: f64,
    beta: f64,
}

impl BetaShape {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0 {
            Ok(BetaShape { alpha, beta })
        } else {
            domain(format!("beta shape ({alpha}, {beta}) must be positive"))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return domain(format!("log_gamma undefined at {x}"));
    }
    // The two zeros are exact; the library leaves an ulp of residue there.
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    Ok(sgamma::ln_gamma(x))
}

fn ln_beta(a: f64, b: f64) -> f64 {
    sgamma::ln_gamma(a) + sgamma::ln_gamma(b) - sgamma::ln_gamma(a + b)
}

fn check_trials(trials: f64) -> Result<()> {
    if trials.is_finite() && trials >= 0.0 {
        Ok(())
    } else {
        domain(format!("trials must be a finite nonnegative number, got {trials}"))
    }
}

/// Log mass of the beta-binomial at `k` for a possibly fractional number of
/// trials.
fn ln_pmf(k: u64, trials: f64, shape: BetaShape) -> f64 {
    let k = k as f64;
    let (a, b) = (shape.alpha, shape.beta);
    sgamma::ln_gamma(trials + 1.0) - sgamma::ln_gamma(k + 1.0) - sgamma::ln_gamma(trials - k + 1.0)
        + ln_beta(k + a, trials - k + b)
        - ln_beta(a, b)
}

/// Beta-binomial probability mass `P(X = k)` with `trials` possibly
/// non-integer.
pub fn beta_binomial_pmf(k: u64, trials: f64, shape: BetaShape) -> Result<Probability> {
    check_trials(trials)?;
    if k as f64 > trials.floor() {
        return domain(format!("k = {k} exceeds floor(trials) = {}", trials.floor()));
    }
    Ok(Probability::clamped(ln_pmf(k, trials, shape).exp()))
}

/// Inclusive beta-binomial cdf `P(X ≤ k_max)`, summed over the integers
/// `0..=min(k_max, floor(trials))`.
pub fn beta_binomial_cdf(k_max: i64, trials: f64, shape: BetaShape) -> Result<Probability> {
    check_trials(trials)?;
    if k_max < 0 {
        return Ok(Probability::ZERO);
    }
    let top = trials.floor();
    if k_max as f64 >= top && trials == top {
        return Ok(Probability::ONE);
    }
    let last = (k_max as f64).min(top) as u64;
    let (a, b) = (shape.alpha, shape.beta);

    // Successive masses differ by the ratio
    //   (t-k)/(k+1) * (k+a)/(t-k-1+b),
    // accumulated in log space from the k = 0 term.
    let mut ln_term = ln_pmf(0, trials, shape);
    let mut total = ln_term.exp();
    for k in 0..last {
        let kf = k as f64;
        ln_term += ((trials - kf) / (kf + 1.0)).ln() + ((kf + a) / (trials - kf - 1.0 + b)).ln();
        total += ln_term.exp();
    }
    Ok(Probability::clamped(total))
}

fn check_unit(x: f64) -> Result<()> {
    if x.is_finite() && (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        domain(format!("{x} lies outside [0, 1]"))
    }
}

/// Regularized incomplete beta function `I_x(α, β)`.
pub fn beta_cdf(x: f64, shape: BetaShape) -> Result<Probability> {
    check_unit(x)?;
    Ok(Probability::clamped(sbeta::beta_reg(shape.alpha, shape.beta, x)))
}

/// Upper tail `P(p > x)` of a beta distribution, evaluated through the
/// reflection `I_{1-x}(β, α)` rather than as `1 - cdf`.
pub fn beta_sf(x: f64, shape: BetaShape) -> Result<Probability> {
    check_unit(x)?;
    Ok(Probability::clamped(sbeta::beta_reg(shape.beta, shape.alpha, 1.0 - x)))
}

/// Weighted isotonic (nondecreasing) least-squares fit by pool-adjacent-violators.
pub fn pava_isotonic(values: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() || values.len() != weights.len() {
        return domain(format!(
            "pava needs equal-length nonempty inputs, got {} values and {} weights",
            values.len(),
            weights.len()
        ));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) || values.iter().any(|v| !v.is_finite()) {
        return domain("pava needs finite values and positive weights");
    }

    // (weighted mean, total weight, number of points)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, c2) = blocks[blocks.len() - 1];
            let (m1, w1, c1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            let w = w1 + w2;
            blocks.push(((m1 * w1 + m2 * w2) / w, w, c1 + c2));
        }
    }

    Ok(blocks
        .into_iter()
        .flat_map(|(m, _, c)| std::iter::repeat_n(m, c))
        .collect())
}
