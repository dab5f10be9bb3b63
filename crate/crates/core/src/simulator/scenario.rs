use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of the time to a DLT, given that one occurs within the window.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ToxTimeLaw {
    #[default]
    Uniform,
    /// Weibull truncated to the window, with the scale chosen so that
    /// `fraction_in_first_half` of DLTs occur in the first half of it.
    Weibull { shape: f64, fraction_in_first_half: f64 },
}

impl ToxTimeLaw {
    pub fn validate(&self) -> Result<()> {
        if let ToxTimeLaw::Weibull {
            shape,
            fraction_in_first_half: f,
        } = *self
        {
            if !(shape.is_finite() && shape > 0.0) {
                return Err(Error::InvalidConfig(format!("weibull shape must be positive, got {shape}")));
            }
            let floor = 0.5f64.powf(shape);
            if !(f > floor && f < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "fraction_in_first_half must lie in ({floor:.4}, 1) for shape {shape}, got {f}"
                )));
            }
        }
        Ok(())
    }

    /// Sampler for a window of `window` days.
    pub(crate) fn sampler(&self, window: f64) -> ToxTimeSampler {
        match *self {
            ToxTimeLaw::Uniform => ToxTimeSampler::Uniform { window },
            ToxTimeLaw::Weibull {
                shape,
                fraction_in_first_half,
            } => {
                if window <= 0.0 {
                    return ToxTimeSampler::Uniform { window };
                }
                // ratio F(W/2)/F(W) falls from 1 to 0.5^k as the scale grows
                let ratio = |scale: f64| {
                    let full = -(-(window / scale).powf(shape)).exp_m1();
                    let half = -(-(window / (2.0 * scale)).powf(shape)).exp_m1();
                    half / full
                };
                let (mut lo, mut hi) = ((window * 1e-6).ln(), (window * 1e6).ln());
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if ratio(mid.exp()) > fraction_in_first_half {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let scale = (0.5 * (lo + hi)).exp();
                ToxTimeSampler::Weibull {
                    window,
                    shape,
                    scale,
                    mass: -(-(window / scale).powf(shape)).exp_m1(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum ToxTimeSampler {
    Uniform { window: f64 },
    Weibull { window: f64, shape: f64, scale: f64, mass: f64 },
}

impl ToxTimeSampler {
    /// Map a uniform draw in `[0, 1)` to a DLT day in `(0, window]`.
    pub(crate) fn day(&self, u: f64) -> f64 {
        match *self {
            ToxTimeSampler::Uniform { window } => (1.0 - u) * window,
            ToxTimeSampler::Weibull {
                window,
                shape,
                scale,
                mass,
            } => {
                let v = 1.0 - u; // (0, 1]
                (scale * (-(-v * mass).ln_1p()).powf(1.0 / shape)).min(window)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub true_dlt_probs: Vec<f64>,
    #[serde(default)]
    pub tox_time_law: ToxTimeLaw,
    /// Overrides the closest-to-target rule when scoring correct selection.
    #[serde(default)]
    pub true_mtd: Option<usize>,
}

impl Scenario {
    pub fn new(label: impl Into<String>, true_dlt_probs: Vec<f64>) -> Self {
        Scenario {
            label: label.into(),
            true_dlt_probs,
            tox_time_law: ToxTimeLaw::Uniform,
            true_mtd: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.true_dlt_probs.is_empty() {
            return Err(Error::InvalidConfig(format!("scenario `{}` has no doses", self.label)));
        }
        if let Some(p) = self.true_dlt_probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidConfig(format!("scenario `{}`: {p} is not a probability", self.label)));
        }
        if let Some(m) = self.true_mtd {
            if m == 0 || m > self.true_dlt_probs.len() {
                return Err(Error::InvalidConfig(format!("scenario `{}`: true_mtd {m} out of range", self.label)));
            }
        }
        self.tox_time_law.validate()
    }

    /// The correct selection: the dose whose DLT probability is closest to
    /// `target` (ties to the lower dose), or `None` when every dose lies above
    /// `interval_hi`.
    pub fn true_mtd(&self, target: f64, interval_hi: f64) -> Option<usize> {
        if let Some(m) = self.true_mtd {
            return Some(m);
        }
        if self.true_dlt_probs.iter().all(|&p| p > interval_hi) {
            return None;
        }
        let mut best = 0;
        for (i, p) in self.true_dlt_probs.iter().enumerate() {
            if (p - target).abs() < (self.true_dlt_probs[best] - target).abs() {
                best = i;
            }
        }
        Some(best + 1)
    }
}

/// Generator for random dose-toxicity curves with exactly one dose at the
/// target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomScenarioSpec {
    pub label: String,
    pub n_doses: usize,
    pub target: f64,
    /// Each step down multiplies the rate by a factor drawn from this range.
    pub down_ratio: (f64, f64),
    /// Each step up closes this fraction of the remaining gap to 1.
    pub up_step: (f64, f64),
    #[serde(default)]
    pub tox_time_law: ToxTimeLaw,
}

impl Default for RandomScenarioSpec {
    fn default() -> Self {
        RandomScenarioSpec {
            label: "random".into(),
            n_doses: 6,
            target: 0.3,
            down_ratio: (0.3, 0.7),
            up_step: (0.15, 0.35),
            tox_time_law: ToxTimeLaw::Uniform,
        }
    }
}

impl RandomScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |(a, b): (f64, f64)| 0.0 < a && a <= b && b < 1.0;
        if self.n_doses < 2 || !ok(self.down_ratio) || !ok(self.up_step) || !(0.0 < self.target && self.target < 1.0) {
            return Err(Error::InvalidConfig(format!("invalid random scenario spec `{}`", self.label)));
        }
        self.tox_time_law.validate()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Scenario {
        let n = self.n_doses;
        let m = rng.random_range(0..n);
        let mut p = vec![0.0; n];
        p[m] = self.target;
        for j in (0..m).rev() {
            p[j] = p[j + 1] * rng.random_range(self.down_ratio.0..=self.down_ratio.1);
        }
        for j in m + 1..n {
            p[j] = p[j - 1] + (1.0 - p[j - 1]) * rng.random_range(self.up_step.0..=self.up_step.1);
        }
        Scenario {
            label: self.label.clone(),
            true_dlt_probs: p,
            tox_time_law: self.tox_time_law,
            true_mtd: Some(m + 1),
        }
    }
}

pub fn random_scenario<R: Rng + ?Sized>(rng: &mut R, n_doses: usize, target: f64) -> Result<Scenario> {
    let spec = RandomScenarioSpec {
        n_doses,
        target,
        ..Default::default()
    };
    spec.validate()?;
    Ok(spec.draw(rng))
}

/// A fixed scenario, or a generator drawing a fresh one per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ScenarioSource {
    Fixed(Scenario),
    Random(RandomScenarioSpec),
}

impl ScenarioSource {
    pub fn label(&self) -> &str {
        match self {
            ScenarioSource::Fixed(s) => &s.label,
            ScenarioSource::Random(r) => &r.label,
        }
    }

    pub fn n_doses(&self) -> usize {
        match self {
            ScenarioSource::Fixed(s) => s.true_dlt_probs.len(),
            ScenarioSource::Random(r) => r.n_doses,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScenarioSource::Fixed(s) => s.validate(),
            ScenarioSource::Random(r) => r.validate(),
        }
    }
}

/// Six illustrative dose-toxicity curves at target 0.3, one per MTD position.
/// These are implementation defaults for exercising the campaign runner.
pub fn default_scenarios() -> Vec<Scenario> {
    [
        [0.30, 0.45, 0.55, 0.65, 0.75, 0.85],
        [0.12, 0.30, 0.45, 0.56, 0.66, 0.76],
        [0.05, 0.13, 0.30, 0.45, 0.56, 0.66],
        [0.03, 0.07, 0.14, 0.30, 0.45, 0.58],
        [0.02, 0.05, 0.09, 0.15, 0.30, 0.46],
        [0.02, 0.04, 0.06, 0.09, 0.15, 0.30],
    ]
    .iter()
    .enumerate()
    .map(|(i, p)| Scenario::new(format!("FS{}", i + 1), p.to_vec()))
    .collect()
}
