//! mTPI, Keyboard and BOIN dose-assignment rules and their boundary tables.
//!
//! All three designs reduce to the same question: given DLT and non-DLT
//! evidence at the current dose, does the toxicity rate look below, inside or
//! above the proper dosing interval? [`Design::signal`] answers it for
//! possibly fractional non-DLT evidence so the time-to-event variants can
//! reuse the same rules.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mathcore::{beta_cdf, beta_sf, BetaShape, Probability};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignKind {
    Mtpi,
    Keyboard,
    Boin,
}

impl DesignKind {
    pub const ALL: [DesignKind; 3] = [DesignKind::Mtpi, DesignKind::Keyboard, DesignKind::Boin];

    pub fn name(self) -> &'static str {
        match self {
            DesignKind::Mtpi => "mtpi",
            DesignKind::Keyboard => "keyboard",
            DesignKind::Boin => "boin",
        }
    }
}

impl std::fmt::Display for DesignKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for DesignKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mtpi" => Ok(DesignKind::Mtpi),
            "keyboard" => Ok(DesignKind::Keyboard),
            "boin" => Ok(DesignKind::Boin),
            other => Err(Error::InvalidConfig(format!("unknown design `{other}`"))),
        }
    }
}

/// Width used to normalize the overdosing interval's posterior mass in
/// mTPI's unit probability mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverdoseWidth {
    /// `interval_hi`. Reproduces the published mTPI boundaries at target 0.3
    /// (de-escalate at 3/6, 7/15, 8/18).
    #[default]
    UpperBound,
    /// `1 - interval_hi`, the literal length of `(interval_hi, 1)`.
    Complement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    pub target: f64,
    pub interval_lo: f64,
    pub interval_hi: f64,
    #[serde(default = "default_elimination_cutoff")]
    pub elimination_cutoff: f64,
    #[serde(default = "default_elimination_min_n")]
    pub elimination_min_n: u32,
    #[serde(default)]
    pub mtpi_overdose_width: OverdoseWidth,
}

fn default_elimination_cutoff() -> f64 {
    0.95
}

fn default_elimination_min_n() -> u32 {
    3
}

impl DesignParams {
    /// Standard proper dosing interval for a design: `target ± 0.05` for
    /// mTPI and Keyboard, `(0.6, 1.4) × target` for BOIN.
    pub fn standard(kind: DesignKind, target: f64) -> Self {
        let (lo, hi) = match kind {
            DesignKind::Mtpi | DesignKind::Keyboard => (target - 0.05, target + 0.05),
            DesignKind::Boin => (0.6 * target, 1.4 * target),
        };
        DesignParams {
            target,
            interval_lo: lo,
            interval_hi: hi,
            elimination_cutoff: default_elimination_cutoff(),
            elimination_min_n: default_elimination_min_n(),
            mtpi_overdose_width: OverdoseWidth::default(),
        }
    }

    pub fn with_interval(mut self, lo: f64, hi: f64) -> Self {
        self.interval_lo = lo;
        self.interval_hi = hi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("target", self.target),
            ("interval_lo", self.interval_lo),
            ("interval_hi", self.interval_hi),
            ("elimination_cutoff", self.elimination_cutoff),
        ] {
            Probability::new(v).map_err(|_| Error::InvalidConfig(format!("{name} = {v} is not a probability")))?;
        }
        if !(0.0 < self.interval_lo && self.interval_lo < self.target && self.target < self.interval_hi && self.interval_hi < 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "need 0 < interval_lo < target < interval_hi < 1, got ({}, {}, {})",
                self.interval_lo, self.target, self.interval_hi
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Escalate,
    Stay,
    DeEscalate,
    /// De-escalate and remove the current dose and every higher dose.
    Eliminate,
}

/// BOIN escalation and de-escalation thresholds `(λe, λd)`.
pub fn boin_thresholds(params: &DesignParams) -> Result<(Probability, Probability)> {
    let (phi, lo, hi) = (params.target, params.interval_lo, params.interval_hi);
    if !(0.0 < lo && lo < phi && phi < hi && hi < 1.0) {
        return domain(format!("degenerate BOIN interval ({lo}, {hi}) around {phi}"));
    }
    let lambda_e = ((1.0 - lo) / (1.0 - phi)).ln() / (phi * (1.0 - lo) / (lo * (1.0 - phi))).ln();
    let lambda_d = ((1.0 - phi) / (1.0 - hi)).ln() / (hi * (1.0 - phi) / (phi * (1.0 - hi))).ln();
    Ok((Probability::new(lambda_e)?, Probability::new(lambda_d)?))
}

/// A validated design: kind, parameters and any precomputed constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    kind: DesignKind,
    params: DesignParams,
    lambda_e: f64,
    lambda_d: f64,
}

impl Design {
    pub fn new(kind: DesignKind, params: DesignParams) -> Result<Self> {
        params.validate()?;
        let (lambda_e, lambda_d) = match kind {
            DesignKind::Boin => {
                let (e, d) = boin_thresholds(&params)?;
                (e.value(), d.value())
            }
            _ => (f64::NAN, f64::NAN),
        };
        Ok(Design {
            kind,
            params,
            lambda_e,
            lambda_d,
        })
    }

    /// Design with the standard interval for `kind` at `target`.
    pub fn standard(kind: DesignKind, target: f64) -> Result<Self> {
        Design::new(kind, DesignParams::standard(kind, target))
    }

    pub fn kind(&self) -> DesignKind {
        self.kind
    }

    pub fn params(&self) -> &DesignParams {
        &self.params
    }

    /// Interval signal from `dlt` toxicities and `no_dlt` (possibly
    /// fractional) toxicity-free patients. Never returns `Eliminate`.
    pub fn signal(&self, dlt: f64, no_dlt: f64) -> Decision {
        match self.kind {
            DesignKind::Boin => {
                let total = dlt + no_dlt;
                let rate = if total > 0.0 { dlt / total } else { 0.0 };
                if rate <= self.lambda_e {
                    Decision::Escalate
                } else if rate >= self.lambda_d {
                    Decision::DeEscalate
                } else {
                    Decision::Stay
                }
            }
            DesignKind::Mtpi => self.mtpi_signal(posterior(dlt, no_dlt)),
            DesignKind::Keyboard => self.keyboard_signal(posterior(dlt, no_dlt)),
        }
    }

    fn mtpi_signal(&self, post: BetaShape) -> Decision {
        let p = &self.params;
        let cdf = |x: f64| beta_cdf(x, post).map(Probability::value).unwrap_or(0.0);
        let (c_lo, c_hi) = (cdf(p.interval_lo), cdf(p.interval_hi));
        let over_width = match p.mtpi_overdose_width {
            OverdoseWidth::UpperBound => p.interval_hi,
            OverdoseWidth::Complement => 1.0 - p.interval_hi,
        };
        let under = c_lo / p.interval_lo;
        let proper = (c_hi - c_lo) / (p.interval_hi - p.interval_lo);
        let over = (1.0 - c_hi) / over_width;
        // Ties resolve toward the safer action.
        if over >= proper && over >= under {
            Decision::DeEscalate
        } else if proper >= under {
            Decision::Stay
        } else {
            Decision::Escalate
        }
    }

    fn keyboard_signal(&self, post: BetaShape) -> Decision {
        let p = &self.params;
        let width = p.interval_hi - p.interval_lo;
        let cdf = |x: f64| beta_cdf(x.clamp(0.0, 1.0), post).map(Probability::value).unwrap_or(0.0);
        let target_mass = cdf(p.interval_hi) - cdf(p.interval_lo);

        let below = (p.interval_lo / width - 1e-9).ceil().max(0.0) as usize;
        let best_below = (1..=below)
            .map(|i| {
                let hi = p.interval_lo - (i - 1) as f64 * width;
                cdf(hi) - cdf(hi - width)
            })
            .fold(f64::NEG_INFINITY, f64::max);

        let above = ((1.0 - p.interval_hi) / width - 1e-9).ceil().max(0.0) as usize;
        let best_above = (1..=above)
            .map(|i| {
                let lo = p.interval_hi + (i - 1) as f64 * width;
                cdf(lo + width) - cdf(lo)
            })
            .fold(f64::NEG_INFINITY, f64::max);

        if best_above >= target_mass && best_above >= best_below {
            Decision::DeEscalate
        } else if target_mass >= best_below {
            Decision::Stay
        } else {
            Decision::Escalate
        }
    }

    /// Plain (fully observed) decision for `n_dlt` DLTs among `n` patients.
    pub fn decide(&self, n_dlt: u32, n: u32) -> Result<Decision> {
        if n == 0 || n_dlt > n {
            return domain(format!("invalid counts: {n_dlt} DLTs among {n} patients"));
        }
        if self.eliminates(n_dlt, n) {
            return Ok(Decision::Eliminate);
        }
        Ok(self.signal(n_dlt as f64, (n - n_dlt) as f64))
    }

    /// Safety rule: `n ≥ min_n` and `P(p > target | Beta(1+x, 1+n-x)) > cutoff`.
    pub fn eliminates(&self, n_dlt: u32, n: u32) -> bool {
        elimination_check(n_dlt, n, &self.params)
    }

    pub fn boundary_table(&self, n_max: u32) -> Result<BoundaryTable> {
        if n_max == 0 {
            return domain("boundary table needs n_max ≥ 1");
        }
        let rows = (1..=n_max)
            .map(|n| {
                let signals: Vec<Decision> = (0..=n).map(|x| self.signal(x as f64, (n - x) as f64)).collect();
                let escalate_max = signals.iter().rposition(|d| *d == Decision::Escalate).map_or(-1, |x| x as i64);
                let deescalate_min = signals.iter().position(|d| *d == Decision::DeEscalate).unwrap_or(n as usize + 1) as i64;
                let eliminate_min = if n >= self.params.elimination_min_n {
                    (0..=n).find(|&x| self.eliminates(x, n)).map(i64::from)
                } else {
                    None
                };
                BoundaryRow {
                    n,
                    escalate_max,
                    deescalate_min,
                    eliminate_min,
                }
            })
            .collect();
        Ok(BoundaryTable {
            design: self.kind,
            params: self.params,
            rows,
        })
    }
}

fn posterior(dlt: f64, no_dlt: f64) -> BetaShape {
    BetaShape::new(1.0 + dlt, 1.0 + no_dlt).expect("uniform prior keeps shapes positive")
}

/// Plain decision for `n_dlt` DLTs among `n` patients.
pub fn decide(kind: DesignKind, params: &DesignParams, n_dlt: u32, n: u32) -> Result<Decision> {
    Design::new(kind, *params)?.decide(n_dlt, n)
}

pub fn elimination_check(n_dlt: u32, n: u32, params: &DesignParams) -> bool {
    if n < params.elimination_min_n || n_dlt > n {
        return false;
    }
    let post = posterior(n_dlt as f64, (n - n_dlt) as f64);
    beta_sf(params.target, post).is_ok_and(|p| p.value() > params.elimination_cutoff)
}

pub fn boundary_table(kind: DesignKind, params: &DesignParams, n_max: u32) -> Result<BoundaryTable> {
    Design::new(kind, *params)?.boundary_table(n_max)
}

/// Boundaries at one sample size: escalate if DLTs ≤ `escalate_max`,
/// de-escalate if DLTs ≥ `deescalate_min`, eliminate if DLTs ≥
/// `eliminate_min`. `escalate_max = -1` means escalation is impossible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub n: u32,
    pub escalate_max: i64,
    pub deescalate_min: i64,
    pub eliminate_min: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTable {
    pub design: DesignKind,
    pub params: DesignParams,
    pub rows: Vec<BoundaryRow>,
}

impl BoundaryTable {
    pub fn row(&self, n: u32) -> Result<&BoundaryRow> {
        n.checked_sub(1)
            .and_then(|i| self.rows.get(i as usize))
            .filter(|r| r.n == n)
            .ok_or(Error::MissingRow(n))
    }

    pub fn n_max(&self) -> u32 {
        self.rows.last().map_or(0, |r| r.n)
    }

    /// Columnar text rendering, one column per sample size.
    pub fn to_text(&self, columns: Option<&[u32]>) -> String {
        let rows: Vec<&BoundaryRow> = match columns {
            Some(ns) => ns.iter().filter_map(|&n| self.row(n).ok()).collect(),
            None => self.rows.iter().collect(),
        };
        let cell = |v: Option<i64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        let mut out = format!(
            "# design={} target={} interval=({}, {})\n",
            self.design, self.params.target, self.params.interval_lo, self.params.interval_hi
        );
        let line = |label: &str, f: &dyn Fn(&BoundaryRow) -> String| {
            let mut s = format!("{label:<30}");
            for r in &rows {
                s.push_str(&format!("{:>5}", f(r)));
            }
            s.push('\n');
            s
        };
        out += &line("Num of patients treated", &|r| r.n.to_string());
        out += &line("Escalate if Num of DLTs <=", &|r| r.escalate_max.to_string());
        out += &line("De-escalate if Num of DLTs >=", &|r| r.deescalate_min.to_string());
        out += &line("Eliminate if Num of DLTs >=", &|r| cell(r.eliminate_min));
        out
    }
}
