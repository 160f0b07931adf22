//! Two-input Mamdani gain scheduler for the PID loop.
//!
//! Error and error rate are each covered by five triangular sets with 50%
//! overlap (NL, NS, Z, PS, PL). Every 5x5 rule cell names one of five
//! singleton consequents per gain; rule strength is the min of the two input
//! memberships and the output is the strength-weighted centroid of the fired
//! singletons, mapped onto the gain's `[min, max]` range.
//!
//! Default rule base (rows: error NL..PL, columns: error rate NL..PL):
//!
//! ```text
//!        Kp                  Ki                  Kd
//! NL  L  L  ML M  MS     S  S  MS MS M       MS S  S  MS M
//! NS  L  ML M  MS MS     S  MS M  M  ML      M  MS MS M  ML
//! Z   ML M  M  M  ML     MS M  ML M  MS      ML M  M  M  ML
//! PS  MS MS M  ML L      ML M  M  MS S       ML M  MS MS M
//! PL  MS M  ML L  L      M  MS MS S  S       M  MS S  S  MS
//! ```
//!
//! A growing error (error and rate of the same sign) raises Kp; a large error
//! lowers Ki and Kd; small errors with low rate favour integral action.

use serde::{Deserialize, Serialize};

use super::{ControlError, PidGains};

/// Triangle with feet at `a`, `c` and apex at `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularSet {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TriangularSet {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, ControlError> {
        let set = TriangularSet { a, b, c };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.a.is_finite() && self.b.is_finite() && self.c.is_finite())
            || self.a > self.b
            || self.b > self.c
        {
            return Err(ControlError::MalformedSet {
                a: self.a,
                b: self.b,
                c: self.c,
            });
        }
        Ok(())
    }
}

/// Degree of membership of `x` in `set`.
pub fn membership(x: f64, set: &TriangularSet) -> Result<f64, ControlError> {
    set.validate()?;
    let TriangularSet { a, b, c } = *set;
    Ok(if x < a || x > c {
        0.0
    } else if x == b {
        1.0
    } else if x < b {
        (x - a) / (b - a)
    } else {
        (c - x) / (c - b)
    })
}

/// Consequent singletons, equally spaced over the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "S")]
    Small,
    #[serde(rename = "MS")]
    MediumSmall,
    #[serde(rename = "M")]
    Medium,
    #[serde(rename = "ML")]
    MediumLarge,
    #[serde(rename = "L")]
    Large,
}

impl Level {
    pub fn value(self) -> f64 {
        match self {
            Level::Small => 0.0,
            Level::MediumSmall => 0.25,
            Level::Medium => 0.5,
            Level::MediumLarge => 0.75,
            Level::Large => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Level::Small => "S",
            Level::MediumSmall => "MS",
            Level::Medium => "M",
            Level::MediumLarge => "ML",
            Level::Large => "L",
        }
    }
}

pub const SETS: usize = 5;

/// Rows indexed by the error set, columns by the error-rate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleTable(pub [[Level; SETS]; SETS]);

impl RuleTable {
    /// Every cell equals its mirror through the centre cell.
    pub fn is_sign_symmetric(&self) -> bool {
        (0..SETS).all(|i| (0..SETS).all(|j| self.0[i][j] == self.0[SETS - 1 - i][SETS - 1 - j]))
    }

    pub fn center(&self) -> Level {
        self.0[2][2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainRules {
    pub kp: RuleTable,
    pub ki: RuleTable,
    pub kd: RuleTable,
}

impl Default for GainRules {
    fn default() -> Self {
        use Level::{Large as L, Medium as M, MediumLarge as ML, MediumSmall as MS, Small as S};
        GainRules {
            kp: RuleTable([
                [L, L, ML, M, MS],
                [L, ML, M, MS, MS],
                [ML, M, M, M, ML],
                [MS, MS, M, ML, L],
                [MS, M, ML, L, L],
            ]),
            ki: RuleTable([
                [S, S, MS, MS, M],
                [S, MS, M, M, ML],
                [MS, M, ML, M, MS],
                [ML, M, M, MS, S],
                [M, MS, MS, S, S],
            ]),
            kd: RuleTable([
                [MS, S, S, MS, M],
                [M, MS, MS, M, ML],
                [ML, M, M, M, ML],
                [ML, M, MS, MS, M],
                [M, MS, S, S, MS],
            ]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainRange {
    pub min: f64,
    pub max: f64,
}

impl GainRange {
    /// `base * (1 -/+ spread)`.
    pub fn around(base: f64, spread: f64) -> Self {
        GainRange {
            min: base * (1.0 - spread),
            max: base * (1.0 + spread),
        }
    }

    pub fn at(&self, level: f64) -> f64 {
        self.min + level * (self.max - self.min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainRanges {
    pub kp: GainRange,
    pub ki: GainRange,
    pub kd: GainRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyTuner {
    /// Half-width of the error universe, m.
    pub error_range: f64,
    /// Half-width of the error-rate universe, m/s.
    pub error_rate_range: f64,
    pub rules: GainRules,
    pub ranges: GainRanges,
}

/// NL, NS, Z, PS, PL over `[-half, half]`.
fn partition(half: f64) -> [TriangularSet; SETS] {
    let step = 0.5 * half;
    let peak = |k: i32| f64::from(k) * step;
    [-2, -1, 0, 1, 2].map(|k| TriangularSet {
        a: peak(k - 1),
        b: peak(k),
        c: peak(k + 1),
    })
}

fn fuzzify(x: f64, half: f64) -> Result<[f64; SETS], ControlError> {
    let x = x.clamp(-half, half);
    let sets = partition(half);
    let mut mu = [0.0; SETS];
    for (m, set) in mu.iter_mut().zip(sets.iter()) {
        *m = membership(x, set)?;
    }
    Ok(mu)
}

impl FuzzyTuner {
    pub fn validate(&self) -> Result<(), ControlError> {
        for (name, half) in [
            ("error_range", self.error_range),
            ("error_rate_range", self.error_rate_range),
        ] {
            if !(half.is_finite() && half > 0.0) {
                return Err(ControlError::Config(format!("{name} must be finite and > 0")));
            }
        }
        for (name, table) in [
            ("kp", &self.rules.kp),
            ("ki", &self.rules.ki),
            ("kd", &self.rules.kd),
        ] {
            if !table.is_sign_symmetric() {
                return Err(ControlError::Config(format!(
                    "rule table {name} is not symmetric under sign flip of both inputs"
                )));
            }
        }
        for (name, r) in [
            ("kp", self.ranges.kp),
            ("ki", self.ranges.ki),
            ("kd", self.ranges.kd),
        ] {
            if !(r.min.is_finite() && r.max.is_finite() && r.min >= 0.0 && r.min < r.max) {
                return Err(ControlError::Config(format!(
                    "gain range {name} must satisfy 0 <= min < max, got [{}, {}]",
                    r.min, r.max
                )));
            }
        }
        Ok(())
    }

    /// Gains for the centre rule cell, i.e. at zero error and zero rate.
    pub fn center_gains(&self) -> PidGains {
        PidGains {
            kp: self.ranges.kp.at(self.rules.kp.center().value()),
            ki: self.ranges.ki.at(self.rules.ki.center().value()),
            kd: self.ranges.kd.at(self.rules.kd.center().value()),
        }
    }
}

/// Schedules PID gains from the current error and error rate.
pub fn fuzzy_tune(error: f64, error_rate: f64, tuner: &FuzzyTuner) -> Result<PidGains, ControlError> {
    if !(error.is_finite() && error_rate.is_finite()) {
        return Err(ControlError::NonFinite);
    }
    let mu_e = fuzzify(error, tuner.error_range)?;
    let mu_r = fuzzify(error_rate, tuner.error_rate_range)?;

    let mut strength = [0.0; SETS * SETS];
    for i in 0..SETS {
        for j in 0..SETS {
            strength[i * SETS + j] = mu_e[i].min(mu_r[j]);
        }
    }

    // Terms are summed in mirror pairs (k, 24 - k) so that flipping the sign
    // of both inputs reproduces the result bit for bit.
    let centroid = |table: &RuleTable| -> Result<f64, ControlError> {
        let term = |k: usize| strength[k] * table.0[k / SETS][k % SETS].value();
        let last = SETS * SETS - 1;
        let mut num = term(last / 2);
        let mut den = strength[last / 2];
        for k in 0..last / 2 {
            num += term(k) + term(last - k);
            den += strength[k] + strength[last - k];
        }
        if den <= 0.0 {
            return Err(ControlError::Config(
                "no rule fired; membership sets do not cover the input".into(),
            ));
        }
        Ok((num / den).clamp(0.0, 1.0))
    };

    Ok(PidGains {
        kp: tuner.ranges.kp.at(centroid(&tuner.rules.kp)?),
        ki: tuner.ranges.ki.at(centroid(&tuner.rules.ki)?),
        kd: tuner.ranges.kd.at(centroid(&tuner.rules.kd)?),
    })
}
