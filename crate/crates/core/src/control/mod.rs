//! Position controller: discrete PID whose gains are rescheduled every
//! sample by a fuzzy tuner.

mod fuzzy;
mod pid;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::CircuitKind;

pub use fuzzy::{
    fuzzy_tune, membership, FuzzyTuner, GainRange, GainRanges, GainRules, Level, RuleTable,
    TriangularSet,
};
pub use pid::{pid_step, PidLimits, PidState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("malformed triangular set ({a}, {b}, {c}): require a <= b <= c")]
    MalformedSet { a: f64, b: f64, c: f64 },
    #[error("controller step must be > 0, got {0}")]
    NonPositiveStep(f64),
    #[error("non-finite controller input")]
    NonFinite,
    #[error("controller configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidGains {
    /// command/m
    pub kp: f64,
    /// command/(m·s)
    pub ki: f64,
    /// command·s/m
    pub kd: f64,
}

/// Fuzzy tuner plus the fixed parts of the PID law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyPid {
    pub tuner: FuzzyTuner,
    pub limits: PidLimits,
}

impl FuzzyPid {
    pub fn validate(&self) -> Result<(), ControlError> {
        self.tuner.validate()?;
        self.limits.validate()
    }

    /// Schedules the gains from `(error, error_rate)` and advances the PID.
    pub fn step(
        &self,
        state: &PidState,
        error: f64,
        error_rate: f64,
        dt: f64,
    ) -> Result<(f64, PidGains, PidState), ControlError> {
        let gains = fuzzy_tune(error, error_rate, &self.tuner)?;
        let (output, next) = pid_step(&gains, state, error, dt, &self.limits)?;
        Ok((output, gains, next))
    }
}

/// Maps the controller output (positive = extend) onto the valve command of
/// each circuit. The PFCV bypass closes to extend: output 1 gives a closed
/// bypass, -1 a fully open one.
pub fn valve_command(kind: CircuitKind, output: f64) -> f64 {
    match kind {
        CircuitKind::Pdcv => output.clamp(-1.0, 1.0),
        CircuitKind::Pfcv => (0.5 * (1.0 - output)).clamp(0.0, 1.0),
    }
}

/// Inverse of [`valve_command`].
pub fn controller_output_for(kind: CircuitKind, command: f64) -> f64 {
    match kind {
        CircuitKind::Pdcv => command,
        CircuitKind::Pfcv => 1.0 - 2.0 * command,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valve_mapping_round_trips() {
        for kind in CircuitKind::ALL {
            for out in [-1.0, -0.25, 0.0, 0.6, 1.0] {
                let cmd = valve_command(kind, out);
                assert!((controller_output_for(kind, cmd) - out).abs() < 1e-15);
            }
        }
        assert_eq!(valve_command(CircuitKind::Pfcv, 1.0), 0.0);
        assert_eq!(valve_command(CircuitKind::Pfcv, -1.0), 1.0);
    }
}
