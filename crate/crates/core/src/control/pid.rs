//! Discrete PID with trapezoidal integration and conditional anti-windup.

use serde::{Deserialize, Serialize};

use super::{ControlError, PidGains};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidLimits {
    pub output_min: f64,
    pub output_max: f64,
    /// Bound on |integral accumulator|, m·s.
    pub integral_limit: f64,
    /// Time constant of an optional first-order filter on the derivative
    /// term, s.
    #[serde(default)]
    pub derivative_filter: Option<f64>,
}

impl Default for PidLimits {
    fn default() -> Self {
        PidLimits {
            output_min: -1.0,
            output_max: 1.0,
            integral_limit: f64::INFINITY,
            derivative_filter: None,
        }
    }
}

impl PidLimits {
    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.output_min < self.output_max) {
            return Err(ControlError::Config("output_min must be < output_max".into()));
        }
        if !(self.integral_limit > 0.0) {
            return Err(ControlError::Config("integral_limit must be > 0".into()));
        }
        if let Some(tau) = self.derivative_filter {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(ControlError::Config("derivative_filter must be > 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidState {
    pub integral_accumulator: f64,
    /// `None` until the first step; the first step then uses its own error
    /// as history, so it neither kicks the derivative nor halves the first
    /// trapezoid.
    pub previous_error: Option<f64>,
    pub previous_output: f64,
    pub filtered_derivative: f64,
}

impl PidState {
    /// State whose integral alone produces `output` under gain `ki`.
    pub fn preloaded(output: f64, ki: f64, limits: &PidLimits) -> Self {
        let integral = if ki > 0.0 { output / ki } else { 0.0 };
        PidState {
            integral_accumulator: integral.clamp(-limits.integral_limit, limits.integral_limit),
            previous_error: None,
            previous_output: output,
            filtered_derivative: 0.0,
        }
    }
}

/// One controller update. Returns the saturated output and the next state.
pub fn pid_step(
    gains: &PidGains,
    state: &PidState,
    error: f64,
    dt: f64,
    limits: &PidLimits,
) -> Result<(f64, PidState), ControlError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ControlError::NonPositiveStep(dt));
    }
    if !error.is_finite() {
        return Err(ControlError::NonFinite);
    }
    let previous = state.previous_error.unwrap_or(error);
    let candidate = (state.integral_accumulator + 0.5 * (error + previous) * dt)
        .clamp(-limits.integral_limit, limits.integral_limit);

    let raw_derivative = (error - previous) / dt;
    let derivative = match limits.derivative_filter {
        Some(tau) => state.filtered_derivative + dt / (tau + dt) * (raw_derivative - state.filtered_derivative),
        None => raw_derivative,
    };

    let unsaturated = |integral: f64| gains.kp * error + gains.ki * integral + gains.kd * derivative;
    let raw = unsaturated(candidate);
    let pushing_out =
        (raw > limits.output_max && error > 0.0) || (raw < limits.output_min && error < 0.0);
    let integral = if pushing_out {
        state.integral_accumulator
    } else {
        candidate
    };
    let output = unsaturated(integral).clamp(limits.output_min, limits.output_max);

    Ok((
        output,
        PidState {
            integral_accumulator: integral,
            previous_error: Some(error),
            previous_output: output,
            filtered_derivative: derivative,
        },
    ))
}
