//! Closed-loop, fixed-step simulation of one circuit over a duty cycle.

mod duty;
mod integrator;
mod log;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::{self, CircuitError, CircuitKind, CircuitParams, CircuitState, STATE_DIM};
use crate::control::{self, ControlError, FuzzyPid, PidState};
use crate::physics::hydraulic_power;

pub use duty::{DutyCycle, Phase, PhaseSpan};
pub use integrator::{rk4_step, semi_implicit_euler_step, IntegratorKind, StepError};
pub use log::{Sample, TimeSeriesLog, COLUMNS};

/// Pressures or speeds beyond these are treated as a diverged integration.
const PRESSURE_CEILING: f64 = 1e10;
const SPEED_CEILING: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid {field}: {message}")]
    Config {
        field: &'static str,
        message: String,
    },
    #[error("numerical blow-up at t = {time} s (state {state:?})")]
    Blowup { time: f64, state: CircuitState },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Control(#[from] ControlError),
}

impl SimError {
    pub fn is_numerical(&self) -> bool {
        matches!(self, SimError::Blowup { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Integration and controller step, s.
    pub dt: f64,
    /// Log every n-th step.
    pub log_decimation: usize,
    pub integrator: IntegratorKind,
    /// Fixed valve command replacing the controller (open-loop runs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command_override: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            log_decimation: 10,
            integrator: IntegratorKind::Rk4,
            command_override: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, spool_time_constant: f64) -> Result<(), SimError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SimError::Config {
                field: "sim.dt",
                message: format!("must be > 0, got {}", self.dt),
            });
        }
        if self.dt > spool_time_constant / 5.0 {
            return Err(SimError::Config {
                field: "sim.dt",
                message: format!(
                    "{} s does not resolve the spool lag; need dt <= {} s",
                    self.dt,
                    spool_time_constant / 5.0
                ),
            });
        }
        if self.log_decimation < 1 {
            return Err(SimError::Config {
                field: "sim.log_decimation",
                message: "must be >= 1".into(),
            });
        }
        if let Some(u) = self.command_override {
            if !u.is_finite() {
                return Err(SimError::Config {
                    field: "sim.command_override",
                    message: "must be finite".into(),
                });
            }
        }
        Ok(())
    }

    /// Number of integration steps covering `duration`.
    pub fn steps_for(&self, duration: f64) -> Result<usize, SimError> {
        let n = (duration / self.dt).round();
        if (n * self.dt - duration).abs() > 1e-9 * duration.max(self.dt) {
            return Err(SimError::Config {
                field: "sim.dt",
                message: format!("duration {duration} s is not a whole number of {} s steps", self.dt),
            });
        }
        let n = n as usize;
        if n % self.log_decimation != 0 {
            return Err(SimError::Config {
                field: "sim.log_decimation",
                message: format!("{n} steps are not a multiple of decimation {}", self.log_decimation),
            });
        }
        Ok(n)
    }
}

fn diverged(s: &CircuitState) -> bool {
    !s.is_finite()
        || s.pressure_bore.abs() > PRESSURE_CEILING
        || s.pressure_rod.abs() > PRESSURE_CEILING
        || s.velocity.abs() > SPEED_CEILING
}

fn advance(
    kind: CircuitKind,
    params: &CircuitParams,
    sim: &SimConfig,
    state: &CircuitState,
    command: f64,
    load: f64,
    t: f64,
) -> Result<CircuitState, SimError> {
    let rhs = |_: f64, y: &[f64; STATE_DIM]| {
        circuits::derivatives(kind, &CircuitState::from_array(*y), command, params, load)
            .map(|ev| ev.rate.to_array())
    };
    let y = state.to_array();
    let stepped = match sim.integrator {
        IntegratorKind::Rk4 => rk4_step(rhs, t, &y, sim.dt),
        IntegratorKind::SemiImplicitEuler => semi_implicit_euler_step(rhs, t, &y, sim.dt, &[(0, 1)]),
    };
    let next = match stepped {
        Ok(next) => CircuitState::from_array(next),
        Err(StepError::NonFinite { time, state }) => {
            let mut a = [f64::NAN; STATE_DIM];
            a.copy_from_slice(&state[..STATE_DIM]);
            return Err(SimError::Blowup {
                time,
                state: CircuitState::from_array(a),
            });
        }
        Err(StepError::Rhs(CircuitError::NonFiniteState(s))) => {
            return Err(SimError::Blowup { time: t, state: s });
        }
        Err(StepError::Rhs(e)) => return Err(e.into()),
    };
    let next = circuits::enforce_limits(kind, &next, params);
    if diverged(&next) {
        return Err(SimError::Blowup {
            time: t + sim.dt,
            state: next,
        });
    }
    Ok(next)
}

/// Runs `kind` through `duty` under fuzzy-PID control.
///
/// The plant starts at rest at the first setpoint under the initial load, and
/// the PID integrator is preloaded with the valve command that holds it there.
/// Each step reads the setpoint, schedules the gains, updates the PID, holds
/// the valve command over the step, integrates and applies the stops. Energy
/// is the trapezoidal integral of pump outlet power at the step rate.
pub fn run_scenario(
    kind: CircuitKind,
    params: &CircuitParams,
    duty: &DutyCycle,
    controller: &FuzzyPid,
    sim: &SimConfig,
) -> Result<TimeSeriesLog, SimError> {
    params.validate()?;
    controller.validate()?;
    sim.validate(params.spool_time_constant)?;
    duty.validate(params.actuator.stroke_limit)?;
    let steps = sim.steps_for(duty.duration)?;
    let dt = sim.dt;

    let (mut state, hold_command) =
        circuits::equilibrium(kind, params, duty.initial_position(), duty.load_force(0.0));
    let mut pid = PidState::preloaded(
        control::controller_output_for(kind, hold_command),
        controller.tuner.center_gains().ki,
        &controller.limits,
    );

    let mut log = TimeSeriesLog {
        sample_interval: dt * sim.log_decimation as f64,
        samples: Vec::with_capacity(steps / sim.log_decimation + 1),
        phases: duty.phases(),
    };
    let mut previous_error: Option<f64> = None;
    let mut energy = 0.0;
    let mut previous_power = 0.0;

    for k in 0..=steps {
        let t = k as f64 * dt;
        let setpoint = duty.setpoint(t);
        let load = duty.load_force(t);
        let error = setpoint - state.position;
        let error_rate = previous_error.map_or(0.0, |p| (error - p) / dt);
        previous_error = Some(error);

        let (output, _, next_pid) = controller.step(&pid, error, error_rate, dt)?;
        pid = next_pid;
        let command = sim
            .command_override
            .unwrap_or_else(|| control::valve_command(kind, output));

        let flows = match circuits::derivatives(kind, &state, command, params, load) {
            Ok(ev) => ev.flows,
            Err(CircuitError::NonFiniteState(s)) => return Err(SimError::Blowup { time: t, state: s }),
            Err(e) => return Err(e.into()),
        };
        let power = hydraulic_power(flows.supply_pressure, flows.pump);
        if k > 0 {
            energy += 0.5 * (power + previous_power) * dt;
        }
        previous_power = power;

        if k % sim.log_decimation == 0 {
            log.samples.push(Sample {
                t,
                position: state.position,
                velocity: state.velocity,
                pressure_bore: state.pressure_bore,
                pressure_rod: state.pressure_rod,
                spool: state.spool,
                setpoint,
                command,
                pump_flow: flows.pump,
                to_actuator: flows.to_actuator,
                from_actuator: flows.from_actuator,
                bypass: flows.bypass,
                supply_pressure: flows.supply_pressure,
                power,
                energy,
            });
        }
        if k == steps {
            break;
        }
        state = advance(kind, params, sim, &state, command, load, t)?;
    }
    Ok(log)
}

/// Largest position difference between two logs on their common sample grid.
/// The finer log must sample at an integer multiple of the coarser rate.
pub fn trajectory_deviation(coarse: &TimeSeriesLog, fine: &TimeSeriesLog) -> f64 {
    let ratio = (coarse.sample_interval / fine.sample_interval).round().max(1.0) as usize;
    coarse
        .samples
        .iter()
        .zip(fine.samples.iter().step_by(ratio))
        .map(|(a, b)| (a.position - b.position).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub steps: Vec<f64>,
    /// Deviation between each run and the next finer one.
    pub successive: Vec<f64>,
    /// Largest deviation over all pairs of runs.
    pub max_deviation: f64,
}

/// Runs the same scenario at each step in `dt_list` (coarsest first) and
/// compares the position trajectories on the coarsest log grid.
pub fn convergence_check(
    kind: CircuitKind,
    params: &CircuitParams,
    duty: &DutyCycle,
    controller: &FuzzyPid,
    base: &SimConfig,
    dt_list: &[f64],
) -> Result<ConvergenceReport, SimError> {
    if dt_list.is_empty() || dt_list.windows(2).any(|w| w[1] > w[0]) {
        return Err(SimError::Config {
            field: "dt_list",
            message: "must be non-empty and sorted descending".into(),
        });
    }
    let spacing = dt_list[0] * base.log_decimation as f64;
    let logs = dt_list
        .iter()
        .map(|&dt| {
            let sim = SimConfig {
                dt,
                log_decimation: (spacing / dt).round().max(1.0) as usize,
                ..*base
            };
            run_scenario(kind, params, duty, controller, &sim)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let successive = logs
        .windows(2)
        .map(|w| trajectory_deviation(&w[0], &w[1]))
        .collect();
    let mut max_deviation: f64 = 0.0;
    for i in 0..logs.len() {
        for j in i + 1..logs.len() {
            max_deviation = max_deviation.max(trajectory_deviation(&logs[i], &logs[j]));
        }
    }
    Ok(ConvergenceReport {
        steps: dt_list.to_vec(),
        successive,
        max_deviation,
    })
}
