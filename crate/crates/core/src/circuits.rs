//! The two plant models.
//!
//! * [`CircuitKind::Pdcv`]: a proportional directional valve meters pump flow
//!   into the cylinder and the relief valve dumps the rest at relief pressure.
//!   The chambers are reduced to a single load-pressure state; the bore and rod
//!   pressures are carried as an equal split about half the relief setting.
//! * [`CircuitKind::Pfcv`]: the directional valve is held fully open, the rod
//!   end is vented, and a proportional flow-control valve bleeds pump flow from
//!   the bore chamber to tank. The pump then works at load pressure.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physics::{
    self, ActuatorParams, FluidProperties, LoadParams, PhysicsError, PumpParams,
    ReliefValveParams, ValveParams,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("spool_time_constant must be > 0")]
    SpoolTimeConstant,
    #[error("non-finite circuit state {0:?}")]
    NonFiniteState(CircuitState),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircuitKind {
    Pdcv,
    Pfcv,
}

impl CircuitKind {
    pub const ALL: [CircuitKind; 2] = [CircuitKind::Pdcv, CircuitKind::Pfcv];

    pub fn as_str(self) -> &'static str {
        match self {
            CircuitKind::Pdcv => "pdcv",
            CircuitKind::Pfcv => "pfcv",
        }
    }
}

impl fmt::Display for CircuitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CircuitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pdcv" => Ok(CircuitKind::Pdcv),
            "pfcv" => Ok(CircuitKind::Pfcv),
            other => Err(format!("unknown circuit `{other}` (expected pdcv or pfcv)")),
        }
    }
}

/// How the bypass valve of the PFCV circuit is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BypassFlowLaw {
    /// `Cd * A(xv) * sqrt(2 P1 / rho)`
    #[default]
    Orifice,
    /// `Kq * xv - KL * P1`, using the bypass valve's linear coefficients.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub fluid: FluidProperties,
    pub actuator: ActuatorParams,
    pub load: LoadParams,
    /// Directional valve metering the cylinder in the PDCV circuit.
    pub control_valve: ValveParams,
    /// Flow-control valve bleeding the bore chamber in the PFCV circuit.
    pub bypass_valve: ValveParams,
    pub bypass_law: BypassFlowLaw,
    pub relief: ReliefValveParams,
    pub pump: PumpParams,
    /// s, first-order lag between command and spool position
    pub spool_time_constant: f64,
}

impl CircuitParams {
    pub fn validate(&self) -> Result<(), CircuitError> {
        self.fluid.validate()?;
        self.actuator.validate()?;
        self.load.validate()?;
        self.control_valve.validate("control_valve")?;
        self.bypass_valve.validate("bypass_valve")?;
        self.relief.validate()?;
        self.pump.validate()?;
        if !(self.spool_time_constant.is_finite() && self.spool_time_constant > 0.0) {
            return Err(CircuitError::SpoolTimeConstant);
        }
        Ok(())
    }

    /// Valve whose spool is driven by the controller in `kind`.
    pub fn driven_valve(&self, kind: CircuitKind) -> &ValveParams {
        match kind {
            CircuitKind::Pdcv => &self.control_valve,
            CircuitKind::Pfcv => &self.bypass_valve,
        }
    }

    /// Centre pressure about which the PDCV chamber pressures are split.
    pub fn pdcv_mid_pressure(&self) -> f64 {
        0.5 * self.relief.cracking_pressure
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CircuitState {
    /// m
    pub position: f64,
    /// m/s
    pub velocity: f64,
    /// Pa
    pub pressure_bore: f64,
    /// Pa
    pub pressure_rod: f64,
    /// m
    pub spool: f64,
}

pub const STATE_DIM: usize = 5;

impl CircuitState {
    pub fn to_array(&self) -> [f64; STATE_DIM] {
        [
            self.position,
            self.velocity,
            self.pressure_bore,
            self.pressure_rod,
            self.spool,
        ]
    }

    pub fn from_array(a: [f64; STATE_DIM]) -> Self {
        CircuitState {
            position: a[0],
            velocity: a[1],
            pressure_bore: a[2],
            pressure_rod: a[3],
            spool: a[4],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn load_pressure(&self) -> f64 {
        physics::load_pressure(self.pressure_bore, self.pressure_rod)
    }
}

/// Time derivative of [`CircuitState`], field for field.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateRate {
    pub position: f64,
    pub velocity: f64,
    pub pressure_bore: f64,
    pub pressure_rod: f64,
    pub spool: f64,
}

impl StateRate {
    pub fn to_array(&self) -> [f64; STATE_DIM] {
        [
            self.position,
            self.velocity,
            self.pressure_bore,
            self.pressure_rod,
            self.spool,
        ]
    }
}

/// Flow bookkeeping at one evaluation of the circuit.
///
/// PDCV: `to_actuator` is the pump flow passed by the directional valve to
/// whichever port is pressurised, `from_actuator` the return from the other
/// port, `bypass` the relief valve flow. `pump = to_actuator + bypass`.
///
/// PFCV: `to_actuator` is the pump flow arriving at the bore node,
/// `from_actuator` the part entering the cylinder and `bypass` the part
/// leaving through the flow-control valve. `to_actuator = bypass + from_actuator`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FlowBreakdown {
    pub pump: f64,
    pub to_actuator: f64,
    pub from_actuator: f64,
    pub bypass: f64,
    /// Pump outlet pressure, Pa.
    pub supply_pressure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub rate: StateRate,
    pub flows: FlowBreakdown,
}

/// Acceleration with the cylinder end stops able to react any force that
/// pushes the piston outward through them.
fn with_end_stops(position: f64, velocity: f64, accel: f64, stroke: f64) -> f64 {
    if (position <= 0.0 && velocity <= 0.0 && accel < 0.0)
        || (position >= stroke && velocity >= 0.0 && accel > 0.0)
    {
        0.0
    } else {
        accel
    }
}

fn spool_rate(command: f64, spool: f64, limit: f64, tau: f64) -> f64 {
    (command * limit - spool) / tau
}

fn check_state(state: &CircuitState) -> Result<(), CircuitError> {
    if state.is_finite() {
        Ok(())
    } else {
        Err(CircuitError::NonFiniteState(*state))
    }
}

/// Right-hand side of the PDCV circuit. `command` is clamped to `[-1, 1]`.
pub fn pdcv_derivatives(
    state: &CircuitState,
    command: f64,
    params: &CircuitParams,
    load_force: f64,
) -> Result<Evaluation, CircuitError> {
    check_state(state)?;
    let valve = &params.control_valve;
    let act = &params.actuator;
    let q_s = params.pump.supply_flow;

    let p_l = state.load_pressure();
    let q_valve = physics::linear_valve_flow(
        valve.flow_gain,
        state.spool,
        valve.flow_pressure_coeff,
        p_l,
    )?;
    // the valve cannot pass more than the pump delivers
    let q_l = q_valve.clamp(-q_s, q_s);
    let leak = physics::internal_leakage(state.pressure_bore, state.pressure_rod, act.leakage_resistance)?;
    let net = q_l - act.piston_area * state.velocity - leak;
    let dp_l = physics::chamber_pressure_rate(net, 0.5 * act.chamber_volume, params.fluid.bulk_modulus)?;

    let accel = physics::load_acceleration(
        p_l,
        act.piston_area,
        params.load.mass,
        params.load.viscous_coeff,
        state.velocity,
        params.load.load_stiffness,
        state.position,
    )? - load_force / params.load.mass;
    let accel = with_end_stops(state.position, state.velocity, accel, act.stroke_limit);

    let delivered = q_l.abs();
    let relief_flow = q_s - delivered;
    let supply_pressure = if relief_flow > 0.0 {
        params.relief.pressure_at_flow(relief_flow)
    } else {
        let driven = if q_l >= 0.0 {
            state.pressure_bore
        } else {
            state.pressure_rod
        };
        driven.max(0.0)
    };

    Ok(Evaluation {
        rate: StateRate {
            position: state.velocity,
            velocity: accel,
            pressure_bore: 0.5 * dp_l,
            pressure_rod: -0.5 * dp_l,
            spool: spool_rate(
                command.clamp(-1.0, 1.0),
                state.spool,
                valve.spool_limit,
                params.spool_time_constant,
            ),
        },
        flows: FlowBreakdown {
            pump: q_s,
            to_actuator: delivered,
            from_actuator: delivered,
            bypass: relief_flow,
            supply_pressure,
        },
    })
}

/// Flow through the PFCV bypass at bore pressure `p1`.
pub fn bypass_flow(params: &CircuitParams, spool: f64, p1: f64) -> Result<f64, PhysicsError> {
    let valve = &params.bypass_valve;
    match params.bypass_law {
        BypassFlowLaw::Orifice => physics::orifice_flow(
            valve.discharge_coeff,
            valve.opening_area(spool),
            p1,
            params.fluid.density,
        ),
        BypassFlowLaw::Linear => Ok(physics::linear_valve_flow(
            valve.flow_gain,
            spool.clamp(0.0, valve.spool_limit),
            valve.leakage_coeff,
            p1,
        )?
        .max(0.0)),
    }
}

/// Right-hand side of the PFCV circuit. `command` is the bypass opening,
/// clamped to `[0, 1]`; 0 closes the bypass.
pub fn pfcv_derivatives(
    state: &CircuitState,
    command: f64,
    params: &CircuitParams,
    load_force: f64,
) -> Result<Evaluation, CircuitError> {
    check_state(state)?;
    let act = &params.actuator;
    let p1 = state.pressure_bore;

    let q1 = params.pump.supply_flow;
    let q0 = bypass_flow(params, state.spool, p1)?;
    let q2 = q1 - q0;
    let leak = physics::internal_leakage(p1, 0.0, act.leakage_resistance)?;
    let net = q2 - act.piston_area * state.velocity - leak;
    let dp1 = physics::chamber_pressure_rate(net, act.chamber_volume, params.fluid.bulk_modulus)?;

    let accel = physics::load_acceleration(
        p1,
        act.piston_area,
        params.load.mass,
        params.load.viscous_coeff,
        state.velocity,
        params.load.load_stiffness,
        state.position,
    )? - load_force / params.load.mass;
    let accel = with_end_stops(state.position, state.velocity, accel, act.stroke_limit);

    Ok(Evaluation {
        rate: StateRate {
            position: state.velocity,
            velocity: accel,
            pressure_bore: dp1,
            pressure_rod: 0.0,
            spool: spool_rate(
                command.clamp(0.0, 1.0),
                state.spool,
                params.bypass_valve.spool_limit,
                params.spool_time_constant,
            ),
        },
        flows: FlowBreakdown {
            pump: q1,
            to_actuator: q1,
            from_actuator: q2,
            bypass: q0,
            supply_pressure: p1.max(0.0),
        },
    })
}

pub fn derivatives(
    kind: CircuitKind,
    state: &CircuitState,
    command: f64,
    params: &CircuitParams,
    load_force: f64,
) -> Result<Evaluation, CircuitError> {
    match kind {
        CircuitKind::Pdcv => pdcv_derivatives(state, command, params, load_force),
        CircuitKind::Pfcv => pfcv_derivatives(state, command, params, load_force),
    }
}

/// Hard stroke stops, cavitation floor and spool travel limits.
pub fn enforce_limits(kind: CircuitKind, state: &CircuitState, params: &CircuitParams) -> CircuitState {
    let mut s = *state;
    let stroke = params.actuator.stroke_limit;
    if s.position <= 0.0 {
        s.position = 0.0;
        s.velocity = s.velocity.max(0.0);
    } else if s.position >= stroke {
        s.position = stroke;
        s.velocity = s.velocity.min(0.0);
    }
    s.pressure_bore = s.pressure_bore.max(0.0);
    s.pressure_rod = match kind {
        CircuitKind::Pdcv => s.pressure_rod.max(0.0),
        CircuitKind::Pfcv => 0.0,
    };
    let limit = params.driven_valve(kind).spool_limit;
    s.spool = s.spool.clamp(-limit, limit);
    s
}

/// A state at rest at `position` under `load_force`, together with the valve
/// command that keeps it there.
pub fn equilibrium(
    kind: CircuitKind,
    params: &CircuitParams,
    position: f64,
    load_force: f64,
) -> (CircuitState, f64) {
    let act = &params.actuator;
    let p_l = ((load_force + params.load.load_stiffness * position) / act.piston_area).max(0.0);
    match kind {
        CircuitKind::Pdcv => {
            let valve = &params.control_valve;
            let needed = valve.flow_pressure_coeff * p_l + p_l / act.leakage_resistance;
            let spool = (needed / valve.flow_gain).clamp(-valve.spool_limit, valve.spool_limit);
            let mid = params.pdcv_mid_pressure();
            let state = CircuitState {
                position,
                velocity: 0.0,
                pressure_bore: mid + 0.5 * p_l,
                pressure_rod: (mid - 0.5 * p_l).max(0.0),
                spool,
            };
            (state, spool / valve.spool_limit)
        }
        CircuitKind::Pfcv => {
            let valve = &params.bypass_valve;
            let needed = (params.pump.supply_flow - p_l / act.leakage_resistance).max(0.0);
            let per_spool = match params.bypass_law {
                BypassFlowLaw::Orifice => {
                    valve.discharge_coeff * valve.max_area / valve.spool_limit
                        * (2.0 * p_l / params.fluid.density).sqrt()
                }
                BypassFlowLaw::Linear => valve.flow_gain,
            };
            let offset = match params.bypass_law {
                BypassFlowLaw::Orifice => 0.0,
                BypassFlowLaw::Linear => valve.leakage_coeff * p_l,
            };
            let spool = if per_spool > 0.0 {
                ((needed + offset) / per_spool).clamp(0.0, valve.spool_limit)
            } else {
                valve.spool_limit
            };
            let state = CircuitState {
                position,
                velocity: 0.0,
                pressure_bore: p_l,
                pressure_rod: 0.0,
                spool,
            };
            (state, spool / valve.spool_limit)
        }
    }
}

/// Linear bypass coefficients `(Kq, KL)` that reproduce the orifice law at
/// the operating point `(spool, p1)`.
///
/// The orifice flow is proportional to spool travel, so matching the value
/// and the spool slope at the point leaves no pressure term: `KL` comes out
/// as zero and the linear valve behaves as a pressure-compensated flow
/// control valve set for that point.
pub fn fit_linear_bypass(
    params: &CircuitParams,
    spool: f64,
    p1: f64,
) -> Result<(f64, f64), PhysicsError> {
    let valve = &params.bypass_valve;
    if !(spool > 0.0 && spool <= valve.spool_limit && p1 > 0.0) {
        return Err(PhysicsError::Domain {
            name: "linearisation point".into(),
            reason: "spool must be in (0, spool_limit] and pressure > 0",
        });
    }
    let q = physics::orifice_flow(
        valve.discharge_coeff,
        valve.opening_area(spool),
        p1,
        params.fluid.density,
    )?;
    let flow_gain = valve.discharge_coeff * valve.max_area / valve.spool_limit
        * (2.0 * p1 / params.fluid.density).sqrt();
    let leakage_coeff = ((flow_gain * spool - q) / p1).max(0.0);
    Ok((flow_gain, leakage_coeff))
}
