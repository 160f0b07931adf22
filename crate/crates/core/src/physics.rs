//! Component-level physics of the hydraulic circuit.
//!
//! Every term used by the circuit models is a free function here so that it
//! can be checked in isolation. All quantities are SI: pressures in Pa, flows
//! in m³/s, lengths in m, forces in N.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysicsError {
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),
    #[error("{name} out of domain: {reason}")]
    Domain { name: String, reason: &'static str },
}

fn finite(op: &'static str, values: &[f64]) -> Result<(), PhysicsError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(PhysicsError::NonFinite(op))
    }
}

fn require(ok: bool, name: &'static str, reason: &'static str) -> Result<(), PhysicsError> {
    if ok {
        Ok(())
    } else {
        Err(PhysicsError::Domain {
            name: name.to_string(),
            reason,
        })
    }
}

/// Hydraulic oil properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidProperties {
    /// Pa
    pub bulk_modulus: f64,
    /// kg/m³
    pub density: f64,
}

impl FluidProperties {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        finite("fluid", &[self.bulk_modulus, self.density])?;
        require(self.bulk_modulus > 0.0, "fluid.bulk_modulus", "must be > 0")?;
        require(self.density > 0.0, "fluid.density", "must be > 0")
    }
}

/// Cylinder geometry. A single effective area is used on both sides of the
/// piston.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorParams {
    /// m²
    pub piston_area: f64,
    /// m³, per chamber
    pub chamber_volume: f64,
    /// Pa·s/m³, across the piston seal
    pub leakage_resistance: f64,
    /// m
    pub stroke_limit: f64,
}

impl ActuatorParams {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        finite(
            "actuator",
            &[
                self.piston_area,
                self.chamber_volume,
                self.leakage_resistance,
                self.stroke_limit,
            ],
        )?;
        require(self.piston_area > 0.0, "actuator.piston_area", "must be > 0")?;
        require(self.chamber_volume > 0.0, "actuator.chamber_volume", "must be > 0")?;
        require(
            self.leakage_resistance > 0.0,
            "actuator.leakage_resistance",
            "must be > 0",
        )?;
        require(self.stroke_limit > 0.0, "actuator.stroke_limit", "must be > 0")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadParams {
    /// kg
    pub mass: f64,
    /// N·s/m
    pub viscous_coeff: f64,
    /// N/m
    pub load_stiffness: f64,
}

impl LoadParams {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        finite("load", &[self.mass, self.viscous_coeff, self.load_stiffness])?;
        require(self.mass > 0.0, "load.mass", "must be > 0")?;
        require(self.viscous_coeff >= 0.0, "load.viscous_coeff", "must be >= 0")?;
        require(self.load_stiffness >= 0.0, "load.load_stiffness", "must be >= 0")
    }
}

/// Proportional valve coefficients. The linear coefficients describe the
/// valve around an operating point; the orifice coefficients describe the
/// metering edge itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValveParams {
    /// (m³/s)/m
    pub flow_gain: f64,
    /// (m³/s)/Pa
    pub flow_pressure_coeff: f64,
    /// (m³/s)/Pa
    pub leakage_coeff: f64,
    pub discharge_coeff: f64,
    /// m², metering area at full spool stroke
    pub max_area: f64,
    /// m
    pub spool_limit: f64,
}

impl ValveParams {
    pub fn validate(&self, prefix: &'static str) -> Result<(), PhysicsError> {
        finite(
            prefix,
            &[
                self.flow_gain,
                self.flow_pressure_coeff,
                self.leakage_coeff,
                self.discharge_coeff,
                self.max_area,
                self.spool_limit,
            ],
        )?;
        let field = |name: &str| format!("{prefix}.{name}");
        let check = |ok: bool, name: &str, reason: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(PhysicsError::Domain {
                    name: field(name),
                    reason,
                })
            }
        };
        check(self.flow_gain > 0.0, "flow_gain", "must be > 0")?;
        check(self.flow_pressure_coeff >= 0.0, "flow_pressure_coeff", "must be >= 0")?;
        check(self.leakage_coeff >= 0.0, "leakage_coeff", "must be >= 0")?;
        check(
            self.discharge_coeff > 0.0 && self.discharge_coeff <= 1.0,
            "discharge_coeff",
            "must be in (0, 1]",
        )?;
        check(self.max_area > 0.0, "max_area", "must be > 0")?;
        check(self.spool_limit > 0.0, "spool_limit", "must be > 0")
    }

    /// Metering area for a spool displacement; negative displacement closes
    /// the edge.
    pub fn opening_area(&self, spool: f64) -> f64 {
        self.max_area * (spool / self.spool_limit).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliefValveParams {
    /// Pa
    pub cracking_pressure: f64,
    /// (m³/s)/Pa above cracking
    pub override_gradient: f64,
}

impl ReliefValveParams {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        finite("relief", &[self.cracking_pressure, self.override_gradient])?;
        require(
            self.cracking_pressure > 0.0,
            "relief.cracking_pressure",
            "must be > 0",
        )?;
        require(
            self.override_gradient > 0.0,
            "relief.override_gradient",
            "must be > 0",
        )
    }

    /// Pressure at which the valve passes `flow`. Inverse of
    /// [`relief_valve_flow`] for positive flows.
    pub fn pressure_at_flow(&self, flow: f64) -> f64 {
        self.cracking_pressure + flow / self.override_gradient
    }
}

/// Fixed-displacement pump at constant speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpParams {
    /// m³/s
    pub supply_flow: f64,
}

impl PumpParams {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        finite("pump", &[self.supply_flow])?;
        require(self.supply_flow > 0.0, "pump.supply_flow", "must be > 0")
    }
}

/// Turbulent orifice law, `sign(dp) * Cd * A * sqrt(2|dp|/rho)`.
pub fn orifice_flow(
    discharge_coeff: f64,
    area: f64,
    pressure_drop: f64,
    density: f64,
) -> Result<f64, PhysicsError> {
    finite("orifice_flow", &[discharge_coeff, area, pressure_drop, density])?;
    require(
        discharge_coeff > 0.0 && discharge_coeff <= 1.0,
        "discharge_coeff",
        "must be in (0, 1]",
    )?;
    require(area >= 0.0, "area", "must be >= 0")?;
    require(density > 0.0, "density", "must be > 0")?;
    let magnitude = discharge_coeff * area * (2.0 * pressure_drop.abs() / density).sqrt();
    Ok(if pressure_drop < 0.0 { -magnitude } else { magnitude })
}

/// Linearised valve flow `Kq * xv - Kc * PL`.
pub fn linear_valve_flow(
    flow_gain: f64,
    spool: f64,
    flow_pressure_coeff: f64,
    load_pressure: f64,
) -> Result<f64, PhysicsError> {
    finite(
        "linear_valve_flow",
        &[flow_gain, spool, flow_pressure_coeff, load_pressure],
    )?;
    Ok(flow_gain * spool - flow_pressure_coeff * load_pressure)
}

/// Pressure rise in a compliant volume fed by a net inflow.
pub fn chamber_pressure_rate(
    net_flow: f64,
    volume: f64,
    bulk_modulus: f64,
) -> Result<f64, PhysicsError> {
    finite("chamber_pressure_rate", &[net_flow, volume, bulk_modulus])?;
    require(volume > 0.0, "volume", "must be > 0")?;
    require(bulk_modulus > 0.0, "bulk_modulus", "must be > 0")?;
    Ok(bulk_modulus * net_flow / volume)
}

/// Leakage across the piston from chamber 1 to chamber 2.
pub fn internal_leakage(p1: f64, p2: f64, resistance: f64) -> Result<f64, PhysicsError> {
    finite("internal_leakage", &[p1, p2, resistance])?;
    require(resistance > 0.0, "leakage_resistance", "must be > 0")?;
    Ok((p1 - p2) / resistance)
}

/// Newton's law for the piston and load: `(P*A - bv*v - K*X) / M`.
#[allow(clippy::too_many_arguments)]
pub fn load_acceleration(
    drive_pressure: f64,
    area: f64,
    mass: f64,
    viscous_coeff: f64,
    velocity: f64,
    stiffness: f64,
    position: f64,
) -> Result<f64, PhysicsError> {
    finite(
        "load_acceleration",
        &[
            drive_pressure,
            area,
            mass,
            viscous_coeff,
            velocity,
            stiffness,
            position,
        ],
    )?;
    require(mass > 0.0, "mass", "must be > 0")?;
    Ok((drive_pressure * area - viscous_coeff * velocity - stiffness * position) / mass)
}

/// Relief valve with a linear pressure-override characteristic above the
/// cracking pressure.
pub fn relief_valve_flow(pressure: f64, relief: &ReliefValveParams) -> f64 {
    if pressure > relief.cracking_pressure {
        relief.override_gradient * (pressure - relief.cracking_pressure)
    } else {
        0.0
    }
}

pub fn load_pressure(p1: f64, p2: f64) -> f64 {
    p1 - p2
}

pub fn load_flow(q1: f64, q2: f64) -> f64 {
    0.5 * (q1 + q2)
}

/// Power delivered at a port, W.
pub fn hydraulic_power(pressure: f64, flow: f64) -> f64 {
    pressure * flow
}
