use serde::{Deserialize, Serialize};

use super::duty::PhaseSpan;

/// One logged instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub position: f64,
    pub velocity: f64,
    pub pressure_bore: f64,
    pub pressure_rod: f64,
    pub spool: f64,
    pub setpoint: f64,
    /// Valve command actually applied to the circuit.
    pub command: f64,
    pub pump_flow: f64,
    pub to_actuator: f64,
    pub from_actuator: f64,
    pub bypass: f64,
    pub supply_pressure: f64,
    /// W
    pub power: f64,
    /// J, integrated at the simulation step
    pub energy: f64,
}

/// Column names in CSV order.
pub const COLUMNS: [&str; 15] = [
    "t", "X", "v", "P1", "P2", "x_v", "setpoint", "u", "Q_s", "Q1", "Q2", "Q_bypass", "p_supply",
    "power_W", "energy_J",
];

impl Sample {
    pub fn values(&self) -> [f64; 15] {
        [
            self.t,
            self.position,
            self.velocity,
            self.pressure_bore,
            self.pressure_rod,
            self.spool,
            self.setpoint,
            self.command,
            self.pump_flow,
            self.to_actuator,
            self.from_actuator,
            self.bypass,
            self.supply_pressure,
            self.power,
            self.energy,
        ]
    }
}

/// Uniformly sampled trajectory of one run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeSeriesLog {
    /// Spacing between samples, s.
    pub sample_interval: f64,
    pub samples: Vec<Sample>,
    pub phases: Vec<PhaseSpan>,
}

impl TimeSeriesLog {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn final_sample(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.position)
    }
}
