//! Hydraulic cylinder position control with two bypass strategies: a
//! proportional directional valve backed by a relief valve, and a
//! proportional flow-control valve bleeding the pump flow at load pressure.

pub mod circuits;
pub mod config;
pub mod control;
pub mod energy;
pub mod harness;
pub mod physics;
pub mod sim;
