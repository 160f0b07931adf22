//! Scenario files.
//!
//! A scenario is a TOML document holding every plant, controller and run
//! parameter. Parsing is strict: unknown keys are rejected, and every
//! diagnostic carries the line it refers to when one can be found.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::circuits::{BypassFlowLaw, CircuitError, CircuitParams};
use crate::control::{
    ControlError, FuzzyPid, FuzzyTuner, GainRange, GainRanges, GainRules, PidGains,
    PidLimits, RuleTable,
};
use crate::physics::{
    ActuatorParams, FluidProperties, LoadParams, PhysicsError, PumpParams, ReliefValveParams,
    ValveParams,
};
use crate::sim::{DutyCycle, IntegratorKind, SimConfig, SimError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown key `{key}`{}", at_line(*.line))]
    UnknownKey { key: String, line: Option<usize> },
    #[error("schema error{}: {message}", at_line(*.line))]
    Schema { line: Option<usize>, message: String },
    #[error("invalid `{field}`{}: {message}", at_line(*.line))]
    Invalid {
        field: String,
        line: Option<usize>,
        message: String,
    },
}

fn at_line(line: Option<usize>) -> String {
    line.map(|l| format!(" at line {l}")).unwrap_or_default()
}

impl ConfigError {
    /// Stable machine-readable class of the error.
    pub fn kind(&self) -> &'static str {
        match self {
            ConfigError::Syntax { .. } => "syntax",
            ConfigError::UnknownKey { .. } => "unknown_key",
            ConfigError::Schema { .. } => "schema",
            ConfigError::Invalid { .. } => "invalid",
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Syntax { line, .. } => Some(*line),
            ConfigError::UnknownKey { line, .. }
            | ConfigError::Schema { line, .. }
            | ConfigError::Invalid { line, .. } => *line,
        }
    }
}

/// PFCV bypass valve: the valve coefficients plus the flow law to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BypassValveSection {
    pub flow_gain: f64,
    pub flow_pressure_coeff: f64,
    pub leakage_coeff: f64,
    pub discharge_coeff: f64,
    pub max_area: f64,
    pub spool_limit: f64,
    #[serde(default)]
    pub flow_law: BypassFlowLaw,
}

impl BypassValveSection {
    fn valve(&self) -> ValveParams {
        ValveParams {
            flow_gain: self.flow_gain,
            flow_pressure_coeff: self.flow_pressure_coeff,
            leakage_coeff: self.leakage_coeff,
            discharge_coeff: self.discharge_coeff,
            max_area: self.max_area,
            spool_limit: self.spool_limit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpoolSection {
    /// s
    pub time_constant: f64,
}

fn default_spread() -> f64 {
    0.5
}

fn default_output_min() -> f64 {
    -1.0
}

fn default_output_max() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerSection {
    /// Baseline gains; the fuzzy ranges are spread around them.
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    #[serde(default = "default_spread")]
    pub gain_spread: f64,
    /// m
    pub error_range: f64,
    /// m/s
    pub error_rate_range: f64,
    #[serde(default = "default_output_min")]
    pub output_min: f64,
    #[serde(default = "default_output_max")]
    pub output_max: f64,
    /// m·s; unbounded when absent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integral_limit: Option<f64>,
    /// s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative_filter: Option<f64>,
    /// Explicit gain ranges, replacing `gain_spread`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_ranges: Option<GainRanges>,
    /// Rule tables, replacing the built-in ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<GainRules>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationSection {
    /// Pa. Lower end of the relief search; just above the peak static
    /// load pressure when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relief_min: Option<f64>,
    /// Pa. Upper end of the relief search; three times the lower end when
    /// absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relief_max: Option<f64>,
    /// Pump flow margins over peak demand to try, in order. Empty keeps the
    /// configured pump flow.
    pub supply_margins: Vec<f64>,
}

/// The scenario document as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub fluid: FluidProperties,
    pub actuator: ActuatorParams,
    pub load: LoadParams,
    pub control_valve: ValveParams,
    pub bypass_valve: BypassValveSection,
    pub relief: ReliefValveParams,
    pub pump: PumpParams,
    pub spool: SpoolSection,
    pub duty: DutyCycle,
    pub controller: ControllerSection,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub calibration: CalibrationSection,
}

/// A parsed and validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub file: ScenarioFile,
    pub params: CircuitParams,
    pub duty: DutyCycle,
    pub controller: FuzzyPid,
    pub sim: SimConfig,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn table_header(line: &str) -> Option<String> {
    let l = line.trim();
    let inner = l.strip_prefix("[[").and_then(|r| r.strip_suffix("]]"));
    let inner = inner.or_else(|| l.strip_prefix('[').and_then(|r| r.strip_suffix(']')))?;
    let bare = |c: char| c.is_ascii_alphanumeric() || "_-. ".contains(c);
    if inner.is_empty() || !inner.chars().all(bare) {
        return None;
    }
    Some(inner.split('.').map(str::trim).collect::<Vec<_>>().join("."))
}

fn key_of(line: &str) -> Option<&str> {
    let (k, _) = line.split_once('=')?;
    let k = k.trim().trim_matches('"');
    (!k.is_empty() && !k.starts_with('#')).then_some(k)
}

/// Line of the dotted `path` in `text`, falling back to its table header.
pub fn locate(text: &str, path: &str) -> Option<usize> {
    let parts: Vec<&str> = path
        .split('.')
        .filter(|p| p.parse::<usize>().is_err())
        .collect();
    let mut table = String::new();
    let mut header_line = None;
    let mut best = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if let Some(h) = table_header(line) {
            table = h;
            if table == parts.join(".") {
                best = best.or(Some(i + 1));
            }
            for n in (1..parts.len()).rev() {
                if table == parts[..n].join(".") && header_line.map_or(true, |(len, _)| n > len) {
                    header_line = Some((n, i + 1));
                }
            }
            continue;
        }
        if let Some(k) = key_of(line) {
            let full = if table.is_empty() {
                k.to_string()
            } else {
                format!("{table}.{k}")
            };
            if full == parts.join(".") {
                return Some(i + 1);
            }
            for n in (1..parts.len()).rev() {
                if full == parts[..n].join(".") && header_line.map_or(true, |(len, _)| n > len) {
                    header_line = Some((n, i + 1));
                }
            }
        }
    }
    best.or(header_line.map(|(_, l)| l))
}

/// Parses and validates a scenario document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        ConfigError::Syntax {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })?;
    let mut unknown = Vec::new();
    let file: Result<ScenarioFile, _> =
        serde_ignored::deserialize(de, |path| unknown.push(path.to_string()));
    if let Some(key) = unknown.into_iter().next() {
        let line = locate(text, &key);
        return Err(ConfigError::UnknownKey { key, line });
    }
    let file = file.map_err(|e| ConfigError::Schema {
        line: e.span().map(|s| line_col(text, s.start).0),
        message: e.message().trim().to_string(),
    })?;
    ScenarioConfig::from_file(file).map_err(|e| match e {
        ConfigError::Invalid { field, message, .. } => ConfigError::Invalid {
            line: locate(text, &field),
            field,
            message,
        },
        other => other,
    })
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        line: None,
        message: message.into(),
    }
}

fn from_circuit(e: CircuitError) -> ConfigError {
    match e {
        CircuitError::Physics(PhysicsError::Domain { name, reason }) => invalid(name, reason),
        CircuitError::Physics(PhysicsError::NonFinite(block)) => {
            invalid(block, "values must be finite")
        }
        CircuitError::SpoolTimeConstant => invalid("spool.time_constant", "must be > 0"),
        other => invalid("plant", other.to_string()),
    }
}

fn from_sim(e: SimError) -> ConfigError {
    match e {
        SimError::Config { field, message } => invalid(field, message),
        other => invalid("sim", other.to_string()),
    }
}

fn from_control(e: ControlError) -> ConfigError {
    invalid("controller", e.to_string())
}

impl ScenarioConfig {
    /// Validates a document and builds the module-level types from it.
    pub fn from_file(file: ScenarioFile) -> Result<Self, ConfigError> {
        let params = CircuitParams {
            fluid: file.fluid,
            actuator: file.actuator,
            load: file.load,
            control_valve: file.control_valve,
            bypass_valve: file.bypass_valve.valve(),
            bypass_law: file.bypass_valve.flow_law,
            relief: file.relief,
            pump: file.pump,
            spool_time_constant: file.spool.time_constant,
        };
        params.validate().map_err(from_circuit)?;

        let c = &file.controller;
        for (name, v) in [("kp", c.kp), ("ki", c.ki), ("kd", c.kd)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("controller.{name}"), "must be finite and >= 0"));
            }
        }
        if !(c.gain_spread > 0.0 && c.gain_spread < 1.0) {
            return Err(invalid("controller.gain_spread", "must be in (0, 1)"));
        }
        for (name, v) in [
            ("error_range", c.error_range),
            ("error_rate_range", c.error_rate_range),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("controller.{name}"), "must be finite and > 0"));
            }
        }
        if !(c.output_min.is_finite() && c.output_max.is_finite() && c.output_min < c.output_max) {
            return Err(invalid("controller.output_max", "output_min must be < output_max"));
        }
        if let Some(l) = c.integral_limit {
            if !(l > 0.0) {
                return Err(invalid("controller.integral_limit", "must be > 0"));
            }
        }
        if let Some(tau) = c.derivative_filter {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(invalid("controller.derivative_filter", "must be finite and > 0"));
            }
        }
        let ranges = c.gain_ranges.unwrap_or(GainRanges {
            kp: GainRange::around(c.kp, c.gain_spread),
            ki: GainRange::around(c.ki, c.gain_spread),
            kd: GainRange::around(c.kd, c.gain_spread),
        });
        let field = if c.gain_ranges.is_some() {
            "controller.gain_ranges"
        } else {
            "controller"
        };
        for (name, r) in [("kp", ranges.kp), ("ki", ranges.ki), ("kd", ranges.kd)] {
            if !(r.min.is_finite() && r.max.is_finite() && r.min >= 0.0 && r.min < r.max) {
                return Err(invalid(
                    format!("{field}.{name}"),
                    format!("gain range must satisfy 0 <= min < max, got [{}, {}]", r.min, r.max),
                ));
            }
        }
        let rules = c.rules.unwrap_or_default();
        for (name, t) in [("kp", &rules.kp), ("ki", &rules.ki), ("kd", &rules.kd)] {
            if !t.is_sign_symmetric() {
                return Err(invalid(
                    format!("controller.rules.{name}"),
                    "table must be symmetric under sign flip of both inputs",
                ));
            }
        }
        let controller = FuzzyPid {
            tuner: FuzzyTuner {
                error_range: c.error_range,
                error_rate_range: c.error_rate_range,
                rules,
                ranges,
            },
            limits: PidLimits {
                output_min: c.output_min,
                output_max: c.output_max,
                integral_limit: c.integral_limit.unwrap_or(f64::INFINITY),
                derivative_filter: c.derivative_filter,
            },
        };
        controller.validate().map_err(from_control)?;

        file.sim
            .validate(params.spool_time_constant)
            .map_err(from_sim)?;
        file.duty
            .validate(params.actuator.stroke_limit)
            .map_err(from_sim)?;
        file.sim.steps_for(file.duty.duration).map_err(from_sim)?;

        let cal = &file.calibration;
        for (name, v) in [("relief_min", cal.relief_min), ("relief_max", cal.relief_max)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(invalid(format!("calibration.{name}"), "must be finite and > 0"));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (cal.relief_min, cal.relief_max) {
            if lo >= hi {
                return Err(invalid("calibration.relief_max", "must exceed relief_min"));
            }
        }
        if cal.supply_margins.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(invalid("calibration.supply_margins", "margins must be finite and >= 0"));
        }
        if !cal.supply_margins.is_empty() && file.duty.peak_speed() <= 0.0 {
            return Err(invalid(
                "calibration.supply_margins",
                "duty cycle has no motion to size the pump against",
            ));
        }

        Ok(ScenarioConfig {
            params,
            duty: file.duty.clone(),
            controller,
            sim: file.sim,
            file,
        })
    }

    pub fn base_gains(&self) -> PidGains {
        let c = &self.file.controller;
        PidGains {
            kp: c.kp,
            ki: c.ki,
            kd: c.kd,
        }
    }

    /// SHA-256 of the canonical JSON form of the document, so formatting,
    /// comments and key order do not change it.
    pub fn digest(&self) -> String {
        let canonical =
            serde_json::to_vec(&self.file).expect("scenario documents serialise to JSON");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Static pressure the cylinder needs to hold the largest load at the
    /// furthest setpoint, Pa.
    pub fn peak_load_pressure(&self) -> f64 {
        let x_max = self
            .duty
            .setpoints
            .iter()
            .map(|p| p.1)
            .fold(0.0, f64::max);
        (self.duty.peak_load() + self.params.load.load_stiffness * x_max)
            / self.params.actuator.piston_area
    }
}

/// Shortest representation that parses back to the same `f64`, in
/// exponent form for very large or small magnitudes.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-3..1e6).contains(&a) {
        return format!("{x:e}");
    }
    let s = format!("{x:?}");
    if s.contains(['.', 'e', 'E']) {
        s
    } else {
        format!("{s}.0")
    }
}

fn table(t: &RuleTable) -> String {
    let rows: Vec<String> = t
        .0
        .iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|&l| format!("\"{}\"", l.label())).collect();
            format!("  [{}],", cells.join(", "))
        })
        .collect();
    format!("[\n{}\n]", rows.join("\n"))
}

struct Writer<'a> {
    out: String,
    notes: &'a BTreeMap<String, String>,
    section: &'static str,
}

impl Writer<'_> {
    fn section(&mut self, name: &'static str, comment: &str) {
        if !self.out.is_empty() {
            self.out.push('\n');
        }
        for line in comment.lines() {
            let _ = writeln!(self.out, "# {line}");
        }
        let _ = writeln!(self.out, "[{name}]");
        self.section = name;
    }

    fn key(&mut self, key: &str, value: String, unit: &str) {
        if let Some(note) = self.notes.get(&format!("{}.{key}", self.section)) {
            for line in note.lines() {
                let _ = writeln!(self.out, "# {line}");
            }
        }
        if unit.is_empty() {
            let _ = writeln!(self.out, "{key} = {value}");
        } else {
            let _ = writeln!(self.out, "{key} = {value}  # {unit}");
        }
    }
}

impl ScenarioFile {
    /// Renders the document as commented TOML. `notes` maps dotted key paths
    /// to comment lines written above the key; `header` goes at the top.
    pub fn render(&self, header: &str, notes: &BTreeMap<String, String>) -> String {
        let mut w = Writer {
            out: String::new(),
            notes,
            section: "",
        };
        for line in header.lines() {
            let _ = writeln!(w.out, "# {line}");
        }

        w.section("fluid", "");
        w.key("bulk_modulus", num(self.fluid.bulk_modulus), "Pa");
        w.key("density", num(self.fluid.density), "kg/m^3");

        w.section("actuator", "");
        let a = &self.actuator;
        w.key("piston_area", num(a.piston_area), "m^2, both sides");
        w.key("chamber_volume", num(a.chamber_volume), "m^3, per chamber");
        w.key("leakage_resistance", num(a.leakage_resistance), "Pa s/m^3, piston seal");
        w.key("stroke_limit", num(a.stroke_limit), "m");

        w.section("load", "");
        w.key("mass", num(self.load.mass), "kg");
        w.key("viscous_coeff", num(self.load.viscous_coeff), "N s/m");
        w.key("load_stiffness", num(self.load.load_stiffness), "N/m");

        w.section("control_valve", "directional valve of the PDCV circuit");
        let v = &self.control_valve;
        w.key("flow_gain", num(v.flow_gain), "(m^3/s)/m");
        w.key("flow_pressure_coeff", num(v.flow_pressure_coeff), "(m^3/s)/Pa");
        w.key("leakage_coeff", num(v.leakage_coeff), "(m^3/s)/Pa");
        w.key("discharge_coeff", num(v.discharge_coeff), "");
        w.key("max_area", num(v.max_area), "m^2");
        w.key("spool_limit", num(v.spool_limit), "m");

        w.section("bypass_valve", "flow-control valve of the PFCV circuit");
        let b = &self.bypass_valve;
        w.key("flow_gain", num(b.flow_gain), "(m^3/s)/m, linear law only");
        w.key("flow_pressure_coeff", num(b.flow_pressure_coeff), "(m^3/s)/Pa");
        w.key("leakage_coeff", num(b.leakage_coeff), "(m^3/s)/Pa, linear law only");
        w.key("discharge_coeff", num(b.discharge_coeff), "");
        w.key("max_area", num(b.max_area), "m^2");
        w.key("spool_limit", num(b.spool_limit), "m");
        let law = match b.flow_law {
            BypassFlowLaw::Orifice => "orifice",
            BypassFlowLaw::Linear => "linear",
        };
        w.key("flow_law", format!("\"{law}\""), "orifice | linear");

        w.section("relief", "");
        w.key("cracking_pressure", num(self.relief.cracking_pressure), "Pa");
        w.key("override_gradient", num(self.relief.override_gradient), "(m^3/s)/Pa");

        w.section("pump", "");
        w.key("supply_flow", num(self.pump.supply_flow), "m^3/s");

        w.section("spool", "");
        w.key("time_constant", num(self.spool.time_constant), "s");

        w.section("duty", "");
        let pairs = |pts: &[(f64, f64)]| {
            let items: Vec<String> = pts
                .iter()
                .map(|&(t, x)| format!("[{}, {}]", num(t), num(x)))
                .collect();
            format!("[{}]", items.join(", "))
        };
        w.key("setpoints", pairs(&self.duty.setpoints), "[s, m], linear between points");
        w.key("loads", pairs(&self.duty.loads), "[s, N], held until the next step");
        w.key("duration", num(self.duty.duration), "s");

        w.section("controller", "");
        let c = &self.controller;
        w.key("kp", num(c.kp), "1/m");
        w.key("ki", num(c.ki), "1/(m s)");
        w.key("kd", num(c.kd), "s/m");
        w.key("gain_spread", num(c.gain_spread), "fraction around the base gains");
        w.key("error_range", num(c.error_range), "m");
        w.key("error_rate_range", num(c.error_rate_range), "m/s");
        w.key("output_min", num(c.output_min), "");
        w.key("output_max", num(c.output_max), "");
        if let Some(l) = c.integral_limit {
            w.key("integral_limit", num(l), "m s");
        }
        if let Some(tau) = c.derivative_filter {
            w.key("derivative_filter", num(tau), "s");
        }
        if let Some(r) = &c.gain_ranges {
            w.section("controller.gain_ranges", "");
            for (name, g) in [("kp", r.kp), ("ki", r.ki), ("kd", r.kd)] {
                w.key(name, format!("{{ min = {}, max = {} }}", num(g.min), num(g.max)), "");
            }
        }
        if let Some(r) = &c.rules {
            w.section("controller.rules", "rows: error NL..PL, columns: error rate NL..PL");
            for (name, t) in [("kp", &r.kp), ("ki", &r.ki), ("kd", &r.kd)] {
                w.key(name, table(t), "");
            }
        }

        w.section("sim", "");
        w.key("dt", num(self.sim.dt), "s");
        w.key("log_decimation", self.sim.log_decimation.to_string(), "");
        let integ = match self.sim.integrator {
            IntegratorKind::Rk4 => "rk4",
            IntegratorKind::SemiImplicitEuler => "semi_implicit_euler",
        };
        w.key("integrator", format!("\"{integ}\""), "rk4 | semi_implicit_euler");
        if let Some(u) = self.sim.command_override {
            w.key("command_override", num(u), "");
        }

        let cal = &self.calibration;
        w.section("calibration", "");
        if let Some(v) = cal.relief_min {
            w.key("relief_min", num(v), "Pa");
        }
        if let Some(v) = cal.relief_max {
            w.key("relief_max", num(v), "Pa");
        }
        let margins: Vec<String> = cal.supply_margins.iter().map(|&m| num(m)).collect();
        w.key(
            "supply_margins",
            format!("[{}]", margins.join(", ")),
            "pump flow above peak demand, tried in order",
        );
        w.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Level;

    pub(crate) const SAMPLE: &str = include_str!("../scenarios/skeleton.toml");

    #[test]
    fn sample_parses() {
        let cfg = parse_config(SAMPLE).unwrap();
        assert_eq!(cfg.file.bypass_valve.flow_law, BypassFlowLaw::Orifice);
        assert_eq!(cfg.sim.integrator, IntegratorKind::Rk4);
    }

    #[test]
    fn render_round_trips() {
        let cfg = parse_config(SAMPLE).unwrap();
        let text = cfg.file.render("regenerated", &BTreeMap::new());
        let again = parse_config(&text).unwrap();
        assert_eq!(again.file, cfg.file);
        assert_eq!(again.digest(), cfg.digest());
    }

    #[test]
    fn digest_ignores_layout() {
        let cfg = parse_config(SAMPLE).unwrap();
        let spaced = SAMPLE.replace(" = ", "   =   ").replace("\n[", "\n\n# moved\n[");
        assert_eq!(parse_config(&spaced).unwrap().digest(), cfg.digest());
    }

    #[test]
    fn unknown_key_is_located() {
        let text = SAMPLE.replace("[pump]\n", "[pump]\nefficiency = 0.9\n");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.kind(), "unknown_key");
        match &err {
            ConfigError::UnknownKey { key, line } => {
                assert_eq!(key, "pump.efficiency");
                let l = line.unwrap();
                assert_eq!(text.lines().nth(l - 1).unwrap().trim(), "efficiency = 0.9");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let text = SAMPLE.replacen("[fluid]", "[fluid", 1);
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.kind(), "syntax");
        assert!(err.line().is_some());
    }

    #[test]
    fn invariant_names_field_and_line() {
        let text = SAMPLE.replace("dt = 0.001", "dt = -0.001");
        let err = parse_config(&text).unwrap_err();
        match &err {
            ConfigError::Invalid { field, line, .. } => {
                assert_eq!(field, "sim.dt");
                assert!(text.lines().nth(line.unwrap() - 1).unwrap().starts_with("dt ="));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_block_is_schema_error() {
        let start = SAMPLE.find("[pump]").unwrap();
        let end = start + SAMPLE[start..].find("\n\n").unwrap();
        let text = format!("{}{}", &SAMPLE[..start], &SAMPLE[end..]);
        assert_eq!(parse_config(&text).unwrap_err().kind(), "schema");
    }

    #[test]
    fn optional_blocks_default() {
        let start = SAMPLE.find("[sim]").unwrap();
        let end = start + SAMPLE[start..].find("\n\n").unwrap();
        let text = format!("{}{}", &SAMPLE[..start], &SAMPLE[end..]);
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.sim, SimConfig::default());
    }

    #[test]
    fn asymmetric_rules_rejected() {
        let cfg = parse_config(SAMPLE).unwrap();
        let mut file = cfg.file.clone();
        let mut rules = GainRules::default();
        rules.kp.0[0][0] = Level::Medium;
        file.controller.rules = Some(rules);
        let text = file.render("", &BTreeMap::new());
        match parse_config(&text).unwrap_err() {
            ConfigError::Invalid { field, line, .. } => {
                assert_eq!(field, "controller.rules.kp");
                assert!(line.is_some());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn notes_are_written_above_keys() {
        let cfg = parse_config(SAMPLE).unwrap();
        let mut notes = BTreeMap::new();
        notes.insert("relief.cracking_pressure".to_string(), "set by search".to_string());
        let text = cfg.file.render("", &notes);
        assert!(text.contains("# set by search\ncracking_pressure = "));
    }
}
