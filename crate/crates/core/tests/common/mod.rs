#![allow(dead_code)]

use std::convert::Infallible;

use hydrosim::circuits::{self, BypassFlowLaw, CircuitKind, CircuitParams, CircuitState};
use hydrosim::config::{parse_config, ScenarioConfig};
use hydrosim::control::{self, FuzzyTuner, PidGains, PidLimits, PidState};
use hydrosim::energy;
use hydrosim::physics::{
    self, ActuatorParams, FluidProperties, LoadParams, PumpParams, ReliefValveParams, ValveParams,
};
use hydrosim::sim::{rk4_step, DutyCycle, Phase, TimeSeriesLog};
use serde_json::Value;

pub const DEFAULT_SCENARIO: &str = include_str!("../../scenarios/default.toml");
pub const SKELETON_SCENARIO: &str = include_str!("../../scenarios/skeleton.toml");
pub const FIXTURES: &str = include_str!("../fixtures/derived_values.json");

pub fn default_config() -> ScenarioConfig {
    parse_config(DEFAULT_SCENARIO).expect("shipped scenario parses")
}

pub fn fixtures() -> Value {
    serde_json::from_str(FIXTURES).expect("fixture file is valid JSON")
}

pub fn rel_err(actual: f64, expected: f64) -> f64 {
    if actual == expected {
        return 0.0;
    }
    (actual - expected).abs() / expected.abs().max(f64::MIN_POSITIVE)
}

pub struct Check {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
}

impl Check {
    fn new(name: impl Into<String>, expected: f64, actual: f64) -> Self {
        Check {
            name: name.into(),
            expected,
            actual,
        }
    }

    /// Relative match, or absolute when the expected value is zero.
    pub fn passes(&self, tol: f64) -> bool {
        if self.expected == 0.0 {
            self.actual.abs() <= tol
        } else {
            rel_err(self.actual, self.expected) <= tol
        }
    }
}

fn num(v: &Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("fixture key {key} missing"))
}

pub fn fixture_params(fx: &Value) -> CircuitParams {
    let p = &fx["rhs_params"];
    CircuitParams {
        fluid: FluidProperties {
            bulk_modulus: num(p, "bulk_modulus"),
            density: num(p, "density"),
        },
        actuator: ActuatorParams {
            piston_area: num(p, "piston_area"),
            chamber_volume: num(p, "chamber_volume"),
            leakage_resistance: num(p, "leakage_resistance"),
            stroke_limit: num(p, "stroke_limit"),
        },
        load: LoadParams {
            mass: num(p, "mass"),
            viscous_coeff: num(p, "viscous_coeff"),
            load_stiffness: num(p, "load_stiffness"),
        },
        control_valve: ValveParams {
            flow_gain: num(p, "pdcv_flow_gain"),
            flow_pressure_coeff: num(p, "pdcv_flow_pressure_coeff"),
            leakage_coeff: 0.0,
            discharge_coeff: 0.7,
            max_area: 5e-6,
            spool_limit: num(p, "pdcv_spool_limit"),
        },
        bypass_valve: ValveParams {
            flow_gain: 0.2,
            flow_pressure_coeff: 0.0,
            leakage_coeff: 0.0,
            discharge_coeff: num(p, "bypass_discharge_coeff"),
            max_area: num(p, "bypass_max_area"),
            spool_limit: num(p, "bypass_spool_limit"),
        },
        bypass_law: BypassFlowLaw::Orifice,
        relief: ReliefValveParams {
            cracking_pressure: num(p, "cracking_pressure"),
            override_gradient: num(p, "override_gradient"),
        },
        pump: PumpParams {
            supply_flow: num(p, "supply_flow"),
        },
        spool_time_constant: num(p, "spool_time_constant"),
    }
}

/// Every fixture value next to what the library computes for it.
pub fn oracle_checks() -> Vec<Check> {
    let fx = fixtures();
    let f = |k: &str| num(&fx, k);
    let mut out = vec![
        Check::new(
            "orifice_flow",
            f("orifice_flow"),
            physics::orifice_flow(0.7, 1e-5, 1e6, 870.0).unwrap(),
        ),
        Check::new(
            "linear_valve_flow",
            f("linear_valve_flow"),
            physics::linear_valve_flow(2.0, 1e-3, 1e-11, 5e7).unwrap(),
        ),
        Check::new(
            "chamber_pressure_rate",
            f("chamber_pressure_rate"),
            physics::chamber_pressure_rate(1e-5, 1e-3, 1.4e9).unwrap(),
        ),
        Check::new(
            "internal_leakage",
            f("internal_leakage"),
            physics::internal_leakage(6e6, 4e6, 1e11).unwrap(),
        ),
        Check::new(
            "load_acceleration_push",
            f("load_acceleration_push"),
            physics::load_acceleration(1e6, 0.002, 100.0, 400.0, 0.0, 1e4, 0.0).unwrap(),
        ),
        Check::new(
            "load_acceleration_mixed",
            f("load_acceleration_mixed"),
            physics::load_acceleration(1e6, 0.002, 100.0, 400.0, 0.5, 1e4, 0.1).unwrap(),
        ),
        Check::new(
            "relief_valve_flow",
            f("relief_valve_flow"),
            physics::relief_valve_flow(
                2.1e7,
                &ReliefValveParams {
                    cracking_pressure: 2e7,
                    override_gradient: 1e-9,
                },
            ),
        ),
        Check::new(
            "hydraulic_power",
            f("hydraulic_power"),
            energy::hydraulic_power(1e7, 1e-4),
        ),
        Check::new(
            "saving_percent_table",
            f("saving_percent_table"),
            energy::saving_percent(30.47, 27.867),
        ),
    ];

    let gains = PidGains {
        kp: 0.0,
        ki: 1.0,
        kd: 0.0,
    };
    let limits = PidLimits::default();
    let mut state = PidState::default();
    let mut output = 0.0;
    for _ in 0..2 {
        let (o, next) = control::pid_step(&gains, &state, 0.01, 0.1, &limits).unwrap();
        output = o;
        state = next;
    }
    out.push(Check::new("pid_trapezoid_output", f("pid_trapezoid_output"), output));

    let y1 = rk4_step(|_, y: &[f64; 1]| Ok::<_, Infallible>([-y[0]]), 0.0, &[1.0], 0.1).unwrap()[0];
    out.push(Check::new("rk4_decay_step", f("rk4_decay_step"), y1));

    let params = fixture_params(&fx);
    let s = &fx["rhs_state"];
    let state = CircuitState {
        position: num(s, "X"),
        velocity: num(s, "v"),
        pressure_bore: num(s, "P1"),
        pressure_rod: num(s, "P2"),
        spool: num(s, "xv"),
    };
    let command = f("rhs_command");
    let load = f("rhs_load_force");
    for kind in CircuitKind::ALL {
        let ev = circuits::derivatives(kind, &state, command, &params, load).unwrap();
        let rates = &fx[format!("{kind}_rates")];
        for (key, actual) in [
            ("dX", ev.rate.position),
            ("dv", ev.rate.velocity),
            ("dP1", ev.rate.pressure_bore),
            ("dP2", ev.rate.pressure_rod),
            ("dxv", ev.rate.spool),
        ] {
            out.push(Check::new(format!("{kind}_rates.{key}"), num(rates, key), actual));
        }
        let flows = &fx[format!("{kind}_flows")];
        for (key, actual) in [
            ("pump", ev.flows.pump),
            ("to_actuator", ev.flows.to_actuator),
            ("from_actuator", ev.flows.from_actuator),
            ("bypass", ev.flows.bypass),
            ("supply_pressure", ev.flows.supply_pressure),
        ] {
            out.push(Check::new(format!("{kind}_flows.{key}"), num(flows, key), actual));
        }
    }
    out
}

/// Largest `|Q1 - Q0 - Q2| / max(|Q1|, Qs)` over a PFCV log.
pub fn continuity_residual(log: &TimeSeriesLog) -> f64 {
    log.samples
        .iter()
        .map(|s| {
            let scale = s.to_actuator.abs().max(s.pump_flow);
            (s.to_actuator - s.bypass - s.from_actuator).abs() / scale
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tracking {
    /// Largest |X - setpoint| at the end of a plateau, m.
    pub worst_plateau_error: f64,
    /// Whether every plateau was entered within tolerance before it ended.
    pub all_reached: bool,
    /// Largest overshoot past a step target as a fraction of the step size.
    pub worst_overshoot: f64,
}

/// Plateau and overshoot figures of a closed-loop log. Plateaus are the hold
/// spans after the first motion; `band` is the arrival tolerance, m.
pub fn tracking(log: &TimeSeriesLog, duty: &DutyCycle, band: f64) -> Tracking {
    let spans = duty.phases();
    let mut worst_plateau_error: f64 = 0.0;
    let mut all_reached = true;
    let mut worst_overshoot: f64 = 0.0;
    let in_span = |t: f64, a: f64, b: f64| t >= a - 1e-9 && t <= b + 1e-9;
    for (i, span) in spans.iter().enumerate() {
        if span.phase != Phase::Hold || i == 0 {
            continue;
        }
        let target = duty.setpoint(span.start);
        let samples: Vec<_> = log
            .samples
            .iter()
            .filter(|s| in_span(s.t, span.start, span.end))
            .collect();
        let reached = samples.iter().any(|s| (s.position - target).abs() <= band);
        let last = samples.last().map_or(f64::INFINITY, |s| (s.position - target).abs());
        all_reached &= reached && last <= band;
        worst_plateau_error = worst_plateau_error.max(last);

        let motion = &spans[i - 1];
        let from = duty.setpoint(motion.start);
        let step = target - from;
        if step != 0.0 {
            let past = log
                .samples
                .iter()
                .filter(|s| in_span(s.t, motion.start, span.end))
                .map(|s| (s.position - target) * step.signum())
                .fold(0.0, f64::max);
            worst_overshoot = worst_overshoot.max(past / step.abs());
        }
    }
    Tracking {
        worst_plateau_error,
        all_reached,
        worst_overshoot,
    }
}

/// Pendulum `theta'' = -sin(theta)` integrated over `[0, 2]` with `n` RK4
/// steps.
fn pendulum(n: usize) -> [f64; 2] {
    let h = 2.0 / n as f64;
    let mut y = [1.0, 0.0];
    for k in 0..n {
        y = rk4_step(
            |_, y: &[f64; 2]| Ok::<_, Infallible>([y[1], -y[0].sin()]),
            k as f64 * h,
            &y,
            h,
        )
        .unwrap();
    }
    y
}

/// Observed order of accuracy of RK4 on the pendulum for successive step
/// halvings, against a much finer reference solution.
pub fn rk4_orders() -> Vec<f64> {
    let reference = pendulum(20 * 512);
    let err = |n: usize| {
        let y = pendulum(n);
        (y[0] - reference[0]).abs().max((y[1] - reference[1]).abs())
    };
    let errors: Vec<f64> = [20, 40, 80, 160].iter().map(|&n| err(n)).collect();
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Ratios of successive deviations for a damped linear oscillator, each run
/// compared with the next finer one.
pub fn linear_plant_ratios() -> Vec<f64> {
    let run = |n: usize| {
        let h = 1.0 / n as f64;
        let mut y = [1.0, 0.0];
        for k in 0..n {
            y = rk4_step(
                |_, y: &[f64; 2]| Ok::<_, Infallible>([y[1], -25.0 * y[0] - 2.0 * y[1]]),
                k as f64 * h,
                &y,
                h,
            )
            .unwrap();
        }
        y[0]
    };
    let x: Vec<f64> = [25, 50, 100, 200, 400].iter().map(|&n| run(n)).collect();
    let dev: Vec<f64> = x.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    dev.windows(2).map(|w| w[0] / w[1]).collect()
}

/// Checks that the fuzzy tuner keeps every gain in range, is exactly
/// symmetric under sign flip and Lipschitz in both inputs. Returns the first
/// violation.
pub fn fuzzy_invariants(tuner: &FuzzyTuner, e: f64, r: f64, de: f64, dr: f64) -> Result<(), String> {
    let g = hydrosim::control::fuzzy_tune(e, r, tuner).map_err(|x| x.to_string())?;
    let m = hydrosim::control::fuzzy_tune(-e, -r, tuner).map_err(|x| x.to_string())?;
    if g != m {
        return Err(format!("asymmetric at ({e}, {r}): {g:?} vs {m:?}"));
    }
    let ranges = [tuner.ranges.kp, tuner.ranges.ki, tuner.ranges.kd];
    let gains = [g.kp, g.ki, g.kd];
    for (v, rg) in gains.iter().zip(&ranges) {
        if !(*v >= rg.min && *v <= rg.max) {
            return Err(format!("gain {v} outside [{}, {}] at ({e}, {r})", rg.min, rg.max));
        }
    }
    let n = hydrosim::control::fuzzy_tune(e + de, r + dr, tuner).map_err(|x| x.to_string())?;
    // weights are min-combinations of memberships with slope 2/step and
    // their sum never drops below 1/2, which bounds the slope of the output
    let step_e = 0.5 * tuner.error_range;
    let step_r = 0.5 * tuner.error_rate_range;
    for ((a, b), rg) in gains.iter().zip([n.kp, n.ki, n.kd]).zip(&ranges) {
        let width = rg.max - rg.min;
        let bound = width * 8.0 * (de.abs() / step_e + dr.abs() / step_r) + 1e-12 * width;
        if (a - b).abs() > bound {
            return Err(format!(
                "jump {} > {bound} between ({e}, {r}) and ({}, {})",
                (a - b).abs(),
                e + de,
                r + dr
            ));
        }
    }
    Ok(())
}

/// A randomised variant of the default scenario: load, plant, stroke and
/// timing drawn from `u` (values in [0, 1)), with the relief set above the
/// peak static load pressure and a hold phase after the extension.
pub fn random_scenario(u: &[f64; 10]) -> ScenarioConfig {
    let mut file = default_config().file;
    let lerp = |k: usize, a: f64, b: f64| a + (b - a) * u[k];
    let force = lerp(0, 2000.0, 12000.0);
    file.load.mass = lerp(1, 200.0, 1000.0);
    file.load.load_stiffness = lerp(2, 0.0, 5000.0);
    file.load.viscous_coeff = lerp(3, 2e3, 2e4);
    let start = 0.01;
    let top = start + lerp(4, 0.05, 0.2);
    let t_ext = lerp(5, 3.0, 6.0).round();
    let t_hold = lerp(6, 1.0, 5.0).round();
    let t_ret = lerp(7, 3.0, 6.0).round();
    let t1 = t_ext;
    let t2 = t1 + t_hold;
    let t3 = t2 + t_ret;
    file.duty = DutyCycle {
        setpoints: vec![(0.0, start), (t1, top), (t2, top), (t3, start)],
        loads: vec![(0.0, force)],
        duration: t3 + 2.0,
    };
    let speed = file.duty.peak_speed();
    let supply = (1.0 + lerp(8, 0.2, 1.0)) * file.actuator.piston_area * speed;
    file.pump.supply_flow = supply;
    // Both valves are sized for the sampled pump the way the default plant
    // is: the directional valve passes 1.25 Qs at full stroke, and the open
    // bypass passes 2 Qs at the lowest load pressure of the cycle.
    file.control_valve.flow_gain = 1.25 * supply / file.control_valve.spool_limit;
    let p_low = (force + file.load.load_stiffness * start) / file.actuator.piston_area;
    let b = &file.bypass_valve;
    file.bypass_valve.max_area =
        2.0 * supply / (b.discharge_coeff * (2.0 * p_low / file.fluid.density).sqrt());
    let peak = (force + file.load.load_stiffness * top) / file.actuator.piston_area;
    file.relief.cracking_pressure = peak * lerp(9, 1.001, 2.0);
    ScenarioConfig::from_file(file).expect("random scenario is valid")
}
