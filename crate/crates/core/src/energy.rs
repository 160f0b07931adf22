//! Pump energy over a run and the two-circuit comparison.
//!
//! The integrand is pump outlet pressure times pump flow, i.e. what a
//! pressure transducer and flow meter at the pump would record.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{DutyCycle, Phase, TimeSeriesLog};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("log needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("log is not uniformly sampled near t = {0} s")]
    NonUniform(f64),
    #[error("baseline energy must be > 0, got {0} kJ")]
    NonPositiveBaseline(f64),
}

pub use crate::physics::hydraulic_power;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseEnergy {
    pub extension: f64,
    pub hold: f64,
    pub retraction: f64,
}

impl PhaseEnergy {
    fn slot(&mut self, phase: Phase) -> &mut f64 {
        match phase {
            Phase::Extension => &mut self.extension,
            Phase::Hold => &mut self.hold,
            Phase::Retraction => &mut self.retraction,
        }
    }

    pub fn sum(&self) -> f64 {
        self.extension + self.hold + self.retraction
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    /// kJ
    pub total_energy: f64,
    /// kW
    pub peak_power: f64,
    /// kW
    pub mean_power: f64,
    /// kJ
    pub phases: PhaseEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline: EnergyReport,
    pub proposed: EnergyReport,
    pub saving_percent: f64,
}

/// Trapezoidal integral of uniformly spaced samples.
pub fn trapezoid(values: &[f64], spacing: f64) -> f64 {
    values
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]) * spacing)
        .sum()
}

/// Integrates the power column of `log`, splitting the result over the
/// log's duty-cycle phases by interval midpoint.
pub fn accumulate_energy(log: &TimeSeriesLog) -> Result<EnergyReport, EnergyError> {
    let samples = &log.samples;
    if samples.len() < 2 {
        return Err(EnergyError::TooFewSamples(samples.len()));
    }
    let h = log.sample_interval;
    for w in samples.windows(2) {
        if ((w[1].t - w[0].t) - h).abs() > 1e-9 * h.max(1e-300) {
            return Err(EnergyError::NonUniform(w[0].t));
        }
    }

    let mut total = 0.0;
    let mut phases = PhaseEnergy::default();
    for w in samples.windows(2) {
        let e = 0.5 * (w[0].power + w[1].power) * h;
        total += e;
        let mid = 0.5 * (w[0].t + w[1].t);
        *phases.slot(DutyCycle::phase_at(&log.phases, mid)) += e;
    }
    let duration = samples[samples.len() - 1].t - samples[0].t;
    let peak = samples.iter().map(|s| s.power).fold(f64::NEG_INFINITY, f64::max);

    Ok(EnergyReport {
        total_energy: total / 1e3,
        peak_power: peak / 1e3,
        mean_power: total / duration / 1e3,
        phases: PhaseEnergy {
            extension: phases.extension / 1e3,
            hold: phases.hold / 1e3,
            retraction: phases.retraction / 1e3,
        },
    })
}

/// Percentage of the baseline energy saved by the proposed circuit.
pub fn compare(baseline: &EnergyReport, proposed: &EnergyReport) -> Result<ComparisonReport, EnergyError> {
    if !(baseline.total_energy > 0.0) {
        return Err(EnergyError::NonPositiveBaseline(baseline.total_energy));
    }
    Ok(ComparisonReport {
        baseline: *baseline,
        proposed: *proposed,
        saving_percent: saving_percent(baseline.total_energy, proposed.total_energy),
    })
}

pub fn saving_percent(baseline: f64, proposed: f64) -> f64 {
    100.0 * (baseline - proposed) / baseline
}

pub fn format_kj(kj: f64) -> String {
    format!("{kj:.3}")
}

pub fn format_percent(p: f64) -> String {
    format!("{p:.2}%")
}

impl EnergyReport {
    pub fn to_table(&self, label: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{label}");
        let rows = [
            ("Total energy (kJ)", format_kj(self.total_energy)),
            ("  extension (kJ)", format_kj(self.phases.extension)),
            ("  hold (kJ)", format_kj(self.phases.hold)),
            ("  retraction (kJ)", format_kj(self.phases.retraction)),
            ("Peak power (kW)", format_kj(self.peak_power)),
            ("Mean power (kW)", format_kj(self.mean_power)),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k:<24}{v:>12}");
        }
        s
    }
}

impl ComparisonReport {
    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let rows = [
            ("System", "Energy consumption (kJ)".to_string()),
            ("PDCV with relief valve", format_kj(self.baseline.total_energy)),
            ("PFCV bypass", format_kj(self.proposed.total_energy)),
            ("Energy saving", format_percent(self.saving_percent)),
        ];
        let mut s = String::new();
        for (k, v) in rows {
            let _ = writeln!(s, "{k:<26}{v:>24}");
        }
        s
    }

    /// Machine-readable record with the same rounding as the table.
    pub fn to_record(&self) -> serde_json::Value {
        let round = |x: f64, places: i32| {
            let f = 10f64.powi(places);
            (x * f).round() / f
        };
        let phases = |r: &EnergyReport| {
            serde_json::json!({
                "extension_kJ": round(r.phases.extension, 3),
                "hold_kJ": round(r.phases.hold, 3),
                "retraction_kJ": round(r.phases.retraction, 3),
            })
        };
        serde_json::json!({
            "baseline": {
                "circuit": "pdcv",
                "total_energy_kJ": round(self.baseline.total_energy, 3),
                "peak_power_kW": round(self.baseline.peak_power, 3),
                "mean_power_kW": round(self.baseline.mean_power, 3),
                "phases": phases(&self.baseline),
            },
            "proposed": {
                "circuit": "pfcv",
                "total_energy_kJ": round(self.proposed.total_energy, 3),
                "peak_power_kW": round(self.proposed.peak_power, 3),
                "mean_power_kW": round(self.proposed.mean_power, 3),
                "phases": phases(&self.proposed),
            },
            "saving_percent": round(self.saving_percent, 2),
        })
    }
}
