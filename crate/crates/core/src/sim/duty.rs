use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Extension,
    Hold,
    Retraction,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Extension, Phase::Hold, Phase::Retraction];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpan {
    pub phase: Phase,
    pub start: f64,
    pub end: f64,
}

/// Timed setpoint and load sequence shared by both circuits.
///
/// `setpoints` are `(time s, position m)` breakpoints joined linearly and held
/// after the last one. `loads` are `(time s, force N)` steps, each holding
/// until the next. Both start at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutyCycle {
    pub setpoints: Vec<(f64, f64)>,
    pub loads: Vec<(f64, f64)>,
    pub duration: f64,
}

fn strictly_increasing(points: &[(f64, f64)]) -> bool {
    points.windows(2).all(|w| w[0].0 < w[1].0)
}

impl DutyCycle {
    pub fn validate(&self, stroke_limit: f64) -> Result<(), SimError> {
        let bad = |field: &'static str, msg: String| Err(SimError::Config { field, message: msg });
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return bad("duty.duration", "must be finite and >= 0".into());
        }
        for (field, points) in [("duty.setpoints", &self.setpoints), ("duty.loads", &self.loads)] {
            if points.is_empty() {
                return bad(field, "needs at least one breakpoint".into());
            }
            if points[0].0 != 0.0 {
                return bad(field, "first breakpoint must be at t = 0".into());
            }
            if !strictly_increasing(points) {
                return bad(field, "breakpoint times must be strictly increasing".into());
            }
            if points.iter().any(|(t, v)| !(t.is_finite() && v.is_finite())) {
                return bad(field, "breakpoints must be finite".into());
            }
        }
        if let Some((t, x)) = self
            .setpoints
            .iter()
            .find(|(_, x)| *x < 0.0 || *x > stroke_limit)
        {
            return bad(
                "duty.setpoints",
                format!("setpoint {x} at t = {t} outside [0, {stroke_limit}]"),
            );
        }
        Ok(())
    }

    pub fn initial_position(&self) -> f64 {
        self.setpoint(0.0)
    }

    pub fn setpoint(&self, t: f64) -> f64 {
        let pts = &self.setpoints;
        let idx = pts.partition_point(|&(tp, _)| tp <= t);
        if idx == 0 {
            return pts[0].1;
        }
        if idx == pts.len() {
            return pts[idx - 1].1;
        }
        let (t0, x0) = pts[idx - 1];
        let (t1, x1) = pts[idx];
        x0 + (x1 - x0) * (t - t0) / (t1 - t0)
    }

    pub fn load_force(&self, t: f64) -> f64 {
        let idx = self.loads.partition_point(|&(tp, _)| tp <= t);
        self.loads[idx.saturating_sub(1)].1
    }

    /// Largest load force over the cycle, N.
    pub fn peak_load(&self) -> f64 {
        self.loads
            .iter()
            .filter(|(t, _)| *t <= self.duration)
            .map(|&(_, f)| f)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest setpoint speed over the cycle, m/s.
    pub fn peak_speed(&self) -> f64 {
        self.setpoints
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0, f64::max)
    }

    /// Extension / hold / retraction spans classified by the slope of the
    /// setpoint, merged where adjacent spans share a phase.
    pub fn phases(&self) -> Vec<PhaseSpan> {
        let mut spans: Vec<PhaseSpan> = Vec::new();
        let mut push = |phase: Phase, start: f64, end: f64| {
            let end = end.min(self.duration);
            if end <= start {
                return;
            }
            match spans.last_mut() {
                Some(last) if last.phase == phase => last.end = end,
                _ => spans.push(PhaseSpan { phase, start, end }),
            }
        };
        for w in self.setpoints.windows(2) {
            let ((t0, x0), (t1, x1)) = (w[0], w[1]);
            if t0 >= self.duration {
                break;
            }
            let phase = if x1 > x0 {
                Phase::Extension
            } else if x1 < x0 {
                Phase::Retraction
            } else {
                Phase::Hold
            };
            push(phase, t0, t1);
        }
        let tail = self.setpoints.last().map_or(0.0, |p| p.0);
        push(Phase::Hold, tail, self.duration);
        spans
    }

    pub fn phase_at(spans: &[PhaseSpan], t: f64) -> Phase {
        spans
            .iter()
            .find(|s| t >= s.start && t < s.end)
            .or(spans.last())
            .map_or(Phase::Hold, |s| s.phase)
    }
}
