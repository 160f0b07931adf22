//! Batch front end: loads scenarios, runs the circuits, writes CSV logs,
//! reports and run manifests, and calibrates the relief setting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::circuits::CircuitKind;
use crate::config::{parse_config, ConfigError, ScenarioConfig};
use crate::energy::{self, ComparisonReport, EnergyError, EnergyReport};
use crate::sim::{self, SimError, TimeSeriesLog, COLUMNS};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relief settings are written back rounded to this step, Pa.
const RELIEF_RESOLUTION: f64 = 1e3;
/// Calibration accepts a saving this close to the target, percentage points.
pub const CALIBRATION_TOLERANCE: f64 = 1.0;
/// Bisection stops once the saving is this close to the target.
const BISECTION_TOLERANCE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Config {
        path: String,
        #[source]
        source: ConfigError,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{circuit}: {source}")]
    Simulation {
        circuit: CircuitKind,
        #[source]
        source: SimError,
    },
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("calibration infeasible: {0}")]
    Infeasible(String),
}

impl HarnessError {
    /// 0 success, 1 configuration, 2 numerical, 3 calibration infeasible.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Simulation { source, .. } if source.is_numerical() => 2,
            HarnessError::Infeasible(_) => 3,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_config(&text).map_err(|source| HarnessError::Config {
        path: path.display().to_string(),
        source,
    })
}

pub fn simulate(cfg: &ScenarioConfig, kind: CircuitKind) -> Result<TimeSeriesLog, HarnessError> {
    sim::run_scenario(kind, &cfg.params, &cfg.duty, &cfg.controller, &cfg.sim)
        .map_err(|source| HarnessError::Simulation { circuit: kind, source })
}

/// Runs both circuits on the same scenario, one thread each.
pub fn run_both(cfg: &ScenarioConfig) -> Result<[TimeSeriesLog; 2], HarnessError> {
    let (pdcv, pfcv) = std::thread::scope(|s| {
        let pfcv = s.spawn(|| simulate(cfg, CircuitKind::Pfcv));
        let pdcv = simulate(cfg, CircuitKind::Pdcv);
        (pdcv, pfcv.join().expect("simulation thread panicked"))
    });
    Ok([pdcv?, pfcv?])
}

pub fn compare_logs(pdcv: &TimeSeriesLog, pfcv: &TimeSeriesLog) -> Result<ComparisonReport, HarnessError> {
    let baseline = energy::accumulate_energy(pdcv)?;
    let proposed = energy::accumulate_energy(pfcv)?;
    Ok(energy::compare(&baseline, &proposed)?)
}

fn csv_number(x: f64) -> String {
    format!("{x:e}")
}

/// Log as CSV: one comment line naming the circuit and config digest, the
/// column header, then one row per sample.
pub fn log_to_csv(log: &TimeSeriesLog, kind: CircuitKind, digest: &str) -> String {
    let mut s = String::with_capacity(64 * 15 * (log.len() + 2));
    let _ = writeln!(s, "# hydrosim {VERSION} circuit={kind} config_digest={digest}");
    let _ = writeln!(s, "{}", COLUMNS.join(","));
    for sample in &log.samples {
        let row: Vec<String> = sample.values().iter().map(|&v| csv_number(v)).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

/// Power and cumulative energy of both circuits on a shared time axis.
pub fn power_csv(pdcv: &TimeSeriesLog, pfcv: &TimeSeriesLog, digest: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# hydrosim {VERSION} config_digest={digest}");
    let _ = writeln!(s, "t,power_pdcv_W,power_pfcv_W,energy_pdcv_J,energy_pfcv_J");
    for (a, b) in pdcv.samples.iter().zip(&pfcv.samples) {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            csv_number(a.t),
            csv_number(a.power),
            csv_number(b.power),
            csv_number(a.energy),
            csv_number(b.energy)
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub tool_version: String,
    /// RFC 3339, UTC. Taken from `SOURCE_DATE_EPOCH` when set.
    pub timestamp: String,
    pub outputs: Vec<OutputFile>,
}

/// Current time, or `SOURCE_DATE_EPOCH` (seconds) when it is set.
pub fn timestamp() -> String {
    let t = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .map_or_else(SystemTime::now, |secs| UNIX_EPOCH + Duration::from_secs(secs));
    humantime::format_rfc3339_seconds(t).to_string()
}

struct OutputDir {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl OutputDir {
    fn create(dir: &Path) -> Result<Self, HarnessError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), HarnessError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.files.push(OutputFile {
            path: name.to_string(),
            bytes: contents.len() as u64,
            sha256: hex::encode(Sha256::digest(contents.as_bytes())),
        });
        Ok(())
    }

    fn finish(mut self, command: &str, digest: &str) -> Result<RunManifest, HarnessError> {
        let manifest = RunManifest {
            command: command.to_string(),
            config_digest: digest.to_string(),
            tool_version: VERSION.to_string(),
            timestamp: timestamp(),
            outputs: std::mem::take(&mut self.files),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(io_err(&path))?;
        Ok(manifest)
    }
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("reports serialise") + "\n"
}

/// `simulate`: one circuit, CSV log plus energy report.
pub fn cmd_simulate(
    config: &Path,
    kind: CircuitKind,
    out: &Path,
) -> Result<(RunManifest, EnergyReport), HarnessError> {
    let cfg = load_config(config)?;
    let digest = cfg.digest();
    let log = simulate(&cfg, kind)?;
    let report = energy::accumulate_energy(&log)?;

    let mut dir = OutputDir::create(out)?;
    dir.write(&format!("{kind}.csv"), &log_to_csv(&log, kind, &digest))?;
    dir.write(&format!("{kind}_energy.json"), &pretty(&report))?;
    dir.write(&format!("{kind}_energy.txt"), &report.to_table(kind.as_str()))?;
    Ok((dir.finish(&format!("simulate {kind}"), &digest)?, report))
}

/// `compare`: both circuits on the same scenario, logs plus the energy
/// comparison table.
pub fn cmd_compare(config: &Path, out: &Path) -> Result<(RunManifest, ComparisonReport), HarnessError> {
    let cfg = load_config(config)?;
    let digest = cfg.digest();
    let [pdcv, pfcv] = run_both(&cfg)?;
    let report = compare_logs(&pdcv, &pfcv)?;

    let mut dir = OutputDir::create(out)?;
    dir.write("pdcv.csv", &log_to_csv(&pdcv, CircuitKind::Pdcv, &digest))?;
    dir.write("pfcv.csv", &log_to_csv(&pfcv, CircuitKind::Pfcv, &digest))?;
    dir.write("power.csv", &power_csv(&pdcv, &pfcv, &digest))?;
    dir.write("comparison.txt", &report.to_table())?;
    dir.write("comparison.json", &pretty(&report.to_record()))?;
    Ok((dir.finish("compare", &digest)?, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub target_percent: f64,
    pub saving_percent: f64,
    pub cracking_pressure: f64,
    pub supply_flow: f64,
    pub supply_margin: Option<f64>,
    pub relief_range: (f64, f64),
    pub report: ComparisonReport,
}

/// Rounds to six significant digits so written values stay readable.
fn significant(x: f64) -> f64 {
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn energy_of(cfg: &ScenarioConfig, kind: CircuitKind) -> Result<EnergyReport, HarnessError> {
    Ok(energy::accumulate_energy(&simulate(cfg, kind)?)?)
}

fn with_plant(
    base: &ScenarioConfig,
    cracking_pressure: f64,
    supply_flow: f64,
) -> Result<ScenarioConfig, HarnessError> {
    let mut file = base.file.clone();
    file.relief.cracking_pressure = cracking_pressure;
    file.pump.supply_flow = supply_flow;
    ScenarioConfig::from_file(file).map_err(|source| HarnessError::Config {
        path: "calibration candidate".into(),
        source,
    })
}

/// Searches the relief setting, and the pump flow margin when the scenario
/// lists margins, for a PFCV saving within one percentage point of
/// `target`.
///
/// The PFCV run does not depend on the relief setting and the PDCV energy
/// rises with it, so each margin needs one PFCV run and a bisection on the
/// relief setting. Margins are tried in the order given; the first that
/// brackets the target wins.
pub fn calibrate(cfg: &ScenarioConfig, target: f64) -> Result<CalibrationResult, HarnessError> {
    if !(target > 0.0 && target < 50.0) {
        return Err(HarnessError::Usage(format!(
            "target saving must be in (0, 50) %, got {target}"
        )));
    }
    let cal = &cfg.file.calibration;
    let lo = cal
        .relief_min
        .unwrap_or_else(|| (cfg.peak_load_pressure() * 1.001 / RELIEF_RESOLUTION).ceil() * RELIEF_RESOLUTION);
    let hi = cal.relief_max.unwrap_or(3.0 * lo);
    if !(lo < hi) {
        return Err(HarnessError::Usage(format!(
            "empty relief search range [{lo}, {hi}] Pa"
        )));
    }
    let demand = cfg.params.actuator.piston_area * cfg.duty.peak_speed();
    let margins: Vec<Option<f64>> = if cal.supply_margins.is_empty() {
        vec![None]
    } else {
        cal.supply_margins.iter().copied().map(Some).collect()
    };

    let mut tried = Vec::new();
    for margin in margins {
        let supply = margin.map_or(cfg.params.pump.supply_flow, |m| significant((1.0 + m) * demand));
        let proposed = energy_of(&with_plant(cfg, lo, supply)?, CircuitKind::Pfcv)?;
        let saving_at = |p: f64| -> Result<(f64, EnergyReport), HarnessError> {
            let baseline = energy_of(&with_plant(cfg, p, supply)?, CircuitKind::Pdcv)?;
            Ok((energy::compare(&baseline, &proposed)?.saving_percent, baseline))
        };

        let (s_lo, _) = saving_at(lo)?;
        let (s_hi, _) = saving_at(hi)?;
        tried.push(format!(
            "margin {}: {s_lo:.2}% .. {s_hi:.2}%",
            margin.map_or("as configured".to_string(), |m| m.to_string())
        ));
        if target < s_lo - CALIBRATION_TOLERANCE || target > s_hi + CALIBRATION_TOLERANCE {
            continue;
        }

        let (mut a, mut b) = (lo, hi);
        let mut p = if target <= s_lo {
            lo
        } else if target >= s_hi {
            hi
        } else {
            loop {
                let mid = 0.5 * (a + b);
                let (s, _) = saving_at(mid)?;
                if (s - target).abs() <= BISECTION_TOLERANCE || b - a <= RELIEF_RESOLUTION {
                    break mid;
                }
                if s < target {
                    a = mid;
                } else {
                    b = mid;
                }
            }
        };
        p = ((p / RELIEF_RESOLUTION).round() * RELIEF_RESOLUTION).clamp(lo, hi);

        let chosen = with_plant(cfg, p, supply)?;
        let [pdcv, pfcv] = run_both(&chosen)?;
        let report = compare_logs(&pdcv, &pfcv)?;
        if (report.saving_percent - target).abs() > CALIBRATION_TOLERANCE {
            continue;
        }
        return Ok(CalibrationResult {
            target_percent: target,
            saving_percent: report.saving_percent,
            cracking_pressure: p,
            supply_flow: supply,
            supply_margin: margin,
            relief_range: (lo, hi),
            report,
        });
    }
    Err(HarnessError::Infeasible(format!(
        "no relief setting in [{lo}, {hi}] Pa gives {target}% +- {CALIBRATION_TOLERANCE} pp ({})",
        tried.join("; ")
    )))
}

/// Scenario text with the calibrated relief setting and pump flow written
/// in, each annotated with how it was found.
pub fn calibrated_config_text(cfg: &ScenarioConfig, result: &CalibrationResult) -> String {
    let mut file = cfg.file.clone();
    file.relief.cracking_pressure = result.cracking_pressure;
    file.pump.supply_flow = result.supply_flow;

    let mut notes = BTreeMap::new();
    notes.insert(
        "relief.cracking_pressure".to_string(),
        format!(
            "calibrated to a target saving of {}%: bisection over [{:e}, {:e}] Pa,\nrounded to {} Pa, reaching {}",
            result.target_percent,
            result.relief_range.0,
            result.relief_range.1,
            RELIEF_RESOLUTION,
            energy::format_percent(result.saving_percent)
        ),
    );
    let supply_note = match result.supply_margin {
        Some(m) => format!(
            "calibrated: {m} margin over the peak demand of {:e} m^3/s",
            significant(cfg.params.actuator.piston_area * cfg.duty.peak_speed())
        ),
        None => "kept from the input scenario".to_string(),
    };
    notes.insert("pump.supply_flow".to_string(), supply_note);

    let header = format!(
        "Calibrated scenario written by hydrosim {VERSION} calibrate --target {}.\n\
         Input scenario digest: {}\n\
         PDCV {} kJ, PFCV {} kJ, saving {}.\n\
         All other values are carried over unchanged from the input scenario.",
        result.target_percent,
        cfg.digest(),
        energy::format_kj(result.report.baseline.total_energy),
        energy::format_kj(result.report.proposed.total_energy),
        energy::format_percent(result.saving_percent),
    );
    file.render(&header, &notes)
}

/// `calibrate`: writes the calibrated scenario to `out`.
pub fn cmd_calibrate(config: &Path, target: f64, out: &Path) -> Result<CalibrationResult, HarnessError> {
    let cfg = load_config(config)?;
    let result = calibrate(&cfg, target)?;
    let text = calibrated_config_text(&cfg, &result);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(out, text).map_err(io_err(out))?;
    Ok(result)
}

/// `validate`: parse only.
pub fn cmd_validate(config: &Path) -> Result<ScenarioConfig, HarnessError> {
    load_config(config)
}
