//! Scenario configuration: a TOML document plus `key.path=value` overrides.
//!
//! ```toml
//! dimension = 4
//! seed = 42
//! shots = 100000
//!
//! [hardware]
//! delta_phi_deg = 180.0
//!
//! [noise]
//! mean_photon_number = 0.14
//! ```
//!
//! Angles are given in degrees and delays in nanoseconds; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::{stage_count, Basis, HardwareParams};
use crate::error::{Error, Result};
use crate::hilbert::{CoarseOffset, Polarization};
use crate::montecarlo::{ExperimentConfig, NoiseModel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardwareConfig {
    pub fine_pitch_ps: f64,
    pub coarse_delays_ns: Vec<f64>,
    pub theta_deg: f64,
    pub delta_phi_deg: f64,
    pub extra_phase_deg: Vec<f64>,
    pub phase_correction_deg: Vec<f64>,
    pub delayed_pol: Polarization,
    pub time_delay_pol: Polarization,
    pub basis_hwp_deg: [f64; 2],
    pub window_width_ns: f64,
    /// Informational only; no element depends on it.
    pub signal_wavelength_nm: f64,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        HardwareConfig {
            fine_pitch_ps: 2.25,
            coarse_delays_ns: vec![2.6, 5.6],
            theta_deg: 45.0,
            delta_phi_deg: 180.0,
            extra_phase_deg: Vec::new(),
            phase_correction_deg: Vec::new(),
            delayed_pol: Polarization::H,
            time_delay_pol: Polarization::V,
            basis_hwp_deg: [0.0, 22.5],
            window_width_ns: 1.0,
            signal_wavelength_nm: 720.0,
        }
    }
}

impl HardwareConfig {
    pub fn to_params(&self) -> HardwareParams {
        let rad = |v: &[f64]| v.iter().map(|d| d.to_radians()).collect();
        HardwareParams {
            fine_pitch_ps: self.fine_pitch_ps,
            coarse_delays: self.coarse_delays_ns.iter().map(|&ns| CoarseOffset::from_ns(ns)).collect(),
            theta: self.theta_deg.to_radians(),
            delta_phi: self.delta_phi_deg.to_radians(),
            extra_phase: rad(&self.extra_phase_deg),
            phase_correction: rad(&self.phase_correction_deg),
            delayed_pol: self.delayed_pol,
            time_delay_pol: self.time_delay_pol,
            basis_hwp: [self.basis_hwp_deg[0].to_radians(), self.basis_hwp_deg[1].to_radians()],
            window_width_ns: self.window_width_ns,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub dimension: usize,
    pub seed: u64,
    /// Shots per prepared state and basis pair.
    pub shots: u64,
    /// Basis pairs to run as `[prep, meas]`, 0 = computational, 1 = superposition.
    pub bases: Vec<[usize; 2]>,
    pub hardware: HardwareConfig,
    pub noise: NoiseModel,
    pub output: OutputConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            dimension: 4,
            seed: 0,
            shots: 100_000,
            bases: vec![[0, 0], [0, 1], [1, 0], [1, 1]],
            hardware: HardwareConfig::default(),
            noise: NoiseModel::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: ScenarioConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        ScenarioConfig::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        stage_count(self.dimension)?;
        let hw = &self.hardware;
        let range = |name: &'static str, v: f64, lo: f64, hi: f64, hi_open: bool, domain: &'static str| {
            let ok = v.is_finite() && v >= lo && if hi_open { v < hi } else { v <= hi };
            if ok {
                Ok(())
            } else {
                Err(Error::Domain {
                    name,
                    value: v,
                    domain,
                })
            }
        };
        range("theta_deg", hw.theta_deg, 0.0, 90.0, false, "[0, 90]")?;
        range("delta_phi_deg", hw.delta_phi_deg, 0.0, 360.0, true, "[0, 360)")?;
        range("window_width_ns", hw.window_width_ns, f64::MIN_POSITIVE, f64::INFINITY, true, "(0, inf)")?;
        for &d in &hw.coarse_delays_ns {
            range("coarse_delay_ns", d, 0.0, f64::INFINITY, true, "[0, inf)")?;
        }
        if self.shots == 0 {
            return Err(Error::Config("shots must be positive".into()));
        }
        if self.bases.is_empty() {
            return Err(Error::Config("at least one basis pair is required".into()));
        }
        for pair in &self.bases {
            Basis::from_index(pair[0])?;
            Basis::from_index(pair[1])?;
        }
        self.noise.validate()?;
        hw.to_params().grid(self.dimension)?;
        Ok(())
    }

    pub fn hardware_params(&self) -> HardwareParams {
        self.hardware.to_params()
    }

    pub fn basis_pairs(&self) -> Vec<(Basis, Basis)> {
        self.bases
            .iter()
            .map(|p| (Basis::from_index(p[0]).unwrap(), Basis::from_index(p[1]).unwrap()))
            .collect()
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            dimension: self.dimension,
            hardware: self.hardware_params(),
            noise: self.noise.clone(),
            shots: self.shots,
            seed: self.seed,
            bases: self.basis_pairs(),
        }
    }

    /// SHA-256 of the canonical JSON form of the resolved configuration.
    /// The `output` section is left out: where results go does not change them.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let serde_json::Value::Object(map) = &mut value {
            map.remove("output");
        }
        let canonical = value.to_string();
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// Applies `a.b.c=value`; the value is parsed as TOML, falling back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys
        .split_last()
        .filter(|(l, _)| !l.is_empty())
        .ok_or_else(|| Error::Config(format!("empty key in `{assignment}`")))?;
    let mut cursor = table;
    for k in parents {
        cursor = cursor
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{k}` is not a table")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}
