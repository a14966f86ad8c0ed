use std::fs;
use std::path::{Path, PathBuf};

use gpos_core::geodata::{LatencyModel, SnapshotFormat, DEFAULT_MERGE_RADIUS_KM};
use gpos_core::simnet::Protocol;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a run depends on. Serialized verbatim into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Vec<PathBuf>,
    pub format: Option<SnapshotFormat>,
    /// Proximity-merge radius applied after loading; zero disables merging.
    pub merge_radius_km: f64,
    /// Grow the merge radius until at most this many validators remain.
    pub target_count: Option<usize>,
    pub metrics: MetricSelection,
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub attack: AttackConfig,
    pub reconfig: ReconfigConfig,
    pub simulation: SimulationConfig,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: Vec::new(),
            format: None,
            merge_radius_km: DEFAULT_MERGE_RADIUS_KM,
            target_count: None,
            metrics: MetricSelection::default(),
            lambdas: vec![1.0],
            alphas: vec![1.0],
            thresholds: vec![1.0 / 3.0, 2.0 / 3.0],
            attack: AttackConfig::default(),
            reconfig: ReconfigConfig::default(),
            simulation: SimulationConfig::default(),
            out: PathBuf::from("out"),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricSelection {
    pub gec: bool,
    pub gini: bool,
    pub nakamoto: bool,
    pub entropy: bool,
    pub proximity_radii_km: Vec<f64>,
    pub kde: Option<KdeConfig>,
}

impl Default for MetricSelection {
    fn default() -> Self {
        MetricSelection {
            gec: true,
            gini: true,
            nakamoto: true,
            entropy: true,
            proximity_radii_km: vec![100.0, 200.0, 400.0, 600.0, 800.0, 1000.0],
            kde: Some(KdeConfig::default()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KdeConfig {
    pub bandwidth_deg: f64,
    pub lat_steps: usize,
    pub lon_steps: usize,
}

impl Default for KdeConfig {
    fn default() -> Self {
        KdeConfig {
            bandwidth_deg: 5.0,
            lat_steps: 90,
            lon_steps: 180,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub sybil_counts: Vec<usize>,
    pub sybil_stake_fraction: f64,
    pub min_stake_threshold: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            sybil_counts: (0..=10).collect(),
            sybil_stake_fraction: 0.05,
            min_stake_threshold: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconfigConfig {
    /// Event log to replay instead of starting from the snapshot.
    pub events: Option<PathBuf>,
    pub top_k: Option<usize>,
    /// Minimum stake in base units when `top_k` is absent.
    pub min_stake: u64,
    /// Base units per token when converting snapshot stakes.
    pub stake_scale: f64,
    pub epochs: usize,
}

impl Default for ReconfigConfig {
    fn default() -> Self {
        ReconfigConfig {
            events: None,
            top_k: None,
            min_stake: 1,
            stake_scale: 1e9,
            epochs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub protocol: Protocol,
    pub latency: LatencyModel,
    pub batch_size: u64,
    pub processing_ms: f64,
    pub rounds: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            protocol: Protocol::broadcast(),
            latency: LatencyModel::default(),
            batch_size: 1000,
            processing_ms: 1.0,
            rounds: 100,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.input.is_empty() {
            return bad("no input snapshot given".into());
        }
        if !(self.merge_radius_km.is_finite() && self.merge_radius_km >= 0.0) {
            return bad(format!("merge radius {} must be finite and non-negative", self.merge_radius_km));
        }
        if self.target_count == Some(0) {
            return bad("target count must be positive".into());
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return bad(format!("lambdas {:?} must be a non-empty subset of [0, 1]", self.lambdas));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return bad(format!("alphas {:?} must be a non-empty subset of [0, 1]", self.alphas));
        }
        if self.thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return bad(format!("thresholds {:?} must lie in (0, 1]", self.thresholds));
        }
        if !(self.reconfig.stake_scale.is_finite() && self.reconfig.stake_scale > 0.0) {
            return bad("stake_scale must be positive".into());
        }
        Ok(())
    }
}

pub fn parse_protocol(name: &str) -> Result<Protocol, String> {
    match name.to_ascii_lowercase().as_str() {
        "broadcast" | "hotstuff" => Ok(Protocol::broadcast()),
        "gossip" | "cometbft" | "tendermint" => Ok(Protocol::gossip()),
        other => Err(format!("unknown protocol `{other}` (expected broadcast or gossip)")),
    }
}

pub fn parse_format(name: &str) -> Result<SnapshotFormat, String> {
    match name.to_ascii_lowercase().as_str() {
        "csv" => Ok(SnapshotFormat::Csv),
        "json" => Ok(SnapshotFormat::Json),
        other => Err(format!("unknown format `{other}` (expected csv or json)")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"input": ["a.csv"], "lambdas": [0.5]}"#).unwrap();
        assert_eq!(cfg.lambdas, vec![0.5]);
        assert_eq!(cfg.merge_radius_km, DEFAULT_MERGE_RADIUS_KM);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"lamdas": [0.5]}"#).is_err());
    }

    #[test]
    fn validation_catches_bad_grids() {
        let mut cfg = RunConfig {
            input: vec!["x.csv".into()],
            ..RunConfig::default()
        };
        cfg.lambdas = vec![1.2];
        assert!(cfg.validate().is_err());
        cfg.lambdas = vec![0.5];
        cfg.thresholds = vec![0.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn protocol_names() {
        assert_eq!(parse_protocol("HotStuff").unwrap(), Protocol::broadcast());
        assert_eq!(parse_protocol("gossip").unwrap(), Protocol::gossip());
        assert!(parse_protocol("pbft").is_err());
    }
}
