//! Scenario files: everything a run needs, in TOML.
//!
//! ```toml
//! version = 1
//! seed = 7
//!
//! [trajectory]
//! sample_period = 0.01
//! [[trajectory.segments]]
//! joint = 1
//! start = 0.0
//! end = 1.5707963267948966
//! samples = 400
//! ```
//!
//! Only `version` and `seed` are required; every other section falls back
//! to the default loop (three-ramp trajectory, tilted wall, transparent
//! channels, ideal tracking, both backends).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelConfig, DelayProfile, Variance};
use crate::kinematics::{Backend, DeviceGeometry};
use crate::numerics::{CordicConfig, CordicParams, NumericsError};
use crate::pipeline::{PipelineConfig, PipelineError, Scene, Tracking, TrajectorySpec};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("unsupported scenario version {0}, expected {SCENARIO_VERSION}")]
    Version(u32),
    #[error("{field}: {msg}")]
    Invalid { field: String, msg: String },
    #[error("cordic: {0}")]
    Cordic(#[from] NumericsError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Oracle,
    Hybrid,
}

/// One channel direction as written in a scenario. The seed comes from the
/// scenario seed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub sigma2: Variance,
    pub delay: DelayProfile,
    pub initial_hold: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Channels {
    pub forward: ChannelSection,
    pub backward: ChannelSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySection {
    pub sample_period: f64,
    pub segments: Vec<crate::pipeline::Segment>,
    /// Optional cross-check of the total sample count.
    pub total_samples: Option<usize>,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        let d = TrajectorySpec::default();
        Self {
            sample_period: d.sample_period,
            segments: d.segments,
            total_samples: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Relative paths resolve against the scenario file's directory.
    pub dir: PathBuf,
    /// Traces are written as `<trace_prefix>_<backend>.csv`.
    pub trace_prefix: String,
    pub summary: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            trace_prefix: "trace".into(),
            summary: "summary.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub seed: u64,
    #[serde(default = "default_backends")]
    pub backends: Vec<BackendKind>,
    #[serde(default)]
    pub trajectory: TrajectorySection,
    #[serde(default)]
    pub geometry: DeviceGeometry,
    #[serde(default)]
    pub scene: Scene,
    #[serde(default)]
    pub channels: Channels,
    #[serde(default)]
    pub tracking: Tracking,
    #[serde(default)]
    pub cordic: CordicParams,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_backends() -> Vec<BackendKind> {
    vec![BackendKind::Oracle, BackendKind::Hybrid]
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub pipeline: PipelineConfig,
    pub cordic: CordicConfig,
    pub output_dir: PathBuf,
}

impl LoadedScenario {
    pub fn backend(&self, kind: BackendKind) -> Backend {
        match kind {
            BackendKind::Oracle => Backend::Oracle,
            BackendKind::Hybrid => Backend::Hybrid(self.cordic.clone()),
        }
    }
}

impl Scenario {
    /// The default loop with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            version: SCENARIO_VERSION,
            seed,
            backends: default_backends(),
            trajectory: TrajectorySection::default(),
            geometry: DeviceGeometry::default(),
            scene: Scene::default(),
            channels: Channels::default(),
            tracking: Tracking::default(),
            cordic: CordicParams::default(),
            output: OutputSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn load(path: &Path) -> Result<LoadedScenario, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&text)?.resolve(base)
    }

    /// Validate and build the run configuration. `base` anchors a relative
    /// output directory.
    pub fn resolve(self, base: &Path) -> Result<LoadedScenario, ScenarioError> {
        if self.version != SCENARIO_VERSION {
            return Err(ScenarioError::Version(self.version));
        }
        let invalid = |field: &str, msg: String| ScenarioError::Invalid {
            field: field.into(),
            msg,
        };
        if self.backends.is_empty() {
            return Err(invalid(
                "backends",
                "at least one backend is required".into(),
            ));
        }
        let spec = TrajectorySpec {
            segments: self.trajectory.segments.clone(),
            sample_period: self.trajectory.sample_period,
        };
        if let Some(q) = self.trajectory.total_samples {
            if q != spec.len() {
                return Err(invalid(
                    "trajectory.total_samples",
                    format!("{q} does not match the segment total {}", spec.len()),
                ));
            }
        }
        if self.trajectory.segments.is_empty() {
            return Err(invalid(
                "trajectory.segments",
                "at least one segment is required".into(),
            ));
        }
        let cordic = CordicConfig::new(self.cordic)?;
        let channel = |c: &ChannelSection, seed: u64| ChannelConfig {
            sigma2: c.sigma2,
            delay: c.delay,
            seed,
            initial_hold: c.initial_hold,
        };
        let pipeline = PipelineConfig {
            trajectory: spec,
            geometry: self.geometry,
            scene: self.scene.clone(),
            forward: channel(&self.channels.forward, self.seed),
            backward: channel(&self.channels.backward, self.seed.wrapping_add(1)),
            tracking: self.tracking,
        };
        pipeline.validate()?;
        let output_dir = if self.output.dir.is_absolute() {
            self.output.dir.clone()
        } else {
            base.join(&self.output.dir)
        };
        Ok(LoadedScenario {
            scenario: self,
            pipeline,
            cordic,
            output_dir,
        })
    }
}
