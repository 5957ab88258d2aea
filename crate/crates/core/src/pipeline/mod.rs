//! The discrete teleoperation loop: master encoders, forward kinematics,
//! forward channel, slave inverse kinematics, tracking, slave forward
//! kinematics, contact force, backward channel and kinesthetic torques.

mod budget;
mod mse;
mod scene;
mod trace;
mod trajectory;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use budget::{hardware_time_limit, speedup_report, LatencyBudget, SpeedupRow, STANDARD_LIMITS};
pub use mse::compute_mse;
pub use scene::{Scene, Surface, DEFAULT_STIFFNESS};
pub use trace::{csv_header, SimulationTrace, TraceRecord, TraceTable, SIGNALS};
pub use trajectory::{generate_trajectory, Segment, TrajectorySpec};

use crate::channel::{ChannelConfig, ChannelError, ChannelState};
use crate::force::{feedback_force, kinesthetic_feedback, ForceVector};
use crate::kinematics::{
    forward_kinematics, inverse_kinematics, Backend, CartesianPosition, DeviceGeometry,
    JointAngles, KinematicsError,
};
use crate::numerics::CordicConfig;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("sample {sample}: {source}")]
    Unreachable {
        sample: usize,
        #[source]
        source: KinematicsError,
    },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("{channel} channel: {source}")]
    Channel {
        channel: &'static str,
        #[source]
        source: ChannelError,
    },
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("series lengths differ: {left} vs {right}")]
    SeriesLengthMismatch { left: usize, right: usize },
    #[error("series is empty")]
    EmptySeries,
    #[error("trace schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How the slave joints follow the IK output.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Tracking {
    /// Slave joints equal the IK output at every sample.
    #[default]
    Ideal,
    /// `y(n) = y(n-1) + (1 - pole) * (u(n) - y(n-1))`, starting at `u(0)`.
    FirstOrderLag { pole: f64 },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineConfig {
    pub trajectory: TrajectorySpec,
    pub geometry: DeviceGeometry,
    pub scene: Scene,
    pub forward: ChannelConfig,
    pub backward: ChannelConfig,
    pub tracking: Tracking,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.trajectory.validate()?;
        self.geometry.validate()?;
        self.scene.validate(self.trajectory.len())?;
        self.forward
            .validate()
            .map_err(|source| PipelineError::Channel {
                channel: "forward",
                source,
            })?;
        self.backward
            .validate()
            .map_err(|source| PipelineError::Channel {
                channel: "backward",
                source,
            })?;
        if let Tracking::FirstOrderLag { pole } = self.tracking {
            if !(0.0..1.0).contains(&pole) {
                return Err(PipelineError::InvalidConfig(format!(
                    "tracking pole must lie in [0, 1), got {pole}"
                )));
            }
        }
        Ok(())
    }
}

/// Prediction stage slot. The slave-side command predictor sees `v(n)`
/// before IK; the master-side feedback predictor sees `q(n)` before the
/// torque computation.
pub trait Predictor {
    fn predict(&mut self, n: usize, value: [f64; 3]) -> [f64; 3];
}

/// Pass-through predictor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Predictor for Identity {
    fn predict(&mut self, _n: usize, value: [f64; 3]) -> [f64; 3] {
        value
    }
}

pub struct Hooks<'a> {
    pub command: &'a mut dyn Predictor,
    pub feedback: &'a mut dyn Predictor,
}

pub fn run_pipeline(
    cfg: &PipelineConfig,
    backend: &Backend,
) -> Result<SimulationTrace, PipelineError> {
    let (mut a, mut b) = (Identity, Identity);
    run_pipeline_with(
        cfg,
        backend,
        Hooks {
            command: &mut a,
            feedback: &mut b,
        },
    )
}

pub fn run_pipeline_with(
    cfg: &PipelineConfig,
    backend: &Backend,
    hooks: Hooks<'_>,
) -> Result<SimulationTrace, PipelineError> {
    cfg.validate()?;
    let g = &cfg.geometry;
    let angles = generate_trajectory(&cfg.trajectory)?;
    let mut fc =
        ChannelState::new(cfg.forward.clone()).map_err(|source| PipelineError::Channel {
            channel: "forward",
            source,
        })?;
    let mut bc =
        ChannelState::new(cfg.backward.clone()).map_err(|source| PipelineError::Channel {
            channel: "backward",
            source,
        })?;

    let mut records = Vec::with_capacity(angles.len());
    let mut tracked: Option<[f64; 3]> = None;
    for (n, b) in angles.into_iter().enumerate() {
        let c = forward_kinematics(b, g, backend).to_array();
        let v = fc
            .step(c, n as u64)
            .map_err(|source| PipelineError::Channel {
                channel: "forward",
                source,
            })?;
        let v_pred = hooks.command.predict(n, v);
        let theta_hsd = inverse_kinematics(CartesianPosition::from_array(v_pred), g, backend)
            .map_err(|source| PipelineError::Unreachable { sample: n, source })?
            .to_array();
        let theta_sd = match (cfg.tracking, tracked) {
            (Tracking::FirstOrderLag { pole }, Some(prev)) => {
                [0, 1, 2].map(|i| prev[i] + (1.0 - pole) * (theta_hsd[i] - prev[i]))
            }
            _ => theta_hsd,
        };
        tracked = Some(theta_sd);
        let l = forward_kinematics(JointAngles::from_array(theta_sd), g, backend);
        let s_obj = cfg.scene.object_position(n, l);
        let h = feedback_force(s_obj, l, &cfg.scene.elasticity, backend).to_array();
        let q = bc
            .step(h, n as u64)
            .map_err(|source| PipelineError::Channel {
                channel: "backward",
                source,
            })?;
        let q_pred = hooks.feedback.predict(n, q);
        let p = kinesthetic_feedback(b, ForceVector::from_array(q_pred), g, backend).to_array();
        records.push(TraceRecord {
            b: b.to_array(),
            c,
            v,
            theta_hsd,
            theta_sd,
            l: l.to_array(),
            s_obj: s_obj.to_array(),
            h,
            q,
            p,
        });
    }
    Ok(SimulationTrace {
        backend: backend.name().to_string(),
        sample_period: cfg.trajectory.sample_period,
        records,
    })
}

/// Hardware modules compared against the double-precision model.
pub const MODULES: [(&str, [&str; 3]); 5] = [
    ("fk_hmd", ["x", "y", "z"]),
    ("fk_hsd", ["x", "y", "z"]),
    ("ik_hsd", ["theta1", "theta2", "theta3"]),
    ("kff_hmd", ["tau1", "tau2", "tau3"]),
    ("fbf_hsd", ["fx", "fy", "fz"]),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseEntry {
    pub module: String,
    pub component: String,
    pub mse: f64,
}

/// Re-evaluate each module on the hybrid backend, fed with the inputs that
/// module saw in the double-precision `reference` run, and compare outputs.
/// Errors upstream of a module therefore do not leak into its figure.
pub fn module_mse(
    reference: &SimulationTrace,
    geometry: &DeviceGeometry,
    scene: &Scene,
    cordic: &CordicConfig,
) -> Result<Vec<MseEntry>, PipelineError> {
    if reference.is_empty() {
        return Err(PipelineError::EmptySeries);
    }
    let hw = Backend::Hybrid(cordic.clone());
    let len = reference.len();
    // outputs[module][component][n]
    let mut outputs = vec![[vec![0.0; len], vec![0.0; len], vec![0.0; len]]; 5];
    let mut expected = outputs.clone();
    for (n, r) in reference.records.iter().enumerate() {
        let fk_hmd = forward_kinematics(JointAngles::from_array(r.b), geometry, &hw).to_array();
        let fk_hsd =
            forward_kinematics(JointAngles::from_array(r.theta_sd), geometry, &hw).to_array();
        let ik = inverse_kinematics(CartesianPosition::from_array(r.v), geometry, &hw)
            .map_err(|source| PipelineError::Unreachable { sample: n, source })?
            .to_array();
        let kff = kinesthetic_feedback(
            JointAngles::from_array(r.b),
            ForceVector::from_array(r.q),
            geometry,
            &hw,
        )
        .to_array();
        let fbf = feedback_force(
            CartesianPosition::from_array(r.s_obj),
            CartesianPosition::from_array(r.l),
            &scene.elasticity,
            &hw,
        )
        .to_array();
        let got = [fk_hmd, fk_hsd, ik, kff, fbf];
        let want = [r.c, r.l, r.theta_hsd, r.p, r.h];
        for m in 0..5 {
            for k in 0..3 {
                outputs[m][k][n] = got[m][k];
                expected[m][k][n] = want[m][k];
            }
        }
    }
    let mut entries = Vec::with_capacity(15);
    for (m, (module, comps)) in MODULES.iter().enumerate() {
        for (k, component) in comps.iter().enumerate() {
            entries.push(MseEntry {
                module: module.to_string(),
                component: component.to_string(),
                mse: compute_mse(&outputs[m][k], &expected[m][k])?,
            });
        }
    }
    Ok(entries)
}
