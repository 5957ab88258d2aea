//! Forward and inverse kinematics of the 3-DoF PHANToM Omni.
//!
//! Both functions come in two interchangeable backends. [`Backend::Oracle`]
//! evaluates everything in double precision with libm trigonometry.
//! [`Backend::Hybrid`] mirrors the hardware datapath: binary32 adders and
//! multipliers, binary32 geometry constants, trigonometry through the CORDIC
//! function block and the binary32 square root. The hybrid datapath is
//! written out operation by operation in the order of the circuits so its
//! rounding behaviour is reproducible.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{sqrt32, tfb, CordicConfig};

/// Tolerance on arccosine arguments before a target counts as unreachable.
pub const REACH_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("target unreachable: {angle} needs acos({argument})")]
    Unreachable { angle: &'static str, argument: f64 },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
}

/// Link lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceGeometry {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
}

impl Default for DeviceGeometry {
    fn default() -> Self {
        Self {
            l1: 0.135,
            l2: 0.135,
            l3: 0.025,
            l4: 0.135 + 0.035,
        }
    }
}

impl DeviceGeometry {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        for (name, v) in [
            ("l1", self.l1),
            ("l2", self.l2),
            ("l3", self.l3),
            ("l4", self.l4),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(KinematicsError::InvalidGeometry(format!(
                    "{name} must be a positive length, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl JointAngles {
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        Self {
            theta1,
            theta2,
            theta3,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.theta1, self.theta2, self.theta3]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartesianPosition {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianPosition {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Intermediate quantities of the inverse kinematics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IkIntermediates {
    /// Distance from the first-joint axis in the x/z plane.
    pub big_r: f64,
    /// Distance from the second joint to the tool.
    pub r: f64,
    pub gamma: f64,
    pub beta: f64,
    pub alpha: f64,
}

/// Which arithmetic evaluates a module.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Backend {
    /// binary32 datapath with CORDIC trigonometry.
    Hybrid(CordicConfig),
    /// Full double precision.
    #[default]
    Oracle,
}

impl Backend {
    pub fn hybrid_default() -> Self {
        Backend::Hybrid(CordicConfig::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::Hybrid(_) => "hybrid",
            Backend::Oracle => "oracle",
        }
    }
}

/// binary32 copies of the geometry, as the constants are stored in hardware.
#[derive(Clone, Copy)]
pub(crate) struct Geometry32 {
    pub l1: f32,
    pub l2: f32,
    pub l3: f32,
    pub l4: f32,
}

impl From<&DeviceGeometry> for Geometry32 {
    fn from(g: &DeviceGeometry) -> Self {
        Self {
            l1: g.l1 as f32,
            l2: g.l2 as f32,
            l3: g.l3 as f32,
            l4: g.l4 as f32,
        }
    }
}

/// Tool position from joint angles.
pub fn forward_kinematics(q: JointAngles, g: &DeviceGeometry, b: &Backend) -> CartesianPosition {
    match b {
        Backend::Oracle => fk_oracle(q, g),
        Backend::Hybrid(cfg) => fk_hybrid(q, g, cfg),
    }
}

fn fk_oracle(q: JointAngles, g: &DeviceGeometry) -> CartesianPosition {
    let (s1, c1) = q.theta1.sin_cos();
    let (s2, c2) = q.theta2.sin_cos();
    let (s3, c3) = q.theta3.sin_cos();
    let reach = g.l2 * s3 + g.l1 * c2;
    CartesianPosition {
        x: -s1 * reach,
        y: -g.l2 * c3 + g.l1 * s2 + g.l3,
        z: g.l2 * c1 * s3 + g.l1 * c1 * c2 - g.l4,
    }
}

fn fk_hybrid(q: JointAngles, g: &DeviceGeometry, cfg: &CordicConfig) -> CartesianPosition {
    let k = Geometry32::from(g);
    let (s1, c1) = tfb::sincos(q.theta1 as f32, cfg);
    let (s2, c2) = tfb::sincos(q.theta2 as f32, cfg);
    let (s3, c3) = tfb::sincos(q.theta3 as f32, cfg);

    // x: three multipliers, one adder, one inverter.
    let x = -(s1 * (k.l2 * s3 + k.l1 * c2));
    // y: two multipliers, two adders, one inverter.
    let y = (-(k.l2 * c3) + k.l1 * s2) + k.l3;
    // z: four multipliers, two adders, one inverter.
    let z = ((k.l2 * c1) * s3 + (k.l1 * c1) * c2) + -k.l4;

    CartesianPosition::new(x as f64, y as f64, z as f64)
}

fn check_acos(angle: &'static str, argument: f64) -> Result<f64, KinematicsError> {
    if argument.is_nan() || argument.abs() > 1.0 + REACH_EPSILON {
        return Err(KinematicsError::Unreachable { angle, argument });
    }
    Ok(argument.clamp(-1.0, 1.0))
}

/// R, r, gamma, beta and alpha for a tool position.
pub fn ik_intermediates(
    p: CartesianPosition,
    g: &DeviceGeometry,
    b: &Backend,
) -> Result<IkIntermediates, KinematicsError> {
    match b {
        Backend::Oracle => ik_oracle(p, g).map(|(_, m)| m),
        Backend::Hybrid(cfg) => ik_hybrid(p, g, cfg).map(|(_, m)| m),
    }
}

/// Joint angles that place the tool at `p`.
pub fn inverse_kinematics(
    p: CartesianPosition,
    g: &DeviceGeometry,
    b: &Backend,
) -> Result<JointAngles, KinematicsError> {
    match b {
        Backend::Oracle => ik_oracle(p, g).map(|(q, _)| q),
        Backend::Hybrid(cfg) => ik_hybrid(p, g, cfg).map(|(q, _)| q),
    }
}

fn ik_oracle(
    p: CartesianPosition,
    g: &DeviceGeometry,
) -> Result<(JointAngles, IkIntermediates), KinematicsError> {
    let zo = p.z + g.l4;
    let yo = p.y - g.l3;

    // Stage 1: theta1, R and r are independent.
    let theta1 = -p.x.atan2(zo);
    let big_r = (p.x * p.x + zo * zo).sqrt();
    let r = (p.x * p.x + zo * zo + yo * yo).sqrt();

    // Stage 2: gamma, beta and alpha.
    let gamma_arg = check_acos(
        "gamma",
        (g.l1 * g.l1 - g.l2 * g.l2 + r * r) / (2.0 * g.l1 * r),
    )?;
    let alpha_arg = check_acos(
        "alpha",
        (g.l1 * g.l1 + g.l2 * g.l2 - r * r) / (2.0 * g.l1 * g.l2),
    )?;
    let gamma = gamma_arg.acos();
    let beta = yo.atan2(big_r);
    let alpha = alpha_arg.acos();

    // Stage 3.
    let theta2 = gamma + beta;
    let theta3 = theta2 + alpha - FRAC_PI_2;

    Ok((
        JointAngles::new(theta1, theta2, theta3),
        IkIntermediates {
            big_r,
            r,
            gamma,
            beta,
            alpha,
        },
    ))
}

fn ik_hybrid(
    p: CartesianPosition,
    g: &DeviceGeometry,
    cfg: &CordicConfig,
) -> Result<(JointAngles, IkIntermediates), KinematicsError> {
    let k = Geometry32::from(g);
    let (x, y, z) = (p.x as f32, p.y as f32, p.z as f32);

    // Stage 1.
    let theta1 = -tfb::atan2(x, z + k.l4, cfg);
    let zo = z + k.l4;
    let big_r = sqrt32(x * x + zo * zo).expect("sum of squares");
    let zo = z + k.l4;
    let yo = y + -k.l3;
    let r = sqrt32((x * x + zo * zo) + yo * yo).expect("sum of squares");

    // Stage 2: the acos arguments are formed in binary32 and range-checked
    // before they enter the function block.
    let gamma_arg = ((k.l1 * k.l1) - (k.l2 * k.l2) + r * r) / ((2.0 * k.l1) * r);
    let alpha_arg = ((k.l1 * k.l1) + (k.l2 * k.l2) + -(r * r)) / ((2.0 * k.l1) * k.l2);
    let gamma_arg = check_acos("gamma", gamma_arg as f64)? as f32;
    let alpha_arg = check_acos("alpha", alpha_arg as f64)? as f32;
    let gamma = tfb::acos(gamma_arg, cfg);
    let beta = tfb::atan2(y + -k.l3, big_r, cfg);
    let alpha = tfb::acos(alpha_arg, cfg);

    // Stage 3.
    let theta2 = gamma + beta;
    let theta3 = (theta2 + alpha) + -(FRAC_PI_2 as f32);

    Ok((
        JointAngles::new(theta1 as f64, theta2 as f64, theta3 as f64),
        IkIntermediates {
            big_r: big_r as f64,
            r: r as f64,
            gamma: gamma as f64,
            beta: beta as f64,
            alpha: alpha as f64,
        },
    ))
}
