//! Jacobian matrix, kinesthetic torque `tau = J^T F` and the spring-law
//! contact force.

use serde::{Deserialize, Serialize};

use crate::kinematics::{Backend, CartesianPosition, DeviceGeometry, Geometry32, JointAngles};
use crate::numerics::{tfb, CordicConfig};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ForceVector {
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
}

impl ForceVector {
    pub fn new(fx: f64, fy: f64, fz: f64) -> Self {
        Self { fx, fy, fz }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.fx, self.fy, self.fz]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TorqueVector {
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
}

impl TorqueVector {
    pub fn new(tau1: f64, tau2: f64, tau3: f64) -> Self {
        Self { tau1, tau2, tau3 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.tau1, self.tau2, self.tau3]
    }
}

/// Row = Cartesian coordinate, column = joint. `entries[1][0]` (J21) is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JacobianMatrix {
    pub entries: [[f64; 3]; 3],
}

impl JacobianMatrix {
    /// `J[row][col]` with one-based indices as in `J11..J33`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row - 1][col - 1]
    }

    pub fn column(&self, col: usize) -> [f64; 3] {
        [
            self.entries[0][col],
            self.entries[1][col],
            self.entries[2][col],
        ]
    }
}

/// Per-axis elasticity of the touched object, N/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Elasticity {
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
}

impl Elasticity {
    pub fn uniform(h: f64) -> Self {
        Self {
            hx: h,
            hy: h,
            hz: h,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.hx, self.hy, self.hz]
            .iter()
            .all(|h| h.is_finite() && *h >= 0.0)
    }
}

pub fn jacobian(q: JointAngles, g: &DeviceGeometry, b: &Backend) -> JacobianMatrix {
    match b {
        Backend::Oracle => jacobian_oracle(q, g),
        Backend::Hybrid(cfg) => {
            let j = jacobian_hybrid(q, g, cfg);
            JacobianMatrix {
                entries: j.map(|row| row.map(f64::from)),
            }
        }
    }
}

fn jacobian_oracle(q: JointAngles, g: &DeviceGeometry) -> JacobianMatrix {
    let (s1, c1) = q.theta1.sin_cos();
    let (s2, c2) = q.theta2.sin_cos();
    let (s3, c3) = q.theta3.sin_cos();
    let (l1, l2) = (g.l1, g.l2);
    JacobianMatrix {
        entries: [
            [-c1 * (l2 * s3 + l1 * c2), l1 * s1 * s2, -l2 * s1 * c3],
            [0.0, l1 * c2, l2 * s3],
            [-l1 * c2 * s1 - l2 * s3 * s1, -l1 * s2 * c1, l2 * c3 * c1],
        ],
    }
}

/// The JM sub-circuit in binary32. Every entry has its own function
/// blocks; J21 has no circuit.
fn jacobian_hybrid(q: JointAngles, g: &DeviceGeometry, cfg: &CordicConfig) -> [[f32; 3]; 3] {
    let k = Geometry32::from(g);
    let (s1, c1) = tfb::sincos(q.theta1 as f32, cfg);
    let (s2, c2) = tfb::sincos(q.theta2 as f32, cfg);
    let (s3, c3) = tfb::sincos(q.theta3 as f32, cfg);
    let (l1, l2) = (k.l1, k.l2);

    let j11 = -(c1 * (l2 * s3 + l1 * c2));
    let j21 = 0.0f32;
    let j31 = -((l1 * c2) * s1) + -((l2 * s3) * s1);
    let j12 = (l1 * s1) * s2;
    let j22 = l1 * c2;
    let j32 = -((l1 * s2) * c1);
    let j13 = -((l2 * s1) * c3);
    let j23 = l2 * s3;
    let j33 = (l2 * c3) * c1;

    [[j11, j12, j13], [j21, j22, j23], [j31, j32, j33]]
}

/// Joint torques rendering the force `f` on the master: `tau = J^T F`.
pub fn kinesthetic_feedback(
    q: JointAngles,
    f: ForceVector,
    g: &DeviceGeometry,
    b: &Backend,
) -> TorqueVector {
    match b {
        Backend::Oracle => {
            let j = jacobian_oracle(q, g).entries;
            let [fx, fy, fz] = f.to_array();
            TorqueVector::new(
                j[0][0] * fx + j[1][0] * fy + j[2][0] * fz,
                j[0][1] * fx + j[1][1] * fy + j[2][1] * fz,
                j[0][2] * fx + j[1][2] * fy + j[2][2] * fz,
            )
        }
        Backend::Hybrid(cfg) => {
            // All nine JM entries first, then the three dot products.
            let j = jacobian_hybrid(q, g, cfg);
            let (fx, fy, fz) = (f.fx as f32, f.fy as f32, f.fz as f32);
            // Fixed accumulation order: (Jx*Fx + Jy*Fy) + Jz*Fz.
            let dot = |col: usize| (j[0][col] * fx + j[1][col] * fy) + j[2][col] * fz;
            TorqueVector::new(dot(0) as f64, dot(1) as f64, dot(2) as f64)
        }
    }
}

/// Spring-law contact force `h * (object - tool)`, axis by axis.
pub fn feedback_force(
    obj: CartesianPosition,
    env: CartesianPosition,
    h: &Elasticity,
    b: &Backend,
) -> ForceVector {
    match b {
        Backend::Oracle => ForceVector::new(
            h.hx * (obj.x - env.x),
            h.hy * (obj.y - env.y),
            h.hz * (obj.z - env.z),
        ),
        Backend::Hybrid(_) => {
            let axis = |o: f64, e: f64, k: f64| ((k as f32) * ((o as f32) - (e as f32))) as f64;
            ForceVector::new(
                axis(obj.x, env.x, h.hx),
                axis(obj.y, env.y, h.hy),
                axis(obj.z, env.z, h.hz),
            )
        }
    }
}
