//! Environment model: where the nearest object surface is for a tool
//! position, and how stiff it is.

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::force::Elasticity;
use crate::kinematics::CartesianPosition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Surface {
    /// Free space: the object point coincides with the tool.
    None,
    /// Half-space behind a plane. `normal` points into free space and need
    /// not be unit length. A tool behind the plane sees its projection onto
    /// the plane; a tool in front sees itself (no force).
    Plane { point: [f64; 3], normal: [f64; 3] },
    /// Explicit `s_obj(n)`, one entry per sample.
    Table { positions: Vec<[f64; 3]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub surface: Surface,
    pub elasticity: Elasticity,
}

impl Default for Scene {
    /// A tilted wall through the tool position at the start of the third
    /// ramp of the default trajectory; the tool presses into it for the
    /// whole ramp.
    fn default() -> Self {
        Self {
            surface: Surface::Plane {
                point: [-0.0954594154601839, -0.0145405845398161, -0.170],
                normal: [1.0, -1.0, 0.5],
            },
            elasticity: Elasticity::uniform(DEFAULT_STIFFNESS),
        }
    }
}

pub const DEFAULT_STIFFNESS: f64 = 150.0;

impl Scene {
    pub fn free_space() -> Self {
        Self {
            surface: Surface::None,
            elasticity: Elasticity::uniform(DEFAULT_STIFFNESS),
        }
    }

    pub fn validate(&self, samples: usize) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidScene(m));
        if !self.elasticity.is_valid() {
            return bad("elasticity must be finite and non-negative".into());
        }
        match &self.surface {
            Surface::None => {}
            Surface::Plane { point, normal } => {
                if point.iter().chain(normal).any(|v| !v.is_finite()) {
                    return bad("plane point and normal must be finite".into());
                }
                if normal.iter().all(|v| *v == 0.0) {
                    return bad("plane normal must be nonzero".into());
                }
            }
            Surface::Table { positions } => {
                if positions.len() != samples {
                    return bad(format!(
                        "object table has {} rows, trajectory has {samples} samples",
                        positions.len()
                    ));
                }
                if positions.iter().flatten().any(|v| !v.is_finite()) {
                    return bad("object table contains a non-finite position".into());
                }
            }
        }
        Ok(())
    }

    /// `s_obj(n)` for a tool at `tool`.
    pub fn object_position(&self, n: usize, tool: CartesianPosition) -> CartesianPosition {
        match &self.surface {
            Surface::None => tool,
            Surface::Table { positions } => CartesianPosition::from_array(positions[n]),
            Surface::Plane { point, normal } => {
                let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
                let u = normal.map(|v| v / norm);
                let l = tool.to_array();
                let d: f64 = (0..3).map(|i| (l[i] - point[i]) * u[i]).sum();
                if d < 0.0 {
                    CartesianPosition::from_array([0, 1, 2].map(|i| l[i] - d * u[i]))
                } else {
                    tool
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_projects_only_when_penetrated() {
        let s = Scene {
            surface: Surface::Plane {
                point: [0.0; 3],
                normal: [0.0, 0.0, 2.0],
            },
            elasticity: Elasticity::uniform(1.0),
        };
        let above = CartesianPosition::new(0.1, 0.2, 0.3);
        assert_eq!(s.object_position(0, above), above);
        let below = CartesianPosition::new(0.1, 0.2, -0.3);
        assert_eq!(
            s.object_position(0, below),
            CartesianPosition::new(0.1, 0.2, 0.0)
        );
    }

    #[test]
    fn table_length_must_match() {
        let s = Scene {
            surface: Surface::Table {
                positions: vec![[0.0; 3]; 3],
            },
            elasticity: Elasticity::uniform(1.0),
        };
        assert!(s.validate(3).is_ok());
        assert!(s.validate(4).is_err());
    }
}
