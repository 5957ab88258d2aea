//! Piecewise-linear joint-space trajectories.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::kinematics::JointAngles;

/// One joint ramp. The first sample of the segment sits at `start`, the
/// last at `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    /// 1, 2 or 3.
    pub joint: usize,
    pub start: f64,
    pub end: f64,
    pub samples: usize,
}

/// Segments run back to back. A joint sits at the start of its first
/// segment until that segment begins and at the end of its last segment
/// afterwards; joints that never move stay at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub segments: Vec<Segment>,
    /// Seconds.
    pub sample_period: f64,
}

impl Default for TrajectorySpec {
    /// Joint 1 to pi/2, then joint 2 to pi/4, then joint 3 to pi/4, 400
    /// samples each at 10 ms.
    fn default() -> Self {
        Self {
            segments: vec![
                Segment {
                    joint: 1,
                    start: 0.0,
                    end: FRAC_PI_2,
                    samples: 400,
                },
                Segment {
                    joint: 2,
                    start: 0.0,
                    end: FRAC_PI_4,
                    samples: 400,
                },
                Segment {
                    joint: 3,
                    start: 0.0,
                    end: FRAC_PI_4,
                    samples: 400,
                },
            ],
            sample_period: 0.01,
        }
    }
}

impl TrajectorySpec {
    /// Total sample count `Q`.
    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.samples).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.sample_period
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::InvalidTrajectory(msg));
        if !(self.sample_period.is_finite() && self.sample_period > 0.0) {
            return bad(format!(
                "sample_period must be positive, got {}",
                self.sample_period
            ));
        }
        if self.segments.is_empty() {
            return bad("at least one segment is required".into());
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(1..=3).contains(&s.joint) {
                return bad(format!(
                    "segments[{i}].joint must be 1, 2 or 3, got {}",
                    s.joint
                ));
            }
            if s.samples == 0 {
                return bad(format!("segments[{i}].samples must be at least 1"));
            }
            if !(s.start.is_finite() && s.end.is_finite()) {
                return bad(format!("segments[{i}] has a non-finite angle"));
            }
        }
        Ok(())
    }
}

/// Joint angles `b(n)` for every sample.
pub fn generate_trajectory(spec: &TrajectorySpec) -> Result<Vec<JointAngles>, PipelineError> {
    spec.validate()?;
    let mut pose = [0.0f64; 3];
    for j in 1..=3 {
        if let Some(s) = spec.segments.iter().find(|s| s.joint == j) {
            pose[j - 1] = s.start;
        }
    }
    let mut out = Vec::with_capacity(spec.len());
    for s in &spec.segments {
        let last = (s.samples - 1) as f64;
        for k in 0..s.samples {
            pose[s.joint - 1] = if s.samples == 1 {
                s.end
            } else {
                s.start + (s.end - s.start) * (k as f64 / last)
            };
            out.push(JointAngles::from_array(pose));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_trajectory_landmarks() {
        let t = generate_trajectory(&TrajectorySpec::default()).unwrap();
        assert_eq!(t.len(), 1200);
        assert_eq!(t[0].to_array(), [0.0; 3]);
        assert_eq!(t[399].to_array(), [FRAC_PI_2, 0.0, 0.0]);
        assert_eq!(t[400].to_array(), [FRAC_PI_2, 0.0, 0.0]);
        assert_eq!(t[1199].to_array(), [FRAC_PI_2, FRAC_PI_4, FRAC_PI_4]);
        assert!((TrajectorySpec::default().duration() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn ramps_are_linear() {
        let t = generate_trajectory(&TrajectorySpec::default()).unwrap();
        let step = FRAC_PI_4 / 399.0;
        for n in 801..1200 {
            let d = t[n].theta3 - t[n - 1].theta3;
            assert!((d - step).abs() < 1e-15);
            assert_eq!(t[n].theta1, FRAC_PI_2);
        }
    }

    #[test]
    fn untouched_joints_hold_their_first_start() {
        let spec = TrajectorySpec {
            segments: vec![
                Segment {
                    joint: 2,
                    start: 0.1,
                    end: 0.2,
                    samples: 3,
                },
                Segment {
                    joint: 3,
                    start: -0.5,
                    end: 0.5,
                    samples: 1,
                },
            ],
            sample_period: 0.001,
        };
        let t = generate_trajectory(&spec).unwrap();
        assert_eq!(t[0].to_array(), [0.0, 0.1, -0.5]);
        assert_eq!(t[2].to_array(), [0.0, 0.2, -0.5]);
        assert_eq!(t[3].to_array(), [0.0, 0.2, 0.5]);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = TrajectorySpec::default();
        spec.segments[1].joint = 4;
        assert!(
            matches!(generate_trajectory(&spec), Err(PipelineError::InvalidTrajectory(m)) if m.contains("joint"))
        );
        let mut spec = TrajectorySpec::default();
        spec.segments[0].samples = 0;
        assert!(spec.validate().is_err());
        let spec = TrajectorySpec {
            sample_period: 0.0,
            ..TrajectorySpec::default()
        };
        assert!(spec.validate().is_err());
    }
}
