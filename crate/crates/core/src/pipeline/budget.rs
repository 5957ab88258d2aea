//! Round-trip latency budget and hardware speedup arithmetic.

use serde::{Deserialize, Serialize};

use super::PipelineError;

/// Share of the round trip a single compute device may use: 30% of the
/// budget split evenly over the eight one-way compute stages.
pub fn hardware_time_limit(t_latency: f64) -> f64 {
    0.3 * t_latency / 8.0
}

/// Per-stage one-way latencies, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyBudget {
    pub t_md: f64,
    pub t_hmd: f64,
    pub t_nw: f64,
    pub t_hsd: f64,
    pub t_sd: f64,
}

impl LatencyBudget {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let all = [self.t_md, self.t_hmd, self.t_nw, self.t_hsd, self.t_sd];
        if all.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(PipelineError::InvalidConfig(
                "latency budget entries must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Round-trip latency.
    pub fn t_latency(&self) -> f64 {
        2.0 * (self.t_md + self.t_hmd + self.t_nw + self.t_hsd + self.t_sd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    /// Round-trip limit, seconds.
    pub t_latency: f64,
    /// `hardware_time_limit(t_latency)`, seconds.
    pub time_limit: f64,
    pub ratio: f64,
    /// Whole-number speedup as tabulated: the ratio rounded down.
    pub speedup: u64,
}

pub fn speedup_report(t_hardware: f64, limits: &[f64]) -> Result<Vec<SpeedupRow>, PipelineError> {
    if !(t_hardware.is_finite() && t_hardware > 0.0) {
        return Err(PipelineError::InvalidConfig(format!(
            "t_hardware must be positive, got {t_hardware}"
        )));
    }
    limits
        .iter()
        .map(|&t_latency| {
            if !(t_latency.is_finite() && t_latency >= 0.0) {
                return Err(PipelineError::InvalidConfig(format!(
                    "latency limit must be non-negative, got {t_latency}"
                )));
            }
            let time_limit = hardware_time_limit(t_latency);
            let ratio = time_limit / t_hardware;
            Ok(SpeedupRow {
                t_latency,
                time_limit,
                ratio,
                speedup: ratio.floor() as u64,
            })
        })
        .collect()
}

/// The 1 ms and 10 ms round-trip targets.
pub const STANDARD_LIMITS: [f64; 2] = [1e-3, 10e-3];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_limits() {
        assert_eq!(hardware_time_limit(1e-3), 37.5e-6);
        assert_eq!(hardware_time_limit(10e-3), 375e-6);
        assert_eq!(hardware_time_limit(0.0), 0.0);
    }

    #[test]
    fn speedups() {
        let rows = speedup_report(403e-9, &STANDARD_LIMITS).unwrap();
        assert_eq!(rows[0].speedup, 93);
        assert_eq!(rows[1].speedup, 930);
        let l = 2.5e-3;
        let rows = speedup_report(hardware_time_limit(l), &[l]).unwrap();
        assert_eq!(rows[0].speedup, 1);
        assert!(speedup_report(0.0, &[1e-3]).is_err());
    }

    #[test]
    fn budget_total() {
        let b = LatencyBudget {
            t_md: 1.0,
            t_hmd: 2.0,
            t_nw: 3.0,
            t_hsd: 4.0,
            t_sd: 5.0,
        };
        assert_eq!(b.t_latency(), 30.0);
        assert!(LatencyBudget { t_nw: -1.0, ..b }.validate().is_err());
    }
}
