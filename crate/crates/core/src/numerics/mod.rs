//! Software model of the hardware number system: Q-format fixed point, the
//! F2FP/FP2F converters, the CORDIC trigonometric kernel and a binary32
//! square root.

mod cordic;
mod fixed;
mod sqrt;

use thiserror::Error;

pub use cordic::{
    cordic_acos, cordic_atan2, cordic_gain, cordic_sincos, CordicConfig, CordicParams,
    DEFAULT_GUARD_BITS, DEFAULT_ITERATIONS,
};
pub use fixed::{
    fixed_to_float, float_to_fixed, float_to_fixed_with, FixedValue, QFormat, Rounding,
};
pub use sqrt::sqrt32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("invalid fixed-point format s{total_bits}.{frac_bits}")]
    InvalidFormat { total_bits: u8, frac_bits: u8 },
    #[error("cannot parse fixed-point format {0:?}, expected \"sV.N\"")]
    FormatSyntax(String),
    #[error("raw value {raw} does not fit {format}")]
    RawOutOfRange { raw: i64, format: QFormat },
    #[error("invalid CORDIC configuration: {0}")]
    InvalidCordic(String),
    #[error("square root of negative value {0}")]
    NegativeRadicand(f32),
}

/// Trigonometric function block: binary32 in, F2FP, CORDIC, FP2F, binary32 out.
pub mod tfb {
    use super::*;

    pub fn sincos(angle: f32, cfg: &CordicConfig) -> (f32, f32) {
        let a = float_to_fixed(angle as f64, cfg.format());
        let (s, c) = cordic_sincos(a, cfg);
        (s.to_f32(), c.to_f32())
    }

    pub fn atan2(y: f32, x: f32, cfg: &CordicConfig) -> f32 {
        let fmt = cfg.format();
        cordic_atan2(
            float_to_fixed(y as f64, fmt),
            float_to_fixed(x as f64, fmt),
            cfg,
        )
        .to_f32()
    }

    pub fn acos(t: f32, cfg: &CordicConfig) -> f32 {
        cordic_acos(float_to_fixed(t as f64, cfg.format()), cfg).to_f32()
    }
}
