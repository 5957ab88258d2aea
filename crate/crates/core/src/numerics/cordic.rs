//! Shift-and-add CORDIC kernel behind the trigonometric function block.
//!
//! Rotation mode yields sine and cosine, vectoring mode yields `atan2`, and
//! the arccosine is composed from vectoring mode plus [`sqrt32`]. Internal
//! registers carry `guard_bits` extra fractional bits beyond the I/O format
//! and shifts are arithmetic (they truncate toward negative infinity).
//! Folding into the first quadrant happens on sign/magnitude so that the
//! odd/even symmetries hold bit-for-bit.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::fixed::{float_to_fixed, FixedValue, QFormat};
use super::sqrt::sqrt32;
use super::NumericsError;

/// Iteration count used when nothing else is configured.
pub const DEFAULT_ITERATIONS: u32 = 16;
/// Extra fractional bits in the internal x/y/z registers.
pub const DEFAULT_GUARD_BITS: u32 = 2;

const MAX_WORKING_FRAC_BITS: u32 = 56;

/// Serializable knobs of a [`CordicConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CordicParams {
    pub iterations: u32,
    pub format: QFormat,
    pub guard_bits: u32,
}

impl Default for CordicParams {
    fn default() -> Self {
        Self {
            iterations: DEFAULT_ITERATIONS,
            format: QFormat::S16_13,
            guard_bits: DEFAULT_GUARD_BITS,
        }
    }
}

/// A configured CORDIC unit with its arctangent table and gain constant.
#[derive(Debug, Clone, PartialEq)]
pub struct CordicConfig {
    params: CordicParams,
    gain_compensation: FixedValue,
    // Values below are in the working precision (format N + guard bits).
    gain_working: i64,
    atan_table: Vec<i64>,
    pi: i64,
    half_pi: i64,
}

impl Default for CordicConfig {
    fn default() -> Self {
        Self::new(CordicParams::default()).expect("default CORDIC parameters are valid")
    }
}

impl CordicConfig {
    pub fn new(params: CordicParams) -> Result<Self, NumericsError> {
        let fmt = params.format;
        let working = fmt.frac_bits() as u32 + params.guard_bits;
        if params.iterations == 0 {
            return Err(NumericsError::InvalidCordic(
                "iterations must be at least 1".into(),
            ));
        }
        if params.iterations > 62 {
            return Err(NumericsError::InvalidCordic("at most 62 iterations".into()));
        }
        if working > MAX_WORKING_FRAC_BITS {
            return Err(NumericsError::InvalidCordic(format!(
                "{} fractional + {} guard bits exceed the {MAX_WORKING_FRAC_BITS}-bit working register",
                fmt.frac_bits(),
                params.guard_bits
            )));
        }
        // The folded argument reaches pi/2, so the format must hold it.
        if fmt.max_value() < FRAC_PI_2 {
            return Err(NumericsError::InvalidCordic(format!(
                "format {fmt} cannot represent pi/2"
            )));
        }

        let gain = cordic_gain(params.iterations);
        let atan_table = (0..params.iterations)
            .map(|i| quantize((-(i as f64)).exp2().atan(), working))
            .collect();

        Ok(Self {
            params,
            gain_compensation: float_to_fixed(gain, fmt),
            gain_working: quantize(gain, working),
            atan_table,
            pi: quantize(PI, working),
            half_pi: quantize(FRAC_PI_2, working),
        })
    }

    pub fn with_iterations(iterations: u32) -> Result<Self, NumericsError> {
        Self::new(CordicParams {
            iterations,
            ..CordicParams::default()
        })
    }

    pub fn params(&self) -> CordicParams {
        self.params
    }

    pub fn iterations(&self) -> u32 {
        self.params.iterations
    }

    pub fn format(&self) -> QFormat {
        self.params.format
    }

    pub fn guard_bits(&self) -> u32 {
        self.params.guard_bits
    }

    /// Gain compensation `K = prod 1/sqrt(1 + 2^-2i)` in the I/O format.
    pub fn gain_compensation(&self) -> FixedValue {
        self.gain_compensation
    }

    /// Documented accuracy bound for sine, cosine and atan2.
    pub fn tolerance(&self) -> f64 {
        4.0 * self.format().lsb()
    }

    /// Documented accuracy bound for arccosine away from `|t| = 1`.
    pub fn acos_tolerance(&self) -> f64 {
        8.0 * self.format().lsb()
    }

    fn working_bits(&self) -> u32 {
        self.format().frac_bits() as u32 + self.params.guard_bits
    }

    fn to_working(&self, v: FixedValue) -> i64 {
        let from = v.format().frac_bits() as u32;
        let to = self.working_bits();
        if to >= from {
            v.raw() << (to - from)
        } else {
            v.raw() >> (from - to)
        }
    }

    /// Round half away from zero from the working precision back into the
    /// I/O format (sign/magnitude, so negation commutes with it).
    fn to_output(&self, w: i64) -> FixedValue {
        let g = self.params.guard_bits;
        let mag = if g == 0 {
            w.abs()
        } else {
            (w.abs() + (1 << (g - 1))) >> g
        };
        let raw = if w < 0 { -mag } else { mag };
        FixedValue::saturating_from_raw(raw, self.format())
    }
}

fn quantize(x: f64, frac_bits: u32) -> i64 {
    (x * (frac_bits as f64).exp2()).round_ties_even() as i64
}

/// `prod_{i<n} 1/sqrt(1 + 2^-2i)`.
pub fn cordic_gain(iterations: u32) -> f64 {
    (0..iterations)
        .map(|i| 1.0 / (1.0 + (-2.0 * i as f64).exp2()).sqrt())
        .product()
}

/// Rotation mode on a first-quadrant angle; returns `(sin, cos)` in working units.
fn rotate(cfg: &CordicConfig, angle: i64) -> (i64, i64) {
    let mut x = cfg.gain_working;
    let mut y = 0i64;
    let mut z = angle;
    for (i, &step) in cfg.atan_table.iter().enumerate() {
        let (dx, dy) = (y >> i, x >> i);
        if z >= 0 {
            x -= dx;
            y += dy;
            z -= step;
        } else {
            x += dx;
            y -= dy;
            z += step;
        }
    }
    (y, x)
}

/// Vectoring mode on a non-negative vector; returns `atan(y/x)` in working units.
fn vector(cfg: &CordicConfig, mut x: i64, mut y: i64) -> i64 {
    let mut z = 0i64;
    for (i, &step) in cfg.atan_table.iter().enumerate() {
        let (dx, dy) = (y >> i, x >> i);
        if y > 0 {
            x += dx;
            y -= dy;
            z += step;
        } else if y < 0 {
            x -= dx;
            y += dy;
            z -= step;
        }
    }
    z
}

/// Sine and cosine of a fixed-point angle (radians).
///
/// Angles outside `[-pi, pi]` are wrapped by whole turns first. Zero maps to
/// exactly `(0, 1)`.
pub fn cordic_sincos(angle: FixedValue, cfg: &CordicConfig) -> (FixedValue, FixedValue) {
    let fmt = cfg.format();
    if angle.raw() == 0 {
        return (
            FixedValue::zero(fmt),
            FixedValue::saturating_from_raw(1i64 << fmt.frac_bits(), fmt),
        );
    }

    let mut a = cfg.to_working(angle);
    let two_pi = 2 * cfg.pi;
    while a > cfg.pi {
        a -= two_pi;
    }
    while a < -cfg.pi {
        a += two_pi;
    }

    let negative = a < 0;
    let mut mag = a.abs();
    let second_quadrant = mag > cfg.half_pi;
    if second_quadrant {
        mag = cfg.pi - mag;
    }

    let (s, c) = rotate(cfg, mag);
    let s = if negative { -s } else { s };
    let c = if second_quadrant { -c } else { c };
    (cfg.to_output(s), cfg.to_output(c))
}

/// Four-quadrant arctangent of `y/x`, in `(-pi, pi]`. `(0, 0)` maps to 0.
pub fn cordic_atan2(y: FixedValue, x: FixedValue, cfg: &CordicConfig) -> FixedValue {
    let fmt = cfg.format();
    let mut wy = cfg.to_working(y).abs();
    let mut wx = cfg.to_working(x).abs();
    if wx == 0 && wy == 0 {
        return FixedValue::zero(fmt);
    }

    // atan2 is scale invariant: left-align small vectors so the shifts in
    // the first iterations keep their precision.
    let working = cfg.working_bits() as i32;
    let top = 63 - wx.max(wy).leading_zeros() as i32;
    if top < working {
        let shift = (working - top) as u32;
        wx <<= shift;
        wy <<= shift;
    }

    let mut z = vector(cfg, wx, wy);
    if x.raw() < 0 {
        z = cfg.pi - z;
    }
    if y.raw() < 0 {
        z = -z;
    }
    cfg.to_output(z)
}

/// Arccosine in `[0, pi]`, built as `atan2(sqrt(1 - t^2), t)`.
///
/// The argument is clamped to `[-1, 1]`; the radicand is formed and rooted
/// in single precision before entering the vectoring stage. Accuracy degrades
/// as `|t|` approaches 1.
pub fn cordic_acos(t: FixedValue, cfg: &CordicConfig) -> FixedValue {
    let fmt = cfg.format();
    let tf = t.to_f64().clamp(-1.0, 1.0) as f32;
    let radicand = (1.0f32 - tf * tf).max(0.0);
    let s = sqrt32(radicand).expect("radicand is clamped non-negative");
    let y = float_to_fixed(s as f64, fmt);
    let x = float_to_fixed(tf as f64, fmt);
    cordic_atan2(y, x, cfg)
}
