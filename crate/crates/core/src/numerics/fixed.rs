//! Signed Q-format fixed-point values and the float/fixed converters that
//! sit at the boundary of every trigonometric block.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::NumericsError;

/// Signed fixed-point format `[sV.N]`: `V` total bits, `N` of them fractional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QFormat {
    total_bits: u8,
    frac_bits: u8,
}

impl QFormat {
    /// The format used inside the trigonometric function block.
    pub const S16_13: QFormat = QFormat {
        total_bits: 16,
        frac_bits: 13,
    };

    pub fn new(total_bits: u8, frac_bits: u8) -> Result<Self, NumericsError> {
        if !(2..=64).contains(&total_bits) || frac_bits >= total_bits {
            return Err(NumericsError::InvalidFormat {
                total_bits,
                frac_bits,
            });
        }
        Ok(Self {
            total_bits,
            frac_bits,
        })
    }

    pub fn total_bits(&self) -> u8 {
        self.total_bits
    }

    pub fn frac_bits(&self) -> u8 {
        self.frac_bits
    }

    /// Always true: only signed formats exist in this model.
    pub fn signed(&self) -> bool {
        true
    }

    pub fn min_raw(&self) -> i64 {
        if self.total_bits == 64 {
            i64::MIN
        } else {
            -(1i64 << (self.total_bits - 1))
        }
    }

    pub fn max_raw(&self) -> i64 {
        if self.total_bits == 64 {
            i64::MAX
        } else {
            (1i64 << (self.total_bits - 1)) - 1
        }
    }

    /// Weight of one LSB, `2^-N`.
    pub fn lsb(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn min_value(&self) -> f64 {
        self.min_raw() as f64 * self.lsb()
    }

    pub fn max_value(&self) -> f64 {
        self.max_raw() as f64 * self.lsb()
    }

    pub fn contains_raw(&self, raw: i64) -> bool {
        raw >= self.min_raw() && raw <= self.max_raw()
    }

    pub(crate) fn saturate(&self, raw: i64) -> i64 {
        raw.clamp(self.min_raw(), self.max_raw())
    }
}

impl fmt::Display for QFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}.{}", self.total_bits, self.frac_bits)
    }
}

impl FromStr for QFormat {
    type Err = NumericsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NumericsError::FormatSyntax(s.to_string());
        let body = s.trim().strip_prefix('s').ok_or_else(bad)?;
        let (v, n) = body.split_once('.').ok_or_else(bad)?;
        let v: u8 = v.parse().map_err(|_| bad())?;
        let n: u8 = n.parse().map_err(|_| bad())?;
        QFormat::new(v, n)
    }
}

impl Serialize for QFormat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for QFormat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How the float-to-fixed converter disposes of bits below the LSB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// Round to nearest, ties to even.
    #[default]
    NearestEven,
    /// Round toward negative infinity (drop the low bits).
    Truncate,
}

/// A sample in a signed Q format. The raw integer always fits the format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedValue {
    raw: i64,
    format: QFormat,
}

impl FixedValue {
    pub fn from_raw(raw: i64, format: QFormat) -> Result<Self, NumericsError> {
        if !format.contains_raw(raw) {
            return Err(NumericsError::RawOutOfRange { raw, format });
        }
        Ok(Self { raw, format })
    }

    /// Clamp `raw` into the format instead of rejecting it.
    pub fn saturating_from_raw(raw: i64, format: QFormat) -> Self {
        Self {
            raw: format.saturate(raw),
            format,
        }
    }

    pub fn zero(format: QFormat) -> Self {
        Self { raw: 0, format }
    }

    pub fn raw(&self) -> i64 {
        self.raw
    }

    pub fn format(&self) -> QFormat {
        self.format
    }

    pub fn to_f64(&self) -> f64 {
        fixed_to_float(*self)
    }

    /// Exact whenever `V <= 25`, which covers `s16.13`.
    pub fn to_f32(&self) -> f32 {
        fixed_to_float(*self) as f32
    }
}

impl fmt::Display for FixedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}:{})", self.to_f64(), self.format, self.raw)
    }
}

/// F2FP: quantize with round-to-nearest-even, then saturate.
pub fn float_to_fixed(x: f64, fmt: QFormat) -> FixedValue {
    float_to_fixed_with(x, fmt, Rounding::NearestEven)
}

/// F2FP with an explicit rounding mode. NaN maps to zero.
pub fn float_to_fixed_with(x: f64, fmt: QFormat, rounding: Rounding) -> FixedValue {
    if x.is_nan() {
        return FixedValue::zero(fmt);
    }
    // Scaling by a power of two is exact in binary floating point.
    let scaled = x * (fmt.frac_bits() as f64).exp2();
    let quantized = match rounding {
        Rounding::NearestEven => scaled.round_ties_even(),
        Rounding::Truncate => scaled.floor(),
    };
    // `as` saturates at the i64 limits; the format clamp does the rest.
    FixedValue::saturating_from_raw(quantized as i64, fmt)
}

/// FP2F: `raw / 2^N`.
pub fn fixed_to_float(v: FixedValue) -> f64 {
    v.raw as f64 * v.format.lsb()
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: QFormat = QFormat::S16_13;

    #[test]
    fn format_validation() {
        assert!(QFormat::new(16, 13).is_ok());
        assert!(QFormat::new(64, 63).is_ok());
        assert!(QFormat::new(2, 1).is_ok());
        assert!(QFormat::new(1, 0).is_err());
        assert!(QFormat::new(65, 10).is_err());
        assert!(QFormat::new(16, 16).is_err());
    }

    #[test]
    fn format_range() {
        assert_eq!(Q.min_raw(), -32768);
        assert_eq!(Q.max_raw(), 32767);
        assert_eq!(Q.min_value(), -4.0);
        assert_eq!(Q.max_value(), 32767.0 / 8192.0);
        let wide = QFormat::new(64, 0).unwrap();
        assert_eq!(wide.min_raw(), i64::MIN);
        assert_eq!(wide.max_raw(), i64::MAX);
    }

    #[test]
    fn format_string_round_trip() {
        assert_eq!(Q.to_string(), "s16.13");
        assert_eq!("s16.13".parse::<QFormat>().unwrap(), Q);
        assert_eq!(
            "s32.21".parse::<QFormat>().unwrap(),
            QFormat::new(32, 21).unwrap()
        );
        for bad in ["16.13", "s16", "s16.x", "u16.13", "s16.16", ""] {
            assert!(bad.parse::<QFormat>().is_err(), "{bad}");
        }
        let json = serde_json::to_string(&Q).unwrap();
        assert_eq!(json, "\"s16.13\"");
        assert_eq!(serde_json::from_str::<QFormat>(&json).unwrap(), Q);
    }

    #[test]
    fn f2fp_examples() {
        assert_eq!(float_to_fixed(1.0, Q).raw(), 8192);
        assert_eq!(float_to_fixed(0.5, Q).raw(), 4096);
        assert_eq!(float_to_fixed(5.0, Q).raw(), 32767);
        assert_eq!(float_to_fixed(-5.0, Q).raw(), -32768);
        assert_eq!(float_to_fixed(f64::INFINITY, Q).raw(), 32767);
        assert_eq!(float_to_fixed(f64::NAN, Q).raw(), 0);
    }

    #[test]
    fn f2fp_ties_to_even() {
        let half_lsb = Q.lsb() / 2.0;
        assert_eq!(float_to_fixed(half_lsb, Q).raw(), 0);
        assert_eq!(float_to_fixed(3.0 * half_lsb, Q).raw(), 2);
        assert_eq!(float_to_fixed(-half_lsb, Q).raw(), 0);
        assert_eq!(float_to_fixed(-3.0 * half_lsb, Q).raw(), -2);
    }

    #[test]
    fn f2fp_truncation_mode() {
        let x = 0.9 * Q.lsb();
        assert_eq!(float_to_fixed_with(x, Q, Rounding::Truncate).raw(), 0);
        assert_eq!(float_to_fixed_with(-x, Q, Rounding::Truncate).raw(), -1);
        assert_eq!(float_to_fixed_with(x, Q, Rounding::NearestEven).raw(), 1);
    }

    #[test]
    fn fp2f_examples() {
        let v = |raw| FixedValue::from_raw(raw, Q).unwrap();
        assert_eq!(fixed_to_float(v(8192)), 1.0);
        assert_eq!(fixed_to_float(v(-8192)), -1.0);
        assert_eq!(fixed_to_float(v(1)), 1.220703125e-4);
        assert_eq!(v(1).to_f32(), 2f32.powi(-13));
    }

    #[test]
    fn raw_range_checked() {
        assert!(FixedValue::from_raw(32768, Q).is_err());
        assert!(FixedValue::from_raw(-32769, Q).is_err());
        assert_eq!(FixedValue::saturating_from_raw(40000, Q).raw(), 32767);
    }

    #[test]
    fn exhaustive_s16_13_round_trip() {
        for raw in Q.min_raw()..=Q.max_raw() {
            let v = FixedValue::from_raw(raw, Q).unwrap();
            let x = fixed_to_float(v);
            assert_eq!(float_to_fixed(x, Q), v);
            // Every s16.13 value survives a trip through f32.
            assert_eq!(float_to_fixed(v.to_f32() as f64, Q), v);
        }
    }
}
