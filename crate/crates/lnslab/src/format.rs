//! LNS formats, values and both rounding disciplines.
//!
//! All log-domain math is carried out in base-2 logarithms: a format stores
//! `log2(base)` alongside `base`, and [`LnsFormat::alias`] rescales that field
//! by an exact power of two. This makes aliased formats (same value set,
//! shifted binary point) produce bit-identical floating-point results, which
//! the aliasing tests rely on.

use std::fmt;
use std::str::FromStr;

use crate::{LnsError, Result};

/// How the exponent code range is interpreted.
///
/// The paper's word-length table implies plain two's complement over i+f bits,
/// while its smallest-value expression `b^-(2^i - 2^-f)` implies a symmetric
/// range that spends an extra code bit. Both are supported; sweeps that
/// reproduce the paper's error tables need [`ExponentConvention::SymmetricWide`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ExponentConvention {
    /// Codes in `[-2^(i+f-1), 2^(i+f-1) - 1]` (i+f bits, two's complement).
    TwosComplementHalf,
    /// Codes in `[-(2^(i+f) - 1), 2^(i+f) - 1]`; exponent range `±(2^i - 2^-f)`.
    SymmetricWide,
}

/// Which domain the rounding error is minimized in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundingDomain {
    LogDomain,
    RealDomain,
}

/// An LNS number format: base `b`, `i` integer and `f` fractional exponent
/// bits, plus the exponent-range convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LnsFormat {
    base: f64,
    log2_base: f64,
    int_bits: u32,
    frac_bits: u32,
    convention: ExponentConvention,
}

/// Outcome of rounding an exponent into a format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounded {
    Code(i64),
    /// Below the round-to-zero threshold (`m < min_exp - ulp/2`).
    Zero,
    /// Above the saturation threshold (`m > max_exp + ulp/2`).
    Overflow,
}

/// The value triplet of Eq. (1): zero flag, sign, exponent code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LnsValue {
    pub zero: bool,
    pub sign: bool,
    pub code: i64,
}

/// Exponent/real range of a format.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min_exp: f64,
    pub max_exp: f64,
    pub min_pos_real: f64,
    pub max_real: f64,
}

/// Result of an encode: the value plus saturation/underflow flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Encoded {
    pub value: LnsValue,
    pub overflow: bool,
    pub underflow_to_zero: bool,
}

impl LnsValue {
    pub const ZERO: LnsValue = LnsValue { zero: true, sign: false, code: 0 };

    pub fn new(sign: bool, code: i64) -> Self {
        LnsValue { zero: false, sign, code }
    }
}

impl LnsFormat {
    /// Validated constructor. `base > 1`, `i >= 1`, `f >= 0`, `i + f >= 1`.
    pub fn new(
        base: f64,
        int_bits: u32,
        frac_bits: u32,
        convention: ExponentConvention,
    ) -> Result<Self> {
        if !(base > 1.0) || !base.is_finite() {
            return Err(LnsError::Domain(format!("base must be finite and > 1, got {base}")));
        }
        if int_bits < 1 {
            return Err(LnsError::Domain("int_bits must be >= 1".into()));
        }
        if int_bits + frac_bits > 24 {
            return Err(LnsError::Domain(format!(
                "exponent width {}+{} exceeds the supported 24 bits",
                int_bits, frac_bits
            )));
        }
        Ok(LnsFormat { base, log2_base: base.log2(), int_bits, frac_bits, convention })
    }

    fn from_log2(
        base: f64,
        log2_base: f64,
        int_bits: u32,
        frac_bits: u32,
        convention: ExponentConvention,
    ) -> Self {
        LnsFormat { base, log2_base, int_bits, frac_bits, convention }
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// log2 of the base; the canonical representation used by all exact math.
    pub fn log2_base(&self) -> f64 {
        self.log2_base
    }

    pub fn int_bits(&self) -> u32 {
        self.int_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn convention(&self) -> ExponentConvention {
        self.convention
    }

    /// Log-domain unit of least precision, exactly `2^-f`.
    pub fn ulp_lns(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    /// Real-domain ratio between successive values, `r = b^(2^-f)`.
    pub fn radix(&self) -> f64 {
        (self.ulp_lns() * self.log2_base).exp2()
    }

    /// Half-step multiplicative bound `b^(2^-f-1)` of Eq. (7).
    pub fn ulp_half_real(&self) -> f64 {
        (0.5 * self.ulp_lns() * self.log2_base).exp2()
    }

    pub fn min_code(&self) -> i64 {
        match self.convention {
            ExponentConvention::TwosComplementHalf => -(1i64 << (self.int_bits + self.frac_bits - 1)),
            ExponentConvention::SymmetricWide => -((1i64 << (self.int_bits + self.frac_bits)) - 1),
        }
    }

    pub fn max_code(&self) -> i64 {
        match self.convention {
            ExponentConvention::TwosComplementHalf => (1i64 << (self.int_bits + self.frac_bits - 1)) - 1,
            ExponentConvention::SymmetricWide => (1i64 << (self.int_bits + self.frac_bits)) - 1,
        }
    }

    pub fn code_count(&self) -> i64 {
        self.max_code() - self.min_code() + 1
    }

    pub fn bounds(&self) -> Bounds {
        let ulp = self.ulp_lns();
        let min_exp = self.min_code() as f64 * ulp;
        let max_exp = self.max_code() as f64 * ulp;
        Bounds {
            min_exp,
            max_exp,
            min_pos_real: (min_exp * self.log2_base).exp2(),
            max_real: (max_exp * self.log2_base).exp2(),
        }
    }

    /// Shifted-point alias with an identical value set (Eq. 2): positive
    /// `point_shift` takes square roots of the base and adds integer bits,
    /// negative squares the base and adds fractional bits.
    pub fn alias(&self, point_shift: i32) -> Result<Self> {
        if point_shift == 0 {
            return Ok(*self);
        }
        let int_bits = self.int_bits as i64 + point_shift as i64;
        let frac_bits = self.frac_bits as i64 - point_shift as i64;
        if int_bits < 1 || frac_bits < 0 {
            return Err(LnsError::Domain(format!(
                "alias shift {point_shift} leaves invalid bit counts Q({int_bits},{frac_bits})"
            )));
        }
        // Exact power-of-two rescale of log2(base) keeps aliased math bit-identical.
        let log2_base = self.log2_base * (-(point_shift as f64)).exp2();
        let base = log2_base.exp2();
        Ok(LnsFormat::from_log2(base, log2_base, int_bits as u32, frac_bits as u32, self.convention))
    }

    /// Decoded real for a value: `0` or `(-1)^sign * scale * b^(code * 2^-f)`.
    pub fn decode(&self, v: LnsValue, scale: f64) -> f64 {
        if v.zero {
            return 0.0;
        }
        let magnitude = scale * (v.code as f64 * self.ulp_lns() * self.log2_base).exp2();
        if v.sign {
            -magnitude
        } else {
            magnitude
        }
    }

    /// Nearest-code rounding of an exponent, ties toward +∞, with the
    /// round-to-zero rule below `min_exp - ulp/2` and saturation detection
    /// above `max_exp + ulp/2`.
    pub fn round_log_domain(&self, m: f64) -> Rounded {
        if m == f64::NEG_INFINITY {
            return Rounded::Zero;
        }
        let ulp = self.ulp_lns();
        let b = self.bounds();
        if m < b.min_exp - 0.5 * ulp {
            return Rounded::Zero;
        }
        if m > b.max_exp + 0.5 * ulp {
            return Rounded::Overflow;
        }
        let code = (m / ulp + 0.5).floor() as i64;
        Rounded::Code(code.clamp(self.min_code(), self.max_code()))
    }

    /// Real-domain rounding: of the two bracketing representable reals, picks
    /// the one at smaller additive distance (ties upward). Below the smallest
    /// positive value the choice is between zero and the minimum code, again
    /// by additive distance.
    pub fn round_real_domain(&self, value: f64, scale: f64) -> Rounded {
        debug_assert!(value > 0.0 && scale > 0.0);
        let v = value / scale;
        let b = self.bounds();
        if v < b.min_pos_real {
            // distance to zero is v, to the smallest positive value min_pos - v
            return if 2.0 * v < b.min_pos_real { Rounded::Zero } else { Rounded::Code(self.min_code()) };
        }
        if v > b.max_real {
            // additively the nearest code is always max; flag saturation past
            // the same half-ULP threshold the log domain uses
            let limit = b.max_real * (0.5 * self.ulp_lns() * self.log2_base).exp2();
            return if v > limit { Rounded::Overflow } else { Rounded::Code(self.max_code()) };
        }
        let ulp = self.ulp_lns();
        let m = v.log2() / self.log2_base;
        let lo = ((m / ulp).floor() as i64).clamp(self.min_code(), self.max_code() - 1);
        let hi = lo + 1;
        let v_lo = (lo as f64 * ulp * self.log2_base).exp2();
        let v_hi = (hi as f64 * ulp * self.log2_base).exp2();
        if v - v_lo < v_hi - v { Rounded::Code(lo) } else { Rounded::Code(hi) }
    }

    /// Round a real into the format under either domain; saturation and
    /// underflow-to-zero are reported as flags on the result.
    pub fn encode(&self, value: f64, domain: RoundingDomain, scale: f64) -> Encoded {
        if value == 0.0 {
            return Encoded { value: LnsValue::ZERO, overflow: false, underflow_to_zero: false };
        }
        let sign = value < 0.0;
        let rounded = match domain {
            RoundingDomain::LogDomain => {
                let m = (value.abs() / scale).log2() / self.log2_base;
                self.round_log_domain(m)
            }
            RoundingDomain::RealDomain => self.round_real_domain(value.abs(), scale),
        };
        match rounded {
            Rounded::Code(code) => Encoded {
                value: LnsValue::new(sign, code),
                overflow: false,
                underflow_to_zero: false,
            },
            Rounded::Zero => Encoded { value: LnsValue::ZERO, overflow: false, underflow_to_zero: true },
            Rounded::Overflow => Encoded {
                value: LnsValue::new(sign, self.max_code()),
                overflow: true,
                underflow_to_zero: false,
            },
        }
    }

    /// All positive representable reals (`scale * b^(code*2^-f)` for every
    /// code), sorted ascending.
    pub fn value_set(&self, scale: f64) -> Result<Vec<f64>> {
        if self.int_bits + self.frac_bits > 24 {
            return Err(LnsError::Capacity(format!(
                "value_set over {}+{} exponent bits",
                self.int_bits, self.frac_bits
            )));
        }
        let ulp = self.ulp_lns();
        Ok((self.min_code()..=self.max_code())
            .map(|c| scale * (c as f64 * ulp * self.log2_base).exp2())
            .collect())
    }

    /// Serialization token, e.g. `b=2:Q(4,3):tc`.
    pub fn token(&self) -> String {
        format!("{self}")
    }
}

impl fmt::Display for LnsFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let conv = match self.convention {
            ExponentConvention::TwosComplementHalf => "tc",
            ExponentConvention::SymmetricWide => "sym",
        };
        write!(f, "b={}:Q({},{}):{}", self.base, self.int_bits, self.frac_bits, conv)
    }
}

/// Parses `Q(i,f)` into bit counts.
pub fn parse_q(s: &str) -> Result<(u32, u32)> {
    let bad = || LnsError::Domain(format!("bad Q-format token {s:?}, expected Q(i,f)"));
    let inner = s
        .strip_prefix("Q(")
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(bad)?;
    let (i, f) = inner.split_once(',').ok_or_else(bad)?;
    Ok((i.trim().parse().map_err(|_| bad())?, f.trim().parse().map_err(|_| bad())?))
}

impl FromStr for LnsFormat {
    type Err = LnsError;

    /// Parses the `b=<decimal>:Q(i,f):<convention>` token; the convention part
    /// is optional and defaults to two's complement.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let base_part = parts
            .next()
            .and_then(|p| p.strip_prefix("b="))
            .ok_or_else(|| LnsError::Domain(format!("bad format token {s:?}, expected b=<decimal>:Q(i,f)[:conv]")))?;
        let base: f64 = base_part
            .parse()
            .map_err(|_| LnsError::Domain(format!("bad base in format token {s:?}")))?;
        let q = parts
            .next()
            .ok_or_else(|| LnsError::Domain(format!("missing Q(i,f) in format token {s:?}")))?;
        let (i, f) = parse_q(q)?;
        let convention = match parts.next() {
            None => ExponentConvention::TwosComplementHalf,
            Some("tc") | Some("TwosComplementHalf") => ExponentConvention::TwosComplementHalf,
            Some("sym") | Some("SymmetricWide") => ExponentConvention::SymmetricWide,
            Some(other) => {
                return Err(LnsError::Domain(format!("unknown exponent convention {other:?}")))
            }
        };
        if parts.next().is_some() {
            return Err(LnsError::Domain(format!("trailing garbage in format token {s:?}")));
        }
        LnsFormat::new(base, i, f, convention)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fmt(base: f64, i: u32, f: u32) -> LnsFormat {
        LnsFormat::new(base, i, f, ExponentConvention::TwosComplementHalf).unwrap()
    }

    #[test]
    fn derived_constants() {
        let q43 = fmt(2.0, 4, 3);
        assert_eq!(q43.ulp_lns(), 0.125);
        assert!((q43.radix() - 2f64.powf(0.125)).abs() < 1e-15);
        assert!((q43.ulp_half_real() - 2f64.powf(0.0625)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_formats() {
        assert!(LnsFormat::new(1.0, 2, 2, ExponentConvention::TwosComplementHalf).is_err());
        assert!(LnsFormat::new(0.5, 2, 2, ExponentConvention::TwosComplementHalf).is_err());
        assert!(LnsFormat::new(2.0, 0, 4, ExponentConvention::TwosComplementHalf).is_err());
    }

    #[test]
    fn tc_bounds_q22() {
        let b = fmt(2.0, 2, 2).bounds();
        assert_eq!(b.min_exp, -2.0);
        assert_eq!(b.max_exp, 1.75);
    }

    #[test]
    fn sym_bounds_match_section_5_1() {
        let f = LnsFormat::new(2.0, 2, 2, ExponentConvention::SymmetricWide).unwrap();
        let b = f.bounds();
        assert_eq!(b.min_exp, -(4.0 - 0.25));
        assert_eq!(b.max_exp, 4.0 - 0.25);
        assert_eq!(b.min_pos_real, 2f64.powf(-3.75));
    }

    #[test]
    fn worked_example_section_3_2() {
        // input exponent 0.5625 with base 2, f=0: log domain rounds up to 1,
        // real domain rounds 2^(9/16) ≈ 1.47683 down to 1.0 (closer to 1 than 2)
        let f = fmt(2.0, 4, 0);
        assert_eq!(f.round_log_domain(0.5625), Rounded::Code(1));
        let v = 2f64.powf(0.5625);
        assert!((v - 1.47683).abs() < 1e-5);
        assert_eq!(f.round_real_domain(v, 1.0), Rounded::Code(0));
    }

    #[test]
    fn round_to_zero_rule() {
        let f = fmt(2.0, 2, 2);
        let b = f.bounds();
        assert_eq!(f.round_log_domain(b.min_exp - 0.6 * f.ulp_lns()), Rounded::Zero);
        // exactly half an ULP below min rounds up to the min code
        assert_eq!(f.round_log_domain(b.min_exp - 0.5 * f.ulp_lns()), Rounded::Code(f.min_code()));
        assert_eq!(f.round_log_domain(f64::NEG_INFINITY), Rounded::Zero);
        assert_eq!(f.round_log_domain(b.max_exp + 0.6 * f.ulp_lns()), Rounded::Overflow);
    }

    #[test]
    fn real_domain_tie_rounds_upward() {
        let f = fmt(2.0, 3, 0);
        assert_eq!(f.round_real_domain(1.5, 1.0), Rounded::Code(1));
        assert_eq!(f.round_real_domain(1.5 - 1e-9, 1.0), Rounded::Code(0));
    }

    #[test]
    fn encode_decode_roundtrip() {
        for conv in [ExponentConvention::TwosComplementHalf, ExponentConvention::SymmetricWide] {
            let f = LnsFormat::new(1.7, 3, 2, conv).unwrap();
            for code in f.min_code()..=f.max_code() {
                for sign in [false, true] {
                    let v = LnsValue::new(sign, code);
                    for domain in [RoundingDomain::LogDomain, RoundingDomain::RealDomain] {
                        let enc = f.encode(f.decode(v, 1.0), domain, 1.0);
                        assert_eq!(enc.value, v, "{f} code {code} domain {domain:?}");
                    }
                }
            }
            let enc = f.encode(0.0, RoundingDomain::LogDomain, 1.0);
            assert_eq!(enc.value, LnsValue::ZERO);
        }
    }

    #[test]
    fn log_rounding_error_within_half_ulp() {
        let f = fmt(1.9, 2, 3);
        let b = f.bounds();
        let ulp = f.ulp_lns();
        let mut m = b.min_exp - 0.5 * ulp;
        while m <= b.max_exp + 0.5 * ulp {
            if let Rounded::Code(c) = f.round_log_domain(m) {
                assert!((c as f64 * ulp - m).abs() <= 0.5 * ulp + 1e-12);
            }
            m += ulp / 7.0;
        }
    }

    #[test]
    fn real_rounding_relative_error_bound() {
        // additive nearest keeps the relative error under sqrt(r) - 1
        let f = fmt(2.0, 3, 1);
        let bound = f.radix().sqrt() - 1.0;
        let b = f.bounds();
        let mut v = b.min_pos_real;
        while v <= b.max_real {
            if let Rounded::Code(c) = f.round_real_domain(v, 1.0) {
                let dec = f.decode(LnsValue::new(false, c), 1.0);
                assert!(((dec - v) / v).abs() <= bound + 1e-12);
            }
            v *= 1.013;
        }
    }

    #[test]
    fn alias_examples() {
        // (√2, Q(3,3)) has the value set of base-2 Q(2,4)
        let root2 = LnsFormat::new(2f64.sqrt(), 3, 3, ExponentConvention::TwosComplementHalf).unwrap();
        let aliased = root2.alias(-1).unwrap();
        assert!((aliased.base() - 2.0).abs() < 1e-12);
        assert_eq!((aliased.int_bits(), aliased.frac_bits()), (2, 4));

        // (2, Q(3,4)) squared: (4, Q(2,5))
        let b2 = fmt(2.0, 3, 4);
        let b4 = b2.alias(-1).unwrap();
        assert!((b4.base() - 4.0).abs() < 1e-12);
        assert_eq!((b4.int_bits(), b4.frac_bits()), (2, 5));
        // rooted: (√2, Q(4,3))
        let br = b2.alias(1).unwrap();
        assert!((br.base() - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!((br.int_bits(), br.frac_bits()), (4, 3));
        assert_eq!(b2.alias(0).unwrap(), b2);
        assert!(b2.alias(-3).is_err());
    }

    #[test]
    fn alias_value_sets_identical() {
        let base = fmt(2.0, 3, 4);
        let want = base.value_set(1.0).unwrap();
        for shift in [-1, 1, 2] {
            let got = base.alias(shift).unwrap().value_set(1.0).unwrap();
            assert_eq!(want, got, "shift {shift}");
        }
        // base √2, Q(3,0) vs base 2, Q(2,1)
        let a = LnsFormat::new(2f64.sqrt(), 3, 0, ExponentConvention::TwosComplementHalf).unwrap();
        assert_eq!(a.value_set(1.0).unwrap(), a.alias(-1).unwrap().value_set(1.0).unwrap());
    }

    #[test]
    fn value_set_basics() {
        let f = fmt(2.0, 3, 0);
        let set = f.value_set(1.0).unwrap();
        assert_eq!(set.len(), 8);
        assert_eq!(&set[4..], &[1.0, 2.0, 4.0, 8.0]);
    }

    #[test]
    fn decode_examples() {
        let f = fmt(2.0, 4, 4);
        assert_eq!(f.decode(LnsValue::ZERO, 1.0), 0.0);
        let v = LnsValue::new(false, 9); // m = 9/16
        assert!((f.decode(v, 1.0) - 2f64.powf(0.5625)).abs() < 1e-12);
        assert_eq!(f.decode(LnsValue::new(true, 0), 1.0), -1.0);
    }

    #[test]
    fn token_roundtrip() {
        for tok in ["b=2:Q(4,3):tc", "b=1.96:Q(4,4):sym", "b=1.417:Q(2,2)"] {
            let f: LnsFormat = tok.parse().unwrap();
            let back: LnsFormat = f.token().parse().unwrap();
            assert_eq!(f, back);
        }
        assert!("Q(2,2)".parse::<LnsFormat>().is_err());
        assert!("b=x:Q(2,2)".parse::<LnsFormat>().is_err());
        assert!("b=2:Q(2,2):weird".parse::<LnsFormat>().is_err());
    }
}
