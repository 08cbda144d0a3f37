//! Short floating-point formats used as the conversion source.

use std::fmt;
use std::str::FromStr;

use crate::{LnsError, Result};

/// Sign + `exp_bits` exponent + `mant_bits` mantissa, IEEE-like bias
/// `2^(e-1) - 1`. Subnormals and inf/NaN reservation are configurable because
/// the exact convention behind the paper's conversion table is unstated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MiniFloatFormat {
    pub exp_bits: u32,
    pub mant_bits: u32,
    pub bias: i32,
    pub supports_subnormals: bool,
    pub reserve_inf_nan: bool,
}

impl MiniFloatFormat {
    pub fn new(exp_bits: u32, mant_bits: u32) -> Result<Self> {
        if exp_bits < 1 {
            return Err(LnsError::Domain("minifloat needs at least 1 exponent bit".into()));
        }
        if exp_bits + mant_bits > 20 {
            return Err(LnsError::Capacity(format!(
                "minifloat {}+{} bits too large to enumerate",
                exp_bits, mant_bits
            )));
        }
        Ok(MiniFloatFormat {
            exp_bits,
            mant_bits,
            bias: (1i32 << (exp_bits - 1)) - 1,
            supports_subnormals: true,
            reserve_inf_nan: false,
        })
    }

    pub fn with_bias(mut self, bias: i32) -> Self {
        self.bias = bias;
        self
    }

    pub fn with_subnormals(mut self, on: bool) -> Self {
        self.supports_subnormals = on;
        self
    }

    pub fn with_inf_nan(mut self, reserved: bool) -> Self {
        self.reserve_inf_nan = reserved;
        self
    }

    pub fn total_bits(&self) -> u32 {
        1 + self.exp_bits + self.mant_bits
    }

    fn top_normal_exp(&self) -> i32 {
        let top = (1i32 << self.exp_bits) - 1;
        if self.reserve_inf_nan {
            top - 1 - self.bias
        } else {
            top - self.bias
        }
    }

    /// Every positive finite value, in encoding order (ascending).
    pub fn positive_values(&self) -> Vec<f64> {
        let mant_steps = 1i64 << self.mant_bits;
        let mut out = Vec::new();
        let top_field = 1i32 << self.exp_bits;
        for e in 0..top_field {
            if e == 0 {
                if !self.supports_subnormals {
                    continue;
                }
                for m in 1..mant_steps {
                    out.push(m as f64 / mant_steps as f64 * exp2i(1 - self.bias));
                }
            } else {
                if self.reserve_inf_nan && e == top_field - 1 {
                    break;
                }
                for m in 0..mant_steps {
                    out.push((1.0 + m as f64 / mant_steps as f64) * exp2i(e - self.bias));
                }
            }
        }
        out
    }

    pub fn max_finite(&self) -> f64 {
        let mant_steps = (1i64 << self.mant_bits) as f64;
        (2.0 - 1.0 / mant_steps) * exp2i(self.top_normal_exp())
    }

    fn min_normal(&self) -> f64 {
        exp2i(1 - self.bias)
    }

    /// Nearest representable value, ties to even, saturating at the largest
    /// finite value.
    pub fn round(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let sign = x.signum();
        let mag = x.abs();
        let mant_steps = (1i64 << self.mant_bits) as f64;
        let min_normal = self.min_normal();
        if mag < min_normal {
            if self.supports_subnormals {
                let quantum = min_normal / mant_steps;
                let k = (mag / quantum).round_ties_even();
                return sign * k * quantum;
            }
            // flush-to-zero format: nearest of {0, min_normal}
            return if 2.0 * mag < min_normal { 0.0 } else { sign * min_normal };
        }
        let max = self.max_finite();
        if mag >= max {
            return sign * max;
        }
        let e = mag.log2().floor() as i32;
        let scale = exp2i(e);
        let mut frac = (mag / scale * mant_steps).round_ties_even();
        let mut e = e;
        if frac >= 2.0 * mant_steps {
            frac /= 2.0;
            e += 1;
        }
        sign * frac / mant_steps * exp2i(e)
    }
}

fn exp2i(e: i32) -> f64 {
    (e as f64).exp2()
}

impl fmt::Display for MiniFloatFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}m{}", self.exp_bits, self.mant_bits)
    }
}

impl FromStr for MiniFloatFormat {
    type Err = LnsError;

    /// Parses tokens such as `e4m3`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || LnsError::Domain(format!("bad minifloat token {s:?}, expected e<i>m<f>"));
        let rest = s.strip_prefix('e').ok_or_else(bad)?;
        let (e, m) = rest.split_once('m').ok_or_else(bad)?;
        MiniFloatFormat::new(e.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?)
    }
}
