//! Direct-form FIR filtering under LNS, fixed-point, minifloat and reference
//! double arithmetic (Eq. 10: y(n) = Σ h(k)·x(n-k), zero-padded history).

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{lns_add_sub, lns_mul, PhiKind, PhiTable};
use crate::format::{LnsFormat, LnsValue, Rounded, RoundingDomain};
use crate::minifloat::MiniFloatFormat;
use crate::{LnsError, Result};

/// The arithmetic a filter instance runs in.
#[derive(Debug, Clone, PartialEq)]
pub enum NumberSystem {
    /// Plain f64; the error baseline.
    Reference,
    /// Two's-complement fixed point: sign + `int_bits` + `frac_bits`, range
    /// [-2^i, 2^i - 2^-f], nearest/ties-away, saturating after every op.
    Fixed { int_bits: u32, frac_bits: u32 },
    /// Short float, rounded after every op.
    MiniFloat(MiniFloatFormat),
    /// LNS: exact multiplies on the exponent grid, Φ-table adds. With
    /// `mixed_out`, accumulation runs on the wider output grid and the sum is
    /// requantized once at the end.
    Lns { fmt: LnsFormat, mixed_out: Option<LnsFormat> },
}

impl std::fmt::Display for NumberSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NumberSystem::Reference => write!(f, "reference"),
            NumberSystem::Fixed { int_bits, frac_bits } => write!(f, "fixed:Q({int_bits},{frac_bits})"),
            NumberSystem::MiniFloat(m) => write!(f, "float:{m}"),
            NumberSystem::Lns { fmt: l, mixed_out: None } => write!(f, "lns:{l}"),
            NumberSystem::Lns { fmt: l, mixed_out: Some(o) } => {
                write!(f, "lns:{l}>Q({},{})", o.int_bits(), o.frac_bits())
            }
        }
    }
}

/// A filter to run: coefficient prototype plus the number system.
#[derive(Debug, Clone, PartialEq)]
pub struct FirSpec {
    pub order: usize,
    pub coefficients: Vec<f64>,
    pub system: NumberSystem,
}

impl FirSpec {
    pub fn new(coefficients: Vec<f64>, system: NumberSystem) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(LnsError::Domain("FIR needs at least one coefficient".into()));
        }
        Ok(FirSpec { order: coefficients.len() - 1, coefficients, system })
    }
}

/// Output of one run: samples plus a per-sample saturation flag (set when any
/// multiply/accumulate step saturated while producing that sample).
#[derive(Debug, Clone, PartialEq)]
pub struct FirRun {
    pub samples: Vec<f64>,
    pub saturated: Vec<bool>,
}

/// Hamming-windowed sinc lowpass with unity DC gain. `cutoff` is in cycles
/// per sample, (0, 0.5).
pub fn design_lowpass(order: usize, cutoff: f64) -> Result<Vec<f64>> {
    if !(cutoff > 0.0 && cutoff < 0.5) {
        return Err(LnsError::Domain(format!("cutoff {cutoff} outside (0, 0.5)")));
    }
    let n = order as f64;
    let mut taps: Vec<f64> = (0..=order)
        .map(|k| {
            let t = k as f64 - n / 2.0;
            let sinc = if t == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * std::f64::consts::PI * cutoff * t).sin() / (std::f64::consts::PI * t)
            };
            let window = if order == 0 {
                1.0
            } else {
                0.54 - 0.46 * (2.0 * std::f64::consts::PI * k as f64 / n).cos()
            };
            sinc * window
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    Ok(taps)
}

fn quantize_fixed(v: f64, int_bits: u32, frac_bits: u32) -> (f64, bool) {
    let scale = (frac_bits as f64).exp2();
    let min = -((1i64) << (int_bits + frac_bits));
    let max = ((1i64) << (int_bits + frac_bits)) - 1;
    let t = v * scale;
    let code = if t >= 0.0 { (t + 0.5).floor() } else { -((-t + 0.5).floor()) } as i64;
    let clamped = code.clamp(min, max);
    (clamped as f64 / scale, clamped != code)
}

fn eval_elementwise(
    spec: &FirSpec,
    input: &[f64],
    quant: impl Fn(f64) -> (f64, bool) + Sync + Send,
) -> FirRun {
    let h: Vec<f64> = spec.coefficients.iter().map(|c| quant(*c).0).collect();
    let x: Vec<f64> = input.iter().map(|v| quant(*v).0).collect();
    let one = |n: usize| {
        let mut acc = 0.0;
        let mut sat = false;
        for (k, hk) in h.iter().enumerate() {
            let xv = if n >= k { x[n - k] } else { 0.0 };
            let (p, s1) = quant(hk * xv);
            let (a, s2) = quant(acc + p);
            acc = a;
            sat |= s1 || s2;
        }
        (acc, sat)
    };
    collect_samples(input.len(), one)
}

fn collect_samples(len: usize, one: impl Fn(usize) -> (f64, bool) + Sync + Send) -> FirRun {
    #[cfg(feature = "parallel")]
    let pairs: Vec<(f64, bool)> = (0..len).into_par_iter().map(one).collect();
    #[cfg(not(feature = "parallel"))]
    let pairs: Vec<(f64, bool)> = (0..len).map(one).collect();
    let (samples, saturated) = pairs.into_iter().unzip();
    FirRun { samples, saturated }
}

fn eval_lns(spec: &FirSpec, input: &[f64], fmt: &LnsFormat, mixed_out: Option<&LnsFormat>) -> Result<FirRun> {
    let acc_fmt = match mixed_out {
        None => *fmt,
        Some(out) => {
            if out.log2_base() != fmt.log2_base()
                || out.frac_bits() < fmt.frac_bits()
                || out.int_bits() != fmt.int_bits()
                || out.convention() != fmt.convention()
            {
                return Err(LnsError::Domain(
                    "mixed-precision accumulator must widen only the fractional bits".into(),
                ));
            }
            *out
        }
    };
    let plus = PhiTable::build(acc_fmt, acc_fmt, PhiKind::Plus)?;
    let minus = PhiTable::build(acc_fmt, acc_fmt, PhiKind::Minus)?;
    let shift = acc_fmt.frac_bits() - fmt.frac_bits();

    let hq: Vec<LnsValue> = spec
        .coefficients
        .iter()
        .map(|c| fmt.encode(*c, RoundingDomain::LogDomain, 1.0).value)
        .collect();
    let xq: Vec<LnsValue> =
        input.iter().map(|v| fmt.encode(*v, RoundingDomain::LogDomain, 1.0).value).collect();

    let one = |n: usize| {
        let mut acc = LnsValue::ZERO;
        let mut sat = false;
        for (k, hk) in hq.iter().enumerate() {
            let xv = if n >= k { xq[n - k] } else { LnsValue::ZERO };
            let p = lns_mul(*hk, xv, fmt);
            sat |= p.overflow;
            let p_wide = if p.value.zero {
                LnsValue::ZERO
            } else {
                LnsValue::new(p.value.sign, p.value.code << shift)
            };
            let sum = lns_add_sub(acc, p_wide, false, &plus, &minus, &acc_fmt);
            sat |= sum.overflow;
            acc = sum.value;
        }
        // single final requantize back to the working format
        let final_v = if acc.zero {
            LnsValue::ZERO
        } else {
            match fmt.round_log_domain(acc.code as f64 * acc_fmt.ulp_lns()) {
                Rounded::Code(c) => LnsValue::new(acc.sign, c),
                Rounded::Zero => LnsValue::ZERO,
                Rounded::Overflow => {
                    sat = true;
                    LnsValue::new(acc.sign, fmt.max_code())
                }
            }
        };
        (fmt.decode(final_v, 1.0), sat)
    };
    Ok(collect_samples(input.len(), one))
}

/// Runs the filter. Evaluation is per-sample pure, so the parallel and
/// sequential builds produce bit-identical output.
pub fn fir_eval(spec: &FirSpec, input: &[f64]) -> Result<FirRun> {
    if spec.coefficients.len() != spec.order + 1 {
        return Err(LnsError::Domain("coefficient count must be order + 1".into()));
    }
    match &spec.system {
        NumberSystem::Reference => Ok(eval_elementwise(spec, input, |v| (v, false))),
        NumberSystem::Fixed { int_bits, frac_bits } => {
            let (i, f) = (*int_bits, *frac_bits);
            Ok(eval_elementwise(spec, input, move |v| quantize_fixed(v, i, f)))
        }
        NumberSystem::MiniFloat(mf) => {
            let mf = *mf;
            Ok(eval_elementwise(spec, input, move |v| {
                let r = mf.round(v);
                (r, r.abs() >= mf.max_finite() && v.abs() > mf.max_finite())
            }))
        }
        NumberSystem::Lns { fmt, mixed_out } => eval_lns(spec, input, fmt, mixed_out.as_ref()),
    }
}

/// Per-system error report against the Reference run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SystemReport {
    pub system: String,
    pub rms_error: f64,
    pub max_error: f64,
    pub saturated_samples: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CompareReport {
    pub rows: Vec<SystemReport>,
}

impl CompareReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("system,rms_error,max_error,saturated_samples\n");
        for r in &self.rows {
            // system tokens contain commas (Q(i,f)), so the field is quoted
            out.push_str(&format!(
                "\"{}\",{},{},{}\n",
                r.system, r.rms_error, r.max_error, r.saturated_samples
            ));
        }
        out
    }
}

/// Evaluates every spec on the same input and reports RMS/max error vs the
/// shared Reference run.
pub fn compare_systems(specs: &[FirSpec], input: &[f64]) -> Result<CompareReport> {
    let first = specs.first().ok_or_else(|| LnsError::Domain("no systems given".into()))?;
    if specs
        .iter()
        .any(|s| s.order != first.order || s.coefficients != first.coefficients)
    {
        return Err(LnsError::Domain("all systems must share the coefficient prototype".into()));
    }
    let reference = fir_eval(
        &FirSpec { order: first.order, coefficients: first.coefficients.clone(), system: NumberSystem::Reference },
        input,
    )?;
    let mut rows = Vec::new();
    for spec in specs {
        let run = fir_eval(spec, input)?;
        let mut sq = 0.0;
        let mut max = 0.0f64;
        for (y, r) in run.samples.iter().zip(&reference.samples) {
            let e = y - r;
            sq += e * e;
            max = max.max(e.abs());
        }
        rows.push(SystemReport {
            system: spec.system.to_string(),
            rms_error: (sq / run.samples.len() as f64).sqrt(),
            max_error: max,
            saturated_samples: run.saturated.iter().filter(|s| **s).count(),
        });
    }
    Ok(CompareReport { rows })
}

// --- reproducible stimuli ---

pub fn impulse(len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    if len > 0 {
        v[0] = 1.0;
    }
    v
}

pub fn step(len: usize) -> Vec<f64> {
    vec![1.0; len]
}

pub fn sine(len: usize, freq: f64) -> Vec<f64> {
    (0..len).map(|t| (2.0 * std::f64::consts::PI * freq * t as f64).sin()).collect()
}

/// Uniform noise in [-1, 1), seed-pinned to a fixed ChaCha8 stream.
pub fn noise(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Parses stimulus tokens such as `sine:1024:seed=7`, `noise:1024:seed=7`,
/// `impulse:32`, `step:16`, `sine:256:freq=0.05`.
pub fn parse_stimulus(token: &str) -> Result<Vec<f64>> {
    let mut parts = token.split(':');
    let kind = parts.next().unwrap_or_default();
    let len: usize = parts
        .next()
        .ok_or_else(|| LnsError::Domain(format!("stimulus {token:?} missing a length")))?
        .parse()
        .map_err(|_| LnsError::Domain(format!("bad stimulus length in {token:?}")))?;
    let mut seed = 0u64;
    let mut freq = 1.0 / 64.0;
    for p in parts {
        if let Some(s) = p.strip_prefix("seed=") {
            seed = s
                .parse()
                .map_err(|_| LnsError::Domain(format!("bad seed in stimulus {token:?}")))?;
        } else if let Some(s) = p.strip_prefix("freq=") {
            freq = s
                .parse()
                .map_err(|_| LnsError::Domain(format!("bad freq in stimulus {token:?}")))?;
        } else {
            return Err(LnsError::Domain(format!("unknown stimulus option {p:?}")));
        }
    }
    match kind {
        "impulse" => Ok(impulse(len)),
        "step" => Ok(step(len)),
        "sine" => Ok(sine(len, freq)),
        "noise" => Ok(noise(len, seed)),
        other => Err(LnsError::Domain(format!("unknown stimulus kind {other:?}"))),
    }
}
