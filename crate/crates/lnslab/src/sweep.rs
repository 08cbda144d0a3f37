//! Error metrics and base sweeps: representation error of minifloat→LNS
//! conversion, quantization error of Φ tables, and searches for the
//! best base across a grid.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::arith::{phi_exact_log2, PhiEntry, PhiKind, PhiTable};
use crate::format::{ExponentConvention, LnsFormat, Rounded};
use crate::minifloat::MiniFloatFormat;
use crate::{LnsError, Result};

/// Signed absolute error (Eq. 3).
pub fn err_abs(m_hat: f64, m: f64) -> f64 {
    m_hat - m
}

/// Relative error (Eq. 4).
pub fn err_rel(m_hat: f64, m: f64) -> Result<f64> {
    if m == 0.0 {
        return Err(LnsError::Domain("relative error undefined at m = 0".into()));
    }
    Ok((m_hat - m) / m)
}

/// Relative error carried to the real domain (Eq. 5): (b^m̂ - b^m)/b^m.
pub fn err_real_rel(m_hat: f64, m: f64, base: f64) -> f64 {
    base.powf(m_hat - m) - 1.0
}

/// Multiplicative error in the real domain (Eq. 6): b^(m̂ - m).
pub fn err_mult(m_hat: f64, m: f64, base: f64) -> f64 {
    base.powf(m_hat - m)
}

/// Geometric mean of multiplicative errors (Eq. 8), evaluated through the
/// log-domain identity of Eq. (9): b^(arithmetic mean of log_b e_m).
pub fn geo_mean_mult(errors: &[f64], base: f64) -> f64 {
    if errors.is_empty() {
        return 1.0;
    }
    let log2_base = base.log2();
    let mean = errors.iter().map(|e| e.log2() / log2_base).sum::<f64>() / errors.len() as f64;
    (mean * log2_base).exp2()
}

/// Aggregate of one sweep. Errors are percentages of the ULP stated by the
/// producing operation (log-domain ULP of the rounding format).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ErrorReport {
    pub mean_abs_err_pct_ulp: f64,
    pub max_abs_err_pct_ulp: f64,
    /// Samples rounded to real-domain zero (N_z of the paper's tables).
    pub n_zero: usize,
    /// Samples past the saturation threshold.
    pub n_overflow: usize,
    /// Samples dropped by the arithmetic-sweep averaging convention
    /// (identity entries and exact grid hits); zero for repr sweeps.
    pub n_excluded: usize,
    /// Samples contributing to the mean.
    pub sample_count: usize,
    /// μ_g of Eq. (8) over the counted samples.
    pub geo_mean_mult_err: f64,
}

/// Neumaier compensated sum; sweeps promise bit-identical results regardless
/// of worker count, so accumulation must also be robust to ordering noise.
#[derive(Default, Clone, Copy)]
struct Accum {
    sum: f64,
    comp: f64,
}

impl Accum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Enumerates every positive finite minifloat, converts each into the LNS
/// format under log-domain rounding, and aggregates |Δm|/ulp as a percentage.
/// With `scaled`, inputs are divided by S = max(minifloat)/max(LNS), aligning
/// the two ranges.
pub fn repr_error_sweep(
    src: &MiniFloatFormat,
    fmt: &LnsFormat,
    scaled: bool,
) -> Result<ErrorReport> {
    let values = src.positive_values();
    if values.is_empty() {
        return Err(LnsError::Domain("minifloat format has no positive values".into()));
    }
    let scale = if scaled { src.max_finite() / fmt.bounds().max_real } else { 1.0 };
    let ulp = fmt.ulp_lns();
    let mut abs_sum = Accum::default();
    let mut signed_sum = Accum::default();
    let mut max_abs = 0.0f64;
    let mut n_zero = 0;
    let mut n_overflow = 0;
    let mut counted = 0;
    for v in values {
        let m = (v / scale).log2() / fmt.log2_base();
        match fmt.round_log_domain(m) {
            Rounded::Zero => n_zero += 1,
            Rounded::Overflow => n_overflow += 1,
            Rounded::Code(c) => {
                let err = (c as f64 * ulp - m) / ulp;
                abs_sum.add(err.abs());
                signed_sum.add(err);
                max_abs = max_abs.max(err.abs());
                counted += 1;
            }
        }
    }
    let mean_units = abs_sum.value() / counted as f64;
    let signed_mean_units = signed_sum.value() / counted as f64;
    Ok(ErrorReport {
        mean_abs_err_pct_ulp: mean_units * 100.0,
        max_abs_err_pct_ulp: max_abs * 100.0,
        n_zero,
        n_overflow,
        n_excluded: 0,
        sample_count: counted,
        geo_mean_mult_err: (signed_mean_units * ulp * fmt.log2_base()).exp2(),
    })
}

/// Quantization error of a Φ table as a percentage of the OUTPUT format's
/// ULP.
///
/// Averaging convention (required to reproduce the paper's Table 2, verified
/// cell by cell): ForcedZero entries and the x=0 singularity of Φ⁻ count as
/// N_z; entries whose exact Φ saturates count as overflow; entries that store
/// code 0 (the output would be the unchanged max operand) and entries with
/// exactly zero rounding error are excluded from the mean but reported in
/// `n_excluded`.
pub fn arith_error_sweep(tbl: &PhiTable) -> ErrorReport {
    let out = tbl.output_format();
    let ulp_out = out.ulp_lns();
    let threshold_hi = out.bounds().max_exp + 0.5 * ulp_out;
    let mut abs_sum = Accum::default();
    let mut signed_sum = Accum::default();
    let mut max_abs = 0.0f64;
    let mut n_zero = 0;
    let mut n_overflow = 0;
    let mut n_excluded = 0;
    let mut counted = 0;
    for (k, entry) in tbl.entries().iter().enumerate() {
        let phi = phi_exact_log2(tbl.x_value(k), out.log2_base(), tbl.kind());
        let code = match entry {
            PhiEntry::ForcedZero => {
                n_zero += 1;
                continue;
            }
            PhiEntry::Code(c) => *c,
        };
        if phi > threshold_hi {
            n_overflow += 1;
            continue;
        }
        let err = (code as f64 * ulp_out - phi) / ulp_out;
        if code == 0 || err == 0.0 {
            n_excluded += 1;
            continue;
        }
        abs_sum.add(err.abs());
        signed_sum.add(err);
        max_abs = max_abs.max(err.abs());
        counted += 1;
    }
    let mean_units = if counted > 0 { abs_sum.value() / counted as f64 } else { 0.0 };
    let signed_mean_units = if counted > 0 { signed_sum.value() / counted as f64 } else { 0.0 };
    ErrorReport {
        mean_abs_err_pct_ulp: mean_units * 100.0,
        max_abs_err_pct_ulp: max_abs * 100.0,
        n_zero,
        n_overflow,
        n_excluded,
        sample_count: counted,
        geo_mean_mult_err: (signed_mean_units * ulp_out * out.log2_base()).exp2(),
    }
}

/// What a base sweep measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepTarget {
    ReprScaled,
    ReprUnscaled,
    ArithPlus,
    ArithMinus,
}

impl SweepTarget {
    pub fn label(&self) -> &'static str {
        match self {
            SweepTarget::ReprScaled => "repr-scaled",
            SweepTarget::ReprUnscaled => "repr-unscaled",
            SweepTarget::ArithPlus => "arith-plus",
            SweepTarget::ArithMinus => "arith-minus",
        }
    }
}

/// The base grid of the paper's sweeps: 1.414..2.000 in 0.001 steps by
/// default, 587 points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub base_lo: f64,
    pub base_hi: f64,
    pub step: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid { base_lo: 1.414, base_hi: 2.0, step: 0.001 }
    }
}

impl SweepGrid {
    pub fn bases(&self) -> Vec<f64> {
        let n = ((self.base_hi - self.base_lo) / self.step).floor() as usize + 1;
        (0..n).map(|k| self.base_lo + k as f64 * self.step).collect()
    }
}

/// Bit layout shared by every base of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormatTemplate {
    pub int_bits: u32,
    pub frac_bits: u32,
    pub convention: ExponentConvention,
}

impl FormatTemplate {
    pub fn with_base(&self, base: f64) -> Result<LnsFormat> {
        LnsFormat::new(base, self.int_bits, self.frac_bits, self.convention)
    }
}

fn sweep_one(
    base: f64,
    template: &FormatTemplate,
    target: SweepTarget,
    src: Option<&MiniFloatFormat>,
) -> Result<ErrorReport> {
    let fmt = template.with_base(base)?;
    match target {
        SweepTarget::ReprScaled | SweepTarget::ReprUnscaled => {
            let src = src.ok_or_else(|| {
                LnsError::Domain("representation sweep needs a source minifloat format".into())
            })?;
            repr_error_sweep(src, &fmt, target == SweepTarget::ReprScaled)
        }
        SweepTarget::ArithPlus => Ok(arith_error_sweep(&PhiTable::build(fmt, fmt, PhiKind::Plus)?)),
        SweepTarget::ArithMinus => {
            Ok(arith_error_sweep(&PhiTable::build(fmt, fmt, PhiKind::Minus)?))
        }
    }
}

/// One report per base, in grid order. Runs on the rayon pool when the
/// `parallel` feature is enabled; per-base work is pure, so the result is
/// identical either way.
pub fn base_sweep(
    grid: &SweepGrid,
    template: &FormatTemplate,
    target: SweepTarget,
    src: Option<&MiniFloatFormat>,
) -> Result<Vec<(f64, ErrorReport)>> {
    #[cfg(feature = "parallel")]
    {
        grid.bases()
            .into_par_iter()
            .map(|b| sweep_one(b, template, target, src).map(|r| (b, r)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        base_sweep_seq(grid, template, target, src)
    }
}

/// Sequential reference path; also what the benches compare against.
pub fn base_sweep_seq(
    grid: &SweepGrid,
    template: &FormatTemplate,
    target: SweepTarget,
    src: Option<&MiniFloatFormat>,
) -> Result<Vec<(f64, ErrorReport)>> {
    grid.bases()
        .into_iter()
        .map(|b| sweep_one(b, template, target, src).map(|r| (b, r)))
        .collect()
}

/// Best base of a sweep by mean error (first wins on exact ties, so the
/// result is deterministic).
pub fn argmin(reports: &[(f64, ErrorReport)]) -> Option<(f64, &ErrorReport)> {
    reports
        .iter()
        .min_by(|a, b| a.1.mean_abs_err_pct_ulp.total_cmp(&b.1.mean_abs_err_pct_ulp))
        .map(|(b, r)| (*b, r))
}

/// One row of the mixed-precision matrix: for a given output width and table
/// kind, the best base and its error in percent of the INPUT format's ULP.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MixedPrecisionRow {
    pub out_frac_bits: u32,
    pub out_word_bits: u32,
    pub kind: &'static str,
    pub best_base: f64,
    pub best_err_pct_in_ulp: f64,
}

/// Sweeps output fractional width (input width .. total 16 bits incl. sign)
/// and, per width and Φ kind, minimizes the table quantization error over the
/// base grid.
///
/// Errors here are normalized by the INPUT format's ULP: that is the fixed
/// yardstick across the sweep, and what makes widening the stored values
/// visible as error decay (in output-ULP terms every width reads ~25%).
pub fn mixed_precision_sweep(
    template: &FormatTemplate,
    grid: &SweepGrid,
) -> Result<Vec<MixedPrecisionRow>> {
    let max_total_bits = 16;
    if 1 + template.int_bits + template.frac_bits > max_total_bits {
        return Err(LnsError::Domain("input word length exceeds 16 bits".into()));
    }
    let max_out_frac = max_total_bits - 1 - template.int_bits;
    let mut rows = Vec::new();
    for out_frac in template.frac_bits..=max_out_frac {
        for kind in [PhiKind::Plus, PhiKind::Minus] {
            let eval = |base: f64| -> Result<(f64, f64)> {
                let in_fmt = template.with_base(base)?;
                let out_fmt =
                    LnsFormat::new(base, template.int_bits, out_frac, template.convention)?;
                let report = arith_error_sweep(&PhiTable::build(in_fmt, out_fmt, kind)?);
                let rescale = out_fmt.ulp_lns() / in_fmt.ulp_lns();
                Ok((base, report.mean_abs_err_pct_ulp * rescale))
            };
            #[cfg(feature = "parallel")]
            let per_base: Vec<(f64, f64)> =
                grid.bases().into_par_iter().map(eval).collect::<Result<_>>()?;
            #[cfg(not(feature = "parallel"))]
            let per_base: Vec<(f64, f64)> =
                grid.bases().into_iter().map(eval).collect::<Result<_>>()?;
            let (best_base, best_err) = per_base
                .iter()
                .copied()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty grid");
            rows.push(MixedPrecisionRow {
                out_frac_bits: out_frac,
                out_word_bits: 1 + template.int_bits + out_frac,
                kind: match kind {
                    PhiKind::Plus => "plus",
                    PhiKind::Minus => "minus",
                },
                best_base,
                best_err_pct_in_ulp: best_err,
            });
        }
    }
    Ok(rows)
}

/// CSV for sweep results: `base,format,target,mean_pct,max_pct,n_zero,n_overflow,samples`.
pub fn sweep_csv(
    rows: &[(f64, ErrorReport)],
    template: &FormatTemplate,
    target: SweepTarget,
) -> String {
    let mut out = String::from("base,format,target,mean_pct,max_pct,n_zero,n_overflow,samples\n");
    for (base, r) in rows {
        let fmt_token = match template.with_base(*base) {
            Ok(f) => f.token(),
            Err(_) => String::from("?"),
        };
        // format tokens contain commas (Q(i,f)), so that field is quoted
        out.push_str(&format!(
            "{base},\"{fmt_token}\",{},{:.4},{:.4},{},{},{}\n",
            target.label(),
            r.mean_abs_err_pct_ulp,
            r.max_abs_err_pct_ulp,
            r.n_zero,
            r.n_overflow,
            r.sample_count
        ));
    }
    out
}
