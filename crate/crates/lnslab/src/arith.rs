//! LNS arithmetic: exact multiply/divide/sqrt on exponent codes and
//! table-driven add/subtract through the Gaussian logarithms
//! Φ⁺(x) = log_b(1 + b^-x) and Φ⁻(x) = log_b(1 - b^-x).

use crate::format::{Encoded, LnsFormat, LnsValue, Rounded};
use crate::{LnsError, Result};

/// Which Φ function a table stores. `S_Φ = s_x ⊕ s_y ⊕ op` selects between
/// them (0 → Plus, 1 → Minus).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhiKind {
    Plus,
    Minus,
}

/// Selector of Eq. (9): add/sub reduces to Φ⁺ when the effective operand
/// signs agree and Φ⁻ when they differ.
pub fn s_phi(s_x: bool, s_y: bool, op_is_sub: bool) -> PhiKind {
    if s_x ^ s_y ^ op_is_sub {
        PhiKind::Minus
    } else {
        PhiKind::Plus
    }
}

/// Exact Φ in working precision. Returns `-inf` for Minus at x = 0
/// (log_b |0|), which downstream rounding maps to a forced zero.
pub fn phi_exact(x: f64, base: f64, kind: PhiKind) -> f64 {
    phi_exact_log2(x, base.log2(), kind)
}

/// Φ computed from log2(base); the canonical path, bit-stable across aliased
/// formats (which share `x * log2_base` exactly).
pub fn phi_exact_log2(x: f64, log2_base: f64, kind: PhiKind) -> f64 {
    debug_assert!(x >= 0.0);
    let t = (-x * log2_base).exp2();
    match kind {
        PhiKind::Plus => t.ln_1p() / (std::f64::consts::LN_2 * log2_base),
        PhiKind::Minus => {
            if x == 0.0 {
                f64::NEG_INFINITY
            } else {
                // 1 - 2^(-x*L) via expm1 to keep precision for small x
                let one_minus = -(-x * log2_base * std::f64::consts::LN_2).exp_m1();
                one_minus.log2() / log2_base
            }
        }
    }
}

/// A table entry: a quantized output code, or the §5.1 forced zero (exact Φ⁻
/// fell below the output format's round-to-zero threshold).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiEntry {
    Code(i64),
    ForcedZero,
}

/// Quantized Φ lookup table. The input format fixes the x grid (index k maps
/// to x = k·2^-f over the full unsigned code range); the output format, which
/// may carry more fractional bits (mixed precision), fixes the stored codes.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTable {
    kind: PhiKind,
    input_format: LnsFormat,
    output_format: LnsFormat,
    entries: Vec<PhiEntry>,
}

impl PhiTable {
    /// Builds the table: entry[k] = round_log_domain(Φ(k·2^-f_in), out_fmt),
    /// with round-to-zero hits stored as ForcedZero and overflow (possible
    /// only for Φ⁺ in narrow formats) saturated to the max code.
    pub fn build(in_fmt: LnsFormat, out_fmt: LnsFormat, kind: PhiKind) -> Result<Self> {
        if in_fmt.log2_base() != out_fmt.log2_base() {
            return Err(LnsError::Domain("table input/output formats must share a base".into()));
        }
        if out_fmt.frac_bits() < in_fmt.frac_bits() {
            return Err(LnsError::Domain(
                "mixed-precision output must not have fewer fractional bits than the input".into(),
            ));
        }
        let bits = in_fmt.int_bits() + in_fmt.frac_bits();
        if bits > 20 {
            return Err(LnsError::Capacity(format!("Φ table over {bits} input bits")));
        }
        let ulp_in = in_fmt.ulp_lns();
        let entries = (0..1i64 << bits)
            .map(|k| {
                let phi = phi_exact_log2(k as f64 * ulp_in, in_fmt.log2_base(), kind);
                match out_fmt.round_log_domain(phi) {
                    Rounded::Code(c) => PhiEntry::Code(c),
                    Rounded::Zero => PhiEntry::ForcedZero,
                    Rounded::Overflow => PhiEntry::Code(out_fmt.max_code()),
                }
            })
            .collect();
        Ok(PhiTable { kind, input_format: in_fmt, output_format: out_fmt, entries })
    }

    pub fn kind(&self) -> PhiKind {
        self.kind
    }

    pub fn input_format(&self) -> &LnsFormat {
        &self.input_format
    }

    pub fn output_format(&self) -> &LnsFormat {
        &self.output_format
    }

    pub fn entries(&self) -> &[PhiEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// x value of index k on the input grid.
    pub fn x_value(&self, k: usize) -> f64 {
        k as f64 * self.input_format.ulp_lns()
    }

    /// Entry lookup by exponent-code difference; differences past the end of
    /// the table saturate to the last entry (where Φ has flattened out).
    pub fn lookup(&self, code_diff: i64) -> PhiEntry {
        debug_assert!(code_diff >= 0);
        let idx = (code_diff as usize).min(self.entries.len() - 1);
        self.entries[idx]
    }

    /// CSV dump: `index,x_value,exact_phi,stored_code,forced_zero`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,x_value,exact_phi,stored_code,forced_zero\n");
        for (k, entry) in self.entries.iter().enumerate() {
            let phi = phi_exact_log2(self.x_value(k), self.input_format.log2_base(), self.kind);
            let phi_txt =
                if phi == f64::NEG_INFINITY { "-inf".to_string() } else { format!("{phi}") };
            match entry {
                PhiEntry::Code(c) => {
                    out.push_str(&format!("{k},{},{phi_txt},{c},0\n", self.x_value(k)))
                }
                PhiEntry::ForcedZero => {
                    out.push_str(&format!("{k},{},{phi_txt},,1\n", self.x_value(k)))
                }
            }
        }
        out
    }
}

/// Multiplication: exponent add, sign XOR; saturates at the format limits and
/// rounds to zero below them (both flagged).
pub fn lns_mul(a: LnsValue, b: LnsValue, fmt: &LnsFormat) -> Encoded {
    if a.zero || b.zero {
        return Encoded { value: LnsValue::ZERO, overflow: false, underflow_to_zero: false };
    }
    clamp_code(a.sign ^ b.sign, a.code + b.code, fmt)
}

/// Division: exponent subtract, sign XOR.
pub fn lns_div(a: LnsValue, b: LnsValue, fmt: &LnsFormat) -> Result<Encoded> {
    if b.zero {
        return Err(LnsError::DivideByZero);
    }
    if a.zero {
        return Ok(Encoded { value: LnsValue::ZERO, overflow: false, underflow_to_zero: false });
    }
    Ok(clamp_code(a.sign ^ b.sign, a.code - b.code, fmt))
}

/// Square root: halve the exponent code, nearest with ties away from zero.
pub fn lns_sqrt(a: LnsValue, fmt: &LnsFormat) -> Result<Encoded> {
    if a.zero {
        return Ok(Encoded { value: LnsValue::ZERO, overflow: false, underflow_to_zero: false });
    }
    if a.sign {
        return Err(LnsError::Domain("square root of a negative LNS value".into()));
    }
    let halved = if a.code >= 0 { (a.code + 1) / 2 } else { (a.code - 1) / 2 };
    Ok(clamp_code(false, halved, fmt))
}

fn clamp_code(sign: bool, code: i64, fmt: &LnsFormat) -> Encoded {
    if code > fmt.max_code() {
        Encoded { value: LnsValue::new(sign, fmt.max_code()), overflow: true, underflow_to_zero: false }
    } else if code < fmt.min_code() {
        // one whole code below the range is already past the half-ULP
        // round-to-zero threshold
        Encoded { value: LnsValue::ZERO, overflow: false, underflow_to_zero: true }
    } else {
        Encoded { value: LnsValue::new(sign, code), overflow: false, underflow_to_zero: false }
    }
}

/// Table-driven add/subtract (Eq. 8 / Fig. 9):
/// `m = max(m_x, m_y) + Φ(|m_x - m_y|)` with Φ⁺/Φ⁻ selected by S_Φ, the
/// result sign taken from the larger-magnitude operand, and the zero-detect
/// path (both-zero, equal-magnitude subtraction, ForcedZero hits) yielding
/// the canonical zero. Operands live on `fmt`'s grid; the result lives on the
/// tables' output grid, which may be wider (mixed precision).
pub fn lns_add_sub(
    a: LnsValue,
    b: LnsValue,
    op_is_sub: bool,
    tbl_plus: &PhiTable,
    tbl_minus: &PhiTable,
    fmt: &LnsFormat,
) -> Encoded {
    debug_assert_eq!(tbl_plus.input_format(), fmt);
    debug_assert_eq!(tbl_minus.input_format(), fmt);
    debug_assert_eq!(tbl_plus.output_format(), tbl_minus.output_format());
    let out_fmt = tbl_plus.output_format();
    let shift = out_fmt.frac_bits() - fmt.frac_bits();

    let b_sign = b.sign ^ op_is_sub; // effective sign of the second operand
    let no_flags = |v: LnsValue| Encoded { value: v, overflow: false, underflow_to_zero: false };
    match (a.zero, b.zero) {
        (true, true) => return no_flags(LnsValue::ZERO),
        // degenerate cases copy (or negate) the surviving operand onto the
        // output grid; the shift is exact
        (true, false) => return clamp_code(b_sign, b.code << shift, out_fmt),
        (false, true) => return clamp_code(a.sign, a.code << shift, out_fmt),
        (false, false) => {}
    }

    let kind = s_phi(a.sign, b.sign, op_is_sub);
    if kind == PhiKind::Minus && a.code == b.code {
        return no_flags(LnsValue::ZERO);
    }
    let (max_code, sign) = if a.code >= b.code { (a.code, a.sign) } else { (b.code, b_sign) };
    let tbl = match kind {
        PhiKind::Plus => tbl_plus,
        PhiKind::Minus => tbl_minus,
    };
    match tbl.lookup((a.code - b.code).abs()) {
        PhiEntry::ForcedZero => no_flags(LnsValue::ZERO),
        PhiEntry::Code(phi_code) => clamp_code(sign, (max_code << shift) + phi_code, out_fmt),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{ExponentConvention, LnsFormat, RoundingDomain};

    fn fmt(base: f64, i: u32, f: u32) -> LnsFormat {
        LnsFormat::new(base, i, f, ExponentConvention::TwosComplementHalf).unwrap()
    }

    fn tables(f: &LnsFormat) -> (PhiTable, PhiTable) {
        (
            PhiTable::build(*f, *f, PhiKind::Plus).unwrap(),
            PhiTable::build(*f, *f, PhiKind::Minus).unwrap(),
        )
    }

    #[test]
    fn phi_exact_examples() {
        assert!((phi_exact(0.0, 2.0, PhiKind::Plus) - 1.0).abs() < 1e-15);
        assert!(phi_exact(60.0, 2.0, PhiKind::Plus).abs() < 1e-15);
        assert!((phi_exact(1.0, 2.0, PhiKind::Minus) + 1.0).abs() < 1e-15);
        assert_eq!(phi_exact(0.0, 2.0, PhiKind::Minus), f64::NEG_INFINITY);
    }

    #[test]
    fn table_basics() {
        let f = fmt(2.0, 3, 0);
        let (plus, minus) = tables(&f);
        assert_eq!(plus.len(), 8);
        assert_eq!(plus.entries()[0], PhiEntry::Code(1)); // Φ⁺(0) = 1
        assert_eq!(minus.entries()[0], PhiEntry::ForcedZero);
    }

    #[test]
    fn plus_table_top_bits_zero_for_8bit_lns() {
        // 8-bit base-2 Q(4,3): Φ⁺ ∈ (0, 1], codes fit in 5 of the 7 bits
        let f = fmt(2.0, 4, 3);
        let plus = PhiTable::build(f, f, PhiKind::Plus).unwrap();
        assert_eq!(plus.len(), 128);
        for e in plus.entries() {
            match e {
                PhiEntry::Code(c) => assert!((0..32).contains(c)),
                PhiEntry::ForcedZero => panic!("Φ⁺ never underflows"),
            }
        }
    }

    #[test]
    fn table_monotonicity() {
        for base in [1.5, 2f64.sqrt(), 2.0] {
            let f = LnsFormat::new(base, 3, 3, ExponentConvention::SymmetricWide).unwrap();
            let (plus, minus) = tables(&f);
            let plus_codes: Vec<i64> = plus
                .entries()
                .iter()
                .map(|e| match e {
                    PhiEntry::Code(c) => *c,
                    PhiEntry::ForcedZero => unreachable!(),
                })
                .collect();
            assert!(plus_codes.windows(2).all(|w| w[0] >= w[1]), "Φ⁺ non-increasing");
            let minus_codes: Vec<i64> = minus
                .entries()
                .iter()
                .filter_map(|e| match e {
                    PhiEntry::Code(c) => Some(*c),
                    PhiEntry::ForcedZero => None,
                })
                .collect();
            assert!(minus_codes.windows(2).all(|w| w[0] <= w[1]), "Φ⁻ toward 0 from below");
            assert!(minus_codes.iter().all(|&c| c <= 0));
        }
    }

    #[test]
    fn forced_zero_matches_threshold() {
        let f = LnsFormat::new(1.417, 2, 2, ExponentConvention::SymmetricWide).unwrap();
        let minus = PhiTable::build(f, f, PhiKind::Minus).unwrap();
        let threshold = f.bounds().min_exp - 0.5 * f.ulp_lns();
        for (k, e) in minus.entries().iter().enumerate() {
            let phi = phi_exact_log2(minus.x_value(k), f.log2_base(), PhiKind::Minus);
            assert_eq!(*e == PhiEntry::ForcedZero, phi < threshold, "index {k}");
        }
    }

    #[test]
    fn mul_div_sqrt() {
        let f = fmt(2.0, 3, 0);
        let two = LnsValue::new(false, 1);
        let four = LnsValue::new(false, 2);
        let r = lns_mul(two, four, &f);
        assert_eq!(f.decode(r.value, 1.0), 8.0);
        assert!(!r.overflow);
        assert_eq!(lns_mul(LnsValue::ZERO, four, &f).value, LnsValue::ZERO);
        let max = LnsValue::new(false, f.max_code());
        assert!(lns_mul(max, max, &f).overflow);

        let eight = LnsValue::new(false, 3);
        assert_eq!(f.decode(lns_div(eight, two, &f).unwrap().value, 1.0), 4.0);
        assert!(lns_div(two, LnsValue::ZERO, &f).is_err());
        let min = LnsValue::new(false, f.min_code());
        assert!(lns_div(min, max, &f).unwrap().underflow_to_zero);

        let f4 = fmt(2.0, 4, 0);
        let sixteen = LnsValue::new(false, 4);
        assert_eq!(f4.decode(lns_sqrt(sixteen, &f4).unwrap().value, 1.0), 4.0);
        assert_eq!(lns_sqrt(LnsValue::new(false, 3), &f4).unwrap().value.code, 2);
        assert_eq!(lns_sqrt(LnsValue::new(false, -3), &f4).unwrap().value.code, -2);
        assert!(lns_sqrt(LnsValue::new(true, 2), &f4).is_err());
        assert_eq!(lns_sqrt(LnsValue::ZERO, &f4).unwrap().value, LnsValue::ZERO);
    }

    #[test]
    fn mul_exactness_against_reals() {
        let f = fmt(1.9, 2, 2);
        for ca in f.min_code()..=f.max_code() {
            for cb in f.min_code()..=f.max_code() {
                let a = LnsValue::new(false, ca);
                let b = LnsValue::new(true, cb);
                let r = lns_mul(a, b, &f);
                if !r.overflow && !r.underflow_to_zero {
                    let exact = f.decode(a, 1.0) * f.decode(b, 1.0);
                    let got = f.decode(r.value, 1.0);
                    assert!((got - exact).abs() <= exact.abs() * 1e-12);
                }
            }
        }
    }

    #[test]
    fn add_example_base_root2() {
        // 1 + 2 with base √2, Q(4,0) → 2√2
        let f = LnsFormat::new(2f64.sqrt(), 4, 0, ExponentConvention::TwosComplementHalf).unwrap();
        let (plus, minus) = tables(&f);
        let one = f.encode(1.0, RoundingDomain::LogDomain, 1.0).value;
        let two = f.encode(2.0, RoundingDomain::LogDomain, 1.0).value;
        let sum = lns_add_sub(one, two, false, &plus, &minus, &f);
        assert!((f.decode(sum.value, 1.0) - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn subtract_self_is_zero_and_add_commutes() {
        let f = fmt(2.0, 2, 2);
        let (plus, minus) = tables(&f);
        for code in f.min_code()..=f.max_code() {
            for sign in [false, true] {
                let v = LnsValue::new(sign, code);
                assert_eq!(lns_add_sub(v, v, true, &plus, &minus, &f).value, LnsValue::ZERO);
            }
        }
        for ca in f.min_code()..=f.max_code() {
            for cb in f.min_code()..=f.max_code() {
                let a = LnsValue::new(false, ca);
                let b = LnsValue::new(true, cb);
                assert_eq!(
                    lns_add_sub(a, b, false, &plus, &minus, &f),
                    lns_add_sub(b, a, false, &plus, &minus, &f)
                );
            }
        }
    }

    #[test]
    fn zero_operand_degrades_to_copy_or_negate() {
        let f = fmt(2.0, 2, 2);
        let (plus, minus) = tables(&f);
        let v = LnsValue::new(false, 3);
        assert_eq!(lns_add_sub(LnsValue::ZERO, v, false, &plus, &minus, &f).value, v);
        assert_eq!(
            lns_add_sub(LnsValue::ZERO, v, true, &plus, &minus, &f).value,
            LnsValue::new(true, 3)
        );
        assert_eq!(lns_add_sub(v, LnsValue::ZERO, true, &plus, &minus, &f).value, v);
        assert_eq!(
            lns_add_sub(LnsValue::ZERO, LnsValue::ZERO, false, &plus, &minus, &f).value,
            LnsValue::ZERO
        );
    }

    #[test]
    fn csv_dump_shape() {
        let f = fmt(2.0, 2, 1);
        let minus = PhiTable::build(f, f, PhiKind::Minus).unwrap();
        let csv = minus.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "index,x_value,exact_phi,stored_code,forced_zero");
        assert_eq!(lines.len(), 1 + minus.len());
        assert!(lines[1].starts_with("0,0,-inf,,1"));
    }
}
