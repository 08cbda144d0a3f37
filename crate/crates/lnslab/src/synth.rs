//! Table synthesis support: Φ tables as truth tables, BLIF export with a
//! strict re-parser, column splitting for mixed ROM/logic studies, and the
//! transistor-count ROM cost model.

use std::collections::BTreeMap;

use crate::arith::{PhiEntry, PhiTable};
use crate::format::{ExponentConvention, LnsFormat};
use crate::{LnsError, Result};

/// A complete binary truth table. Row index k is the input minterm; output
/// bit j (0 = MSB) of row k is bit `out_bits-1-j` of `rows[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    pub in_bits: u32,
    pub out_bits: u32,
    pub rows: Vec<u64>,
}

impl TruthTable {
    pub fn new(in_bits: u32, out_bits: u32, rows: Vec<u64>) -> Result<Self> {
        if in_bits < 1 || in_bits > 24 || out_bits < 1 || out_bits > 63 {
            return Err(LnsError::Range(format!("truth table {in_bits}→{out_bits} bits")));
        }
        if rows.len() != 1usize << in_bits {
            return Err(LnsError::Range(format!(
                "expected {} rows, got {}",
                1usize << in_bits,
                rows.len()
            )));
        }
        let mask = (1u64 << out_bits) - 1;
        if rows.iter().any(|r| r & !mask != 0) {
            return Err(LnsError::Range("row value exceeds output width".into()));
        }
        Ok(TruthTable { in_bits, out_bits, rows })
    }

    /// Output bit j (0 = MSB) of row k.
    pub fn bit(&self, k: usize, j: u32) -> bool {
        (self.rows[k] >> (self.out_bits - 1 - j)) & 1 == 1
    }

    pub fn on_set_size(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }
}

/// Exponent-code bits needed to store any code of a format (sign of the
/// value itself is not stored, matching the paper's 128×7 accounting).
fn code_bits(fmt: &LnsFormat) -> u32 {
    match fmt.convention() {
        ExponentConvention::TwosComplementHalf => fmt.int_bits() + fmt.frac_bits(),
        // symmetric codes reach ±(2^(i+f) - 1) and need one extra bit
        ExponentConvention::SymmetricWide => fmt.int_bits() + fmt.frac_bits() + 1,
    }
}

/// Converts a Φ table into its stored-bits truth table: row k holds the
/// two's-complement output code of entry k (ForcedZero rows are all zeros).
pub fn truth_table(tbl: &PhiTable) -> TruthTable {
    let in_bits = tbl.input_format().int_bits() + tbl.input_format().frac_bits();
    let out_bits = code_bits(tbl.output_format());
    let mask = (1u64 << out_bits) - 1;
    let rows = tbl
        .entries()
        .iter()
        .map(|e| match e {
            PhiEntry::Code(c) => (*c as u64) & mask,
            PhiEntry::ForcedZero => 0,
        })
        .collect();
    TruthTable { in_bits, out_bits, rows }
}

/// Drops leading output columns that are zero in every row (the paper stores
/// only the live 5 of 7 bits for the base-2 Φ⁺ table). Returns the reduced
/// table and how many columns went away; a table that is entirely zero keeps
/// its last column.
pub fn drop_constant_msb_columns(tt: &TruthTable) -> (TruthTable, u32) {
    let used = tt.rows.iter().fold(0u64, |acc, r| acc | r);
    let live_bits = (64 - used.leading_zeros()).clamp(1, tt.out_bits);
    let dropped = tt.out_bits - live_bits;
    (
        TruthTable { in_bits: tt.in_bits, out_bits: live_bits, rows: tt.rows.clone() },
        dropped,
    )
}

/// Splits the output columns into a block of `k` (taken from the MSB or LSB
/// side) and the remainder, preserving column order in both parts.
pub fn split_columns(tt: &TruthTable, k: u32, from_msb: bool) -> Result<(TruthTable, TruthTable)> {
    if k == 0 || k >= tt.out_bits {
        return Err(LnsError::Range(format!(
            "split of {k} columns out of {}",
            tt.out_bits
        )));
    }
    let rest = tt.out_bits - k;
    let (first, second): (Vec<u64>, Vec<u64>) = tt
        .rows
        .iter()
        .map(|r| {
            if from_msb {
                (r >> rest, r & ((1u64 << rest) - 1))
            } else {
                (r & ((1u64 << k) - 1), r >> k)
            }
        })
        .unzip();
    let (first_bits, second_bits) = (k, rest);
    Ok((
        TruthTable { in_bits: tt.in_bits, out_bits: first_bits, rows: first },
        TruthTable { in_bits: tt.in_bits, out_bits: second_bits, rows: second },
    ))
}

/// Emits BLIF: `.model`, MSB-first `.inputs x0..`, `.outputs y0..`, one
/// `.names` block per output with one cube per on-set minterm, `.end`.
pub fn emit_blif(tt: &TruthTable, model_name: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!(".model {model_name}\n"));
    out.push_str(".inputs");
    for i in 0..tt.in_bits {
        out.push_str(&format!(" x{i}"));
    }
    out.push('\n');
    out.push_str(".outputs");
    for j in 0..tt.out_bits {
        out.push_str(&format!(" y{j}"));
    }
    out.push('\n');
    for j in 0..tt.out_bits {
        out.push_str(".names");
        for i in 0..tt.in_bits {
            out.push_str(&format!(" x{i}"));
        }
        out.push_str(&format!(" y{j}\n"));
        for (k, _) in tt.rows.iter().enumerate() {
            if tt.bit(k, j) {
                // minterm pattern, x0 = MSB of the row index
                for i in (0..tt.in_bits).rev() {
                    out.push(if (k >> i) & 1 == 1 { '1' } else { '0' });
                }
                out.push_str(" 1\n");
            }
        }
    }
    out.push_str(".end\n");
    out
}

/// Strict parser for the exact dialect [`emit_blif`] writes; used for
/// round-trip verification and for ingesting externally edited tables.
pub fn parse_blif(text: &str) -> Result<TruthTable> {
    let err = |line: usize, msg: &str| LnsError::Parse { line, msg: msg.to_string() };
    let mut lines = text.lines().enumerate();

    let (n, model) = lines.next().ok_or_else(|| err(1, "empty file"))?;
    if !model.starts_with(".model ") {
        return Err(err(n + 1, "expected .model"));
    }
    let (n, inputs) = lines.next().ok_or_else(|| err(2, "missing .inputs"))?;
    let input_names: Vec<&str> = inputs
        .strip_prefix(".inputs")
        .ok_or_else(|| err(n + 1, "expected .inputs"))?
        .split_whitespace()
        .collect();
    let in_bits = input_names.len() as u32;
    for (i, name) in input_names.iter().enumerate() {
        if *name != format!("x{i}") {
            return Err(err(n + 1, "inputs must be x0..xN in order"));
        }
    }
    let (n, outputs) = lines.next().ok_or_else(|| err(3, "missing .outputs"))?;
    let output_names: Vec<&str> = outputs
        .strip_prefix(".outputs")
        .ok_or_else(|| err(n + 1, "expected .outputs"))?
        .split_whitespace()
        .collect();
    let out_bits = output_names.len() as u32;
    for (j, name) in output_names.iter().enumerate() {
        if *name != format!("y{j}") {
            return Err(err(n + 1, "outputs must be y0..yM in order"));
        }
    }
    if in_bits == 0 || out_bits == 0 || in_bits > 24 {
        return Err(err(n + 1, "unsupported table dimensions"));
    }

    let mut rows = vec![0u64; 1usize << in_bits];
    let mut current_output: Option<u32> = None;
    let mut seen: Vec<bool> = vec![false; out_bits as usize];
    let mut ended = false;
    for (n, line) in lines {
        let lineno = n + 1;
        if ended && !line.trim().is_empty() {
            return Err(err(lineno, "content after .end"));
        }
        if line == ".end" {
            ended = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix(".names") {
            let names: Vec<&str> = rest.split_whitespace().collect();
            let target = names.last().ok_or_else(|| err(lineno, ".names without signals"))?;
            let j: u32 = target
                .strip_prefix('y')
                .and_then(|t| t.parse().ok())
                .filter(|j| *j < out_bits)
                .ok_or_else(|| err(lineno, "bad .names target"))?;
            if names.len() == 1 {
                // constant-zero output: bare target with no cubes
            } else if names[..names.len() - 1] != input_names[..] {
                return Err(err(lineno, ".names must list every input in order"));
            }
            if seen[j as usize] {
                return Err(err(lineno, "duplicate .names block"));
            }
            seen[j as usize] = true;
            current_output = Some(j);
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let j = current_output.ok_or_else(|| err(lineno, "cube before any .names"))?;
        let (pattern, value) = line
            .split_once(' ')
            .ok_or_else(|| err(lineno, "cube must be `<pattern> 1`"))?;
        if value != "1" {
            return Err(err(lineno, "on-set cubes only (output value must be 1)"));
        }
        if pattern.len() != in_bits as usize {
            return Err(err(lineno, "cube pattern width mismatch"));
        }
        let mut k = 0usize;
        for c in pattern.chars() {
            k = (k << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(err(lineno, "cube pattern must be fully specified 0/1")),
                };
        }
        rows[k] |= 1u64 << (out_bits - 1 - j);
    }
    if !ended {
        return Err(err(text.lines().count(), "missing .end"));
    }
    for (j, s) in seen.iter().enumerate() {
        if !s {
            return Err(err(text.lines().count(), &format!("missing .names block for y{j}")));
        }
    }
    TruthTable::new(in_bits, out_bits, rows)
}

/// Physical arrangement of a ROM: `words` entries of `word_bits`, laid out as
/// `rows_phys × words_per_row`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RomGeometry {
    pub words: u64,
    pub word_bits: u32,
    pub rows_phys: u64,
    pub words_per_row: u64,
}

impl RomGeometry {
    pub fn new(words: u64, word_bits: u32, rows_phys: u64, words_per_row: u64) -> Result<Self> {
        if rows_phys * words_per_row != words {
            return Err(LnsError::Range(format!(
                "{rows_phys}×{words_per_row} does not cover {words} words"
            )));
        }
        if !words.is_power_of_two() || !rows_phys.is_power_of_two() {
            return Err(LnsError::Range("ROM dimensions must be powers of two".into()));
        }
        if word_bits == 0 {
            return Err(LnsError::Range("word_bits must be positive".into()));
        }
        Ok(RomGeometry { words, word_bits, rows_phys, words_per_row })
    }

    pub fn row_decoder_bits(&self) -> u32 {
        self.rows_phys.trailing_zeros()
    }

    pub fn column_decoder_bits(&self) -> u32 {
        self.words_per_row.trailing_zeros()
    }
}

/// Transistor-count calibration: storage/sense/precharge constants plus
/// per-size decoder costs measured by synthesis. Unknown decoder sizes are an
/// error, never an estimate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RomCostModel {
    pub bit_cost: u64,
    pub sense_amp_cost: u64,
    pub precharge_cost: u64,
    /// address bits → transistors; a 0-bit decoder is free.
    pub decoder_costs: BTreeMap<u32, u64>,
}

impl Default for RomCostModel {
    fn default() -> Self {
        RomCostModel {
            bit_cost: 1,
            sense_amp_cost: 5,
            precharge_cost: 1,
            decoder_costs: BTreeMap::from([(0, 0), (3, 54), (4, 122), (7, 1022)]),
        }
    }
}

impl RomCostModel {
    /// Adds the small-decoder point inferred from the paper's Table 4
    /// (2→4 at 4 transistors). Uncalibrated — an inference, not synthesis
    /// data.
    pub fn with_table4_small_decoders(mut self) -> Self {
        self.decoder_costs.entry(2).or_insert(4);
        self
    }

    fn decoder(&self, bits: u32) -> Result<u64> {
        self.decoder_costs.get(&bits).copied().ok_or(LnsError::UnknownDecoder(bits))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct CostBreakdown {
    pub storage: u64,
    pub precharge: u64,
    pub sense: u64,
    pub decoder: u64,
    pub total: u64,
}

/// Transistor count of a geometry: 1/bit storage, per-physical-column
/// precharge and sense amplifiers, plus the row/column decoders.
pub fn rom_cost(geom: &RomGeometry, model: &RomCostModel) -> Result<CostBreakdown> {
    let columns = geom.words_per_row * geom.word_bits as u64;
    let storage = model.bit_cost * geom.words * geom.word_bits as u64;
    let precharge = model.precharge_cost * columns;
    let sense = model.sense_amp_cost * columns;
    let decoder =
        model.decoder(geom.row_decoder_bits())? + model.decoder(geom.column_decoder_bits())?;
    Ok(CostBreakdown { storage, precharge, sense, decoder, total: storage + precharge + sense + decoder })
}

/// Minimum-cost geometry over all power-of-two factorizations with known
/// decoder costs; ties break toward more words per row.
pub fn rom_cost_minimize(
    words: u64,
    word_bits: u32,
    model: &RomCostModel,
) -> Result<(RomGeometry, CostBreakdown)> {
    if !words.is_power_of_two() {
        return Err(LnsError::Range("word count must be a power of two".into()));
    }
    let addr_bits = words.trailing_zeros();
    let mut best: Option<(RomGeometry, CostBreakdown)> = None;
    let mut first_missing: Option<u32> = None;
    for row_bits in 0..=addr_bits {
        let geom = RomGeometry::new(words, word_bits, 1 << row_bits, 1 << (addr_bits - row_bits))?;
        match rom_cost(&geom, model) {
            Ok(cost) => {
                let better = match &best {
                    None => true,
                    Some((bg, bc)) => {
                        cost.total < bc.total
                            || (cost.total == bc.total && geom.words_per_row > bg.words_per_row)
                    }
                };
                if better {
                    best = Some((geom, cost));
                }
            }
            Err(LnsError::UnknownDecoder(bits)) => {
                first_missing.get_or_insert(bits);
            }
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| LnsError::UnknownDecoder(first_missing.unwrap_or(addr_bits)))
}

/// Decoder propagation delays in abstract time units.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayModel {
    pub decoder_delays: BTreeMap<u32, f64>,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel { decoder_delays: BTreeMap::from([(0, 0.0), (3, 3.3), (4, 4.7)]) }
    }
}

/// Modeled ROM decode delay: sum of the delays of the decoders the geometry
/// uses (4.7 + 3.3 = 8.0 units for the calibrated 16×8 arrangement).
pub fn delay_report(geom: &RomGeometry, model: &DelayModel) -> Result<f64> {
    let get = |bits: u32| {
        model
            .decoder_delays
            .get(&bits)
            .copied()
            .ok_or(LnsError::UnknownDecoder(bits))
    };
    Ok(get(geom.row_decoder_bits())? + get(geom.column_decoder_bits())?)
}

/// One row of imported external synthesis results.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SynthStat {
    pub base: f64,
    pub format: String,
    pub table: String,
    pub transistors: u64,
    pub delay: f64,
}

/// Splits one CSV line, honoring double-quoted fields (format tokens such as
/// `Q(4,4)` carry commas).
fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    for c in line.chars() {
        match c {
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

/// Parses `base,format,table,transistors,delay` CSV (header optional);
/// malformed rows are rejected with their line number.
pub fn import_synth_stats(text: &str) -> Result<Vec<SynthStat>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if n == 0 && line == "base,format,table,transistors,delay" {
            continue;
        }
        let fields = split_csv_line(line);
        if fields.len() != 5 {
            return Err(LnsError::Parse {
                line: lineno,
                msg: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let base: f64 = fields[0].parse().map_err(|_| LnsError::Parse {
            line: lineno,
            msg: format!("bad base {:?}", fields[0]),
        })?;
        let transistors: u64 = fields[3].parse().map_err(|_| LnsError::Parse {
            line: lineno,
            msg: format!("bad transistor count {:?}", fields[3]),
        })?;
        let delay: f64 = fields[4].parse().map_err(|_| LnsError::Parse {
            line: lineno,
            msg: format!("bad delay {:?}", fields[4]),
        })?;
        out.push(SynthStat {
            base,
            format: fields[1].to_string(),
            table: fields[2].to_string(),
            transistors,
            delay,
        });
    }
    Ok(out)
}
