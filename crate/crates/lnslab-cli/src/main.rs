//! `lnslab` — sweeps, Φ tables, BLIF export, ROM cost modeling and FIR runs
//! from the command line. Data goes to files (CSV/JSON/BLIF), summaries to
//! stdout; every file-writing run drops a `manifest.json` echoing the resolved
//! configuration. Exit codes: 0 ok, 1 capacity/runtime errors, 2 bad config.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use lnslab::arith::{PhiKind, PhiTable};
use lnslab::fir::{compare_systems, design_lowpass, parse_stimulus, FirSpec, NumberSystem};
use lnslab::format::{parse_q, ExponentConvention, LnsFormat};
use lnslab::minifloat::MiniFloatFormat;
use lnslab::sweep::{
    argmin, base_sweep, sweep_csv, FormatTemplate, SweepGrid, SweepTarget,
};
use lnslab::synth::{
    delay_report, emit_blif, rom_cost, rom_cost_minimize, split_columns, truth_table, DelayModel,
    RomCostModel, RomGeometry,
};
use lnslab::LnsError;

const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "lnslab", version, about = "Arbitrary-base LNS error/cost laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep the base grid and report per-base error statistics.
    Sweep(SweepArgs),
    /// Build a Φ⁺/Φ⁻ table and dump it as CSV or BLIF.
    Table(TableArgs),
    /// Transistor/delay breakdown of a ROM geometry.
    Romcost(RomcostArgs),
    /// FIR filter comparisons across number systems.
    Fir(FirArgs),
    /// Verify that an aliased format produces the identical value set.
    AliasCheck(AliasCheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    ReprScaled,
    ReprUnscaled,
    ArithPlus,
    ArithMinus,
}

impl From<TargetArg> for SweepTarget {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::ReprScaled => SweepTarget::ReprScaled,
            TargetArg::ReprUnscaled => SweepTarget::ReprUnscaled,
            TargetArg::ArithPlus => SweepTarget::ArithPlus,
            TargetArg::ArithMinus => SweepTarget::ArithMinus,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Tc,
    Sym,
}

impl From<ConventionArg> for ExponentConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Tc => ExponentConvention::TwosComplementHalf,
            ConventionArg::Sym => ExponentConvention::SymmetricWide,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Plus,
    Minus,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitArg {
    Csv,
    Blif,
}

#[derive(Args)]
struct SweepArgs {
    /// What to measure per base.
    #[arg(long, value_enum)]
    target: TargetArg,
    /// Bit layout, e.g. Q(4,3).
    #[arg(long)]
    fmt: String,
    /// Exponent-range convention.
    #[arg(long, value_enum, default_value = "tc")]
    convention: ConventionArg,
    /// Base grid as lo:hi:step (default 1.414:2.0:0.001).
    #[arg(long)]
    grid: Option<String>,
    /// Source minifloat for representation sweeps, e.g. e2m2.
    #[arg(long, default_value = "e2m2")]
    src: String,
    /// Output directory (default $LNSLAB_OUT or .).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Size of the worker pool for the sweep.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long)]
    base: f64,
    /// Input bit layout, e.g. Q(4,3).
    #[arg(long)]
    fmt: String,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Fractional bits of the stored codes (mixed precision); defaults to the
    /// input width.
    #[arg(long)]
    out_frac: Option<u32>,
    #[arg(long, value_enum, default_value = "tc")]
    convention: ConventionArg,
    #[arg(long, value_enum, default_value = "csv")]
    emit: EmitArg,
    /// Split the emitted BLIF into a k-column slice plus the remainder.
    #[arg(long)]
    cols: Option<u32>,
    /// Which end the k columns are taken from.
    #[arg(long, value_enum, default_value = "msb")]
    cols_from: ColsFrom,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ColsFrom {
    Msb,
    Lsb,
}

#[derive(Args)]
struct RomcostArgs {
    #[arg(long)]
    words: u64,
    #[arg(long)]
    bits: u32,
    /// Physical rows of the array (default: one row per word).
    #[arg(long)]
    rows: Option<u64>,
    /// Search all power-of-two geometries for the cheapest one.
    #[arg(long)]
    minimize: bool,
}

#[derive(Args)]
struct FirArgs {
    #[command(subcommand)]
    cmd: FirCmd,
}

#[derive(Subcommand)]
enum FirCmd {
    /// Design a lowpass prototype and compare number systems on a stimulus.
    Run(FirRunArgs),
}

#[derive(Args)]
struct FirRunArgs {
    #[arg(long)]
    order: usize,
    /// Cutoff in cycles per sample, (0, 0.5).
    #[arg(long)]
    cutoff: f64,
    /// Comma-separated systems, e.g.
    /// reference,lns:b=1.96:Q(4,4),lns:b=1.96:Q(4,4)>Q(4,8),fixed:Q(5,4),float:e4m3
    #[arg(long)]
    systems: String,
    /// Stimulus token, e.g. sine:1024:seed=7 or noise:1024:seed=7.
    #[arg(long)]
    input: String,
    /// Report CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AliasCheckArgs {
    /// Full format token, e.g. b=1.4142135623730951:Q(3,3):tc.
    #[arg(long)]
    fmt: String,
    /// Point shift: positive takes roots of the base, negative squares it.
    #[arg(long, allow_negative_numbers = true)]
    shift: i32,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(exit_code(&e));
    }
}

/// 2 for configuration problems, 1 for capacity/runtime failures.
fn exit_code(e: &anyhow::Error) -> i32 {
    match e.downcast_ref::<LnsError>() {
        Some(LnsError::Capacity(_)) | Some(LnsError::UnknownDecoder(_)) => 1,
        Some(_) => 2,
        None if e.downcast_ref::<std::io::Error>().is_some() => 1,
        None => 2,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Table(args) => cmd_table(args),
        Cmd::Romcost(args) => cmd_romcost(args),
        Cmd::Fir(args) => match args.cmd {
            FirCmd::Run(run) => cmd_fir_run(run),
        },
        Cmd::AliasCheck(args) => cmd_alias_check(args),
    }
}

fn out_dir(flag: Option<PathBuf>) -> anyhow::Result<PathBuf> {
    let dir = flag
        .or_else(|| std::env::var_os("LNSLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_manifest(dir: &Path, config: serde_json::Value) -> anyhow::Result<()> {
    let manifest = json!({
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "tool": env!("CARGO_PKG_NAME"),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config": config,
    });
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn parse_grid(s: &str) -> anyhow::Result<SweepGrid> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        bail!(LnsError::Domain(format!("grid {s:?} is not lo:hi:step")));
    };
    let parse = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| LnsError::Domain(format!("bad grid number {v:?} in {s:?}")))
    };
    let grid = SweepGrid { base_lo: parse(lo)?, base_hi: parse(hi)?, step: parse(step)? };
    if !(grid.step > 0.0 && grid.base_lo > 1.0 && grid.base_hi >= grid.base_lo) {
        bail!(LnsError::Domain(format!("degenerate grid {s:?}")));
    }
    Ok(grid)
}

fn configure_workers(workers: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = workers {
        if n == 0 {
            bail!(LnsError::Domain("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<()> {
    configure_workers(args.workers)?;
    let (int_bits, frac_bits) = parse_q(&args.fmt)?;
    let template =
        FormatTemplate { int_bits, frac_bits, convention: args.convention.into() };
    let grid = match &args.grid {
        Some(s) => parse_grid(s)?,
        None => SweepGrid::default(),
    };
    let target: SweepTarget = args.target.into();
    let src: MiniFloatFormat = args.src.parse::<MiniFloatFormat>()?;
    let needs_src =
        matches!(target, SweepTarget::ReprScaled | SweepTarget::ReprUnscaled);
    let rows = base_sweep(&grid, &template, target, needs_src.then_some(&src))?;
    let (best_base, best) = argmin(&rows).expect("non-empty grid");

    let dir = out_dir(args.out)?;
    fs::write(dir.join("sweep.csv"), sweep_csv(&rows, &template, target))?;
    let best_json = json!({
        "target": target.label(),
        "base": best_base,
        "mean_pct": best.mean_abs_err_pct_ulp,
        "max_pct": best.max_abs_err_pct_ulp,
        "n_zero": best.n_zero,
        "n_overflow": best.n_overflow,
    });
    fs::write(dir.join("best.json"), serde_json::to_string_pretty(&best_json)? + "\n")?;
    write_manifest(
        &dir,
        json!({
            "command": "sweep",
            "target": target.label(),
            "fmt": format!("Q({int_bits},{frac_bits})"),
            "convention": format!("{:?}", template.convention),
            "grid": { "lo": grid.base_lo, "hi": grid.base_hi, "step": grid.step },
            "src": needs_src.then(|| src.to_string()),
            "bases": rows.len(),
        }),
    )?;
    println!(
        "{} Q({int_bits},{frac_bits}): {} bases, best {best_base:.3} at {:.4}% of ULP",
        target.label(),
        rows.len(),
        best.mean_abs_err_pct_ulp
    );
    Ok(())
}

fn cmd_table(args: TableArgs) -> anyhow::Result<()> {
    let (i, f) = parse_q(&args.fmt)?;
    let conv: ExponentConvention = args.convention.into();
    let in_fmt = LnsFormat::new(args.base, i, f, conv)?;
    let out_fmt = LnsFormat::new(args.base, i, args.out_frac.unwrap_or(f), conv)?;
    let kind = match args.kind {
        KindArg::Plus => PhiKind::Plus,
        KindArg::Minus => PhiKind::Minus,
    };
    let kind_name = match kind {
        PhiKind::Plus => "plus",
        PhiKind::Minus => "minus",
    };
    let table = PhiTable::build(in_fmt, out_fmt, kind)?;
    let dir = out_dir(args.out)?;
    let written: Vec<PathBuf> = match args.emit {
        EmitArg::Csv => {
            let path = dir.join(format!("phi_{kind_name}.csv"));
            fs::write(&path, table.to_csv())?;
            vec![path]
        }
        EmitArg::Blif => {
            let tt = truth_table(&table);
            let blif_dir = dir
                .join("blif")
                .join(args.base.to_string())
                .join(format!("Q({i},{f})"));
            fs::create_dir_all(&blif_dir)?;
            let model = format!("phi_{kind_name}");
            match args.cols {
                None => {
                    let path = blif_dir.join(format!("{kind_name}.blif"));
                    fs::write(&path, emit_blif(&tt, &model))?;
                    vec![path]
                }
                Some(k) => {
                    let from_msb = args.cols_from == ColsFrom::Msb;
                    let (head, tail) = split_columns(&tt, k, from_msb)?;
                    let (dir_a, dir_b) = if from_msb { ("msb", "lsb") } else { ("lsb", "msb") };
                    let path_a = blif_dir.join(format!("{kind_name}_cols{}{dir_a}.blif", head.out_bits));
                    let path_b = blif_dir.join(format!("{kind_name}_cols{}{dir_b}.blif", tail.out_bits));
                    fs::write(&path_a, emit_blif(&head, &format!("{model}_a")))?;
                    fs::write(&path_b, emit_blif(&tail, &format!("{model}_b")))?;
                    vec![path_a, path_b]
                }
            }
        }
    };
    write_manifest(
        &dir,
        json!({
            "command": "table",
            "base": args.base,
            "fmt": format!("Q({i},{f})"),
            "out_frac": out_fmt.frac_bits(),
            "convention": format!("{conv:?}"),
            "kind": kind_name,
            "entries": table.len(),
            "files": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        }),
    )?;
    for p in &written {
        println!("wrote {} ({} entries)", p.display(), table.len());
    }
    Ok(())
}

fn cmd_romcost(args: RomcostArgs) -> anyhow::Result<()> {
    let model = RomCostModel::default();
    let (geom, cost) = if args.minimize {
        rom_cost_minimize(args.words, args.bits, &model)?
    } else {
        let rows = args.rows.unwrap_or(args.words);
        let geom = RomGeometry::new(args.words, args.bits, rows, args.words / rows)?;
        let cost = rom_cost(&geom, &model)?;
        (geom, cost)
    };
    println!(
        "{}x{} as {} rows x {} words/row",
        geom.words, geom.word_bits, geom.rows_phys, geom.words_per_row
    );
    println!("  storage    {:>6}", cost.storage);
    println!("  precharge  {:>6}", cost.precharge);
    println!("  sense      {:>6}", cost.sense);
    println!("  decoder    {:>6}", cost.decoder);
    println!("  total      {:>6}", cost.total);
    match delay_report(&geom, &DelayModel::default()) {
        Ok(d) => println!("  delay      {d:>6.1}"),
        Err(_) => println!("  delay      uncalibrated for this geometry"),
    }
    Ok(())
}

/// Splits on commas that are not inside parentheses (format tokens carry
/// commas: `Q(4,4)`).
fn split_systems(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    for c in s.chars() {
        match c {
            '(' => {
                depth += 1;
                cur.push(c);
            }
            ')' => {
                depth -= 1;
                cur.push(c);
            }
            ',' if depth == 0 => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

fn parse_system(token: &str) -> anyhow::Result<NumberSystem> {
    let bad = |msg: String| anyhow::Error::new(LnsError::Domain(msg));
    if token == "reference" {
        return Ok(NumberSystem::Reference);
    }
    if let Some(rest) = token.strip_prefix("fixed:") {
        let (int_bits, frac_bits) = parse_q(rest)?;
        return Ok(NumberSystem::Fixed { int_bits, frac_bits });
    }
    if let Some(rest) = token.strip_prefix("float:") {
        return Ok(NumberSystem::MiniFloat(rest.parse::<MiniFloatFormat>()?));
    }
    if let Some(rest) = token.strip_prefix("lns:") {
        let (fmt_part, acc_part) = match rest.split_once('>') {
            Some((a, b)) => (a, Some(b)),
            None => (rest, None),
        };
        let fmt: LnsFormat = fmt_part.parse()?;
        let mixed_out = match acc_part {
            None => None,
            Some(q) => {
                let (i, f) = parse_q(q)?;
                Some(LnsFormat::new(fmt.base(), i, f, fmt.convention())?)
            }
        };
        return Ok(NumberSystem::Lns { fmt, mixed_out });
    }
    Err(bad(format!("unknown number system {token:?}")))
}

fn cmd_fir_run(args: FirRunArgs) -> anyhow::Result<()> {
    let coefficients = design_lowpass(args.order, args.cutoff)?;
    let systems = split_systems(&args.systems)
        .iter()
        .map(|t| parse_system(t.trim()))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if systems.is_empty() {
        bail!(LnsError::Domain("--systems must name at least one system".into()));
    }
    let input = parse_stimulus(&args.input)?;
    let specs = systems
        .into_iter()
        .map(|s| FirSpec::new(coefficients.clone(), s))
        .collect::<lnslab::Result<Vec<_>>>()?;
    let report = compare_systems(&specs, &input)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&args.out, report.to_csv())
        .with_context(|| format!("writing {}", args.out.display()))?;
    let dir = args.out.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    write_manifest(
        &dir,
        json!({
            "command": "fir run",
            "order": args.order,
            "cutoff": args.cutoff,
            "systems": specs.iter().map(|s| s.system.to_string()).collect::<Vec<_>>(),
            "input": args.input,
            "samples": input.len(),
            "report": args.out.display().to_string(),
        }),
    )?;
    for row in &report.rows {
        println!(
            "{:<32} rms {:.6e}  max {:.6e}  saturated {}",
            row.system, row.rms_error, row.max_error, row.saturated_samples
        );
    }
    Ok(())
}

fn cmd_alias_check(args: AliasCheckArgs) -> anyhow::Result<()> {
    let fmt: LnsFormat = args.fmt.parse()?;
    let aliased = fmt.alias(args.shift)?;
    if fmt.value_set(1.0)? == aliased.value_set(1.0)? {
        println!("PASS: {fmt} and {aliased} enumerate the identical value set");
        Ok(())
    } else {
        println!("FAIL: {fmt} and {aliased} differ");
        bail!(LnsError::Capacity(format!(
            "alias mismatch between {fmt} and {aliased}"
        )));
    }
}
