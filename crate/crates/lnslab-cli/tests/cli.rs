use std::path::Path;
use std::process::{Command, Output};

fn lnslab(args: &[&str], cwd: &Path, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lnslab"));
    cmd.args(args).current_dir(cwd);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn lnslab")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn sweep_finds_table_2_best_base() {
    let dir = tempfile::tempdir().unwrap();
    let out = lnslab(
        &["sweep", "--target", "arith-minus", "--fmt", "Q(2,2)", "--convention", "sym", "--out", "run"],
        dir.path(),
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let best: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/best.json")).unwrap())
            .unwrap();
    assert!((best["base"].as_f64().unwrap() - 1.417).abs() < 1e-9);
    assert!((best["mean_pct"].as_f64().unwrap() - 17.1544).abs() < 0.05);
    assert_eq!(best["n_zero"], 4);
    let csv = std::fs::read_to_string(dir.path().join("run/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 588); // header + 587 bases
    assert!(dir.path().join("run/manifest.json").exists());
}

#[test]
fn sweep_is_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    for (sub, workers) in [("a", "1"), ("b", "3")] {
        let out = lnslab(
            &[
                "sweep", "--target", "arith-plus", "--fmt", "Q(3,3)", "--convention", "sym",
                "--grid", "1.5:1.7:0.01", "--workers", workers, "--out", sub,
            ],
            dir.path(),
            &[],
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let a = std::fs::read(dir.path().join("a/sweep.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/sweep.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sweep_single_point_grid_and_env_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = lnslab(
        &["sweep", "--target", "arith-plus", "--fmt", "Q(2,2)", "--grid", "2.0:2.0:1"],
        dir.path(),
        &[("LNSLAB_OUT", "from_env")],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("from_env/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    // unknown target is a clap parse error
    let out = lnslab(&["sweep", "--target", "sideways", "--fmt", "Q(2,2)"], dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    // malformed Q spec is ours
    let out = lnslab(&["sweep", "--target", "arith-plus", "--fmt", "Q(2;2)"], dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    // alias shift that would need negative fractional bits
    let out = lnslab(&["alias-check", "--fmt", "b=2:Q(3,3):tc", "--shift", "5"], dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn table_csv_has_one_row_per_entry() {
    let dir = tempfile::tempdir().unwrap();
    let out = lnslab(
        &["table", "--base", "2.0", "--fmt", "Q(4,3)", "--kind", "plus", "--emit", "csv", "--out", "."],
        dir.path(),
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("phi_plus.csv")).unwrap();
    assert_eq!(csv.lines().count(), 129); // header + 128 entries
    assert!(csv.starts_with("index,x_value,exact_phi,stored_code,forced_zero\n"));
}

#[test]
fn table_blif_reparses_under_pinned_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = lnslab(
        &["table", "--base", "2", "--fmt", "Q(4,3)", "--kind", "minus", "--emit", "blif", "--out", "."],
        dir.path(),
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let path = dir.path().join("blif/2/Q(4,3)/minus.blif");
    let text = std::fs::read_to_string(&path).unwrap();
    let tt = lnslab::synth::parse_blif(&text).unwrap();
    assert_eq!(tt.in_bits, 7);
    assert_eq!(tt.rows.len(), 128);
}

#[test]
fn table_blif_split_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = lnslab(
        &[
            "table", "--base", "2", "--fmt", "Q(4,3)", "--kind", "plus", "--emit", "blif",
            "--cols", "3", "--cols-from", "msb", "--out", ".",
        ],
        dir.path(),
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let base = dir.path().join("blif/2/Q(4,3)");
    let head = lnslab::synth::parse_blif(
        &std::fs::read_to_string(base.join("plus_cols3msb.blif")).unwrap(),
    )
    .unwrap();
    let tail = lnslab::synth::parse_blif(
        &std::fs::read_to_string(base.join("plus_cols4lsb.blif")).unwrap(),
    )
    .unwrap();
    assert_eq!(head.out_bits + tail.out_bits, 7);
}

#[test]
fn romcost_minimize_reports_table_3_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let out = lnslab(&["romcost", "--words", "128", "--bits", "7", "--minimize"], dir.path(), &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("16 rows x 8 words/row"), "{text}");
    assert!(text.contains("1408"), "{text}");
    assert!(text.contains("8.0"), "{text}");
}

#[test]
fn romcost_unknown_decoder_exits_1_naming_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = lnslab(&["romcost", "--words", "64", "--bits", "7"], dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains('6'), "{}", stderr(&out));
}

#[test]
fn fir_run_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "fir", "run", "--order", "11", "--cutoff", "0.2",
        "--systems", "reference,lns:b=1.96:Q(4,4),lns:b=1.96:Q(4,4)>Q(4,8),fixed:Q(5,4),float:e4m3",
        "--input", "sine:1024:seed=7",
        "--out", "report.csv",
    ];
    let out = lnslab(&args, dir.path(), &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0], "system,rms_error,max_error,saturated_samples");
    assert!(lines[1].starts_with("\"reference\",0,0,"));
    assert!(dir.path().join("manifest.json").exists());

    // byte-identical on a re-run (seed-pinned stimulus)
    let again = lnslab(&args, dir.path(), &[]);
    assert!(again.status.success());
    assert_eq!(csv, std::fs::read_to_string(dir.path().join("report.csv")).unwrap());
}

#[test]
fn alias_check_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = lnslab(
        &["alias-check", "--fmt", "b=1.4142135623730951:Q(3,3):tc", "--shift", "-1"],
        dir.path(),
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("PASS"));
    let out = lnslab(&["alias-check", "--fmt", "b=2:Q(3,3):sym", "--shift", "0"], dir.path(), &[]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("PASS"));
}
