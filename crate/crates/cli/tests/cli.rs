//! End-to-end tests of the hweyl binary: output schemas, value
//! spot-checks against the library, exit codes, and cache behavior.

use hweyl_core::counting::remainder;
use hweyl_core::load_or_build;
use std::process::{Command, Output};

fn hweyl() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hweyl"));
    // Keep tests hermetic: a cache directory inherited from the
    // environment must not leak into runs that do not ask for one.
    cmd.env_remove("HWEYL_CACHE_DIR");
    cmd
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().expect("binary should spawn");
    (
        status.code().expect("no signal exit"),
        String::from_utf8(stdout).expect("utf-8 stdout"),
        String::from_utf8(stderr).expect("utf-8 stderr"),
    )
}

#[test]
fn remainder_csv_matches_library() {
    let (code, stdout, _) = run(hweyl().args(["remainder", "--grid", "1000:2:4"]));
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "s,count,main,remainder");

    let spectrum = load_or_build(9000.0, None).unwrap();
    for (i, line) in lines[1..].iter().enumerate() {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 4);
        let s = 1000.0 * (1u64 << i) as f64;
        let expected = remainder(s, &spectrum).unwrap();
        assert_eq!(fields[0], s);
        assert_eq!(fields[1], expected.count);
        assert!((fields[2] - expected.main).abs() <= 1e-9 * expected.main.abs());
        assert!((fields[3] - expected.remainder).abs() <= 1e-9);
        // The printed columns must recombine: count = main + remainder.
        assert!((fields[1] - fields[2] - fields[3]).abs() <= 1e-6);
    }
}

#[test]
fn spectrum_csv_multiplicities_recount() {
    let (code, stdout, _) = run(hweyl().args(["spectrum", "--limit", "500"]));
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "value,multiplicity,branch,index_a,index_b");
    // The zero mode leads the torus block.
    assert_eq!(lines[1], "0.0000000000000000e0,1,torus,0,0");

    let mut total = 0u64;
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 5);
        let value: f64 = fields[0].parse().unwrap();
        assert!((0.0..=500.0).contains(&value));
        assert!(fields[2] == "torus" || fields[2] == "type-ii");
        total += fields[1].parse::<u64>().unwrap();
    }
    let spectrum = load_or_build(500.0, None).unwrap();
    assert_eq!(total, spectrum.count_total(500.0).unwrap());
}

#[test]
fn moments_json_schema_and_fit() {
    let (code, stdout, _) = run(hweyl().args([
        "moments", "--k", "2", "--grid", "1000:2:5", "--format", "json",
    ]));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["k"], 2);
    let grid = v["grid"].as_array().unwrap();
    assert_eq!(grid.len(), 5);
    assert_eq!(grid[0]["T"].as_f64().unwrap(), 1000.0);
    assert!(grid[0]["value"].as_f64().unwrap() > 0.0);
    let exponent = v["fit"]["exponent"].as_f64().unwrap();
    assert!(exponent > 2.0 && exponent < 3.0, "second-moment growth near T^(5/2), got {exponent}");
    assert!(v["fit"]["coefficient"].as_f64().unwrap() > 0.0);
    assert!(v["fit"]["residual_rms"].as_f64().unwrap() < 1.0);
}

#[test]
fn moments_fit_is_null_on_sign_changing_data() {
    // Third moments are negative through this range, so a log-log power
    // law cannot be fit; the report must say so rather than fail.
    let (code, stdout, _) = run(hweyl().args([
        "moments", "--k", "3", "--grid", "1000:2:3", "--format", "json",
    ]));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(v["fit"].is_null());
    assert_eq!(v["grid"].as_array().unwrap().len(), 3);
}

#[test]
fn constants_json_frozen_partial() {
    let (code, stdout, _) = run(hweyl().args([
        "constants", "--limit", "1000", "--format", "json",
    ]));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["limit"], 1000);
    let partial = v["b3"]["partial"].as_f64().unwrap();
    assert!((partial - 7.289682012279e-4).abs() < 1e-15);
    let per_sum: Vec<f64> = v["b3"]["per_sum"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert_eq!(per_sum.len(), 4);
    assert!((per_sum.iter().sum::<f64>() - partial).abs() < 1e-18);
    assert!(v["b3"]["tail_estimate"].as_f64().unwrap() > 0.0);
    // d3 = (2 pi)^(-9/4) b3 on the same truncation.
    let d3 = v["d3"].as_f64().unwrap();
    let two_pi: f64 = 2.0 * std::f64::consts::PI;
    assert!((d3 - two_pi.powf(-2.25) * partial).abs() < 1e-18);
    assert!(v["c2"]["partial"].as_f64().unwrap() > 0.25);
}

#[test]
fn expsum_csv_gap_column_is_consistent() {
    let (code, stdout, _) = run(hweyl().args(["expsum", "--T", "100", "--grid", "2:2:6"]));
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "t,R_eps,R_exact,abs_gap");
    assert_eq!(lines.len(), 7);
    for line in &lines[1..] {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[3] - (f[1] - f[2]).abs()).abs() < 1e-12);
    }
    // t = 4 sits exactly on a jump midpoint of the scaled count: the
    // sharp column must be 2/3 there.
    let t4: Vec<f64> = lines[2].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(t4[0], 4.0);
    assert!((t4[2] - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn verify_passes_and_echoes_seed() {
    let (code, stdout, _) = run(hweyl().args([
        "verify", "--limit", "300", "--seed", "12345", "--samples", "50",
    ]));
    assert_eq!(code, 0, "verify should pass: {stdout}");
    assert!(stdout.contains("seed: 12345"));
    assert!(stdout.contains("counts: ok"));
    assert!(stdout.contains("identity: ok"));
    assert!(stdout.contains("squeeze: ok"));
    assert!(stdout.contains("verify: all checks passed"));
}

#[test]
fn bad_arguments_exit_2() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["remainder", "--grid", "nonsense"],
        vec!["remainder", "--grid", "10:0.5:4"],
        vec!["remainder", "--grid", "10:2:0"],
        vec!["remainder", "--grid", "-5:2:4"],
        vec!["expsum", "--T", "50", "--grid", "10:2:5"],
        vec!["moments", "--k", "7", "--grid", "100:2:3"],
        vec!["verify", "--limit", "10"],
    ];
    for args in cases {
        let (code, _, stderr) = run(hweyl().args(&args));
        assert_eq!(code, 2, "args {args:?} should fail validation: {stderr}");
        assert!(!stderr.is_empty());
    }
}

#[test]
fn unknown_subcommand_exits_2() {
    let (code, _, _) = run(hweyl().arg("nosuchcmd"));
    assert_eq!(code, 2);
}

#[test]
fn cache_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("spec.bin");
    let cache_arg = cache.to_str().unwrap();

    let (code, first, _) = run(hweyl().args(["remainder", "--grid", "100:2:5", "--cache", cache_arg]));
    assert_eq!(code, 0);
    assert!(cache.exists(), "first run should write the cache");

    let (code, second, _) = run(hweyl().args(["remainder", "--grid", "100:2:5", "--cache", cache_arg]));
    assert_eq!(code, 0);
    assert_eq!(first, second, "cached run must reproduce the output byte for byte");

    let (code, third, _) = run(hweyl().args(["remainder", "--grid", "100:2:5"]));
    assert_eq!(code, 0);
    assert_eq!(first, third, "cacheless run must agree as well");
}

#[test]
fn cache_dir_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(hweyl()
        .args(["remainder", "--grid", "100:2:3"])
        .env("HWEYL_CACHE_DIR", dir.path()));
    assert_eq!(code, 0);
    assert!(dir.path().join("hweyl-spectrum.bin").exists());
}

#[test]
fn unwritable_cache_exits_4() {
    let (code, _, stderr) = run(hweyl().args([
        "remainder", "--grid", "100:2:3", "--cache", "/nonexistent-dir/c.bin",
    ]));
    assert_eq!(code, 4, "io failure should exit 4: {stderr}");
}

#[test]
fn corrupt_cache_heals_itself() {
    // A cache with bad magic is treated as absent: the run rebuilds,
    // overwrites the file, and succeeds.
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("broken.bin");
    std::fs::write(&cache, b"not a cache at all").unwrap();
    let args = ["remainder", "--grid", "100:2:3", "--cache"];

    let (code, first, stderr) = run(hweyl().args(args).arg(&cache));
    assert_eq!(code, 0, "corrupt cache should be rebuilt, not fatal: {stderr}");
    let healed = std::fs::read(&cache).unwrap();
    assert_eq!(&healed[0..8], b"HWEYL001", "rebuilt cache should carry the magic");

    let (code, second, _) = run(hweyl().args(args).arg(&cache));
    assert_eq!(code, 0);
    assert_eq!(first, second);
}

#[test]
fn remainder_json_mirrors_csv() {
    let (code, stdout, _) = run(hweyl().args([
        "remainder", "--grid", "500:2:3", "--format", "json",
    ]));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let count = row["count"].as_f64().unwrap();
        let main = row["main"].as_f64().unwrap();
        let rem = row["remainder"].as_f64().unwrap();
        assert!((count - main - rem).abs() < 1e-6);
    }
}
