use std::collections::BTreeMap;
use std::io::Write;
use std::process::Command;

use defosc::cli::*;

fn cfg(pairs: &[(&str, &str)]) -> RunConfig {
    let m: BTreeMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    RunConfig::from_map(&m).unwrap()
}

fn bin(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_defosc")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn json_report_roundtrips() {
    let r = run(&cfg(&[("n", "2"), ("k", "-4"), ("suites", "geometry,spectrum,gram"), ("cutoff", "3")]));
    let bytes = emit(&r, Format::Json).unwrap();
    let back: Report = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(back, r);
    assert_eq!(back.schema_version, SCHEMA_VERSION);
    assert_eq!(r.suites.iter().map(|s| s.suite.as_str()).collect::<Vec<_>>(), ["geometry", "spectrum", "gram"]);
}

#[test]
fn output_is_deterministic() {
    let c = cfg(&[("n", "2"), ("k", "4"), ("hbar", "1/10"), ("suites", "all"), ("cutoff", "3"), ("samples", "4")]);
    for f in [Format::Json, Format::Csv, Format::Text] {
        assert_eq!(emit(&run(&c), f).unwrap(), emit(&run(&c), f).unwrap());
    }
}

#[test]
fn empty_selection_passes() {
    let r = run(&cfg(&[("suites", "none")]));
    assert!(r.suites.is_empty());
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn exit_codes_follow_the_worst_failure() {
    assert_eq!(run(&cfg(&[("n", "2"), ("k", "-4"), ("suites", "geometry,spectrum")])).exit_code(), 0);
    // the deformed relation table carries sign conflicts
    assert_eq!(run(&cfg(&[("n", "2"), ("k", "-4"), ("suites", "algebra")])).exit_code(), 1);
    // divergent weight
    let r = run(&cfg(&[("n", "1"), ("k", "4"), ("hbar", "1"), ("suites", "gram")]));
    assert!(r.suites[0].error.is_some());
    assert_eq!(r.exit_code(), 3);
}

#[test]
fn config_validation() {
    let bad = |pairs: &[(&str, &str)]| {
        let m: BTreeMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        RunConfig::from_map(&m).is_err()
    };
    assert!(bad(&[("n", "0")]));
    assert!(bad(&[("colour", "red")]));
    assert!(bad(&[("measure", "median")]));
    assert!(bad(&[("n", "1"), ("suites", "hproj"), ("hproj", "classify")]));
    assert!(!bad(&[("n", "1"), ("suites", "geometry"), ("hproj", "classify")]));
    assert!(bad(&[("n", "2"), ("point", "1/2")]));
    assert!(bad(&[("hproj", "curve")]));
    assert!(!bad(&[("n", "2"), ("point", "1/2, 1/3i"), ("hproj", "classify")]));
    let m = parse_config_text("# comment\nn = 2\nk=-1/2\n\n").unwrap();
    assert_eq!(m.get("k").map(String::as_str), Some("-1/2"));
    assert!(parse_config_text("n 2").is_err());
}

#[test]
fn spectrum_csv_lists_levels() {
    let r = run(&cfg(&[("n", "2"), ("k", "-4"), ("hbar", "1/3"), ("cutoff", "3"), ("suites", "spectrum")]));
    let text = String::from_utf8(emit(&r, Format::Csv).unwrap()).unwrap();
    let table: Vec<&str> = text.split("\n\n").nth(1).unwrap().lines().collect();
    assert_eq!(table[0], "suite,table,l,exact,float,multiplicity");
    assert_eq!(table.len(), 5);
    assert!(table[1].starts_with("spectrum,") && table[1].ends_with(",1/3,0.333333333333,1"));
    assert!(table[4].ends_with(",4/3,1.33333333333,4"));
}

#[test]
fn text_report_names_computed_and_claimed_dimensions() {
    let r = run(&cfg(&[("n", "2"), ("k", "4"), ("suites", "algebra")]));
    let text = String::from_utf8(emit(&r, Format::Text).unwrap()).unwrap();
    assert!(text.lines().any(|l| l.contains("computed 16") && l.contains("claimed n(n+4) = 12")), "{text}");
    assert!(text.ends_with("exit 1\n"));
}

#[test]
fn binary_subcommands_and_exit_codes() {
    let (code, out, _) = bin(&["spectrum", "--n", "1", "--k", "-4", "--format", "text"]);
    assert_eq!(code, 0);
    assert!(out.contains("== spectrum"));
    let (code, out, _) = bin(&["hproj", "--n", "2", "--k", "-4", "classify", "--point", "1/2,0"]);
    assert_eq!(code, 0);
    let r: Report = serde_json::from_str(&out).unwrap();
    assert!(r.suites[0].checks[0].value.as_deref().unwrap().starts_with("generic"));
    let (code, _, err) = bin(&["geometry", "--n", "abc"]);
    assert_eq!(code, 3);
    assert!(!err.is_empty());
}

#[test]
fn binary_reads_config_and_curve_files() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let mut f = std::fs::File::create(&curve).unwrap();
    writeln!(f, "t,re1,im1,re2,im2").unwrap();
    for i in 0..201 {
        let t = -0.5 + i as f64 * 0.005;
        writeln!(f, "{t},{},0,0,{}", 0.6 * t.tanh(), 0.5 * t).unwrap();
    }
    drop(f);
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "n = 2\nk = -4\nformat = csv\n").unwrap();
    let out_path = dir.path().join("report.csv");
    let (code, _, _) = bin(&[
        "hproj",
        "--config",
        conf.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "curve",
        "--input",
        curve.to_str().unwrap(),
    ]);
    // a bent curve fails the numeric planarity check
    assert_eq!(code, 2);
    let written = std::fs::read_to_string(&out_path).unwrap();
    assert!(written.contains("curve is H-planar"));
    // flags override the file
    let (code, out, _) = bin(&["geometry", "--config", conf.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0);
    assert!(out.trim_start().starts_with('{'));
}
