use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;
use speccy::cli::{run, LatticeFile, SublatticeFile, PRECISION_ENV};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).to_string_lossy().into_owned()
}

fn speccy(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["speccy"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = speccy(args);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

fn write_lattice(dir: &tempfile::TempDir, name: &str, gram: Vec<Vec<i64>>) -> String {
    let path = dir.path().join(name);
    let file = LatticeFile { gram, name: name.into() };
    std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn disc_reports_the_group_of_l0() {
    let v = json(&["disc", "--lattice", &fixture("l0_d7.json")]);
    assert_eq!(v["elementary_divisors"], serde_json::json!([7]));
    assert_eq!(v["order"], 7);
    assert_eq!(v["maximal"], true);
    assert_eq!(v["cosets"][1]["q"], "6/7");
}

#[test]
fn nonmaximal_fixture_is_flagged() {
    let v = json(&["disc", "--lattice", &fixture("L_d7_nonmaximal.json")]);
    assert_eq!(v["maximal"], false);
}

#[test]
fn output_is_byte_stable() {
    let args = ["eisenstein", "--lattice", &fixture("l0_d7.json"), "--cutoff", "2"];
    let (_, first, _) = speccy(&args);
    let (_, second, _) = speccy(&args);
    assert_eq!(first, second);
    assert!(!first.is_empty());
}

#[test]
fn theta_of_a1_matches_representation_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let a1 = write_lattice(&dir, "a1.json", vec![vec![2]]);
    let (code, out, err) = speccy(&["--format", "csv", "theta", "--lattice", &a1, "--cutoff", "1"]);
    assert_eq!(code, 0, "{err}");
    let mut reader = csv::Reader::from_reader(out.as_bytes());
    let rows: Vec<Vec<String>> =
        reader.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect();
    let find = |m: &str| rows.iter().find(|r| r[0] == m).cloned();
    assert!(find("0/1").unwrap().contains(&"1".to_string()));
    assert!(find("1/4").unwrap().contains(&"2".to_string()));
}

#[test]
fn theta_rejects_indefinite_lattices() {
    let (code, _, err) = speccy(&["theta", "--lattice", &fixture("L_d7_A1.json")]);
    assert_eq!(code, 1);
    assert!(err.contains("lattice"), "{err}");
}

#[test]
fn degrees_with_oracle_gives_log_seven() {
    let v = json(&["degrees", "--lattice", &fixture("l0_d7.json"), "--m", "1", "--mu", "0", "--oracle"]);
    let text = v.to_string();
    assert!(text.contains("log 7"), "{text}");
}

#[test]
fn degrees_csv_has_header_and_rows() {
    let (code, out, _) = speccy(&["--format", "csv", "degrees", "--lattice", &fixture("l0_d7.json"), "--m-max", "1"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert!(lines.next().unwrap().starts_with("m,mu,prime"));
    assert!(out.contains("1/1,0,7,1/1,log 7"));
}

#[test]
fn precision_flag_and_env_control_digits() {
    let (_, short, _) = speccy(&["chowla", "--d", "-7", "--precision", "8"]);
    let v: Value = serde_json::from_str(&short).unwrap();
    assert_eq!(v["digits"], 8);

    let out = Command::new(env!("CARGO_BIN_EXE_speccy"))
        .args(["chowla", "--d", "-7"])
        .env(PRECISION_ENV, "12")
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["digits"], 12);
    assert_eq!(v["l_at_zero"], "1/1");
}

#[test]
fn verify_passes_on_the_block_fixture() {
    let v = json(&[
        "verify",
        "--lattice",
        &fixture("L_d7_A1.json"),
        "--sub",
        &fixture("sub_d7_A1.json"),
        "--pp",
        &format!("@{}", fixture("pp_hejhal_1_0.json")),
    ]);
    assert_eq!(v["all_match"], true);
    assert_eq!(v["totals"]["residual"]["symbolic"], "0");
    assert_eq!(v["totals"]["lprime_coefficient"], "-1/2");
}

#[test]
fn binary_exits_two_on_injected_fault() {
    let out = Command::new(env!("CARGO_BIN_EXE_speccy"))
        .args([
            "verify",
            "--lattice",
            &fixture("L_d7_A1.json"),
            "--sub",
            &fixture("sub_d7_A1.json"),
            "--pp",
            r#"{"1,0": 1}"#,
            "--inject-fault",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("identity mismatch"));
}

#[test]
fn malformed_inputs_exit_one_and_name_the_field() {
    let (code, _, err) = speccy(&["disc", "--lattice", "/nonexistent/lattice.json"]);
    assert_eq!(code, 1);
    assert!(err.contains("lattice"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"gram": [[1]]}"#).unwrap();
    let (code, _, err) = speccy(&["disc", "--lattice", bad.to_str().unwrap()]);
    assert_eq!(code, 1, "{err}");

    let (code, _, err) = speccy(&[
        "verify",
        "--lattice",
        &fixture("L_d7_A1.json"),
        "--sub",
        &fixture("sub_d7_A1.json"),
        "--pp",
        r#"{"1,3": 1}"#,
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("pp"), "{err}");

    let (code, _, _) = speccy(&["degrees", "--lattice", &fixture("l0_d7.json"), "--m", "1", "--m-max", "2"]);
    assert_eq!(code, 1);
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = speccy(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("verify"));
}

#[test]
fn input_files_round_trip() {
    let l = LatticeFile { gram: vec![vec![-2, -1], vec![-1, -4]], name: "l0".into() };
    let back: LatticeFile = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
    assert_eq!(back, l);
    let unnamed: LatticeFile = serde_json::from_str(r#"{"gram": [[2]]}"#).unwrap();
    assert_eq!(unnamed.name, "");
    let s = SublatticeFile { basis: vec![vec![1, 0, 0], vec![0, 1, 0]] };
    let back: SublatticeFile = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(back, s);
}
