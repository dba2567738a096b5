use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use norminflate_cli::config::RunConfig;
use serde_json::Value;

fn norminflate(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_norminflate"))
        .args(args)
        .arg("--set")
        .arg(format!("output_dir={}", serde_json::to_string(out.to_str().unwrap()).unwrap()))
        .env_remove("NORMINFLATE_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn read_files(dir: &Path) -> BTreeMap<String, String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read_to_string(e.path()).unwrap())
        })
        .collect()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn construct_writes_one_row_per_wave() {
    let dir = tempfile::tempdir().unwrap();
    let out = norminflate(
        &["construct", "--set", "params.r=4", "--set", "params.k=4", "--set", "params.beta=0.45"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("frequencies.csv")).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[1], "1,4,0,0,4,0,1,4,0.0,0.5,-0.125");
    assert!(lines[4].starts_with("4,32,"));
}

#[test]
fn sweep_rejects_parameters_outside_the_remainder_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = norminflate(&["sweep", "--set", "params.beta=0.3", "--set", "params.nu=0.1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1/2 - (3/4)nu"));
}

#[test]
fn witness_is_found_for_default_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let out = norminflate(&["witness"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("witness.csv")).unwrap();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let get = |k: &str| row.get(header.iter().position(|h| h == k).unwrap()).unwrap().to_string();
    assert_eq!(get("found"), "true");
    let eps: f64 = get("epsilon").parse().unwrap();
    assert!(get("lower_bound").parse::<f64>().unwrap() > 1.0 / eps);
    assert!(get("r").parse::<u32>().unwrap() <= 1 << 14);
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["picard", "--deterministic", "--set", "params.r=3"];
    assert_eq!(norminflate(&args, dir.path()).status.code(), Some(0));
    let first = read_files(dir.path());
    assert_eq!(norminflate(&args, dir.path()).status.code(), Some(0));
    assert_eq!(first, read_files(dir.path()));
    assert!(first.values().all(|t| !t.contains("unix_time")));
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = norminflate(&["construct", "--deterministic", "--set", "params.r=5"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let resolved = dir.path().join("resolved_config.json");
    let cfg: RunConfig = serde_json::from_str(&std::fs::read_to_string(&resolved).unwrap()).unwrap();
    assert_eq!(cfg.params.r, 5);
    assert_eq!(cfg.output_dir.as_deref(), Some(dir.path()));
    let before = read_files(dir.path());
    let again = Command::new(env!("CARGO_BIN_EXE_norminflate"))
        .arg("--config")
        .arg(&resolved)
        .output()
        .unwrap();
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(before, read_files(dir.path()));
}

#[test]
fn unknown_keys_and_bad_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = norminflate(&["construct", "--set", "params.gamma=1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
    assert_eq!(norminflate(&["nonsense"], dir.path()).status.code(), Some(1));
    assert_eq!(norminflate(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn output_dir_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_norminflate"))
        .args(["construct", "--deterministic"])
        .env("NORMINFLATE_OUTPUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("frequencies.csv").is_file());
    assert!(target.join("reports.csv").is_file());
}

fn keys(v: &Value) -> Vec<String> {
    let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
    k.sort();
    k
}

#[test]
fn schema_matches_the_config_type() {
    let schema: Value =
        serde_json::from_str(include_str!("../config.schema.json")).expect("schema is valid JSON");
    let config = serde_json::to_value(RunConfig::default()).unwrap();
    let props = &schema["properties"];
    assert_eq!(keys(props), keys(&config));
    for (name, section) in config.as_object().unwrap() {
        if section.is_object() {
            assert_eq!(keys(&props[name]["properties"]), keys(section), "section {name}");
            for (key, default) in section.as_object().unwrap() {
                assert_eq!(&props[name]["properties"][key]["default"], default, "{name}.{key}");
            }
        }
    }
}
