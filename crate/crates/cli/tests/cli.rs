use std::path::Path;
use std::process::{Command, Output};

fn cqmac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqmac")).args(args).output().expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_string_lossy().into_owned()
}

#[test]
fn single_point_grid_has_one_row_and_no_crossing() {
    let dir = tempfile::tempdir().unwrap();
    let o = cqmac(&["example1-sweep", "--eta-start", "0.2", "--eta-stop", "0.2", "--out-dir", &out_arg(dir.path())]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("unstructured.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "eta,lhs_bits,rhs_bits,verdict");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0.200000,0.1790629029,"));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("unstructured (cost <= 0.1): no crossing"));
    assert!(stdout.contains("structured (no cost): no crossing"));
    for f in ["structured.csv", "unstructured_nocost.csv", "structured_nocost.csv", "structured.json", "summary.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn grid_outside_range_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cqmac(&["example1-sweep", "--eta-stop", "0.7", "--out-dir", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_fails_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    std::fs::write(&file, "x").unwrap();
    let target = file.join("sub");
    let o = cqmac(&["regions", "--out-dir", &out_arg(&target)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("plain-file"));
}

#[test]
fn embed_presets() {
    let or = String::from_utf8(cqmac(&["embed", "--preset", "or"]).stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&or).unwrap();
    assert_eq!(v["q"], 3);
    assert_eq!(v["g"], serde_json::json!([0, 1, 1]));
    let xor: serde_json::Value = serde_json::from_slice(&cqmac(&["embed", "--preset", "xor"]).stdout).unwrap();
    assert_eq!(xor["q"], 2);
    let capped: serde_json::Value = serde_json::from_slice(&cqmac(&["embed", "--preset", "injective3", "--q", "7"]).stdout).unwrap();
    assert_eq!(capped["found"], false);
    assert_eq!(capped["q_max"], 7);
}

#[test]
fn malformed_function_table_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.json");
    std::fs::write(&path, "{\n  \"s1\": 2,\n  \"s2\": 2,\n  \"f\": [[0, 1], [1, oops]]\n}\n").unwrap();
    let o = cqmac(&["embed", "--function", &out_arg(&path)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
}

#[test]
fn source_without_embedding_reports_q_max() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let pmf = vec![vec![1.0 / 9.0; 3]; 3];
    let spec = serde_json::json!({ "s1": 3, "s2": 3, "pmf": pmf, "f": [[0, 1, 2], [3, 4, 5], [6, 7, 8]] });
    std::fs::write(&path, spec.to_string()).unwrap();
    let o = cqmac(&["regions", "--source", &out_arg(&path), "--q", "7", "--out-dir", &out_arg(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("q_max = 7"));
}

#[test]
fn constant_channel_never_overlaps() {
    let dir = tempfile::tempdir().unwrap();
    let o = cqmac(&["regions", "--channel", "constant", "--samples", "50", "--out-dir", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("verdict.json")).unwrap()).unwrap();
    assert_eq!(v["results"][0]["intersects"], false);
    let csv = std::fs::read_to_string(dir.path().join("channel_region.csv")).unwrap();
    assert!(csv.starts_with("R,R1,R2,tag\n"));
}

#[test]
fn simulation_presets() {
    let dir = tempfile::tempdir().unwrap();
    let xor = cqmac(&["simulate", "--preset", "xor", "--out-dir", &out_arg(&dir.path().join("x"))]);
    assert!(xor.status.success());
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("x/report.json")).unwrap()).unwrap();
    assert!(r["error_rate"].as_f64().unwrap() <= 0.05);
    let dep = cqmac(&["simulate", "--preset", "depolarized", "--out-dir", &out_arg(&dir.path().join("d"))]);
    assert!(dep.status.success());
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("d/report.json")).unwrap()).unwrap();
    // four equally likely sums, nothing to distinguish them
    assert!((r["exact_error"].as_f64().unwrap() - 0.75).abs() < 1e-9);
}

#[test]
fn oversized_simulation_is_a_resource_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("big.json");
    std::fs::write(&cfg, r#"{"n": 13, "k": 1, "l": 1, "delta": 0.5, "trials": 10}"#).unwrap();
    let o = cqmac(&["simulate", "--config", &out_arg(&cfg), "--eta", "0.1", "--out-dir", &out_arg(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["simulate", "--preset", "xor", "--eta", "0.3", "--seed", "11"],
        vec!["example1-sweep", "--eta-start", "0.0", "--eta-stop", "0.1", "--eta-step", "0.05"],
    ] {
        let mut outputs = Vec::new();
        for run in ["a", "b"] {
            let d = dir.path().join(format!("{}-{run}", args[0]));
            let mut full = args.clone();
            let o = out_arg(&d);
            full.extend(["--out-dir", &o]);
            assert!(cqmac(&full).status.success());
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&d)
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
                })
                .collect();
            files.sort();
            outputs.push(files);
        }
        assert_eq!(outputs[0], outputs[1]);
    }
}
