use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn csamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csamp"))
        .args(args)
        .output()
        .expect("run csamp")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sweep_beta_table_shape_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = csamp(&["sweep-beta", "--n", "4", "--trials", "2000", "--seed", "9", "--out", path_str(p)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 15);
    let ks: Vec<usize> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(ks, (1..16).collect::<Vec<_>>());

    let row: Vec<&str> = lines.iter().find(|l| l.starts_with("0,")).unwrap().split(',').collect();
    let analytic: Vec<f64> = row[2..6].iter().map(|c| c.parse().unwrap()).collect();
    assert_eq!(&analytic[..3], &[1.0, 1.0, 0.5]);
    assert!((analytic[3] - 8.0 / 15.0).abs() < 1e-15);
    // At β = 0 the two swappers are exact, so their simulated columns are too.
    assert_eq!(row[6], "1");
    assert_eq!(row[7], "1");

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "sweep-beta");
    assert_eq!(manifest["master_seed"], 9);
    assert_eq!(manifest["parameters"]["trials"], 2000);
    let digest = hex::encode(Sha256::digest(fs::read(&a).unwrap()));
    assert_eq!(manifest["outputs"][0]["sha256"], digest.as_str());
}

#[test]
fn sweep_beta_json_and_bad_n() {
    let o = csamp(&["sweep-beta", "--n", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 7);
    assert_eq!(csamp(&["sweep-beta", "--n", "0"]).status.code(), Some(2));
    assert_eq!(csamp(&["sweep-beta", "--n", "13"]).status.code(), Some(2));
}

#[test]
fn bounds_table() {
    let o = csamp(&["bounds", "--n", "16", "--k", "32768", "--delta", "1/6", "--d", "12"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "kind,N,K,delta,d,exact,value");
    let lb: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(lb[0], "lower_bound_queries");
    assert_eq!(lb[5], "16384");

    let success: Vec<f64> = lines
        .filter(|l| l.starts_with("sample_success"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(success.len(), 12);
    assert!(success.windows(2).all(|w| w[0] <= w[1]));

    // δ = 1/2 at K = N/2 demands K queries.
    let o = csamp(&["bounds", "--n", "10", "--beta", "0", "--delta", "0.5", "--d", "1"]);
    let text = stdout(&o);
    let lb: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((lb[2], lb[5]), ("512", "512"));

    // Default K sweep.
    let o = csamp(&["bounds", "--n", "8", "--d", "2"]);
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("lower_bound")).count(), 15);
    assert_eq!(csamp(&["bounds", "--n", "8", "--delta", "3/4"]).status.code(), Some(3));
}

#[test]
fn game_then_verify_then_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.jsonl");
    let o = csamp(&["game", "--n", "16", "--rounds", "10", "--player", "quantum_complement", "--seed", "5", "--out", path_str(&path)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("wins=10 rounds=10"), "{}", stdout(&o));
    assert!(dir.path().join("q.jsonl.manifest.json").exists());

    let v = csamp(&["verify", path_str(&path)]);
    assert_eq!(v.status.code(), Some(0), "{}", String::from_utf8_lossy(&v.stderr));
    assert_eq!(csamp(&["verify", path_str(&path), "--seed", "6"]).status.code(), Some(1));

    // Flip the lowest bit of one candidate.
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut rec: Value = serde_json::from_str(&lines[3]).unwrap();
    let y = u32::from_str_radix(rec["candidate_hex"].as_str().unwrap(), 16).unwrap() ^ 1;
    rec["candidate_hex"] = Value::String(format!("{y:04x}"));
    lines[3] = serde_json::to_string(&rec).unwrap();
    let tampered = dir.path().join("t.jsonl");
    fs::write(&tampered, lines.join("\n") + "\n").unwrap();
    let v = csamp(&["verify", path_str(&tampered)]);
    assert_eq!(v.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&v.stderr).contains("round 2"));

    fs::write(&tampered, "garbage\n").unwrap();
    assert_eq!(csamp(&["verify", path_str(&tampered)]).status.code(), Some(1));
    assert_eq!(csamp(&["verify", path_str(&dir.path().join("missing"))]).status.code(), Some(2));
}

#[test]
fn classical_game_summary() {
    let o = csamp(&["game", "--n", "16", "--rounds", "1000", "--player", "classical_random_guess", "--seed", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let t: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let wins = t["summary"]["wins"].as_u64().unwrap() as f64;
    let p = 32768.0 / 65535.0;
    let sigma = (1000.0_f64 * p * (1.0 - p)).sqrt();
    assert!((wins - 1000.0 * p).abs() <= 5.0 * sigma);
    let summary = String::from_utf8(o.stderr).unwrap();
    assert!(summary.contains("ci95=["));
}

#[test]
fn json_transcripts_verify_too() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let o = csamp(&["game", "--n", "9", "--backend", "random_table", "--player", "coupon_collector", "--rounds", "5", "--format", "json", "--out", path_str(&path)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(csamp(&["verify", path_str(&path)]).status.code(), Some(0));
}

#[test]
fn saes_round_trip_via_two_invocations() {
    let enc = csamp(&["saes", "--key", "4af5", "--block", "d728"]);
    assert_eq!(stdout(&enc), "24ec\n");
    let c = stdout(&enc);
    let dec = csamp(&["saes", "--key", "4af5", "--block", c.trim(), "--direction", "decrypt"]);
    assert_eq!(stdout(&dec), "d728\n");
    let other = csamp(&["saes", "--key", "4af5", "--block", "d729"]);
    assert_ne!(stdout(&other), stdout(&enc));
    assert_eq!(csamp(&["saes", "--key", "4af5", "--block", "d72"]).status.code(), Some(2));
    assert_eq!(csamp(&["saes", "--key", "ghij", "--block", "0000"]).status.code(), Some(2));
}
