use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zsl-energy"))
}

fn ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn generate(dir: &Path, n: usize, seed: u64) {
    ok(bin()
        .args([
            "generate",
            "--n",
            &n.to_string(),
            "--seed",
            &seed.to_string(),
            "--out",
        ])
        .arg(dir));
}

#[test]
fn generate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate(a.path(), 30, 9);
    generate(b.path(), 30, 9);
    for f in [
        "data.csv",
        "data.schema.json",
        "signatures.json",
        "profiles.json",
    ] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let c = tempfile::tempdir().unwrap();
    generate(c.path(), 30, 10);
    assert_ne!(
        std::fs::read(a.path().join("data.csv")).unwrap(),
        std::fs::read(c.path().join("data.csv")).unwrap()
    );
}

#[test]
fn train_predict_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(&d.join("gen"), 60, 4);
    let data = d.join("gen/data.csv");
    let sigs = d.join("gen/signatures.json");

    ok(bin()
        .args([
            "train",
            "--unknown",
            "RL",
            "--folds",
            "2",
            "--seed",
            "1",
            "--data",
        ])
        .arg(&data)
        .arg("--signatures")
        .arg(&sigs)
        .arg("--out")
        .arg(d.join("ens")));
    for f in [
        "compatibility.json",
        "regressors.json",
        "signatures.json",
        "ensemble.json",
    ] {
        assert!(d.join("ens").join(f).exists(), "{f} missing");
    }

    // k = 1: P is exactly the single closest type's prediction
    let out = ok(bin()
        .args(["predict", "--k", "1", "--ensemble"])
        .arg(d.join("ens"))
        .arg("--data")
        .arg(&data));
    let lines: Vec<serde_json::Value> = out
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 300);
    for line in &lines {
        let closest = line["closest"].as_array().unwrap();
        assert_eq!(closest.len(), 1);
        assert_eq!(closest[0]["weight"], 1.0);
        assert_ne!(closest[0]["type"], "RL");
        assert_eq!(closest[0]["e"], line["P"]);
    }

    let out = ok(bin()
        .args(["predict", "--k", "3", "--type", "RL", "--ensemble"])
        .arg(d.join("ens"))
        .arg("--data")
        .arg(&data)
        .arg("--out")
        .arg(d.join("pred.jsonl")));
    assert!(out.is_empty());
    let first: serde_json::Value = serde_json::from_str(
        std::fs::read_to_string(d.join("pred.jsonl"))
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    let weights: f64 = first["closest"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["weight"].as_f64().unwrap())
        .sum();
    assert!((weights - 1.0).abs() < 1e-12);
}

#[test]
fn errors_exit_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["evaluate", "--data"])
        .arg(dir.path().join("missing.csv"))
        .arg("--signatures")
        .arg(dir.path().join("s.json"))
        .arg("--out-json")
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    generate(dir.path(), 10, 1);
    let out = bin()
        .args(["train", "--unknown", "NOPE", "--data"])
        .arg(dir.path().join("data.csv"))
        .arg("--signatures")
        .arg(dir.path().join("signatures.json"))
        .arg("--out")
        .arg(dir.path().join("ens"))
        .output()
        .unwrap();
    assert!(!out.status.success());
}
