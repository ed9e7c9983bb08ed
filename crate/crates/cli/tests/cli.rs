use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ucsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucsl")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = ucsl(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn generate(dir: &Path, name: &str, config: &str, noise: &str, seed: &str) -> PathBuf {
    let path = dir.join(name);
    ok(&["generate", "--config", config, "--n", "100", "--noise-dims", noise, "--seed", seed, "--out", s(&path)]);
    path
}

fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn generate_writes_features_label_and_subtype() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    ok(&["generate", "--config", "along2", "--n", "200", "--noise-dims", "10", "--seed", "7", "--out", s(&path)]);
    let (header, rows) = read_rows(&path);
    assert_eq!(header.len(), 14);
    assert_eq!(&header[12..], ["y", "subtype"]);
    assert_eq!(rows.len(), 800);

    let again = dir.path().join("d2.csv");
    ok(&["generate", "--config", "along2", "--n", "200", "--noise-dims", "10", "--seed", "7", "--out", s(&again)]);
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn generate_rejects_unknown_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = ucsl(&["generate", "--config", "along5", "--out", s(&dir.path().join("d.csv"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("along5"));
}

#[test]
fn fit_then_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "d.csv", "along2", "0", "3");
    let model = dir.path().join("model.json");
    ok(&["fit", "--data", s(&data), "--k", "2", "--ensembles", "3", "--seed", "1", "--out", s(&model)]);
    let metrics = json(&dir.path().join("model.metrics.json"));
    assert_eq!(metrics["schema_version"], 1);
    assert!(metrics["ari"].as_f64().unwrap() >= 0.95, "{metrics}");
    assert_eq!(metrics["members"].as_array().unwrap().len(), 3);
    assert_eq!(metrics["cluster_sizes"].as_array().unwrap().len(), 2);

    let pred = dir.path().join("pred.csv");
    ok(&["predict", "--model", s(&model), "--data", s(&data), "--out", s(&pred)]);
    let (header, rows) = read_rows(&pred);
    assert_eq!(header, ["p_y", "cluster"]);
    let (_, train) = read_rows(&data);
    let label_col = 2;
    let predicted: Vec<u64> = rows.iter().zip(&train).filter(|(_, t)| t[label_col] == "1").map(|(r, _)| r[1].parse().unwrap()).collect();
    let stored: Vec<u64> = json(&model)["consensus_labels"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(predicted, stored);
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r[0].parse::<f64>().unwrap())));
}

#[test]
fn fit_names_missing_label_column() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "d.csv", "along2", "0", "3");
    let out = ucsl(&["fit", "--data", s(&data), "--label-column", "diagnosis", "--out", s(&dir.path().join("m.json"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("diagnosis"));
}

#[test]
fn clustering_flag_selects_the_model_kind() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "d.csv", "along2", "0", "4");
    let mut kinds = Vec::new();
    for method in ["kmeans", "gmm"] {
        let model = dir.path().join(format!("{method}.json"));
        ok(&["fit", "--data", s(&data), "--clustering", method, "--ensembles", "2", "--out", s(&model)]);
        kinds.push(json(&model)["cluster_model"]["kind"].as_str().unwrap().to_string());
    }
    assert_ne!(kinds[0], kinds[1]);
}

#[test]
fn predict_rejects_wrong_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let train = generate(dir.path(), "train.csv", "along2", "0", "5");
    let other = generate(dir.path(), "other.csv", "along2", "3", "5");
    let model = dir.path().join("m.json");
    ok(&["fit", "--data", s(&train), "--ensembles", "1", "--out", s(&model)]);
    let out = ucsl(&["predict", "--model", s(&model), "--data", s(&other), "--out", s(&dir.path().join("p.csv"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("expects 2") && err.contains("got 5"), "{err}");
}

#[test]
fn single_cluster_model_predicts_constant_cluster() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "d.csv", "parallel-inside2", "0", "6");
    let model = dir.path().join("m.json");
    ok(&["fit", "--data", s(&data), "--k", "1", "--ensembles", "1", "--out", s(&model)]);
    let pred = dir.path().join("p.csv");
    ok(&["predict", "--model", s(&model), "--data", s(&data), "--out", s(&pred)]);
    let (_, rows) = read_rows(&pred);
    assert!(rows.iter().all(|r| r[1] == "0"));
}

#[test]
fn regression_fit_writes_y_hat() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let mut text = String::from("x1,y\n");
    for i in 0..60 {
        let x = i as f64 / 10.0;
        let y = if i % 2 == 0 { 2.0 * x } else { -x };
        text.push_str(&format!("{x},{y}\n"));
    }
    std::fs::write(&path, text).unwrap();
    let model = dir.path().join("m.json");
    ok(&["fit", "--data", s(&path), "--classifier", "regression", "--ensembles", "2", "--out", s(&model)]);
    let pred = dir.path().join("p.csv");
    ok(&["predict", "--model", s(&model), "--data", s(&path), "--out", s(&pred)]);
    let (header, rows) = read_rows(&pred);
    assert_eq!(header, ["y_hat", "cluster"]);
    assert_eq!(rows.len(), 60);
}

#[test]
fn benchmark_writes_table_summary_and_chart() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.json");
    std::fs::write(
        &config,
        r#"{"source": {"kind": "generate", "geometries": ["along2", "parallel-inside2"], "n_per_cluster": 60},
            "methods": ["ucsl", "kmeans", "gmm"], "noise_dims": [0, 2], "seeds": [0, 1]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = ucsl(&["benchmark", "--config", s(&config), "--out", s(&out_dir), "--ensembles", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--ensembles 5 ignored"));

    let summary = json(&out_dir.join("summary.json"));
    assert_eq!(summary["schema_version"], 1);
    let cells = summary["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2 * 2 * 3);
    for c in cells {
        for field in ["config", "noise_dims", "method", "mean_ari", "std_ari", "runs"] {
            assert!(c.get(field).is_some(), "missing {field} in {c}");
        }
        assert_eq!(c["runs"].as_array().unwrap().len(), 2);
    }
    let (header, rows) = read_rows(&out_dir.join("runs.csv"));
    assert_eq!(header, ["config", "noise_dims", "method", "seed", "ari", "error"]);
    assert_eq!(rows.len(), 24);
    let svg = std::fs::read_to_string(out_dir.join("ari_vs_noise.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 6);
}

#[test]
fn benchmark_rejects_empty_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.json");
    std::fs::write(&config, r#"{"source": {"kind": "generate"}, "noise_dims": [], "seeds": [0]}"#).unwrap();
    let out = ucsl(&["benchmark", "--config", s(&config), "--out", s(&dir.path().join("o"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("noise_dims"));
}

#[test]
fn benchmark_easy_regime_is_solved_by_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.json");
    std::fs::write(
        &config,
        r#"{"source": {"kind": "generate", "geometries": ["along3", "along2", "parallel-inside2"], "n_per_cluster": 80, "cluster_separation": 10.0},
            "methods": ["ucsl", "kmeans", "gmm"], "noise_dims": [0], "seeds": [0, 1, 2]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    ok(&["benchmark", "--config", s(&config), "--out", s(&out_dir)]);
    for c in json(&out_dir.join("summary.json"))["cells"].as_array().unwrap() {
        assert!(c["mean_ari"].as_f64().unwrap() >= 0.9, "{c}");
    }
}
