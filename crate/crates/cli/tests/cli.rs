use std::path::Path;
use std::process::{Command, Output};

fn mcswap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcswap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

const XOR_CONFIG: &str = r#"
seed = 3

[dataset]
source = "xor"
n_classes = 4
n_features = 3
points_per_class = 16
seed = 1

[execution]
mode = "exact"
noise = [0.0, 0.05]
"#;

#[test]
fn generate_writes_64_rows_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = mcswap(&[
            "generate",
            "--classes",
            "4",
            "--features",
            "3",
            "--points-per-class",
            "16",
            "--seed",
            "9",
            "--out",
            path_arg(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert!(
            stdout.contains("M = 64") && stdout.contains("L = 4"),
            "{stdout}"
        );
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 65);
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
}

#[test]
fn generate_reads_the_dataset_section_of_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("xor.toml");
    std::fs::write(&cfg, XOR_CONFIG).unwrap();
    let out = dir.path().join("x.csv");
    let o = mcswap(&[
        "generate",
        "--config",
        path_arg(&cfg),
        "--out",
        path_arg(&out),
    ]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 65);
}

#[test]
fn infeasible_generator_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = mcswap(&[
        "generate",
        "--classes",
        "40",
        "--features",
        "2",
        "--points-per-class",
        "2",
        "--out",
        path_arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
    assert!(!out.exists());
}

#[test]
fn experiment_writes_reproducible_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("xor.toml");
    std::fs::write(&cfg, XOR_CONFIG).unwrap();
    let mut docs = Vec::new();
    for name in ["a.json", "b.json"] {
        let out = dir.path().join(name);
        let o = mcswap(&[
            "experiment",
            "--config",
            path_arg(&cfg),
            "--out",
            path_arg(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert!(stdout.contains("100.00"), "{stdout}");
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("created_unix");
        v["config"].as_object_mut().unwrap().remove("out");
        docs.push(v);
    }
    assert_eq!(docs[0], docs[1]);
    let doc = &docs[0];
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["records"].as_array().unwrap().len(), 128);
    // Defaults are echoed.
    assert_eq!(doc["config"]["execution"]["shots"], 8192);
    assert_eq!(doc["config"]["splits"]["kind"], "leave-one-out");
    let aggs = doc["aggregates"].as_array().unwrap();
    assert_eq!(aggs.len(), 2);
    let ratio = aggs[1]["mean_norm"].as_f64().unwrap() / aggs[0]["mean_norm"].as_f64().unwrap();
    assert!((ratio - 0.95).abs() < 1e-9, "{ratio}");
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("xor.toml");
    std::fs::write(&cfg, XOR_CONFIG).unwrap();
    let out = dir.path().join("r.json");
    let o = mcswap(&[
        "experiment",
        "--config",
        path_arg(&cfg),
        "--mode",
        "sampled",
        "--shots",
        "256",
        "--noise",
        "0.1",
        "--seed",
        "5",
        "--out",
        path_arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["config"]["execution"]["mode"], "sampled");
    assert_eq!(doc["config"]["execution"]["shots"], 256);
    assert_eq!(doc["config"]["seed"], 5);
    assert_eq!(doc["aggregates"].as_array().unwrap().len(), 1);
}

#[test]
fn experiment_config_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad_noise = dir.path().join("noise.toml");
    std::fs::write(&bad_noise, XOR_CONFIG.replace("[0.0, 0.05]", "[1.5]")).unwrap();
    assert_eq!(
        mcswap(&["experiment", "--config", path_arg(&bad_noise)])
            .status
            .code(),
        Some(2)
    );

    let unknown_key = dir.path().join("unknown.toml");
    std::fs::write(&unknown_key, format!("{XOR_CONFIG}\nbogus = 1\n")).unwrap();
    assert_eq!(
        mcswap(&["experiment", "--config", path_arg(&unknown_key)])
            .status
            .code(),
        Some(2)
    );

    let missing = dir.path().join("missing.toml");
    std::fs::write(
        &missing,
        "[dataset]\nsource = \"csv\"\npath = \"nope.csv\"\n",
    )
    .unwrap();
    assert_eq!(
        mcswap(&["experiment", "--config", path_arg(&missing)])
            .status
            .code(),
        Some(2)
    );

    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "a,b,label\n1,2,0\n3,oops,1\n").unwrap();
    let bad_data = dir.path().join("bad_data.toml");
    std::fs::write(
        &bad_data,
        "[dataset]\nsource = \"csv\"\npath = \"bad.csv\"\n",
    )
    .unwrap();
    let o = mcswap(&["experiment", "--config", path_arg(&bad_data)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.csv"));
}

#[test]
fn capacity_sweep_outputs_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("sweep");
    let o = mcswap(&[
        "capacity",
        "--r",
        "0.6,0.1,0.2",
        "--repetitions",
        "100,1000,10000,100000",
        "--noise",
        "0,0.1",
        "--out",
        path_arg(&stem),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json")).unwrap())
            .unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    for row in rows {
        let ratio = row["noisy_n_states"].as_f64().unwrap() / row["n_states"].as_f64().unwrap();
        if row["p"].as_f64().unwrap() == 0.0 {
            assert_eq!(ratio, 1.0);
        } else {
            assert!(ratio >= row["worst_case_factor"].as_f64().unwrap() - 1e-12);
        }
    }
    for fit in doc["fits"].as_array().unwrap() {
        assert!(fit["fit"]["r_squared"].as_f64().unwrap() > 0.999);
    }
    let csv = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn capacity_rejects_pole_and_malformed_vectors() {
    assert_eq!(
        mcswap(&["capacity", "--r", "0,0,0.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        mcswap(&["capacity", "--r", "0.1,0.2"]).status.code(),
        Some(2)
    );
}

#[test]
fn shipped_iris_config_runs() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/iris.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("iris.json");
    let o = mcswap(&[
        "experiment",
        "--config",
        path_arg(&cfg),
        "--out",
        path_arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["dataset"]["n_points"], 150);
    assert!(doc["aggregates"][0]["accuracy"].as_f64().unwrap() >= 90.0);
}
