use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use suretynet::netgraph::{toy_network, write_json};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_suretynet"))
}

fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy")
}

fn run(args: &[&str], input: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--input")
        .arg(input)
        .arg("--output-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

fn write_doc(dir: &Path, name: &str, doc: Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_vec(&doc).unwrap()).unwrap();
    p
}

fn toy_json(dir: &Path) -> PathBuf {
    let p = dir.join("toy.json");
    write_json(&toy_network(), std::fs::File::create(&p).unwrap()).unwrap();
    p
}

#[test]
fn validate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["validate"], &toy_dir(), &tmp.path().join("ok"));
    ok(&o);
    assert_eq!(json(&tmp.path().join("ok/diagnostics.json")), Value::Array(vec![]));
    assert!(tmp.path().join("ok/manifest.json").is_file());

    let missing = write_doc(
        tmp.path(),
        "missing.json",
        serde_json::json!({
            "nodes": [{"node_id": "a", "r": 0.1, "beta": 1.0}, {"node_id": "o", "r": 0.0, "beta": 0.0}],
            "edges": [{"obligee_id": "o", "principal_id": "ghost", "weight": 1.0}]
        }),
    );
    let o = run(&["validate"], &missing, &tmp.path().join("missing"));
    assert_eq!(o.status.code(), Some(1));
    let d = json(&tmp.path().join("missing/diagnostics.json"));
    assert_eq!(d[0]["code"], "UnknownNodeReference");

    let heavy = write_doc(
        tmp.path(),
        "heavy.json",
        serde_json::json!({
            "nodes": [
                {"node_id": "a", "r": 0.1, "beta": 1.0},
                {"node_id": "b", "r": 0.1, "beta": 1.0},
                {"node_id": "o", "r": 0.0, "beta": 0.0}
            ],
            "edges": [
                {"obligee_id": "o", "principal_id": "a", "weight": 0.6},
                {"obligee_id": "o", "principal_id": "b", "weight": 0.6}
            ]
        }),
    );
    let o = run(&["validate"], &heavy, &tmp.path().join("heavy"));
    assert_eq!(o.status.code(), Some(1));
    let d = json(&tmp.path().join("heavy/diagnostics.json"));
    assert!(d.as_array().unwrap().iter().any(|x| x["code"] == "WeightSumExceedsOne"));
}

#[test]
fn runtime_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin().args(["meanfield", "--output-dir"]).arg(tmp.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["simulate", "--epsilon", "2"], &toy_dir(), tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exact_toy_joint_law() {
    let tmp = tempfile::tempdir().unwrap();
    let input = toy_json(tmp.path());
    let out = tmp.path().join("exact");
    ok(&run(&["exact", "--independent"], &input, &out));
    let rows = csv_rows(&out.join("joint.csv"));
    assert_eq!(rows.len(), 32);
    let total: f64 = rows.iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(&rows[0][0], "00000");
    assert_eq!(csv_rows(&out.join("joint_independent.csv")).len(), 32);
    let s = json(&out.join("summary.json"));
    assert!(s["tv_to_independent"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_auto_horizon_on_toy() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    ok(&run(&["simulate", "--reps", "100000", "--horizon", "auto"], &toy_dir(), &out));
    let s = json(&out.join("summary.json"));
    assert_eq!(s["horizon"], 2);
    assert_eq!(s["mixing"]["branch"]["Dag"]["depth"], 2);
    assert_eq!(csv_rows(&out.join("losses.csv")).len(), 100_000);
    let q = csv_rows(&out.join("quantiles.csv"));
    assert_eq!(q.len(), 5);
    for row in &q {
        let v: Vec<f64> = (1..7).map(|k| row[k].parse().unwrap()).collect();
        assert!(v[1] <= v[0] && v[0] <= v[2]);
        assert!(v[4] <= v[3] && v[3] <= v[5]);
    }
    // Stationary mean loss is beta^T m = 0.3775 up to sampling error.
    let mean = s["mean_loss_stationary"].as_f64().unwrap();
    assert!((mean - 0.3775).abs() < 4.0 * s["standard_error_stationary"].as_f64().unwrap());
}

#[test]
fn simulate_dominance_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("dom");
    ok(&run(&["simulate", "--reps", "5000", "--dominance", "--thresholds", "0,1,2"], &toy_dir(), &out));
    let rows = csv_rows(&out.join("dominance.csv"));
    assert_eq!(rows.len(), 3 * 3);
    let s = json(&out.join("summary.json"));
    assert_eq!(s["dominance"]["pathwise_monotone"], true);
    assert_eq!(s["dominance"]["exploratory"], false);
}

#[test]
fn centrality_never_lists_obligees() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    ok(&run(&["centrality", "--top", "5"], &toy_dir(), &out));
    let rows = csv_rows(&out.join("centrality_top.csv"));
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| &r[3] != "PureObligee"));
    assert!(rows.iter().all(|r| &r[2] != "D" && &r[2] != "E"));
    assert_eq!(&rows[0][2], "C");
}

#[test]
fn meanfield_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    ok(&run(&["meanfield", "--method", "neumann"], &toy_dir(), &out));
    let rows = csv_rows(&out.join("meanfield.csv"));
    let header = csv::Reader::from_path(out.join("meanfield.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(header, vec!["node_id", "r", "m", "m_minus_r", "u", "u_tilde"]);
    let m: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    for (got, want) in m.iter().zip([0.2, 0.1, 0.0775, 0.0775, 0.08605]) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn report_uplift_and_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r");
    ok(&run(&["report", "--reps", "20000", "--top", "3"], &toy_dir(), &out));
    for f in ["meanfield.csv", "quantiles.csv", "losses.csv", "centrality_top.csv", "summary.json", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let s = json(&out.join("summary.json"));
    assert!((s["expected_loss_independent"].as_f64().unwrap() - 0.35).abs() < 1e-12);
    assert!((s["expected_loss_network"].as_f64().unwrap() - 0.3775).abs() < 1e-12);
    let uplift = s["uplift_pct"].as_f64().unwrap();
    assert!((uplift - 100.0 * 0.0275 / 0.35).abs() < 1e-9);
    assert!(s["uplift_note"].is_null());
    assert_eq!(s["simulation"]["quantiles"].as_array().unwrap().len(), 5);
    assert_eq!(s["assumption"]["all_satisfied"], true);
}

#[test]
fn report_zero_beta_uplift_is_null() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_doc(
        tmp.path(),
        "nobeta.json",
        serde_json::json!({
            "nodes": [{"node_id": "a", "r": 0.1, "beta": 0.0}, {"node_id": "o", "r": 0.0, "beta": 0.0}],
            "edges": [{"obligee_id": "o", "principal_id": "a", "weight": 1.0}]
        }),
    );
    let out = tmp.path().join("r");
    ok(&run(&["report", "--reps", "100"], &input, &out));
    let s = json(&out.join("summary.json"));
    assert!(s["uplift_pct"].is_null());
    assert!(s["uplift_note"].as_str().unwrap().contains("zero"));
}

#[test]
fn reruns_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let args = ["report", "--reps", "5000", "--seed", "17"];
    ok(&run(&args, &toy_dir(), &a));
    ok(&run(&args, &toy_dir(), &b));
    for f in ["manifest.json", "losses.csv", "quantiles.csv", "summary.json", "meanfield.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let m = json(&a.join("manifest.json"));
    assert_eq!(m["command"], "report");
    assert_eq!(m["seed"], 17);
    assert_eq!(m["config_digest"].as_str().unwrap().len(), 64);
    assert!(m["input_digests"]["nodes.csv"].is_string());
    assert!(m["output_digests"]["losses.csv"].is_string());

    let c = tmp.path().join("c");
    ok(&run(&["report", "--reps", "5000", "--seed", "18"], &toy_dir(), &c));
    let mc = json(&c.join("manifest.json"));
    assert_ne!(m["config_digest"], mc["config_digest"]);
    assert_ne!(std::fs::read(a.join("losses.csv")).unwrap(), std::fs::read(c.join("losses.csv")).unwrap());
}

#[test]
fn sweep_alpha_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("w");
    ok(&run(&["sweep-alpha", "--reps", "20000", "--quantiles", "0.9,0.99"], &toy_dir(), &out));
    let rows = csv_rows(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 10 * 2);
    assert_eq!(&rows[0][0], "0.0");
    assert_eq!(&rows[rows.len() - 1][0], "1.0");
    let s = json(&out.join("summary.json"));
    let trends = s["trends"].as_array().unwrap();
    assert_eq!(trends.len(), 2);
    assert!(trends.iter().all(|t| t["monotone"].is_boolean()));
    let e = s["expected_losses"].as_array().unwrap();
    let losses: Vec<f64> = e.iter().map(|x| x["expected_loss_network"].as_f64().unwrap()).collect();
    assert!(losses.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn generate_impute_and_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let csv_out = tmp.path().join("gen_csv");
    let json_out = tmp.path().join("gen_json");
    let base = ["generate", "--n", "800", "--unobserved-share", "0.2", "--seed", "9"];
    let o = bin().args(base).arg("--output-dir").arg(&csv_out).output().unwrap();
    ok(&o);
    let o = bin().args(base).args(["--format", "json"]).arg("--output-dir").arg(&json_out).output().unwrap();
    ok(&o);
    let s = json(&csv_out.join("summary.json"));
    assert_eq!(s["depth"], 7);
    assert_eq!(s["assumption"]["all_satisfied"], true);

    // Both encodings of the same network solve to the same fixed point.
    let m1 = tmp.path().join("m1");
    let m2 = tmp.path().join("m2");
    ok(&run(&["meanfield"], &csv_out, &m1));
    ok(&run(&["meanfield"], &json_out.join("network.json"), &m2));
    assert_eq!(std::fs::read(m1.join("meanfield.csv")).unwrap(), std::fs::read(m2.join("meanfield.csv")).unwrap());

    let imp = tmp.path().join("imp");
    ok(&run(&["impute"], &csv_out, &imp));
    let rep = json(&imp.join("imputation.json"));
    assert!(rep["dummies_added"].as_u64().unwrap() > 0);
    ok(&bin()
        .args(["validate", "--require-stochastic", "--input"])
        .arg(&imp)
        .arg("--output-dir")
        .arg(tmp.path().join("v"))
        .output()
        .unwrap());
}

#[test]
fn anonymize_existing_network() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("anon");
    ok(&run(&["generate", "--seed", "2", "--noise-scale-r", "0.01"], &toy_dir(), &out));
    let nodes = csv_rows(&out.join("nodes.csv"));
    assert_eq!(nodes.len(), 5);
    assert_eq!(&nodes[0][0], "0");
    assert_eq!(csv_rows(&out.join("edges.csv")).len(), 5);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["resolved"]["laplace_scale_r"], 0.01);
}

#[test]
fn json_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("j");
    ok(&run(&["centrality", "--top", "2", "--format", "json"], &toy_dir(), &out));
    let rows = json(&out.join("centrality_top.json"));
    assert_eq!(rows.as_array().unwrap().len(), 4);
    assert_eq!(rows[0]["measure"], "u");
}

#[test]
fn time_varying_coalescence() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("snap");
    std::fs::create_dir(&dir).unwrap();
    std::fs::copy(toy_dir().join("nodes.csv"), dir.join("nodes.csv")).unwrap();
    std::fs::copy(toy_dir().join("edges.csv"), dir.join("edges_t0.csv")).unwrap();
    std::fs::write(
        dir.join("edges_t1.csv"),
        "obligee_id,principal_id,weight,bond_amount\nC,A,0.3,\nC,B,0.7,\nD,C,1.0,\nE,C,0.5,\nE,B,0.5,\n",
    )
    .unwrap();
    let out = tmp.path().join("tv");
    ok(&run(&["simulate", "--time-varying", "--reps", "2000", "--horizon", "6"], &dir, &out));
    let rows = csv_rows(&out.join("coalescence.csv"));
    assert_eq!(rows.len(), 7);
    for r in &rows {
        let tv: f64 = r[1].parse().unwrap();
        let frac: f64 = r[3].parse().unwrap();
        assert!(frac <= tv + 1e-12);
    }
    assert_eq!(&rows[6][3], "0.0");
    assert_eq!(json(&out.join("summary.json"))["alpha_bar"], 0.25);
}
