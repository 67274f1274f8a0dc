//! End-to-end tests of the `qcd` binary: exit codes, output envelopes,
//! reproducibility, and the documented override semantics.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qcd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn json_result(output: &Output) -> serde_json::Value {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("valid JSON envelope")
}

const GAUSSIAN_DETECTOR: &str = r#"
[detector]
kind = "cusum"
threshold = 6.9078
pre_change = { kind = "gaussian", mean = 0.0 }
design = { structure = "iid", density = { kind = "gaussian", mean = 0.5 } }
"#;

#[test]
fn simulate_reruns_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(
        dir.path(),
        "sim.toml",
        r#"
        [model]
        pre_change = { kind = "gaussian", mean = 0.0 }
        change_point = { kind = "geometric", rho = 0.01 }
        [model.post_change]
        structure = "iid"
        density = { kind = "gaussian", mean = 0.5 }
        [sim]
        horizon = 300
        seed = 7
        "#,
    );
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        let output = qcd(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--format",
            "csv",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(a, b, "reruns must be bit-identical");
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("# seed: 7"));
    assert!(text.contains("# change_point: "));
    assert!(text.contains("# config: "));
}

#[test]
fn simulate_no_change_records_infinity() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(
        dir.path(),
        "sim.toml",
        r#"
        [model]
        pre_change = { kind = "gaussian", mean = 0.0 }
        change_point = { kind = "none" }
        [model.post_change]
        structure = "iid"
        density = { kind = "gaussian", mean = 0.5 }
        [sim]
        horizon = 50
        seed = 1
        "#,
    );
    let envelope = json_result(&qcd(["simulate", "--config", config.to_str().unwrap()].as_ref()));
    assert_eq!(envelope["result"]["change_point"], "infinity");
    assert_eq!(envelope["tool"], "qcd");
    assert_eq!(envelope["seed"], 1);
    assert!(envelope["config"]["model"].is_object());
}

#[test]
fn simulate_immediate_change_has_post_change_mean() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(
        dir.path(),
        "sim.toml",
        r#"
        [model]
        pre_change = { kind = "gaussian", mean = 0.0 }
        change_point = { kind = "fixed", nu = 1 }
        [model.post_change]
        structure = "iid"
        density = { kind = "gaussian", mean = 0.5 }
        [sim]
        horizon = 10000
        seed = 5
        "#,
    );
    let envelope = json_result(&qcd(["simulate", "--config", config.to_str().unwrap()].as_ref()));
    let observations: Vec<f64> =
        serde_json::from_value(envelope["result"]["observations"].clone()).unwrap();
    assert_eq!(envelope["result"]["change_point"], "1");
    let mean = observations.iter().sum::<f64>() / observations.len() as f64;
    assert!((mean - 0.5).abs() < 0.03, "post-change mean {mean}");
}

#[test]
fn evaluate_with_zero_trials_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(
        dir.path(),
        "eval.toml",
        &format!(
            r#"
            {GAUSSIAN_DETECTOR}
            [generation]
            pre_change = {{ kind = "gaussian", mean = 0.0 }}
            change_point = {{ kind = "none" }}
            [generation.post_change]
            structure = "iid"
            density = {{ kind = "gaussian", mean = 0.5 }}
            [eval]
            metric = "mfa"
            trials = 0
            seed = 3
            horizon = 1000
            "#
        ),
    );
    let output = qcd(["evaluate", "--config", config.to_str().unwrap()].as_ref());
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("trials"));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let output = qcd(["evaluate", "--config", "/nonexistent/qcd.toml"].as_ref());
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn evaluate_mfa_reports_metrics_and_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(
        dir.path(),
        "eval.toml",
        &format!(
            r#"
            {GAUSSIAN_DETECTOR}
            [generation]
            pre_change = {{ kind = "gaussian", mean = 0.0 }}
            change_point = {{ kind = "none" }}
            [generation.post_change]
            structure = "iid"
            density = {{ kind = "gaussian", mean = 0.5 }}
            [eval]
            metric = "mfa"
            trials = 200
            seed = 3
            horizon = 100000
            "#
        ),
    );
    let envelope = qcd([
        "evaluate",
        "--config",
        config.to_str().unwrap(),
        "--threshold",
        "3.912",
    ]
    .as_ref());
    let envelope = json_result(&envelope);
    let metrics = envelope["result"]["metrics"].as_array().unwrap();
    assert_eq!(metrics.len(), 1);
    assert_eq!(metrics[0]["metric"], "mfa");
    assert!(metrics[0]["estimate"].as_f64().unwrap() > 1.0);
    // the override is visible in the embedded config
    assert_eq!(envelope["config"]["detector"]["threshold"], 3.912);
}

#[test]
fn evaluate_bayes_reports_pfa_and_delay() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(
        dir.path(),
        "bayes.toml",
        r#"
        [detector]
        kind = "shiryaev"
        rho = 0.05
        threshold = 9.0
        pre_change = { kind = "gaussian", mean = 0.0 }
        design = { structure = "iid", density = { kind = "gaussian", mean = 0.5 } }
        [generation]
        pre_change = { kind = "gaussian", mean = 0.0 }
        change_point = { kind = "geometric", rho = 0.05 }
        [generation.post_change]
        structure = "iid"
        density = { kind = "gaussian", mean = 0.5 }
        [eval]
        metric = "bayes"
        trials = 2000
        seed = 11
        "#,
    );
    let envelope = json_result(&qcd(["evaluate", "--config", config.to_str().unwrap()].as_ref()));
    let metrics = envelope["result"]["metrics"].as_array().unwrap();
    assert_eq!(metrics.len(), 2);
    assert_eq!(metrics[0]["metric"], "pfa");
    assert_eq!(metrics[1]["metric"], "bayes_delay");
    let pfa = metrics[0]["estimate"].as_f64().unwrap();
    assert!(pfa <= 0.10 + 0.02, "posterior-bound PFA {pfa}");
}

#[test]
fn calibrate_mfa_lands_below_the_log_anchor() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(
        dir.path(),
        "cal.toml",
        &format!(
            r#"
            {GAUSSIAN_DETECTOR}
            [calibrate]
            target = "mfa"
            value = 100.0
            trials = 600
            seed = 9
            "#
        ),
    );
    let envelope = json_result(&qcd(["calibrate", "--config", config.to_str().unwrap()].as_ref()));
    let threshold = envelope["result"]["threshold"].as_f64().unwrap();
    let anchor = 100f64.ln();
    assert!(
        threshold >= anchor - 3.0 && threshold <= anchor + 0.5,
        "calibrated threshold {threshold}"
    );
    let achieved = envelope["result"]["achieved"]["estimate"].as_f64().unwrap();
    assert!((achieved - 100.0).abs() <= 15.0, "achieved {achieved}");
}

fn flight_dataset_config(series: usize, extra: &str) -> String {
    format!(
        r#"
        [dataset]
        source = "synthetic_flight"
        series = {series}
        pad = 100
        noise = {{ kind = "gaussian", mean = 0.0, variance = 1.0 }}
        seed = 21
        {extra}
        [detector]
        kind = "cusum"
        threshold = 6.9078
        pre_change = {{ kind = "gaussian", mean = 0.0 }}
        design = {{ structure = "iid", density = {{ kind = "gaussian", mean = 0.64 }} }}
        "#
    )
}

#[test]
fn dataset_synthetic_flight_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(dir.path(), "flight.toml", &flight_dataset_config(60, ""));
    let envelope = json_result(&qcd(["dataset", "--config", config.to_str().unwrap()].as_ref()));
    let result = &envelope["result"];
    let series = result["series"].as_array().unwrap();
    assert_eq!(series.len(), 60);
    let false_alarms = result["false_alarms"].as_u64().unwrap();
    assert!(
        (false_alarms as f64) / 60.0 <= 0.15,
        "false-alarm fraction too high: {false_alarms}/60"
    );
    let boundary = result["boundary"].as_u64().unwrap();
    assert_eq!(boundary, 101);
    for s in series {
        if s["detected"].as_bool().unwrap() {
            assert!(s["stopping_time"].as_u64().unwrap() >= boundary);
        }
    }
    assert!(result["mean_delay"].as_f64().unwrap() > 0.0);
}

#[test]
fn dataset_threshold_override_zero_alarms_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(dir.path(), "flight.toml", &flight_dataset_config(10, ""));
    let envelope = json_result(&qcd([
        "dataset",
        "--config",
        config.to_str().unwrap(),
        "--threshold",
        "0",
    ]
    .as_ref()));
    for s in envelope["result"]["series"].as_array().unwrap() {
        assert_eq!(s["stopping_time"].as_u64(), Some(1));
        assert_eq!(s["false_alarm"].as_bool(), Some(true));
    }
}

#[test]
fn dataset_reruns_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(dir.path(), "flight.toml", &flight_dataset_config(20, ""));
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    for out in [&out_a, &out_b] {
        let output = qcd([
            "dataset",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]
        .as_ref());
        assert!(output.status.success());
    }
    assert_eq!(
        std::fs::read(&out_a).unwrap(),
        std::fs::read(&out_b).unwrap()
    );
}

#[test]
fn dataset_csv_layouts_are_equivalent() {
    let dir = tempfile::tempdir().unwrap();
    // the same three series in both layouts
    // interleaved long rows, with first appearances matching the wide header
    // order (equivalent files present the series in the same order)
    let mut wide = String::from("s1,s2,s3\n");
    let mut long = String::from("series_id,t,value\n");
    let mut value = 0.0;
    for t in 0..40 {
        let (a, b, c) = (value, value * 2.0, 1.0 + value);
        wide.push_str(&format!("{a},{b},{c}\n"));
        if t == 0 {
            long.push_str(&format!("s1,{t},{a}\ns2,{t},{b}\ns3,{t},{c}\n"));
        } else {
            long.push_str(&format!("s2,{t},{b}\ns3,{t},{c}\ns1,{t},{a}\n"));
        }
        value += 0.25;
    }
    let wide_csv = write_file(dir.path(), "wide.csv", &wide);
    let long_csv = write_file(dir.path(), "long.csv", &long);

    let config_for = |path: &Path, layout: &str| {
        format!(
            r#"
            [dataset]
            source = "csv"
            path = "{}"
            layout = "{layout}"
            pad = 50
            noise = {{ kind = "gaussian", mean = 0.0, variance = 1.0 }}
            seed = 33
            [detector]
            kind = "cusum"
            threshold = 6.9078
            pre_change = {{ kind = "gaussian", mean = 0.0 }}
            design = {{ structure = "iid", density = {{ kind = "gaussian", mean = 0.64 }} }}
            "#,
            path.display()
        )
    };
    let wide_config = write_file(dir.path(), "wide.toml", &config_for(&wide_csv, "wide"));
    let long_config = write_file(dir.path(), "long.toml", &config_for(&long_csv, "long"));

    let wide_env = json_result(&qcd(["dataset", "--config", wide_config.to_str().unwrap()].as_ref()));
    let long_env = json_result(&qcd(["dataset", "--config", long_config.to_str().unwrap()].as_ref()));
    assert_eq!(wide_env["result"]["series"], long_env["result"]["series"]);
    assert_eq!(
        wide_env["result"]["mean_delay"],
        long_env["result"]["mean_delay"]
    );
}

#[test]
fn dataset_bad_cell_is_a_runtime_error_naming_the_cell() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_file(dir.path(), "bad.csv", "a,b\n1.0,2.0\n3.0,NaN\n");
    let config = write_file(
        dir.path(),
        "bad.toml",
        &format!(
            r#"
            [dataset]
            source = "csv"
            path = "{}"
            layout = "wide"
            pad = 10
            seed = 1
            [detector]
            kind = "cusum"
            threshold = 6.9078
            pre_change = {{ kind = "gaussian", mean = 0.0 }}
            design = {{ structure = "iid", density = {{ kind = "gaussian", mean = 0.64 }} }}
            "#,
            csv.display()
        ),
    );
    let output = qcd(["dataset", "--config", config.to_str().unwrap()].as_ref());
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("row 2"), "stderr: {stderr}");
    assert!(stderr.contains("column b"), "stderr: {stderr}");
}

#[test]
fn curve_orders_robust_below_non_robust() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(
        dir.path(),
        "curve.toml",
        r#"
        [detectors.robust]
        kind = "cusum"
        threshold = 1.0
        pre_change = { kind = "gaussian", mean = 0.0 }
        design = { structure = "iid", density = { kind = "gaussian", mean = 0.5 } }
        [detectors.other]
        kind = "cusum"
        threshold = 1.0
        pre_change = { kind = "gaussian", mean = 0.0 }
        design = { structure = "iid", density = { kind = "gaussian", mean = 1.5 } }
        [generation]
        pre_change = { kind = "gaussian", mean = 0.0 }
        change_point = { kind = "fixed", nu = 1 }
        [generation.post_change]
        structure = "iid"
        density = { kind = "gaussian", mean = 0.5 }
        [curve]
        thresholds = [4.605, 6.908]
        trials = 500
        seed = 17
        false_alarm_horizon = 100000
        delay_horizon = 5000
        "#,
    );
    let envelope = json_result(&qcd(["curve", "--config", config.to_str().unwrap()].as_ref()));
    let rows = envelope["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for i in 0..2 {
        let robust = &rows[i];
        let other = &rows[i + 2];
        assert_eq!(robust["detector"], "robust");
        assert_eq!(other["detector"], "other");
        assert_eq!(robust["threshold"], other["threshold"]);
        let d_r = robust["delay"]["estimate"].as_f64().unwrap();
        let d_o = other["delay"]["estimate"].as_f64().unwrap();
        assert!(
            d_r < d_o,
            "robust delay {d_r} should undercut non-robust {d_o} at threshold {}",
            robust["threshold"]
        );
    }
}

#[test]
fn verify_lfl_passes_the_bound_and_rejects_inflated_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_file(
        dir.path(),
        "good.toml",
        r#"
        [class]
        family = "gaussian"
        bound = { shape = "constant", value = 0.5 }
        "#,
    );
    let envelope = json_result(&qcd(["verify-lfl", "--config", good.to_str().unwrap()].as_ref()));
    assert_eq!(envelope["result"]["verified"], true);
    assert_eq!(envelope["result"]["candidate_is_class_lfl"], true);

    let bad = write_file(
        dir.path(),
        "bad.toml",
        r#"
        [class]
        family = "gaussian"
        bound = { shape = "constant", value = 0.5 }
        [candidate]
        structure = "iid"
        density = { kind = "gaussian", mean = 0.6 }
        [verify]
        probes = [0.5, 0.75]
        "#,
    );
    let envelope = json_result(&qcd(["verify-lfl", "--config", bad.to_str().unwrap()].as_ref()));
    assert_eq!(envelope["result"]["verified"], false);
}

#[test]
fn csv_outputs_carry_the_metadata_block() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(dir.path(), "flight.toml", &flight_dataset_config(5, ""));
    let output = qcd([
        "dataset",
        "--config",
        config.to_str().unwrap(),
        "--format",
        "csv",
    ]
    .as_ref());
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.starts_with("# tool: qcd "));
    assert!(text.contains("# seed: 21"));
    assert!(text.contains("# config: {"));
    assert!(text.contains("id,stopping_time,delay,false_alarm,detected"));
}
