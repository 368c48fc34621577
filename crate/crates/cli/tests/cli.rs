use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn relaylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaylab"))
        .args(args)
        .env_remove("RELAYLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn evaluate_compact_form() {
    let v = json(&relaylab(&[
        "evaluate",
        "--scheme",
        "caf:compact",
        "--channel",
        &data("orthogonal_relay.json"),
        "--params",
        &data("caf_params.json"),
    ]));
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "evaluate");
    assert_eq!(v["report"]["form"], "compact");
    assert!(v["report"]["achievable_rate"].as_f64().unwrap() > 0.0);
}

#[test]
fn manifest_hashes_inputs() {
    let channel = data("identity.json");
    let params = data("caf_params.json");
    let v = json(&relaylab(&[
        "evaluate", "--scheme", "caf:theorem2", "--channel", &channel, "--params", &params,
    ]));
    let inputs = v["manifest"]["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 2);
    for (entry, path) in inputs.iter().zip([&channel, &params]) {
        let digest = Sha256::digest(std::fs::read(path).unwrap());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(entry["sha256"], hex.as_str());
    }
}

#[test]
fn missing_channel_is_usage_error() {
    let out = relaylab(&["evaluate", "--scheme", "new", "--params", &data("new_params.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--channel"));
}

#[test]
fn unknown_subcommand_and_scheme() {
    assert_eq!(relaylab(&["decode"]).status.code(), Some(2));
    let out = relaylab(&[
        "evaluate",
        "--scheme",
        "daf",
        "--channel",
        &data("identity.json"),
        "--params",
        &data("caf_params.json"),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_inputs_exit_with_two() {
    let out = relaylab(&[
        "evaluate",
        "--scheme",
        "new",
        "--channel",
        &data("does_not_exist.json"),
        "--params",
        &data("new_params.json"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = relaylab(&[
        "simulate",
        "--channel",
        &data("identity.json"),
        "--params",
        &data("new_params.json"),
        "--n",
        "4",
        "--blocks",
        "2",
        "--messages",
        "2",
        "--delta",
        "0.2",
        "--trials",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_relaylab"))
        .args(["verify", "--check", "equivalence", "--channel", &data("identity.json")])
        .env("RELAYLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn degeneration_suite() {
    let v = json(&relaylab(&[
        "verify",
        "--check",
        "degeneration",
        "--channel",
        &data("noisy_binary.json"),
        "--trials",
        "100",
        "--seed",
        "7",
    ]));
    assert_eq!(v["report"]["instances"], 100);
    assert!(v["report"]["max_abs_gap"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["manifest"]["seed"], 7);
}

#[test]
fn optimize_is_reproducible_and_params_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("best.json").display().to_string();
    let args = [
        "optimize",
        "--scheme",
        "new",
        "--channel",
        &data("noisy_binary.json"),
        "--restarts",
        "2",
        "--sweeps",
        "2",
        "--seed",
        "11",
        "--params-out",
        &out_path,
    ];
    let first = relaylab(&args);
    let second = relaylab(&args);
    assert_eq!(first.stdout, second.stdout);
    let v = json(&first);
    let best = v["report"]["best_rate"].as_f64().unwrap();
    assert!(best >= v["report"]["caf_start_rate"].as_f64().unwrap() - 1e-9);
    assert_eq!(v["manifest"]["outputs"][0], out_path.as_str());

    let e = json(&relaylab(&[
        "evaluate",
        "--scheme",
        "new",
        "--channel",
        &data("noisy_binary.json"),
        "--params",
        &out_path,
    ]));
    let again = e["report"]["achievable_rate"].as_f64().unwrap();
    assert!((again - best).abs() <= 1e-12, "{again} vs {best}");
}

#[test]
fn bits_are_a_presentation_choice() {
    let run = |units: &str| {
        json(&relaylab(&[
            "evaluate",
            "--scheme",
            "new",
            "--channel",
            &data("orthogonal_relay.json"),
            "--params",
            &data("new_params.json"),
            "--units",
            units,
        ]))
    };
    let nats = run("nats")["report"]["achievable_rate"].as_f64().unwrap();
    let bits = run("bits");
    assert_eq!(bits["units"], "bits");
    let b = bits["report"]["achievable_rate"].as_f64().unwrap();
    assert!((b - nats / std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn csv_rows_accumulate_under_one_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("runs.csv").display().to_string();
    for form in ["caf:form1", "caf:form2"] {
        json(&relaylab(&[
            "evaluate",
            "--scheme",
            form,
            "--channel",
            &data("orthogonal_relay.json"),
            "--params",
            &data("caf_params.json"),
            "--csv",
            &csv,
        ]));
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("scheme,form,rate_nats,feasible,gaps"));
    assert!(lines[1].starts_with("caf,form1,"));
    assert!(lines[2].starts_with("caf,form2,"));
}

#[test]
fn simulate_and_repair_report() {
    let v = json(&relaylab(&[
        "simulate",
        "--channel",
        &data("orthogonal_relay.json"),
        "--params",
        &data("new_params.json"),
        "--n",
        "6",
        "--blocks",
        "2",
        "--messages",
        "1",
        "--delta",
        "0.5",
        "--trials",
        "5",
        "--seed",
        "3",
    ]));
    assert_eq!(v["report"]["trials"], 5);
    assert_eq!(v["report"]["error_count"], 0);

    let r = json(&relaylab(&[
        "repair",
        "--channel",
        &data("orthogonal_relay.json"),
        "--params",
        &data("caf_params.json"),
        "--rate",
        "0.1",
    ]));
    assert_eq!(r["report"]["unchanged"], true);
    assert_eq!(r["report"]["form1"]["feasible"], true);

    let too_fast = relaylab(&[
        "repair",
        "--channel",
        &data("orthogonal_relay.json"),
        "--params",
        &data("caf_params.json"),
        "--rate",
        "5",
    ]);
    assert_eq!(too_fast.status.code(), Some(2));
}
