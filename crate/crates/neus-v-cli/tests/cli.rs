//! End-to-end tests driving the `neusv` binary.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::thread;

fn neusv() -> Command {
    Command::new(env!("CARGO_BIN_EXE_neusv"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../neus-v/assets/fixtures")
}

fn run(args: &[&str]) -> Output {
    neusv().args(args).output().expect("binary runs")
}

fn stdout_str(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn score_reports_the_single_window_probability() {
    let output = run(&[
        "score",
        "--trace",
        fixtures().join("cyclist.trace.json").to_str().unwrap(),
        "--spec",
        fixtures().join("cyclist.spec.json").to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let value: serde_json::Value = serde_json::from_str(&stdout_str(&output)).unwrap();
    let p = value["modes"]["overall_consistency"]["satisfaction_probability"]
        .as_f64()
        .unwrap();
    assert!((p - 0.72).abs() <= 1e-12, "p = {p}");
}

#[test]
fn evaluate_is_byte_identical_across_runs_and_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("r1.json");
    let out2 = dir.path().join("r2.json");
    for out in [&out1, &out2] {
        let output = run(&[
            "evaluate",
            "--spec",
            fixtures().join("snow.spec.json").to_str().unwrap(),
            "--trace",
            fixtures().join("snow.trace.json").to_str().unwrap(),
            "--video-id",
            "snow__fixture",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{output:?}");
    }
    let bytes1 = std::fs::read(&out1).unwrap();
    let bytes2 = std::fs::read(&out2).unwrap();
    assert_eq!(bytes1, bytes2);

    let golden =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../neus-v/tests/fixtures/golden_report.json");
    assert_eq!(bytes1, std::fs::read(golden).unwrap());
}

#[test]
fn evaluate_exits_2_when_a_mode_fails() {
    // Add a mode whose proposition is absent from the trace.
    let dir = tempfile::tempdir().unwrap();
    let mut spec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixtures().join("snow.spec.json")).unwrap())
            .unwrap();
    spec["modes"]["object_existence"] = serde_json::json!({
        "formula": "ALWAYS \"unicorn\"",
        "propositions": [{"display": "unicorn", "id": "unicorn"}]
    });
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();

    let output = run(&[
        "evaluate",
        "--spec",
        spec_path.to_str().unwrap(),
        "--trace",
        fixtures().join("snow.trace.json").to_str().unwrap(),
        "--out",
        dir.path().join("report.json").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert!(report["failures"]["object_existence"]
        .as_str()
        .unwrap()
        .contains("not in the trace"));
}

#[test]
fn evaluate_on_missing_file_exits_1() {
    let output = run(&[
        "evaluate",
        "--spec",
        "/nonexistent/spec.json",
        "--trace",
        "/nonexistent/trace.json",
    ]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn export_automaton_lists_states_and_transitions() {
    let output = run(&[
        "export-automaton",
        "--trace",
        fixtures().join("cyclist.trace.json").to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let dump = stdout_str(&output);
    assert!(dump.starts_with("dtmc\n"));
    assert!(dump.contains("states 6"));
    assert!(dump.contains("label 11011"));
    // Terminal edges carry probability 1.
    assert!(dump.contains("trans 1 5 1"));

    // Uncalibrated traces need a threshold.
    let failed = run(&[
        "export-automaton",
        "--trace",
        fixtures().join("snow.trace.json").to_str().unwrap(),
    ]);
    assert_eq!(failed.status.code(), Some(1));
    let with_gamma = run(&[
        "export-automaton",
        "--trace",
        fixtures().join("snow.trace.json").to_str().unwrap(),
        "--gamma",
        "0.65",
        "--spec",
        fixtures().join("snow.spec.json").to_str().unwrap(),
        "--mode",
        "overall_consistency",
    ]);
    assert!(with_gamma.status.success(), "{with_gamma:?}");
    assert!(stdout_str(&with_gamma).contains("props snow_falling,it_covers_the_ground"));
}

#[test]
fn calibrate_threshold_recovers_separator_and_writes_roc() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("samples.csv");
    std::fs::write(&csv_path, "score,label\n0.2,0\n0.4,0\n0.6,1\n0.8,1\n").unwrap();
    let roc_path = dir.path().join("roc.csv");

    let output = run(&[
        "calibrate-threshold",
        "--samples",
        csv_path.to_str().unwrap(),
        "--roc-out",
        roc_path.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let value: serde_json::Value = serde_json::from_str(&stdout_str(&output)).unwrap();
    assert_eq!(value["gamma_fp"].as_f64().unwrap(), 0.6);
    assert_eq!(value["accuracy"].as_f64().unwrap(), 1.0);

    let roc = std::fs::read_to_string(&roc_path).unwrap();
    assert!(roc.starts_with("fpr,tpr\n"));
    assert!(roc.lines().count() >= 4);
}

#[test]
fn build_ecdf_then_score_uses_the_profile() {
    let dir = tempfile::tempdir().unwrap();
    let scores_dir = dir.path().join("scores");
    std::fs::create_dir(&scores_dir).unwrap();
    for name in ["snow", "dog", "lamp"] {
        let out = scores_dir.join(format!("{name}.json"));
        let output = run(&[
            "score",
            "--trace",
            fixtures()
                .join(format!("{name}.trace.json"))
                .to_str()
                .unwrap(),
            "--spec",
            fixtures()
                .join(format!("{name}.spec.json"))
                .to_str()
                .unwrap(),
            "--gamma",
            "0.65",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{output:?}");
    }

    let profile_path = dir.path().join("profile.json");
    let output = run(&[
        "build-ecdf",
        "--scores",
        scores_dir.to_str().unwrap(),
        "--gamma",
        "0.65",
        "--version",
        "test",
        "--provenance",
        "cli test",
        "--out",
        profile_path.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");

    let scored = run(&[
        "score",
        "--trace",
        fixtures().join("snow.trace.json").to_str().unwrap(),
        "--spec",
        fixtures().join("snow.spec.json").to_str().unwrap(),
        "--profile",
        profile_path.to_str().unwrap(),
    ]);
    assert!(scored.status.success(), "{scored:?}");
    let value: serde_json::Value = serde_json::from_str(&stdout_str(&scored)).unwrap();
    // With a profile the output carries calibrated scores.
    assert!(value["modes"]["overall_consistency"]["score"].is_number());
}

#[test]
fn benchmark_self_annotations_correlate_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let reports_dir = dir.path().join("reports");
    std::fs::create_dir(&reports_dir).unwrap();

    let mut annotations = String::from("video_id,alignment_score\n");
    for name in ["snow", "dog", "lamp", "waves", "traffic"] {
        let video_id = format!("{name}__fixture");
        let report_path = reports_dir.join(format!("{video_id}.json"));
        let output = run(&[
            "evaluate",
            "--spec",
            fixtures()
                .join(format!("{name}.spec.json"))
                .to_str()
                .unwrap(),
            "--trace",
            fixtures()
                .join(format!("{name}.trace.json"))
                .to_str()
                .unwrap(),
            "--video-id",
            &video_id,
            "--out",
            report_path.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{output:?}");
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
        let score = report["final_score"].as_f64().unwrap();
        annotations.push_str(&format!("{video_id},{}\n", 1.0 + 4.0 * score));
    }
    let annotations_path = dir.path().join("annotations.csv");
    std::fs::write(&annotations_path, annotations).unwrap();

    let out_dir = dir.path().join("bench");
    let output = run(&[
        "benchmark",
        "--suite",
        fixtures().join("suite.jsonl").to_str().unwrap(),
        "--reports",
        reports_dir.to_str().unwrap(),
        "--annotations",
        annotations_path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    let mut checked = 0;
    for group in summary["groups"].as_array().unwrap() {
        for (_, stats) in group["per_model"].as_object().unwrap() {
            if let Some(r) = stats["pearson"].as_f64() {
                assert!((r - 1.0).abs() <= 1e-9, "{group}");
                checked += 1;
            }
        }
    }
    assert!(checked >= 1, "at least the overall group has a correlation");
    assert!(out_dir.join("summary.csv").exists());
    let details = std::fs::read_to_string(out_dir.join("details.csv")).unwrap();
    assert!(details.starts_with("video_id,mode,satisfaction_probability,score,human_score\n"));
    assert!(details.contains("snow__fixture,object_existence,"));
}

#[test]
fn flags_can_come_from_environment_variables() {
    let output = neusv()
        .arg("score")
        .env("NEUSV_TRACE", fixtures().join("cyclist.trace.json"))
        .env("NEUSV_SPEC", fixtures().join("cyclist.spec.json"))
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let value: serde_json::Value = serde_json::from_str(&stdout_str(&output)).unwrap();
    assert!(value["modes"]["overall_consistency"]["satisfaction_probability"].is_number());
}

/// Minimal chat-completions server for the translate test.
fn serve_chat(responses: Vec<String>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    thread::spawn(move || {
        for content in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            let header_end;
            loop {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
                if let Some(pos) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
                    header_end = pos + 4;
                    break;
                }
            }
            let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
            let content_length = headers
                .lines()
                .find_map(|line| {
                    let (name, value) = line.split_once(':')?;
                    name.eq_ignore_ascii_case("content-length")
                        .then(|| value.trim().parse::<usize>().ok())?
                })
                .unwrap_or(0);
            while buf.len() < header_end + content_length {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
            }
            let body = serde_json::json!({
                "choices": [{"message": {"role": "assistant", "content": content}}]
            })
            .to_string();
            let response = format!(
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(response.as_bytes()).unwrap();
        }
    });
    format!("http://127.0.0.1:{port}/v1/chat/completions")
}

#[test]
fn translate_writes_a_spec_file_via_the_llm() {
    let endpoint = serve_chat(vec![
        "Reasoning: two events.\n\nOutput Propositions: ['snow falling', 'it covers the ground']"
            .into(),
        "Reasoning: sequence.\n\nOutput Specification: (\"snow_falling\" UNTIL \"it_covers_the_ground\")"
            .into(),
    ]);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spec.json");
    let output = run(&[
        "translate",
        "--prompt",
        "Snow falling until it covers the ground",
        "--modes",
        "overall_consistency",
        "--llm-endpoint",
        &endpoint,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");

    let spec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(
        spec["modes"]["overall_consistency"]["formula"]
            .as_str()
            .unwrap(),
        "(\"snow_falling\" UNTIL \"it_covers_the_ground\")"
    );
    let props = spec["modes"]["overall_consistency"]["propositions"]
        .as_array()
        .unwrap();
    assert_eq!(props.len(), 2);
    assert_eq!(props[0]["id"], "snow_falling");
    assert_eq!(props[0]["display"], "snow falling");
}
