use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const TRACE_CSV: &str = "4,1,1\n0\n0.1\n0.2\n5.0\n";

const SCENARIO: &str = r#"
name = "cli"
dimension = 4
horizon = 3

[[rounds]]
[[rounds.modes]]
center = 0.0
spread = 0.05
weight = 0.8
success = true
[[rounds.modes]]
center = 6.0
spread = 0.01
weight = 0.2
success = false

[simulation]
episodes = 100
repeats = 2
seed = 1
"#;

fn consensus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_consensus"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn select_hand_trace() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "batch.txt", TRACE_CSV);
    let out = consensus(&["select", "--input", &input, "--tau", "0.3", "--seed", "7"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert_eq!(v["selected_index"], 1);
    assert_eq!(v["selected_chunk"], serde_json::json!([[0.1]]));
    assert_eq!(v["diagnostics"]["unimodal"], false);
    assert_eq!(v["diagnostics"]["global_medoid"], 1);
    assert_eq!(v["diagnostics"]["path"], "clustered");

    let out = consensus(&["select", "--input", &input, "--tau", "10"]);
    let v = stdout_json(&out);
    assert_eq!(v["selected_index"], 1);
    assert_eq!(v["diagnostics"]["unimodal"], true);
}

#[test]
fn select_json_with_override_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "batch.data",
        r#"{"shape": [3, 1, 1], "candidates": [[[0.0]], [[1.0]], [[2.0]]]}"#,
    );
    let target = dir.path().join("result.json");
    let out = consensus(&[
        "select",
        "--input",
        &input,
        "--format",
        "json",
        "--k-override",
        "2",
        "--output",
        target.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    // Two candidates: the guard score is 0.5 / 1.0 > 0.3, each cluster has one
    // member, and the lower index wins the tie.
    assert_eq!(v["selected_index"], 0);
    assert_eq!(v["diagnostics"]["cluster_sizes"], serde_json::json!([1, 1]));

    let out = consensus(&[
        "select",
        "--input",
        &input,
        "--format",
        "json",
        "--k-override",
        "9",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = consensus(&[
        "select",
        "--input",
        dir.path().join("missing.txt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.txt"));

    let bad = write(dir.path(), "bad.csv", "2,1,1\n0.5\n");
    let out = consensus(&["select", "--input", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected 2 rows, found 1"));

    let input = write(dir.path(), "ok.csv", TRACE_CSV);
    for args in [
        vec!["select"],
        vec!["select", "--input", &input, "--metric", "manhattan"],
        vec!["select", "--input", &input, "--tau", "-1"],
        vec!["select", "--input", &input, "--clusters", "1"],
        vec!["frobnicate"],
        vec![],
    ] {
        let out = consensus(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(
            String::from_utf8_lossy(&out.stderr).contains("--help"),
            "{args:?}"
        );
    }
    assert_eq!(consensus(&["--help"]).status.code(), Some(0));
    assert_eq!(consensus(&["select", "--help"]).status.code(), Some(0));
    assert_eq!(consensus(&["--version"]).status.code(), Some(0));
}

#[test]
fn simulate_and_sweep_tables() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "scenario.toml", SCENARIO);

    let out = consensus(&["simulate", "--scenario", &scenario]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "config_id,metric,K,C,tau,mean,std");
    assert!(lines[1].starts_with("single_sample,"));
    assert!(lines[2].starts_with("consensus,"));

    let again = consensus(&["simulate", "--scenario", &scenario, "--sequential"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);

    let out = consensus(&[
        "simulate",
        "--scenario",
        &scenario,
        "--policy",
        "single-sample",
        "--episodes",
        "50",
    ]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);

    let out = consensus(&[
        "sweep",
        "--scenario",
        &scenario,
        "--metrics",
        "euclidean,cosine",
        "--k-values",
        "4,8",
        "--c-values",
        "2,4",
        "--seed",
        "5",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let ids: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        ids,
        [
            "single_sample",
            "metric=euclidean",
            "metric=cosine",
            "K=4",
            "K=8",
            "C=2",
            "C=4"
        ]
    );

    let out = consensus(&["sweep", "--scenario", &scenario, "--no-baseline"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().nth(1).unwrap().split(',').next(), Some("base"));

    let broken = write(
        dir.path(),
        "broken.toml",
        "dimension = 0\nhorizon = 1\nrounds = []\n",
    );
    assert_eq!(
        consensus(&["simulate", "--scenario", &broken])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        consensus(&["simulate", "--scenario", &scenario, "--repeats", "0"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn serve_over_stdio() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_consensus"))
        .args(["serve", "--transport", "stdio", "--seed", "3"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let stdin = child.stdin.as_mut().unwrap();
        stdin
            .write_all(b"{\"id\":\"a\",\"candidates\":[[[0.0]],[[0.1]],[[0.2]],[[5.0]]]}\nnot json at all\n\n")
            .unwrap();
        stdin
            .write_all(b"{\"id\":\"b\",\"candidates\":[[[0.0]],[[0.1]],[[0.2]],[[5.0]]],\"config\":{\"tau\":10}}\n")
            .unwrap();
    }
    drop(child.stdin.take());
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let responses: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(responses.len(), 3);
    assert_eq!(responses[0]["id"], "a");
    assert_eq!(responses[0]["selected_index"], 1);
    assert_eq!(responses[1]["error"]["code"], "parse_error");
    assert_eq!(responses[2]["id"], "b");
    assert_eq!(responses[2]["diagnostics"]["unimodal"], true);
}

#[test]
fn serve_over_tcp() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_consensus"))
        .args(["serve", "--transport", "tcp", "--port", "0"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut banner = String::new();
    BufReader::new(child.stderr.take().unwrap())
        .read_line(&mut banner)
        .unwrap();
    let addr = banner
        .trim()
        .strip_prefix("listening on ")
        .unwrap()
        .to_string();

    // Two concurrent connections, each answered in its own order.
    let mut conns: Vec<(TcpStream, BufReader<TcpStream>)> = (0..2)
        .map(|_| {
            let s = TcpStream::connect(&addr).unwrap();
            let r = BufReader::new(s.try_clone().unwrap());
            (s, r)
        })
        .collect();
    for round in 0..20 {
        for (c, (stream, _)) in conns.iter_mut().enumerate() {
            let line = format!(
                "{{\"id\":\"c{c}-{round}\",\"candidates\":[[[0.0]],[[0.1]],[[0.2]],[[5.0]]]}}\n"
            );
            stream.write_all(line.as_bytes()).unwrap();
            stream.write_all(b"{oops\n").unwrap();
        }
    }
    for (c, (_, reader)) in conns.iter_mut().enumerate() {
        for round in 0..20 {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let v: Value = serde_json::from_str(&line).unwrap();
            assert_eq!(v["id"], format!("c{c}-{round}"));
            assert_eq!(v["selected_index"], 1);
            line.clear();
            reader.read_line(&mut line).unwrap();
            let v: Value = serde_json::from_str(&line).unwrap();
            assert_eq!(v["error"]["code"], "parse_error");
        }
    }
    child.kill().unwrap();
    child.wait().unwrap();
}

#[test]
fn bench_reports_percentiles() {
    let out = consensus(&[
        "bench",
        "--k-list",
        "4,16",
        "--dim-list",
        "64",
        "--iterations",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "K,D,iterations,p50_us,p99_us,mean_us,max_us");
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cells[3] <= cells[4] && cells[4] <= cells[6]);
    }
    assert_eq!(
        consensus(&["bench", "--iterations", "0"]).status.code(),
        Some(1)
    );
}
