use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use impact_cli::app::parse_results;
use impact_core::synth::{generate, read_truth, scenes, write_scene};
use impact_core::ingest::Format;
use serde_json::Value;

fn impact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impact"))
        .args(args)
        .env("IMPACT_LOG", "error")
        .output()
        .expect("binary runs")
}

fn scene(dir: &Path, name: &str, spec: &impact_core::synth::SceneSpec) -> PathBuf {
    let (stream, truth) = generate(spec).unwrap();
    let path = dir.join(name);
    write_scene(&path, Format::from_path(&path), &stream, &truth).unwrap();
    path
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    })
}

#[test]
fn synth_then_locate_recovers_truth() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("single.evts");
    let out = impact(&["synth", "--preset", "single", "--seed", "5", "--output", events.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let truth = read_truth(&dir.path().join("single.evts.truth.json")).unwrap();

    let out = impact(&["locate", "--input", events.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let results = parse_results(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(results.len(), 1);
    let (r, t) = (&results[0], &truth.impacts[0]);
    assert!(r.t_imp.unwrap().abs_diff(t.t_imp) <= 2000);
    assert!((r.u_pct.unwrap() - t.u_pct).abs() < 5.0);
    assert!((r.v_pct.unwrap() - t.v_pct).abs() < 5.0);
    assert!(r.timings.is_none());
}

#[test]
fn locate_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let events = scene(dir.path(), "a.evts", &scenes::single_swing(6, -10.0, 30.0));
    let a = impact(&["locate", "--input", events.to_str().unwrap()]);
    let b = impact(&["locate", "--input", events.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
    // Six significant digits at most.
    let text = String::from_utf8(a.stdout).unwrap();
    for token in text.split(|c: char| !(c.is_ascii_digit() || c == '.')) {
        if token.contains('.') {
            let digits = token.trim_start_matches(['0', '.']).replace('.', "");
            assert!(digits.len() <= 6, "{token}");
        }
    }
}

#[test]
fn noise_only_gives_empty_results() {
    let dir = tempfile::tempdir().unwrap();
    let events = scene(dir.path(), "noise.csv", &scenes::noise_only(1));
    let out = impact(&["locate", "--input", events.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["results"], Value::Array(vec![]));
}

#[test]
fn destroyed_contours_keep_impact_time() {
    let dir = tempfile::tempdir().unwrap();
    let events = scene(dir.path(), "flicker.evts", &scenes::flicker_over_impact(5));
    let out = impact(&["locate", "--input", events.to_str().unwrap(), "--timings"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    let r = &v["results"][0];
    assert!(r["t_imp"].is_u64());
    assert_eq!(r["error"]["stage"], "contour");
    assert!(r["u_pct"].is_null());
    assert!(r["timings"]["impact_ms"].is_number());
}

#[test]
fn stage_commands() {
    let dir = tempfile::tempdir().unwrap();
    let rally = scene(dir.path(), "rally.evts", &scenes::rally(3));
    let input = rally.to_str().unwrap();

    let out = impact(&["swing", "--input", input]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["swings"].as_array().unwrap().len(), 3);

    let out = impact(&["impact", "--input", input, "--pattern", "triangular", "--n-candidates", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let truth = [105_000u64, 468_000, 812_000];
    for (i, t) in truth.iter().enumerate() {
        let got = v["impacts"][i]["t_imp"].as_u64().unwrap();
        assert!(got.abs_diff(*t) <= 2000, "{got} vs {t}");
    }

    let out = impact(&["impact", "--input", input, "--t-start", "900000", "--t-end", "800000"]);
    assert_eq!(out.status.code(), Some(1));
    let msg = stdout_json(&out)["impacts"][0]["error"].as_str().unwrap().to_owned();
    assert!(msg.contains("no impact"), "{msg}");

    let out = impact(&["contours", "--input", input, "--t-imp", "468000", "--tip-sign", "-1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!(v["racket"]["a"].as_f64().unwrap() > v["ball"]["a"].as_f64().unwrap());
    assert_eq!(v["tip_sign"], -1);

    let out = impact(&["contours", "--input", input]);
    assert_eq!(out.status.code(), Some(2), "--t-imp is required");
}

#[test]
fn config_file_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let events = scene(dir.path(), "s.evts", &scenes::single_swing(7, 0.0, 0.0));
    let json = dir.path().join("r.json");
    let svg = dir.path().join("r.svg");
    let config = dir.path().join("c.toml");
    std::fs::write(
        &config,
        format!(
            "[impact]\nn_c = 3\n[output]\njson = {:?}\nplot = {:?}\n",
            json.to_str().unwrap(),
            svg.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = impact(&["locate", "--input", events.to_str().unwrap(), "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<circle").count(), 1);

    let replot = dir.path().join("again.svg");
    let out = impact(&["plot", "--input", json.to_str().unwrap(), "--output", replot.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(replot).unwrap(), text);
}

#[test]
fn fatal_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.evts");
    assert_eq!(impact(&["locate", "--input", missing.to_str().unwrap()]).status.code(), Some(2));

    let events = scene(dir.path(), "n.evts", &scenes::noise_only(2));
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[impact]\nn_c = 0\n").unwrap();
    let out = impact(&["locate", "--input", events.to_str().unwrap(), "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_c"));

    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"width": 0, "height": 10, "duration": 100}"#).unwrap();
    let out = impact(&["synth", "--input", spec.to_str().unwrap(), "--output", dir.path().join("x.evts").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{\"results\": 3}").unwrap();
    assert_eq!(impact(&["plot", "--input", junk.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn synth_is_deterministic_and_reads_spec_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, serde_json::to_string(&scenes::single_swing(3, 5.0, 5.0)).unwrap()).unwrap();
    let mut outputs = Vec::new();
    for name in ["a.evts", "b.evts"] {
        let path = dir.path().join(name);
        let out = impact(&["synth", "--input", spec.to_str().unwrap(), "--output", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        outputs.push(std::fs::read(path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
