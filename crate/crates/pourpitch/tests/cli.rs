use std::path::Path;
use std::process::{Command, Output};

use pourpitch::eval::{run_eval, EvalConfig};
use pourpitch::io::tables::read_truth;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pourpitch"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_cylinder(dir: &Path) {
    std::fs::write(dir.join("cyl.toml"), "shape = \"cylinder\"\nheight_m = 0.15\nradius_base_m = 0.025\n").unwrap();
}

#[test]
fn synth_then_analyze_recovers_container() {
    let dir = tempfile::tempdir().unwrap();
    write_cylinder(dir.path());
    let o = run(dir.path(), &["synth", "cyl.toml", "--duration", "8", "--snr-db", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let truth = read_truth(&dir.path().join("pour_truth.csv")).unwrap();
    assert_eq!(truth[0].l_m, 0.15);
    assert_eq!(truth.last().unwrap().l_m, 0.0);

    let o = run(dir.path(), &["analyze", "pour.wav", "--format", "json", "--spectrogram"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((report["height_cm"].as_f64().unwrap() - 15.0).abs() < 0.1);
    assert!((report["radius_cm"].as_f64().unwrap() - 2.5).abs() < 0.1);
    for f in ["pour_track.csv", "pour_report.json", "pour_report.txt", "pour_spectrogram.csv", "pour_spectrogram.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    write_cylinder(dir.path());
    let args = ["synth", "cyl.toml", "--flow", "30", "--snr-db", "15", "--seed", "4"];
    assert!(run(dir.path(), &args).status.success());
    let first = std::fs::read(dir.path().join("pour.wav")).unwrap();
    assert!(run(dir.path(), &args).status.success());
    assert_eq!(first, std::fs::read(dir.path().join("pour.wav")).unwrap());

    let other = ["synth", "cyl.toml", "--flow", "30", "--snr-db", "15", "--seed", "5"];
    assert!(run(dir.path(), &other).status.success());
    assert_ne!(first, std::fs::read(dir.path().join("pour.wav")).unwrap());
}

#[test]
fn missing_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["analyze", "nowhere.wav"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.wav"));
}

#[test]
fn malformed_container_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "shape = \"cylinder\"\nheight_m = -1\nradius_base_m = 0.02\n").unwrap();
    assert_eq!(run(dir.path(), &["synth", "bad.toml", "--flow", "20"]).status.code(), Some(2));
}

#[test]
fn silence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let audio = pourpitch_core::AudioBuffer::new(16000, vec![0.0; 48000]).unwrap();
    pourpitch::io::wav::write_wav(&dir.path().join("quiet.wav"), &audio).unwrap();
    let o = run(dir.path(), &["analyze", "quiet.wav"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no pour detected"));
}

#[test]
fn scale_warns_when_alpha_is_implausible() {
    let dir = tempfile::tempdir().unwrap();
    write_cylinder(dir.path());
    assert!(run(dir.path(), &["synth", "cyl.toml", "--duration", "6"]).status.success());
    assert!(run(dir.path(), &["analyze", "pour.wav"]).status.success());
    let truth = read_truth(&dir.path().join("pour_truth.csv")).unwrap();
    for (alpha, warns) in [(50.0, false), (150.0, true)] {
        let mut pix = format!("# radius_px = {}\n# image_height_px = 720\ntime_s,l_px\n", alpha * 0.025);
        for r in truth.iter().step_by(50) {
            pix.push_str(&format!("{},{}\n", r.t_s, alpha * r.l_m));
        }
        std::fs::write(dir.path().join("pix.csv"), pix).unwrap();
        let o = run(dir.path(), &["scale", "pour_track.csv", "pix.csv", "--format", "json"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert!((report["alpha"].as_f64().unwrap() - alpha).abs() < 0.02 * alpha);
        assert_eq!(String::from_utf8_lossy(&o.stderr).contains("warning"), warns);
    }
}

#[test]
fn dataset_manifest_round_trips_through_eval() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["dataset", "--n", "2", "--shape", "frustum", "--out", "ds", "--seed", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = pourpitch::dataset::Manifest::read(&dir.path().join("ds/manifest.json")).unwrap();
    assert_eq!(manifest.entries.len(), 2);
    for e in &manifest.entries {
        assert!(dir.path().join("ds").join(&e.audio).exists());
        assert!(dir.path().join("ds").join(&e.truth).exists());
    }
    let o = run(dir.path(), &["eval", "--manifest", "ds/manifest.json", "--out", "ds"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("ds/eval_report.json").exists());
}

#[test]
fn eval_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["eval", "--n", "2", "--snr", "clean", "--curves", "1", "--out", "ev"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["eval_report.json", "eval_report.txt", "eval_records.csv", "eval_summary.csv", "curves/sample_00000_clean.csv"] {
        assert!(dir.path().join("ev").join(f).exists(), "{f}");
    }
    let records = std::fs::read_to_string(dir.path().join("ev/eval_records.csv")).unwrap();
    assert_eq!(records.lines().count(), 3);
}

#[test]
fn aggregates_recompute_from_records() {
    let config = EvalConfig {
        n: 4,
        snrs_db: vec![None, Some(10.0)],
        seed: 3,
        ..EvalConfig::default()
    };
    let report = run_eval(&config).unwrap();
    assert_eq!(report.records.len(), 8);
    assert_eq!(report.aggregates, report.recompute_aggregates());
    let json = serde_json::to_string(&report).unwrap();
    let back: pourpitch::eval::EvalReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.recompute_aggregates(), report.aggregates);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
