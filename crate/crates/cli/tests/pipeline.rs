use std::path::{Path, PathBuf};
use std::process::Command;

use evt_cli::config::{PipelineConfig, RawConfig};
use evt_cli::pipeline::run_pipeline;
use evt_cli::report::{build_report, to_json};
use evt_cli::synth::{generate, SynthSpec};
use evt_cli::{collect_plots, write_outputs};
use evt_core::dist::{DistributionModel, Family};
use serde_json::Value;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bundled_config(out: &Path) -> PipelineConfig {
    let mut raw = RawConfig::load(&repo_root().join("data/synthetic/analyze.conf")).unwrap();
    raw.set("out", out.to_string_lossy());
    raw.resolve().unwrap()
}

fn evt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_evt"))
}

#[test]
fn bundled_dataset_matches_its_generator() {
    let meta: Value =
        serde_json::from_str(&std::fs::read_to_string(repo_root().join("data/synthetic/two_regime.json")).unwrap())
            .unwrap();
    let series = generate(&SynthSpec::two_regime(meta["seed"].as_u64().unwrap())).unwrap();
    let bundled = std::fs::read_to_string(repo_root().join("data/synthetic/two_regime.csv")).unwrap();
    assert!(series.to_csv() == bundled, "bundled CSV differs from a fresh generation");
    let bundled_meta = std::fs::read_to_string(repo_root().join("data/synthetic/two_regime.json")).unwrap();
    assert_eq!(series.metadata_json(), bundled_meta);
}

#[test]
fn bundled_dataset_recovers_weibull_tails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bundled_config(dir.path());
    let analysis = run_pipeline(&cfg).unwrap();
    let meta: Value =
        serde_json::from_str(&std::fs::read_to_string(repo_root().join("data/synthetic/two_regime.json")).unwrap())
            .unwrap();
    let regimes = meta["regimes"].as_array().unwrap();
    assert_eq!(analysis.segments.len(), regimes.len());

    let boundary = meta["regime_starts"][0].as_u64().unwrap() as usize;
    let evt_core::ingest::ChangePoint::Found { index, .. } = analysis.change_point.unwrap() else {
        panic!("no change point found");
    };
    assert!(index.abs_diff(boundary) <= 10, "split at {index}, truth {boundary}");

    for (seg, truth) in analysis.segments.iter().zip(regimes) {
        let fit = seg.fit.expect("segment fitted");
        assert_eq!(fit.family(), Family::Weibull, "{}", seg.segment.label);
        let DistributionModel::Weibull { rate, shape } = fit.model else {
            unreachable!()
        };
        let (t_rate, t_shape) = (truth["rate"].as_f64().unwrap(), truth["shape"].as_f64().unwrap());
        assert!((rate - t_rate).abs() / t_rate < 0.10, "{}: λ {rate} vs {t_rate}", seg.segment.label);
        assert!((shape - t_shape).abs() / t_shape < 0.10, "{}: r {shape} vs {t_shape}", seg.segment.label);
        assert!(seg.warnings.is_empty(), "{:?}", seg.warnings);
    }
    assert!(!analysis.is_partial());
}

#[test]
fn report_validates_against_published_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bundled_config(dir.path());
    let analysis = run_pipeline(&cfg).unwrap();
    let report: Value = serde_json::from_str(&to_json(&build_report(&analysis, &cfg, "config"))).unwrap();
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(repo_root().join("schema/report.schema.json")).unwrap())
            .unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&report).map(|e| format!("{e} at {}", e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}");

    // the schema is not vacuous
    let mut broken = report.clone();
    broken["segments"][0]["summary"]["mean"] = Value::from(56.9);
    assert!(!validator.is_valid(&broken));
}

/// Every JSON number must sit directly in an object that has a `unit` key.
fn untagged_numbers(v: &Value, path: &str, parent_has_unit: bool, out: &mut Vec<String>) {
    match v {
        Value::Number(_) if !parent_has_unit => out.push(path.to_string()),
        Value::Object(map) => {
            let has_unit = map.contains_key("unit");
            for (k, child) in map {
                untagged_numbers(child, &format!("{path}/{k}"), has_unit, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                untagged_numbers(child, &format!("{path}/{i}"), false, out);
            }
        }
        _ => {}
    }
}

#[test]
fn every_number_carries_a_unit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bundled_config(dir.path());
    let analysis = run_pipeline(&cfg).unwrap();
    let report: Value = serde_json::from_str(&to_json(&build_report(&analysis, &cfg, "config"))).unwrap();
    let mut bad = Vec::new();
    untagged_numbers(&report, "", false, &mut bad);
    assert!(bad.is_empty(), "{bad:?}");
    assert_eq!(report["segments"][0]["risk_table"]["rows"][0]["exceedance_probability"]["unit"], "%");
}

#[test]
fn plot_csvs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bundled_config(dir.path());
    let analysis = run_pipeline(&cfg).unwrap();
    write_outputs(&analysis, &cfg, "config").unwrap();
    let plots = collect_plots(&analysis, &cfg);
    // histogram, cumulative, four Q-Q plots, theta, overlay per segment
    assert_eq!(plots.len(), 2 * 8);
    for plot in &plots {
        let path = dir.path().join("plots").join(format!("{}.csv", plot.name));
        let back = plot.read_csv_like(&path).unwrap();
        assert!(back == *plot, "{} does not round-trip", plot.name);
    }
    let header = std::fs::read_to_string(dir.path().join("plots/segment-1_qq_weibull.csv")).unwrap();
    assert!(header.starts_with("ln_neg_ln_1mp,ln_Q\n"));
    let header = std::fs::read_to_string(dir.path().join("plots/segment-1_qq_exponential.csv")).unwrap();
    assert!(header.starts_with("Q_star,Q\n"));
    let header = std::fs::read_to_string(dir.path().join("plots/segment-2_theta.csv")).unwrap();
    assert!(header.starts_with("threshold_m,theta,defined\n"));
    let overlay = std::fs::read_to_string(dir.path().join("plots/segment-1_fit_overlay.csv")).unwrap();
    assert!(overlay.starts_with("kind,excess_m,survival\n"));
    assert_eq!(overlay.lines().filter(|l| l.starts_with("fitted,")).count(), 200);
}

#[test]
fn split_none_gives_one_segment() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec {
        regimes: vec![SynthSpec::two_regime(5).regimes[0]],
        ..SynthSpec::two_regime(5)
    };
    let input = dir.path().join("one.csv");
    std::fs::write(&input, generate(&spec).unwrap().to_csv()).unwrap();
    let conf = dir.path().join("one.conf");
    std::fs::write(&conf, "input = one.csv\nsplit = none\nfit_threshold = 57.6\nplots = none\n").unwrap();

    let out = evt()
        .args(["analyze", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["segments"].as_array().unwrap().len(), 1);
    assert_eq!(report["change_point"], Value::Null);
    assert_eq!(report["segments"][0]["selected_family"], "weibull");
    assert_eq!(report["input"]["sampling_interval_source"], "inferred");
    assert_eq!(report["input"]["sampling_interval"]["value"], 10.0);
}

#[test]
fn missing_input_exits_1_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.conf");
    std::fs::write(&conf, "input = nowhere/levels.csv\n").unwrap();
    let out = evt().args(["analyze", "--config"]).arg(&conf).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nowhere/levels.csv"), "{stderr}");
}

#[test]
fn invalid_config_exits_1_with_field_messages() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.conf");
    std::fs::write(&conf, "input = x.csv\ncolour = blue\nrun_length = -1\n").unwrap();
    let out = evt().args(["analyze", "--config"]).arg(&conf).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2: colour: unknown key"), "{stderr}");

    std::fs::write(&conf, "input = x.csv\nrun_length = -1\n").unwrap();
    let out = evt().args(["analyze", "--config"]).arg(&conf).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2: run_length"));

    let out = evt()
        .args(["analyze", "--config"])
        .arg(&conf)
        .args(["--run-length", "1", "--plots", "violin"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("plots: unknown plot stage 'violin'"));
}

#[test]
fn caveats_exit_2_and_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec {
        regimes: vec![SynthSpec::two_regime(8).regimes[1]],
        ..SynthSpec::two_regime(8)
    };
    let mut csv = generate(&spec).unwrap().to_csv();
    csv.push_str("2999-01-01,not-a-number\n");
    std::fs::write(dir.path().join("d.csv"), csv).unwrap();
    // 56 m is below the fit threshold and gets skipped
    let conf = dir.path().join("c.conf");
    std::fs::write(
        &conf,
        "input = d.csv\nsplit = none\nfit_threshold = 56.68\nlevels = 56,61\nplots = none\n",
    )
    .unwrap();
    let out = evt()
        .args(["analyze", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "partial");
    assert_eq!(report["input"]["rejected_rows"].as_array().unwrap().len(), 1);
    let seg = &report["segments"][0];
    assert_eq!(seg["risk_table"]["skipped_levels"][0]["value"], 56.0);
    assert_eq!(seg["risk_table"]["rows"].as_array().unwrap().len(), 1);
    assert!(!seg["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = evt()
        .args(["analyze", "--config"])
        .arg(repo_root().join("data/synthetic/analyze.conf"))
        .args(["--split", "7227", "--families", "w,e", "--fit-method", "mle", "--plots", "qq", "--svg"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["provenance"]["config"]["split"], "7227");
    assert_eq!(report["provenance"]["config"]["fit_method"], "mle");
    assert_eq!(report["segments"][0]["fit"]["method"], "mle");
    assert_eq!(report["segments"][1]["start_index"]["value"], 7238);
    let mut files: Vec<String> = std::fs::read_dir(dir.path().join("plots"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    files.sort();
    assert_eq!(files.len(), 8, "{files:?}");
    assert!(files.contains(&"segment-2_qq_exponential.svg".to_string()));
}

#[test]
fn seed_is_recorded_and_env_overrides_it() {
    let dir = tempfile::tempdir().unwrap();
    let run = |env: Option<&str>| {
        let mut cmd = evt();
        cmd.args(["analyze", "--config"])
            .arg(repo_root().join("data/synthetic/analyze.conf"))
            .args(["--plots", "none", "--out"])
            .arg(dir.path())
            .env_remove("EVT_SEED");
        if let Some(s) = env {
            cmd.env("EVT_SEED", s);
        }
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        report["provenance"]["seed"].clone()
    };
    let default = run(None);
    assert_eq!(default["source"], "config");
    assert_eq!(default["value"], evt_cli::config::DEFAULT_SEED);
    let overridden = run(Some("77"));
    assert_eq!(overridden["source"], "EVT_SEED");
    assert_eq!(overridden["value"], 77);
}

#[test]
fn reference_table_command_prints_the_footnote() {
    let out = evt().arg("reference-table").output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("892857 days"), "{stdout}");
    assert!(stdout.contains("89285"), "{stdout}");
}
