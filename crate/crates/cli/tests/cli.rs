use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn workspace_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_librotor")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Preset config with edits applied, written into `dir`.
fn config_with(dir: &Path, preset: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut cfg = read_json(&workspace_file(preset));
    cfg["synthesis"]["grid"]["bins"] = 8192.into();
    edit(&mut cfg);
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    p
}

fn simulate(cfg: &Path, out: &Path) -> Output {
    run(&["simulate", "--config", s(cfg), "--out", s(out)])
}

#[test]
fn help_and_version_on_every_command() {
    for cmd in [vec![], vec!["simulate"], vec!["analyze"], vec!["scanfit"], vec!["classify"]] {
        for flag in ["--help", "--version"] {
            let mut args = cmd.clone();
            args.push(flag);
            let o = run(&args);
            assert!(o.status.success(), "{args:?}");
            assert!(!o.stdout.is_empty());
        }
    }
}

#[test]
fn invalid_config_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "configs/cluster_1d.json", |c| c["optics"]["kappa_hz"] = (-1.0).into());
    let o = simulate(&cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kappa"), "{}", stderr(&o));

    let cfg = config_with(dir.path(), "configs/cluster_1d.json", |c| c["synthesis"]["extra"] = 1.into());
    let o = simulate(&cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("extra"));
}

#[test]
fn zero_detuning_is_flagged_but_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "configs/cluster_1d.json", |c| {
        c["synthesis"]["detunings_hz"] = serde_json::json!([0.0, 1042000.0])
    });
    let out = dir.path().join("out");
    let o = simulate(&cfg, &out);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
    let truth = read_json(&out.join("truth.json"));
    assert_eq!(truth["invalid"].as_array().unwrap().len(), 1);
    assert_eq!(truth["invalid"][0]["detuning_hz"].as_f64(), Some(0.0));
    assert_eq!(truth["traces"].as_array().unwrap().len(), 1);
}

#[test]
fn analyze_recovers_configured_occupation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "configs/cluster_1d.json", |c| {
        c["synthesis"]["channels"] = serde_json::json!(["backscatter_y"]);
        c["synthesis"]["detunings_hz"] = serde_json::json!([1000000.0, 1042000.0, 1100000.0]);
    });
    let out = dir.path().join("sim");
    assert!(simulate(&cfg, &out).status.success());
    let res = dir.path().join("res.json");
    let pattern = format!("{}/trace_*.csv", s(&out));
    let shot = out.join("shot.csv");
    let dark = out.join("dark.csv");
    // backscatter also carries the uncooled β line, which would win the automatic hint
    let o = run(&[
        "analyze",
        "--traces",
        &pattern,
        "--shot",
        s(&shot),
        "--dark",
        s(&dark),
        "--out",
        s(&res),
        "--omega-hint-hz",
        "1030000",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let truth = read_json(&out.join("truth.json"));
    let doc = read_json(&res);
    assert_eq!(doc["schema"], "librotor-results/1");
    assert_eq!(doc["calibration"], "shot_dark");
    for (t, r) in truth["traces"].as_array().unwrap().iter().zip(doc["traces"].as_array().unwrap()) {
        let alpha = t["modes"].as_array().unwrap().iter().find(|m| m["mode"] == "alpha").unwrap();
        let n_true = alpha["n_true"].as_f64().unwrap();
        let occ = &r["occupation"];
        let (n, err) = (occ["n"].as_f64().unwrap(), occ["n_err"].as_f64().unwrap());
        assert!((n - n_true).abs() < 3.0 * err, "{n} ± {err} vs {n_true}");
        let plot = std::fs::read_to_string(r["plot"].as_str().unwrap()).unwrap();
        assert!(plot.starts_with("freq_hz,data,fit,residual\n"));
    }
    // the 1042 kHz point is the quoted coldest one
    let n_1042 = doc["traces"][1]["occupation"]["n"].as_f64().unwrap();
    assert!((n_1042 - 0.21).abs() < 0.03, "{n_1042}");

    let record = read_json(&dir.path().join("res.run.json"));
    assert_eq!(record["command"], "analyze");
    assert!(record["outputs"].as_array().unwrap().iter().any(|f| f["path"] == "res.json"));
}

#[test]
fn missing_calibration_falls_back_to_flat_response() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "configs/cluster_1d.json", |c| {
        c["synthesis"]["channels"] = serde_json::json!(["backscatter_y"]);
        c["synthesis"]["detunings_hz"] = serde_json::json!([1042000.0]);
    });
    let out = dir.path().join("sim");
    assert!(simulate(&cfg, &out).status.success());
    let res = dir.path().join("res.json");
    let o = run(&["analyze", "--traces", &format!("{}/trace_*.csv", s(&out)), "--out", s(&res)]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("flat"));
    let doc = read_json(&res);
    assert_eq!(doc["calibration"], "flat");
    assert_eq!(doc["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn malformed_row_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "configs/cluster_1d.json", |c| {
        c["synthesis"]["channels"] = serde_json::json!(["backscatter_y"]);
        c["synthesis"]["detunings_hz"] = serde_json::json!([1042000.0]);
    });
    let out = dir.path().join("sim");
    assert!(simulate(&cfg, &out).status.success());
    let trace = out.join("trace_backscatter_y_00.csv");
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[6] = "1.5e6;oops";
    std::fs::write(&trace, lines.join("\n") + "\n").unwrap();
    let o = run(&["analyze", "--traces", s(&trace), "--out", s(&dir.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 7"), "{}", stderr(&o));
}

#[test]
fn unphysical_traces_fail_per_trace_and_all_failing_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "configs/cluster_1d.json", |c| {
        c["synthesis"]["channels"] = serde_json::json!(["backscatter_y"]);
        c["synthesis"]["detunings_hz"] = serde_json::json!([1042000.0]);
        c["synthesis"]["noise_free"] = true.into();
    });
    let out = dir.path().join("sim");
    assert!(simulate(&cfg, &out).status.success());
    // swap the sideband orientation so the anti-Stokes line is the larger one
    let meta_path = out.join("trace_backscatter_y_00.meta.json");
    let meta = std::fs::read_to_string(&meta_path).unwrap().replace("stokes_above", "stokes_below");
    std::fs::write(&meta_path, meta).unwrap();
    let res = dir.path().join("r.json");
    let o = run(&["analyze", "--traces", s(&out.join("trace_backscatter_y_00.csv")), "--out", s(&res)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let doc = read_json(&res);
    assert_eq!(doc["traces"][0]["status"], "error");
    assert!(doc["traces"][0]["error"].as_str().unwrap().contains("unphysical"));
}

#[test]
fn noise_free_scan_reports_generator_inertia() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "configs/cluster_1d.json", |c| {
        c["synthesis"]["grid"]["bins"] = 32768.into();
        c["synthesis"]["noise_free"] = true.into();
    });
    let out = dir.path().join("sim");
    assert!(simulate(&cfg, &out).status.success());
    let res = dir.path().join("scan.json");
    let o = run(&["scanfit", "--traces", s(&out), "--out", s(&res)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = &read_json(&res)["modes"][0];
    assert_eq!(m["mode"], "alpha");
    let inertia = m["inertia"].as_f64().unwrap();
    assert!((inertia / 3.3e-32 - 1.0).abs() < 0.01, "{inertia}");
    let sigma = m["coldest"]["sigma_rad"].as_f64().unwrap();
    assert!((17e-6..=19e-6).contains(&sigma), "{sigma}");
    for key in ["g_hz", "gamma_total_heating", "n_phase", "temperature_k", "t_rev_s", "j_mean"] {
        assert!(m.get(key).or(m["coldest"].get(key)).is_some_and(Value::is_number), "{key}");
    }
}

#[test]
fn two_mode_scan_attributes_channels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = workspace_file("configs/dumbbell_2d.json");
    let out = dir.path().join("sim");
    assert!(simulate(&cfg, &out).status.success());
    let res = dir.path().join("scan.json");
    let o = run(&["scanfit", "--traces", s(&out), "--out", s(&res)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = read_json(&res);
    let modes = doc["modes"].as_array().unwrap();
    assert_eq!(modes.len(), 2);
    let find = |label: &str| modes.iter().find(|m| m["mode"] == label).unwrap();
    assert_eq!(find("alpha")["channel"], "cavity_y");
    assert_eq!(find("beta")["channel"], "cavity_z");

    // the 984 kHz operating point
    for (label, n_quoted, err_quoted) in [("alpha", 1.02, 0.08), ("beta", 0.73, 0.22)] {
        let p =
            find(label)["points"].as_array().unwrap().iter().find(|p| p["detuning_hz"] == 984000.0).unwrap().clone();
        let n = p["n"].as_f64().unwrap();
        assert!((n - n_quoted).abs() < err_quoted, "{label}: {n}");
    }
    let n_phase = find("beta")["n_phase"].as_f64().unwrap();
    assert!((n_phase - 0.38).abs() < 0.1, "{n_phase}");
}

#[test]
fn too_few_traces_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "configs/cluster_1d.json", |c| {
        c["synthesis"]["detunings_hz"] = serde_json::json!([1000000.0, 1042000.0, 1100000.0]);
    });
    let out = dir.path().join("sim");
    assert!(simulate(&cfg, &out).status.success());
    let res = dir.path().join("scan.json");
    let o = run(&["scanfit", "--traces", s(&out), "--out", s(&res)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert_eq!(read_json(&res)["modes"][0]["status"], "error");
}

#[test]
fn classify_reproduces_the_loading_series() {
    let dir = tempfile::tempdir().unwrap();
    let res = dir.path().join("c.json");
    let input = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/damping_rates.csv");
    let o = run(&["classify", "--input", s(&input), "--out", s(&res)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let labels: Vec<(String, String)> = read_json(&res)["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["name"].as_str().unwrap().to_owned(), r["label"].as_str().unwrap().to_owned()))
        .collect();
    let expect = [
        ("i", "unclassified"),
        ("ii", "dumbbell"),
        ("iii", "dumbbell"),
        ("iv", "trimer"),
        ("v", "dumbbell"),
        ("vi", "trimer"),
    ];
    assert_eq!(labels, expect.map(|(a, b)| (a.to_owned(), b.to_owned())));
}

#[test]
fn classify_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(run(&["classify", "--input", s(&empty), "--out", s(&dir.path().join("e.json"))]).status.code(), Some(2));

    let partial = dir.path().join("partial.csv");
    std::fs::write(&partial, "gamma_x,gamma_x_err,gamma_y,gamma_y_err\n0,1,1,0.1\n1000,1,1378,1\n").unwrap();
    let res = dir.path().join("p.json");
    let o = run(&["classify", "--input", s(&partial), "--out", s(&res)]);
    assert_eq!(o.status.code(), Some(0));
    let rows = read_json(&res)["rows"].as_array().unwrap().clone();
    assert_eq!(rows[0]["status"], "error");
    assert_eq!(rows[0]["line"], 2);
    assert_eq!(rows[1]["label"], "trimer");
}

#[test]
fn fixed_seed_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "configs/cluster_1d.json", |_| {});
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(simulate(&cfg, &a).status.success());
    assert!(simulate(&cfg, &b).status.success());
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for name in names.iter().filter(|n| *n != "run.json") {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name:?}");
    }

    // a different seed changes the traces but not the grid
    let c = dir.path().join("c");
    assert!(run(&["simulate", "--config", s(&cfg), "--out", s(&c), "--seed", "1"]).status.success());
    assert_ne!(
        std::fs::read(a.join("trace_cavity_y_00.csv")).unwrap(),
        std::fs::read(c.join("trace_cavity_y_00.csv")).unwrap()
    );

    // analysis outputs are reproducible too
    let analyze = |tag: &str| {
        let res = dir.path().join(format!("{tag}.json"));
        let o = run(&["scanfit", "--traces", s(&a), "--out", s(&res)]);
        assert!(o.status.success());
        std::fs::read(res).unwrap()
    };
    assert_eq!(analyze("x"), analyze("y"));
}

#[test]
fn results_use_hz_at_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "configs/cluster_1d.json", |c| {
        c["synthesis"]["detunings_hz"] = serde_json::json!([1042000.0]);
    });
    let out = dir.path().join("sim");
    assert!(simulate(&cfg, &out).status.success());
    let truth = read_json(&out.join("truth.json"));
    let center_hz = truth["traces"][0]["modes"][0]["center_hz"].as_f64().unwrap();
    // optically shifted, but within a few kHz of the bare 1030 kHz
    assert!((center_hz - 1030e3).abs() < 5e3, "{center_hz}");
    let meta = read_json(&out.join("trace_cavity_y_00.meta.json"));
    assert_eq!(meta["detuning_hz"].as_f64(), Some(1042000.0));
}
