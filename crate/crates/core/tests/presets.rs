use std::path::Path;

use librotor::io::RunConfig;
use librotor::physics::ModeLabel;
use librotor::scenarios::{cluster_1d, dumbbell_2d, Scenario};

fn shipped(name: &str) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    RunConfig::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_matches(file: &str, s: &Scenario) {
    let cfg = shipped(file);
    let preset = RunConfig::from_scenario(s, cfg.synthesis.channels.clone(), cfg.synthesis.detunings_hz.clone());
    assert_eq!(cfg, preset, "{file} drifted from the preset");
    let text = cfg.to_json();
    assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
}

#[test]
fn shipped_configs_match_presets() {
    assert_matches("cluster_1d.json", &cluster_1d());
    assert_matches("dumbbell_2d.json", &dumbbell_2d());
}

#[test]
fn shipped_configs_rebuild_the_modes() {
    for (file, s) in [("cluster_1d.json", cluster_1d()), ("dumbbell_2d.json", dumbbell_2d())] {
        let modes = shipped(file).modes().unwrap();
        for label in [ModeLabel::Alpha, ModeLabel::Beta] {
            let (a, b) = (modes.iter().find(|m| m.label == label).unwrap(), s.mode(label));
            assert!((a.omega / b.omega - 1.0).abs() < 1e-9, "{file} {label}");
            assert!((a.g.norm() / b.g.norm() - 1.0).abs() < 1e-9, "{file} {label}");
        }
    }
}

#[test]
fn dumbbell_detunings_include_the_operating_point() {
    assert!(shipped("dumbbell_2d.json").synthesis.detunings_hz.contains(&984e3));
    assert_eq!(shipped("cluster_1d.json").synthesis.detunings_hz.len(), 12);
}
