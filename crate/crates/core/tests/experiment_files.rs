use multiris::experiment::{ExperimentSpec, CSV_HEADER};
use multiris::model::ScenarioConfig;
use std::path::Path;

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn shipped_scenarios_load() {
    for name in ["reference.json", "random_positions.json"] {
        let text = std::fs::read_to_string(configs().join(name)).unwrap();
        let cfg: ScenarioConfig = serde_json::from_str(&text).unwrap();
        cfg.validate().unwrap();
    }
}

#[test]
fn shipped_sweep_resolves_against_its_directory() {
    let spec = ExperimentSpec::from_path(&configs().join("power_sweep.json")).unwrap();
    let resolved = spec.resolve(configs()).unwrap();
    assert_eq!(resolved.grid.len(), 31);
}

#[test]
fn short_sweep_writes_csv_and_manifest() {
    let text = std::fs::read_to_string(configs().join("power_sweep.json")).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["trials"] = 2000.into();
    value["sweep"] = serde_json::json!({"variable": "tx_power", "grid": [10.0, 20.0]});
    let spec = ExperimentSpec::from_json_str(&value.to_string()).unwrap();
    let resolved = spec.resolve(configs()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    multiris::experiment::run_to_dir(&resolved, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    assert!(csv.lines().count() > 10);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(
        manifest["rows"].as_u64().unwrap() as usize,
        csv.lines().count() - 1
    );
}

#[test]
fn unknown_keys_report_their_location() {
    let err = ExperimentSpec::from_json_str(
        r#"{"scenario": "reference.json", "sweep": {"variable": "rate", "grid": [1]}, "trails": 5}"#,
    )
    .unwrap_err();
    assert!(err.to_string().contains("trails"), "{err}");
}
