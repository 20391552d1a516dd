use std::path::PathBuf;

use ibvs_sim::cli::preset_by_name;
use ibvs_sim::scenario_file::{read_scenario, read_scenario_file, ScenarioFile};
use ibvs_sim::sweep::load_sweep;
use ibvs_sim::presets;

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn bundled_files_match_presets() {
    for (file, preset) in [
        ("nominal.json", "nominal"),
        ("horizontal_disturbance.json", "horizontal-disturbance"),
        ("vertical_disturbance.json", "vertical-disturbance"),
        ("crossing.json", "crossing"),
    ] {
        let on_disk = read_scenario_file(&scenarios().join(file)).unwrap();
        let expected = ScenarioFile::from_scenario(&preset_by_name(preset).unwrap());
        assert_eq!(on_disk, expected, "{file}");
        read_scenario(&scenarios().join(file)).unwrap();
    }
}

#[test]
fn bundled_sweep_uses_the_preset_starts() {
    let sweep = load_sweep(&scenarios().join("sweep.json")).unwrap();
    let starts: Vec<_> = sweep.runs.iter().map(|s| s.initial.position).collect();
    assert_eq!(starts, presets::sweep_starts());
    for (k, s) in sweep.runs.iter().enumerate() {
        assert_eq!(s.sim.seed, presets::nominal().sim.seed + k as u64);
        assert_eq!(s.gains, presets::nominal().gains);
    }
}
