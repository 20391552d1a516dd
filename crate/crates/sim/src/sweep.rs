//! Batches of runs over initial positions.

use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use ibvs_core::geometry::Vec3;
use ibvs_core::sim::Scenario;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::runner::{run_and_write, RunOptions};
use crate::scenario_file::read_scenario_file;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// Every run uses the base scenario's seed.
    #[default]
    Base,
    /// Run `k` uses `base seed + k`.
    Index,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Base scenario, relative to the sweep file.
    pub base: PathBuf,
    #[serde(default)]
    pub starts: Vec<[f64; 3]>,
    /// Cartesian product of the axis values, appended after `starts`.
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default)]
    pub seed_policy: SeedPolicy,
}

impl SweepSpec {
    pub fn positions(&self) -> Vec<Vec3> {
        let mut out: Vec<Vec3> = self.starts.iter().map(|p| Vec3::from(*p)).collect();
        if let Some(g) = &self.grid {
            for &x in &g.x {
                for &y in &g.y {
                    for &z in &g.z {
                        out.push(Vec3::new(x, y, z));
                    }
                }
            }
        }
        out
    }
}

/// A sweep with every run's scenario built and validated.
#[derive(Debug, Clone)]
pub struct LoadedSweep {
    pub runs: Vec<Scenario>,
}

pub fn parse_sweep(text: &str) -> Result<SweepSpec, SimError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        SimError::Parse { file: None, key, line: inner.line(), column: inner.column(), message: inner.to_string() }
    })
}

/// Reads a sweep file and its base scenario; every start is validated here
/// so that a bad start rejects the whole sweep before anything runs.
pub fn load_sweep(path: &Path) -> Result<LoadedSweep, SimError> {
    let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let spec = parse_sweep(&text).map_err(|e| e.in_file(path))?;
    let base_path = path.parent().unwrap_or(Path::new(".")).join(&spec.base);
    let base = read_scenario_file(&base_path)?.to_scenario();
    build_runs(&base, &spec)
}

pub fn build_runs(base: &Scenario, spec: &SweepSpec) -> Result<LoadedSweep, SimError> {
    let positions = spec.positions();
    if positions.is_empty() {
        return Err(SimError::Parse {
            file: None,
            key: "starts".into(),
            line: 0,
            column: 0,
            message: "a sweep needs at least one start".into(),
        });
    }
    let mut runs = Vec::with_capacity(positions.len());
    for (k, p) in positions.into_iter().enumerate() {
        let mut s = base.clone();
        s.initial.position = p;
        if spec.seed_policy == SeedPolicy::Index {
            s.sim.seed = base.sim.seed.wrapping_add(k as u64);
        }
        s.validate().map_err(|e| {
            let ibvs_core::error::ScenarioError::Invalid { field, reason } = e;
            ibvs_core::error::ScenarioError::invalid(format!("starts[{k}] {field}"), reason)
        })?;
        runs.push(s);
    }
    Ok(LoadedSweep { runs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub start: Vec3,
    pub t_w: Option<f64>,
    pub t_lim: Option<f64>,
    pub d_o_rate: Option<f64>,
    /// Terminal `‖π_η ξ_t‖` of the landing.
    pub touchdown_error: Option<f64>,
    pub passed: bool,
    /// Failed assertion names, or the run error.
    pub detail: String,
}

/// Runs all scenarios on `jobs` threads; run `k` writes into `out/run_kkk`.
pub fn run_sweep(sweep: &LoadedSweep, out: &Path, jobs: usize, opts: RunOptions) -> Result<Vec<SweepRow>, SimError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool");
    let rows = pool.install(|| {
        sweep
            .runs
            .par_iter()
            .enumerate()
            .map(|(k, s)| {
                let dir = out.join(format!("run_{k:03}"));
                let mut row = SweepRow {
                    index: k,
                    start: s.initial.position,
                    t_w: None,
                    t_lim: None,
                    d_o_rate: None,
                    touchdown_error: None,
                    passed: false,
                    detail: String::new(),
                };
                match run_and_write(s, &dir, "run", opts) {
                    Ok(o) => {
                        let ev = &o.evaluation;
                        row.t_w = ev.crossing.as_ref().map(|c| c.t_w);
                        row.t_lim = ev.crossing.as_ref().map(|c| c.t_lim);
                        row.d_o_rate = ev.crossing.as_ref().map(|c| c.d_o_rate);
                        row.touchdown_error = ev.landing.as_ref().map(|l| l.terminal_lateral);
                        row.passed = ev.passed();
                        row.detail = ev.failures().map(|a| a.name.clone()).collect::<Vec<_>>().join(" ");
                    }
                    Err(e) => row.detail = e.to_string(),
                }
                row
            })
            .collect::<Vec<_>>()
    });
    let summary = out.join("summary.tsv");
    fs::create_dir_all(out).map_err(|e| SimError::io(out, e))?;
    fs::write(&summary, format_summary(&rows)).map_err(|e| SimError::io(&summary, e))?;
    Ok(rows)
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

fn sci(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"))
}

/// Summary table with a trailing aggregate line.
pub fn format_summary(rows: &[SweepRow]) -> String {
    let mut out = String::from("run\txi0_x\txi0_y\txi0_z\tt_w\tt_lim\td_o_rate\ttouchdown_error\tresult\tdetail\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{:.3}\t{:.3}\t{:.3}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.index,
            r.start.x,
            r.start.y,
            r.start.z,
            cell(r.t_w),
            cell(r.t_lim),
            cell(r.d_o_rate),
            sci(r.touchdown_error),
            if r.passed { "PASS" } else { "FAIL" },
            r.detail
        );
    }
    let ok = rows.iter().filter(|r| r.passed).count();
    let _ = writeln!(out, "# passed {ok}/{}", rows.len());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn spec(starts: Vec<[f64; 3]>) -> SweepSpec {
        SweepSpec { base: "nominal.json".into(), starts, grid: None, seed_policy: SeedPolicy::Index }
    }

    #[test]
    fn grid_expands_after_starts() {
        let mut s = spec(vec![[-2.0, 0.0, -1.8]]);
        s.grid = Some(Grid { x: vec![-2.0, -3.0], y: vec![0.0], z: vec![-1.5, -2.0] });
        let p = s.positions();
        assert_eq!(p.len(), 5);
        assert_eq!(p[4], Vec3::new(-3.0, 0.0, -2.0));
    }

    #[test]
    fn seeds_follow_policy() {
        let runs = build_runs(&presets::nominal(), &spec(vec![[-2.0, 0.0, -1.8], [-2.0, 0.2, -1.8]])).unwrap();
        assert_eq!(runs.runs[1].sim.seed, runs.runs[0].sim.seed + 1);
    }

    #[test]
    fn start_through_the_wall_is_rejected() {
        let err = build_runs(&presets::nominal(), &spec(vec![[-2.0, 0.0, -1.8], [-0.5, 0.0, -1.8]])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("starts[1]"), "{msg}");
        assert!(msg.contains("d_o(0) > 0"), "{msg}");
    }

    #[test]
    fn empty_sweep_is_rejected() {
        assert!(build_runs(&presets::nominal(), &spec(vec![])).is_err());
    }
}
