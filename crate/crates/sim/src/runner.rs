//! One scenario run with its output files.

use std::fs;
use std::path::{Path, PathBuf};

use ibvs_core::sim::{run_scenario, Scenario, TrajectoryLog};

use crate::checks::{evaluate, format_report, CheckSettings, Evaluation};
use crate::error::SimError;
use crate::log_csv::write_log_csv;
use crate::plot::standard_plots;
use crate::scenario_file::ScenarioFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub plots: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub log: TrajectoryLog,
    pub evaluation: Evaluation,
    pub files: Vec<PathBuf>,
}

/// Runs `scenario` and writes `<stem>.csv`, `<stem>.report` and, when
/// asked, `<stem>_<plot>.svg` into `out_dir`.
pub fn run_and_write(scenario: &Scenario, out_dir: &Path, stem: &str, opts: RunOptions) -> Result<RunOutcome, SimError> {
    let log = run_scenario(scenario)?;
    let evaluation = evaluate(scenario, &log, &CheckSettings::default());
    fs::create_dir_all(out_dir).map_err(|e| SimError::io(out_dir, e))?;
    let mut files = Vec::new();

    let csv = out_dir.join(format!("{stem}.csv"));
    write_log_csv(&log, Some(&ScenarioFile::from_scenario(scenario)), &csv)?;
    files.push(csv);

    let report = out_dir.join(format!("{stem}.report"));
    fs::write(&report, format_report(&evaluation)).map_err(|e| SimError::io(&report, e))?;
    files.push(report);

    if opts.plots {
        for (name, svg) in standard_plots(&log) {
            let path = out_dir.join(format!("{stem}_{name}.svg"));
            fs::write(&path, svg).map_err(|e| SimError::io(&path, e))?;
            files.push(path);
        }
    }
    Ok(RunOutcome { log, evaluation, files })
}
