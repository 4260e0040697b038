use std::fmt::Write as _;
use std::path::Path;
use std::thread;

use super::config::TrialConfig;
use super::trial::{run_trial, TrialMetrics};
use crate::error::{Error, Result};
use crate::sim::Shape;

#[derive(Clone, Debug)]
pub struct SuiteRow {
    pub name: String,
    pub shape: Option<Shape>,
    pub metrics: TrialMetrics,
}

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub rows: Vec<SuiteRow>,
}

struct Aggregate {
    trials: usize,
    successes: usize,
    mean_e_grasp: Option<f64>,
    max_e_grasp: Option<f64>,
    mean_n_switch: f64,
}

fn aggregate<'a>(rows: impl Iterator<Item = &'a SuiteRow>) -> Aggregate {
    let rows: Vec<_> = rows.collect();
    let errors: Vec<f64> = rows.iter().filter_map(|r| r.metrics.e_grasp_mm).collect();
    let n = rows.len().max(1) as f64;
    Aggregate {
        trials: rows.len(),
        successes: rows.iter().filter(|r| r.metrics.success).count(),
        mean_e_grasp: (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64),
        max_e_grasp: errors.iter().copied().reduce(f64::max),
        mean_n_switch: rows.iter().map(|r| r.metrics.n_switch as f64).sum::<f64>() / n,
    }
}

fn mm(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.1}"))
}

impl SuiteReport {
    pub fn all_succeeded(&self) -> bool {
        self.rows.iter().all(|r| r.metrics.success)
    }

    /// Per-trial grasp error and reversion count with an average row.
    pub fn trial_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<24} {:>10} {:>14} {:>9}", "trial", "shape", "e_grasp (mm)", "N_switch");
        for r in &self.rows {
            let shape = r.shape.map_or("none", |s| s.name());
            let flag = if r.metrics.success { "" } else { "  FAILED" };
            let _ = writeln!(
                out,
                "{:<24} {:>10} {:>14} {:>9}{flag}",
                r.name,
                shape,
                mm(r.metrics.e_grasp_mm),
                r.metrics.n_switch
            );
        }
        let a = aggregate(self.rows.iter());
        let _ = writeln!(
            out,
            "{:<24} {:>10} {:>14} {:>9.1}",
            "Average",
            "",
            mm(a.mean_e_grasp),
            a.mean_n_switch
        );
        out
    }

    /// Mean and max grasp error and mean reversions per shape.
    pub fn shape_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>7} {:>9} {:>11} {:>10} {:>15}",
            "shape", "trials", "success", "mean (mm)", "max (mm)", "mean N_switch"
        );
        for shape in Shape::ALL {
            let rows: Vec<_> = self.rows.iter().filter(|r| r.shape == Some(shape)).collect();
            if rows.is_empty() {
                continue;
            }
            let a = aggregate(rows.into_iter());
            let _ = writeln!(
                out,
                "{:<10} {:>7} {:>9} {:>11} {:>10} {:>15.2}",
                shape.name(),
                a.trials,
                a.successes,
                mm(a.mean_e_grasp),
                mm(a.max_e_grasp),
                a.mean_n_switch
            );
        }
        out
    }

    /// Machine-readable per-trial rows.
    pub fn csv(&self) -> String {
        let mut out = String::from("name,shape,success,e_grasp_mm,e_grasp_px,n_switch,sim_time_s,events,corner_events\n");
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.3},{},{}",
                r.name,
                r.shape.map_or("none", |s| s.name()),
                m.success,
                m.e_grasp_mm.map_or(String::new(), |v| format!("{v:.4}")),
                m.e_grasp_px.map_or(String::new(), |v| format!("{v:.4}")),
                m.n_switch,
                m.sim_time,
                m.events,
                m.corner_events
            );
        }
        out
    }
}

/// Runs independent trials in parallel; rows keep the input order.
pub fn run_suite(configs: &[(String, TrialConfig)]) -> Result<SuiteReport> {
    if configs.is_empty() {
        return Err(Error::Config("a suite needs at least one trial".into()));
    }
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(configs.len());
    let chunk = configs.len().div_ceil(workers);
    let results: Vec<Result<TrialMetrics>> = thread::scope(|s| {
        let handles: Vec<_> = configs
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|(_, c)| run_trial(c).map(|o| o.metrics)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("trial thread panicked"))
            .collect()
    });
    let mut rows = Vec::with_capacity(configs.len());
    for ((name, config), metrics) in configs.iter().zip(results) {
        rows.push(SuiteRow {
            name: name.clone(),
            shape: config.object.as_ref().map(|o| o.shape),
            metrics: metrics?,
        });
    }
    Ok(SuiteReport { rows })
}

/// Loads every `*.toml` in `dir`, sorted by file name.
pub fn load_config_dir(dir: &Path) -> Result<Vec<(String, TrialConfig)>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            TrialConfig::load(&p).map(|c| (name, c))
        })
        .collect()
}
