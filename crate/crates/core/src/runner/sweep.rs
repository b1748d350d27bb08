//! Cross-product grids over experiment configs.
//!
//! ```toml
//! repetitions = 1
//! master_seed = 7
//! hamiltonian_template = "../data/beh2/beh2_r{r}.fcidump"
//!
//! [base]
//! hamiltonian = "../data/beh2/beh2_r1.326.fcidump"
//! ansatz = { kind = "hea", layers = 1 }
//! method = "aavqe"
//!
//! [axes]
//! bond_length = [1.326, 2.0, 3.0]
//! layers = [1, 2, 3]
//! initial = ["fock", "transverse"]
//! ```
//!
//! Output layout under the sweep directory:
//! - `cells/<key>.json`: one finished cell, its config and row or error.
//! - `traces/<key>.{jsonl,meta.json,csv}`: the continuation trace of a cell.
//! - `results.csv`: every successful row, in grid order.
//! - `failures.csv`: `key,error` for cells that did not finish.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AnsatzConfig, ExperimentConfig, InitialHamiltonian, StartKind};
use super::experiment::{config_key, run_experiment, write_rows, ResultRow};
use super::hash_hex;
use crate::continuation::Schedule;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub bond_length: Option<Vec<f64>>,
    pub layers: Option<Vec<usize>>,
    pub ansatz: Option<Vec<String>>,
    pub initial: Option<Vec<InitialHamiltonian>>,
    pub start: Option<Vec<StartKind>>,
    pub schedule: Option<Vec<Schedule>>,
    pub steps: Option<Vec<usize>>,
    pub method: Option<Vec<String>>,
}

fn default_repetitions() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    #[serde(default)]
    pub axes: SweepAxes,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Defaults to the base seed.
    #[serde(default)]
    pub master_seed: Option<u64>,
    /// Hamiltonian path with `{r}` standing for the bond length.
    #[serde(default)]
    pub hamiltonian_template: Option<String>,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.axes.bond_length.is_some() && cfg.hamiltonian_template.is_none() {
            return Err(Error::Config("a bond_length axis needs hamiltonian_template".into()));
        }
        if let Some(t) = &cfg.hamiltonian_template {
            if !t.contains("{r}") {
                return Err(Error::Config("hamiltonian_template must contain {r}".into()));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed.unwrap_or(self.base.seed)
    }

    /// Expands the grid in a fixed axis order. Every cell is validated; the
    /// seed of a cell depends only on its own settings and the master seed.
    pub fn cells(&self) -> Result<Vec<ExperimentConfig>> {
        let mut cells = vec![self.base.clone()];
        let a = &self.axes;
        fn expand<T: Clone>(
            cells: Vec<ExperimentConfig>,
            values: &Option<Vec<T>>,
            set: impl Fn(&mut ExperimentConfig, &T) -> Result<()>,
        ) -> Result<Vec<ExperimentConfig>> {
            let Some(values) = values else { return Ok(cells) };
            let mut out = Vec::with_capacity(cells.len() * values.len());
            for c in &cells {
                for v in values {
                    let mut next = c.clone();
                    set(&mut next, v)?;
                    out.push(next);
                }
            }
            Ok(out)
        }
        cells = expand(cells, &a.bond_length, |c, &r| {
            let template = self.hamiltonian_template.as_deref().unwrap_or_default();
            c.hamiltonian = PathBuf::from(template.replace("{r}", &r.to_string()));
            c.bond_length = Some(r);
            Ok(())
        })?;
        cells = expand(cells, &a.ansatz, |c, kind| {
            c.ansatz = match kind.as_str() {
                "hea" => AnsatzConfig::Hea {
                    layers: c.ansatz.layers().unwrap_or(1),
                },
                "uccsd" => AnsatzConfig::Uccsd,
                other => return Err(Error::Config(format!("unknown ansatz '{other}'"))),
            };
            Ok(())
        })?;
        cells = expand(cells, &a.layers, |c, &layers| {
            if let AnsatzConfig::Hea { .. } = c.ansatz {
                c.ansatz = AnsatzConfig::Hea { layers };
            }
            Ok(())
        })?;
        cells = expand(cells, &a.initial, |c, &v| {
            c.initial = v;
            Ok(())
        })?;
        cells = expand(cells, &a.start, |c, &v| {
            c.start = v;
            Ok(())
        })?;
        cells = expand(cells, &a.schedule, |c, v| {
            c.schedule = *v;
            Ok(())
        })?;
        cells = expand(cells, &a.steps, |c, &v| {
            c.steps = v;
            Ok(())
        })?;
        cells = expand(cells, &a.method, |c, v| {
            c.method = v.clone();
            Ok(())
        })?;

        let master = self.master_seed();
        let mut out = Vec::with_capacity(cells.len() * self.repetitions);
        let mut seen = std::collections::HashSet::new();
        for mut c in cells {
            c.base_dir = self.base_dir.clone();
            c.out = None;
            for rep in 0..self.repetitions {
                let mut cell = c.clone();
                cell.seed = cell_seed(&c, master, rep)?;
                cell.validate()?;
                // axes that do not apply (layers on UCCSD) collapse onto one cell
                if seen.insert(config_key(&cell)?) {
                    out.push(cell);
                }
            }
        }
        Ok(out)
    }
}

/// Seed of a cell: hash of its settings (seed excluded), the master seed and
/// the repetition index.
pub fn cell_seed(cfg: &ExperimentConfig, master: u64, repetition: usize) -> Result<u64> {
    let mut v = serde_json::to_value(cfg)?;
    if let Some(map) = v.as_object_mut() {
        map.remove("seed");
        map.remove("out");
    }
    let text = format!("{master}:{repetition}:{v}");
    let hex = hash_hex(text.as_bytes());
    u64::from_str_radix(&hex[..16], 16).map_err(|e| Error::Domain(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub key: String,
    pub config: ExperimentConfig,
    pub row: Option<ResultRow>,
    pub error: Option<String>,
    /// Whether the failure was a refused starting point.
    #[serde(default)]
    pub guard: bool,
}

#[derive(Clone, Debug, Default)]
pub struct SweepReport {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<(String, String)>,
    /// Cells taken from an earlier, interrupted sweep.
    pub resumed: usize,
    pub executed: usize,
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    pub jobs: Option<usize>,
    pub oracle: Option<bool>,
    /// Stop after this many new cells, as if interrupted.
    pub limit: Option<usize>,
}

fn load_cell(path: &Path) -> Option<CellRecord> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

/// Runs every cell not already finished under `out`, then rewrites the
/// aggregate tables from all finished cells.
pub fn run_sweep(cfg: &SweepConfig, out: &Path, opts: &SweepOptions) -> Result<SweepReport> {
    let mut cells = cfg.cells()?;
    if let Some(oracle) = opts.oracle {
        cells.iter_mut().for_each(|c| c.oracle = oracle);
    }
    let cells_dir = out.join("cells");
    let traces_dir = out.join("traces");
    std::fs::create_dir_all(&cells_dir)?;

    let keyed: Vec<(String, ExperimentConfig)> =
        cells.into_iter().map(|c| Ok((config_key(&c)?, c))).collect::<Result<_>>()?;
    let pending: Vec<&(String, ExperimentConfig)> = keyed
        .iter()
        .filter(|(key, _)| {
            load_cell(&cells_dir.join(format!("{key}.json"))).is_none_or(|r| r.row.is_none())
        })
        .take(opts.limit.unwrap_or(usize::MAX))
        .collect();
    let resumed = keyed.len() - pending.len();

    let run_one = |(key, c): &(String, ExperimentConfig)| -> Result<()> {
        let record = match run_experiment(c) {
            Ok(outcome) => {
                outcome.trace.write_all(&traces_dir, key)?;
                CellRecord {
                    key: key.clone(),
                    config: c.clone(),
                    row: Some(outcome.row),
                    error: None,
                    guard: false,
                }
            }
            Err(e) => {
                log::warn!("cell {key} failed: {e}");
                CellRecord {
                    key: key.clone(),
                    config: c.clone(),
                    row: None,
                    guard: matches!(e, Error::Guard(_)),
                    error: Some(e.to_string()),
                }
            }
        };
        let tmp = cells_dir.join(format!("{key}.json.tmp"));
        std::fs::write(&tmp, serde_json::to_string_pretty(&record)?)?;
        std::fs::rename(&tmp, cells_dir.join(format!("{key}.json")))?;
        Ok(())
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| pending.par_iter().map(|c| run_one(c)).collect::<Result<Vec<()>>>())?;

    let mut report = SweepReport {
        resumed,
        executed: pending.len(),
        ..Default::default()
    };
    for (key, _) in &keyed {
        match load_cell(&cells_dir.join(format!("{key}.json"))) {
            Some(CellRecord { row: Some(row), .. }) => report.rows.push(row),
            Some(CellRecord { error: Some(e), .. }) => report.failures.push((key.clone(), e)),
            _ => report.failures.push((key.clone(), "not run".into())),
        }
    }
    write_rows(&out.join("results.csv"), &report.rows)?;
    let mut w = csv::Writer::from_path(out.join("failures.csv")).map_err(super::experiment::csv_error)?;
    w.write_record(["key", "error"]).map_err(super::experiment::csv_error)?;
    for (k, e) in &report.failures {
        w.write_record([k, e]).map_err(super::experiment::csv_error)?;
    }
    w.flush()?;
    Ok(report)
}
