//! Per-step run records and their on-disk forms.
//!
//! Files written for a run `name`:
//! - `name.jsonl`: one [`StepRecord`] per line, in step order.
//! - `name.meta.json`: the [`TraceMeta`] block (method, configuration echo, seeds).
//! - `name.csv`: flat summary with columns
//!   `step,t,s,energy,energy_after_predictor,grad_norm,eps_norm,exact_ground,error,wall_time_s,evaluations,cg_iterations,corrector_iterations,flags`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// The interpolation point this step lands on.
    pub t: f64,
    pub s: f64,
    pub theta_before: Vec<f64>,
    pub theta_after_predictor: Vec<f64>,
    pub theta_after_corrector: Vec<f64>,
    /// Parameters carried into the next step.
    pub theta_out: Vec<f64>,
    /// `E(theta_out, t)`.
    pub energy: f64,
    pub energy_after_predictor: f64,
    /// Infinity norm of `∇E(theta_out, t)`.
    pub grad_norm: f64,
    pub eps_norm: f64,
    pub exact_ground: Option<f64>,
    pub error: Option<f64>,
    pub wall_time_s: f64,
    pub flags: Vec<String>,
    pub cg_iterations: usize,
    pub corrector_iterations: usize,
    /// Circuit simulations spent in this step.
    pub evaluations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub method: String,
    pub predictor: String,
    pub corrector: String,
    pub ordering: String,
    pub schedule: String,
    pub steps: usize,
    pub n_params: usize,
    pub seed: u64,
    /// Seeds handed to the corrector, one per step.
    pub corrector_seeds: Vec<u64>,
    pub theta_initial: Vec<f64>,
    pub config: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub meta: TraceMeta,
    pub records: Vec<StepRecord>,
}

impl RunTrace {
    pub fn final_record(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    /// Copy with wall-clock fields zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> RunTrace {
        let mut t = self.clone();
        t.records.iter_mut().for_each(|r| r.wall_time_s = 0.0);
        t
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for r in &self.records {
            serde_json::to_writer(&mut f, r)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<StepRecord>> {
        let f = BufReader::new(std::fs::File::open(path)?);
        let mut out = Vec::new();
        for line in f.lines() {
            let line = line?;
            if !line.trim().is_empty() {
                out.push(serde_json::from_str(&line)?);
            }
        }
        Ok(out)
    }

    pub fn write_meta(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.meta)?)?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            f,
            "step,t,s,energy,energy_after_predictor,grad_norm,eps_norm,exact_ground,error,wall_time_s,evaluations,cg_iterations,corrector_iterations,flags"
        )?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.records {
            writeln!(
                f,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.step,
                r.t,
                r.s,
                r.energy,
                r.energy_after_predictor,
                r.grad_norm,
                r.eps_norm,
                opt(r.exact_ground),
                opt(r.error),
                r.wall_time_s,
                r.evaluations,
                r.cg_iterations,
                r.corrector_iterations,
                r.flags.join(";")
            )?;
        }
        f.flush()?;
        Ok(())
    }

    /// Writes `dir/name.jsonl`, `dir/name.meta.json` and `dir/name.csv`.
    pub fn write_all(&self, dir: impl AsRef<Path>, name: &str) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.write_jsonl(dir.join(format!("{name}.jsonl")))?;
        self.write_meta(dir.join(format!("{name}.meta.json")))?;
        self.write_csv(dir.join(format!("{name}.csv")))
    }
}
