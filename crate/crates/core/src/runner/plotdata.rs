//! Long-format tables for plotting, derived from a results table.
//!
//! | kind                 | file                        | columns                                |
//! |----------------------|-----------------------------|----------------------------------------|
//! | `dissociation_curve` | `dissociation_curve.csv`    | `r,method,E_final,E_FCI,abs_error`     |
//! | `heatmap`            | `heatmap_<initial>.csv`     | `layers,r,error_mha`                   |
//! | `boxplot_summary`    | `boxplot_summary.csv`       | `regime,method,median,q1,q3`           |
//!
//! Where several rows share a plotted point (repetitions, other axes), the
//! median is reported. Box-plot statistics are over `abs_error` in hartree.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::experiment::{csv_error, ResultRow};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    DissociationCurve,
    Heatmap,
    BoxplotSummary,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [PlotKind::DissociationCurve, PlotKind::Heatmap, PlotKind::BoxplotSummary];

    pub fn name(&self) -> &'static str {
        match self {
            PlotKind::DissociationCurve => "dissociation_curve",
            PlotKind::Heatmap => "heatmap",
            PlotKind::BoxplotSummary => "boxplot_summary",
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown plot kind '{s}'")))
    }
}

/// Bond-length regimes, half-open in Å.
pub const REGIMES: [(&str, f64, f64); 3] = [
    ("near_equilibrium", 1.326, 2.0),
    ("intermediate", 2.0, 2.7),
    ("far_dissociation", 2.7, 3.4),
];

pub fn regime_of(r: f64) -> Option<&'static str> {
    REGIMES.iter().find(|(_, lo, hi)| r >= *lo && r < *hi).map(|(name, _, _)| *name)
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

/// Total-order key for grouping on floats.
fn fkey(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

fn with_r(rows: &[ResultRow]) -> Result<Vec<(&ResultRow, f64)>> {
    let v: Vec<_> = rows.iter().filter_map(|r| r.bond_length.map(|b| (r, b))).collect();
    if v.is_empty() {
        return Err(Error::Config("no rows carry a bond length".into()));
    }
    Ok(v)
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(csv_error)
}

/// Writes the tables of `kind` into `dir` and returns the files written.
pub fn emit_plotdata(rows: &[ResultRow], kind: PlotKind, dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::Config("results table is empty".into()));
    }
    std::fs::create_dir_all(dir)?;
    match kind {
        PlotKind::DissociationCurve => {
            let mut groups: BTreeMap<(String, i64), (f64, Vec<f64>, Vec<f64>)> = BTreeMap::new();
            for (row, r) in with_r(rows)? {
                let g = groups.entry((row.method.clone(), fkey(r))).or_insert((r, vec![], vec![]));
                g.1.push(row.e_final);
                g.2.push(row.e_fci);
            }
            let path = dir.join("dissociation_curve.csv");
            let mut w = writer(&path)?;
            w.write_record(["r", "method", "E_final", "E_FCI", "abs_error"]).map_err(csv_error)?;
            for ((method, _), (r, finals, fcis)) in groups {
                let e = median(finals);
                let fci = median(fcis);
                w.write_record([r.to_string(), method, e.to_string(), fci.to_string(), (e - fci).abs().to_string()])
                    .map_err(csv_error)?;
            }
            w.flush()?;
            Ok(vec![path])
        }
        PlotKind::Heatmap => {
            let mut by_init: BTreeMap<String, BTreeMap<(usize, i64), (f64, Vec<f64>)>> = BTreeMap::new();
            for (row, r) in with_r(rows)? {
                let Some(layers) = row.layers else { continue };
                by_init
                    .entry(row.initial.clone())
                    .or_default()
                    .entry((layers, fkey(r)))
                    .or_insert((r, vec![]))
                    .1
                    .push(row.abs_error * 1e3);
            }
            if by_init.is_empty() {
                return Err(Error::Config("no HEA rows for a heatmap".into()));
            }
            let mut files = Vec::new();
            for (init, cells) in by_init {
                let path = dir.join(format!("heatmap_{init}.csv"));
                let mut w = writer(&path)?;
                w.write_record(["layers", "r", "error_mha"]).map_err(csv_error)?;
                for ((layers, _), (r, errs)) in cells {
                    w.write_record([layers.to_string(), r.to_string(), median(errs).to_string()])
                        .map_err(csv_error)?;
                }
                w.flush()?;
                files.push(path);
            }
            Ok(files)
        }
        PlotKind::BoxplotSummary => {
            let mut groups: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
            for (row, r) in with_r(rows)? {
                if let Some(idx) = REGIMES.iter().position(|(_, lo, hi)| r >= *lo && r < *hi) {
                    groups.entry((idx, row.method.clone())).or_default().push(row.abs_error);
                }
            }
            let path = dir.join("boxplot_summary.csv");
            let mut w = writer(&path)?;
            w.write_record(["regime", "method", "median", "q1", "q3"]).map_err(csv_error)?;
            for ((idx, method), mut errs) in groups {
                errs.sort_by(f64::total_cmp);
                w.write_record([
                    REGIMES[idx].0.to_string(),
                    method,
                    quantile(&errs, 0.5).to_string(),
                    quantile(&errs, 0.25).to_string(),
                    quantile(&errs, 0.75).to_string(),
                ])
                .map_err(csv_error)?;
            }
            w.flush()?;
            Ok(vec![path])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&[7.0], 0.75), 7.0);
    }

    #[test]
    fn regimes_are_half_open() {
        assert_eq!(regime_of(1.326), Some("near_equilibrium"));
        assert_eq!(regime_of(2.0), Some("intermediate"));
        assert_eq!(regime_of(2.7), Some("far_dissociation"));
        assert_eq!(regime_of(3.3), Some("far_dissociation"));
        assert_eq!(regime_of(3.4), None);
        assert_eq!(regime_of(1.0), None);
    }

    #[test]
    fn kinds_parse() {
        for k in PlotKind::ALL {
            assert_eq!(k.name().parse::<PlotKind>().unwrap(), k);
        }
        assert!("scatter".parse::<PlotKind>().is_err());
    }
}
