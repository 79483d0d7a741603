//! Cartesian-product sweeps over configuration fields.
//!
//! A grid file lists value arrays under `[grid]`, keyed by dotted paths into
//! the run configuration:
//!
//! ```toml
//! cap = 100
//! [grid]
//! "dist.eta_inner" = [0.01, 0.1]
//! "dist.lambda0" = [0.1, 0.5]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::RunConfig;
use super::runner::execute;

pub const DEFAULT_GRID_CAP: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<toml::Value>>,
}

fn default_cap() -> usize {
    DEFAULT_GRID_CAP
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            cap: DEFAULT_GRID_CAP,
            grid: BTreeMap::new(),
        }
    }
}

impl GridSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Number of runs: the product of list lengths, or 1 for an empty grid.
    pub fn size(&self) -> usize {
        self.grid.values().map(Vec::len).product()
    }

    /// Learning rates, SAM radii and pulling strengths of the reference
    /// hyperparameter search, applied to the `[dist]` table: 6 x 3 x 4 = 72.
    pub fn reference_lsam_grid() -> Self {
        let f = |v: &[f64]| v.iter().map(|x| toml::Value::Float(*x)).collect::<Vec<_>>();
        let mut grid = BTreeMap::new();
        grid.insert("dist.eta_inner".to_string(), f(&[0.01, 0.02, 0.05, 0.1, 0.2, 0.3]));
        grid.insert("dist.rho".to_string(), f(&[0.1, 0.05, 0.01]));
        grid.insert("dist.lambda0".to_string(), f(&[0.1, 0.2, 0.5, 0.9]));
        GridSpec {
            cap: DEFAULT_GRID_CAP,
            grid,
        }
    }

    /// Every combination as `(path, value)` assignments, in lexicographic
    /// order of the keys with the last key varying fastest.
    pub fn points(&self) -> Result<Vec<Vec<(String, toml::Value)>>> {
        let size = self.size();
        if size > self.cap {
            return Err(Error::GridTooLarge { size, cap: self.cap });
        }
        if let Some((k, _)) = self.grid.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::Config(format!("grid.{k}: value list is empty")));
        }
        let mut points: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
        for (key, values) in &self.grid {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push((key.clone(), v.clone()));
                        q
                    })
                })
                .collect();
        }
        Ok(points)
    }
}

fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("grid key '{path}': '{part}' is not inside a table")))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .get_mut(*part)
            .ok_or_else(|| Error::Config(format!("grid key '{path}': no table '{part}' in the base config")))?;
    }
    Ok(())
}

/// Base config with the assignments applied; the result is re-validated.
pub fn apply(base: &RunConfig, assignments: &[(String, toml::Value)], index: usize) -> Result<RunConfig> {
    let mut value = toml::Value::try_from(base).map_err(|e| Error::Parse(e.to_string()))?;
    for (k, v) in assignments {
        set_path(&mut value, k, v.clone())?;
    }
    let mut cfg: RunConfig = value
        .try_into()
        .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    if !assignments.is_empty() {
        cfg.name = format!("{}-{index:03}", base.name);
    }
    Ok(cfg)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub rank: usize,
    pub name: String,
    pub assignments: BTreeMap<String, String>,
    /// Mean over seeds of the final objective value.
    pub final_f: f64,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub base: String,
    pub runs: usize,
    pub rows: Vec<SweepRow>,
}

/// Run every grid point and write `sweep_summary.json` ranked by final
/// objective value (ascending, failed runs last).
pub fn run_sweep(base: &RunConfig, spec: &GridSpec) -> Result<SweepSummary> {
    base.validate()?;
    let points = spec.points()?;
    let configs: Vec<RunConfig> = points
        .iter()
        .enumerate()
        .map(|(i, p)| apply(base, p, i))
        .collect::<Result<_>>()?;
    for c in &configs {
        c.validate()?;
    }
    let mut rows = Vec::with_capacity(configs.len());
    for (cfg, p) in configs.iter().zip(&points) {
        let outcomes = execute(cfg)?;
        let finals: Vec<f64> = outcomes.iter().filter_map(|o| o.summary.final_f).collect();
        let final_f = if finals.is_empty() {
            f64::NAN
        } else {
            finals.iter().sum::<f64>() / finals.len() as f64
        };
        rows.push(SweepRow {
            rank: 0,
            name: cfg.name.clone(),
            assignments: p.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
            final_f,
            files: outcomes.iter().map(|o| o.csv_path.display().to_string()).collect(),
        });
    }
    rows.sort_by(|a, b| match (a.final_f.is_nan(), b.final_f.is_nan()) {
        (false, false) => a.final_f.total_cmp(&b.final_f),
        (x, y) => x.cmp(&y),
    });
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    let summary = SweepSummary {
        base: base.name.clone(),
        runs: rows.len(),
        rows,
    };
    let path = base.output_dir().join("sweep_summary.json");
    std::fs::create_dir_all(base.output_dir())?;
    std::fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_grid_has_72_points() {
        assert_eq!(GridSpec::reference_lsam_grid().points().unwrap().len(), 72);
    }

    #[test]
    fn empty_grid_is_base_only() {
        let g = GridSpec::default();
        assert_eq!(g.points().unwrap(), vec![Vec::new()]);
    }

    #[test]
    fn cap_is_enforced() {
        let mut g = GridSpec::reference_lsam_grid();
        g.cap = 10;
        assert!(matches!(g.points(), Err(Error::GridTooLarge { size: 72, cap: 10 })));
    }
}
