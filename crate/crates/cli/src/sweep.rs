//! Cartesian parameter sweeps over the windowed conductance.
//!
//! Each grid point runs as an independent job. Its rows go to
//! `<out>/sweep-state/NNNNNN.csv`, written to a temporary file and renamed,
//! so a finished point survives an interrupted run and is skipped on resume.
//! The state directory records the run hash; resuming with a different
//! config or seed aborts instead of mixing results.

use std::path::{Path, PathBuf};

use coarse_hall::experiments::{
    quantization_experiment, Cell, ExperimentTable, FermiLevel, QuantizationConfig, Summary,
    QUANTIZATION_COLUMNS,
};
use coarse_hall::models::{Flux, ModelConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::commands::Output;
use crate::config::{typed, Failure};

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub flux: Option<Vec<Flux>>,
    #[serde(default)]
    pub energy: Option<Vec<f64>>,
    #[serde(default)]
    pub r: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<Vec<u64>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Values for every axis the grid leaves out.
    pub base: QuantizationConfig,
    #[serde(default)]
    pub grid: Grid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub flux: Option<Flux>,
    pub energy: Option<f64>,
    pub r: Option<f64>,
    pub seed: Option<u64>,
}

fn axis<T: Clone>(values: &Option<Vec<T>>) -> Vec<Option<T>> {
    match values {
        None => vec![None],
        Some(v) => v.iter().cloned().map(Some).collect(),
    }
}

/// Grid points in row-major order (flux, energy, r, seed). A grid with no
/// axes, or with an empty axis, has no points.
pub fn points(grid: &Grid) -> Vec<Point> {
    if grid.flux.is_none() && grid.energy.is_none() && grid.r.is_none() && grid.seed.is_none() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for flux in axis(&grid.flux) {
        for energy in axis(&grid.energy) {
            for r in axis(&grid.r) {
                for seed in axis(&grid.seed) {
                    out.push(Point { flux, energy, r, seed });
                }
            }
        }
    }
    out
}

fn point_config(base: &QuantizationConfig, p: &Point) -> Result<QuantizationConfig, Failure> {
    let mut cfg = base.clone();
    if let Some(f) = p.flux {
        match &mut cfg.model {
            ModelConfig::Hofstadter { flux, .. } => *flux = f,
            _ => return Err(Failure::Usage("config key `grid.flux`: the base model is not a Hofstadter model".into())),
        }
    }
    if let Some(s) = p.seed {
        match &mut cfg.model {
            ModelConfig::Hofstadter { disorder_seed, .. } | ModelConfig::Amorphous { disorder_seed, .. } => *disorder_seed = s,
            ModelConfig::Checkerboard { .. } => {}
        }
    }
    if let Some(e) = p.energy {
        cfg.levels = vec![FermiLevel::Energy(e)];
    }
    if let Some(r) = p.r {
        cfg.radii = vec![r];
    }
    Ok(cfg)
}

const PREFIX: [(&str, &str); 3] = [("point", ""), ("flux", ""), ("grid_seed", "")];

fn schema() -> Vec<(&'static str, &'static str)> {
    PREFIX.iter().chain(QUANTIZATION_COLUMNS.iter()).copied().collect()
}

fn run_point(index: usize, p: &Point, base: &QuantizationConfig, seed: u64) -> Result<ExperimentTable, Failure> {
    let cfg = point_config(base, p)?;
    let t = quantization_experiment(&cfg, p.seed.unwrap_or(seed))?;
    let mut out = ExperimentTable::new("sweep", &schema());
    let flux: Cell = p.flux.map(|f| format!("{}/{}", f.p, f.q)).into();
    for row in t.rows {
        let mut full = vec![index.into(), flux.clone(), p.seed.into()];
        full.extend(row);
        out.push(full);
    }
    Ok(out)
}

/// Body rows of a point table, without header.
fn body_bytes(t: &ExperimentTable) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    t.write_csv(&mut buf)?;
    let start = buf.iter().position(|b| *b == b'\n').map_or(buf.len(), |i| i + 1);
    Ok(buf[start..].to_vec())
}

fn marker(state: &Path, index: usize) -> PathBuf {
    state.join(format!("{index:06}.csv"))
}

const STATE_DIR: &str = "sweep-state";
const HASH_FILE: &str = "run-hash";

/// Checks or creates the resume state; errors if it belongs to another run.
fn prepare_state(out: &Path, hash: &str) -> Result<PathBuf, Failure> {
    let state = out.join(STATE_DIR);
    let hash_file = state.join(HASH_FILE);
    if state.exists() {
        let recorded = std::fs::read_to_string(&hash_file).unwrap_or_default();
        if recorded.trim() != hash {
            return Err(Failure::Usage(format!(
                "{} holds a sweep with hash {:?}, not {hash}; remove it or use a fresh output directory",
                state.display(),
                recorded.trim()
            )));
        }
    } else {
        std::fs::create_dir_all(&state)?;
        std::fs::write(&hash_file, hash)?;
    }
    Ok(state)
}

pub fn validate(config: &Value) -> Result<(SweepConfig, Vec<Point>), Failure> {
    let cfg: SweepConfig = typed(config)?;
    let pts = points(&cfg.grid);
    for p in &pts {
        point_config(&cfg.base, p)?;
    }
    let finite = |v: &Option<Vec<f64>>| v.iter().flatten().all(|x| x.is_finite());
    if !finite(&cfg.grid.energy) || !finite(&cfg.grid.r) {
        return Err(Failure::Usage("config key `grid`: axis values must be finite".into()));
    }
    Ok((cfg, pts))
}

/// Runs the pending points and assembles the table in grid order.
pub fn sweep(config: &Value, seed: u64, out: &Path, hash: &str) -> Result<Output, Failure> {
    let (cfg, pts) = validate(config)?;
    let state = prepare_state(out, hash)?;
    let results: Vec<(usize, Option<String>)> = pts
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let done = marker(&state, i);
            if done.exists() {
                return (i, None);
            }
            let outcome = run_point(i, p, &cfg.base, seed).and_then(|t| {
                let tmp = state.join(format!("{i:06}.tmp"));
                std::fs::write(&tmp, body_bytes(&t)?)?;
                std::fs::rename(&tmp, &done)?;
                Ok(())
            });
            (i, outcome.err().map(|e| e.to_string()))
        })
        .collect();
    let failed: Vec<Value> = results
        .iter()
        .filter_map(|(i, e)| e.as_ref().map(|e| json!({ "point": i, "error": e })))
        .collect();

    let header = ExperimentTable::new("sweep", &schema());
    let mut csv = Vec::new();
    header.write_csv(&mut csv)?;
    let (mut pass, mut fail, mut worst) = (0usize, 0usize, 0.0f64);
    let pass_col = schema().iter().position(|c| c.0 == "pass").expect("schema has pass");
    let defect_col = schema().iter().position(|c| c.0 == "defect").expect("schema has defect");
    for i in 0..pts.len() {
        let Ok(bytes) = std::fs::read(marker(&state, i)) else { continue };
        let mut reader = csv_reader(&bytes);
        for record in reader.records() {
            let record = record.map_err(|e| Failure::Numerical(format!("corrupt sweep state for point {i}: {e}")))?;
            match record.get(pass_col) {
                Some("true") => pass += 1,
                Some("false") => fail += 1,
                _ => {}
            }
            if let Some(d) = record.get(defect_col).and_then(|d| d.parse::<f64>().ok()) {
                worst = worst.max(d);
            }
        }
        csv.extend_from_slice(&bytes);
    }
    if failed.is_empty() {
        std::fs::remove_dir_all(&state)?;
    }
    let summary = Summary {
        suite: "sweep".into(),
        pass_count: pass,
        fail_count: fail + failed.len(),
        worst_defect: worst,
    };
    Ok(Output {
        csv,
        json: json!({ "summaries": [&summary], "points": pts.len(), "failed_points": failed }),
        summaries: vec![summary],
    })
}

fn csv_reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(false).from_reader(bytes)
}
