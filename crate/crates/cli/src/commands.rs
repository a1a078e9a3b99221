//! One function per subcommand. Each returns the CSV body, the JSON summary
//! and per-suite verdicts; the caller owns naming and writing.

use coarse_hall::experiments::{self, config_hash, Cell, ExperimentTable, Summary};
use coarse_hall::geometry::RegionMask;
use coarse_hall::models::{ModelConfig, DEFAULT_BULK_MARGIN};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{typed, Failure};

pub struct Output {
    pub csv: Vec<u8>,
    pub json: Value,
    pub summaries: Vec<Summary>,
}

impl Output {
    pub fn all_pass(&self) -> bool {
        self.summaries.iter().all(|s| s.fail_count == 0)
    }
}

fn csv_bytes(t: &ExperimentTable) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    t.write_csv(&mut buf)?;
    Ok(buf)
}

fn single(t: ExperimentTable) -> Result<Output, Failure> {
    let summary = t.summary();
    Ok(Output {
        csv: csv_bytes(&t)?,
        json: json!({ "summaries": [&summary], "failed_rows": t.failures() }),
        summaries: vec![summary],
    })
}

const LABEL_COLUMNS: [&str; 8] = ["instance", "identity", "check", "kind", "case", "example", "inequality", "item"];

/// Long format over several tables: `suite,row,item,defect,pass`.
pub fn flatten(tables: &[ExperimentTable]) -> ExperimentTable {
    let mut out = ExperimentTable::new(
        "combined",
        &[("suite", ""), ("row", ""), ("item", ""), ("defect", ""), ("pass", "")],
    );
    for t in tables {
        for r in 0..t.rows.len() {
            let item = LABEL_COLUMNS
                .iter()
                .filter_map(|c| t.get(r, c))
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(":");
            out.push(vec![
                t.suite.as_str().into(),
                r.into(),
                item.into(),
                t.get(r, "defect").cloned().unwrap_or(Cell::Empty),
                t.get(r, "pass").cloned().unwrap_or(Cell::Empty),
            ]);
        }
    }
    out
}

fn combined(tables: Vec<ExperimentTable>) -> Result<Output, Failure> {
    let summaries: Vec<Summary> = tables.iter().map(ExperimentTable::summary).collect();
    let failed: Vec<Value> = tables
        .iter()
        .map(|t| json!({ "suite": t.suite, "rows": t.failures() }))
        .collect();
    Ok(Output {
        csv: csv_bytes(&flatten(&tables))?,
        json: json!({ "summaries": &summaries, "failed_rows": failed }),
        summaries,
    })
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ModelCommand {
    model: ModelConfig,
}

/// Site table and basic Hamiltonian checks.
pub fn model(config: &Value) -> Result<Output, Failure> {
    let cfg: ModelCommand = typed(config)?;
    let h = cfg.model.build()?;
    let cloud = h.cloud();
    let herm = h.as_operator().hermiticity_defect();
    let mut sites = ExperimentTable::new("sites", &[("site", ""), ("x", "spacing"), ("y", "spacing"), ("boundary_distance", "spacing")]);
    for (i, p) in cloud.sites().iter().enumerate() {
        sites.push(vec![i.into(), p[0].into(), p[1].into(), cloud.boundary_distance(i).into()]);
    }
    let m = h.matrix();
    let n = cloud.len();
    let bonds = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| m[(i, j)].norm() > 0.0).count();
    let mut checks = ExperimentTable::new("model", &[("check", ""), ("value", ""), ("defect", ""), ("pass", "")]);
    checks.push(vec!["hermiticity".into(), herm.into(), herm.into(), (herm <= 1e-12).into()]);
    let summary = checks.summary();
    Ok(Output {
        csv: csv_bytes(&sites)?,
        json: json!({
            "summaries": [&summary],
            "sites": n,
            "bonds": bonds,
            "bounding_box": cloud.bounding_box(),
            "parameters": h.params(),
        }),
        summaries: vec![summary],
    })
}

fn default_threshold() -> f64 {
    0.2
}

fn default_margin() -> f64 {
    DEFAULT_BULK_MARGIN
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SpectrumCommand {
    model: ModelConfig,
    #[serde(default = "default_threshold")]
    gap_threshold: f64,
    #[serde(default = "default_margin")]
    bulk_margin: f64,
}

/// Eigenvalues with their bulk weight, and the detected gaps.
pub fn spectrum(config: &Value) -> Result<Output, Failure> {
    let cfg: SpectrumCommand = typed(config)?;
    let h = cfg.model.build()?;
    let eig = h.eigensystem()?;
    let cloud = h.cloud();
    let bulk = RegionMask::from_bits(
        cloud,
        (0..cloud.len()).map(|i| cloud.boundary_distance(i) >= cfg.bulk_margin).collect(),
    )?;
    let weights = eig.weights_on(&bulk);
    let mut t = ExperimentTable::new("spectrum", &[("index", ""), ("energy", "t"), ("bulk_weight", "")]);
    for (k, (e, w)) in eig.values().iter().zip(&weights).enumerate() {
        t.push(vec![k.into(), (*e).into(), (*w).into()]);
    }
    let gaps = eig.spectrum(cfg.gap_threshold).gaps;
    let bulk_gaps = eig.bulk_gaps(cfg.bulk_margin, cfg.gap_threshold);
    let n = eig.values().len() as f64;
    let fillings: Vec<f64> = bulk_gaps
        .iter()
        .map(|g| eig.values().partition_point(|v| *v < eig.fermi_level_in(g)) as f64 / n)
        .collect();
    let summary = t.summary();
    Ok(Output {
        csv: csv_bytes(&t)?,
        json: json!({
            "summaries": [&summary],
            "spectral_radius": eig.spectral_radius(),
            "gaps": gaps,
            "bulk_gaps": bulk_gaps,
            "bulk_gap_fillings": fillings,
        }),
        summaries: vec![summary],
    })
}

/// Dispatches on the optional `experiment` key (default `quantization`).
pub fn pairing(config: &Value, seed: u64) -> Result<Output, Failure> {
    let mut body = config.clone();
    let kind = match body.as_object_mut().and_then(|m| m.remove("experiment")) {
        None => "quantization".to_string(),
        Some(Value::String(s)) => s,
        Some(other) => return Err(Failure::Usage(format!("config key `experiment`: expected a string, got {other}"))),
    };
    match kind.as_str() {
        "quantization" => single(experiments::quantization_experiment(&typed(&body)?, seed)?),
        "additivity" => single(experiments::additivity_experiment(&typed(&body)?)?),
        "convergence" => single(experiments::convergence_study(&typed(&body)?)?),
        "seminorm-stability" => single(experiments::seminorm_stability(&typed(&body)?)?),
        "cobordism" => single(experiments::windowed_cobordism(&typed(&body)?)?),
        "triviality" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Triviality {
                #[serde(default)]
                config: Option<experiments::TrivialityConfig>,
                #[serde(default)]
                cases: Option<Vec<experiments::TrivialCase>>,
            }
            let t: Triviality = typed(&body)?;
            let cases = t.cases.unwrap_or_else(|| experiments::TrivialCase::ALL.to_vec());
            single(experiments::triviality_suite(&t.config.unwrap_or_default(), &cases)?)
        }
        other => Err(Failure::Usage(format!(
            "config key `experiment`: unknown experiment {other:?} (expected quantization, additivity, convergence, triviality, seminorm-stability or cobordism)"
        ))),
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SizedCount {
    count: usize,
    sizes: (usize, usize),
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct PhhSpec {
    count: usize,
    dim: usize,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct VerifyCommand {
    identity: SizedCount,
    determinant: SizedCount,
    phh: PhhSpec,
    negative_control_eps: f64,
    scaling_eps: Vec<f64>,
}

pub const DEFAULT_VERIFY: &str = include_str!("../configs/verify-default.json");

/// Exact identities, determinant identities and the idempotency controls.
pub fn verify(config: &Value, seed: u64) -> Result<Output, Failure> {
    let cfg: VerifyCommand = typed(config)?;
    let tables = vec![
        experiments::random_identity_suite(cfg.identity.count, seed, cfg.identity.sizes)?,
        experiments::negative_control(seed, cfg.negative_control_eps)?,
        experiments::perturbation_scaling(seed, &cfg.scaling_eps)?,
        experiments::random_determinant_suite(cfg.determinant.count, seed, cfg.determinant.sizes)?,
        experiments::phh_suite(cfg.phh.count, cfg.phh.dim, seed)?,
    ];
    combined(tables)
}

/// Block-norm decay profile (CSV) and slope check (JSON).
pub fn decay(config: &Value) -> Result<Output, Failure> {
    let cfg: experiments::DecayConfig = typed(config)?;
    let ev = experiments::decay_experiment(&cfg)?;
    let mut csv = Vec::new();
    experiments::write_decay_csv(&ev.profile, &mut csv)?;
    let summary = ev.table.summary();
    Ok(Output {
        csv,
        json: json!({ "summaries": [&summary], "slope": ev.slope, "decay_length": ev.slope.filter(|s| *s < 0.0).map(|s| -1.0 / s) }),
        summaries: vec![summary],
    })
}

fn default_trials() -> usize {
    100
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct GeometryCommand {
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default = "default_true")]
    excisiveness: bool,
}

fn default_true() -> bool {
    true
}

/// Thickening laws, partition round trip and excisiveness verdicts.
pub fn geometry(config: &Value, seed: u64) -> Result<Output, Failure> {
    let cfg: GeometryCommand = typed(config)?;
    let mut tables = vec![experiments::geometry_suite(cfg.trials, seed)?];
    if cfg.excisiveness {
        tables.push(experiments::excisiveness_examples()?);
    }
    combined(tables)
}

/// Hash identifying an artifact: command, effective config and seed.
pub fn run_hash(command: &str, config: &Value, seed: u64) -> String {
    config_hash(&(command, config, seed))
}

/// Default config for commands that can run without `--config`.
pub fn default_config(command: &str) -> Option<Value> {
    match command {
        "verify" => Some(serde_json::from_str(DEFAULT_VERIFY).expect("bundled config parses")),
        "geometry" => Some(json!({})),
        _ => None,
    }
}
