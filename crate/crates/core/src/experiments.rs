//! Verification suites and quantization studies.
//!
//! Every suite returns an [`ExperimentTable`]: an ordered schema, one row per
//! check, and a `pass` column that is the machine-checkable verdict for that
//! row. Rows are computed in parallel but always emitted in a fixed order, so
//! the CSV output is a pure function of the inputs and the seed.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;

use faer::Mat;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::geometry::{
    build_poisson_cloud, build_square_lattice, build_tiling, excisiveness_profile, thicken, Cloud,
    ExcisivenessVerdict, Point, RegionMask, SiteCloud,
};
use crate::linalg::{self, c64, CMat};
use crate::models::{Eigensystem, Flux, Hamiltonian, ModelConfig, DEFAULT_BULK_MARGIN};
use crate::operators::{
    compress, decay_profile_from, decay_slope, generalized_commutator,
    generalized_commutator_trace, BlockNorms, DecayBin, SeminormKind, SiteOperator,
};
use crate::pairing::{
    bloch_bands_below, bulk_conductance, commutator_trace, fhs_chern_oracle, norm_bound,
    two_current_sum,
};
use crate::partitions::{
    coordinate_halfspaces, elementary_cobordism, halfspaces_to_partition, partition_to_halfspaces,
    sector_partition, bulk_window, HalfSpacePair, QPartition,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative tolerance of the exact operator identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Absolute tolerance of the determinant identities.
pub const DETERMINANT_TOL: f64 = 1e-8;
/// Idempotency defect above which idempotency-gated identities are not expected to hold.
pub const GATE_TOL: f64 = 1e-9;
/// Largest dimension accepted by the determinant suite.
pub const DETERMINANT_MAX_SITES: usize = 200;

// ---------------------------------------------------------------------------
// Tables

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v:e}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Bool(b) => write!(f, "{b}"),
            Cell::Empty => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    /// Empty for dimensionless quantities.
    pub unit: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentTable {
    pub suite: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: Metadata,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub suite: String,
    pub pass_count: usize,
    pub fail_count: usize,
    /// Largest finite value of the `defect` column, 0 when there is none.
    pub worst_defect: f64,
}

/// SHA-256 of the JSON encoding of a config, hex encoded.
pub fn config_hash<T: Serialize + ?Sized>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("configs serialize");
    hex::encode(Sha256::digest(&bytes))
}

impl ExperimentTable {
    /// Empty table with `(name, unit)` columns.
    pub fn new(suite: &str, columns: &[(&str, &str)]) -> Self {
        ExperimentTable {
            suite: suite.to_string(),
            columns: columns
                .iter()
                .map(|(n, u)| Column {
                    name: n.to_string(),
                    unit: u.to_string(),
                })
                .collect(),
            rows: Vec::new(),
            metadata: Metadata {
                config_hash: String::new(),
                seed: 0,
                version: VERSION.to_string(),
            },
        }
    }

    pub fn with_metadata(mut self, config_hash: String, seed: u64) -> Self {
        self.metadata.config_hash = config_hash;
        self.metadata.seed = seed;
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row does not match the {} schema", self.suite);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn get(&self, row: usize, name: &str) -> Option<&Cell> {
        self.column(name).map(|c| &self.rows[row][c])
    }

    pub fn float(&self, row: usize, name: &str) -> Option<f64> {
        match self.get(row, name)? {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn text(&self, row: usize, name: &str) -> Option<&str> {
        match self.get(row, name)? {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Verdict of a row; `None` for rows without one (skipped rows).
    pub fn passed(&self, row: usize) -> Option<bool> {
        match self.get(row, "pass")? {
            Cell::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Indices of rows whose verdict is `false`.
    pub fn failures(&self) -> Vec<usize> {
        (0..self.rows.len()).filter(|r| self.passed(*r) == Some(false)).collect()
    }

    pub fn all_pass(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn summary(&self) -> Summary {
        let verdicts: Vec<bool> = (0..self.rows.len()).filter_map(|r| self.passed(r)).collect();
        let worst_defect = (0..self.rows.len())
            .filter_map(|r| self.float(r, "defect"))
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max);
        Summary {
            suite: self.suite.clone(),
            pass_count: verdicts.iter().filter(|v| **v).count(),
            fail_count: verdicts.iter().filter(|v| !**v).count(),
            worst_defect,
        }
    }

    /// Header of column names, then one record per row.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Appends the rows of `other`, which must have the same schema.
    pub fn extend(&mut self, other: ExperimentTable) -> Result<()> {
        if other.columns != self.columns {
            return Err(Error::arg(format!(
                "cannot merge {} rows into {}: schemas differ",
                other.suite, self.suite
            )));
        }
        self.rows.extend(other.rows);
        Ok(())
    }
}

const CHECK_COLUMNS: [(&str, &str); 5] = [
    ("check", ""),
    ("value", ""),
    ("threshold", ""),
    ("defect", ""),
    ("pass", ""),
];

fn check_row(check: &str, value: f64, threshold: f64, defect: f64, pass: bool) -> Vec<Cell> {
    vec![check.into(), value.into(), threshold.into(), defect.into(), pass.into()]
}

// ---------------------------------------------------------------------------
// Random instances

fn random_cloud<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<Cloud> {
    let side = (n as f64).sqrt();
    let sites: Vec<Point> = (0..n)
        .map(|_| [side * rng.random::<f64>(), side * rng.random::<f64>()])
        .collect();
    Ok(std::sync::Arc::new(SiteCloud::new("random", sites)?))
}

fn random_diagonal_pattern<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> Vec<bool> {
    let mut d: Vec<bool> = (0..n).map(|i| i < rank).collect();
    d.shuffle(rng);
    d
}

/// `Q D Q⁻¹` with `D` a random 0/1 diagonal of the given rank and
/// `Q = U diag(s) V`, `s ∈ [1, 10]`, so `cond(Q) ≤ 10`.
pub fn random_idempotent<R: Rng + ?Sized>(cloud: &Cloud, rank: usize, rng: &mut R) -> Result<SiteOperator> {
    let n = cloud.len();
    if rank > n {
        return Err(Error::arg("rank exceeds the dimension"));
    }
    let u = linalg::random_unitary(rng, n);
    let v = linalg::random_unitary(rng, n);
    let s: Vec<f64> = (0..n).map(|_| 1.0 + 9.0 * rng.random::<f64>()).collect();
    let d = random_diagonal_pattern(rng, n, rank);
    let us = Mat::from_fn(n, n, |i, j| u[(i, j)] * s[j]);
    // Q D Q⁻¹ = U S V D V† S⁻¹ U†
    let vd = Mat::from_fn(n, n, |i, j| if d[j] { v[(i, j)] } else { c64::new(0.0, 0.0) });
    let vs = Mat::from_fn(n, n, |i, j| v[(j, i)].conj() / s[j]);
    let qinv = &vs * u.adjoint();
    let p = &(&us * &vd) * &qinv;
    SiteOperator::new(cloud, p)
}

/// `U D U†` for a random unitary `U`.
pub fn random_hermitian_idempotent<R: Rng + ?Sized>(
    cloud: &Cloud,
    rank: usize,
    rng: &mut R,
) -> Result<SiteOperator> {
    let n = cloud.len();
    if rank > n {
        return Err(Error::arg("rank exceeds the dimension"));
    }
    let u = linalg::random_unitary(rng, n);
    let d = random_diagonal_pattern(rng, n, rank);
    let ud = Mat::from_fn(n, n, |i, j| if d[j] { u[(i, j)] } else { c64::new(0.0, 0.0) });
    let p = &ud * u.adjoint();
    // Symmetrize away rounding so Hermiticity is exact.
    let p = Mat::from_fn(n, n, |i, j| (p[(i, j)] + p[(j, i)].conj()) * 0.5);
    SiteOperator::new(cloud, p)
}

/// Each site lands in one of three parts uniformly.
pub fn random_partition<R: Rng + ?Sized>(cloud: &Cloud, rng: &mut R) -> Result<QPartition> {
    let labels: Vec<usize> = (0..cloud.len()).map(|_| rng.random_range(0..3)).collect();
    let parts = (0..3)
        .map(|k| RegionMask::from_bits(cloud, labels.iter().map(|l| *l == k).collect()))
        .collect::<Result<Vec<_>>>()?;
    QPartition::new(parts)
}

pub fn random_mask<R: Rng + ?Sized>(cloud: &Cloud, rng: &mut R) -> Result<RegionMask> {
    RegionMask::from_bits(cloud, (0..cloud.len()).map(|_| rng.random_bool(0.5)).collect())
}

pub fn random_halfspaces<R: Rng + ?Sized>(cloud: &Cloud, rng: &mut R) -> Result<HalfSpacePair> {
    HalfSpacePair::new(random_mask(cloud, rng)?, random_mask(cloud, rng)?)
}

fn random_subset<R: Rng + ?Sized>(z: &RegionMask, rng: &mut R) -> Result<RegionMask> {
    RegionMask::from_bits(
        z.cloud(),
        z.bits().iter().map(|b| *b && rng.random_bool(0.5)).collect(),
    )
}

fn instance_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// ---------------------------------------------------------------------------
// Exact identities

const IDENTITY_COLUMNS: [(&str, &str); 8] = [
    ("instance", ""),
    ("identity", ""),
    ("gated", ""),
    ("absolute", ""),
    ("defect", ""),
    ("tolerance", ""),
    ("idempotency_defect", ""),
    ("pass", ""),
];

/// One identity check before it becomes a row.
#[derive(Clone, Debug)]
struct IdentityCheck {
    name: &'static str,
    /// Holds only for idempotent `P`.
    gated: bool,
    absolute: f64,
    relative: f64,
}

fn op_diff(a: &SiteOperator, b: &SiteOperator) -> f64 {
    a.max_abs_diff(b)
}

fn identity_checks(
    proj: &SiteOperator,
    p: &QPartition,
    hs: &HalfSpacePair,
    w: &RegionMask,
) -> Result<Vec<IdentityCheck>> {
    let (a, b, c) = p.triple()?;
    let cloud = proj.cloud();
    let n = proj.dim() as f64;
    let s = norm_bound(proj).max(1.0);
    let op_scale = s.powi(3);
    let tr_scale = n * op_scale;
    let g = |x: &RegionMask, y: &RegionMask, z: &RegionMask| generalized_commutator(x, y, z, proj);
    let m = RegionMask::full(cloud);
    let mut out = Vec::new();
    let mut push = |name, gated, absolute: f64, scale: f64| {
        out.push(IdentityCheck {
            name,
            gated,
            absolute,
            relative: absolute / scale,
        })
    };

    let abc = g(a, b, c)?;
    let anti = [g(b, a, c)?, g(c, b, a)?, g(a, c, b)?]
        .iter()
        .map(|t| abc.add(t).map(|s| s.max_abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    push("antisymmetry", false, anti, op_scale);

    let mut additivity = 0.0f64;
    for slot in 0..3 {
        let parts = [a, b, c];
        let target = parts[slot];
        let half = RegionMask::from_bits(
            cloud,
            target.bits().iter().enumerate().map(|(i, t)| *t && i % 2 == 0).collect(),
        )?;
        let rest = target.difference(&half)?;
        let with = |z: &RegionMask| {
            let mut q = parts;
            q[slot] = z;
            g(q[0], q[1], q[2])
        };
        let split = with(&half)?.add(&with(&rest)?)?;
        additivity = additivity.max(op_diff(&abc, &split));
    }
    push("additivity", false, additivity, op_scale);

    let pa = compress(proj, a)?;
    let pb = compress(proj, b)?;
    let one_m = op_diff(&g(a, b, &m)?, &pa.commutator(&pb)?);
    push("one-entry-m", true, one_m, op_scale);

    let x = hs.x();
    let y = hs.y();
    let px = compress(proj, x)?;
    let py = compress(proj, y)?;
    let p_xcy = compress(proj, hs.not_x_and_y())?;
    let p_xy = compress(proj, hs.x_and_y())?;
    let p_xyc = compress(proj, hs.x_and_not_y())?;
    let lhs = px.commutator(&py)?;
    let head = px.commutator(&p_xcy)?;
    let lines = [
        head.add(&px.commutator(&p_xy)?)?,
        head.add(&p_xyc.commutator(&p_xy)?)?.add(&p_xy.commutator(&p_xy)?)?,
        head.sub(&p_xy.commutator(&p_xyc)?)?,
        head.sub(&py.commutator(&p_xyc)?)?.add(&p_xcy.commutator(&p_xyc)?)?,
    ];
    for (k, line) in lines.iter().enumerate() {
        let name = ["subdivided-1", "subdivided-2", "subdivided-3", "subdivided-4"][k];
        push(name, false, op_diff(&lhs, line), op_scale);
    }

    // Elementary cobordism moving W ⊆ A into B.
    let a2 = a.difference(w)?;
    let b2 = w.union(b)?;
    let diff = abc.sub(&g(&a2, &b2, c)?)?;
    let steps = [
        g(&a2, b, c)?.add(&g(w, b, c)?)?.sub(&g(&a2, b, c)?)?.sub(&g(&a2, w, c)?)?,
        g(w, b, c)?.add(&g(w, &a2, c)?)?,
        g(w, &m, c)?,
    ];
    let chain = steps.iter().map(|t| op_diff(&diff, t)).fold(0.0, f64::max);
    push("cobordism-additivity", false, chain, op_scale);
    let pw = compress(proj, w)?;
    let pc = compress(proj, c)?;
    let cob = op_diff(&diff, &pc.commutator(&pw)?);
    push("cobordism", true, cob, op_scale);

    let xp = proj.mask_commutator(x)?;
    let yp = proj.mask_commutator(y)?;
    let kubo = op_diff(&lhs, &proj.mul(&xp.commutator(&yp)?)?);
    push("kubo", true, kubo, op_scale);

    let ab = linalg::trace_of_product(pa.as_ref(), pb.as_ref());
    let ba = linalg::trace_of_product(pb.as_ref(), pa.as_ref());
    push("lidskii-echo", false, (ab - ba).norm(), tr_scale);

    let tr = generalized_commutator_trace(a, b, c, proj)?;
    push("trace-route", false, (tr - abc.trace()).norm(), tr_scale);
    push("two-current", false, (two_current_sum(p, proj)? - tr).norm(), tr_scale);
    push("global-pairing", true, tr.norm(), tr_scale);

    let hp = halfspaces_to_partition(hs);
    let (ha, hb, hc) = hp.triple()?;
    let half = lhs.trace() - generalized_commutator_trace(ha, hb, hc, proj)? * 2.0;
    push("half-space-trace", true, half.norm(), tr_scale);
    Ok(out)
}

fn identity_rows(
    instance: usize,
    proj: &SiteOperator,
    p: &QPartition,
    hs: &HalfSpacePair,
    w: &RegionMask,
) -> Result<Vec<Vec<Cell>>> {
    let idem = proj.idempotency_defect();
    Ok(identity_checks(proj, p, hs, w)?
        .into_iter()
        .map(|c| {
            vec![
                instance.into(),
                c.name.into(),
                c.gated.into(),
                c.absolute.into(),
                c.relative.into(),
                IDENTITY_TOL.into(),
                idem.into(),
                (c.relative <= IDENTITY_TOL).into(),
            ]
        })
        .collect())
}

/// Exact operator identities for one idempotent, partition and half-space
/// pair. The cobordism moves the even-indexed sites of the first part into the
/// second. Rows marked `gated` need `P² = P`; on a non-idempotent input they
/// are expected to fail.
pub fn identity_suite(proj: &SiteOperator, p: &QPartition, hs: &HalfSpacePair) -> Result<ExperimentTable> {
    let a = p.triple()?.0;
    let w = RegionMask::from_bits(
        a.cloud(),
        a.bits().iter().enumerate().map(|(i, b)| *b && i % 2 == 0).collect(),
    )?;
    let mut t = ExperimentTable::new("identity", &IDENTITY_COLUMNS);
    for row in identity_rows(0, proj, p, hs, &w)? {
        t.push(row);
    }
    Ok(t)
}

struct RandomInstance {
    proj: SiteOperator,
    partition: QPartition,
    hs: HalfSpacePair,
    w: RegionMask,
}

fn random_instance(seed: u64, k: usize, sizes: (usize, usize)) -> Result<RandomInstance> {
    let mut rng = instance_rng(seed, k as u64);
    let n = rng.random_range(sizes.0..=sizes.1);
    let cloud = random_cloud(&mut rng, n)?;
    let rank = rng.random_range(0..=n);
    let proj = if k % 2 == 0 {
        random_idempotent(&cloud, rank, &mut rng)?
    } else {
        random_hermitian_idempotent(&cloud, rank, &mut rng)?
    };
    let partition = random_partition(&cloud, &mut rng)?;
    let hs = random_halfspaces(&cloud, &mut rng)?;
    let w = random_subset(partition.part(0), &mut rng)?;
    Ok(RandomInstance {
        proj,
        partition,
        hs,
        w,
    })
}

/// A random instance on which every gated identity is sensitive to a
/// perturbation: `0 < rank P < N`, and no empty part, quadrant or moved set.
fn control_instance(seed: u64, hermitian: bool) -> Result<RandomInstance> {
    let start = usize::from(hermitian);
    for k in (start..).step_by(2).take(1000) {
        let inst = random_instance(seed.wrapping_add(0x00c0_ffee), k, (12, 12))?;
        let rank = inst.proj.trace().re.round() as usize;
        let n = inst.proj.dim();
        let parts_ok = (0..3).all(|i| !inst.partition.part(i).is_empty());
        let quads_ok = inst.hs.quadrants().iter().all(|q| !q.is_empty());
        if rank > 0 && rank < n && parts_ok && quads_ok && !inst.w.is_empty() {
            return Ok(inst);
        }
    }
    Err(Error::Numerical("no nondegenerate control instance found".into()))
}

/// The identity suite on `count` seeded random instances with `N` in
/// `sizes`; even instances use non-Hermitian idempotents, odd ones Hermitian.
pub fn random_identity_suite(count: usize, seed: u64, sizes: (usize, usize)) -> Result<ExperimentTable> {
    if sizes.0 == 0 || sizes.0 > sizes.1 {
        return Err(Error::arg("size range must be nonempty and positive"));
    }
    let rows = (0..count)
        .into_par_iter()
        .map(|k| {
            let inst = random_instance(seed, k, sizes)?;
            identity_rows(k, &inst.proj, &inst.partition, &inst.hs, &inst.w)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = ExperimentTable::new("identity", &IDENTITY_COLUMNS)
        .with_metadata(config_hash(&("identity", count, sizes)), seed);
    for row in rows.into_iter().flatten() {
        t.push(row);
    }
    Ok(t)
}

fn perturbed(proj: &SiteOperator, eps: f64, seed: u64) -> Result<SiteOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = proj.dim();
    let r = linalg::random_complex(&mut rng, n, n);
    let scale = eps / linalg::max_abs(r.as_ref());
    let m = proj.matrix();
    SiteOperator::new(proj.cloud(), Mat::from_fn(n, n, |i, j| m[(i, j)] + r[(i, j)] * scale))
}

/// Negative control: on `P + ε·R` every idempotency-gated identity must be
/// flagged while every ungated identity still holds.
pub fn negative_control(seed: u64, eps: f64) -> Result<ExperimentTable> {
    let inst = control_instance(seed, false)?;
    let bad = perturbed(&inst.proj, eps, seed ^ 0x5eed)?;
    let idem = bad.idempotency_defect();
    let mut t = ExperimentTable::new(
        "negative-control",
        &[
            ("identity", ""),
            ("gated", ""),
            ("defect", ""),
            ("tolerance", ""),
            ("idempotency_defect", ""),
            ("flagged", ""),
            ("pass", ""),
        ],
    )
    .with_metadata(config_hash(&("negative-control", eps)), seed);
    for c in identity_checks(&bad, &inst.partition, &inst.hs, &inst.w)? {
        let flagged = c.relative > IDENTITY_TOL;
        t.push(vec![
            c.name.into(),
            c.gated.into(),
            c.relative.into(),
            IDENTITY_TOL.into(),
            idem.into(),
            flagged.into(),
            (flagged == c.gated).into(),
        ]);
    }
    Ok(t)
}

/// Defects of the gated identities on `P + ε·R` for several `ε`; each must
/// grow linearly (log-log slope in `[0.8, 1.2]`).
pub fn perturbation_scaling(seed: u64, eps: &[f64]) -> Result<ExperimentTable> {
    if eps.len() < 2 {
        return Err(Error::arg("need at least two perturbation sizes"));
    }
    let inst = control_instance(seed, true)?;
    let per_eps = eps
        .iter()
        .map(|e| {
            let bad = perturbed(&inst.proj, *e, seed ^ 0x5eed)?;
            identity_checks(&bad, &inst.partition, &inst.hs, &inst.w)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = ExperimentTable::new(
        "perturbation-scaling",
        &[("identity", ""), ("eps", ""), ("defect", ""), ("slope", ""), ("pass", "")],
    )
    .with_metadata(config_hash(&("perturbation-scaling", eps)), seed);
    for (k, check) in per_eps[0].iter().enumerate().filter(|(_, c)| c.gated) {
        let defects: Vec<f64> = per_eps.iter().map(|cs| cs[k].relative).collect();
        let slope = loglog_slope(eps, &defects);
        let ok = slope.is_some_and(|s| (0.8..=1.2).contains(&s));
        for (e, d) in eps.iter().zip(&defects) {
            t.push(vec![check.name.into(), (*e).into(), (*d).into(), slope.into(), ok.into()]);
        }
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// Determinant identities

fn det_product(mats: &[&CMat]) -> c64 {
    let n = mats[0].nrows();
    let mut acc = Mat::<c64>::identity(n, n);
    for m in mats {
        acc = &acc * *m;
    }
    linalg::determinant(acc.as_ref())
}

/// `exp(2πi P_X)`, `exp(2πi P_Y)` and their group commutator determinant
/// against `exp(Tr[2πi P_X, 2πi P_Y])`, for a Hermitian idempotent `P`.
pub fn determinant_identity_suite(proj: &SiteOperator, hs: &HalfSpacePair) -> Result<ExperimentTable> {
    let n = proj.dim();
    if n > DETERMINANT_MAX_SITES {
        return Err(Error::arg(format!(
            "determinant suite is limited to {DETERMINANT_MAX_SITES} sites, got {n}"
        )));
    }
    if proj.hermiticity_defect() > 1e-12 {
        return Err(Error::arg("determinant suite needs a Hermitian idempotent"));
    }
    let px = compress(proj, hs.x())?;
    let py = compress(proj, hs.y())?;
    let u = linalg::hermitian_exp_i(px.as_ref(), TAU)?;
    let ui = linalg::hermitian_exp_i(px.as_ref(), -TAU)?;
    let v = linalg::hermitian_exp_i(py.as_ref(), TAU)?;
    let vi = linalg::hermitian_exp_i(py.as_ref(), -TAU)?;
    let det = det_product(&[&u, &v, &ui, &vi]);
    let a = Mat::from_fn(n, n, |i, j| px.matrix()[(i, j)] * c64::new(0.0, TAU));
    let b = Mat::from_fn(n, n, |i, j| py.matrix()[(i, j)] * c64::new(0.0, TAU));
    let tr = linalg::trace_of_product(a.as_ref(), b.as_ref()) - linalg::trace_of_product(b.as_ref(), a.as_ref());
    let ex = tr.exp();
    let u_taylor = linalg::expm(a.as_ref());
    let one = c64::new(1.0, 0.0);

    let mut t = ExperimentTable::new("determinant", &CHECK_COLUMNS);
    let mut add = |name: &str, value: f64| {
        t.push(check_row(name, value, DETERMINANT_TOL, value, value <= DETERMINANT_TOL))
    };
    add("det-group-commutator", (det - one).norm());
    add("exp-trace-commutator", (ex - one).norm());
    add("det-vs-exp", (det - ex).norm());
    add("exp-routes", linalg::max_abs_diff(u.as_ref(), u_taylor.as_ref()));
    Ok(t)
}

/// The determinant suite on `count` seeded random Hermitian idempotents with
/// random half-space pairs, `N` in `sizes`.
pub fn random_determinant_suite(count: usize, seed: u64, sizes: (usize, usize)) -> Result<ExperimentTable> {
    if sizes.0 == 0 || sizes.0 > sizes.1 {
        return Err(Error::arg("size range must be nonempty and positive"));
    }
    let tables = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = instance_rng(seed, k as u64);
            let n = rng.random_range(sizes.0..=sizes.1);
            let cloud = random_cloud(&mut rng, n)?;
            let rank = rng.random_range(0..=n);
            let p = random_hermitian_idempotent(&cloud, rank, &mut rng)?;
            let hs = random_halfspaces(&cloud, &mut rng)?;
            determinant_identity_suite(&p, &hs)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = ExperimentTable::new("determinant", &CHECK_COLUMNS)
        .with_metadata(config_hash(&("determinant", count, sizes)), seed);
    for table in tables {
        t.extend(table)?;
    }
    Ok(t)
}

/// `det(e^A e^B e^{-A} e^{-B}) = exp(tr[A,B])` on random pairs: Hermitian
/// generators `A = 2πi·H` for even instances, Gaussian matrices otherwise.
pub fn phh_suite(count: usize, dim: usize, seed: u64) -> Result<ExperimentTable> {
    let mut t = ExperimentTable::new(
        "phh",
        &[("instance", ""), ("kind", ""), ("defect", ""), ("tolerance", ""), ("pass", "")],
    )
    .with_metadata(config_hash(&("phh", count, dim)), seed);
    for k in 0..count {
        let mut rng = instance_rng(seed, k as u64);
        let (kind, a, b) = if k % 2 == 0 {
            let herm = |rng: &mut ChaCha8Rng| {
                let g = linalg::random_complex(rng, dim, dim);
                let s = c64::new(0.0, TAU / (2.0 * (dim as f64).sqrt()));
                Mat::from_fn(dim, dim, |i, j| (g[(i, j)] + g[(j, i)].conj()) * s)
            };
            ("hermitian", herm(&mut rng), herm(&mut rng))
        } else {
            let s = 1.0 / (dim as f64).sqrt();
            let mut gauss = || Mat::from_fn(dim, dim, |_, _| {
                c64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * s
            });
            let a = gauss();
            let b = gauss();
            ("general", a, b)
        };
        let neg = |m: &CMat| Mat::from_fn(dim, dim, |i, j| -m[(i, j)]);
        let det = det_product(&[
            &linalg::expm(a.as_ref()),
            &linalg::expm(b.as_ref()),
            &linalg::expm(neg(&a).as_ref()),
            &linalg::expm(neg(&b).as_ref()),
        ]);
        let tr = linalg::trace_of_product(a.as_ref(), b.as_ref()) - linalg::trace_of_product(b.as_ref(), a.as_ref());
        let d = (det - tr.exp()).norm();
        t.push(vec![k.into(), kind.into(), d.into(), DETERMINANT_TOL.into(), (d <= DETERMINANT_TOL).into()]);
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// Model-based experiments

/// Named partition presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PartitionSpec {
    /// Three angular sectors; the centre defaults to the bounding-box centre.
    Sectors {
        #[serde(default)]
        center: Option<Point>,
        #[serde(default = "default_cuts")]
        cuts_deg: [f64; 3],
    },
    /// `(X, Xᶜ∩Y, Xᶜ∩Yᶜ)` for the coordinate half-spaces through `origin`.
    CoordinateQuadrant {
        #[serde(default)]
        origin: Option<Point>,
    },
}

fn default_cuts() -> [f64; 3] {
    [90.0, 210.0, 330.0]
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec::Sectors {
            center: None,
            cuts_deg: default_cuts(),
        }
    }
}

impl PartitionSpec {
    pub fn center(&self, cloud: &Cloud) -> Point {
        match self {
            PartitionSpec::Sectors { center, .. } => center.unwrap_or_else(|| cloud.center()),
            PartitionSpec::CoordinateQuadrant { origin } => origin.unwrap_or_else(|| cloud.center()),
        }
    }

    pub fn build(&self, cloud: &Cloud) -> Result<QPartition> {
        let c = self.center(cloud);
        match self {
            PartitionSpec::Sectors { cuts_deg, .. } => {
                sector_partition(cloud, c, cuts_deg.map(f64::to_radians))
            }
            PartitionSpec::CoordinateQuadrant { .. } => {
                Ok(halfspaces_to_partition(&coordinate_halfspaces(cloud, c[0], c[1])))
            }
        }
    }
}

/// How a Fermi level is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum FermiLevel {
    /// The `n`-th bulk gap (1-based) wider than the gap threshold.
    Gap(usize),
    /// The bulk gap whose filling fraction is nearest the target.
    Filling(f64),
    /// An explicit energy, which must sit in a gap.
    Energy(f64),
}

fn default_threshold() -> f64 {
    0.2
}

fn default_margin() -> f64 {
    DEFAULT_BULK_MARGIN
}

/// A Fermi level with the bulk-gap bookkeeping used to choose it.
#[derive(Clone, Copy, Debug)]
struct ResolvedLevel {
    energy: f64,
    gap_index: Option<usize>,
}

fn resolve_level(eig: &Eigensystem, level: &FermiLevel, margin: f64, threshold: f64) -> Result<ResolvedLevel> {
    let gaps = eig.bulk_gaps(margin, threshold);
    let n = eig.values().len() as f64;
    match level {
        FermiLevel::Gap(k) => {
            let g = k
                .checked_sub(1)
                .and_then(|i| gaps.get(i))
                .ok_or_else(|| Error::arg(format!("bulk gap {k} not found; {} gaps detected", gaps.len())))?;
            Ok(ResolvedLevel {
                energy: eig.fermi_level_in(g),
                gap_index: Some(*k),
            })
        }
        FermiLevel::Filling(f) => {
            let filling = |e: f64| eig.values().partition_point(|v| *v < e) as f64 / n;
            let (i, g) = gaps
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    let fa = (filling(eig.fermi_level_in(a.1)) - f).abs();
                    let fb = (filling(eig.fermi_level_in(b.1)) - f).abs();
                    fa.total_cmp(&fb)
                })
                .ok_or_else(|| Error::arg("no bulk gap detected"))?;
            Ok(ResolvedLevel {
                energy: eig.fermi_level_in(g),
                gap_index: Some(i + 1),
            })
        }
        FermiLevel::Energy(e) => {
            eig.check_in_gap(*e)?;
            Ok(ResolvedLevel {
                energy: *e,
                gap_index: gaps.iter().position(|g| g.contains(*e)).map(|i| i + 1),
            })
        }
    }
}

/// Integer the windowed conductance is compared against.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Reference {
    value: Option<f64>,
    kind: &'static str,
}

const ORACLE_MIN_GRID: usize = 24;

fn oracle_for(model: &ModelConfig, e: f64) -> Result<Reference> {
    match model {
        ModelConfig::Hofstadter { flux, t, .. } if *t > 0.0 => {
            let flux = Flux::new(flux.p, flux.q)?;
            let grid = (6 * flux.q as usize).max(ORACLE_MIN_GRID);
            match bloch_bands_below(flux, *t, e, grid)? {
                None => Ok(Reference {
                    value: None,
                    kind: "in-band",
                }),
                Some(bands) => match fhs_chern_oracle(flux, bands, grid) {
                    Ok(o) => Ok(Reference {
                        value: Some(o.chern as f64),
                        kind: "oracle",
                    }),
                    Err(Error::GapClosed { .. }) => Ok(Reference {
                        value: None,
                        kind: "gap-closed",
                    }),
                    Err(e) => Err(e),
                },
            }
        }
        ModelConfig::Hofstadter { .. } => Ok(Reference {
            value: None,
            kind: "none",
        }),
        ModelConfig::Checkerboard { .. } => Ok(Reference {
            value: Some(0.0),
            kind: "real-model",
        }),
        ModelConfig::Amorphous { .. } => Ok(Reference {
            value: None,
            kind: "nearest-integer",
        }),
    }
}

fn reference_value(r: &Reference, sigma: f64) -> Option<f64> {
    match r.kind {
        "nearest-integer" => Some(sigma.round()),
        _ => r.value,
    }
}

/// Same model on a square sample of side `size`.
pub fn resized(model: &ModelConfig, size: f64) -> Result<ModelConfig> {
    let mut m = model.clone();
    match &mut m {
        ModelConfig::Hofstadter { nx, ny, .. } | ModelConfig::Checkerboard { nx, ny, .. } => {
            if size.fract() != 0.0 || size < 1.0 {
                return Err(Error::arg("lattice sizes must be positive integers"));
            }
            *nx = size as usize;
            *ny = size as usize;
        }
        ModelConfig::Amorphous { width, height, .. } => {
            *width = size;
            *height = size;
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    pub strength: f64,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizationConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub partition: PartitionSpec,
    pub levels: Vec<FermiLevel>,
    pub radii: Vec<f64>,
    #[serde(default)]
    pub disorder: Option<DisorderSpec>,
    /// Allowed deviation from the reference integer, and allowed disorder drift.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Deviations are asserted only for radii at least this large.
    #[serde(default = "default_check_radius")]
    pub check_radius: f64,
    #[serde(default = "default_threshold")]
    pub gap_threshold: f64,
    #[serde(default = "default_margin")]
    pub bulk_margin: f64,
}

fn default_tolerance() -> f64 {
    0.05
}

fn default_check_radius() -> f64 {
    8.0
}

pub const QUANTIZATION_COLUMNS: [(&str, &str); 15] = [
    ("kind", ""),
    ("seed", ""),
    ("gap", ""),
    ("energy", "t"),
    ("rank", ""),
    ("r", "spacing"),
    ("window_sites", ""),
    ("sigma", ""),
    ("residual", ""),
    ("cross_check", ""),
    ("reference", ""),
    ("reference_kind", ""),
    ("defect", ""),
    ("note", ""),
    ("pass", ""),
];

struct SigmaPoint {
    r: f64,
    window: usize,
    sigma: Option<f64>,
    residual: f64,
    cross_check: f64,
}

fn sigma_profile(p: &QPartition, proj: &SiteOperator, radii: &[f64]) -> Result<Vec<SigmaPoint>> {
    radii
        .par_iter()
        .map(|&r| {
            let k = bulk_window(p, r)?;
            if k.is_empty() {
                return Ok(SigmaPoint {
                    r,
                    window: 0,
                    sigma: None,
                    residual: 0.0,
                    cross_check: 0.0,
                });
            }
            let res = bulk_conductance(p, &k, proj)?;
            Ok(SigmaPoint {
                r,
                window: k.count(),
                sigma: Some(res.normalized),
                residual: res.residual,
                cross_check: res.cross_check,
            })
        })
        .collect()
}

/// Windowed conductance over Fermi levels and window radii, with optional
/// onsite-disorder drift rows.
pub fn quantization_experiment(config: &QuantizationConfig, seed: u64) -> Result<ExperimentTable> {
    if config.radii.is_empty() {
        return Err(Error::arg("at least one window radius is required"));
    }
    let h = config.model.build()?;
    let cloud = h.cloud().clone();
    let part = config.partition.build(&cloud)?;
    let eig = h.eigensystem()?;
    let n = cloud.len() as f64;
    let residual_tol = 1e-9 * n;
    let mut t = ExperimentTable::new("quantization", &QUANTIZATION_COLUMNS)
        .with_metadata(config_hash(config), seed);

    let disordered: Vec<(u64, Hamiltonian, Eigensystem)> = match &config.disorder {
        Some(d) if d.strength > 0.0 => d
            .seeds
            .par_iter()
            .map(|s| {
                let hd = h.with_disorder(d.strength, *s)?;
                let ed = hd.eigensystem()?;
                Ok((*s, hd, ed))
            })
            .collect::<Result<Vec<_>>>()?,
        _ => Vec::new(),
    };

    for level in &config.levels {
        let resolved = match resolve_level(&eig, level, config.bulk_margin, config.gap_threshold) {
            Ok(r) => r,
            Err(e @ (Error::GapViolation { .. } | Error::InvalidArgument(_))) => {
                let mut row = vec![Cell::Empty; QUANTIZATION_COLUMNS.len()];
                row[0] = "clean".into();
                row[13] = format!("skipped: {e}").into();
                t.push(row);
                continue;
            }
            Err(e) => return Err(e),
        };
        let e = resolved.energy;
        let fp = eig.fermi_projection(e)?;
        let reference = oracle_for(&config.model, e)?;
        let clean = sigma_profile(&part, fp.operator(), &config.radii)?;
        for pt in &clean {
            let mut row: Vec<Cell> = vec![
                "clean".into(),
                Cell::Empty,
                resolved.gap_index.into(),
                e.into(),
                fp.rank().into(),
                pt.r.into(),
                pt.window.into(),
                pt.sigma.into(),
                pt.residual.into(),
                pt.cross_check.into(),
            ];
            let Some(sigma) = pt.sigma else {
                row.extend([Cell::Empty, reference.kind.into(), Cell::Empty, "empty window".into(), Cell::Empty]);
                t.push(row);
                continue;
            };
            let refv = reference_value(&reference, sigma);
            let defect = refv.map(|v| (sigma - v).abs());
            let within = defect.is_none_or(|d| pt.r < config.check_radius || d <= config.tolerance);
            let pass = pt.residual <= residual_tol && within;
            row.extend([refv.into(), reference.kind.into(), defect.into(), Cell::Empty, pass.into()]);
            t.push(row);
        }

        let Some(spec) = &config.disorder else { continue };
        for (s, _hd, ed) in &disordered {
            let gap = ed
                .bulk_gaps(config.bulk_margin, config.gap_threshold)
                .into_iter()
                .find(|g| g.contains(e));
            let Some(gap) = gap else {
                let mut row = vec![Cell::Empty; QUANTIZATION_COLUMNS.len()];
                row[0] = "disorder".into();
                row[1] = (*s).into();
                row[3] = e.into();
                row[13] = format!("bulk gap closed at strength {}", spec.strength).into();
                row[14] = false.into();
                t.push(row);
                continue;
            };
            let ed_e = ed.fermi_level_in(&gap);
            let fpd = ed.fermi_projection(ed_e)?;
            let pts = sigma_profile(&part, fpd.operator(), &config.radii)?;
            for (pt, c) in pts.iter().zip(&clean) {
                let drift = match (pt.sigma, c.sigma) {
                    (Some(a), Some(b)) => Some((a - b).abs()),
                    _ => None,
                };
                let pass = drift.map(|d| d <= config.tolerance && pt.residual <= residual_tol);
                t.push(vec![
                    "disorder".into(),
                    (*s).into(),
                    resolved.gap_index.into(),
                    ed_e.into(),
                    fpd.rank().into(),
                    pt.r.into(),
                    pt.window.into(),
                    pt.sigma.into(),
                    pt.residual.into(),
                    pt.cross_check.into(),
                    c.sigma.into(),
                    "clean".into(),
                    drift.into(),
                    format!("strength {}", spec.strength).into(),
                    pass.into(),
                ]);
            }
        }
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdditivityConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub partition: PartitionSpec,
    /// Lower and upper bulk gap (1-based).
    pub gaps: [usize; 2],
    pub radius: f64,
    #[serde(default = "default_additivity_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_threshold")]
    pub gap_threshold: f64,
    #[serde(default = "default_margin")]
    pub bulk_margin: f64,
}

fn default_additivity_tolerance() -> f64 {
    0.1
}

/// Orthogonality required between the two band projections.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

/// σ_K of `P₁`, of the next band `P₂ = P₁₊₂ − P₁`, and of `P₁₊₂`, with the
/// additivity defect `|σ(P₁₊₂) − σ(P₁) − σ(P₂)|`.
pub fn additivity_experiment(config: &AdditivityConfig) -> Result<ExperimentTable> {
    let [g1, g2] = config.gaps;
    if g1 > g2 {
        return Err(Error::arg("gaps must be ordered"));
    }
    let h = config.model.build()?;
    let cloud = h.cloud().clone();
    let part = config.partition.build(&cloud)?;
    let eig = h.eigensystem()?;
    let level = |g| resolve_level(&eig, &FermiLevel::Gap(g), config.bulk_margin, config.gap_threshold);
    let e1 = level(g1)?.energy;
    let e2 = level(g2)?.energy;
    let p1 = eig.fermi_projection(e1)?.into_operator();
    let p12 = eig.fermi_projection(e2)?.into_operator();
    let p2 = eig.band_projection(e1, e2)?;
    let ortho = p1.mul(&p2)?.max_abs().max(p2.mul(&p1)?.max_abs());
    if ortho > ORTHOGONALITY_TOL {
        return Err(Error::Contract(format!(
            "band projections are not orthogonal: max |P1 P2| = {ortho:.3e}"
        )));
    }
    let k = bulk_window(&part, config.radius)?;
    let sigma = |p: &SiteOperator| bulk_conductance(&part, &k, p).map(|r| r.normalized);
    let (s1, s2, s12) = (sigma(&p1)?, sigma(&p2)?, sigma(&p12)?);
    let c1 = oracle_for(&config.model, e1)?.value;
    let c12 = oracle_for(&config.model, e2)?.value;
    let c2 = c1.zip(c12).map(|(a, b)| b - a);

    let mut t = ExperimentTable::new(
        "additivity",
        &[("item", ""), ("sigma", ""), ("reference", ""), ("defect", ""), ("tolerance", ""), ("pass", "")],
    )
    .with_metadata(config_hash(config), 0);
    let tol = config.tolerance;
    for (name, s, c) in [("P1", s1, c1), ("P2", s2, c2), ("P1+2", s12, c12)] {
        let d = c.map(|c| (s - c).abs());
        t.push(vec![name.into(), s.into(), c.into(), d.into(), tol.into(), d.map(|d| d <= tol).into()]);
    }
    let add = (s12 - s1 - s2).abs();
    t.push(vec!["additivity".into(), (s1 + s2).into(), s12.into(), add.into(), tol.into(), (add <= tol).into()]);
    t.push(vec![
        "orthogonality".into(),
        ortho.into(),
        Cell::Empty,
        ortho.into(),
        ORTHOGONALITY_TOL.into(),
        true.into(),
    ]);
    let diff = p12.sub(&p1)?.max_abs_diff(&p2);
    t.push(vec![
        "band-difference".into(),
        diff.into(),
        Cell::Empty,
        diff.into(),
        1e-10.into(),
        (diff <= 1e-10).into(),
    ]);
    Ok(t)
}

// ---------------------------------------------------------------------------
// Triviality catalogue

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrivialCase {
    Real,
    FiniteRank,
    HalfSpace,
    ProjectionCompression,
    Mirror,
}

impl TrivialCase {
    pub const ALL: [TrivialCase; 5] = [
        TrivialCase::Real,
        TrivialCase::FiniteRank,
        TrivialCase::HalfSpace,
        TrivialCase::ProjectionCompression,
        TrivialCase::Mirror,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TrivialCase::Real => "real",
            TrivialCase::FiniteRank => "finite-rank",
            TrivialCase::HalfSpace => "half-space",
            TrivialCase::ProjectionCompression => "projection-compression",
            TrivialCase::Mirror => "mirror",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrivialityConfig {
    /// Side of the Hofstadter sample.
    pub size: usize,
    pub flux: Flux,
    pub radius: f64,
    /// Number of window-localized states in the finite-rank case.
    pub finite_rank: usize,
    /// Side of the checkerboard sample and its onsite amplitude.
    pub real_size: usize,
    pub real_delta: f64,
}

impl Default for TrivialityConfig {
    fn default() -> Self {
        TrivialityConfig {
            size: 24,
            flux: Flux { p: 1, q: 4 },
            radius: 6.0,
            finite_rank: 3,
            real_size: 16,
            real_delta: 1.0,
        }
    }
}

/// Tolerances: real model 1e-12, finite-rank and half-space cases 1e-6,
/// mirror negation 1e-10.
pub fn triviality_suite(config: &TrivialityConfig, cases: &[TrivialCase]) -> Result<ExperimentTable> {
    let mut t = ExperimentTable::new(
        "triviality",
        &[("case", ""), ("sigma", ""), ("reference", ""), ("defect", ""), ("tolerance", ""), ("note", ""), ("pass", "")],
    )
    .with_metadata(config_hash(config), 0);
    let spec = PartitionSpec::default();

    let needs_model = cases.iter().any(|c| *c != TrivialCase::Real);
    let model = if needs_model {
        let cloud = build_square_lattice(config.size, config.size, 1.0)?;
        let h = crate::models::hofstadter(&cloud, config.flux, 1.0)?;
        let eig = h.eigensystem()?;
        let gap = *eig
            .bulk_gaps(DEFAULT_BULK_MARGIN, 0.2)
            .first()
            .ok_or_else(|| Error::arg("the Hofstadter sample has no bulk gap"))?;
        let p = eig.fermi_projection(eig.fermi_level_in(&gap))?.into_operator();
        let part = spec.build(&cloud)?;
        let k = bulk_window(&part, config.radius)?;
        Some((cloud, h, p, part, k))
    } else {
        None
    };

    for case in cases {
        let name = case.as_str();
        match case {
            TrivialCase::Real => {
                let m = ModelConfig::Checkerboard {
                    nx: config.real_size,
                    ny: config.real_size,
                    t: 1.0,
                    delta: config.real_delta,
                };
                let h = m.build()?;
                let p = crate::models::fermi_projection(&h, 0.0)?;
                let part = spec.build(h.cloud())?;
                let k = bulk_window(&part, config.radius)?;
                let s = bulk_conductance(&part, &k, p.operator())?.normalized;
                let tol = 1e-12;
                t.push(vec![name.into(), s.into(), 0.0.into(), s.abs().into(), tol.into(), "checkerboard".into(), (s.abs() <= tol).into()]);
            }
            TrivialCase::FiniteRank => {
                let (cloud, h, _, part, k) = model.as_ref().expect("model built");
                let idx = k.indices();
                if idx.len() < config.finite_rank {
                    return Err(Error::arg("window holds fewer sites than the requested rank"));
                }
                let hk = linalg::submatrix(h.matrix().as_ref(), &idx, &idx);
                let (_, vecs) = linalg::hermitian_eigen(hk.as_ref())?;
                let n = cloud.len();
                let mut v = Mat::<c64>::zeros(n, config.finite_rank);
                for (a, &i) in idx.iter().enumerate() {
                    for b in 0..config.finite_rank {
                        v[(i, b)] = vecs[(a, b)];
                    }
                }
                let p = SiteOperator::new(cloud, &v * v.adjoint())?;
                let s = bulk_conductance(part, k, &p)?.normalized;
                let tol = 1e-6;
                t.push(vec![name.into(), s.into(), 0.0.into(), s.abs().into(), tol.into(), format!("rank {}", config.finite_rank).into(), (s.abs() <= tol).into()]);
            }
            TrivialCase::HalfSpace | TrivialCase::ProjectionCompression => {
                let (cloud, _, p, part, k) = model.as_ref().expect("model built");
                let c = spec.center(cloud);
                let x = RegionMask::from_predicate(cloud, |q| q[0] < c[0]);
                let px = reidempotize(&p.left_mask(&x)?.right_mask(&x)?)?;
                let support = px.max_abs_diff(&px.left_mask(&x)?.right_mask(&x)?);
                let tol = 1e-6;
                if *case == TrivialCase::HalfSpace {
                    let s = bulk_conductance(part, k, &px)?.normalized;
                    t.push(vec![name.into(), s.into(), 0.0.into(), s.abs().into(), tol.into(), format!("support defect {support:.1e}").into(), (s.abs() <= tol && support == 0.0).into()]);
                } else {
                    let y = RegionMask::from_predicate(cloud, |q| q[1] >= c[1]);
                    let hs = HalfSpacePair::new(x.clone(), y)?;
                    let s = commutator_trace(&hs, &px)?.normalized;
                    let exact = compress(&px, &x)?.max_abs_diff(&px);
                    t.push(vec![name.into(), s.into(), 0.0.into(), s.abs().into(), tol.into(), format!("|P'XP' - P'| = {exact:.1e}").into(), (s.abs() <= tol && exact <= 1e-12).into()]);
                }
            }
            TrivialCase::Mirror => {
                let (cloud, _, p, part, k) = model.as_ref().expect("model built");
                let s = bulk_conductance(part, k, p)?.normalized;
                let mc = cloud.mirrored();
                let hm = crate::models::hofstadter(&mc, config.flux, 1.0)?;
                let eigm = hm.eigensystem()?;
                let pm = eigm.fermi_projection(eigm.fermi_level_in(
                    eigm.bulk_gaps(DEFAULT_BULK_MARGIN, 0.2).first().ok_or_else(|| Error::arg("mirrored sample has no bulk gap"))?,
                ))?;
                let rebind = |z: &RegionMask| RegionMask::from_bits(&mc, z.bits().to_vec());
                let mpart = QPartition::new(part.parts().iter().map(rebind).collect::<Result<Vec<_>>>()?)?;
                let sm = bulk_conductance(&mpart, &rebind(k)?, pm.operator())?.normalized;
                let tol = 1e-10;
                let d = (sm + s).abs();
                t.push(vec![name.into(), sm.into(), (-s).into(), d.into(), tol.into(), "x -> -x, same index masks".into(), (d <= tol).into()]);
            }
        }
    }
    Ok(t)
}

/// Spectral projection onto the eigenvalues above 1/2 of a Hermitian operator.
fn reidempotize(a: &SiteOperator) -> Result<SiteOperator> {
    let (vals, vecs) = linalg::hermitian_eigen(a.as_ref())?;
    let n = a.dim();
    let keep: Vec<usize> = (0..n).filter(|i| vals[*i] > 0.5).collect();
    let v = Mat::from_fn(n, keep.len(), |i, j| vecs[(i, keep[j])]);
    // Entries outside the support of `a` are rounding noise; zero them.
    let support: Vec<bool> = (0..n).map(|i| (0..n).any(|j| a.entry(i, j) != c64::new(0.0, 0.0))).collect();
    let p = &v * v.adjoint();
    let p = Mat::from_fn(n, n, |i, j| if support[i] && support[j] { p[(i, j)] } else { c64::new(0.0, 0.0) });
    SiteOperator::new(a.cloud(), p)
}

// ---------------------------------------------------------------------------
// Convergence

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub partition: PartitionSpec,
    pub level: FermiLevel,
    /// Sample sides, ascending.
    pub sizes: Vec<f64>,
    /// Window radius as a fraction of the side.
    #[serde(default = "default_r_fraction")]
    pub r_fraction: f64,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_threshold")]
    pub gap_threshold: f64,
    #[serde(default = "default_margin")]
    pub bulk_margin: f64,
}

fn default_r_fraction() -> f64 {
    0.25
}

fn default_slack() -> f64 {
    0.2
}

/// `|σ_K − reference|` per sample size with `r = r_fraction · size`; each
/// uncontaminated deviation must not exceed `(1 + slack)` times the previous one.
pub fn convergence_study(config: &ConvergenceConfig) -> Result<ExperimentTable> {
    if config.sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("sizes must be strictly ascending"));
    }
    let points = config
        .sizes
        .par_iter()
        .map(|&size| {
            let model = resized(&config.model, size)?;
            let h = model.build()?;
            let cloud = h.cloud().clone();
            let part = config.partition.build(&cloud)?;
            let eig = h.eigensystem()?;
            let lvl = resolve_level(&eig, &config.level, config.bulk_margin, config.gap_threshold)?;
            let fp = eig.fermi_projection(lvl.energy)?;
            let r = config.r_fraction * size;
            let k = bulk_window(&part, r)?;
            let res = bulk_conductance(&part, &k, fp.operator())?;
            let reference = oracle_for(&model, lvl.energy)?;
            let c = part_center_clearance(&cloud, config.partition.center(&cloud));
            Ok((size, cloud.len(), r, k.count(), res.normalized, reference_value(&reference, res.normalized), reference.kind, r > c))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut t = ExperimentTable::new(
        "convergence",
        &[
            ("size", "spacing"),
            ("sites", ""),
            ("r", "spacing"),
            ("window_sites", ""),
            ("sigma", ""),
            ("reference", ""),
            ("reference_kind", ""),
            ("defect", ""),
            ("boundary_contaminated", ""),
            ("pass", ""),
        ],
    )
    .with_metadata(config_hash(config), 0);
    let mut prev: Option<f64> = None;
    for (size, sites, r, window, sigma, refv, kind, contaminated) in points {
        let defect = refv.map(|v| (sigma - v).abs());
        let pass = match (defect, contaminated) {
            (_, true) | (None, _) => None,
            (Some(d), false) => {
                let ok = prev.is_none_or(|p| d <= (1.0 + config.slack) * p + 1e-12);
                prev = Some(d);
                Some(ok)
            }
        };
        t.push(vec![
            size.into(),
            sites.into(),
            r.into(),
            window.into(),
            sigma.into(),
            refv.into(),
            kind.into(),
            defect.into(),
            contaminated.into(),
            pass.into(),
        ]);
    }
    Ok(t)
}

/// Distance from `c` to the bounding box of the cloud.
fn part_center_clearance(cloud: &Cloud, c: Point) -> f64 {
    let bb = cloud.bounding_box();
    (c[0] - bb[0]).min(bb[2] - c[0]).min(c[1] - bb[1]).min(bb[3] - c[1])
}

// ---------------------------------------------------------------------------
// Locality evidence

/// Tiles lying entirely in the open square of half-width `half` about `c`.
pub fn central_tiles(tiling: &crate::geometry::Tiling, c: Point, half: f64) -> Vec<bool> {
    let cloud = tiling.cloud();
    tiling
        .cells()
        .iter()
        .map(|cell| {
            cell.iter().all(|&s| {
                let q = cloud.site(s);
                (q[0] - c[0]).abs() < half && (q[1] - c[1]).abs() < half
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub model: ModelConfig,
    pub level: FermiLevel,
    /// Tile parameter; `√2` gives one-site tiles on the unit lattice.
    #[serde(default = "default_r0")]
    pub r0: f64,
    /// Half-width of the central window whose tiles enter the profile.
    pub window: f64,
    pub bins: Vec<f64>,
    #[serde(default = "default_min_distance")]
    pub min_distance: f64,
    #[serde(default = "default_max_slope")]
    pub max_slope: f64,
    #[serde(default = "default_threshold")]
    pub gap_threshold: f64,
    #[serde(default = "default_margin")]
    pub bulk_margin: f64,
}

fn default_r0() -> f64 {
    SQRT_2
}

fn default_min_distance() -> f64 {
    1.0
}

fn default_max_slope() -> f64 {
    -0.2
}

pub struct DecayEvidence {
    pub profile: Vec<DecayBin>,
    pub slope: Option<f64>,
    pub table: ExperimentTable,
}

fn central_projection(model: &ModelConfig, level: &FermiLevel, margin: f64, threshold: f64) -> Result<(Cloud, SiteOperator)> {
    let h = model.build()?;
    let eig = h.eigensystem()?;
    let lvl = resolve_level(&eig, level, margin, threshold)?;
    Ok((h.cloud().clone(), eig.fermi_projection(lvl.energy)?.into_operator()))
}

/// Block-norm decay profile of the Fermi projection over a central window.
pub fn decay_experiment(config: &DecayConfig) -> Result<DecayEvidence> {
    let (cloud, p) = central_projection(&config.model, &config.level, config.bulk_margin, config.gap_threshold)?;
    let tiling = build_tiling(&cloud, config.r0)?;
    let tiles = central_tiles(&tiling, cloud.center(), config.window);
    let blocks = BlockNorms::restricted(&p, &tiling, &tiles)?;
    let profile = decay_profile_from(&blocks, &config.bins, Some(&tiles))?;
    let slope = decay_slope(&profile, config.min_distance);
    let mut table = ExperimentTable::new("decay", &CHECK_COLUMNS).with_metadata(config_hash(config), 0);
    let s = slope.unwrap_or(f64::NAN);
    table.push(check_row("slope", s, config.max_slope, s, slope.is_some_and(|s| s <= config.max_slope)));
    Ok(DecayEvidence { profile, slope, table })
}

pub fn write_decay_csv<W: std::io::Write>(profile: &[DecayBin], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lo", "hi", "max_norm", "pairs"])?;
    for b in profile {
        w.write_record([format!("{:e}", b.lo), format!("{:e}", b.hi), format!("{:e}", b.max_norm), b.pairs.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeminormStabilityConfig {
    pub model: ModelConfig,
    pub level: FermiLevel,
    /// Two sample sides compared.
    pub sizes: [f64; 2],
    pub nu: f64,
    #[serde(default = "default_r0")]
    pub r0: f64,
    /// Half-width of the common central window.
    pub window: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_threshold")]
    pub gap_threshold: f64,
    #[serde(default = "default_margin")]
    pub bulk_margin: f64,
}

/// Seminorms of the Fermi projection restricted to the same central window on
/// two sample sizes; their relative difference must stay within tolerance.
pub fn seminorm_stability(config: &SeminormStabilityConfig) -> Result<ExperimentTable> {
    let values = config
        .sizes
        .par_iter()
        .map(|&size| {
            let model = resized(&config.model, size)?;
            let (cloud, p) = central_projection(&model, &config.level, config.bulk_margin, config.gap_threshold)?;
            let tiling = build_tiling(&cloud, config.r0)?;
            let tiles = central_tiles(&tiling, cloud.center(), config.window);
            let blocks = BlockNorms::restricted(&p, &tiling, &tiles)?;
            Ok([SeminormKind::Bracket, SeminormKind::Sum].map(|k| blocks.seminorm(k, config.nu, None, Some(&tiles))))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = ExperimentTable::new(
        "seminorm-stability",
        &[("kind", ""), ("nu", ""), ("small", ""), ("large", ""), ("defect", ""), ("tolerance", ""), ("pass", "")],
    )
    .with_metadata(config_hash(config), 0);
    for (i, kind) in [SeminormKind::Bracket, SeminormKind::Sum].iter().enumerate() {
        let (a, b) = (values[0][i], values[1][i]);
        let rel = (a - b).abs() / a.abs().max(b.abs());
        let ok = a.is_finite() && b.is_finite() && rel <= config.tolerance;
        t.push(vec![kind.as_str().into(), config.nu.into(), a.into(), b.into(), rel.into(), config.tolerance.into(), ok.into()]);
    }
    Ok(t)
}

/// Submultiplicativity `‖LL′‖_ν ≤ (1+r0)^ν ‖L‖_ν ‖L′‖_ν` and the ideal estimate
/// `‖LL′‖_{ν,Z} ≤ (1+r0)^ν ‖L‖_ν ‖L′‖_{ν,Z}` for the sum seminorms on random
/// finite-propagation operators.
pub fn seminorm_inequality_suite(count: usize, seed: u64) -> Result<ExperimentTable> {
    let rows = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = instance_rng(seed, k as u64);
            let side = rng.random_range(4..=7usize);
            let cloud = build_square_lattice(side, side, 1.0)?;
            let r0 = [SQRT_2, 2.0, 3.0][rng.random_range(0..3)];
            let tiling = build_tiling(&cloud, r0)?;
            let local = |rng: &mut ChaCha8Rng| -> Result<SiteOperator> {
                let reach = rng.random_range(1..=3) as f64;
                let g = linalg::random_complex(rng, cloud.len(), cloud.len());
                SiteOperator::new(
                    &cloud,
                    Mat::from_fn(cloud.len(), cloud.len(), |i, j| {
                        if cloud.dist(i, j) <= reach {
                            g[(i, j)]
                        } else {
                            c64::new(0.0, 0.0)
                        }
                    }),
                )
            };
            let l = local(&mut rng)?;
            let l2 = local(&mut rng)?;
            let cut = rng.random_range(0.0..side as f64);
            let z = RegionMask::from_predicate(&cloud, |q| q[0] < cut);
            let z = if z.is_empty() { RegionMask::from_indices(&cloud, &[0])? } else { z };
            let prod = l.mul(&l2)?;
            let (bl, bl2, bp) = (BlockNorms::new(&l, &tiling)?, BlockNorms::new(&l2, &tiling)?, BlockNorms::new(&prod, &tiling)?);
            let dz = tiling.cell_distances_to(&z);
            let mut out = Vec::new();
            for nu in crate::operators::DEFAULT_NU_GRID {
                let c = (1.0 + r0).powf(nu);
                let sum = SeminormKind::Sum;
                let lhs = bp.seminorm(sum, nu, None, None);
                let rhs = c * bl.seminorm(sum, nu, None, None) * bl2.seminorm(sum, nu, None, None);
                out.push((k, "submultiplicative", nu, lhs, rhs));
                let lhs = bp.seminorm(sum, nu, Some(&dz), None);
                let rhs = c * bl.seminorm(sum, nu, None, None) * bl2.seminorm(sum, nu, Some(&dz), None);
                out.push((k, "ideal", nu, lhs, rhs));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = ExperimentTable::new(
        "seminorm-inequalities",
        &[("instance", ""), ("inequality", ""), ("nu", ""), ("lhs", ""), ("rhs", ""), ("defect", ""), ("pass", "")],
    )
    .with_metadata(config_hash(&("seminorm-inequalities", count)), seed);
    for (k, name, nu, lhs, rhs) in rows.into_iter().flatten() {
        let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
        t.push(vec![k.into(), name.into(), nu.into(), lhs.into(), rhs.into(), ratio.into(), (lhs <= rhs * (1.0 + 1e-12)).into()]);
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CobordismConfig {
    pub model: ModelConfig,
    pub level: FermiLevel,
    pub radius: f64,
    /// Required separation of the moved set from the third part, in decay lengths.
    #[serde(default = "default_decay_lengths")]
    pub decay_lengths: f64,
    /// Half-width of the central window used to fit the decay length.
    pub fit_window: f64,
    #[serde(default = "default_cobordism_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_threshold")]
    pub gap_threshold: f64,
    #[serde(default = "default_margin")]
    pub bulk_margin: f64,
}

fn default_decay_lengths() -> f64 {
    10.0
}

fn default_cobordism_tolerance() -> f64 {
    1e-3
}

/// Moves the sites of the first sector that are at least `decay_lengths`
/// decay lengths away from the windowed third sector into the second, keeping the
/// window fixed, and compares σ_K before and after. The difference is also
/// evaluated directly as `4πi·Tr[W∩K, K, C∩K]_P`.
pub fn windowed_cobordism(config: &CobordismConfig) -> Result<ExperimentTable> {
    let (cloud, p) = central_projection(&config.model, &config.level, config.bulk_margin, config.gap_threshold)?;
    let tiling = build_tiling(&cloud, SQRT_2)?;
    let tiles = central_tiles(&tiling, cloud.center(), config.fit_window);
    let blocks = BlockNorms::restricted(&p, &tiling, &tiles)?;
    let bins: Vec<f64> = (0..=(2.0 * config.fit_window).ceil() as usize).map(|d| d as f64).collect();
    let slope = decay_slope(&decay_profile_from(&blocks, &bins, Some(&tiles))?, 1.0)
        .filter(|s| *s < 0.0)
        .ok_or_else(|| Error::Numerical("no decay could be fitted".into()))?;
    let xi = -1.0 / slope;
    let sep = config.decay_lengths * xi;

    let part = PartitionSpec::default().build(&cloud)?;
    let (a, _, c) = part.triple()?;
    let k = bulk_window(&part, config.radius)?;
    let dc = c.intersection(&k)?.distance_field();
    let w = RegionMask::from_bits(&cloud, (0..cloud.len()).map(|i| a.contains(i) && dc[i] >= sep).collect())?;
    let moved = elementary_cobordism(&part, 0, 1, &w, &[config.radius])?;
    let before = bulk_conductance(&part, &k, &p)?.normalized;
    let after = bulk_conductance(&moved.partition, &k, &p)?.normalized;
    let wk = w.intersection(&k)?;
    let ck = c.intersection(&k)?;
    let direct = (c64::new(0.0, 4.0 * PI) * generalized_commutator_trace(&wk, &k, &ck, &p)?).re;
    let delta = before - after;
    let routes = (delta - direct).abs();

    let mut t = ExperimentTable::new("windowed-cobordism", &CHECK_COLUMNS).with_metadata(config_hash(config), 0);
    t.push(check_row("decay-length", xi, f64::NAN, 0.0, true));
    let actual = if wk.is_empty() { f64::INFINITY } else { wk.distance_to(&ck)? };
    t.push(check_row("separation", actual, sep, 0.0, actual >= sep));
    t.push(check_row("moved-window-sites", wk.count() as f64, 1.0, 0.0, !wk.is_empty()));
    t.push(check_row("sigma-difference", delta.abs(), config.tolerance, delta.abs(), delta.abs() <= config.tolerance));
    t.push(check_row("difference-routes", routes, 1e-10, routes, routes <= 1e-10));
    Ok(t)
}

// ---------------------------------------------------------------------------
// Geometry predicates

/// Thickening laws and the partition ↔ half-space round trip on random masks.
pub fn geometry_suite(trials: usize, seed: u64) -> Result<ExperimentTable> {
    let results = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = instance_rng(seed, k as u64);
            let cloud = if k % 2 == 0 {
                let side = rng.random_range(4..=10usize);
                build_square_lattice(side, side, 1.0)?
            } else {
                build_poisson_cloud(1.0, 8.0, 8.0, rng.random())?
            };
            if cloud.len() < 2 {
                return Ok([true; 3]);
            }
            let a = random_mask(&cloud, &mut rng)?;
            let b = random_mask(&cloud, &mut rng)?;
            let r = rng.random_range(0.0..3.0);
            let union = thicken(&a.union(&b)?, r)? == thicken(&a, r)?.union(&thicken(&b, r)?)?;
            let inter = thicken(&a.intersection(&b)?, r)?.is_subset(&thicken(&a, r)?.intersection(&thicken(&b, r)?)?)?;
            let p = random_partition(&cloud, &mut rng)?;
            let back = halfspaces_to_partition(&partition_to_halfspaces(&p)?);
            Ok([union, inter, back.parts() == p.parts()])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = ExperimentTable::new(
        "geometry",
        &[("check", ""), ("trials", ""), ("failures", ""), ("pass", "")],
    )
    .with_metadata(config_hash(&("geometry", trials)), seed);
    for (i, name) in ["thicken-union", "thicken-intersection", "partition-round-trip"].iter().enumerate() {
        let fails = results.iter().filter(|r| !r[i]).count();
        t.push(vec![(*name).into(), trials.into(), fails.into(), (fails == 0).into()]);
    }
    Ok(t)
}

/// Sampled vertical axis and exponential curve `y = eˣ` meeting at `(0, 1)`.
pub fn exponential_curve_regions(top: f64, step: f64) -> Result<(RegionMask, RegionMask)> {
    let mut sites = Vec::new();
    let mut axis = Vec::new();
    let mut k = 0usize;
    while k as f64 * step <= top {
        axis.push(sites.len());
        sites.push([0.0, k as f64 * step]);
        k += 1;
    }
    let mut curve = vec![sites.iter().position(|p: &Point| p[1] == 1.0).ok_or_else(|| Error::arg("step must divide 1"))?];
    let mut x = -3.0f64;
    while x.exp() <= top {
        if x.abs() > 1e-9 {
            curve.push(sites.len());
            sites.push([x, x.exp()]);
        }
        // Arc-length step along the curve.
        x += (step / (1.0 + x.exp().powi(2)).sqrt()).max(1e-3);
    }
    let cloud: Cloud = std::sync::Arc::new(SiteCloud::new("exponential-curve", sites)?);
    Ok((RegionMask::from_indices(&cloud, &axis)?, RegionMask::from_indices(&cloud, &curve)?))
}

/// Excisiveness verdicts: adjacent thickened sectors of a 64×64 lattice must
/// fit `mu_hat ∈ [0.8, 1.5]` as polynomial-like, the axis/exponential pair must
/// be non-polynomial-like.
pub fn excisiveness_examples() -> Result<ExperimentTable> {
    let mut t = ExperimentTable::new(
        "excisiveness",
        &[("example", ""), ("mu_hat", ""), ("verdict", ""), ("expected", ""), ("pass", "")],
    );
    let verdict = |v: ExcisivenessVerdict| match v {
        ExcisivenessVerdict::PolynomialLike => "polynomial-like",
        ExcisivenessVerdict::NonPolynomialLike => "non-polynomial-like",
        ExcisivenessVerdict::Inconclusive => "inconclusive",
    };
    let cloud = build_square_lattice(64, 64, 1.0)?;
    let part = PartitionSpec::default().build(&cloud)?;
    let rs = [1.0, 2.0, 4.0, 6.0, 8.0, 12.0, 16.0];
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        let rep = excisiveness_profile(&[thicken(part.part(i), 1.0)?, thicken(part.part(j), 1.0)?], &rs)?;
        let ok = rep.verdict == ExcisivenessVerdict::PolynomialLike
            && rep.mu_hat.is_some_and(|m| (0.8..=1.5).contains(&m));
        t.push(vec![format!("sectors-{i}{j}").into(), rep.mu_hat.into(), verdict(rep.verdict).into(), "polynomial-like".into(), ok.into()]);
    }
    let (axis, curve) = exponential_curve_regions(5.0f64.exp(), 0.25)?;
    let rep = excisiveness_profile(&[axis, curve], &[0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0])?;
    t.push(vec![
        "exponential-curve".into(),
        rep.mu_hat.into(),
        verdict(rep.verdict).into(),
        "non-polynomial-like".into(),
        (rep.verdict == ExcisivenessVerdict::NonPolynomialLike).into(),
    ]);
    Ok(t)
}
