//! Pairings of partitions and half-spaces with idempotents, the windowed bulk
//! conductance, and a momentum-space Chern number used as an independent check.

use std::f64::consts::{PI, TAU};

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RegionMask;
use crate::linalg::{self, c64, CMat};
use crate::models::Flux;
use crate::operators::{compress, generalized_commutator_trace, SiteOperator};
use crate::partitions::{HalfSpacePair, QPartition};

/// Absolute idempotency tolerance (max entry of `P² - P`) for pairing inputs.
pub const IDEMPOTENCY_TOL: f64 = 1e-9;
/// Agreement between formula routes, per site.
pub const ROUTE_TOL_PER_SITE: f64 = 1e-10;
/// Agreement of the windowed conductance with its rewritten form, per site.
pub const WINDOW_TOL_PER_SITE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    PartitionPairing,
    CommutatorTrace,
    TwoCurrent,
    BulkConductance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairingResult {
    pub raw: c64,
    /// `Re(4πi·raw)`.
    pub normalized: f64,
    /// `|Re raw|` plus the idempotency defect of `P`.
    pub residual: f64,
    pub provenance: Provenance,
    /// Disagreement with the independent formula route, in the units of `raw`
    /// (of `normalized` for the bulk conductance).
    pub cross_check: f64,
}

#[derive(Serialize, Deserialize)]
struct PairingJson {
    raw_re: f64,
    raw_im: f64,
    normalized: f64,
    residual: f64,
    provenance: Provenance,
    cross_check: f64,
}

impl Serialize for PairingResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PairingJson {
            raw_re: self.raw.re,
            raw_im: self.raw.im,
            normalized: self.normalized,
            residual: self.residual,
            provenance: self.provenance,
            cross_check: self.cross_check,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PairingResult {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PairingJson::deserialize(d)?;
        Ok(PairingResult {
            raw: c64::new(j.raw_re, j.raw_im),
            normalized: j.normalized,
            residual: j.residual,
            provenance: j.provenance,
            cross_check: j.cross_check,
        })
    }
}

/// `Re(4πi·z)`.
pub fn normalize(raw: c64) -> f64 {
    -4.0 * PI * raw.im
}

fn require_idempotent(p: &SiteOperator) -> Result<f64> {
    let defect = p.idempotency_defect();
    if defect > IDEMPOTENCY_TOL {
        return Err(Error::NotIdempotent {
            defect,
            tolerance: IDEMPOTENCY_TOL,
        });
    }
    Ok(defect)
}

fn check_cloud(p: &SiteOperator, masks: &[&RegionMask]) -> Result<()> {
    for m in masks {
        if !crate::geometry::same_cloud(p.cloud(), m.cloud()) {
            return Err(Error::CloudMismatch);
        }
    }
    Ok(())
}

/// `Tr[P_U, P_V]` with both compressions formed explicitly.
fn compression_commutator_trace(p: &SiteOperator, u: &RegionMask, v: &RegionMask) -> Result<c64> {
    let pu = compress(p, u)?;
    let pv = compress(p, v)?;
    Ok(linalg::trace_of_product(pu.as_ref(), pv.as_ref())
        - linalg::trace_of_product(pv.as_ref(), pu.as_ref()))
}

/// `Tr [A,B,C]_P`, checked against `Tr[P_A, P_B]`.
pub fn partition_pairing(p: &QPartition, proj: &SiteOperator) -> Result<PairingResult> {
    let (a, b, c) = p.triple()?;
    check_cloud(proj, &[a, b, c])?;
    let defect = require_idempotent(proj)?;
    let raw = generalized_commutator_trace(a, b, c, proj)?;
    let alt = compression_commutator_trace(proj, a, b)?;
    let gap = (raw - alt).norm();
    let n = proj.dim() as f64;
    if gap > ROUTE_TOL_PER_SITE * n {
        return Err(Error::Contract(format!(
            "Tr[A,B,C]_P and Tr[P_A,P_B] differ by {gap:.3e} (idempotency defect {defect:.3e})"
        )));
    }
    Ok(PairingResult {
        raw,
        normalized: normalize(raw),
        residual: raw.re.abs() + defect,
        provenance: Provenance::PartitionPairing,
        cross_check: gap,
    })
}

/// `Tr[P_X, P_Y]`, cross-checked against each line of its quadrant decomposition.
pub fn commutator_trace(hs: &HalfSpacePair, proj: &SiteOperator) -> Result<PairingResult> {
    check_cloud(proj, &[hs.x(), hs.y()])?;
    let defect = require_idempotent(proj)?;
    let x = hs.x();
    let y = hs.y();
    let xc_y = hs.not_x_and_y();
    let x_y = hs.x_and_y();
    let x_yc = hs.x_and_not_y();
    let t = |u: &RegionMask, v: &RegionMask| compression_commutator_trace(proj, u, v);
    let raw = t(x, y)?;
    let head = t(x, xc_y)?;
    let lines = [
        head + t(x, x_y)?,
        head + t(x_yc, x_y)?,
        head - t(x_y, x_yc)?,
        head - t(y, x_yc)? + t(xc_y, x_yc)?,
    ];
    let gap = lines.iter().map(|l| (l - raw).norm()).fold(0.0, f64::max);
    let n = proj.dim() as f64;
    if gap > ROUTE_TOL_PER_SITE * n {
        return Err(Error::Contract(format!(
            "quadrant decomposition of Tr[P_X,P_Y] is off by {gap:.3e} (idempotency defect {defect:.3e})"
        )));
    }
    Ok(PairingResult {
        raw,
        normalized: normalize(raw),
        residual: raw.re.abs() + defect,
        provenance: Provenance::CommutatorTrace,
        cross_check: gap,
    })
}

/// Signed sum over triangles with one vertex in each part:
/// `3 Σ_{i∈A, j∈B, k∈C} (P_ij P_jk P_ki - P_ik P_kj P_ji)`.
pub fn two_current_sum(p: &QPartition, proj: &SiteOperator) -> Result<c64> {
    let (a, b, c) = p.triple()?;
    check_cloud(proj, &[a, b, c])?;
    let m = proj.as_ref();
    let (ia, ib, ic) = (a.indices(), b.indices(), c.indices());
    let mut acc = c64::new(0.0, 0.0);
    for &i in &ia {
        for &j in &ib {
            let pij = m[(i, j)];
            let pji = m[(j, i)];
            for &k in &ic {
                acc += pij * m[(j, k)] * m[(k, i)] - m[(i, k)] * m[(k, j)] * pji;
            }
        }
    }
    Ok(acc * 3.0)
}

/// Scale bound for the operator norm, cheap for large matrices.
pub fn norm_bound(p: &SiteOperator) -> f64 {
    let m = p.as_ref();
    let n = p.dim();
    let mut frob = 0.0;
    let mut cols = vec![0.0f64; n];
    let mut rows = vec![0.0f64; n];
    for j in 0..n {
        for i in 0..n {
            let a = m[(i, j)].norm();
            frob += a * a;
            cols[j] += a;
            rows[i] += a;
        }
    }
    let one = cols.iter().copied().fold(0.0, f64::max);
    let inf = rows.iter().copied().fold(0.0, f64::max);
    frob.sqrt().min((one * inf).sqrt())
}

/// `P [[X, P], [Y, P]]`, checked entrywise against `[P_X, P_Y]`.
pub fn kubo_commutator(hs: &HalfSpacePair, proj: &SiteOperator) -> Result<SiteOperator> {
    check_cloud(proj, &[hs.x(), hs.y()])?;
    let xp = proj.mask_commutator(hs.x())?;
    let yp = proj.mask_commutator(hs.y())?;
    let kubo = proj.mul(&xp.commutator(&yp)?)?;
    let direct = compress(proj, hs.x())?.commutator(&compress(proj, hs.y())?)?;
    let diff = kubo.max_abs_diff(&direct);
    let scale = norm_bound(proj).max(1.0).powi(3);
    if diff > 1e-12 * scale {
        return Err(Error::Contract(format!(
            "Kubo form deviates from [P_X,P_Y] by {diff:.3e}; idempotency defect of P is {:.3e}",
            proj.idempotency_defect()
        )));
    }
    Ok(kubo)
}

/// `σ_K = Re(4πi · Tr[A∩K, B∩K, C∩K]_P)`, cross-checked against
/// `12πi · Tr(K [PKAKP, PKBKP] K)`.
pub fn bulk_conductance(p: &QPartition, k: &RegionMask, proj: &SiteOperator) -> Result<PairingResult> {
    let (a, b, c) = p.triple()?;
    check_cloud(proj, &[a, b, c, k])?;
    if k.is_empty() {
        return Err(Error::arg("bulk window is empty"));
    }
    let defect = require_idempotent(proj)?;
    let ak = a.intersection(k)?;
    let bk = b.intersection(k)?;
    let ck = c.intersection(k)?;
    let raw = generalized_commutator_trace(&ak, &bk, &ck, proj)?;
    let sigma = c64::new(0.0, 4.0 * PI) * raw;

    let alt = window_commutator_trace(proj, k, &ak, &bk) * c64::new(0.0, 12.0 * PI);
    let gap = (alt - sigma).norm();
    let n = proj.dim() as f64;
    if gap > WINDOW_TOL_PER_SITE * n {
        return Err(Error::Contract(format!(
            "windowed conductance routes differ by {gap:.3e} (idempotency defect {defect:.3e})"
        )));
    }
    Ok(PairingResult {
        raw,
        normalized: sigma.re,
        residual: raw.re.abs() + defect,
        provenance: Provenance::BulkConductance,
        cross_check: gap,
    })
}

/// `Tr(K [PKAKP, PKBKP] K)` for `ak = A∩K`, `bk = B∩K`.
fn window_commutator_trace(proj: &SiteOperator, k: &RegionMask, ak: &RegionMask, bk: &RegionMask) -> c64 {
    let m = proj.as_ref();
    let all: Vec<usize> = (0..proj.dim()).collect();
    let ik = k.indices();
    let (ia, ib) = (ak.indices(), bk.indices());
    // Rows K of P·A'·P and columns K of P·B'·P, and the same with A', B' swapped.
    let rows = |s: &[usize]| -> CMat {
        &linalg::submatrix(m, &ik, s) * &linalg::submatrix(m, s, &all)
    };
    let cols = |s: &[usize]| -> CMat {
        &linalg::submatrix(m, &all, s) * &linalg::submatrix(m, s, &ik)
    };
    if ia.is_empty() || ib.is_empty() {
        return c64::new(0.0, 0.0);
    }
    let ab = linalg::trace_of_product(rows(&ia).as_ref(), cols(&ib).as_ref());
    let ba = linalg::trace_of_product(rows(&ib).as_ref(), cols(&ia).as_ref());
    ab - ba
}

/// Integer Chern number from the momentum-space oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernOracle {
    pub chern: i64,
    /// Distance of the summed field from the nearest integer.
    pub rounding_defect: f64,
    pub k_grid: usize,
}

/// Bloch Hamiltonian of the Landau-gauge Hofstadter model on a `q`-site
/// magnetic cell.
pub fn bloch_hamiltonian(flux: Flux, t: f64, kx: f64, ky: f64) -> CMat {
    let q = flux.q as usize;
    let phi = flux.value();
    let mut h = Mat::<c64>::zeros(q, q);
    for x in 0..q {
        h[(x, x)] += c64::new(-2.0 * t * (TAU * phi * x as f64 - ky).cos(), 0.0);
    }
    if q == 1 {
        h[(0, 0)] += c64::new(-2.0 * t * kx.cos(), 0.0);
        return h;
    }
    for x in 0..q - 1 {
        h[(x + 1, x)] += c64::new(-t, 0.0);
        h[(x, x + 1)] += c64::new(-t, 0.0);
    }
    // psi(x + q) = e^{i kx} psi(x)
    let wrap = c64::new(-t, 0.0) * c64::cis(kx);
    h[(q - 1, 0)] += wrap;
    h[(0, q - 1)] += wrap.conj();
    h
}

/// Total Chern number of the `gap_index` lowest Hofstadter bands, from link
/// variables on a `k_grid × k_grid` mesh of the magnetic Brillouin zone.
pub fn fhs_chern_oracle(flux: Flux, gap_index: usize, k_grid: usize) -> Result<ChernOracle> {
    let q = flux.q as usize;
    if q == 0 {
        return Err(Error::arg("flux denominator must be positive"));
    }
    if gap_index > q {
        return Err(Error::arg(format!("gap index {gap_index} exceeds the band count {q}")));
    }
    if k_grid < 6 * q {
        return Err(Error::arg(format!("k grid {k_grid} is below the minimum 6q = {}", 6 * q)));
    }
    if gap_index == 0 || gap_index == q {
        return Ok(ChernOracle {
            chern: 0,
            rounding_defect: 0.0,
            k_grid,
        });
    }
    let g = k_grid;
    let mut frames: Vec<CMat> = Vec::with_capacity(g * g);
    let mut lower_max = f64::NEG_INFINITY;
    let mut upper_min = f64::INFINITY;
    for iy in 0..g {
        for ix in 0..g {
            let kx = TAU * ix as f64 / g as f64;
            let ky = TAU * iy as f64 / g as f64;
            let h = bloch_hamiltonian(flux, 1.0, kx, ky);
            let (vals, vecs) = linalg::hermitian_eigen(h.as_ref())?;
            lower_max = lower_max.max(vals[gap_index - 1]);
            upper_min = upper_min.min(vals[gap_index]);
            frames.push(vecs.as_ref().subcols(0, gap_index).to_owned());
        }
    }
    if lower_max >= upper_min {
        return Err(Error::GapClosed {
            gap_index,
            lower_max,
            upper_min,
        });
    }
    let at = |ix: usize, iy: usize| &frames[(iy % g) * g + (ix % g)];
    let link = |u: &CMat, v: &CMat| -> Result<c64> {
        let d = (u.adjoint() * v).determinant();
        let n = d.norm();
        if n < 1e-12 {
            return Err(Error::Numerical("degenerate link variable; refine the k grid".into()));
        }
        Ok(d / n)
    };
    let mut total = 0.0;
    for iy in 0..g {
        for ix in 0..g {
            let ux = link(at(ix, iy), at(ix + 1, iy))?;
            let uy_right = link(at(ix + 1, iy), at(ix + 1, iy + 1))?;
            let ux_up = link(at(ix, iy + 1), at(ix + 1, iy + 1))?;
            let uy = link(at(ix, iy), at(ix, iy + 1))?;
            total += (ux * uy_right * ux_up.conj() * uy.conj()).arg();
        }
    }
    let c = total / TAU;
    let chern = c.round();
    let rounding_defect = (c - chern).abs();
    if rounding_defect >= 1e-3 {
        return Err(Error::Numerical(format!(
            "summed Berry flux {c} is not within 1e-3 of an integer"
        )));
    }
    Ok(ChernOracle {
        chern: chern as i64,
        rounding_defect,
        k_grid,
    })
}

/// Minimum and maximum of each Bloch band over a `k_grid × k_grid` mesh.
pub fn bloch_band_ranges(flux: Flux, t: f64, k_grid: usize) -> Result<Vec<(f64, f64)>> {
    let q = flux.q as usize;
    if q == 0 || k_grid == 0 {
        return Err(Error::arg("flux denominator and k grid must be positive"));
    }
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); q];
    for iy in 0..k_grid {
        for ix in 0..k_grid {
            let kx = TAU * ix as f64 / k_grid as f64;
            let ky = TAU * iy as f64 / k_grid as f64;
            let (vals, _) = linalg::hermitian_eigen(bloch_hamiltonian(flux, t, kx, ky).as_ref())?;
            for (r, v) in ranges.iter_mut().zip(vals) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
    }
    Ok(ranges)
}

/// Number of Bloch bands entirely below `e`, or `None` when `e` falls inside a band.
pub fn bloch_bands_below(flux: Flux, t: f64, e: f64, k_grid: usize) -> Result<Option<usize>> {
    let ranges = bloch_band_ranges(flux, t, k_grid)?;
    if ranges.iter().any(|(lo, hi)| *lo <= e && e <= *hi) {
        return Ok(None);
    }
    Ok(Some(ranges.iter().filter(|(_, hi)| *hi < e).count()))
}

/// Chern numbers of the individual bands; fails if any two touch.
pub fn band_chern_numbers(flux: Flux, k_grid: usize) -> Result<Vec<i64>> {
    let q = flux.q as usize;
    let cumulative = (0..=q)
        .map(|g| fhs_chern_oracle(flux, g, k_grid).map(|o| o.chern))
        .collect::<Result<Vec<_>>>()?;
    Ok(cumulative.windows(2).map(|w| w[1] - w[0]).collect())
}
