//! Site-indexed dense operators: indicator compressions, the generalized
//! commutator, block trace norms, tile seminorms and decay diagnostics.

use faer::{Mat, MatRef};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::geometry::{same_cloud, Cloud, RegionMask, Tiling};
use crate::linalg::{self, c64, CMat};

/// A complex `N x N` matrix indexed by the sites of a cloud.
#[derive(Clone, Debug)]
pub struct SiteOperator {
    matrix: CMat,
    cloud: Cloud,
}

impl SiteOperator {
    pub fn new(cloud: &Cloud, matrix: CMat) -> Result<Self> {
        let n = cloud.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::arg(format!(
                "matrix is {}x{} but the cloud has {n} sites",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(SiteOperator {
            matrix,
            cloud: cloud.clone(),
        })
    }

    pub fn identity(cloud: &Cloud) -> Self {
        let n = cloud.len();
        SiteOperator {
            matrix: Mat::identity(n, n),
            cloud: cloud.clone(),
        }
    }

    pub fn zeros(cloud: &Cloud) -> Self {
        let n = cloud.len();
        SiteOperator {
            matrix: Mat::zeros(n, n),
            cloud: cloud.clone(),
        }
    }

    /// The multiplication operator by the indicator of `z`.
    pub fn indicator(z: &RegionMask) -> Self {
        let n = z.cloud().len();
        SiteOperator {
            matrix: Mat::from_fn(n, n, |i, j| {
                if i == j && z.contains(i) {
                    c64::new(1.0, 0.0)
                } else {
                    c64::new(0.0, 0.0)
                }
            }),
            cloud: z.cloud().clone(),
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn as_ref(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn cloud(&self) -> &Cloud {
        &self.cloud
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> c64 {
        self.matrix[(i, j)]
    }

    fn check(&self, other: &SiteOperator) -> Result<()> {
        if same_cloud(&self.cloud, &other.cloud) {
            Ok(())
        } else {
            Err(Error::CloudMismatch)
        }
    }

    fn check_mask(&self, z: &RegionMask) -> Result<()> {
        if same_cloud(&self.cloud, z.cloud()) {
            Ok(())
        } else {
            Err(Error::CloudMismatch)
        }
    }

    fn with(&self, matrix: CMat) -> Self {
        SiteOperator {
            matrix,
            cloud: self.cloud.clone(),
        }
    }

    pub fn adjoint(&self) -> Self {
        self.with(self.matrix.adjoint().to_owned())
    }

    pub fn conj(&self) -> Self {
        let m = &self.matrix;
        self.with(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].conj()))
    }

    pub fn mul(&self, other: &SiteOperator) -> Result<Self> {
        self.check(other)?;
        Ok(self.with(&self.matrix * &other.matrix))
    }

    pub fn add(&self, other: &SiteOperator) -> Result<Self> {
        self.check(other)?;
        Ok(self.with(&self.matrix + &other.matrix))
    }

    pub fn sub(&self, other: &SiteOperator) -> Result<Self> {
        self.check(other)?;
        Ok(self.with(&self.matrix - &other.matrix))
    }

    pub fn scale(&self, s: c64) -> Self {
        let m = &self.matrix;
        self.with(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s))
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &SiteOperator) -> Result<Self> {
        self.check(other)?;
        Ok(self.with(&self.matrix * &other.matrix - &other.matrix * &self.matrix))
    }

    /// `Z·L`: rows outside `z` zeroed.
    pub fn left_mask(&self, z: &RegionMask) -> Result<Self> {
        self.check_mask(z)?;
        let m = &self.matrix;
        Ok(self.with(Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
            if z.contains(i) {
                m[(i, j)]
            } else {
                c64::new(0.0, 0.0)
            }
        })))
    }

    /// `L·Z`: columns outside `z` zeroed.
    pub fn right_mask(&self, z: &RegionMask) -> Result<Self> {
        self.check_mask(z)?;
        let m = &self.matrix;
        Ok(self.with(Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
            if z.contains(j) {
                m[(i, j)]
            } else {
                c64::new(0.0, 0.0)
            }
        })))
    }

    /// `[Z, L] = ZL - LZ`.
    pub fn mask_commutator(&self, z: &RegionMask) -> Result<Self> {
        self.check_mask(z)?;
        let m = &self.matrix;
        Ok(self.with(Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
            match (z.contains(i), z.contains(j)) {
                (true, false) => m[(i, j)],
                (false, true) => -m[(i, j)],
                _ => c64::new(0.0, 0.0),
            }
        })))
    }

    pub fn trace(&self) -> c64 {
        linalg::trace(self.as_ref())
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(self.as_ref())
    }

    pub fn max_abs_diff(&self, other: &SiteOperator) -> f64 {
        linalg::max_abs_diff(self.as_ref(), other.as_ref())
    }

    pub fn idempotency_defect(&self) -> f64 {
        linalg::idempotency_defect(self.as_ref())
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(self.as_ref())
    }

    pub fn spectral_norm(&self) -> Result<f64> {
        linalg::spectral_norm(self.as_ref())
    }

    pub fn to_json(&self) -> Result<String> {
        let n = self.dim();
        let mut data = Vec::with_capacity(2 * n * n);
        for i in 0..n {
            for j in 0..n {
                let z = self.matrix[(i, j)];
                data.push(z.re);
                data.push(z.im);
            }
        }
        Ok(serde_json::to_string(&MatrixDump {
            cloud_hash: self.cloud.fingerprint().to_string(),
            n,
            data,
        })?)
    }

    /// Loads a dump, refusing it when the cloud hash does not match.
    pub fn from_json(cloud: &Cloud, s: &str) -> Result<Self> {
        let dump: MatrixDump = serde_json::from_str(s)?;
        if dump.cloud_hash != cloud.fingerprint() {
            return Err(Error::CloudMismatch);
        }
        if dump.n != cloud.len() || dump.data.len() != 2 * dump.n * dump.n {
            return Err(Error::arg("matrix dump has the wrong size"));
        }
        let n = dump.n;
        let m = Mat::from_fn(n, n, |i, j| {
            let k = 2 * (i * n + j);
            c64::new(dump.data[k], dump.data[k + 1])
        });
        SiteOperator::new(cloud, m)
    }
}

/// Row-major dump with interleaved real and imaginary parts.
#[derive(Serialize, Deserialize)]
struct MatrixDump {
    cloud_hash: String,
    n: usize,
    data: Vec<f64>,
}

/// `P_Z = P Z P`.
pub fn compress(p: &SiteOperator, z: &RegionMask) -> Result<SiteOperator> {
    p.right_mask(z)?.mul(p)
}

/// The six-term operator `[A,B,C]_P`.
pub fn generalized_commutator(
    a: &RegionMask,
    b: &RegionMask,
    c: &RegionMask,
    p: &SiteOperator,
) -> Result<SiteOperator> {
    let ap = p.left_mask(a)?;
    let bp = p.left_mask(b)?;
    let cp = p.left_mask(c)?;
    let (ap, bp, cp) = (ap.matrix(), bp.matrix(), cp.matrix());
    let abc = &(ap * bp) * cp;
    let bca = &(bp * cp) * ap;
    let cab = &(cp * ap) * bp;
    let cba = &(cp * bp) * ap;
    let bac = &(bp * ap) * cp;
    let acb = &(ap * cp) * bp;
    Ok(p.with(abc + bca + cab - cba - bac - acb))
}

/// `Tr [A,B,C]_P` from submatrices, without forming the operator.
pub fn generalized_commutator_trace(
    a: &RegionMask,
    b: &RegionMask,
    c: &RegionMask,
    p: &SiteOperator,
) -> Result<c64> {
    for z in [a, b, c] {
        p.check_mask(z)?;
    }
    let (ia, ib, ic) = (a.indices(), b.indices(), c.indices());
    Ok(triple_trace(p, &ia, &ib, &ic)
        + triple_trace(p, &ib, &ic, &ia)
        + triple_trace(p, &ic, &ia, &ib)
        - triple_trace(p, &ic, &ib, &ia)
        - triple_trace(p, &ib, &ia, &ic)
        - triple_trace(p, &ia, &ic, &ib))
}

/// `Tr(X P Y P Z P) = Tr(P[X,Y] P[Y,Z] P[Z,X])`.
fn triple_trace(p: &SiteOperator, x: &[usize], y: &[usize], z: &[usize]) -> c64 {
    if x.is_empty() || y.is_empty() || z.is_empty() {
        return c64::new(0.0, 0.0);
    }
    let m = p.as_ref();
    let pxy = linalg::submatrix(m, x, y);
    let pyz = linalg::submatrix(m, y, z);
    let pzx = linalg::submatrix(m, z, x);
    let xz = &pxy * &pyz;
    linalg::trace_of_product(xz.as_ref(), pzx.as_ref())
}

/// Trace norm of the block of `L` with rows in `v` and columns in `w`.
pub fn block_trace_norm(l: &SiteOperator, v: &RegionMask, w: &RegionMask) -> Result<f64> {
    l.check_mask(v)?;
    l.check_mask(w)?;
    linalg::trace_norm(linalg::submatrix(l.as_ref(), &v.indices(), &w.indices()).as_ref())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeminormKind {
    Bracket,
    Sum,
}

impl SeminormKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SeminormKind::Bracket => "bracket",
            SeminormKind::Sum => "sum",
        }
    }
}

pub const DEFAULT_NU_GRID: [f64; 5] = [0.0, 1.0, 2.0, 4.0, 8.0];

/// Trace norms `‖V L W‖_Tr` for every pair of tiles, computed once.
#[derive(Clone, Debug)]
pub struct BlockNorms {
    norms: Vec<Vec<f64>>,
    dist: Vec<Vec<f64>>,
    r0: f64,
}

impl BlockNorms {
    pub fn new(l: &SiteOperator, tiling: &Tiling) -> Result<Self> {
        Self::build(l, tiling, None)
    }

    /// Only pairs with both tiles in `tiles` are evaluated; the rest read as 0.
    pub fn restricted(l: &SiteOperator, tiling: &Tiling, tiles: &[bool]) -> Result<Self> {
        if tiles.len() != tiling.len() {
            return Err(Error::arg("tile subset length differs from the tiling"));
        }
        Self::build(l, tiling, Some(tiles))
    }

    fn build(l: &SiteOperator, tiling: &Tiling, tiles: Option<&[bool]>) -> Result<Self> {
        if !same_cloud(l.cloud(), tiling.cloud()) {
            return Err(Error::CloudMismatch);
        }
        let m = l.as_ref();
        let cells = tiling.cells();
        let keep = |v: usize| tiles.is_none_or(|k| k[v]);
        let norms = cells
            .par_iter()
            .enumerate()
            .map(|(iv, v)| {
                cells
                    .iter()
                    .enumerate()
                    .map(|(iw, w)| {
                        if keep(iv) && keep(iw) {
                            linalg::trace_norm(linalg::submatrix(m, v, w).as_ref())
                        } else {
                            Ok(0.0)
                        }
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockNorms {
            norms,
            dist: tiling.cell_distances(),
            r0: tiling.r0(),
        })
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn norm(&self, v: usize, w: usize) -> f64 {
        self.norms[v][w]
    }

    pub fn distance(&self, v: usize, w: usize) -> f64 {
        self.dist[v][w]
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Evaluates one seminorm. `z_dist` holds `d(V, Z)` per tile for the
    /// localized kinds; `tiles` restricts both tile indices to a subset.
    pub fn seminorm(
        &self,
        kind: SeminormKind,
        nu: f64,
        z_dist: Option<&[f64]>,
        tiles: Option<&[bool]>,
    ) -> f64 {
        let t = self.norms.len();
        let keep = |v: usize| tiles.is_none_or(|k| k[v]);
        let weight = |v: usize, w: usize| match z_dist {
            None => (1.0 + self.dist[v][w]).powf(nu),
            Some(dz) => (1.0 + dz[v]).powf(nu) * (1.0 + dz[w]).powf(nu),
        };
        let mut best = 0.0f64;
        for v in (0..t).filter(|v| keep(*v)) {
            let row = (0..t)
                .filter(|w| keep(*w))
                .map(|w| {
                    let n = self.norms[v][w];
                    if n == 0.0 {
                        0.0
                    } else {
                        n * weight(v, w)
                    }
                });
            let val = match kind {
                SeminormKind::Bracket => row.fold(0.0, f64::max),
                SeminormKind::Sum => row.sum(),
            };
            best = best.max(val);
        }
        best
    }
}

/// One seminorm value of `L` on a tiling, optionally localized at `z`.
pub fn seminorm(
    l: &SiteOperator,
    nu: f64,
    tiling: &Tiling,
    kind: SeminormKind,
    z: Option<&RegionMask>,
) -> Result<f64> {
    if !(nu >= 0.0) {
        return Err(Error::arg("seminorm order must be nonnegative"));
    }
    let blocks = BlockNorms::new(l, tiling)?;
    let dz = z.map(|z| tiling.cell_distances_to(z));
    Ok(blocks.seminorm(kind, nu, dz.as_deref(), None))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormEntry {
    pub kind: SeminormKind,
    pub nu: f64,
    /// Label of the localizing region, if any.
    pub z: Option<String>,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeminormReport {
    pub r0: f64,
    pub tiles: usize,
    pub entries: Vec<SeminormEntry>,
}

impl SeminormReport {
    /// Both kinds over a ν grid, plus localized values for each labelled region.
    pub fn compute(
        l: &SiteOperator,
        tiling: &Tiling,
        nus: &[f64],
        regions: &[(String, RegionMask)],
        tiles: Option<&[bool]>,
    ) -> Result<Self> {
        let blocks = BlockNorms::new(l, tiling)?;
        let dists: Vec<(String, Vec<f64>)> = regions
            .iter()
            .map(|(name, z)| (name.clone(), tiling.cell_distances_to(z)))
            .collect();
        let mut entries = Vec::new();
        for kind in [SeminormKind::Bracket, SeminormKind::Sum] {
            for &nu in nus {
                entries.push(SeminormEntry {
                    kind,
                    nu,
                    z: None,
                    value: blocks.seminorm(kind, nu, None, tiles),
                });
                for (name, dz) in &dists {
                    entries.push(SeminormEntry {
                        kind,
                        nu,
                        z: Some(name.clone()),
                        value: blocks.seminorm(kind, nu, Some(dz), tiles),
                    });
                }
            }
        }
        Ok(SeminormReport {
            r0: tiling.r0(),
            tiles: tiling.len(),
            entries,
        })
    }

    pub fn get(&self, kind: SeminormKind, nu: f64, z: Option<&str>) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.kind == kind && e.nu == nu && e.z.as_deref() == z)
            .map(|e| e.value)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "nu", "z", "value"])?;
        for e in &self.entries {
            w.write_record([
                e.kind.as_str().to_string(),
                e.nu.to_string(),
                e.z.clone().unwrap_or_default(),
                format!("{:.12e}", e.value),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Smallest `r` with `|L[i,j]| <= threshold` whenever `d(i,j) > r`.
pub fn propagation_radius(l: &SiteOperator, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(Error::arg("threshold must be positive"));
    }
    let cloud = l.cloud();
    let n = l.dim();
    let r = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = 0.0f64;
            for j in 0..n {
                if l.matrix[(i, j)].norm() > threshold {
                    r = r.max(cloud.dist(i, j));
                }
            }
            r
        })
        .reduce(|| 0.0, f64::max);
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayBin {
    pub lo: f64,
    pub hi: f64,
    /// Largest block trace norm among tile pairs in the bin; 0 when empty.
    pub max_norm: f64,
    pub pairs: usize,
}

/// Per distance bin `[lo, hi)`, the largest `‖V L W‖_Tr` over tile pairs.
pub fn decay_profile(l: &SiteOperator, tiling: &Tiling, bins: &[f64]) -> Result<Vec<DecayBin>> {
    let blocks = BlockNorms::new(l, tiling)?;
    decay_profile_from(&blocks, bins, None)
}

/// As [`decay_profile`], reusing block norms and optionally restricted to a tile subset.
pub fn decay_profile_from(
    blocks: &BlockNorms,
    bins: &[f64],
    tiles: Option<&[bool]>,
) -> Result<Vec<DecayBin>> {
    if bins.len() < 2 || bins.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::arg("bin edges must be strictly increasing, at least two"));
    }
    let mut out: Vec<DecayBin> = bins
        .windows(2)
        .map(|w| DecayBin {
            lo: w[0],
            hi: w[1],
            max_norm: 0.0,
            pairs: 0,
        })
        .collect();
    let keep = |v: usize| tiles.is_none_or(|k| k[v]);
    for v in (0..blocks.len()).filter(|v| keep(*v)) {
        for w in (0..blocks.len()).filter(|w| keep(*w)) {
            let d = blocks.distance(v, w);
            let k = bins.partition_point(|e| *e <= d);
            if k == 0 || k >= bins.len() {
                continue;
            }
            let bin = &mut out[k - 1];
            bin.pairs += 1;
            bin.max_norm = bin.max_norm.max(blocks.norm(v, w));
        }
    }
    Ok(out)
}

/// Least-squares slope of `ln max_norm` against bin midpoint over nonempty,
/// nonzero bins with `lo >= min_distance`.
pub fn decay_slope(profile: &[DecayBin], min_distance: f64) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = profile
        .iter()
        .filter(|b| b.pairs > 0 && b.max_norm > 0.0 && b.lo >= min_distance)
        .map(|b| (0.5 * (b.lo + b.hi), b.max_norm.ln()))
        .unzip();
    linear_fit(&xs, &ys).map(|(s, _, _)| s)
}
