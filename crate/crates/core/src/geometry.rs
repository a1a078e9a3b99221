//! Finite sample geometries: site clouds with the Euclidean metric and counting
//! measure, region masks, thickenings, and the radius-profiled diagnostics that
//! stand in for coarse notions (transversality, polynomial excisiveness,
//! bounded geometry) on bounded samples.

use std::collections::HashSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fit::{linear_fit, loglog_slope};

pub const DEFAULT_MAX_SITES: usize = 10_000;
pub const MAX_SITES_ENV: &str = "COARSE_HALL_MAX_SITES";

/// Site cap: `COARSE_HALL_MAX_SITES` if set and parseable, else [`DEFAULT_MAX_SITES`].
pub fn max_sites() -> usize {
    std::env::var(MAX_SITES_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_SITES)
}

pub type Point = [f64; 2];

#[inline]
pub fn euclid(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Shape of a rectangular square lattice, row-major: site `j * nx + i` sits at
/// `(i * spacing, j * spacing)` (x possibly mirrored).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeShape {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
}

impl LatticeShape {
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site % self.nx, site / self.nx)
    }
}

/// Finite 2D point set with the Euclidean metric and counting measure.
#[derive(Clone, Debug)]
pub struct SiteCloud {
    label: String,
    sites: Vec<Point>,
    lattice: Option<LatticeShape>,
    fingerprint: String,
}

pub type Cloud = Arc<SiteCloud>;

#[derive(Serialize, Deserialize)]
struct CloudFile {
    label: String,
    sites: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lattice: Option<LatticeShape>,
}

impl SiteCloud {
    pub fn new(label: impl Into<String>, sites: Vec<Point>) -> Result<Self> {
        Self::with_lattice(label, sites, None)
    }

    fn with_lattice(
        label: impl Into<String>,
        sites: Vec<Point>,
        lattice: Option<LatticeShape>,
    ) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let mut seen = HashSet::with_capacity(sites.len());
        for (i, p) in sites.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::arg(format!("site {i} has non-finite coordinates")));
            }
            // +0.0 and -0.0 are the same point
            let key = ((p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits());
            if !seen.insert(key) {
                return Err(Error::arg(format!("site {i} duplicates an earlier site")));
            }
        }
        let fingerprint = fingerprint(&sites);
        Ok(SiteCloud {
            label: label.into(),
            sites,
            lattice,
            fingerprint,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Point] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> Point {
        self.sites[i]
    }

    pub fn lattice(&self) -> Option<LatticeShape> {
        self.lattice
    }

    /// Hex digest of the coordinate bits; identifies the cloud in dumps.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        euclid(self.sites[i], self.sites[j])
    }

    pub fn diameter(&self) -> f64 {
        diameter_of(&self.sites, 0..self.len())
    }

    /// Axis-aligned bounding box `(xmin, ymin, xmax, ymax)`.
    pub fn bounding_box(&self) -> [f64; 4] {
        let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in &self.sites {
            bb[0] = bb[0].min(p[0]);
            bb[1] = bb[1].min(p[1]);
            bb[2] = bb[2].max(p[0]);
            bb[3] = bb[3].max(p[1]);
        }
        bb
    }

    pub fn center(&self) -> Point {
        let bb = self.bounding_box();
        [(bb[0] + bb[2]) / 2.0, (bb[1] + bb[3]) / 2.0]
    }

    /// Distance from each site to the bounding-box boundary.
    pub fn boundary_distance(&self, site: usize) -> f64 {
        let bb = self.bounding_box();
        let p = self.sites[site];
        (p[0] - bb[0]).min(bb[2] - p[0]).min(p[1] - bb[1]).min(bb[3] - p[1])
    }

    /// Orientation-reversed copy, `x -> -x`, with the same site order.
    pub fn mirrored(&self) -> Cloud {
        let sites = self.sites.iter().map(|p| [-p[0], p[1]]).collect();
        Arc::new(
            SiteCloud::with_lattice(format!("{}-mirror", self.label), sites, self.lattice)
                .expect("mirroring preserves validity"),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&CloudFile {
            label: self.label.clone(),
            sites: self.sites.clone(),
            lattice: self.lattice,
        })?)
    }

    pub fn from_json(s: &str) -> Result<Cloud> {
        let f: CloudFile = serde_json::from_str(s)?;
        Ok(Arc::new(SiteCloud::with_lattice(f.label, f.sites, f.lattice)?))
    }
}

fn fingerprint(sites: &[Point]) -> String {
    let mut h = Sha256::new();
    for p in sites {
        h.update(p[0].to_le_bytes());
        h.update(p[1].to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

fn diameter_of(sites: &[Point], members: impl Iterator<Item = usize> + Clone) -> f64 {
    let pts: Vec<Point> = members.map(|i| sites[i]).collect();
    let mut d: f64 = 0.0;
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            d = d.max(euclid(pts[a], pts[b]));
        }
    }
    d
}

pub fn build_square_lattice(nx: usize, ny: usize, spacing: f64) -> Result<Cloud> {
    build_square_lattice_capped(nx, ny, spacing, max_sites())
}

pub fn build_square_lattice_capped(
    nx: usize,
    ny: usize,
    spacing: f64,
    max: usize,
) -> Result<Cloud> {
    if nx == 0 || ny == 0 {
        return Err(Error::arg("lattice dimensions must be positive"));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::arg("lattice spacing must be positive"));
    }
    let n = nx.checked_mul(ny).ok_or(Error::Capacity {
        requested: usize::MAX,
        max,
    })?;
    if n > max {
        return Err(Error::Capacity { requested: n, max });
    }
    let shape = LatticeShape { nx, ny, spacing };
    let sites = (0..n)
        .map(|s| {
            let (i, j) = shape.coords(s);
            [i as f64 * spacing, j as f64 * spacing]
        })
        .collect();
    Ok(Arc::new(SiteCloud::with_lattice(
        format!("square-{nx}x{ny}"),
        sites,
        Some(shape),
    )?))
}

pub fn build_poisson_cloud(density: f64, width: f64, height: f64, seed: u64) -> Result<Cloud> {
    build_poisson_cloud_capped(density, width, height, seed, max_sites())
}

/// Seeded homogeneous Poisson process on `[0, width] x [0, height]`.
pub fn build_poisson_cloud_capped(
    density: f64,
    width: f64,
    height: f64,
    seed: u64,
    max: usize,
) -> Result<Cloud> {
    if !(density >= 0.0 && width >= 0.0 && height >= 0.0) {
        return Err(Error::arg("density and box sides must be nonnegative"));
    }
    let mean = density * width * height;
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::EmptyCloud);
    }
    if mean > max as f64 {
        return Err(Error::Capacity {
            requested: mean.ceil() as usize,
            max,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = Poisson::new(mean)
        .map_err(|e| Error::arg(e.to_string()))?
        .sample(&mut rng) as usize;
    if count == 0 {
        return Err(Error::EmptyCloud);
    }
    if count > max {
        return Err(Error::Capacity {
            requested: count,
            max,
        });
    }
    let sites = (0..count)
        .map(|_| [rng.random::<f64>() * width, rng.random::<f64>() * height])
        .collect();
    Ok(Arc::new(SiteCloud::new(
        format!("poisson-d{density}-{width}x{height}-s{seed}"),
        sites,
    )?))
}

/// Boolean site mask over a cloud; the operator multiplying by an indicator.
#[derive(Clone, Debug)]
pub struct RegionMask {
    cloud: Cloud,
    bits: Vec<bool>,
}

impl PartialEq for RegionMask {
    fn eq(&self, other: &Self) -> bool {
        same_cloud(&self.cloud, &other.cloud) && self.bits == other.bits
    }
}

pub fn same_cloud(a: &Cloud, b: &Cloud) -> bool {
    Arc::ptr_eq(a, b) || (a.len() == b.len() && a.fingerprint == b.fingerprint)
}

impl RegionMask {
    pub fn empty(cloud: &Cloud) -> Self {
        RegionMask {
            cloud: cloud.clone(),
            bits: vec![false; cloud.len()],
        }
    }

    pub fn full(cloud: &Cloud) -> Self {
        RegionMask {
            cloud: cloud.clone(),
            bits: vec![true; cloud.len()],
        }
    }

    pub fn from_bits(cloud: &Cloud, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != cloud.len() {
            return Err(Error::arg(format!(
                "mask has {} bits for {} sites",
                bits.len(),
                cloud.len()
            )));
        }
        Ok(RegionMask {
            cloud: cloud.clone(),
            bits,
        })
    }

    pub fn from_indices(cloud: &Cloud, indices: &[usize]) -> Result<Self> {
        let mut bits = vec![false; cloud.len()];
        for &i in indices {
            if i >= cloud.len() {
                return Err(Error::arg(format!("site index {i} out of range")));
            }
            bits[i] = true;
        }
        Ok(RegionMask {
            cloud: cloud.clone(),
            bits,
        })
    }

    pub fn from_predicate(cloud: &Cloud, mut pred: impl FnMut(Point) -> bool) -> Self {
        let bits = cloud.sites().iter().map(|&p| pred(p)).collect();
        RegionMask {
            cloud: cloud.clone(),
            bits,
        }
    }

    pub fn cloud(&self) -> &Cloud {
        &self.cloud
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub fn indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + Clone + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.then_some(i))
    }

    pub fn complement(&self) -> Self {
        RegionMask {
            cloud: self.cloud.clone(),
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Result<Self> {
        self.check_cloud(other)?;
        Ok(RegionMask {
            cloud: self.cloud.clone(),
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn is_subset(&self, other: &Self) -> Result<bool> {
        self.check_cloud(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(a, b)| !a || *b))
    }

    pub fn is_disjoint(&self, other: &Self) -> Result<bool> {
        self.check_cloud(other)?;
        Ok(!self.bits.iter().zip(&other.bits).any(|(a, b)| *a && *b))
    }

    pub fn check_cloud(&self, other: &Self) -> Result<()> {
        if same_cloud(&self.cloud, &other.cloud) {
            Ok(())
        } else {
            Err(Error::CloudMismatch)
        }
    }

    /// Distance from every site to this region (`+inf` if the region is empty).
    pub fn distance_field(&self) -> Vec<f64> {
        let members: Vec<Point> = self.iter().map(|i| self.cloud.site(i)).collect();
        self.cloud
            .sites()
            .iter()
            .map(|&p| {
                members
                    .iter()
                    .map(|&q| euclid(p, q))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// `d(self, other)`: minimum over site pairs, `+inf` if either is empty.
    pub fn distance_to(&self, other: &Self) -> Result<f64> {
        self.check_cloud(other)?;
        let field = other.distance_field();
        Ok(self.iter().map(|i| field[i]).fold(f64::INFINITY, f64::min))
    }

    pub fn diameter(&self) -> f64 {
        diameter_of(self.cloud.sites(), self.iter())
    }
}

/// `Z_r`: sites within distance `r` of the region.
pub fn thicken(region: &RegionMask, r: f64) -> Result<RegionMask> {
    if !(r >= 0.0) {
        return Err(Error::arg(format!("thickening radius must be nonnegative, got {r}")));
    }
    if r == 0.0 {
        return Ok(region.clone());
    }
    let field = region.distance_field();
    Ok(RegionMask {
        cloud: region.cloud.clone(),
        bits: field.iter().map(|d| *d <= r).collect(),
    })
}

fn check_regions(regions: &[RegionMask], min: usize) -> Result<()> {
    if regions.len() < min {
        return Err(Error::arg(format!("need at least {min} regions")));
    }
    for r in &regions[1..] {
        regions[0].check_cloud(r)?;
    }
    Ok(())
}

fn check_radii(r_samples: &[f64]) -> Result<()> {
    if r_samples.is_empty() {
        return Err(Error::arg("radius samples must be nonempty"));
    }
    if r_samples.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::arg("radius samples must be nonnegative"));
    }
    if r_samples.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::arg("radius samples must be sorted ascending"));
    }
    Ok(())
}

/// One sample of a radius profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub r: f64,
    pub value: f64,
}

/// For each radius, per-site maximum over regions of the distance to each region.
fn max_distance_field(regions: &[RegionMask]) -> Vec<f64> {
    let fields: Vec<Vec<f64>> = regions.iter().map(|z| z.distance_field()).collect();
    (0..regions[0].cloud.len())
        .map(|i| fields.iter().map(|f| f[i]).fold(0.0, f64::max))
        .collect()
}

/// Diameter of the common intersection of the `r`-thickenings, per radius.
pub fn transversality_profile(
    regions: &[RegionMask],
    r_samples: &[f64],
) -> Result<Vec<ProfilePoint>> {
    check_regions(regions, 2)?;
    check_radii(r_samples)?;
    Ok(intersection_diameters(regions, r_samples))
}

pub(crate) fn intersection_diameters(regions: &[RegionMask], r_samples: &[f64]) -> Vec<ProfilePoint> {
    let reach = max_distance_field(regions);
    let cloud = &regions[0].cloud;
    r_samples
        .iter()
        .map(|&r| ProfilePoint {
            r,
            value: diameter_of(
                cloud.sites(),
                reach.iter().enumerate().filter(|(_, d)| **d <= r).map(|(i, _)| i),
            ),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExcisivenessVerdict {
    PolynomialLike,
    NonPolynomialLike,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExcisivenessReport {
    pub r_samples: Vec<f64>,
    /// Smallest `s` with `∩ (Z_n)_r ⊆ (∩ Z_n)_s`; `+inf` when the plain intersection is empty.
    pub f_hat: Vec<f64>,
    /// Fitted exponent, clamped below at 1.
    pub mu_hat: Option<f64>,
    /// Unclamped log-log slope.
    pub raw_slope: Option<f64>,
    pub verdict: ExcisivenessVerdict,
}

/// Minimum number of usable radii before an exponent is fitted.
pub const MIN_FIT_RADII: usize = 4;

pub fn excisiveness_profile(
    regions: &[RegionMask],
    r_samples: &[f64],
) -> Result<ExcisivenessReport> {
    check_regions(regions, 2)?;
    check_radii(r_samples)?;
    let reach = max_distance_field(regions);
    let mut core = regions[0].clone();
    for z in &regions[1..] {
        core = core.intersection(z)?;
    }
    let to_core = core.distance_field();
    let f_hat: Vec<f64> = r_samples
        .iter()
        .map(|&r| {
            reach
                .iter()
                .zip(&to_core)
                .filter(|(d, _)| **d <= r)
                .map(|(_, s)| *s)
                .fold(0.0, f64::max)
        })
        .collect();

    let mut report = ExcisivenessReport {
        r_samples: r_samples.to_vec(),
        f_hat,
        mu_hat: None,
        raw_slope: None,
        verdict: ExcisivenessVerdict::Inconclusive,
    };
    if report.f_hat.iter().any(|f| f.is_infinite()) {
        report.verdict = ExcisivenessVerdict::NonPolynomialLike;
        return Ok(report);
    }
    let (rs, fs): (Vec<f64>, Vec<f64>) = r_samples
        .iter()
        .zip(&report.f_hat)
        .filter(|(r, f)| **r > 0.0 && **f > 0.0)
        .map(|(r, f)| (*r, *f))
        .unzip();
    if rs.len() < MIN_FIT_RADII {
        return Ok(report);
    }
    let slope = loglog_slope(&rs, &fs);
    report.raw_slope = slope;
    report.mu_hat = slope.map(|s| s.max(1.0));

    // Compare a power law (ln f linear in ln r) against an exponential (ln f linear in r).
    let lr: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let lf: Vec<f64> = fs.iter().map(|f| f.ln()).collect();
    let pow = linear_fit(&lr, &lf).map(|(_, _, rss)| rss);
    let exp = linear_fit(&rs, &lf).map(|(_, _, rss)| rss);
    report.verdict = match (pow, exp) {
        (Some(p), Some(e)) if p <= e => ExcisivenessVerdict::PolynomialLike,
        (Some(_), Some(_)) => ExcisivenessVerdict::NonPolynomialLike,
        _ => ExcisivenessVerdict::Inconclusive,
    };
    Ok(report)
}

/// Disjoint cover of the cloud by grid squares of side `r0 / sqrt 2`.
#[derive(Clone, Debug)]
pub struct Tiling {
    cloud: Cloud,
    r0: f64,
    cell_of: Vec<usize>,
    cells: Vec<Vec<usize>>,
}

pub fn build_tiling(cloud: &Cloud, r0: f64) -> Result<Tiling> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::arg("tile diameter bound must be positive"));
    }
    let side = r0 / std::f64::consts::SQRT_2;
    let bb = cloud.bounding_box();
    let keys: Vec<(i64, i64)> = cloud
        .sites()
        .iter()
        .map(|p| {
            (
                ((p[1] - bb[1]) / side).floor() as i64,
                ((p[0] - bb[0]) / side).floor() as i64,
            )
        })
        .collect();
    let mut distinct: Vec<(i64, i64)> = keys.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let mut cells = vec![Vec::new(); distinct.len()];
    let mut cell_of = vec![0; cloud.len()];
    for (site, key) in keys.iter().enumerate() {
        let c = distinct.binary_search(key).expect("key present");
        cell_of[site] = c;
        cells[c].push(site);
    }
    Ok(Tiling {
        cloud: cloud.clone(),
        r0,
        cell_of,
        cells,
    })
}

impl Tiling {
    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn cloud(&self) -> &Cloud {
        &self.cloud
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_of(&self, site: usize) -> usize {
        self.cell_of[site]
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        diameter_of(self.cloud.sites(), self.cells[c].iter().copied())
    }

    /// Matrix of tile-to-tile distances `d(V, W)`.
    pub fn cell_distances(&self) -> Vec<Vec<f64>> {
        let n = self.cells.len();
        let mut d = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in a + 1..n {
                let mut m = f64::INFINITY;
                for &i in &self.cells[a] {
                    for &j in &self.cells[b] {
                        m = m.min(self.cloud.dist(i, j));
                    }
                }
                d[a][b] = m;
                d[b][a] = m;
            }
        }
        d
    }

    /// Distance from each tile to a region (`+inf` for an empty region).
    pub fn cell_distances_to(&self, region: &RegionMask) -> Vec<f64> {
        let field = region.distance_field();
        self.cells
            .iter()
            .map(|c| c.iter().map(|&i| field[i]).fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// Largest number of tiles meeting a closed ball of radius `r` centred at a site.
    pub fn local_finiteness(&self, r: f64) -> usize {
        let n = self.cloud.len();
        let mut best = 0;
        let mut seen = vec![usize::MAX; self.cells.len()];
        for x in 0..n {
            let mut count = 0;
            for y in 0..n {
                if self.cloud.dist(x, y) <= r {
                    let c = self.cell_of[y];
                    if seen[c] != x {
                        seen[c] = x;
                        count += 1;
                    }
                }
            }
            best = best.max(count);
        }
        best
    }

    /// Checks tiling properties: disjoint, covering, diameters bounded by `r0`,
    /// and reports the local-finiteness constant for each probe radius.
    pub fn validate(&self, probe_radii: &[f64]) -> Result<Vec<(f64, usize)>> {
        let mut owner = vec![usize::MAX; self.cloud.len()];
        for (c, members) in self.cells.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::Contract(format!("tile {c} is empty")));
            }
            for &s in members {
                if owner[s] != usize::MAX {
                    return Err(Error::Contract(format!("site {s} lies in two tiles")));
                }
                owner[s] = c;
            }
            let d = self.cell_diameter(c);
            if d > self.r0 * (1.0 + 1e-12) {
                return Err(Error::Contract(format!(
                    "tile {c} has diameter {d} > r0 = {}",
                    self.r0
                )));
            }
        }
        if let Some(s) = owner.iter().position(|o| *o == usize::MAX) {
            return Err(Error::Contract(format!("site {s} is not covered")));
        }
        Ok(probe_radii
            .iter()
            .map(|&r| (r, self.local_finiteness(r)))
            .collect())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub points: Vec<ProfilePoint>,
    pub exponent: Option<f64>,
}

/// `sup_x #(ball(x, r))` per radius, with a fitted growth exponent.
pub fn volume_growth_profile(cloud: &Cloud, r_samples: &[f64]) -> Result<GrowthProfile> {
    check_radii(r_samples)?;
    let n = cloud.len();
    let mut best = vec![0usize; r_samples.len()];
    let mut row = vec![0.0; n];
    for x in 0..n {
        for (y, d) in row.iter_mut().enumerate() {
            *d = cloud.dist(x, y);
        }
        row.sort_unstable_by(f64::total_cmp);
        for (k, &r) in r_samples.iter().enumerate() {
            let count = row.partition_point(|d| *d <= r);
            best[k] = best[k].max(count);
        }
    }
    let points: Vec<ProfilePoint> = r_samples
        .iter()
        .zip(&best)
        .map(|(&r, &c)| ProfilePoint { r, value: c as f64 })
        .collect();
    let (rs, vs): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.r > 0.0)
        .map(|p| (p.r, p.value))
        .unzip();
    let exponent = if rs.len() >= MIN_FIT_RADII {
        loglog_slope(&rs, &vs)
    } else {
        None
    };
    Ok(GrowthProfile { points, exponent })
}

/// CSV with header `r,value`.
pub fn write_profile_csv<W: std::io::Write>(points: &[ProfilePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "value"])?;
    for p in points {
        w.write_record([p.r.to_string(), p.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
