//! Tight-binding Hamiltonians on site clouds, their spectra, and Fermi projections.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_poisson_cloud, build_square_lattice, Cloud, RegionMask};
use crate::linalg::{self, c64, CMat};
use crate::operators::SiteOperator;

/// Relative Hermiticity tolerance for constructed Hamiltonians.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Relative distance an energy must keep from the spectrum.
pub const GAP_MARGIN: f64 = 1e-6;
pub const IDEMPOTENCY_TOL: f64 = 1e-10;

/// Rational flux `p/q` per plaquette.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flux {
    pub p: i64,
    pub q: u64,
}

impl Flux {
    pub fn new(p: i64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::arg("flux denominator must be positive"));
        }
        Ok(Flux { p, q })
    }

    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

#[derive(Clone, Debug)]
pub struct Hamiltonian {
    matrix: CMat,
    cloud: Cloud,
    hop_range: f64,
    params: BTreeMap<String, f64>,
}

impl Hamiltonian {
    /// Wraps a matrix after checking Hermiticity and hopping locality.
    pub fn new(
        cloud: &Cloud,
        matrix: CMat,
        hop_range: f64,
        params: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let h = Hamiltonian {
            matrix,
            cloud: cloud.clone(),
            hop_range,
            params,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cloud.len();
        if self.matrix.nrows() != n || self.matrix.ncols() != n {
            return Err(Error::arg("Hamiltonian dimension does not match the cloud"));
        }
        let scale = linalg::max_abs(self.matrix.as_ref());
        let herm = linalg::hermiticity_defect(self.matrix.as_ref());
        if herm > HERMITICITY_TOL * scale {
            return Err(Error::Contract(format!("Hamiltonian is not Hermitian (defect {herm:.3e})")));
        }
        if let Some((i, j)) = self.locality_violation() {
            return Err(Error::Contract(format!(
                "hop {i}->{j} spans {} beyond the declared range {}",
                self.cloud.dist(i, j),
                self.hop_range
            )));
        }
        Ok(())
    }

    /// First nonzero entry connecting sites farther apart than the hopping range.
    pub fn locality_violation(&self) -> Option<(usize, usize)> {
        let n = self.cloud.len();
        let reach = self.hop_range * (1.0 + 1e-12);
        for i in 0..n {
            for j in 0..n {
                if self.matrix[(i, j)] != c64::new(0.0, 0.0) && self.cloud.dist(i, j) > reach {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn cloud(&self) -> &Cloud {
        &self.cloud
    }

    pub fn hop_range(&self) -> f64 {
        self.hop_range
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.cloud.len()
    }

    pub fn as_operator(&self) -> SiteOperator {
        SiteOperator::new(&self.cloud, self.matrix.clone()).expect("dimension checked")
    }

    /// `H + diag(v)`.
    pub fn with_onsite(&self, v: &[f64]) -> Result<Self> {
        if v.len() != self.dim() {
            return Err(Error::arg("onsite potential has the wrong length"));
        }
        let mut m = self.matrix.clone();
        for (i, x) in v.iter().enumerate() {
            m[(i, i)] += c64::new(*x, 0.0);
        }
        Ok(Hamiltonian {
            matrix: m,
            cloud: self.cloud.clone(),
            hop_range: self.hop_range,
            params: self.params.clone(),
        })
    }

    pub fn shifted(&self, c: f64) -> Self {
        self.with_onsite(&vec![c; self.dim()]).expect("length matches")
    }

    /// Adds seeded onsite disorder uniform in `[-w/2, w/2]`.
    pub fn with_disorder(&self, w: f64, seed: u64) -> Result<Self> {
        if !(w >= 0.0) {
            return Err(Error::arg("disorder strength must be nonnegative"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..self.dim()).map(|_| w * (rng.random::<f64>() - 0.5)).collect();
        let mut h = self.with_onsite(&v)?;
        h.params.insert("disorder".into(), w);
        h.params.insert("disorder_seed".into(), seed as f64);
        Ok(h)
    }

    /// `D H D†` with `D = diag(exp(i λ))`.
    pub fn gauge_transformed(&self, lambda: &[f64]) -> Result<Self> {
        if lambda.len() != self.dim() {
            return Err(Error::arg("gauge phases have the wrong length"));
        }
        let m = &self.matrix;
        let matrix = Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
            m[(i, j)] * c64::cis(lambda[i] - lambda[j])
        });
        Ok(Hamiltonian {
            matrix,
            cloud: self.cloud.clone(),
            hop_range: self.hop_range,
            params: self.params.clone(),
        })
    }

    pub fn eigensystem(&self) -> Result<Eigensystem> {
        let (values, vectors) = linalg::hermitian_eigen(self.matrix.as_ref())?;
        Ok(Eigensystem {
            values,
            vectors,
            cloud: self.cloud.clone(),
        })
    }
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Landau-gauge Hofstadter model: hops `-t`, with the upward hop from `(x, y)`
/// carrying the phase `exp(2πi·flux·x)`, `x` in units of the lattice spacing.
/// Boundaries are open.
pub fn hofstadter(cloud: &Cloud, flux: Flux, t: f64) -> Result<Hamiltonian> {
    let shape = cloud
        .lattice()
        .ok_or_else(|| Error::arg("the Hofstadter model needs a square-lattice cloud"))?;
    let n = cloud.len();
    let phi = flux.value();
    let mut m = Mat::<c64>::zeros(n, n);
    let hop = c64::new(-t, 0.0);
    for s in 0..n {
        let (i, j) = shape.coords(s);
        if i + 1 < shape.nx {
            let r = shape.index(i + 1, j);
            m[(r, s)] = hop;
            m[(s, r)] = hop;
        }
        if j + 1 < shape.ny {
            let u = shape.index(i, j + 1);
            let x = cloud.site(s)[0] / shape.spacing;
            let amp = hop * c64::cis(TAU * phi * x);
            m[(u, s)] = amp;
            m[(s, u)] = amp.conj();
        }
    }
    Hamiltonian::new(
        cloud,
        m,
        shape.spacing,
        params(&[("flux", phi), ("flux_p", flux.p as f64), ("flux_q", flux.q as f64), ("t", t)]),
    )
}

/// Symmetric-gauge magnetic hopping on an arbitrary cloud:
/// `H[i,j] = -t·exp(iθ_ij)` for `0 < d(i,j) <= hop_range`, `θ_ij = (B/2)(x_i y_j - x_j y_i)`.
pub fn amorphous_magnetic(cloud: &Cloud, hop_range: f64, t: f64, field: f64) -> Result<Hamiltonian> {
    if !(hop_range > 0.0) {
        return Err(Error::arg("hopping range must be positive"));
    }
    let n = cloud.len();
    let mut m = Mat::<c64>::zeros(n, n);
    for i in 0..n {
        let pi = cloud.site(i);
        for j in (i + 1)..n {
            if cloud.dist(i, j) <= hop_range {
                let pj = cloud.site(j);
                let theta = amorphous_phase(field, pi, pj);
                let amp = c64::new(-t, 0.0) * c64::cis(theta);
                m[(i, j)] = amp;
                m[(j, i)] = amp.conj();
            }
        }
    }
    Hamiltonian::new(
        cloud,
        m,
        hop_range,
        params(&[("hop_range", hop_range), ("t", t), ("field", field)]),
    )
}

/// `θ_ij = (B/2)(x_i y_j - x_j y_i)`. Positive `B` has the opposite orientation to positive Hofstadter flux.
pub fn amorphous_phase(field: f64, pi: [f64; 2], pj: [f64; 2]) -> f64 {
    0.5 * field * (pi[0] * pj[1] - pj[0] * pi[1])
}

/// Real nearest-neighbour hopping with a staggered onsite `±delta` (`+` on even `x + y`).
pub fn checkerboard_trivial(cloud: &Cloud, t: f64, delta: f64) -> Result<Hamiltonian> {
    let shape = cloud
        .lattice()
        .ok_or_else(|| Error::arg("the checkerboard model needs a square-lattice cloud"))?;
    let n = cloud.len();
    let mut m = Mat::<c64>::zeros(n, n);
    let hop = c64::new(-t, 0.0);
    for s in 0..n {
        let (i, j) = shape.coords(s);
        m[(s, s)] = c64::new(if (i + j) % 2 == 0 { delta } else { -delta }, 0.0);
        if i + 1 < shape.nx {
            let r = shape.index(i + 1, j);
            m[(r, s)] = hop;
            m[(s, r)] = hop;
        }
        if j + 1 < shape.ny {
            let u = shape.index(i, j + 1);
            m[(u, s)] = hop;
            m[(s, u)] = hop;
        }
    }
    Hamiltonian::new(cloud, m, shape.spacing, params(&[("t", t), ("delta", delta)]))
}

/// Spectral gap `(lower, upper)` between consecutive eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
}

impl Gap {
    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, e: f64) -> bool {
        self.lower < e && e < self.upper
    }

    fn distance(&self, e: f64) -> f64 {
        if e < self.lower {
            self.lower - e
        } else if e > self.upper {
            e - self.upper
        } else {
            0.0
        }
    }
}

/// Gaps wider than `threshold` between consecutive values of a sorted list.
pub fn gaps_of(values: &[f64], threshold: f64) -> Vec<Gap> {
    values
        .windows(2)
        .filter(|w| w[1] - w[0] > threshold)
        .map(|w| Gap {
            lower: w[0],
            upper: w[1],
            width: w[1] - w[0],
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumInfo {
    pub eigenvalues: Vec<f64>,
    pub gaps: Vec<Gap>,
}

impl SpectrumInfo {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "eigenvalue"])?;
        for (i, v) in self.eigenvalues.iter().enumerate() {
            w.write_record([i.to_string(), format!("{v:.15e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn spectrum(h: &Hamiltonian, gap_width_threshold: f64) -> Result<SpectrumInfo> {
    let eig = h.eigensystem()?;
    Ok(eig.spectrum(gap_width_threshold))
}

/// Sorted eigenvalues and matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    values: Vec<f64>,
    vectors: CMat,
    cloud: Cloud,
}

impl Eigensystem {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &CMat {
        &self.vectors
    }

    pub fn cloud(&self) -> &Cloud {
        &self.cloud
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn spectrum(&self, gap_width_threshold: f64) -> SpectrumInfo {
        SpectrumInfo {
            eigenvalues: self.values.clone(),
            gaps: gaps_of(&self.values, gap_width_threshold),
        }
    }

    /// Weight of each eigenvector on `region`.
    pub fn weights_on(&self, region: &RegionMask) -> Vec<f64> {
        let idx = region.indices();
        (0..self.values.len())
            .map(|k| idx.iter().map(|i| self.vectors[(*i, k)].norm_sqr()).sum())
            .collect()
    }

    /// Eigenvalues of states carrying at least half the uniform share of their
    /// weight on the sites at distance `>= margin` from the bounding box.
    /// Open-boundary edge modes are filtered out this way.
    pub fn bulk_values(&self, margin: f64) -> Vec<f64> {
        let bulk = RegionMask::from_bits(
            &self.cloud,
            (0..self.cloud.len())
                .map(|i| self.cloud.boundary_distance(i) >= margin)
                .collect(),
        )
        .expect("same cloud");
        if bulk.is_empty() {
            return self.values.clone();
        }
        let share = bulk.count() as f64 / self.cloud.len() as f64;
        self.weights_on(&bulk)
            .iter()
            .zip(&self.values)
            .filter(|(w, _)| **w >= 0.5 * share)
            .map(|(_, v)| *v)
            .collect()
    }

    /// Gaps of the bulk spectrum wider than `threshold`.
    pub fn bulk_gaps(&self, margin: f64, threshold: f64) -> Vec<Gap> {
        gaps_of(&self.bulk_values(margin), threshold)
    }

    /// A Fermi level inside `gap`: the midpoint of the two consecutive
    /// eigenvalues that straddle the gap centre.
    pub fn fermi_level_in(&self, gap: &Gap) -> f64 {
        let c = gap.center();
        let k = self.values.partition_point(|v| *v < c);
        match (k.checked_sub(1).map(|i| self.values[i]), self.values.get(k)) {
            (Some(lo), Some(hi)) => 0.5 * (lo + hi),
            _ => c,
        }
    }

    fn margin(&self) -> f64 {
        GAP_MARGIN * self.spectral_radius()
    }

    /// Checks that `e` keeps the margin from every eigenvalue and returns the
    /// number of eigenvalues below it.
    pub fn check_in_gap(&self, e: f64) -> Result<usize> {
        if !e.is_finite() {
            return Err(Error::arg("energy must be finite"));
        }
        let k = self.values.partition_point(|v| *v < e);
        let dist = [k.checked_sub(1), Some(k)]
            .into_iter()
            .flatten()
            .filter_map(|i| self.values.get(i))
            .map(|v| (v - e).abs())
            .fold(f64::INFINITY, f64::min);
        let margin = self.margin();
        if dist <= margin {
            let nearest = gaps_of(&self.values, 2.0 * margin)
                .into_iter()
                .min_by(|a, b| a.distance(e).total_cmp(&b.distance(e)))
                .map(|g| (g.lower, g.upper));
            return Err(Error::GapViolation {
                energy: e,
                distance: dist,
                nearest_gap: nearest,
            });
        }
        Ok(k)
    }

    fn projector(&self, lo: usize, hi: usize) -> CMat {
        let n = self.vectors.nrows();
        let v = self.vectors.as_ref().subcols(lo, hi - lo);
        if hi == lo {
            return Mat::zeros(n, n);
        }
        v * v.adjoint()
    }

    fn orthonormality_defect(&self, lo: usize, hi: usize) -> f64 {
        if hi == lo {
            return 0.0;
        }
        let v = self.vectors.as_ref().subcols(lo, hi - lo);
        let g = v.adjoint() * v;
        linalg::max_abs_diff(g.as_ref(), Mat::<c64>::identity(hi - lo, hi - lo).as_ref())
    }

    pub fn fermi_projection(&self, e: f64) -> Result<FermiProjection> {
        let k = self.check_in_gap(e)?;
        let defect = self.orthonormality_defect(0, k);
        if defect > IDEMPOTENCY_TOL {
            return Err(Error::NotIdempotent {
                defect,
                tolerance: IDEMPOTENCY_TOL,
            });
        }
        let lower = k.checked_sub(1).map_or(f64::NEG_INFINITY, |i| self.values[i]);
        let upper = self.values.get(k).copied().unwrap_or(f64::INFINITY);
        Ok(FermiProjection {
            op: SiteOperator::new(&self.cloud, self.projector(0, k))?,
            fermi_energy: e,
            gap: (lower, upper),
            rank: k,
        })
    }

    /// Spectral projection onto eigenvalues in `(e_lo, e_hi)`; both energies must lie in gaps.
    pub fn band_projection(&self, e_lo: f64, e_hi: f64) -> Result<SiteOperator> {
        if !(e_lo <= e_hi) {
            return Err(Error::arg("band energies must be ordered"));
        }
        let lo = self.check_in_gap(e_lo)?;
        let hi = self.check_in_gap(e_hi)?;
        SiteOperator::new(&self.cloud, self.projector(lo, hi))
    }
}

/// Spectral projection of a Hamiltonian below a Fermi level in a gap.
#[derive(Clone, Debug)]
pub struct FermiProjection {
    op: SiteOperator,
    fermi_energy: f64,
    gap: (f64, f64),
    rank: usize,
}

impl FermiProjection {
    pub fn operator(&self) -> &SiteOperator {
        &self.op
    }

    pub fn into_operator(self) -> SiteOperator {
        self.op
    }

    pub fn fermi_energy(&self) -> f64 {
        self.fermi_energy
    }

    /// Adjacent eigenvalues `(lower, upper)` around the Fermi level.
    pub fn gap(&self) -> (f64, f64) {
        self.gap
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

pub fn fermi_projection(h: &Hamiltonian, e: f64) -> Result<FermiProjection> {
    h.eigensystem()?.fermi_projection(e)
}

/// Distance from the bounding box below which sites count as boundary for the
/// bulk-gap finder.
pub const DEFAULT_BULK_MARGIN: f64 = 4.0;

/// JSON model description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Hofstadter {
        nx: usize,
        ny: usize,
        flux: Flux,
        #[serde(default = "one")]
        t: f64,
        #[serde(default)]
        disorder: f64,
        #[serde(default)]
        disorder_seed: u64,
    },
    Amorphous {
        density: f64,
        width: f64,
        height: f64,
        #[serde(default)]
        cloud_seed: u64,
        hop_range: f64,
        #[serde(default = "one")]
        t: f64,
        field: f64,
        #[serde(default)]
        disorder: f64,
        #[serde(default)]
        disorder_seed: u64,
    },
    Checkerboard {
        nx: usize,
        ny: usize,
        #[serde(default = "one")]
        t: f64,
        delta: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl ModelConfig {
    pub fn build_cloud(&self) -> Result<Cloud> {
        match self {
            ModelConfig::Hofstadter { nx, ny, .. } | ModelConfig::Checkerboard { nx, ny, .. } => {
                build_square_lattice(*nx, *ny, 1.0)
            }
            ModelConfig::Amorphous {
                density,
                width,
                height,
                cloud_seed,
                ..
            } => build_poisson_cloud(*density, *width, *height, *cloud_seed),
        }
    }

    pub fn build(&self) -> Result<Hamiltonian> {
        self.build_on(&self.build_cloud()?)
    }

    pub fn build_on(&self, cloud: &Cloud) -> Result<Hamiltonian> {
        match self {
            ModelConfig::Hofstadter {
                flux,
                t,
                disorder,
                disorder_seed,
                ..
            } => {
                let h = hofstadter(cloud, Flux::new(flux.p, flux.q)?, *t)?;
                if *disorder > 0.0 {
                    h.with_disorder(*disorder, *disorder_seed)
                } else {
                    Ok(h)
                }
            }
            ModelConfig::Amorphous {
                hop_range,
                t,
                field,
                disorder,
                disorder_seed,
                ..
            } => {
                let h = amorphous_magnetic(cloud, *hop_range, *t, *field)?;
                if *disorder > 0.0 {
                    h.with_disorder(*disorder, *disorder_seed)
                } else {
                    Ok(h)
                }
            }
            ModelConfig::Checkerboard { t, delta, .. } => checkerboard_trivial(cloud, *t, *delta),
        }
    }

    /// Hopping scale `t`.
    pub fn hopping(&self) -> f64 {
        match self {
            ModelConfig::Hofstadter { t, .. }
            | ModelConfig::Amorphous { t, .. }
            | ModelConfig::Checkerboard { t, .. } => *t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_square_lattice;

    fn plaquette_phase(h: &Hamiltonian, nx: usize, i: usize, j: usize) -> c64 {
        let s = |x: usize, y: usize| y * nx + x;
        // Directed hops (x,y)->(x+1,y)->(x+1,y+1)->(x,y+1)->(x,y); hop a->b is H[b,a].
        let hops = [
            (s(i, j), s(i + 1, j)),
            (s(i + 1, j), s(i + 1, j + 1)),
            (s(i + 1, j + 1), s(i, j + 1)),
            (s(i, j + 1), s(i, j)),
        ];
        hops.iter()
            .map(|(a, b)| {
                let z = h.matrix()[(*b, *a)];
                z / z.norm()
            })
            .product()
    }

    #[test]
    fn zero_flux_is_real() {
        let c = build_square_lattice(5, 4, 1.0).unwrap();
        let h = hofstadter(&c, Flux::new(0, 1).unwrap(), 1.0).unwrap();
        assert_eq!(linalg::imaginary_defect(h.matrix().as_ref()), 0.0);
    }

    #[test]
    fn half_flux_plaquette() {
        let c = build_square_lattice(2, 2, 1.0).unwrap();
        let h = hofstadter(&c, Flux::new(1, 2).unwrap(), 1.0).unwrap();
        assert!((plaquette_phase(&h, 2, 0, 0) - c64::new(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn every_plaquette_carries_the_flux() {
        let c = build_square_lattice(6, 5, 1.0).unwrap();
        let h = hofstadter(&c, Flux::new(1, 3).unwrap(), 1.0).unwrap();
        let want = c64::cis(TAU / 3.0);
        for i in 0..5 {
            for j in 0..4 {
                assert!((plaquette_phase(&h, 6, i, j) - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn hofstadter_needs_lattice() {
        let c = crate::geometry::build_poisson_cloud(1.0, 5.0, 5.0, 1).unwrap();
        assert!(hofstadter(&c, Flux::new(1, 4).unwrap(), 1.0).is_err());
    }

    /// Bulk gaps at flux 1/4: the two central bands touch, leaving two gaps.
    #[test]
    fn quarter_flux_bulk_gaps() {
        let c = build_square_lattice(32, 32, 1.0).unwrap();
        let h = hofstadter(&c, Flux::new(1, 4).unwrap(), 1.0).unwrap();
        let eig = h.eigensystem().unwrap();
        let gaps = eig.bulk_gaps(DEFAULT_BULK_MARGIN, 0.5);
        assert_eq!(gaps.len(), 2, "{gaps:?}");
        // Bulk band edges at E = ±2.61 and ±2.83 (Bloch spectrum).
        assert!(gaps[0].lower < -2.5 && gaps[0].upper > -2.0, "{gaps:?}");
        let e = eig.fermi_level_in(&gaps[0]);
        let p = eig.fermi_projection(e).unwrap();
        let quarter = 1024.0 / 4.0;
        // Edge states fill the gap; the open boundary has 124 sites.
        assert!((p.rank() as f64 - quarter).abs() <= 124.0 / 2.0, "rank {}", p.rank());
    }

    #[test]
    fn third_flux_has_three_bulk_bands() {
        let c = build_square_lattice(30, 30, 1.0).unwrap();
        let h = hofstadter(&c, Flux::new(1, 3).unwrap(), 1.0).unwrap();
        let gaps = h.eigensystem().unwrap().bulk_gaps(DEFAULT_BULK_MARGIN, 0.5);
        assert_eq!(gaps.len(), 2, "{gaps:?}");
    }

    #[test]
    fn amorphous_phases() {
        let c = build_poisson_cloud(1.0, 8.0, 8.0, 3).unwrap();
        let h0 = amorphous_magnetic(&c, 1.4, 1.0, 0.0).unwrap();
        assert_eq!(linalg::imaginary_defect(h0.matrix().as_ref()), 0.0);
        for i in 0..c.len() {
            for j in 0..c.len() {
                let a = amorphous_phase(0.7, c.site(i), c.site(j));
                let b = amorphous_phase(0.7, c.site(j), c.site(i));
                assert_eq!(a + b, 0.0);
            }
        }
        let h = amorphous_magnetic(&c, 1.4, 1.0, 0.7).unwrap();
        assert!(h.locality_violation().is_none());
    }

    #[test]
    fn checkerboard_limits() {
        let c = build_square_lattice(6, 6, 1.0).unwrap();
        let h = checkerboard_trivial(&c, 1.0, 10.0).unwrap();
        assert_eq!(linalg::imaginary_defect(h.matrix().as_ref()), 0.0);
        let p = fermi_projection(&h, 0.0).unwrap();
        assert_eq!(p.rank(), 18);
        let odd = RegionMask::from_predicate(&c, |s| (s[0] + s[1]) as i64 % 2 != 0);
        let ind = SiteOperator::indicator(&odd);
        assert!(p.operator().max_abs_diff(&ind) < 0.05);

        let h0 = checkerboard_trivial(&c, 1.0, 0.0).unwrap();
        let vals = h0.eigensystem().unwrap().values().to_vec();
        for (a, b) in vals.iter().zip(vals.iter().rev()) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_extremes_and_gap_violation() {
        let c = build_square_lattice(4, 4, 1.0).unwrap();
        let h = hofstadter(&c, Flux::new(1, 4).unwrap(), 1.0).unwrap();
        let eig = h.eigensystem().unwrap();
        let below = eig.fermi_projection(-100.0).unwrap();
        assert_eq!(below.rank(), 0);
        assert_eq!(below.operator().max_abs(), 0.0);
        let above = eig.fermi_projection(100.0).unwrap();
        assert_eq!(above.rank(), 16);
        assert!(above.operator().max_abs_diff(&SiteOperator::identity(&c)) < 1e-12);
        match eig.fermi_projection(eig.values()[5]) {
            Err(Error::GapViolation { nearest_gap, .. }) => assert!(nearest_gap.is_some()),
            other => panic!("expected a gap violation, got {other:?}"),
        }
    }

    #[test]
    fn projection_invariants() {
        let c = build_square_lattice(10, 10, 1.0).unwrap();
        let h = hofstadter(&c, Flux::new(1, 4).unwrap(), 1.0).unwrap();
        let eig = h.eigensystem().unwrap();
        let g = eig.spectrum(0.05).gaps[0];
        let p = eig.fermi_projection(g.center()).unwrap();
        let op = p.operator();
        assert!(op.idempotency_defect() <= 1e-10);
        assert!(op.hermiticity_defect() <= 1e-12);
        let tr = op.trace().re;
        assert!((tr - p.rank() as f64).abs() <= 1e-8);
        let hop = h.as_operator();
        let comm = hop.commutator(op).unwrap();
        assert!(comm.max_abs() <= 1e-9 * hop.spectral_norm().unwrap());
        assert!(p.gap().0 < p.fermi_energy() && p.fermi_energy() < p.gap().1);
    }

    #[test]
    fn real_model_gives_real_projection() {
        let c = build_square_lattice(8, 8, 1.0).unwrap();
        let h = checkerboard_trivial(&c, 1.0, 3.0).unwrap();
        let p = fermi_projection(&h, 0.0).unwrap();
        assert!(linalg::imaginary_defect(p.operator().as_ref()) <= 1e-12);
    }

    #[test]
    fn spectrum_shift_and_single_site() {
        let one = build_square_lattice(1, 1, 1.0).unwrap();
        let h1 = hofstadter(&one, Flux::new(1, 4).unwrap(), 1.0).unwrap();
        assert_eq!(spectrum(&h1, 0.1).unwrap().eigenvalues, vec![0.0]);
        let c = build_square_lattice(6, 5, 1.0).unwrap();
        let h = hofstadter(&c, Flux::new(1, 5).unwrap(), 1.0).unwrap();
        let a = spectrum(&h, 0.1).unwrap();
        let b = spectrum(&h.shifted(0.75), 0.1).unwrap();
        let norm = a.spectral_radius();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((y - x - 0.75).abs() <= 1e-12 * norm.max(1.0) * 10.0);
        }
    }

    #[test]
    fn gauge_transform_conjugates_projection() {
        let c = build_square_lattice(6, 6, 1.0).unwrap();
        let h = hofstadter(&c, Flux::new(1, 4).unwrap(), 1.0).unwrap();
        let lambda: Vec<f64> = (0..36).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let hg = h.gauge_transformed(&lambda).unwrap();
        let eig = h.eigensystem().unwrap();
        let e = eig.spectrum(0.05).gaps[0].center();
        let p = eig.fermi_projection(e).unwrap();
        let pg = fermi_projection(&hg, e).unwrap();
        for i in 0..36 {
            for j in 0..36 {
                let want = p.operator().entry(i, j) * c64::cis(lambda[i] - lambda[j]);
                assert!((pg.operator().entry(i, j) - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn config_round_trip_and_build() {
        let cfg: ModelConfig = serde_json::from_str(
            r#"{"model":"hofstadter","nx":4,"ny":3,"flux":{"p":1,"q":4}}"#,
        )
        .unwrap();
        let h = cfg.build().unwrap();
        assert_eq!(h.dim(), 12);
        let back: ModelConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<ModelConfig>(r#"{"model":"hofstadter","nx":4}"#).is_err());
    }

    #[test]
    fn disorder_is_seeded_and_bounded() {
        let c = build_square_lattice(5, 5, 1.0).unwrap();
        let h = hofstadter(&c, Flux::new(1, 4).unwrap(), 1.0).unwrap();
        let a = h.with_disorder(0.2, 7).unwrap();
        let b = h.with_disorder(0.2, 7).unwrap();
        assert_eq!(linalg::max_abs_diff(a.matrix().as_ref(), b.matrix().as_ref()), 0.0);
        for i in 0..25 {
            assert!(a.matrix()[(i, i)].re.abs() <= 0.1);
        }
    }

    #[test]
    fn spectrum_csv_header() {
        let c = build_square_lattice(2, 1, 1.0).unwrap();
        let s = spectrum(&hofstadter(&c, Flux::new(0, 1).unwrap(), 1.0).unwrap(), 0.1).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,eigenvalue\n0,"));
    }
}
