//! Ordered partitions of a sample, half-space pairs, the conversions between
//! them, and elementary cobordism moves.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{intersection_diameters, thicken, Cloud, Point, ProfilePoint, RegionMask};

/// Ordered disjoint cover `(A_0, ..., A_q)` of a cloud.
#[derive(Clone, Debug, PartialEq)]
pub struct QPartition {
    parts: Vec<RegionMask>,
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    parts: Vec<Vec<usize>>,
}

impl QPartition {
    pub fn new(parts: Vec<RegionMask>) -> Result<Self> {
        validate_parts(&parts)?;
        Ok(QPartition { parts })
    }

    pub fn parts(&self) -> &[RegionMask] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> &RegionMask {
        &self.parts[i]
    }

    /// `q`, one less than the number of parts.
    pub fn degree(&self) -> usize {
        self.parts.len() - 1
    }

    pub fn cloud(&self) -> &Cloud {
        self.parts[0].cloud()
    }

    /// The three parts of a 2-partition.
    pub fn triple(&self) -> Result<(&RegionMask, &RegionMask, &RegionMask)> {
        match self.parts.as_slice() {
            [a, b, c] => Ok((a, b, c)),
            _ => Err(Error::arg(format!(
                "expected a 3-part partition, got {} parts",
                self.parts.len()
            ))),
        }
    }

    pub fn swapped(&self, i: usize, j: usize) -> Self {
        let mut parts = self.parts.clone();
        parts.swap(i, j);
        QPartition { parts }
    }

    /// Part populations in order.
    pub fn sizes(&self) -> Vec<usize> {
        self.parts.iter().map(|p| p.count()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&PartitionFile {
            parts: self.parts.iter().map(|p| p.indices()).collect(),
        })?)
    }

    pub fn from_json(cloud: &Cloud, s: &str) -> Result<Self> {
        let f: PartitionFile = serde_json::from_str(s)?;
        let parts = f
            .parts
            .iter()
            .map(|idx| RegionMask::from_indices(cloud, idx))
            .collect::<Result<Vec<_>>>()?;
        QPartition::new(parts)
    }
}

/// Checks that the parts share a cloud, are pairwise disjoint, and cover it.
pub fn validate_parts(parts: &[RegionMask]) -> Result<()> {
    let first = parts
        .first()
        .ok_or_else(|| Error::arg("a partition needs at least one part"))?;
    let mut owner = vec![usize::MAX; first.cloud().len()];
    for (k, p) in parts.iter().enumerate() {
        first.check_cloud(p)?;
        for i in p.iter() {
            if owner[i] != usize::MAX {
                return Err(Error::Contract(format!(
                    "site {i} lies in parts {} and {k}",
                    owner[i]
                )));
            }
            owner[i] = k;
        }
    }
    if let Some(i) = owner.iter().position(|o| *o == usize::MAX) {
        return Err(Error::Contract(format!("site {i} is in no part")));
    }
    Ok(())
}

/// Half-space pair `(X, Y)` with its four quadrants cached.
#[derive(Clone, Debug)]
pub struct HalfSpacePair {
    x: RegionMask,
    y: RegionMask,
    quadrants: [RegionMask; 4],
}

impl HalfSpacePair {
    pub fn new(x: RegionMask, y: RegionMask) -> Result<Self> {
        x.check_cloud(&y)?;
        let xc = x.complement();
        let yc = y.complement();
        let quadrants = [
            x.intersection(&y)?,
            x.intersection(&yc)?,
            xc.intersection(&y)?,
            xc.intersection(&yc)?,
        ];
        Ok(HalfSpacePair { x, y, quadrants })
    }

    pub fn x(&self) -> &RegionMask {
        &self.x
    }

    pub fn y(&self) -> &RegionMask {
        &self.y
    }

    pub fn cloud(&self) -> &Cloud {
        self.x.cloud()
    }

    pub fn x_and_y(&self) -> &RegionMask {
        &self.quadrants[0]
    }

    pub fn x_and_not_y(&self) -> &RegionMask {
        &self.quadrants[1]
    }

    pub fn not_x_and_y(&self) -> &RegionMask {
        &self.quadrants[2]
    }

    pub fn not_x_and_not_y(&self) -> &RegionMask {
        &self.quadrants[3]
    }

    /// `X ∩ Y`, `X ∩ Yᶜ`, `Xᶜ ∩ Y`, `Xᶜ ∩ Yᶜ`.
    pub fn quadrants(&self) -> &[RegionMask; 4] {
        &self.quadrants
    }
}

/// `X = {x >= x0}`, `Y = {y >= y0}`.
pub fn coordinate_halfspaces(cloud: &Cloud, x0: f64, y0: f64) -> HalfSpacePair {
    let x = RegionMask::from_predicate(cloud, |p| p[0] >= x0);
    let y = RegionMask::from_predicate(cloud, |p| p[1] >= y0);
    HalfSpacePair::new(x, y).expect("masks share a cloud")
}

const ANGLE_SNAP: f64 = 1e-12;

/// Three angular sectors about `center`, labelled counterclockwise starting at
/// the first cut; a site on a cut belongs to the sector starting there, and a
/// site exactly at the centre goes to part 0.
pub fn sector_partition(cloud: &Cloud, center: Point, cuts: [f64; 3]) -> Result<QPartition> {
    if cuts.iter().any(|c| !c.is_finite()) {
        return Err(Error::arg("cut angles must be finite"));
    }
    let base = cuts[0];
    let mut rel: Vec<f64> = cuts.iter().map(|c| (c - base).rem_euclid(TAU)).collect();
    for r in rel.iter_mut() {
        if *r > TAU - ANGLE_SNAP {
            *r = 0.0;
        }
    }
    rel.sort_by(f64::total_cmp);
    if rel[1] - rel[0] <= ANGLE_SNAP || rel[2] - rel[1] <= ANGLE_SNAP {
        return Err(Error::arg("cut angles must be distinct modulo 2π"));
    }
    let mut bits = vec![vec![false; cloud.len()]; 3];
    for (i, p) in cloud.sites().iter().enumerate() {
        let dx = p[0] - center[0];
        let dy = p[1] - center[1];
        let part = if dx == 0.0 && dy == 0.0 {
            0
        } else {
            let mut a = (dy.atan2(dx) - base).rem_euclid(TAU);
            if a > TAU - ANGLE_SNAP {
                a = 0.0;
            }
            for &s in &rel[1..] {
                if (a - s).abs() <= ANGLE_SNAP {
                    a = s;
                }
            }
            if a >= rel[2] {
                2
            } else if a >= rel[1] {
                1
            } else {
                0
            }
        };
        bits[part][i] = true;
    }
    let parts = bits
        .into_iter()
        .map(|b| RegionMask::from_bits(cloud, b))
        .collect::<Result<Vec<_>>>()?;
    QPartition::new(parts)
}

/// `(X, Xᶜ ∩ Y, Xᶜ ∩ Yᶜ)`.
pub fn halfspaces_to_partition(hs: &HalfSpacePair) -> QPartition {
    QPartition::new(vec![
        hs.x().clone(),
        hs.not_x_and_y().clone(),
        hs.not_x_and_not_y().clone(),
    ])
    .expect("half-space quadrants partition the cloud")
}

/// Bisection of `A` between `B` and `C`: `X = A`, `Y = W ⊔ B` with
/// `W = {a ∈ A : d(a, B) <= d(a, C)}`. Distance to an empty part is `+inf`.
pub fn partition_to_halfspaces(p: &QPartition) -> Result<HalfSpacePair> {
    let (a, b, c) = p.triple()?;
    let db = b.distance_field();
    let dc = c.distance_field();
    // An empty B makes every d(a, B) infinite, so W is empty even when C is empty too.
    let w = RegionMask::from_bits(
        a.cloud(),
        (0..a.cloud().len())
            .map(|i| a.contains(i) && db[i].is_finite() && db[i] <= dc[i])
            .collect(),
    )?;
    HalfSpacePair::new(a.clone(), w.union(b)?)
}

/// Result of moving `W` from part `i` to part `j`.
#[derive(Clone, Debug)]
pub struct CobordismMove {
    pub partition: QPartition,
    /// Intersection-diameter profile of `W` with the untouched parts.
    pub witness: Vec<ProfilePoint>,
}

pub fn elementary_cobordism(
    p: &QPartition,
    i: usize,
    j: usize,
    w: &RegionMask,
    r_samples: &[f64],
) -> Result<CobordismMove> {
    let n = p.parts.len();
    if i >= n || j >= n {
        return Err(Error::arg("part index out of range"));
    }
    if i == j {
        return Err(Error::arg("cobordism needs two distinct parts"));
    }
    if !w.is_subset(&p.parts[i])? {
        return Err(Error::arg(format!("moved set is not contained in part {i}")));
    }
    let mut parts = p.parts.clone();
    parts[i] = parts[i].difference(w)?;
    parts[j] = parts[j].union(w)?;
    let mut witness_regions = vec![w.clone()];
    witness_regions.extend(
        p.parts
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i && *k != j)
            .map(|(_, part)| part.clone()),
    );
    let witness = if r_samples.is_empty() {
        Vec::new()
    } else {
        intersection_diameters(&witness_regions, r_samples)
    };
    Ok(CobordismMove {
        partition: QPartition::new(parts)?,
        witness,
    })
}

/// Bulk window `K = A_r ∩ B_r ∩ C_r`.
pub fn bulk_window(p: &QPartition, r: f64) -> Result<RegionMask> {
    let (a, b, c) = p.triple()?;
    if !(r > 0.0) {
        return Err(Error::arg("window radius must be positive"));
    }
    thicken(a, r)?
        .intersection(&thicken(b, r)?)?
        .intersection(&thicken(c, r)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_square_lattice, euclid};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn coordinate_halfspaces_counts() {
        let c = build_square_lattice(32, 32, 1.0).unwrap();
        let hs = coordinate_halfspaces(&c, 15.5, 15.5);
        assert_eq!(hs.x().count(), 512);
        let total: usize = hs.quadrants().iter().map(|q| q.count()).sum();
        assert_eq!(total, 1024);
        QPartition::new(hs.quadrants().to_vec()).unwrap();
        let degenerate = coordinate_halfspaces(&c, -1.0, 0.0);
        assert!(degenerate.x().complement().is_empty());
    }

    #[test]
    fn halfspace_partition_sizes() {
        let c = build_square_lattice(32, 32, 1.0).unwrap();
        let p = halfspaces_to_partition(&coordinate_halfspaces(&c, 15.5, 15.5));
        assert_eq!(p.sizes(), vec![512, 256, 256]);
        let all = halfspaces_to_partition(&coordinate_halfspaces(&c, -5.0, 3.0));
        assert_eq!(all.sizes(), vec![1024, 0, 0]);
    }

    /// Brute-force angular count for the standard cuts on a 32x32 lattice.
    #[test]
    fn sector_populations() {
        let c = build_square_lattice(32, 32, 1.0).unwrap();
        let center = [15.5, 15.5];
        let p = sector_partition(&c, center, [deg(90.0), deg(210.0), deg(330.0)]).unwrap();
        let mut oracle = [0usize; 3];
        for s in c.sites() {
            let a = (s[1] - center[1]).atan2(s[0] - center[0]).to_degrees();
            let a = (a - 90.0).rem_euclid(360.0);
            oracle[if a < 120.0 { 0 } else if a < 240.0 { 1 } else { 2 }] += 1;
        }
        assert_eq!(p.sizes(), oracle.to_vec());
        let third = 1024.0 / 3.0;
        for s in p.sizes() {
            assert!((s as f64 - third).abs() <= 0.05 * 1024.0, "{s}");
        }
    }

    #[test]
    fn sector_relabelling_permutes_cyclically() {
        let c = build_square_lattice(31, 31, 1.0).unwrap();
        let center = [15.0, 15.0];
        let p = sector_partition(&c, center, [deg(90.0), deg(210.0), deg(330.0)]).unwrap();
        let shifted = sector_partition(&c, center, [deg(210.0), deg(330.0), deg(450.0)]).unwrap();
        // The centre site is pinned to part 0 regardless of labelling.
        let ci = c.sites().iter().position(|s| *s == center).unwrap();
        let centre = RegionMask::from_indices(&c, &[ci]).unwrap();
        assert_eq!(shifted.part(0).difference(&centre).unwrap(), *p.part(1));
        assert_eq!(shifted.part(1), p.part(2));
        assert_eq!(shifted.part(2).union(&centre).unwrap(), *p.part(0));
    }

    #[test]
    fn sector_coincident_cuts() {
        let c = build_square_lattice(4, 4, 1.0).unwrap();
        assert!(sector_partition(&c, [1.5, 1.5], [0.0, 1.0, TAU]).is_err());
    }

    #[test]
    fn round_trip_on_sectors() {
        let c = build_square_lattice(64, 64, 1.0).unwrap();
        let p = sector_partition(&c, [31.5, 31.5], [deg(90.0), deg(210.0), deg(330.0)]).unwrap();
        let hs = partition_to_halfspaces(&p).unwrap();
        assert_eq!(halfspaces_to_partition(&hs), p);
        // W: the half of A nearer to B (ties allowed on the bisector).
        let (a, b, cpart) = p.triple().unwrap();
        let w = hs.y().intersection(a).unwrap();
        let db = b.distance_field();
        let dc = cpart.distance_field();
        for i in a.iter() {
            assert_eq!(w.contains(i), db[i] <= dc[i]);
        }
        assert!(w.count() > 0 && w.count() < a.count());
    }

    #[test]
    fn empty_b_gives_empty_w() {
        let c = build_square_lattice(6, 6, 1.0).unwrap();
        let a = RegionMask::from_predicate(&c, |p| p[0] < 3.0);
        let p = QPartition::new(vec![a.clone(), RegionMask::empty(&c), a.complement()]).unwrap();
        let hs = partition_to_halfspaces(&p).unwrap();
        assert!(hs.y().is_empty());
        assert_eq!(halfspaces_to_partition(&hs), p);
    }

    #[test]
    fn cobordism_moves() {
        let c = build_square_lattice(16, 16, 1.0).unwrap();
        let hs = coordinate_halfspaces(&c, 7.5, 7.5);
        let p = halfspaces_to_partition(&hs);
        let unchanged = elementary_cobordism(&p, 0, 1, &RegionMask::empty(&c), &[]).unwrap();
        assert_eq!(unchanged.partition, p);
        let drained = elementary_cobordism(&p, 0, 1, p.part(0), &[]).unwrap();
        assert!(drained.partition.part(0).is_empty());
        let moved = elementary_cobordism(&p, 0, 1, hs.x_and_y(), &[1.0, 2.0, 4.0]).unwrap();
        let expect = QPartition::new(vec![
            hs.x_and_not_y().clone(),
            hs.y().clone(),
            hs.not_x_and_not_y().clone(),
        ])
        .unwrap();
        assert_eq!(moved.partition, expect);
        assert_eq!(moved.witness.len(), 3);
        let bad = elementary_cobordism(&p, 0, 1, hs.not_x_and_y(), &[]);
        assert!(bad.is_err());
    }

    #[test]
    fn window_contains_triple_point_and_stays_local() {
        let c = build_square_lattice(33, 33, 1.0).unwrap();
        let center = [16.0, 16.0];
        let p = sector_partition(&c, center, [deg(90.0), deg(210.0), deg(330.0)]).unwrap();
        let mut prev = 0;
        for r in [2.0, 4.0, 6.0, 8.0] {
            let k = bulk_window(&p, r).unwrap();
            let ci = c.sites().iter().position(|s| *s == center).unwrap();
            assert!(k.contains(ci));
            for i in k.iter() {
                assert!(euclid(c.site(i), center) <= r * 2f64.sqrt() + 1e-9);
            }
            assert!(k.count() >= prev);
            prev = k.count();
        }
    }

    #[test]
    fn separated_parts_have_empty_window() {
        let c = build_square_lattice(30, 3, 1.0).unwrap();
        let a = RegionMask::from_predicate(&c, |p| p[0] < 5.0);
        let b = RegionMask::from_predicate(&c, |p| p[0] > 24.0);
        let mid = a.union(&b).unwrap().complement();
        let p = QPartition::new(vec![a, mid, b]).unwrap();
        // A and C are 20 apart
        assert!(bulk_window(&p, 9.0).unwrap().is_empty());
    }

    #[test]
    fn partition_json_round_trip() {
        let c = build_square_lattice(5, 5, 1.0).unwrap();
        let p = halfspaces_to_partition(&coordinate_halfspaces(&c, 2.0, 2.0));
        assert_eq!(QPartition::from_json(&c, &p.to_json().unwrap()).unwrap(), p);
    }

    fn random_partition(cloud: &Cloud, seed: u64) -> QPartition {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<usize> = (0..cloud.len()).map(|_| rng.random_range(0..3)).collect();
        QPartition::new(
            (0..3)
                .map(|k| RegionMask::from_bits(cloud, labels.iter().map(|l| *l == k).collect()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn random_round_trip(seed in any::<u64>()) {
            let c = build_square_lattice(9, 7, 1.0).unwrap();
            let p = random_partition(&c, seed);
            let hs = partition_to_halfspaces(&p).unwrap();
            prop_assert_eq!(halfspaces_to_partition(&hs), p);
        }

        #[test]
        fn random_halfspaces_give_partitions(sx in any::<u64>(), sy in any::<u64>()) {
            let c = build_square_lattice(8, 8, 1.0).unwrap();
            let mut rx = ChaCha8Rng::seed_from_u64(sx);
            let mut ry = ChaCha8Rng::seed_from_u64(sy);
            let x = RegionMask::from_bits(&c, (0..64).map(|_| rx.random_bool(0.5)).collect()).unwrap();
            let y = RegionMask::from_bits(&c, (0..64).map(|_| ry.random_bool(0.5)).collect()).unwrap();
            let p = halfspaces_to_partition(&HalfSpacePair::new(x, y).unwrap());
            prop_assert!(validate_parts(p.parts()).is_ok());
        }

        #[test]
        fn cobordism_preserves_partition(seed in any::<u64>(), wseed in any::<u64>()) {
            let c = build_square_lattice(8, 8, 1.0).unwrap();
            let p = random_partition(&c, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(wseed);
            let w = RegionMask::from_bits(&c, (0..64).map(|i| p.part(1).contains(i) && rng.random_bool(0.5)).collect()).unwrap();
            let m = elementary_cobordism(&p, 1, 2, &w, &[1.0]).unwrap();
            prop_assert!(validate_parts(m.partition.parts()).is_ok());
        }

        #[test]
        fn bisection_ignores_site_order(seed in any::<u64>()) {
            // Reverse the site enumeration and check W maps to the same point set.
            let c = build_square_lattice(7, 6, 1.0).unwrap();
            let p = random_partition(&c, seed);
            let n = c.len();
            let rev = std::sync::Arc::new(crate::geometry::SiteCloud::new("rev", c.sites().iter().rev().copied().collect()).unwrap());
            let parts_rev: Vec<RegionMask> = p.parts().iter().map(|m| {
                RegionMask::from_bits(&rev, (0..n).map(|i| m.contains(n - 1 - i)).collect()).unwrap()
            }).collect();
            let hs = partition_to_halfspaces(&p).unwrap();
            let hs_rev = partition_to_halfspaces(&QPartition::new(parts_rev).unwrap()).unwrap();
            for i in 0..n {
                prop_assert_eq!(hs.y().contains(i), hs_rev.y().contains(n - 1 - i));
            }
        }
    }
}
