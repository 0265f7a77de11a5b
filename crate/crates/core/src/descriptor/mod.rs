//! Triangle descriptors over wall-corner triplets and their hash database.

mod io;

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{line_angle_deg, LineSegment2, Point2, Se2Pose};
use crate::lines::Corner;

pub use io::{decode_db, encode_db, load_db, save_db, DB_MAGIC, DB_VERSION};

/// A corner reduced to what descriptors need: its position and the
/// directions of its two walls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CornerFeature {
    pub position: Point2,
    pub wall_dirs: [Point2; 2],
}

impl CornerFeature {
    pub fn transformed(&self, pose: &Se2Pose) -> CornerFeature {
        CornerFeature { position: pose.apply(self.position), wall_dirs: self.wall_dirs.map(|d| pose.rotate(d)) }
    }
}

impl From<&Corner> for CornerFeature {
    fn from(c: &Corner) -> Self {
        CornerFeature { position: c.position, wall_dirs: [c.wall_a.direction(), c.wall_b.direction()] }
    }
}

/// Three corners in vertex order `A, B, C`.
pub type Triplet = [CornerFeature; 3];

/// Side lengths `(|AB|, |BC|, |AC|)` and wall angles `(α, β, γ)` in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleDescriptor {
    pub sides: [f64; 3],
    pub angles: [f64; 3],
}

impl TriangleDescriptor {
    pub fn key(&self, r_s: f64, r_a: f64) -> DescriptorKey {
        DescriptorKey([
            (self.sides[0] / r_s).floor() as i32,
            (self.sides[1] / r_s).floor() as i32,
            (self.sides[2] / r_s).floor() as i32,
            (self.angles[0] / r_a).floor() as i32,
            (self.angles[1] / r_a).floor() as i32,
            (self.angles[2] / r_a).floor() as i32,
        ])
    }
}

/// Quantized descriptor: three side bins then three angle bins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DescriptorKey(pub [i32; 6]);

/// Smallest interior angle of the triangle, in degrees.
pub fn min_interior_angle_deg(a: Point2, b: Point2, c: Point2) -> f64 {
    let at = |p: Point2, q: Point2, r: Point2| {
        let (u, v) = (q - p, r - p);
        u.cross(v).abs().atan2(u.dot(v)).to_degrees()
    };
    at(a, b, c).min(at(b, c, a)).min(at(c, a, b))
}

/// Descriptor of a triplet in the given vertex order, without relabeling.
pub fn describe(t: &Triplet) -> TriangleDescriptor {
    let [a, b, c] = t;
    let ab = b.position - a.position;
    let bc = c.position - b.position;
    let ac = c.position - a.position;
    let wall_angle = |side: Point2, corner: &CornerFeature| {
        line_angle_deg(side, corner.wall_dirs[0]).min(line_angle_deg(side, corner.wall_dirs[1]))
    };
    TriangleDescriptor {
        sides: [ab.norm(), bc.norm(), ac.norm()],
        angles: [wall_angle(ab, a), wall_angle(bc, b), wall_angle(ac, c)],
    }
}

fn is_degenerate(t: &Triplet) -> bool {
    let [a, b, c] = t.map(|v| v.position);
    let scale = (b - a).norm().max((c - a).norm()).max((c - b).norm());
    scale < 1e-9 || (b - a).cross(c - a).abs() <= 1e-12 * scale * scale
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn permuted(t: &Triplet, p: [usize; 3]) -> Triplet {
    [t[p[0]], t[p[1]], t[p[2]]]
}

/// Relabels the triplet so that `|AB| ≤ |BC| ≤ |AC|` and describes it.
///
/// `B` is the vertex opposite the longest side and `A` the one opposite the
/// middle side; exact length ties keep the input order.
pub fn make_descriptor(t: &Triplet) -> Result<(TriangleDescriptor, Triplet)> {
    if is_degenerate(t) {
        return Err(Error::DegenerateTriplet);
    }
    let opposite = |i: usize| t[(i + 1) % 3].position.distance(t[(i + 2) % 3].position);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| opposite(i).total_cmp(&opposite(j)).then(i.cmp(&j)));
    // order = vertices opposite the shortest, middle and longest side
    let canon = permuted(t, [order[1], order[2], order[0]]);
    Ok((describe(&canon), canon))
}

/// Every vertex ordering whose quantized side bins equal those of the
/// canonical ordering. Most triplets have exactly one; near-isosceles ones
/// have more, and each is stored so that matches survive tie flips.
pub fn canonical_orderings(t: &Triplet, r_s: f64) -> Result<Vec<Triplet>> {
    let (desc, canon) = make_descriptor(t)?;
    let bins = |d: &TriangleDescriptor| d.sides.map(|s| (s / r_s).floor() as i64);
    let target = bins(&desc);
    let mut out = vec![canon];
    for p in PERMUTATIONS.iter().skip(1) {
        let cand = permuted(&canon, *p);
        if bins(&describe(&cand)) == target {
            out.push(cand);
        }
    }
    Ok(out)
}

/// All 3-cliques of the graph joining corners closer than `l_max`, minus
/// triangles whose smallest interior angle is below `min_angle_deg`.
pub fn build_triplets(corners: &[CornerFeature], l_max: f64, min_angle_deg: f64) -> Vec<Triplet> {
    let n = corners.len();
    let adj: Vec<Vec<usize>> =
        (0..n).map(|i| (i + 1..n).filter(|&j| corners[i].position.distance(corners[j].position) <= l_max).collect()).collect();
    let mut out = Vec::new();
    for i in 0..n {
        for (x, &j) in adj[i].iter().enumerate() {
            for &k in &adj[i][x + 1..] {
                if adj[j].binary_search(&k).is_err() {
                    continue;
                }
                let t = [corners[i], corners[j], corners[k]];
                if is_degenerate(&t) {
                    continue;
                }
                if min_interior_angle_deg(t[0].position, t[1].position, t[2].position) >= min_angle_deg {
                    out.push(t);
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DbSource {
    Submap,
    Model,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DbParams {
    pub l_max: f64,
    pub r_s: f64,
    pub r_a_deg: f64,
    pub min_angle_deg: f64,
}

impl Default for DbParams {
    fn default() -> Self {
        DbParams { l_max: 30.0, r_s: 0.5, r_a_deg: 3.0, min_angle_deg: 10.0 }
    }
}

/// Hash table from quantized descriptors to the triplets that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorDB {
    pub r_s: f64,
    pub r_a_deg: f64,
    pub source: DbSource,
    pub floor_id: String,
    /// Walls of the model the DB was built from, used to verify candidates.
    pub walls: Vec<LineSegment2>,
    /// Number of geometric triplets inserted.
    pub n_triplets: usize,
    table: HashMap<DescriptorKey, Vec<Triplet>>,
}

impl DescriptorDB {
    pub fn new(r_s: f64, r_a_deg: f64, source: DbSource, floor_id: impl Into<String>) -> Self {
        assert!(r_s > 0.0 && r_a_deg > 0.0, "descriptor resolutions must be positive");
        DescriptorDB { r_s, r_a_deg, source, floor_id: floor_id.into(), walls: Vec::new(), n_triplets: 0, table: HashMap::new() }
    }

    fn entries(&self, t: &Triplet) -> Result<Vec<(DescriptorKey, Triplet)>> {
        Ok(canonical_orderings(t, self.r_s)?.into_iter().map(|o| (describe(&o).key(self.r_s, self.r_a_deg), o)).collect())
    }

    /// Inserts every canonical ordering of `t`.
    pub fn insert(&mut self, t: &Triplet) -> Result<()> {
        let entries = self.entries(t)?;
        self.insert_entries(entries);
        Ok(())
    }

    fn insert_entries(&mut self, entries: Vec<(DescriptorKey, Triplet)>) {
        self.n_triplets += 1;
        for (k, o) in entries {
            self.table.entry(k).or_default().push(o);
        }
    }

    pub fn bucket(&self, key: &DescriptorKey) -> &[Triplet] {
        self.table.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn n_keys(&self) -> usize {
        self.table.len()
    }

    /// Stored entries, counting each ordering of a tied triplet separately.
    pub fn n_entries(&self) -> usize {
        self.table.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Keys in ascending order.
    pub fn sorted_keys(&self) -> Vec<DescriptorKey> {
        let mut keys: Vec<DescriptorKey> = self.table.keys().copied().collect();
        keys.sort_unstable();
        keys
    }

    pub(crate) fn insert_raw(&mut self, key: DescriptorKey, triplets: Vec<Triplet>) {
        self.table.insert(key, triplets);
    }
}

/// Builds the descriptor database of a corner set.
pub fn build_db(corners: &[CornerFeature], params: &DbParams, source: DbSource, floor_id: &str) -> DescriptorDB {
    let mut db = DescriptorDB::new(params.r_s, params.r_a_deg, source, floor_id);
    let triplets = build_triplets(corners, params.l_max, params.min_angle_deg);
    let entries: Vec<_> = triplets.par_iter().map(|t| db.entries(t)).collect();
    for e in entries.into_iter().flatten() {
        db.insert_entries(e);
    }
    db
}

/// A vertex-aligned pair of triplets sharing a key.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripletCorrespondence<'a> {
    pub src: &'a Triplet,
    pub dst: &'a Triplet,
}

/// Cross products of `src` and `dst` buckets over every shared key, in
/// ascending key order.
pub fn query_correspondences<'a>(
    src: &'a DescriptorDB,
    dst: &'a DescriptorDB,
) -> Result<impl Iterator<Item = TripletCorrespondence<'a>> + 'a> {
    if src.r_s != dst.r_s || src.r_a_deg != dst.r_a_deg {
        return Err(Error::ResolutionMismatch(src.r_s, src.r_a_deg, dst.r_s, dst.r_a_deg));
    }
    let mut shared: Vec<(&DescriptorKey, &Vec<Triplet>)> = src.table.iter().filter(|(k, _)| dst.table.contains_key(k)).collect();
    shared.sort_unstable_by_key(|(k, _)| **k);
    Ok(shared.into_iter().flat_map(move |(k, sb)| {
        let db = &dst.table[k];
        sb.iter().flat_map(move |s| db.iter().map(move |d| TripletCorrespondence { src: s, dst: d }))
    }))
}

/// Number of correspondences `query_correspondences` would yield.
pub fn count_correspondences(src: &DescriptorDB, dst: &DescriptorDB) -> usize {
    src.table.iter().filter_map(|(k, b)| dst.table.get(k).map(|d| b.len() * d.len())).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(x: f64, y: f64) -> CornerFeature {
        CornerFeature { position: Point2::new(x, y), wall_dirs: [Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)] }
    }

    #[test]
    fn right_isosceles_sides() {
        let t = [axis(0.0, 0.0), axis(3.0, 0.0), axis(0.0, 3.0)];
        let (d, canon) = make_descriptor(&t).unwrap();
        assert!((d.sides[0] - 3.0).abs() < 1e-12);
        assert!((d.sides[1] - 3.0).abs() < 1e-12);
        assert!((d.sides[2] - 18f64.sqrt()).abs() < 1e-12);
        // B is the right-angle vertex
        assert_eq!(canon[1].position, Point2::ORIGIN);
        assert_eq!(d.angles, [0.0, 0.0, 45.0]);
    }

    #[test]
    fn parallel_side_gives_zero_alpha() {
        let t2 = [axis(0.0, 0.0), axis(2.0, 0.0), axis(1.0, 5.0)];
        let (d2, c2) = make_descriptor(&t2).unwrap();
        assert!(c2[1].position.y == 0.0 && c2[0].position.y == 0.0);
        assert_eq!(d2.angles[0], 0.0);
    }

    #[test]
    fn degenerate_triplets() {
        let t = [axis(0.0, 0.0), axis(1.0, 1.0), axis(2.0, 2.0)];
        assert!(matches!(make_descriptor(&t), Err(Error::DegenerateTriplet)));
        assert!(build_triplets(&t, 10.0, 10.0).is_empty());
        let same = [axis(1.0, 1.0); 3];
        assert!(matches!(make_descriptor(&same), Err(Error::DegenerateTriplet)));
    }

    #[test]
    fn clique_counts() {
        let tri = [axis(0.0, 0.0), axis(3.0, 0.0), axis(0.0, 4.0)];
        assert_eq!(build_triplets(&tri, 10.0, 10.0).len(), 1);
        assert!(build_triplets(&tri, 4.5, 10.0).is_empty());
        // regular hexagon: no three vertices collinear, min angle 30°
        let hex: Vec<CornerFeature> = (0..6)
            .map(|k| {
                let a = k as f64 * std::f64::consts::FRAC_PI_3;
                axis(5.0 * a.cos(), 5.0 * a.sin())
            })
            .collect();
        assert_eq!(build_triplets(&hex, 20.0, 10.0).len(), 20);
    }

    #[test]
    fn side_bins() {
        let d = TriangleDescriptor { sides: [3.2, 4.1, 5.0], angles: [0.0, 44.9, 90.0] };
        assert_eq!(d.key(0.5, 3.0).0, [6, 8, 10, 0, 14, 30]);
    }

    #[test]
    fn congruent_triangles_share_a_bucket() {
        let t = [axis(0.0, 0.0), axis(3.3, 0.0), axis(0.0, 4.4)];
        let pose = Se2Pose::new(10.0, -3.0, std::f64::consts::FRAC_PI_2);
        let t2 = t.map(|c| c.transformed(&pose));
        let mut db = DescriptorDB::new(0.5, 3.0, DbSource::Model, "0");
        db.insert(&t).unwrap();
        db.insert(&t2).unwrap();
        assert_eq!(db.n_keys(), 1);
        let key = db.sorted_keys()[0];
        assert_eq!(db.bucket(&key).len(), 2);
    }

    #[test]
    fn tied_bins_store_every_ordering() {
        let t = [axis(0.0, 0.0), axis(3.1, 0.0), axis(0.0, 3.2)];
        let orders = canonical_orderings(&t, 0.5).unwrap();
        assert_eq!(orders.len(), 2);
        let skew = [axis(0.0, 0.0), axis(3.1, 0.0), axis(0.0, 4.2)];
        assert_eq!(canonical_orderings(&skew, 0.5).unwrap().len(), 1);
    }

    #[test]
    fn query_cross_product_and_mismatch() {
        let t = [axis(0.0, 0.0), axis(3.3, 0.0), axis(0.0, 4.4)];
        let shifted = |dx: f64| t.map(|c| c.transformed(&Se2Pose::new(dx, 0.0, 0.0)));
        let mut a = DescriptorDB::new(0.5, 3.0, DbSource::Submap, "s");
        let mut b = DescriptorDB::new(0.5, 3.0, DbSource::Model, "0");
        for dx in [0.0, 1.0] {
            a.insert(&shifted(dx)).unwrap();
        }
        for dx in [5.0, 6.0, 7.0] {
            b.insert(&shifted(dx)).unwrap();
        }
        assert_eq!(query_correspondences(&a, &b).unwrap().count(), 6);
        assert_eq!(count_correspondences(&a, &b), 6);
        for c in query_correspondences(&a, &b).unwrap() {
            let (s, d) = (describe(c.src), describe(c.dst));
            for k in 0..3 {
                assert!((s.sides[k] - d.sides[k]).abs() < 1e-9);
                assert!((s.angles[k] - d.angles[k]).abs() < 1e-9);
            }
        }
        let other = DescriptorDB::new(0.5, 3.0, DbSource::Model, "0");
        assert_eq!(query_correspondences(&a, &other).unwrap().count(), 0);
        let coarse = DescriptorDB::new(1.0, 3.0, DbSource::Model, "0");
        assert!(matches!(query_correspondences(&a, &coarse), Err(Error::ResolutionMismatch(..))));
    }

    #[test]
    fn unit_square_db() {
        let sq = [axis(0.0, 0.0), axis(1.0, 0.0), axis(1.0, 1.0), axis(0.0, 1.0)];
        let db = build_db(&sq, &DbParams::default(), DbSource::Model, "0");
        assert_eq!(db.n_triplets, 4);
    }
}
