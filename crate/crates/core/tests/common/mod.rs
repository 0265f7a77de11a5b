#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use l2b_core::descriptor::{min_interior_angle_deg, CornerFeature, Triplet, TripletCorrespondence};
use l2b_core::geometry::{Point2, Se2Pose};
use l2b_core::voting::{CellIndex, VoteGrid};
use rand::Rng;

pub fn random_pose(rng: &mut impl Rng, extent: f64) -> Se2Pose {
    Se2Pose::new(rng.gen_range(-extent..extent), rng.gen_range(-extent..extent), rng.gen_range(-PI..PI))
}

pub fn unit(rng: &mut impl Rng) -> Point2 {
    let a: f64 = rng.gen_range(-PI..PI);
    Point2::new(a.cos(), a.sin())
}

/// A triangle with sides up to `max_side` and interior angles of at least
/// 15°, each corner carrying two random wall directions.
pub fn random_triplet(rng: &mut impl Rng, max_side: f64) -> Triplet {
    loop {
        let c = Point2::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
        let pts: Vec<Point2> =
            (0..3).map(|_| c + Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (0.5 * max_side)).collect();
        if min_interior_angle_deg(pts[0], pts[1], pts[2]) < 15.0 {
            continue;
        }
        let sides = [pts[0].distance(pts[1]), pts[1].distance(pts[2]), pts[0].distance(pts[2])];
        if sides.iter().any(|&s| s < 1.0 || s > max_side) {
            continue;
        }
        return [0, 1, 2].map(|i| CornerFeature { position: pts[i], wall_dirs: [unit(rng), unit(rng)] });
    }
}

pub fn transform_triplet(t: &Triplet, pose: &Se2Pose) -> Triplet {
    t.map(|c| c.transformed(pose))
}

/// Owned correspondence pairs: `inliers` map through a jittered `truth`,
/// the rest through uniformly random poses.
pub struct CorrespondenceSet {
    pub pairs: Vec<(Triplet, Triplet)>,
}

impl CorrespondenceSet {
    pub fn new(rng: &mut impl Rng, truth: &Se2Pose, inliers: usize, outliers: usize, jitter_xy: f64, jitter_yaw: f64) -> Self {
        let mut pairs = Vec::with_capacity(inliers + outliers);
        for _ in 0..inliers {
            let src = random_triplet(rng, 20.0);
            let jit = Se2Pose::new(
                truth.x + rng.gen_range(-jitter_xy..jitter_xy),
                truth.y + rng.gen_range(-jitter_xy..jitter_xy),
                truth.yaw() + rng.gen_range(-jitter_yaw..jitter_yaw),
            );
            pairs.push((src, transform_triplet(&src, &jit)));
        }
        for _ in 0..outliers {
            let src = random_triplet(rng, 20.0);
            let p = random_pose(rng, 40.0);
            pairs.push((src, transform_triplet(&src, &p)));
        }
        CorrespondenceSet { pairs }
    }

    pub fn iter(&self) -> impl Iterator<Item = TripletCorrespondence<'_>> {
        self.pairs.iter().map(|(s, d)| TripletCorrespondence { src: s, dst: d })
    }
}

/// A component found by the exhaustive oracle.
#[derive(Debug, PartialEq)]
pub struct OracleCluster {
    pub votes: u32,
    pub cells: BTreeSet<CellIndex>,
    pub pose: Se2Pose,
}

/// Scans the dense bounding box of the grid, labels 26-connected components
/// of populated cells (yaw wraps) by flood fill and orders them by their
/// best 3×3×3 neighborhood sum, ties broken by that cell's index.
pub fn oracle_clusters(grid: &VoteGrid) -> Vec<OracleCluster> {
    let cells = grid.sorted_cells();
    let n_yaw = grid.n_yaw();
    let (mut lo, mut hi) = ([i64::MAX; 2], [i64::MIN; 2]);
    for (c, _) in &cells {
        for a in 0..2 {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    let count = |c: CellIndex| grid.get(&c).map_or(0u64, |v| v.count as u64);
    let block = |c: CellIndex| {
        let mut out = BTreeSet::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dt in -1..=1 {
                    out.insert([c[0] + dx, c[1] + dy, (c[2] + dt).rem_euclid(n_yaw)]);
                }
            }
        }
        out
    };
    let mut label: BTreeMap<CellIndex, usize> = BTreeMap::new();
    let mut comps: Vec<Vec<CellIndex>> = Vec::new();
    for x in lo[0]..=hi[0] {
        for y in lo[1]..=hi[1] {
            for t in 0..n_yaw {
                let c = [x, y, t];
                if count(c) == 0 || label.contains_key(&c) {
                    continue;
                }
                let id = comps.len();
                let mut stack = vec![c];
                let mut members = Vec::new();
                label.insert(c, id);
                while let Some(p) = stack.pop() {
                    members.push(p);
                    for q in block(p) {
                        if count(q) > 0 && !label.contains_key(&q) {
                            label.insert(q, id);
                            stack.push(q);
                        }
                    }
                }
                comps.push(members);
            }
        }
    }
    let mut ranked: Vec<(u64, CellIndex, OracleCluster)> = comps
        .into_iter()
        .map(|members| {
            let merged = |c: CellIndex| block(c).into_iter().map(count).sum::<u64>();
            let best = *members.iter().max_by(|a, b| merged(**a).cmp(&merged(**b)).then(b.cmp(a))).expect("non-empty component");
            let (mut n, mut sx, mut sy, mut sc, mut ss) = (0u32, 0.0, 0.0, 0.0, 0.0);
            for c in &members {
                let v = grid.get(c).expect("populated");
                n += v.count;
                sx += v.sum_x;
                sy += v.sum_y;
                sc += v.sum_cos;
                ss += v.sum_sin;
            }
            let pose = Se2Pose::new(sx / n as f64, sy / n as f64, ss.atan2(sc));
            (merged(best), best, OracleCluster { votes: n, cells: members.into_iter().collect(), pose })
        })
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked.into_iter().map(|(_, _, c)| c).collect()
}

pub fn yaw_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}
