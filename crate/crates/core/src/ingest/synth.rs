//! Seeded floorplans and posed synthetic submaps.
//!
//! Floorplans are rows of rectangular rooms, optionally on both sides of a
//! corridor. Submaps are sampled from the wall surfaces within a radius of
//! the sensor, plus the visible floor, then perturbed with the as-built
//! deviations recorded in a [`DeviationLog`].

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Submap, WallModel};
use crate::error::{Error, Result};
use crate::geometry::{LineSegment2, Point2, Point3, Se2Pose};

const MIN_ROOM: f64 = 3.0;
const MAX_ROOM: f64 = 10.0;
const DOOR_WIDTH: f64 = 0.9;

/// Generates a deterministic, axis-aligned floorplan.
///
/// With `corridor`, rooms are split over two rows facing a corridor and
/// each room has a door onto it. Without, rooms form one row connected by
/// doors in their shared walls. `extent_m` is the target row length.
pub fn generate_floorplan(seed: u64, n_rooms: usize, corridor: bool, extent_m: f64) -> Result<WallModel> {
    if n_rooms == 0 {
        return Err(Error::InvalidArgument("n_rooms must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (top, bottom) = if corridor { (n_rooms.div_ceil(2), n_rooms / 2) } else { (n_rooms, 0) };
    let max_k = top.max(bottom);
    let min_k = if bottom == 0 { top } else { bottom };
    let extent = extent_m.clamp(MIN_ROOM * max_k as f64, MAX_ROOM * min_k as f64);
    let cw = if corridor { rng.gen_range(2.0..3.0) } else { 0.0 };

    let mut lines = LineSet::default();
    let mut doors: Vec<(bool, f64, f64, f64)> = Vec::new(); // (horizontal, coord, from, to)

    let rows: Vec<(usize, f64, f64)> = if corridor { vec![(top, cw, 1.0), (bottom, 0.0, -1.0)] } else { vec![(top, 0.0, 1.0)] };
    for (k, base, dir) in rows {
        if k == 0 {
            continue;
        }
        let widths = partition(&mut rng, k, extent);
        let depths: Vec<f64> = (0..k).map(|_| rng.gen_range(MIN_ROOM..MAX_ROOM)).collect();
        let mut x0 = 0.0;
        for i in 0..k {
            let x1 = if i + 1 == k { extent } else { x0 + widths[i] };
            let back = base + dir * depths[i];
            lines.add_h(base, x0, x1);
            lines.add_h(back, x0, x1);
            lines.add_v(x0, base, back);
            lines.add_v(x1, base, back);
            if corridor {
                let xd = rng.gen_range(x0 + 0.5..x1 - 0.5 - DOOR_WIDTH);
                doors.push((true, base, xd, xd + DOOR_WIDTH));
            } else if i + 1 < k {
                let shared = depths[i].min(depths[i + 1]);
                let yd = rng.gen_range(0.5..shared - 0.5 - DOOR_WIDTH);
                doors.push((false, x1, base + dir * yd, base + dir * (yd + DOOR_WIDTH)));
            }
            x0 = x1;
        }
    }
    if corridor {
        lines.add_v(0.0, 0.0, cw);
        lines.add_v(extent, 0.0, cw);
        if bottom == 0 {
            lines.add_h(0.0, 0.0, extent);
        }
    }
    for (horizontal, c, a, b) in doors {
        lines.cut(horizontal, c, a, b);
    }
    let walls = lines.into_segments();
    Ok(WallModel::new("0", walls))
}

/// Splits `extent` into `k` widths in `[MIN_ROOM, MAX_ROOM]`.
fn partition(rng: &mut ChaCha8Rng, k: usize, extent: f64) -> Vec<f64> {
    let slack = extent - MIN_ROOM * k as f64;
    for _ in 0..1000 {
        let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
        let total: f64 = w.iter().sum();
        let widths: Vec<f64> = w.iter().map(|wi| MIN_ROOM + slack * wi / total).collect();
        if widths.iter().all(|&x| x <= MAX_ROOM) {
            return widths;
        }
    }
    vec![extent / k as f64; k]
}

/// Axis-aligned wall intervals grouped by their supporting line.
#[derive(Default)]
struct LineSet {
    // key: (is_horizontal, coordinate bits); value: [from, to] intervals
    lines: BTreeMap<(bool, u64), Vec<(f64, f64)>>,
}

fn key_of(c: f64) -> u64 {
    // normalize -0.0 so both zeros share a line
    (c + 0.0).to_bits()
}

impl LineSet {
    fn add_h(&mut self, y: f64, x0: f64, x1: f64) {
        self.add(true, y, x0, x1);
    }

    fn add_v(&mut self, x: f64, y0: f64, y1: f64) {
        self.add(false, x, y0, y1);
    }

    fn add(&mut self, horizontal: bool, c: f64, a: f64, b: f64) {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let list = self.lines.entry((horizontal, key_of(c))).or_default();
        list.push((a, b));
        list.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(list.len());
        for &(s, e) in list.iter() {
            match merged.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        *list = merged;
    }

    fn cut(&mut self, horizontal: bool, c: f64, a: f64, b: f64) {
        if let Some(list) = self.lines.get_mut(&(horizontal, key_of(c))) {
            let mut out = Vec::new();
            for &(s, e) in list.iter() {
                if b <= s || a >= e {
                    out.push((s, e));
                    continue;
                }
                if a > s {
                    out.push((s, a));
                }
                if b < e {
                    out.push((b, e));
                }
            }
            *list = out;
        }
    }

    /// Emits segments, split wherever another wall ends on their interior.
    fn into_segments(self) -> Vec<LineSegment2> {
        let to_points = |horizontal: bool, c: f64, s: f64, e: f64| {
            if horizontal {
                (Point2::new(s, c), Point2::new(e, c))
            } else {
                (Point2::new(c, s), Point2::new(c, e))
            }
        };
        let mut endpoints = Vec::new();
        for (&(h, bits), list) in &self.lines {
            let c = f64::from_bits(bits);
            for &(s, e) in list {
                let (p, q) = to_points(h, c, s, e);
                endpoints.push(p);
                endpoints.push(q);
            }
        }
        let mut out = Vec::new();
        for (&(h, bits), list) in &self.lines {
            let c = f64::from_bits(bits);
            for &(s, e) in list {
                let mut cuts: Vec<f64> = endpoints
                    .iter()
                    .filter_map(|p| {
                        let (along, across) = if h { (p.x, p.y) } else { (p.y, p.x) };
                        (across == c && along > s && along < e).then_some(along)
                    })
                    .collect();
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                let mut prev = s;
                for t in cuts.into_iter().chain(std::iter::once(e)) {
                    let (p, q) = to_points(h, c, prev, t);
                    if let Ok(seg) = LineSegment2::new(p, q) {
                        out.push(seg);
                    }
                    prev = t;
                }
            }
        }
        out
    }
}

/// Sampling and deviation settings for [`synthesize_submap`].
#[derive(Clone, Debug, PartialEq)]
pub struct SceneParams {
    pub radius_m: f64,
    pub noise_sigma_m: f64,
    /// Fraction of visible walls left out of the scan (unconstructed parts).
    pub drop_wall_frac: f64,
    /// Extra planar clutter, as a fraction of the wall point count.
    pub clutter_frac: f64,
    pub seed: u64,
    /// Wall surface density in points per square meter.
    pub wall_density: f64,
    pub wall_height_m: f64,
    /// Floor density in points per square meter.
    pub ground_density: f64,
    /// Floor is only sampled this far from built walls.
    pub ground_clearance_m: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            radius_m: 12.0,
            noise_sigma_m: 0.0,
            drop_wall_frac: 0.0,
            clutter_frac: 0.0,
            seed: 0,
            wall_density: 100.0,
            wall_height_m: 2.5,
            ground_density: 100.0,
            ground_clearance_m: 1.25,
        }
    }
}

/// A vertical rectangle of extra construction not present in the model.
#[derive(Clone, Debug, PartialEq)]
pub struct ClutterPlane {
    pub footprint: LineSegment2,
    pub height_m: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeviationLog {
    /// Indices into the model's walls that were left out of the scan.
    pub dropped_walls: Vec<usize>,
    pub clutter: Vec<ClutterPlane>,
    pub noise_sigma_m: f64,
    pub wall_points: usize,
    pub clutter_points: usize,
    pub ground_points: usize,
}

#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub wall_model: WallModel,
    /// Maps submap coordinates onto the model frame.
    pub gt_pose: Se2Pose,
    pub submap: Submap,
    pub deviation_log: DeviationLog,
}

/// Portion of `seg` inside the disk of radius `r` around `c`.
fn clip_to_disk(seg: &LineSegment2, c: Point2, r: f64) -> Option<(Point2, Point2)> {
    let d = seg.p1 - seg.p0;
    let f = seg.p0 - c;
    let a = d.norm_squared();
    let b = 2.0 * f.dot(d);
    let cc = f.norm_squared() - r * r;
    let disc = b * b - 4.0 * a * cc;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = ((-b - sq) / (2.0 * a)).max(0.0);
    let t1 = ((-b + sq) / (2.0 * a)).min(1.0);
    (t1 > t0).then(|| (seg.p0 + d * t0, seg.p0 + d * t1))
}

/// Samples a posed submap of `model` as seen from `pose`.
///
/// The returned `gt_pose` equals `pose` and maps the submap frame onto the
/// model frame.
pub fn synthesize_submap(model: &WallModel, pose: Se2Pose, params: &SceneParams) -> Result<SyntheticScene> {
    let p = params;
    if p.radius_m.is_nan() || p.radius_m <= 0.0 {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    for (name, f) in [("drop_wall_frac", p.drop_wall_frac), ("clutter_frac", p.clutter_frac)] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1]")));
        }
    }
    if p.noise_sigma_m < 0.0 {
        return Err(Error::InvalidArgument("noise sigma must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let center = pose.translation();

    let visible: Vec<(usize, (Point2, Point2))> =
        model.walls.iter().enumerate().filter_map(|(i, w)| clip_to_disk(w, center, p.radius_m).map(|c| (i, c))).collect();
    if visible.is_empty() {
        return Err(Error::EmptyScene);
    }
    let n_drop = (p.drop_wall_frac * visible.len() as f64).round() as usize;
    let mut dropped: Vec<usize> =
        sample(&mut rng, visible.len(), n_drop.min(visible.len())).into_iter().map(|k| visible[k].0).collect();
    dropped.sort_unstable();
    if dropped.len() == visible.len() {
        return Err(Error::EmptyScene);
    }
    let built: Vec<&LineSegment2> =
        model.walls.iter().enumerate().filter(|(i, _)| dropped.binary_search(i).is_err()).map(|(_, w)| w).collect();

    let mut world: Vec<Point3> = Vec::new();
    for (i, (a, b)) in &visible {
        if dropped.binary_search(i).is_ok() {
            continue;
        }
        let len = a.distance(*b);
        let n = (p.wall_density * len * p.wall_height_m).round() as usize;
        for _ in 0..n {
            let t: f64 = rng.gen();
            let q = *a + (*b - *a) * t;
            world.push(Point3::new(q.x, q.y, rng.gen_range(0.0..p.wall_height_m)));
        }
    }
    let wall_points = world.len();

    // bounding box of the whole model; floor and clutter stay indoors
    let (mut lo, mut hi) = (Point2::new(f64::MAX, f64::MAX), Point2::new(f64::MIN, f64::MIN));
    for w in &model.walls {
        for q in [w.p0, w.p1] {
            lo = Point2::new(lo.x.min(q.x), lo.y.min(q.y));
            hi = Point2::new(hi.x.max(q.x), hi.y.max(q.y));
        }
    }
    let inside = |q: Point2| q.x > lo.x && q.x < hi.x && q.y > lo.y && q.y < hi.y;
    let random_in_disk = |rng: &mut ChaCha8Rng, r: f64| {
        let rr = r * rng.gen::<f64>().sqrt();
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        center + Point2::new(rr * th.cos(), rr * th.sin())
    };

    let clutter_budget = (p.clutter_frac * wall_points as f64).round() as usize;
    let mut clutter = Vec::new();
    let mut clutter_points = 0;
    let mut attempts = 0;
    while clutter_points < clutter_budget && attempts < 10_000 {
        attempts += 1;
        let len = rng.gen_range(0.8..2.0);
        let height = rng.gen_range(1.0..2.0);
        let yaw = rng.gen_range(0.0..std::f64::consts::PI);
        let mid = random_in_disk(&mut rng, 0.9 * p.radius_m);
        let u = Point2::new(yaw.cos(), yaw.sin()) * (0.5 * len);
        let Ok(foot) = LineSegment2::new(mid - u, mid + u) else {
            continue;
        };
        if !inside(foot.p0) || !inside(foot.p1) || built.iter().any(|w| w.segment_distance(&foot) < 0.3) {
            continue;
        }
        let n = ((p.wall_density * len * height).round() as usize).min(clutter_budget - clutter_points);
        for _ in 0..n {
            let q = foot.p0 + (foot.p1 - foot.p0) * rng.gen::<f64>();
            world.push(Point3::new(q.x, q.y, rng.gen_range(0.0..height)));
        }
        clutter_points += n;
        clutter.push(ClutterPlane { footprint: foot, height_m: height });
    }

    let n_ground = (p.ground_density * std::f64::consts::PI * p.radius_m * p.radius_m).round() as usize;
    let mut ground_points = 0;
    for _ in 0..n_ground {
        let q = random_in_disk(&mut rng, p.radius_m);
        if !inside(q)
            || built.iter().any(|w| w.distance_to_point(q) < p.ground_clearance_m)
            || clutter.iter().any(|c| c.footprint.distance_to_point(q) < 0.2)
        {
            continue;
        }
        world.push(Point3::new(q.x, q.y, 0.0));
        ground_points += 1;
    }

    let normal = Normal::new(0.0, p.noise_sigma_m.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let inv = pose.inverse();
    let points: Vec<Point3> = world
        .into_iter()
        .map(|q| {
            let (nx, ny, nz) = if p.noise_sigma_m > 0.0 {
                (normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng))
            } else {
                (0.0, 0.0, 0.0)
            };
            let s = inv.apply(Point2::new(q.x + nx, q.y + ny));
            Point3::new(s.x, s.y, q.z + nz)
        })
        .collect();

    let mut submap = Submap::new(points, [0.0, 0.0, -1.0])?;
    submap.source_span_m = Some(p.radius_m);
    Ok(SyntheticScene {
        wall_model: model.clone(),
        gt_pose: pose,
        submap,
        deviation_log: DeviationLog {
            dropped_walls: dropped,
            clutter,
            noise_sigma_m: p.noise_sigma_m,
            wall_points,
            clutter_points,
            ground_points,
        },
    })
}
