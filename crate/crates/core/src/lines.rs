//! Bird's-eye rasterization of walls, Hough line-segment detection,
//! segment merging and corner extraction.
//!
//! The same corner extraction runs on segments detected in a submap raster
//! and on the exact segments of a wall model, so both sides of a
//! registration describe their corners identically.

use std::fmt::Write as _;

use crate::geometry::{line_angle_deg, LineSegment2, Point2};
use crate::ingest::WallModel;
use crate::planes::PlanarPatch;

/// Binary occupancy raster in the ground plane.
///
/// Pixel `(i, j)` covers `origin + [i, i+1) / scale × [j, j+1) / scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct BevRaster {
    pub origin: Point2,
    /// Pixels per meter.
    pub scale: f64,
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl BevRaster {
    pub fn new(origin: Point2, scale: f64, width: usize, height: usize) -> Self {
        assert!(scale > 0.0, "raster scale must be positive");
        BevRaster { origin, scale, width, height, cells: vec![false; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `floor((p - origin) · scale)`; may be out of bounds.
    pub fn pixel_of(&self, p: Point2) -> (i64, i64) {
        (((p.x - self.origin.x) * self.scale).floor() as i64, ((p.y - self.origin.y) * self.scale).floor() as i64)
    }

    /// Center of a pixel, in meters. Accepts fractional pixel coordinates.
    pub fn to_world(&self, px: f64, py: f64) -> Point2 {
        Point2::new(self.origin.x + (px + 0.5) / self.scale, self.origin.y + (py + 0.5) / self.scale)
    }

    pub fn get(&self, i: i64, j: i64) -> bool {
        if i < 0 || j < 0 || i as usize >= self.width || j as usize >= self.height {
            return false;
        }
        self.cells[j as usize * self.width + i as usize]
    }

    pub fn set(&mut self, i: i64, j: i64) {
        if i < 0 || j < 0 || i as usize >= self.width || j as usize >= self.height {
            return;
        }
        self.cells[j as usize * self.width + i as usize] = true;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn occupied(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.cells.iter().enumerate().filter(|(_, &c)| c).map(move |(k, _)| ((k % self.width) as i64, (k / self.width) as i64))
    }

    /// Binary PGM (P5), row 0 at the top, occupied pixels white.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        for j in (0..self.height).rev() {
            for i in 0..self.width {
                out.push(if self.cells[j * self.width + i] { 255 } else { 0 });
            }
        }
        out
    }
}

fn bounds(points: impl Iterator<Item = Point2>) -> Option<(Point2, Point2)> {
    points.fold(None, |acc, p| match acc {
        None => Some((p, p)),
        Some((lo, hi)) => Some((Point2::new(lo.x.min(p.x), lo.y.min(p.y)), Point2::new(hi.x.max(p.x), hi.y.max(p.y)))),
    })
}

fn raster_for(lo: Point2, hi: Point2, scale: f64) -> BevRaster {
    let w = ((hi.x - lo.x) * scale).floor() as usize + 1;
    let h = ((hi.y - lo.y) * scale).floor() as usize + 1;
    BevRaster::new(lo, scale, w, h)
}

/// Rasterizes points, anchoring the raster at their minimum corner.
pub fn rasterize_points(points: &[Point2], scale: f64) -> BevRaster {
    let Some((lo, hi)) = bounds(points.iter().copied()) else {
        return BevRaster::new(Point2::ORIGIN, scale, 0, 0);
    };
    let mut r = raster_for(lo, hi, scale);
    for p in points {
        let (i, j) = r.pixel_of(*p);
        r.set(i, j);
    }
    r
}

/// Projects wall patch points onto the ground plane and rasterizes them.
pub fn rasterize_patches(patches: &[PlanarPatch], scale: f64) -> BevRaster {
    let pts: Vec<Point2> = patches.iter().flat_map(|p| p.points.iter().map(|q| q.xy())).collect();
    rasterize_points(&pts, scale)
}

/// Draws segments with Bresenham lines.
pub fn rasterize_segments(segments: &[LineSegment2], scale: f64) -> BevRaster {
    let Some((lo, hi)) = bounds(segments.iter().flat_map(|s| [s.p0, s.p1])) else {
        return BevRaster::new(Point2::ORIGIN, scale, 0, 0);
    };
    let mut r = raster_for(lo, hi, scale);
    for s in segments {
        let (x0, y0) = r.pixel_of(s.p0);
        let (x1, y1) = r.pixel_of(s.p1);
        bresenham(x0, y0, x1, y1, |i, j| r.set(i, j));
    }
    r
}

pub(crate) fn bresenham(mut x0: i64, mut y0: i64, x1: i64, y1: i64, mut plot: impl FnMut(i64, i64)) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        plot(x0, y0);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

/// Internals of the Hough segment detector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoughParams {
    pub theta_step_deg: f64,
    pub rho_step_px: f64,
    /// Largest hole bridged while tracing a run along a peak line.
    pub gap_px: f64,
    /// Half-width of the band of pixels attributed to a peak line.
    pub band_px: f64,
}

impl Default for HoughParams {
    fn default() -> Self {
        HoughParams { theta_step_deg: 1.0, rho_step_px: 1.0, gap_px: 5.0, band_px: 5.0 }
    }
}

/// Total-least-squares line: centroid and unit direction.
pub(crate) fn fit_line(points: &[Point2]) -> Option<(Point2, Point2)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let c = points.iter().fold(Point2::ORIGIN, |a, &p| a + p) * (1.0 / n);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = *p - c;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    if sxx + syy <= 0.0 {
        return None;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some((c, Point2::new(theta.cos(), theta.sin())))
}

/// Detects line segments with a standard (ρ, θ) accumulator.
///
/// Repeatedly takes the strongest accumulator peak, gathers the pixels in a
/// band around it, refits the line, traces gap-tolerant runs along it and
/// emits runs of at least `l_min_px` pixels. Emitted pixels are removed and
/// unvoted before the next peak is taken. Output is in meters.
pub fn detect_segments(raster: &BevRaster, l_min_px: f64) -> Vec<LineSegment2> {
    detect_segments_with(raster, l_min_px, &HoughParams::default())
}

pub fn detect_segments_with(raster: &BevRaster, l_min_px: f64, hp: &HoughParams) -> Vec<LineSegment2> {
    let pixels: Vec<(i64, i64)> = raster.occupied().collect();
    if pixels.is_empty() {
        return Vec::new();
    }
    let n_theta = (180.0 / hp.theta_step_deg).round() as usize;
    let trig: Vec<(f64, f64)> =
        (0..n_theta).map(|t| (t as f64 * hp.theta_step_deg).to_radians().sin_cos()).map(|(s, c)| (c, s)).collect();
    let diag = ((raster.width() as f64).hypot(raster.height() as f64) / hp.rho_step_px).ceil() as i64 + 1;
    let n_rho = (2 * diag + 1) as usize;
    let rho_bin = |t: usize, x: i64, y: i64| -> usize {
        let (c, s) = trig[t];
        (((x as f64 * c + y as f64 * s) / hp.rho_step_px).round() as i64 + diag) as usize
    };

    let mut acc = vec![0u32; n_theta * n_rho];
    for &(x, y) in &pixels {
        for t in 0..n_theta {
            acc[t * n_rho + rho_bin(t, x, y)] += 1;
        }
    }
    // peaks only propose lines; runs are held to the full length below
    let threshold = (0.5 * l_min_px).max(1.0).ceil() as u32;
    // counts only decrease, so the set of bins that can still peak only shrinks
    let mut live_bins: Vec<usize> = (0..acc.len()).filter(|&k| acc[k] >= threshold).collect();
    let mut alive = vec![true; pixels.len()];
    let mut out = Vec::new();

    loop {
        live_bins.retain(|&k| acc[k] >= threshold);
        let Some(&best) = live_bins.iter().max_by(|&&a, &&b| acc[a].cmp(&acc[b]).then(b.cmp(&a))) else {
            break;
        };
        let t = best / n_rho;
        let rho = (best % n_rho) as f64 - diag as f64;
        let (c, s) = trig[t];
        let normal = Point2::new(c, s);
        let rho_px = rho * hp.rho_step_px;

        let mut members: Vec<usize> =
            (0..pixels.len()).filter(|&k| alive[k] && (px(pixels[k]).dot(normal) - rho_px).abs() <= hp.band_px).collect();
        let mut line = None;
        for _ in 0..2 {
            let pts: Vec<Point2> = members.iter().map(|&k| px(pixels[k])).collect();
            let Some((centroid, dir)) = fit_line(&pts) else {
                break;
            };
            line = Some((centroid, dir));
            let nrm = dir.perp();
            members =
                (0..pixels.len()).filter(|&k| alive[k] && (px(pixels[k]) - centroid).dot(nrm).abs() <= hp.band_px).collect();
        }

        let mut removed: Vec<usize> = Vec::new();
        if let Some((centroid, dir)) = line {
            let mut proj: Vec<(f64, usize)> = members.iter().map(|&k| ((px(pixels[k]) - centroid).dot(dir), k)).collect();
            proj.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut start = 0;
            for i in 1..=proj.len() {
                if i == proj.len() || proj[i].0 - proj[i - 1].0 > hp.gap_px {
                    let run = &proj[start..i];
                    let extent = run[run.len() - 1].0 - run[0].0;
                    if extent + 1.0 >= l_min_px && run.len() >= 2 {
                        let run_pts: Vec<Point2> = run.iter().map(|&(_, k)| px(pixels[k])).collect();
                        let (rc, rd) = fit_line(&run_pts).unwrap_or((centroid, dir));
                        let (lo, hi) = run_pts.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| {
                            let v = (*p - rc).dot(rd);
                            (lo.min(v), hi.max(v))
                        });
                        let a = rc + rd * lo;
                        let b = rc + rd * hi;
                        if let Ok(seg) = LineSegment2::new(raster.to_world(a.x, a.y), raster.to_world(b.x, b.y)) {
                            out.push(seg);
                        }
                        removed.extend(run.iter().map(|&(_, k)| k));
                    }
                    start = i;
                }
            }
        }
        if removed.is_empty() {
            removed = members;
        }
        let before = acc[best];
        for &k in &removed {
            if !alive[k] {
                continue;
            }
            alive[k] = false;
            let (x, y) = pixels[k];
            for tt in 0..n_theta {
                acc[tt * n_rho + rho_bin(tt, x, y)] -= 1;
            }
        }
        if acc[best] == before {
            // the peak's own pixels fell outside the refit band; retire the bin
            acc[best] = 0;
        }
    }
    out
}

fn px((x, y): (i64, i64)) -> Point2 {
    Point2::new(x as f64, y as f64)
}

pub(crate) struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    pub(crate) fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            let r = self.find(i);
            by_root[r].push(i);
        }
        by_root.into_iter().filter(|g| !g.is_empty()).collect()
    }
}

/// Merges chains of nearly collinear, nearby segments and refits each chain
/// to the occupied `support` pixels along it.
pub fn merge_refit(segments: &[LineSegment2], endpoint_tol_m: f64, angle_tol_deg: f64, support: &BevRaster) -> Vec<LineSegment2> {
    let n = segments.len();
    let mut uf = DisjointSet::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&segments[i], &segments[j]);
            if line_angle_deg(a.direction(), b.direction()) > angle_tol_deg {
                continue;
            }
            if a.segment_distance(b) > endpoint_tol_m {
                continue;
            }
            let lateral = a.line_distance(b.midpoint()).max(b.line_distance(a.midpoint()));
            if lateral <= endpoint_tol_m {
                uf.union(i, j);
            }
        }
    }
    let band = HoughParams::default().band_px / support.scale;
    let mut out = Vec::with_capacity(n);
    for group in uf.groups() {
        if group.len() == 1 {
            out.push(segments[group[0]]);
            continue;
        }
        // provisional line from length-weighted endpoints
        let mut ends = Vec::new();
        for &g in &group {
            let s = &segments[g];
            let reps = (s.length() * support.scale).ceil().max(1.0) as usize;
            for k in 0..=reps {
                ends.push(s.p0 + (s.p1 - s.p0) * (k as f64 / reps as f64));
            }
        }
        let (c0, d0) = fit_line(&ends).expect("group spans a line");
        let (lo0, hi0) = extent_along(&ends, c0, d0);
        let pix: Vec<Point2> = support
            .occupied()
            .map(|(i, j)| support.to_world(i as f64, j as f64))
            .filter(|p| {
                let d = *p - c0;
                d.dot(d0.perp()).abs() <= band && (lo0 - band..=hi0 + band).contains(&d.dot(d0))
            })
            .collect();
        let (c, d) = if pix.len() >= 2 { fit_line(&pix).unwrap_or((c0, d0)) } else { (c0, d0) };
        let (lo, hi) = extent_along(&ends, c, d);
        if let Ok(seg) = LineSegment2::new(c + d * lo, c + d * hi) {
            out.push(seg);
        }
    }
    out
}

fn extent_along(points: &[Point2], c: Point2, d: Point2) -> (f64, f64) {
    points.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| {
        let v = (*p - c).dot(d);
        (lo.min(v), hi.max(v))
    })
}

/// A wall corner: the intersection of two (extended) wall segments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corner {
    pub position: Point2,
    pub wall_a: LineSegment2,
    pub wall_b: LineSegment2,
}

impl Corner {
    /// Combined length of the two attached walls.
    pub fn support(&self) -> f64 {
        self.wall_a.length() + self.wall_b.length()
    }
}

/// Segments meeting at less than this angle are treated as parallel.
pub const MIN_CORNER_ANGLE_DEG: f64 = 20.0;

/// Intersects every pair of non-parallel segments after extending each by
/// `extend_m`, then thins the candidates with non-maximum suppression.
///
/// NMS keeps the candidate with the longest combined wall support; ties go
/// to the lexicographically smaller position.
pub fn extract_corners(segments: &[LineSegment2], extend_m: f64, nms_radius_m: f64) -> Vec<Corner> {
    let extended: Vec<LineSegment2> = segments.iter().map(|s| s.extended(extend_m)).collect();
    let mut candidates = Vec::new();
    for i in 0..segments.len() {
        for j in i + 1..segments.len() {
            if line_angle_deg(segments[i].direction(), segments[j].direction()) < MIN_CORNER_ANGLE_DEG {
                continue;
            }
            if let Some(p) = extended[i].intersection(&extended[j]) {
                candidates.push(Corner { position: p, wall_a: segments[i], wall_b: segments[j] });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.support()
            .total_cmp(&a.support())
            .then(a.position.x.total_cmp(&b.position.x))
            .then(a.position.y.total_cmp(&b.position.y))
    });
    let mut kept: Vec<Corner> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| k.position.distance(c.position) >= nms_radius_m) {
            kept.push(c);
        }
    }
    kept
}

/// Corners of a wall model from its exact segments.
pub fn model_corners(model: &WallModel, extend_m: f64, nms_radius_m: f64) -> Vec<Corner> {
    extract_corners(&model.walls, extend_m, nms_radius_m)
}

/// Writes corners in the wall-model text format: each corner becomes a
/// comment with its position followed by its two attached walls.
pub fn format_corners(corners: &[Corner]) -> String {
    let mut out = String::new();
    for c in corners {
        let _ = writeln!(out, "# corner {} {}", c.position.x, c.position.y);
        for w in [c.wall_a, c.wall_b] {
            let _ = writeln!(out, "{} {} {} {}", w.p0.x, w.p0.y, w.p1.x, w.p1.y);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(a: (f64, f64), b: (f64, f64)) -> LineSegment2 {
        LineSegment2::new(Point2::new(a.0, a.1), Point2::new(b.0, b.1)).unwrap()
    }

    #[test]
    fn five_meter_wall_draws_a_pixel_line() {
        let r = rasterize_segments(&[seg((0.0, 0.0), (5.0, 0.0))], 60.0);
        assert!((r.count() as i64 - 300).abs() <= 2, "{}", r.count());
        assert_eq!(r.height(), 1);
    }

    #[test]
    fn empty_and_origin_rasters() {
        assert!(rasterize_segments(&[], 60.0).is_empty());
        assert!(rasterize_points(&[], 60.0).is_empty());
        let r = rasterize_points(&[Point2::ORIGIN], 60.0);
        assert_eq!(r.pixel_of(Point2::ORIGIN), (0, 0));
        assert!(r.get(0, 0));
    }

    #[test]
    fn single_wall_is_one_segment() {
        let truth = seg((1.0, 2.0), (11.0, 2.0));
        let r = rasterize_segments(&[truth], 60.0);
        let found = detect_segments(&r, 30.0);
        assert_eq!(found.len(), 1, "{found:?}");
        let s = found[0];
        let (a, b) = if s.p0.x < s.p1.x { (s.p0, s.p1) } else { (s.p1, s.p0) };
        assert!(a.distance(truth.p0) <= 2.0 / 60.0, "{a:?}");
        assert!(b.distance(truth.p1) <= 2.0 / 60.0, "{b:?}");
    }

    #[test]
    fn short_wall_is_dropped() {
        let r = rasterize_segments(&[seg((0.0, 0.0), (20.0 / 60.0, 0.0))], 60.0);
        assert!(detect_segments(&r, 30.0).is_empty());
    }

    #[test]
    fn l_shape_gives_two_segments_meeting_at_bend() {
        let walls = [seg((0.0, 0.0), (6.0, 0.0)), seg((6.0, 0.0), (6.0, 4.0))];
        let r = rasterize_segments(&walls, 60.0);
        let found = detect_segments(&r, 30.0);
        assert_eq!(found.len(), 2, "{found:?}");
        let bend = Point2::new(6.0, 0.0);
        for s in &found {
            assert!(s.distance_to_point(bend) < 0.15, "{s:?}");
        }
    }

    #[test]
    fn collinear_gap_is_merged() {
        let parts = [seg((0.0, 0.0), (3.0, 0.0)), seg((3.1, 0.0), (6.0, 0.0))];
        let support = rasterize_segments(&parts, 60.0);
        let merged = merge_refit(&parts, 0.3, 5.0, &support);
        assert_eq!(merged.len(), 1);
        assert!((merged[0].length() - 6.0).abs() < 0.05, "{:?}", merged[0]);
    }

    #[test]
    fn perpendicular_and_single_unchanged() {
        let parts = [seg((0.0, 0.0), (3.0, 0.0)), seg((3.0, 0.0), (3.0, 3.0))];
        let support = rasterize_segments(&parts, 60.0);
        assert_eq!(merge_refit(&parts, 0.3, 5.0, &support), parts.to_vec());
        assert_eq!(merge_refit(&parts[..1], 0.3, 5.0, &support), parts[..1].to_vec());
    }

    #[test]
    fn perpendicular_walls_give_one_corner() {
        let walls = [seg((-3.0, 3.0), (2.0, 3.0)), seg((2.0, 3.0), (2.0, 8.0))];
        let c = extract_corners(&walls, 1.0, 0.5);
        assert_eq!(c.len(), 1);
        assert!(c[0].position.distance(Point2::new(2.0, 3.0)) < 2.0 / 60.0);
    }

    #[test]
    fn parallel_walls_give_none_and_cross_gives_one() {
        let par = [seg((0.0, 0.0), (5.0, 0.0)), seg((0.0, 1.0), (5.0, 1.0))];
        assert!(extract_corners(&par, 1.0, 0.5).is_empty());
        let x = [seg((-2.0, 0.0), (2.0, 0.0)), seg((0.0, -2.0), (0.0, 2.0))];
        let c = extract_corners(&x, 1.0, 0.5);
        assert_eq!(c.len(), 1);
        assert!(c[0].position.distance(Point2::ORIGIN) < 1e-12);
    }

    #[test]
    fn square_room_has_four_corners() {
        let walls = vec![
            seg((0.0, 0.0), (1.0, 0.0)),
            seg((1.0, 0.0), (1.0, 1.0)),
            seg((1.0, 1.0), (0.0, 1.0)),
            seg((0.0, 1.0), (0.0, 0.0)),
        ];
        let model = WallModel::new("0", walls);
        let mut c: Vec<(f64, f64)> =
            model_corners(&model, 0.1, 0.5).iter().map(|c| (c.position.x.round(), c.position.y.round())).collect();
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(c, vec![(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]);
        assert!(model_corners(&WallModel::new("0", vec![]), 1.0, 0.5).is_empty());
    }

    #[test]
    fn shared_wall_attachments() {
        // two rooms side by side sharing the wall at x = 4
        let walls = vec![
            seg((0.0, 0.0), (4.0, 0.0)),
            seg((4.0, 0.0), (9.0, 0.0)),
            seg((0.0, 5.0), (4.0, 5.0)),
            seg((4.0, 5.0), (9.0, 5.0)),
            seg((0.0, 0.0), (0.0, 5.0)),
            seg((4.0, 0.0), (4.0, 5.0)),
            seg((9.0, 0.0), (9.0, 5.0)),
        ];
        let corners = model_corners(&WallModel::new("0", walls), 1.0, 0.5);
        assert_eq!(corners.len(), 6);
        for at in [Point2::new(4.0, 0.0), Point2::new(4.0, 5.0)] {
            let c = corners.iter().find(|c| c.position.distance(at) < 1e-9).expect("shared corner");
            let shared = seg((4.0, 0.0), (4.0, 5.0));
            assert!(c.wall_a == shared || c.wall_b == shared);
            let other = if c.wall_a == shared { c.wall_b } else { c.wall_a };
            assert!(other.line_distance(at) < 1e-9 && line_angle_deg(other.direction(), Point2::new(1.0, 0.0)) < 1e-9);
        }
    }

    #[test]
    fn pgm_header() {
        let r = rasterize_segments(&[seg((0.0, 0.0), (1.0, 0.5))], 10.0);
        let pgm = r.to_pgm();
        assert!(pgm.starts_with(b"P5\n11 6\n255\n"));
        assert_eq!(pgm.len(), b"P5\n11 6\n255\n".len() + 66);
    }
}
