//! Occupancy-aware confidence scoring of pose candidates.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{LineSegment2, Point2, Se2Pose};
use crate::voting::PoseCandidate;

/// Rasterized walls dilated with a linearly decaying square kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreField {
    pub origin: Point2,
    /// Cell edge in meters.
    pub s_r: f64,
    /// Kernel radius in cells.
    pub k_d: u32,
    width: usize,
    height: usize,
    values: Vec<f64>,
    occupied: Vec<bool>,
}

impl ScoreField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_of(&self, p: Point2) -> (i64, i64) {
        (((p.x - self.origin.x) / self.s_r).floor() as i64, ((p.y - self.origin.y) / self.s_r).floor() as i64)
    }

    fn index(&self, (i, j): (i64, i64)) -> Option<usize> {
        if i < 0 || j < 0 || i as usize >= self.width || j as usize >= self.height {
            return None;
        }
        Some(j as usize * self.width + i as usize)
    }

    /// Field value of a cell; 0 outside the grid.
    pub fn cell_value(&self, c: (i64, i64)) -> f64 {
        self.index(c).map_or(0.0, |k| self.values[k])
    }

    pub fn value_at(&self, p: Point2) -> f64 {
        self.cell_value(self.cell_of(p))
    }

    /// True when the cell holds a rasterized wall.
    pub fn is_wall(&self, p: Point2) -> bool {
        self.index(self.cell_of(p)).is_some_and(|k| self.occupied[k])
    }
}

/// Field value at Chebyshev distance `d` from the nearest wall cell.
pub fn kernel_value(d: u32, k_d: u32) -> f64 {
    if d > k_d {
        return 0.0;
    }
    let k = k_d as f64;
    1.0 - (d as f64 / k) * (1.0 - 1.0 / k)
}

/// Visits every cell the segment passes through, both cells at exact
/// corner crossings included.
fn supercover(seg: &LineSegment2, origin: Point2, s_r: f64, mut visit: impl FnMut(i64, i64)) {
    let a = (seg.p0 - origin) * (1.0 / s_r);
    let b = (seg.p1 - origin) * (1.0 / s_r);
    let (mut i, mut j) = (a.x.floor() as i64, a.y.floor() as i64);
    let (ei, ej) = (b.x.floor() as i64, b.y.floor() as i64);
    let d = b - a;
    let si: i64 = if d.x > 0.0 { 1 } else { -1 };
    let sj: i64 = if d.y > 0.0 { 1 } else { -1 };
    let next = |c: i64, s: i64, p: f64, dp: f64| {
        if dp == 0.0 {
            f64::INFINITY
        } else {
            ((c + i64::from(s > 0)) as f64 - p) / dp
        }
    };
    let mut tx = next(i, si, a.x, d.x);
    let mut ty = next(j, sj, a.y, d.y);
    let dtx = if d.x == 0.0 { f64::INFINITY } else { 1.0 / d.x.abs() };
    let dty = if d.y == 0.0 { f64::INFINITY } else { 1.0 / d.y.abs() };
    let budget = (ei - i).abs() + (ej - j).abs() + 2;
    visit(i, j);
    for _ in 0..budget {
        if (i, j) == (ei, ej) || tx.min(ty) > 1.0 {
            break;
        }
        if tx < ty {
            i += si;
            tx += dtx;
        } else if ty < tx {
            j += sj;
            ty += dty;
        } else {
            visit(i + si, j);
            visit(i, j + sj);
            i += si;
            j += sj;
            tx += dtx;
            ty += dty;
        }
        visit(i, j);
    }
    visit(ei, ej);
}

const RASTER_EPS_M: f64 = 1e-6;

/// Rasterizes `walls` at `s_r` meters per cell and dilates them so a cell at
/// Chebyshev distance `d ≤ k_d` from a wall cell holds
/// `1 − (d/k_d)(1 − 1/k_d)`, and farther cells hold 0.
pub fn build_score_field(walls: &[LineSegment2], s_r: f64, k_d: u32) -> Result<ScoreField> {
    if walls.is_empty() {
        return Err(Error::EmptyModel);
    }
    if s_r.is_nan() || s_r <= 0.0 || k_d == 0 {
        return Err(Error::InvalidArgument(format!("need s_r > 0 and k_d ≥ 1, got {s_r}, {k_d}")));
    }
    let (mut lo, mut hi) = (Point2::new(f64::MAX, f64::MAX), Point2::new(f64::MIN, f64::MIN));
    for w in walls {
        for p in [w.p0, w.p1] {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
    }
    let pad = (k_d + 2) as f64 * s_r;
    let origin = Point2::new(((lo.x - pad) / s_r).floor() * s_r, ((lo.y - pad) / s_r).floor() * s_r);
    let width = ((hi.x + pad - origin.x) / s_r).ceil() as usize + 1;
    let height = ((hi.y + pad - origin.y) / s_r).ceil() as usize + 1;
    let mut field =
        ScoreField { origin, s_r, k_d, width, height, values: vec![0.0; width * height], occupied: vec![false; width * height] };
    // walls on a grid line mark the cells on both sides, so rounding in the
    // submap transform cannot push on-wall points off the raster
    for w in walls {
        let n = w.direction().perp() * RASTER_EPS_M;
        for off in [Point2::new(0.0, 0.0), n, n * -1.0] {
            let shifted = LineSegment2 { p0: w.p0 + off, p1: w.p1 + off };
            supercover(&shifted, origin, s_r, |i, j| {
                if let Some(k) = field.index((i, j)) {
                    field.occupied[k] = true;
                }
            });
        }
    }

    // two-pass chamfer with unit 8-neighbor weights gives exact Chebyshev distance
    let big = u32::MAX / 2;
    let mut dist: Vec<u32> = field.occupied.iter().map(|&o| if o { 0 } else { big }).collect();
    let (w, h) = (width, height);
    for y in 0..h {
        for x in 0..w {
            let mut d = dist[y * w + x];
            if x > 0 {
                d = d.min(dist[y * w + x - 1] + 1);
            }
            if y > 0 {
                d = d.min(dist[(y - 1) * w + x] + 1);
                if x > 0 {
                    d = d.min(dist[(y - 1) * w + x - 1] + 1);
                }
                if x + 1 < w {
                    d = d.min(dist[(y - 1) * w + x + 1] + 1);
                }
            }
            dist[y * w + x] = d;
        }
    }
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let mut d = dist[y * w + x];
            if x + 1 < w {
                d = d.min(dist[y * w + x + 1] + 1);
            }
            if y + 1 < h {
                d = d.min(dist[(y + 1) * w + x] + 1);
                if x + 1 < w {
                    d = d.min(dist[(y + 1) * w + x + 1] + 1);
                }
                if x > 0 {
                    d = d.min(dist[(y + 1) * w + x - 1] + 1);
                }
            }
            dist[y * w + x] = d;
        }
    }
    field.values = dist.into_iter().map(|d| kernel_value(d, k_d)).collect();
    Ok(field)
}

/// Which terms enter the confidence score.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoreVariant {
    /// Wall award minus the ground-on-wall penalty.
    Osc,
    /// Wall award only.
    AwardOnly,
    /// Adds one award per ground point on a BIM-free cell, normalized by all points.
    FreeFreeAward,
    /// Adds a penalty per non-ground point on a BIM-free cell.
    OccupiedFreePenalty,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerificationReport {
    pub candidate: PoseCandidate,
    pub s_a: f64,
    pub s_p: f64,
    pub confidence: f64,
    pub n_nonground: usize,
}

impl VerificationReport {
    /// `candidate_idx x y yaw_deg votes s_a s_p confidence`
    pub fn to_line(&self, idx: usize) -> String {
        format!(
            "{idx} {:.4} {:.4} {:.4} {} {:.3} {:.3} {:.6}",
            self.candidate.pose.x,
            self.candidate.pose.y,
            self.candidate.pose.yaw().to_degrees(),
            self.candidate.votes,
            self.s_a,
            self.s_p,
            self.confidence
        )
    }
}

/// Scores the submap under `pose`: `(s_a − λ·s_p) / |q_ng|` where `s_a` sums
/// the field under the non-ground points and `s_p` under the ground points.
pub fn score_candidate(
    field: &ScoreField,
    q_ng: &[Point2],
    q_g: &[Point2],
    pose: &Se2Pose,
    lambda: f64,
) -> Result<VerificationReport> {
    score_candidate_variant(field, q_ng, q_g, pose, lambda, ScoreVariant::Osc)
}

pub fn score_candidate_variant(
    field: &ScoreField,
    q_ng: &[Point2],
    q_g: &[Point2],
    pose: &Se2Pose,
    lambda: f64,
    variant: ScoreVariant,
) -> Result<VerificationReport> {
    let candidate = PoseCandidate { pose: *pose, votes: 0, cluster_size: 0 };
    score_with(field, q_ng, q_g, candidate, lambda, variant)
}

fn score_with(
    field: &ScoreField,
    q_ng: &[Point2],
    q_g: &[Point2],
    candidate: PoseCandidate,
    lambda: f64,
    variant: ScoreVariant,
) -> Result<VerificationReport> {
    if q_ng.is_empty() {
        return Err(Error::EmptySubmap);
    }
    let pose = candidate.pose;
    let (mut s_a, mut free_ng) = (0.0, 0usize);
    for &q in q_ng {
        let v = field.value_at(pose.apply(q));
        s_a += v;
        free_ng += usize::from(v == 0.0);
    }
    let (mut s_p, mut free_g) = (0.0, 0usize);
    for &q in q_g {
        let v = field.value_at(pose.apply(q));
        s_p += v;
        free_g += usize::from(v == 0.0);
    }
    let n = q_ng.len() as f64;
    let confidence = match variant {
        ScoreVariant::Osc => (s_a - lambda * s_p) / n,
        ScoreVariant::AwardOnly => s_a / n,
        ScoreVariant::FreeFreeAward => (s_a + free_g as f64 - lambda * s_p) / (n + q_g.len() as f64),
        ScoreVariant::OccupiedFreePenalty => (s_a - lambda * (s_p + free_ng as f64)) / n,
    };
    Ok(VerificationReport { candidate, s_a, s_p, confidence, n_nonground: q_ng.len() })
}

/// Scores every candidate in parallel, in input order.
pub fn score_all(
    field: &ScoreField,
    candidates: &[PoseCandidate],
    q_ng: &[Point2],
    q_g: &[Point2],
    lambda: f64,
    variant: ScoreVariant,
) -> Result<Vec<VerificationReport>> {
    candidates.par_iter().map(|c| score_with(field, q_ng, q_g, *c, lambda, variant)).collect()
}

/// Highest confidence first; ties by votes, then the smaller `(x, y, yaw)`.
pub fn compare_reports(a: &VerificationReport, b: &VerificationReport) -> std::cmp::Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then(b.candidate.votes.cmp(&a.candidate.votes))
        .then(a.candidate.pose.x.total_cmp(&b.candidate.pose.x))
        .then(a.candidate.pose.y.total_cmp(&b.candidate.pose.y))
        .then(a.candidate.pose.yaw().total_cmp(&b.candidate.pose.yaw()))
}

pub fn select_best(
    field: &ScoreField,
    candidates: &[PoseCandidate],
    q_ng: &[Point2],
    q_g: &[Point2],
    lambda: f64,
) -> Result<(PoseCandidate, VerificationReport)> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let reports = score_all(field, candidates, q_ng, q_g, lambda, ScoreVariant::Osc)?;
    let best = reports.into_iter().min_by(compare_reports).expect("non-empty");
    Ok((best.candidate, best))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrCurve {
    /// `(threshold, precision, recall)` from the highest threshold down.
    pub points: Vec<(f64, f64, f64)>,
    /// Average precision: the step-wise area under the curve.
    pub auc: f64,
}

/// Sweeps the threshold over every observed score, treating scores at or
/// above it as positive predictions.
pub fn reliability_curve(pos: &[f64], neg: &[f64]) -> Result<PrCurve> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidArgument("both score lists must be non-empty".into()));
    }
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let n_pos = pos.len() as f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut points = Vec::new();
    let mut auc = 0.0;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < all.len() {
        let thr = all[i].0;
        while i < all.len() && all[i].0 == thr {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = tp as f64 / n_pos;
        auc += (recall - prev_recall) * precision;
        prev_recall = recall;
        points.push((thr, precision, recall));
    }
    Ok(PrCurve { points, auc })
}
