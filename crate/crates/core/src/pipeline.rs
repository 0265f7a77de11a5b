//! End-to-end registration of a submap against one or more floor databases.

use std::borrow::Borrow;
use std::time::Instant;

use nalgebra::{Rotation3, Vector3};

use crate::config::{PipelineConfig, VotingMode};
use crate::descriptor::{build_db, query_correspondences, CornerFeature, DbParams, DbSource, DescriptorDB};
use crate::error::{Error, Result};
use crate::geometry::{LineSegment2, Point2, Point3};
use crate::ingest::{Submap, WallModel};
use crate::lines::{detect_segments, extract_corners, merge_refit, model_corners, rasterize_patches, Corner};
use crate::planes::{classify_patches, merge_patches, segment_planes};
use crate::verify::{build_score_field, compare_reports, score_all, ScoreField, VerificationReport};
use crate::voting::{cast_votes, hierarchical_vote, vanilla_vote, VoteGrid};

impl PipelineConfig {
    pub fn db_params(&self) -> DbParams {
        DbParams { l_max: self.l_max, r_s: self.r_s, r_a_deg: self.r_a_deg, min_angle_deg: self.min_angle_deg }
    }
}

/// Rotates points so that `gravity` points along −z.
pub fn level_points(points: &[Point3], gravity: [f64; 3]) -> Vec<Point3> {
    let g = Vector3::new(gravity[0], gravity[1], gravity[2]);
    let down = Vector3::new(0.0, 0.0, -1.0);
    let rot = Rotation3::rotation_between(&g, &down)
        .unwrap_or_else(|| Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI));
    if rot.angle() == 0.0 {
        return points.to_vec();
    }
    points
        .iter()
        .map(|p| {
            let v = rot * Vector3::new(p.x, p.y, p.z);
            Point3::new(v[0], v[1], v[2])
        })
        .collect()
}

/// Everything the submap side contributes to a registration.
#[derive(Clone, Debug)]
pub struct SubmapFeatures {
    pub segments: Vec<LineSegment2>,
    pub corners: Vec<Corner>,
    /// Wall points projected to the ground plane.
    pub q_ng: Vec<Point2>,
    /// Ground points projected to the ground plane.
    pub q_g: Vec<Point2>,
    pub db: DescriptorDB,
    pub plane_ms: f64,
    pub line_ms: f64,
    pub descriptor_ms: f64,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn extract_features(submap: &Submap, cfg: &PipelineConfig) -> Result<SubmapFeatures> {
    let t0 = Instant::now();
    let leveled = Submap {
        points: level_points(&submap.points, submap.gravity),
        gravity: [0.0, 0.0, -1.0],
        source_span_m: submap.source_span_m,
    };
    let patches = segment_planes(&leveled, cfg.s_v, cfg.sigma_lambda);
    let patches = merge_patches(patches, cfg.merge_normal_deg, cfg.merge_dist_m);
    let seg = classify_patches(patches, leveled.gravity, cfg.gravity_tol_deg);
    let q_ng: Vec<Point2> = seg.walls.iter().flat_map(|p| p.points.iter().map(|q| q.xy())).collect();
    let q_g: Vec<Point2> = seg.ground.iter().flat_map(|p| p.points.iter().map(|q| q.xy())).collect();
    let plane_ms = ms_since(t0);

    let t1 = Instant::now();
    let raster = rasterize_patches(&seg.walls, cfg.s_i);
    let raw = detect_segments(&raster, cfg.l_min_px);
    let segments = merge_refit(&raw, cfg.merge_endpoint_m, cfg.merge_angle_deg, &raster);
    let corners = extract_corners(&segments, cfg.extend_m, cfg.nms_radius_m);
    let line_ms = ms_since(t1);

    let t2 = Instant::now();
    let feats: Vec<CornerFeature> = corners.iter().map(CornerFeature::from).collect();
    let db = build_db(&feats, &cfg.db_params(), DbSource::Submap, "submap");
    let descriptor_ms = ms_since(t2);
    Ok(SubmapFeatures { segments, corners, q_ng, q_g, db, plane_ms, line_ms, descriptor_ms })
}

/// Corners and descriptor database of one floor; the walls travel with the
/// database so that it alone suffices for registration.
pub fn build_model_db(model: &WallModel, cfg: &PipelineConfig) -> Result<(DescriptorDB, Vec<Corner>)> {
    if model.walls.is_empty() {
        return Err(Error::EmptyModel);
    }
    let corners = model_corners(model, cfg.extend_m, cfg.nms_radius_m);
    let feats: Vec<CornerFeature> = corners.iter().map(CornerFeature::from).collect();
    let mut db = build_db(&feats, &cfg.db_params(), DbSource::Model, &model.floor_id);
    db.walls = model.walls.clone();
    Ok((db, corners))
}

/// A floor database with its score field.
#[derive(Clone, Debug)]
pub struct FloorIndex {
    pub db: DescriptorDB,
    pub field: ScoreField,
}

impl FloorIndex {
    pub fn new(db: DescriptorDB, cfg: &PipelineConfig) -> Result<Self> {
        let field = build_score_field(&db.walls, cfg.s_r, cfg.k_d)?;
        Ok(FloorIndex { db, field })
    }

    pub fn from_model(model: &WallModel, cfg: &PipelineConfig) -> Result<Self> {
        FloorIndex::new(build_model_db(model, cfg)?.0, cfg)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub plane_ms: f64,
    pub line_ms: f64,
    pub descriptor_ms: f64,
    pub vote_ms: f64,
    pub verify_ms: f64,
    pub total_ms: f64,
}

/// Result of registering against one floor.
#[derive(Clone, Debug)]
pub struct FloorResult {
    pub floor_id: String,
    pub n_correspondences: usize,
    pub n_votes: usize,
    /// Every scored candidate, best first.
    pub reports: Vec<VerificationReport>,
}

#[derive(Clone, Debug)]
pub struct Registration {
    pub floor_id: String,
    pub best: VerificationReport,
    pub floors: Vec<FloorResult>,
    pub n_submap_corners: usize,
    pub timings: StageTimings,
}

fn register_floor(features: &SubmapFeatures, floor: &FloorIndex, cfg: &PipelineConfig) -> Result<(FloorResult, f64, f64)> {
    let t = Instant::now();
    let mut grid = VoteGrid::new(cfg.r_xy, cfg.r_yaw_deg.to_radians());
    let mut n_corr = 0usize;
    let stream = query_correspondences(&features.db, &floor.db)?.inspect(|_| n_corr += 1);
    let n_votes = cast_votes(stream, &mut grid, cfg.residual_max_m);
    let candidates = match cfg.voting {
        VotingMode::Hierarchical => hierarchical_vote(&grid, cfg.top_l, cfg.top_k, cfg.top_j)?,
        VotingMode::Vanilla => vec![vanilla_vote(&grid)?],
    };
    let vote_ms = ms_since(t);
    let t = Instant::now();
    let mut reports = score_all(&floor.field, &candidates, &features.q_ng, &features.q_g, cfg.lambda, cfg.score_variant)?;
    reports.sort_by(compare_reports);
    let verify_ms = ms_since(t);
    Ok((FloorResult { floor_id: floor.db.floor_id.clone(), n_correspondences: n_corr, n_votes, reports }, vote_ms, verify_ms))
}

/// Registers extracted submap features against every floor and keeps the
/// floor whose best candidate is most confident. Floors that yield no
/// candidates are skipped; if none yields any, the last error is returned.
pub fn register_features<F: Borrow<FloorIndex>>(
    features: &SubmapFeatures,
    floors: &[F],
    cfg: &PipelineConfig,
) -> Result<Registration> {
    if features.q_ng.is_empty() {
        return Err(Error::EmptySubmap);
    }
    let mut timings = StageTimings {
        plane_ms: features.plane_ms,
        line_ms: features.line_ms,
        descriptor_ms: features.descriptor_ms,
        ..StageTimings::default()
    };
    let mut results = Vec::new();
    let mut last_err = Error::NoCandidates;
    for floor in floors {
        match register_floor(features, floor.borrow(), cfg) {
            Ok((r, v, s)) => {
                timings.vote_ms += v;
                timings.verify_ms += s;
                results.push(r);
            }
            Err(e @ (Error::EmptyGrid | Error::NoCandidates)) => last_err = e,
            Err(e) => return Err(e),
        }
    }
    let best_floor = results
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| compare_reports(&a.reports[0], &b.reports[0]))
        .map(|(i, _)| i)
        .ok_or(last_err)?;
    timings.total_ms = timings.plane_ms + timings.line_ms + timings.descriptor_ms + timings.vote_ms + timings.verify_ms;
    Ok(Registration {
        floor_id: results[best_floor].floor_id.clone(),
        best: results[best_floor].reports[0],
        floors: results,
        n_submap_corners: features.corners.len(),
        timings,
    })
}

pub fn register<F: Borrow<FloorIndex>>(submap: &Submap, floors: &[F], cfg: &PipelineConfig) -> Result<Registration> {
    let features = extract_features(submap, cfg)?;
    register_features(&features, floors, cfg)
}
