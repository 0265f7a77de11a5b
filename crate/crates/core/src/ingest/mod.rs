//! Loading and assembling the two inputs of a registration: LiDAR submaps
//! and per-floor wall models. Also hosts the synthetic scene generator.

mod cloud_io;
mod synth;
mod wall_io;

use std::collections::HashMap;

pub use cloud_io::{decode_submap, encode_submap, load_submap, save_submap, CLOUD_MAGIC};
pub use synth::{generate_floorplan, synthesize_submap, ClutterPlane, DeviationLog, SceneParams, SyntheticScene};
pub use wall_io::{format_building, load_building, load_wall_model, parse_building, save_building, save_wall_model};

use crate::error::{Error, Result};
use crate::geometry::{LineSegment2, Point3};
use crate::lines::Corner;

/// Rigid 3D pose of a scan: `world = rotation · sensor + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanPose {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl ScanPose {
    pub fn from_translation(t: [f64; 3]) -> Self {
        ScanPose { rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], translation: t }
    }

    pub fn from_yaw_translation(yaw: f64, t: [f64; 3]) -> Self {
        let (s, c) = yaw.sin_cos();
        ScanPose { rotation: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]], translation: t }
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        let r = &self.rotation;
        let t = &self.translation;
        Point3::new(
            r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z + t[0],
            r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z + t[1],
            r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z + t[2],
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scan {
    pub timestamp: f64,
    pub points: Vec<Point3>,
}

/// Consecutive scans with their odometry poses and the gravity direction.
#[derive(Clone, Debug)]
pub struct ScanSequence {
    scans: Vec<Scan>,
    poses: Vec<ScanPose>,
    gravity: [f64; 3],
}

impl ScanSequence {
    pub fn new(scans: Vec<Scan>, poses: Vec<ScanPose>, gravity: [f64; 3]) -> Result<Self> {
        if scans.len() != poses.len() {
            return Err(Error::InvalidArgument(format!("{} scans but {} poses", scans.len(), poses.len())));
        }
        if scans.windows(2).any(|w| w[1].timestamp <= w[0].timestamp) {
            return Err(Error::InvalidArgument("scan timestamps must strictly increase".into()));
        }
        let gravity = normalize3(gravity)?;
        Ok(ScanSequence { scans, poses, gravity })
    }

    pub fn scans(&self) -> &[Scan] {
        &self.scans
    }

    pub fn poses(&self) -> &[ScanPose] {
        &self.poses
    }

    pub fn gravity(&self) -> [f64; 3] {
        self.gravity
    }

    pub fn is_empty(&self) -> bool {
        self.scans.is_empty()
    }
}

pub(crate) fn normalize3(v: [f64; 3]) -> Result<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !n.is_finite() || n < 1e-12 {
        return Err(Error::InvalidArgument("gravity vector must be non-zero and finite".into()));
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

/// A voxel-downsampled point cloud in a local world frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Submap {
    pub points: Vec<Point3>,
    /// Unit gravity direction.
    pub gravity: [f64; 3],
    /// Odometry path length covered by the accumulated scans, when known.
    pub source_span_m: Option<f64>,
}

impl Submap {
    pub fn new(points: Vec<Point3>, gravity: [f64; 3]) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite point {p:?}")));
        }
        Ok(Submap { points, gravity: normalize3(gravity)?, source_span_m: None })
    }
}

/// One floor's wall layout in the building frame.
#[derive(Clone, Debug, PartialEq)]
pub struct WallModel {
    pub floor_id: String,
    pub walls: Vec<LineSegment2>,
    /// Filled by [`crate::lines::model_corners`]; empty after loading.
    pub corners: Vec<Corner>,
}

impl WallModel {
    pub fn new(floor_id: impl Into<String>, walls: Vec<LineSegment2>) -> Self {
        WallModel { floor_id: floor_id.into(), walls, corners: Vec::new() }
    }
}

/// Keeps the centroid of every occupied voxel of edge `r_v`, ordered by voxel index.
pub fn voxel_downsample(points: &[Point3], r_v: f64) -> Vec<Point3> {
    let mut cells: HashMap<[i64; 3], ([f64; 3], usize)> = HashMap::new();
    for p in points {
        let key = [(p.x / r_v).floor() as i64, (p.y / r_v).floor() as i64, (p.z / r_v).floor() as i64];
        let e = cells.entry(key).or_insert(([0.0; 3], 0));
        e.0[0] += p.x;
        e.0[1] += p.y;
        e.0[2] += p.z;
        e.1 += 1;
    }
    let mut out: Vec<([i64; 3], Point3)> = cells
        .into_iter()
        .map(|(k, (s, n))| {
            let n = n as f64;
            (k, Point3::new(s[0] / n, s[1] / n, s[2] / n))
        })
        .collect();
    out.sort_by_key(|(k, _)| *k);
    out.into_iter().map(|(_, p)| p).collect()
}

/// Transforms the shortest scan prefix whose odometry path reaches `d_s`
/// into the world frame and voxel-downsamples the union at `r_v`.
pub fn accumulate_submap(seq: &ScanSequence, r_v: f64, d_s: f64) -> Result<Submap> {
    if r_v.is_nan() || r_v <= 0.0 || d_s.is_nan() || d_s <= 0.0 {
        return Err(Error::InvalidArgument("r_v and d_s must be positive".into()));
    }
    if seq.is_empty() {
        return Err(Error::InvalidArgument("scan sequence is empty".into()));
    }
    let mut traveled = 0.0;
    let mut prefix = None;
    for k in 1..seq.poses.len() {
        let a = seq.poses[k - 1].translation;
        let b = seq.poses[k].translation;
        traveled += ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2)).sqrt();
        if traveled >= d_s {
            prefix = Some(k + 1);
            break;
        }
    }
    let n = prefix.ok_or(Error::InsufficientTravel { traveled, required: d_s })?;

    let world: Vec<Point3> = seq.scans[..n]
        .iter()
        .zip(&seq.poses[..n])
        .flat_map(|(scan, pose)| scan.points.iter().map(move |p| pose.apply(*p)))
        .collect();
    Ok(Submap { points: voxel_downsample(&world, r_v), gravity: seq.gravity, source_span_m: Some(traveled) })
}
