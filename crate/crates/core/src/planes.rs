//! Octree plane segmentation of submaps and wall/ground classification.

use std::collections::HashMap;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;

use crate::geometry::Point3;
use crate::ingest::Submap;
use crate::lines::DisjointSet;

/// Smallest eigenvalue used in the planarity ratio; exact planes have λ3 = 0.
pub const LAMBDA_FLOOR: f64 = 1e-12;
/// Subdivision depth below the coarsest voxel.
const MAX_DEPTH: u32 = 6;

/// Axis-aligned box, `min` corner plus edge lengths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VoxelBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl VoxelBox {
    fn cube(min: [f64; 3], size: f64) -> Self {
        VoxelBox { min, max: [min[0] + size, min[1] + size, min[2] + size] }
    }

    fn union(&self, o: &VoxelBox) -> VoxelBox {
        VoxelBox { min: [0, 1, 2].map(|k| self.min[k].min(o.min[k])), max: [0, 1, 2].map(|k| self.max[k].max(o.max[k])) }
    }

    /// True when the boxes share a face or an edge.
    pub fn adjacent(&self, o: &VoxelBox) -> bool {
        let eps = 1e-9;
        let mut positive = 0;
        for k in 0..3 {
            let overlap = self.max[k].min(o.max[k]) - self.min[k].max(o.min[k]);
            if overlap < -eps {
                return false;
            }
            if overlap > eps {
                positive += 1;
            }
        }
        positive >= 1
    }
}

/// A set of points accepted as planar.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarPatch {
    pub points: Vec<Point3>,
    /// Unit eigenvector of the smallest covariance eigenvalue.
    pub normal: [f64; 3],
    pub centroid: Point3,
    /// Covariance eigenvalues, descending.
    pub eigvals: [f64; 3],
    /// Voxel (or union of voxels) the points came from.
    pub bounds: VoxelBox,
}

impl PlanarPatch {
    /// `λ2 / max(λ3, LAMBDA_FLOOR)`.
    pub fn planarity(&self) -> f64 {
        self.eigvals[1] / self.eigvals[2].max(LAMBDA_FLOOR)
    }

    /// Unsigned distance from `p` to this patch's plane.
    pub fn plane_distance(&self, p: Point3) -> f64 {
        let n = self.normal;
        ((p.x - self.centroid.x) * n[0] + (p.y - self.centroid.y) * n[1] + (p.z - self.centroid.z) * n[2]).abs()
    }
}

/// Mean, descending eigenvalues and the smallest-eigenvalue eigenvector of
/// the population covariance of `points`.
pub fn covariance_eigen(points: &[Point3]) -> (Point3, [f64; 3], [f64; 3]) {
    let n = points.len() as f64;
    let mut mean = Vector3::zeros();
    for p in points {
        mean += Vector3::new(p.x, p.y, p.z);
    }
    mean /= n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = Vector3::new(p.x, p.y, p.z) - mean;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.map(|k| eig.eigenvalues[k].max(0.0));
    let v = eig.eigenvectors.column(order[2]);
    let norm = v.norm();
    let normal = [v[0] / norm, v[1] / norm, v[2] / norm];
    (Point3::new(mean[0], mean[1], mean[2]), vals, normal)
}

fn make_patch(mut points: Vec<Point3>, bounds: VoxelBox) -> PlanarPatch {
    points.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z)));
    let (centroid, eigvals, normal) = covariance_eigen(&points);
    PlanarPatch { points, normal, centroid, eigvals, bounds }
}

fn segment_voxel(points: Vec<Point3>, bounds: VoxelBox, depth: u32, sigma: f64, out: &mut Vec<PlanarPatch>) {
    if points.len() < 4 {
        return;
    }
    let patch = make_patch(points, bounds);
    if patch.planarity() > sigma {
        out.push(patch);
        return;
    }
    if depth >= MAX_DEPTH {
        return;
    }
    let half = (bounds.max[0] - bounds.min[0]) / 2.0;
    let mid = [0, 1, 2].map(|k| bounds.min[k] + half);
    let mut children: [Vec<Point3>; 8] = Default::default();
    for p in patch.points {
        let idx = usize::from(p.x >= mid[0]) | usize::from(p.y >= mid[1]) << 1 | usize::from(p.z >= mid[2]) << 2;
        children[idx].push(p);
    }
    for (idx, child) in children.into_iter().enumerate() {
        let min = [0, 1, 2].map(|k| if idx >> k & 1 == 1 { mid[k] } else { bounds.min[k] });
        segment_voxel(child, VoxelBox::cube(min, half), depth + 1, sigma, out);
    }
}

/// Splits the submap into planar patches with an octree whose coarsest
/// voxels have edge `s_v`. A voxel is accepted when its covariance satisfies
/// `λ2/λ3 > sigma_lambda`; otherwise it is split into its eight children.
/// Voxels with fewer than four points are dropped.
pub fn segment_planes(submap: &Submap, s_v: f64, sigma_lambda: f64) -> Vec<PlanarPatch> {
    let mut voxels: HashMap<[i64; 3], Vec<Point3>> = HashMap::new();
    for p in &submap.points {
        let key = [(p.x / s_v).floor() as i64, (p.y / s_v).floor() as i64, (p.z / s_v).floor() as i64];
        voxels.entry(key).or_default().push(*p);
    }
    let mut cells: Vec<([i64; 3], Vec<Point3>)> = voxels.into_iter().collect();
    cells.sort_by_key(|(k, _)| *k);
    cells
        .into_par_iter()
        .map(|(key, pts)| {
            let mut out = Vec::new();
            let min = key.map(|k| k as f64 * s_v);
            segment_voxel(pts, VoxelBox::cube(min, s_v), 0, sigma_lambda, &mut out);
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Merges adjacent patches whose normals agree within `normal_tol_deg` and
/// whose centroids lie within `dist_tol_m` of each other's plane. Merged
/// groups are refit; a group that would be less planar than its flattest
/// member keeps its members separate.
pub fn merge_patches(patches: Vec<PlanarPatch>, normal_tol_deg: f64, dist_tol_m: f64) -> Vec<PlanarPatch> {
    if patches.is_empty() {
        return patches;
    }
    let cos_tol = normal_tol_deg.to_radians().cos();
    let cell = patches
        .iter()
        .map(|p| (0..3).map(|k| p.bounds.max[k] - p.bounds.min[k]).fold(0.0, f64::max))
        .fold(0.0, f64::max)
        .max(1e-6);
    let key_of = |p: &PlanarPatch| p.bounds.min.map(|v| (v / cell).floor() as i64);
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in patches.iter().enumerate() {
        grid.entry(key_of(p)).or_default().push(i);
    }

    let mut uf = DisjointSet::new(patches.len());
    for (i, a) in patches.iter().enumerate() {
        let k = key_of(a);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) else {
                        continue;
                    };
                    for &j in bucket {
                        if j <= i {
                            continue;
                        }
                        let b = &patches[j];
                        let dot: f64 = (0..3).map(|c| a.normal[c] * b.normal[c]).sum();
                        if dot.abs() < cos_tol || !a.bounds.adjacent(&b.bounds) {
                            continue;
                        }
                        if a.plane_distance(b.centroid) <= dist_tol_m && b.plane_distance(a.centroid) <= dist_tol_m {
                            uf.union(i, j);
                        }
                    }
                }
            }
        }
    }

    let mut slots: Vec<Option<PlanarPatch>> = patches.into_iter().map(Some).collect();
    let mut out = Vec::new();
    for group in uf.groups() {
        if group.len() == 1 {
            out.push(slots[group[0]].take().expect("unique member"));
            continue;
        }
        let members: Vec<PlanarPatch> = group.iter().map(|&g| slots[g].take().expect("unique member")).collect();
        let floor = members.iter().map(PlanarPatch::planarity).fold(f64::INFINITY, f64::min);
        let bounds = members.iter().skip(1).fold(members[0].bounds, |b, m| b.union(&m.bounds));
        let pooled: Vec<Point3> = members.iter().flat_map(|m| m.points.iter().copied()).collect();
        let merged = make_patch(pooled, bounds);
        if merged.planarity() >= floor {
            out.push(merged);
        } else {
            out.extend(members);
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SegmentationResult {
    pub walls: Vec<PlanarPatch>,
    pub ground: Vec<PlanarPatch>,
    /// Points of patches that are neither wall nor ground.
    pub unassigned: usize,
}

/// Ground when the normal is within `angle_tol_deg` of gravity, wall when it
/// is within `angle_tol_deg` of horizontal.
pub fn classify_patches(patches: Vec<PlanarPatch>, gravity: [f64; 3], angle_tol_deg: f64) -> SegmentationResult {
    let mut res = SegmentationResult::default();
    for p in patches {
        let dot: f64 = (0..3).map(|k| p.normal[k] * gravity[k]).sum();
        let angle = dot.abs().min(1.0).acos().to_degrees();
        if angle <= angle_tol_deg {
            res.ground.push(p);
        } else if angle >= 90.0 - angle_tol_deg {
            res.walls.push(p);
        } else {
            res.unassigned += p.points.len();
        }
    }
    res
}
