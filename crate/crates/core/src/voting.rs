//! SE(2) pose Hough voting over triplet correspondences.

use std::collections::{HashMap, HashSet, VecDeque};
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::descriptor::TripletCorrespondence;
use crate::error::{Error, Result};
use crate::geometry::{solve_se2, Se2Pose};

pub type CellIndex = [i64; 3];

/// Votes and running pose sums of one grid cell.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VoteCell {
    pub count: u32,
    pub sum_x: f64,
    pub sum_y: f64,
    pub sum_cos: f64,
    pub sum_sin: f64,
}

impl VoteCell {
    fn add_pose(&mut self, p: &Se2Pose) {
        self.count += 1;
        self.sum_x += p.x;
        self.sum_y += p.y;
        self.sum_cos += p.yaw().cos();
        self.sum_sin += p.yaw().sin();
    }

    fn absorb(&mut self, o: &VoteCell) {
        self.count += o.count;
        self.sum_x += o.sum_x;
        self.sum_y += o.sum_y;
        self.sum_cos += o.sum_cos;
        self.sum_sin += o.sum_sin;
    }

    /// Mean translation and circular-mean yaw of the poses in the cell.
    pub fn mean_pose(&self) -> Se2Pose {
        let n = self.count.max(1) as f64;
        Se2Pose::new(self.sum_x / n, self.sum_y / n, self.sum_sin.atan2(self.sum_cos))
    }
}

/// Sparse `(x, y, yaw)` accumulator; the yaw axis wraps.
#[derive(Clone, Debug, PartialEq)]
pub struct VoteGrid {
    pub r_xy: f64,
    pub r_yaw: f64,
    n_yaw: i64,
    cells: HashMap<CellIndex, VoteCell>,
}

impl VoteGrid {
    /// `r_yaw` in radians.
    pub fn new(r_xy: f64, r_yaw: f64) -> Self {
        assert!(r_xy > 0.0 && r_yaw > 0.0, "vote grid resolutions must be positive");
        VoteGrid { r_xy, r_yaw, n_yaw: ((2.0 * PI / r_yaw) - 1e-9).ceil().max(1.0) as i64, cells: HashMap::new() }
    }

    /// Number of yaw bins.
    pub fn n_yaw(&self) -> i64 {
        self.n_yaw
    }

    pub fn cell_of(&self, p: &Se2Pose) -> CellIndex {
        [
            (p.x / self.r_xy).floor() as i64,
            (p.y / self.r_xy).floor() as i64,
            (((p.yaw() + PI) / self.r_yaw).floor() as i64).rem_euclid(self.n_yaw),
        ]
    }

    /// Center of a cell as a pose.
    pub fn cell_center(&self, c: CellIndex) -> Se2Pose {
        Se2Pose::new((c[0] as f64 + 0.5) * self.r_xy, (c[1] as f64 + 0.5) * self.r_xy, (c[2] as f64 + 0.5) * self.r_yaw - PI)
    }

    pub fn add(&mut self, p: &Se2Pose) {
        self.cells.entry(self.cell_of(p)).or_default().add_pose(p);
    }

    /// Cell-wise sum of two grids with equal resolution.
    pub fn merge(&mut self, other: &VoteGrid) {
        assert!(self.r_xy == other.r_xy && self.r_yaw == other.r_yaw, "grid resolutions differ");
        let mut keys: Vec<&CellIndex> = other.cells.keys().collect();
        keys.sort_unstable();
        for k in keys {
            self.cells.entry(*k).or_default().absorb(&other.cells[k]);
        }
    }

    pub fn get(&self, c: &CellIndex) -> Option<&VoteCell> {
        self.cells.get(c)
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_votes(&self) -> u64 {
        self.cells.values().map(|c| c.count as u64).sum()
    }

    /// Cells in ascending index order.
    pub fn sorted_cells(&self) -> Vec<(CellIndex, VoteCell)> {
        let mut v: Vec<(CellIndex, VoteCell)> = self.cells.iter().map(|(k, c)| (*k, *c)).collect();
        v.sort_unstable_by_key(|(k, _)| *k);
        v
    }

    /// The distinct members of the 3×3×3 block around `c`, `c` included.
    pub fn neighborhood(&self, c: CellIndex) -> Vec<CellIndex> {
        let mut out = Vec::with_capacity(27);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dt in -1..=1 {
                    let n = [c[0] + dx, c[1] + dy, (c[2] + dt).rem_euclid(self.n_yaw)];
                    if !out.contains(&n) {
                        out.push(n);
                    }
                }
            }
        }
        out
    }

    /// Sum of counts over the 3×3×3 block around `c`.
    pub fn merged_count(&self, c: CellIndex) -> u64 {
        self.neighborhood(c).iter().filter_map(|n| self.cells.get(n)).map(|v| v.count as u64).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoseCandidate {
    pub pose: Se2Pose,
    pub votes: u32,
    pub cluster_size: usize,
}

const SOLVE_CHUNK: usize = 1 << 16;

/// Solves each correspondence and votes for the poses whose RMS residual is
/// at most `residual_max_m`. Returns the number of accepted votes.
///
/// Poses are solved in parallel and accumulated in input order, so the grid
/// does not depend on the thread count.
pub fn cast_votes<'a>(
    correspondences: impl IntoIterator<Item = TripletCorrespondence<'a>>,
    grid: &mut VoteGrid,
    residual_max_m: f64,
) -> usize {
    let mut accepted = 0;
    let mut iter = correspondences.into_iter().peekable();
    while iter.peek().is_some() {
        let chunk: Vec<TripletCorrespondence<'a>> = iter.by_ref().take(SOLVE_CHUNK).collect();
        let poses: Vec<Option<Se2Pose>> = chunk
            .par_iter()
            .map(|c| {
                let src = c.src.map(|v| v.position);
                let dst = c.dst.map(|v| v.position);
                match solve_se2(&src, &dst) {
                    Ok((pose, rms)) if rms <= residual_max_m => Some(pose),
                    _ => None,
                }
            })
            .collect();
        for p in poses.into_iter().flatten() {
            grid.add(&p);
            accepted += 1;
        }
    }
    accepted
}

fn rank_desc<K: Ord + Copy>(items: &mut [(K, u64)], keep: usize) {
    let cmp = |a: &(K, u64), b: &(K, u64)| b.1.cmp(&a.1).then(a.0.cmp(&b.0));
    if keep < items.len() {
        items.select_nth_unstable_by(keep, cmp);
    }
    let n = keep.min(items.len());
    items[..n].sort_unstable_by(cmp);
}

/// Three-stage candidate extraction: keep the `l` cells with the most votes,
/// keep the `k` of those with the largest 3×3×3 neighborhood sums, grow
/// 26-connected clusters among them and return the best `j` clusters.
///
/// Clusters are ranked by their largest neighborhood sum; each yields the
/// vote-weighted mean pose of its cells. Ties break on cell index.
pub fn hierarchical_vote(grid: &VoteGrid, l: usize, k: usize, j: usize) -> Result<Vec<PoseCandidate>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if !(l >= k && k >= j && j >= 1) {
        return Err(Error::InvalidArgument(format!("need L ≥ K ≥ J ≥ 1, got {l}/{k}/{j}")));
    }
    let mut by_count: Vec<(CellIndex, u64)> = grid.cells.iter().map(|(c, v)| (*c, v.count as u64)).collect();
    rank_desc(&mut by_count, l);
    by_count.truncate(l);

    let mut by_merged: Vec<(CellIndex, u64)> = by_count.iter().map(|(c, _)| (*c, grid.merged_count(*c))).collect();
    rank_desc(&mut by_merged, k);
    by_merged.truncate(k);

    let kept: HashMap<CellIndex, u64> = by_merged.iter().copied().collect();
    let mut seen: HashSet<CellIndex> = HashSet::with_capacity(kept.len());
    // (best merged score, index of the best cell, accumulated cell, size)
    let mut clusters: Vec<(u64, CellIndex, VoteCell, usize)> = Vec::new();
    for &(seed, score) in &by_merged {
        if !seen.insert(seed) {
            continue;
        }
        let mut acc = VoteCell::default();
        let mut size = 0;
        let mut queue = VecDeque::from([seed]);
        while let Some(c) = queue.pop_front() {
            acc.absorb(&grid.cells[&c]);
            size += 1;
            for n in grid.neighborhood(c) {
                if kept.contains_key(&n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        // seeds arrive in rank order, so the seed is the cluster's best cell
        clusters.push((score, seed, acc, size));
    }
    clusters.truncate(j);
    Ok(clusters
        .into_iter()
        .map(|(_, _, acc, size)| PoseCandidate { pose: acc.mean_pose(), votes: acc.count, cluster_size: size })
        .collect())
}

/// The single cell with the most votes; ties go to the smallest index.
pub fn vanilla_vote(grid: &VoteGrid) -> Result<PoseCandidate> {
    let (_, cell) = grid.cells.iter().max_by(|a, b| a.1.count.cmp(&b.1.count).then(b.0.cmp(a.0))).ok_or(Error::EmptyGrid)?;
    Ok(PoseCandidate { pose: cell.mean_pose(), votes: cell.count, cluster_size: 1 })
}

/// `x,y,yaw_deg,votes` rows with a header line.
pub fn candidates_csv(candidates: &[PoseCandidate]) -> String {
    let mut out = String::from("x,y,yaw_deg,votes\n");
    for c in candidates {
        out.push_str(&format!("{:.4},{:.4},{:.4},{}\n", c.pose.x, c.pose.y, c.pose.yaw().to_degrees(), c.votes));
    }
    out
}
