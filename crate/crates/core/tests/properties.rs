mod common;

use std::collections::HashSet;
use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use l2b_core::descriptor::{
    build_db, describe, make_descriptor, query_correspondences, CornerFeature, DbParams, DbSource, TriangleDescriptor,
};
use l2b_core::geometry::{registration_success, solve_se2, Point2, Point3, Se2Pose};
use l2b_core::ingest::{generate_floorplan, synthesize_submap, voxel_downsample, SceneParams, Submap, WallModel};
use l2b_core::lines::extract_corners;
use l2b_core::planes::{merge_patches, segment_planes, PlanarPatch};
use l2b_core::verify::{build_score_field, score_candidate};
use l2b_core::voting::{cast_votes, hierarchical_vote, VoteGrid};

/// Inliers jittered around a random pose near the origin plus outliers
/// confined to a 4 m window, so that dense oracles stay cheap.
fn windowed_set(seed: u64, n_in: usize, n_out: usize) -> CorrespondenceSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = random_pose(&mut rng, 2.0);
    let mut set = CorrespondenceSet::new(&mut rng, &truth, n_in, 0, 0.3, 0.05);
    for _ in 0..n_out {
        let s = random_triplet(&mut rng, 20.0);
        let p = Se2Pose::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-PI..PI));
        set.pairs.push((s, transform_triplet(&s, &p)));
    }
    set
}

fn pose_strategy(extent: f64) -> impl Strategy<Value = Se2Pose> {
    (-extent..extent, -extent..extent, -PI..PI).prop_map(|(x, y, t)| Se2Pose::new(x, y, t))
}

fn point_strategy(extent: f64) -> impl Strategy<Value = Point2> {
    (-extent..extent, -extent..extent).prop_map(|(x, y)| Point2::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn composition_matches_sequential_application(a in pose_strategy(20.0), b in pose_strategy(20.0), p in point_strategy(20.0)) {
        let lhs = a.compose(&b).apply(p);
        let rhs = a.apply(b.apply(p));
        prop_assert!(lhs.distance(rhs) < 1e-12, "{lhs:?} vs {rhs:?}");
    }

    #[test]
    fn solver_is_exact_on_noiseless_copies(t in pose_strategy(50.0), pts in prop::collection::vec(point_strategy(30.0), 2..12)) {
        prop_assume!(pts.iter().any(|p| p.distance(pts[0]) > 1e-3));
        let dst: Vec<Point2> = pts.iter().map(|p| t.apply(*p)).collect();
        let (est, rms) = solve_se2(&pts, &dst).unwrap();
        prop_assert!(rms < 1e-9);
        let r = est.rotation();
        prop_assert!((r[0][0] * r[1][1] - r[0][1] * r[1][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn success_is_invariant_to_left_composition(est in pose_strategy(30.0), gt in pose_strategy(30.0), t in pose_strategy(30.0)) {
        let a = registration_success(&est, &gt, 5.0, 3.0);
        let b = registration_success(&t.compose(&est), &t.compose(&gt), 5.0, 3.0);
        let (r, d) = l2b_core::geometry::pose_errors(&est, &gt);
        // only decide where the errors are not within rounding of a threshold
        prop_assume!((r - 5.0).abs() > 1e-9 && (d - 3.0).abs() > 1e-9);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn voxel_centroids_stay_near_their_inputs(
        pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64), 1..300),
        r_v in 0.1..2.0f64,
    ) {
        let pts: Vec<Point3> = pts.into_iter().map(|(x, y, z)| Point3::new(x, y, z)).collect();
        let out = voxel_downsample(&pts, r_v);
        prop_assert!(out.len() <= pts.len());
        let bound = r_v * 3f64.sqrt() / 2.0 + 1e-12;
        for q in &out {
            let nearest = pts.iter().map(|p| p.distance(*q)).fold(f64::MAX, f64::min);
            prop_assert!(nearest <= bound, "{nearest} > {bound}");
        }
    }

    #[test]
    fn triplet_descriptors_are_rigidly_invariant(seed in any::<u64>(), t in pose_strategy(100.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tri = random_triplet(&mut rng, 25.0);
        let (a, _) = make_descriptor(&tri).unwrap();
        let (b, _) = make_descriptor(&transform_triplet(&tri, &t)).unwrap();
        for k in 0..3 {
            prop_assert!((a.sides[k] - b.sides[k]).abs() < 1e-9);
            prop_assert!((a.angles[k] - b.angles[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn keys_absorb_quarter_bin_perturbations(
        bins in prop::array::uniform6(1i32..60),
        frac in prop::array::uniform6(-0.2499..0.2499f64),
    ) {
        let (r_s, r_a) = (0.5, 3.0);
        let center = |b: i32, r: f64| (b as f64 + 0.5) * r;
        let exact = TriangleDescriptor {
            sides: [0, 1, 2].map(|k| center(bins[k], r_s)),
            angles: [3, 4, 5].map(|k| center(bins[k] % 30, r_a)),
        };
        let moved = TriangleDescriptor {
            sides: [0, 1, 2].map(|k| exact.sides[k] + frac[k] * r_s),
            angles: [0, 1, 2].map(|k| exact.angles[k] + frac[k + 3] * r_a),
        };
        prop_assert_eq!(exact.key(r_s, r_a), moved.key(r_s, r_a));
    }

    #[test]
    fn correspondences_agree_within_one_bin(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let corners: Vec<CornerFeature> = (0..9)
            .map(|_| CornerFeature {
                position: Point2::new(rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0)),
                wall_dirs: [unit(&mut rng), unit(&mut rng)],
            })
            .collect();
        let moved: Vec<CornerFeature> = corners
            .iter()
            .map(|c| CornerFeature { position: c.position + Point2::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)), ..*c })
            .collect();
        let params = DbParams::default();
        let src = build_db(&corners, &params, DbSource::Submap, "s");
        let dst = build_db(&moved, &params, DbSource::Model, "m");
        for c in query_correspondences(&src, &dst).unwrap() {
            let (a, b) = (describe(c.src), describe(c.dst));
            for k in 0..3 {
                prop_assert!((a.sides[k] - b.sides[k]).abs() <= params.r_s);
                prop_assert!((a.angles[k] - b.angles[k]).abs() <= params.r_a_deg);
            }
        }
    }

    #[test]
    fn every_accepted_correspondence_is_one_vote(seed in any::<u64>(), n_in in 0usize..30, n_out in 0usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = random_pose(&mut rng, 20.0);
        let set = CorrespondenceSet::new(&mut rng, &truth, n_in, n_out, 0.03, 0.004);
        let mut grid = VoteGrid::new(0.15, 1f64.to_radians());
        let accepted = cast_votes(set.iter(), &mut grid, 0.3);
        prop_assert_eq!(grid.total_votes(), accepted as u64);
        prop_assert_eq!(accepted, n_in + n_out);
    }

    #[test]
    fn candidates_stay_inside_their_cluster_footprint(seed in any::<u64>()) {
        let set = windowed_set(seed, 40, 200);
        let mut grid = VoteGrid::new(0.15, 1f64.to_radians());
        cast_votes(set.iter(), &mut grid, 0.3);
        let n = grid.n_cells();
        let cands = hierarchical_vote(&grid, n, n, n).unwrap();
        let oracle = oracle_clusters(&grid);
        let half = 0.5 * grid.r_xy;
        for (c, o) in cands.iter().zip(&oracle) {
            let xs = o.cells.iter().map(|k| k[0]);
            let ys = o.cells.iter().map(|k| k[1]);
            let (x0, x1) = (xs.clone().min().unwrap() as f64 * grid.r_xy, (xs.max().unwrap() + 1) as f64 * grid.r_xy);
            let (y0, y1) = (ys.clone().min().unwrap() as f64 * grid.r_xy, (ys.max().unwrap() + 1) as f64 * grid.r_xy);
            prop_assert!(c.pose.x >= x0 - 1e-9 && c.pose.x <= x1 + 1e-9);
            prop_assert!(c.pose.y >= y0 - 1e-9 && c.pose.y <= y1 + 1e-9);
            if o.cells.len() == 1 {
                let center = grid.cell_center(*o.cells.iter().next().unwrap());
                prop_assert!(c.pose.translation().distance(center.translation()) <= half * 2f64.sqrt() + 1e-9);
                prop_assert!(yaw_gap(c.pose.yaw(), center.yaw()) <= 0.5 * grid.r_yaw + 1e-9);
            }
        }
    }

    #[test]
    fn strongest_candidate_follows_the_model_frame(seed in any::<u64>(), t in pose_strategy(30.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = random_pose(&mut rng, 20.0);
        let set = CorrespondenceSet::new(&mut rng, &truth, 20, 200, 0.03, 0.004);
        let moved = CorrespondenceSet {
            pairs: set.pairs.iter().map(|(s, d)| (*s, transform_triplet(d, &t))).collect(),
        };
        let top = |s: &CorrespondenceSet| {
            let mut grid = VoteGrid::new(0.15, 1f64.to_radians());
            cast_votes(s.iter(), &mut grid, 0.3);
            hierarchical_vote(&grid, 10_000, 5_000, 1_500).unwrap()[0]
        };
        let expect = t.compose(&top(&set).pose);
        let got = top(&moved).pose;
        prop_assert!(got.translation().distance(expect.translation()) <= 0.15 * 2f64.sqrt());
        prop_assert!(yaw_gap(got.yaw(), expect.yaw()) <= 1f64.to_radians());
    }

    #[test]
    fn small_grids_match_the_exhaustive_oracle(seed in any::<u64>(), n_in in 1usize..25, n_out in 0usize..60) {
        let set = windowed_set(seed, n_in, n_out);
        let mut grid = VoteGrid::new(0.15, 1f64.to_radians());
        cast_votes(set.iter(), &mut grid, 0.3);
        let n = grid.n_cells();
        let cands = hierarchical_vote(&grid, n, n, n).unwrap();
        let oracle = oracle_clusters(&grid);
        prop_assert_eq!(cands.len(), oracle.len());
        for (c, o) in cands.iter().zip(&oracle) {
            prop_assert_eq!(c.votes, o.votes);
            prop_assert_eq!(c.cluster_size, o.cells.len());
            prop_assert!(c.pose.translation().distance(o.pose.translation()) < 1e-9);
            prop_assert!(yaw_gap(c.pose.yaw(), o.pose.yaw()) < 1e-9);
        }
    }
}

fn random_walls(rng: &mut ChaCha8Rng, n: usize) -> Vec<l2b_core::LineSegment2> {
    (0..n)
        .map(|_| {
            let p = Point2::new(rng.gen_range(-15.0..15.0), rng.gen_range(-15.0..15.0));
            let d = unit(rng) * rng.gen_range(2.0..12.0);
            l2b_core::LineSegment2::new(p, p + d).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn corners_move_with_the_walls(seed in any::<u64>(), t in pose_strategy(50.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let walls = random_walls(&mut rng, 8);
        let tol = 2.0 / 60.0;
        let before = extract_corners(&walls, 1.0, 0.5);
        let moved: Vec<_> = walls.iter().map(|w| w.transformed(&t)).collect();
        let after = extract_corners(&moved, 1.0, 0.5);
        prop_assert_eq!(before.len(), after.len());
        for c in &before {
            let p = t.apply(c.position);
            let nearest = after.iter().map(|a| a.position.distance(p)).fold(f64::MAX, f64::min);
            prop_assert!(nearest <= tol, "{nearest}");
        }
    }

    #[test]
    fn corners_are_separated_and_on_their_walls(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let walls = random_walls(&mut rng, 10);
        let corners = extract_corners(&walls, 1.0, 0.5);
        for (i, a) in corners.iter().enumerate() {
            for b in &corners[i + 1..] {
                prop_assert!(a.position.distance(b.position) >= 0.5);
            }
            prop_assert!(a.wall_a.line_distance(a.position) <= 2.0 / 60.0);
            prop_assert!(a.wall_b.line_distance(a.position) <= 2.0 / 60.0);
        }
    }

    #[test]
    fn floorplan_walls_only_touch_at_endpoints(seed in any::<u64>(), rooms in 1usize..14, corridor in any::<bool>()) {
        let model = generate_floorplan(seed, rooms, corridor, 40.0).unwrap();
        let w = &model.walls;
        for i in 0..w.len() {
            for j in i + 1..w.len() {
                if let Some(p) = w[i].intersection(&w[j]) {
                    let at_end = |s: &l2b_core::LineSegment2| s.p0.distance(p) < 1e-9 || s.p1.distance(p) < 1e-9;
                    prop_assert!(at_end(&w[i]) || at_end(&w[j]), "walls {i} and {j} cross at {p:?}");
                }
            }
        }
    }
}

fn covariance_ratio(points: &[Point3]) -> f64 {
    let n = points.len() as f64;
    let c = points.iter().fold([0.0; 3], |a, p| [a[0] + p.x / n, a[1] + p.y / n, a[2] + p.z / n]);
    let mut m = Matrix3::zeros();
    for p in points {
        let d = nalgebra::Vector3::new(p.x - c[0], p.y - c[1], p.z - c[2]);
        m += d * d.transpose() / n;
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev[1] / ev[2].max(1e-12)
}

fn scene(seed: u64, noise: f64, clutter: f64) -> (WallModel, Submap, Se2Pose) {
    let model = generate_floorplan(seed, 5, true, 20.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pose = l2b_core::eval::random_pose_in(&model, &mut rng);
    let params = SceneParams { noise_sigma_m: noise, clutter_frac: clutter, seed, radius_m: 8.0, ..SceneParams::default() };
    let s = synthesize_submap(&model, pose, &params).unwrap();
    (model, s.submap, s.gt_pose)
}

fn patch_signature(p: &PlanarPatch) -> Vec<[u64; 3]> {
    p.points.iter().map(|q| [q.x.to_bits(), q.y.to_bits(), q.z.to_bits()]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn patches_are_planar_disjoint_and_order_free(seed in 0u64..10_000) {
        let (_, submap, _) = scene(seed, 0.02, 0.1);
        let patches = segment_planes(&submap, 2.0, 10.0);
        for p in &patches {
            prop_assert!(covariance_ratio(&p.points) > 10.0 * (1.0 - 1e-9));
        }
        let merged = merge_patches(patches.clone(), 10.0, 0.1);
        for p in &merged {
            prop_assert!(covariance_ratio(&p.points) > 10.0 * (1.0 - 1e-9));
        }

        let all: HashSet<[u64; 3]> = submap.points.iter().map(|q| [q.x.to_bits(), q.y.to_bits(), q.z.to_bits()]).collect();
        let mut seen = HashSet::new();
        for q in merged.iter().flat_map(patch_signature) {
            prop_assert!(all.contains(&q));
            prop_assert!(seen.insert(q), "point in two patches");
        }

        let mut shuffled = submap.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for i in (1..shuffled.points.len()).rev() {
            shuffled.points.swap(i, rng.gen_range(0..=i));
        }
        let mut a: Vec<_> = patches.iter().map(patch_signature).collect();
        let mut b: Vec<_> = segment_planes(&shuffled, 2.0, 10.0).iter().map(patch_signature).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn clean_scenes_sit_on_the_model(seed in 0u64..10_000) {
        let (model, submap, gt) = scene(seed, 0.0, 0.0);
        for q in submap.points.iter().filter(|q| q.z.abs() > 1e-9) {
            let p = gt.apply(q.xy());
            let d = model.walls.iter().map(|w| w.distance_to_point(p)).fold(f64::MAX, f64::min);
            prop_assert!(d <= 0.2, "{d}");
        }
    }

    #[test]
    fn score_field_and_confidence_bounds(seed in 0u64..10_000, k_d in 1u32..8) {
        let (model, submap, gt) = scene(seed, 0.02, 0.0);
        let field = build_score_field(&model.walls, 0.2, k_d).unwrap();
        let step = (1.0 - 1.0 / k_d as f64) / k_d as f64;
        for j in 0..field.height() as i64 {
            for i in 0..field.width() as i64 {
                let v = field.cell_value((i, j));
                for n in [(i + 1, j), (i, j + 1), (i + 1, j + 1), (i + 1, j - 1)] {
                    let w = field.cell_value(n);
                    let bound = if v == 0.0 || w == 0.0 { 1.0 / k_d as f64 } else { step };
                    prop_assert!((v - w).abs() <= bound + 1e-12, "{v} vs {w} at {i},{j}");
                }
            }
        }

        let q_ng: Vec<Point2> = submap.points.iter().filter(|q| q.z.abs() > 1e-9).map(|q| q.xy()).collect();
        let q_g: Vec<Point2> = submap.points.iter().filter(|q| q.z.abs() <= 1e-9).map(|q| q.xy()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for pose in [gt, random_pose(&mut rng, 20.0)] {
            let base = score_candidate(&field, &q_ng, &q_g, &pose, 0.5).unwrap();
            prop_assert!(base.confidence <= 1.0 + 1e-12);

            let doubled: Vec<Point2> = q_ng.iter().chain(&q_ng).copied().collect();
            let dup = score_candidate(&field, &doubled, &q_g, &pose, 0.5).unwrap();
            prop_assert!((dup.confidence - base.confidence).abs() < 1e-12);

            let free: Vec<Point2> = (0..200)
                .map(|_| Point2::new(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0)))
                .filter(|p| field.value_at(pose.apply(*p)) == 0.0)
                .collect();
            let cluttered: Vec<Point2> = q_ng.iter().chain(&free).copied().collect();
            let c = score_candidate(&field, &cluttered, &q_g, &pose, 0.5).unwrap();
            prop_assert_eq!(c.s_p, base.s_p);
            prop_assert!((c.s_a - base.s_a).abs() < 1e-9);
            let n0 = q_ng.len() as f64;
            let n1 = cluttered.len() as f64;
            prop_assert!((c.confidence * n1 - base.confidence * n0).abs() < 1e-6);
        }
    }
}
