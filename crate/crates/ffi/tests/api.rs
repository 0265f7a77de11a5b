use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use l2b_core::eval::standard_scene_params;
use l2b_core::geometry::{registration_success, Se2Pose};
use l2b_core::ingest::{generate_floorplan, save_building, save_submap, synthesize_submap};
use l2b_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn path(p: &Path) -> CString {
    c(p.to_str().unwrap())
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(l2b_last_error()) }.to_string_lossy().into_owned()
}

/// Writes a one-floor model and a submap taken at `pose`.
fn fixture(dir: &Path, pose: Se2Pose) -> Se2Pose {
    let model = generate_floorplan(5, 12, true, 40.0).unwrap();
    save_building(std::slice::from_ref(&model), dir.join("m.txt")).unwrap();
    let scene = synthesize_submap(&model, pose, &standard_scene_params(5)).unwrap();
    save_submap(&scene.submap, dir.join("s.l2b")).unwrap();
    scene.gt_pose
}

#[test]
fn register_through_handles() {
    let dir = tempfile::tempdir().unwrap();
    let model = generate_floorplan(5, 12, true, 40.0).unwrap();
    let (lo, hi) = l2b_core::eval::model_bounds(&model);
    let gt = fixture(dir.path(), Se2Pose::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y), 0.7));
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(l2b_config_new(&mut cfg), L2bStatus::Ok);
        let mut floor = ptr::null_mut();
        assert_eq!(l2b_floor_from_model(path(&dir.path().join("m.txt")).as_ptr(), ptr::null(), cfg, &mut floor), L2bStatus::Ok);
        assert!(l2b_floor_triplet_count(floor) > 0);
        assert_eq!(l2b_floor_save(floor, path(&dir.path().join("f.db")).as_ptr()), L2bStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(l2b_floor_load(path(&dir.path().join("f.db")).as_ptr(), cfg, &mut loaded), L2bStatus::Ok);
        assert_eq!(l2b_floor_triplet_count(loaded), l2b_floor_triplet_count(floor));

        let mut submap = ptr::null_mut();
        assert_eq!(l2b_submap_load(path(&dir.path().join("s.l2b")).as_ptr(), &mut submap), L2bStatus::Ok);
        assert!(l2b_submap_point_count(submap) > 1000);

        let floors = [loaded as *const L2bFloor];
        let mut result = ptr::null_mut();
        assert_eq!(l2b_register(submap, floors.as_ptr(), 1, cfg, &mut result), L2bStatus::Ok, "{}", last_error());
        let mut best = L2bCandidate::default();
        assert_eq!(l2b_result_best(result, &mut best), L2bStatus::Ok);
        assert!(registration_success(&Se2Pose::new(best.x, best.y, best.yaw), &gt, 5.0, 3.0), "{best:?}");
        assert!(best.confidence > 0.75);
        let n = l2b_result_candidate_count(result);
        assert!(n >= 1);
        let mut first = L2bCandidate::default();
        assert_eq!(l2b_result_candidate(result, 0, &mut first), L2bStatus::Ok);
        assert_eq!(first, best);
        assert_eq!(l2b_result_candidate(result, n, &mut first), L2bStatus::InvalidArgument);
        assert_eq!(CStr::from_ptr(l2b_result_floor_id(result)).to_str().unwrap(), "0");

        l2b_result_free(result);
        l2b_submap_free(submap);
        l2b_floor_free(loaded);
        l2b_floor_free(floor);
        l2b_config_free(cfg);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(l2b_config_new(&mut cfg), L2bStatus::Ok);
        assert_eq!(l2b_config_set(cfg, c("lambda").as_ptr(), c("0.25").as_ptr()), L2bStatus::Ok);
        assert_eq!(l2b_config_set(cfg, c("no_such_key").as_ptr(), c("1").as_ptr()), L2bStatus::InvalidArgument);
        assert!(last_error().contains("no_such_key"), "{}", last_error());
        assert_eq!(l2b_config_set(cfg, c("top_l").as_ptr(), c("1").as_ptr()), L2bStatus::InvalidArgument);
        assert_eq!(l2b_config_set(cfg, ptr::null_mut(), c("1").as_ptr()), L2bStatus::NullPointer);
        assert_eq!(l2b_config_set(ptr::null_mut(), c("lambda").as_ptr(), c("1").as_ptr()), L2bStatus::NullPointer);

        let mut floor = ptr::null_mut();
        let missing = path(&dir.path().join("missing.txt"));
        assert_eq!(l2b_floor_from_model(missing.as_ptr(), ptr::null(), cfg, &mut floor), L2bStatus::Io);
        assert!(floor.is_null());

        std::fs::write(dir.path().join("empty.txt"), "# no walls\n").unwrap();
        let empty = path(&dir.path().join("empty.txt"));
        assert_eq!(l2b_floor_from_model(empty.as_ptr(), ptr::null(), cfg, &mut floor), L2bStatus::EmptyModel);

        std::fs::write(dir.path().join("bad.db"), b"NOPE\x01\x00\x00\x00").unwrap();
        let bad = path(&dir.path().join("bad.db"));
        assert_eq!(l2b_floor_load(bad.as_ptr(), cfg, &mut floor), L2bStatus::VersionMismatch);

        std::fs::write(dir.path().join("cfg.conf"), "lambda = oops\n").unwrap();
        let mut other = ptr::null_mut();
        assert_eq!(l2b_config_load(path(&dir.path().join("cfg.conf")).as_ptr(), &mut other), L2bStatus::Parse);
        assert!(last_error().contains("line 1"), "{}", last_error());

        let pts = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let down = [0.0, 0.0, -1.0];
        let mut submap = ptr::null_mut();
        assert_eq!(l2b_submap_from_points(pts.as_ptr(), 2, down.as_ptr(), &mut submap), L2bStatus::Ok);
        assert_eq!(l2b_submap_point_count(submap), 2);
        let mut result = ptr::null_mut();
        assert_eq!(l2b_register(submap, ptr::null(), 0, cfg, &mut result), L2bStatus::InvalidArgument);
        let nan = [f64::NAN, 0.0, 0.0];
        let mut broken = ptr::null_mut();
        assert_eq!(l2b_submap_from_points(nan.as_ptr(), 1, down.as_ptr(), &mut broken), L2bStatus::InvalidArgument);
        assert_eq!(l2b_submap_from_points(ptr::null(), 1, down.as_ptr(), &mut broken), L2bStatus::NullPointer);

        l2b_submap_free(submap);
        l2b_config_free(cfg);
        l2b_config_free(ptr::null_mut());
        l2b_result_free(ptr::null_mut());
    }
    assert!(!unsafe { CStr::from_ptr(l2b_version()) }.to_bytes().is_empty());
}
