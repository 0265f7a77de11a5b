//! C interface to the registration pipeline.
//!
//! Every object is an opaque handle created by a `*_new`, `*_load` or
//! `*_from_*` function and released with the matching `*_free`. Calls
//! return an [`L2bStatus`]; on failure [`l2b_last_error`] describes the
//! problem until the next failing call on the same thread.
//!
//! # Safety
//!
//! Pointer arguments must be null or point to live objects of the stated
//! type; strings must be NUL-terminated. Handles must come from this
//! library and be freed at most once.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use l2b_core::descriptor::{load_db, save_db};
use l2b_core::ingest::{load_building, load_submap, Submap};
use l2b_core::pipeline::{register, FloorIndex, Registration};
use l2b_core::verify::VerificationReport;
use l2b_core::{Error, PipelineConfig, Point3};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum L2bStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    VersionMismatch = 5,
    EmptyModel = 6,
    EmptyInput = 7,
    NoCandidates = 8,
    Degenerate = 9,
    Panic = 10,
}

/// One scored pose candidate. `yaw` is in radians.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct L2bCandidate {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub votes: u32,
    pub s_a: f64,
    pub s_p: f64,
    pub confidence: f64,
}

pub struct L2bConfig(PipelineConfig);

/// A floor database with its score field.
pub struct L2bFloor(FloorIndex);

pub struct L2bSubmap(Submap);

pub struct L2bResult {
    reg: Registration,
    floor_id: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> L2bStatus {
    match e {
        Error::DegenerateInput(_) | Error::DegenerateTriplet | Error::InsufficientTravel { .. } => L2bStatus::Degenerate,
        Error::Parse { .. } => L2bStatus::Parse,
        Error::EmptyModel => L2bStatus::EmptyModel,
        Error::EmptyScene | Error::EmptySubmap => L2bStatus::EmptyInput,
        Error::EmptyGrid | Error::NoCandidates => L2bStatus::NoCandidates,
        Error::ResolutionMismatch(..) | Error::InvalidArgument(_) => L2bStatus::InvalidArgument,
        Error::VersionMismatch(_) => L2bStatus::VersionMismatch,
        Error::Io { .. } => L2bStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> L2bStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => L2bStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            L2bStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            L2bStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    unsafe { p.as_ref() }.ok_or(Fail::Null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| Fail::Core(Error::InvalidArgument(format!("{what} is not valid UTF-8"))))
}

fn out_ptr<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn l2b_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn l2b_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default pipeline parameters.
#[no_mangle]
pub unsafe extern "C" fn l2b_config_new(out: *mut *mut L2bConfig) -> L2bStatus {
    guard(|| out_ptr(out, L2bConfig(PipelineConfig::default())))
}

/// Defaults overridden by a `key = value` file.
#[no_mangle]
pub unsafe extern "C" fn l2b_config_load(path: *const c_char, out: *mut *mut L2bConfig) -> L2bStatus {
    guard(|| {
        let path = unsafe { string(path, "path") }?;
        out_ptr(out, L2bConfig(PipelineConfig::from_file(path)?))
    })
}

/// Sets one parameter by its configuration key.
#[no_mangle]
pub unsafe extern "C" fn l2b_config_set(cfg: *mut L2bConfig, key: *const c_char, value: *const c_char) -> L2bStatus {
    guard(|| {
        let cfg = unsafe { cfg.as_mut() }.ok_or(Fail::Null("cfg"))?;
        let (key, value) = unsafe { (string(key, "key")?, string(value, "value")?) };
        let mut next = cfg.0.clone();
        next.set(key, value)?;
        next.validate()?;
        cfg.0 = next;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn l2b_config_free(cfg: *mut L2bConfig) {
    unsafe { free(cfg) }
}

/// Builds the database of one floor of a wall model file. `floor_id` may be
/// null when the file holds a single floor.
#[no_mangle]
pub unsafe extern "C" fn l2b_floor_from_model(
    model_path: *const c_char,
    floor_id: *const c_char,
    cfg: *const L2bConfig,
    out: *mut *mut L2bFloor,
) -> L2bStatus {
    guard(|| {
        let path = unsafe { string(model_path, "model_path") }?;
        let cfg = unsafe { deref(cfg, "cfg") }?;
        let floors = load_building(path)?;
        let model = if floor_id.is_null() {
            match floors.as_slice() {
                [only] => only,
                _ => return Err(Error::InvalidArgument(format!("{path} holds {} floors; pass a floor id", floors.len())).into()),
            }
        } else {
            let id = unsafe { string(floor_id, "floor_id") }?;
            floors.iter().find(|f| f.floor_id == id).ok_or_else(|| Error::InvalidArgument(format!("no floor {id} in {path}")))?
        };
        out_ptr(out, L2bFloor(FloorIndex::from_model(model, &cfg.0)?))
    })
}

/// Loads a database written by `l2b build-db` or [`l2b_floor_save`].
#[no_mangle]
pub unsafe extern "C" fn l2b_floor_load(db_path: *const c_char, cfg: *const L2bConfig, out: *mut *mut L2bFloor) -> L2bStatus {
    guard(|| {
        let path = unsafe { string(db_path, "db_path") }?;
        let cfg = unsafe { deref(cfg, "cfg") }?;
        out_ptr(out, L2bFloor(FloorIndex::new(load_db(path)?, &cfg.0)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn l2b_floor_save(floor: *const L2bFloor, db_path: *const c_char) -> L2bStatus {
    guard(|| {
        let floor = unsafe { deref(floor, "floor") }?;
        let path = unsafe { string(db_path, "db_path") }?;
        Ok(save_db(&floor.0.db, path)?)
    })
}

/// Number of indexed triplets.
#[no_mangle]
pub unsafe extern "C" fn l2b_floor_triplet_count(floor: *const L2bFloor) -> usize {
    unsafe { floor.as_ref() }.map_or(0, |f| f.0.db.n_triplets)
}

#[no_mangle]
pub unsafe extern "C" fn l2b_floor_free(floor: *mut L2bFloor) {
    unsafe { free(floor) }
}

#[no_mangle]
pub unsafe extern "C" fn l2b_submap_load(path: *const c_char, out: *mut *mut L2bSubmap) -> L2bStatus {
    guard(|| {
        let path = unsafe { string(path, "path") }?;
        out_ptr(out, L2bSubmap(load_submap(path)?))
    })
}

/// Wraps `n_points` interleaved `x, y, z` triples and a gravity direction.
#[no_mangle]
pub unsafe extern "C" fn l2b_submap_from_points(
    xyz: *const f64,
    n_points: usize,
    gravity: *const f64,
    out: *mut *mut L2bSubmap,
) -> L2bStatus {
    guard(|| {
        if xyz.is_null() && n_points > 0 {
            return Err(Fail::Null("xyz"));
        }
        if gravity.is_null() {
            return Err(Fail::Null("gravity"));
        }
        let flat = if n_points == 0 { &[][..] } else { unsafe { std::slice::from_raw_parts(xyz, 3 * n_points) } };
        let g = unsafe { std::slice::from_raw_parts(gravity, 3) };
        let points = flat.chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect();
        out_ptr(out, L2bSubmap(Submap::new(points, [g[0], g[1], g[2]])?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn l2b_submap_point_count(submap: *const L2bSubmap) -> usize {
    unsafe { submap.as_ref() }.map_or(0, |s| s.0.points.len())
}

#[no_mangle]
pub unsafe extern "C" fn l2b_submap_free(submap: *mut L2bSubmap) {
    unsafe { free(submap) }
}

/// Registers the submap against `n_floors` floors and keeps the most
/// confident one.
#[no_mangle]
pub unsafe extern "C" fn l2b_register(
    submap: *const L2bSubmap,
    floors: *const *const L2bFloor,
    n_floors: usize,
    cfg: *const L2bConfig,
    out: *mut *mut L2bResult,
) -> L2bStatus {
    guard(|| {
        let submap = unsafe { deref(submap, "submap") }?;
        let cfg = unsafe { deref(cfg, "cfg") }?;
        if floors.is_null() || n_floors == 0 {
            return Err(Error::InvalidArgument("at least one floor is required".into()).into());
        }
        let handles = unsafe { std::slice::from_raw_parts(floors, n_floors) };
        let mut index: Vec<&FloorIndex> = Vec::with_capacity(n_floors);
        for &h in handles {
            index.push(&unsafe { deref(h, "floors[i]") }?.0);
        }
        cfg.0.validate()?;
        let reg = register(&submap.0, &index, &cfg.0)?;
        let floor_id = CString::new(reg.floor_id.replace('\0', " ")).unwrap_or_default();
        out_ptr(out, L2bResult { reg, floor_id })
    })
}

fn candidate(r: &VerificationReport) -> L2bCandidate {
    L2bCandidate {
        x: r.candidate.pose.x,
        y: r.candidate.pose.y,
        yaw: r.candidate.pose.yaw(),
        votes: r.candidate.votes,
        s_a: r.s_a,
        s_p: r.s_p,
        confidence: r.confidence,
    }
}

fn best_reports(result: &L2bResult) -> &[VerificationReport] {
    result.reg.floors.iter().find(|f| f.floor_id == result.reg.floor_id).map_or(&[], |f| f.reports.as_slice())
}

#[no_mangle]
pub unsafe extern "C" fn l2b_result_best(result: *const L2bResult, out: *mut L2bCandidate) -> L2bStatus {
    guard(|| {
        let result = unsafe { deref(result, "result") }?;
        let out = unsafe { out.as_mut() }.ok_or(Fail::Null("out"))?;
        *out = candidate(&result.reg.best);
        Ok(())
    })
}

/// Candidates scored on the selected floor, best first.
#[no_mangle]
pub unsafe extern "C" fn l2b_result_candidate_count(result: *const L2bResult) -> usize {
    unsafe { result.as_ref() }.map_or(0, |r| best_reports(r).len())
}

#[no_mangle]
pub unsafe extern "C" fn l2b_result_candidate(result: *const L2bResult, index: usize, out: *mut L2bCandidate) -> L2bStatus {
    guard(|| {
        let result = unsafe { deref(result, "result") }?;
        let out = unsafe { out.as_mut() }.ok_or(Fail::Null("out"))?;
        let reports = best_reports(result);
        let r = reports.get(index).ok_or_else(|| Error::InvalidArgument(format!("candidate {index} of {}", reports.len())))?;
        *out = candidate(r);
        Ok(())
    })
}

/// Id of the selected floor, owned by the result.
#[no_mangle]
pub unsafe extern "C" fn l2b_result_floor_id(result: *const L2bResult) -> *const c_char {
    unsafe { result.as_ref() }.map_or(ptr::null(), |r| r.floor_id.as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn l2b_result_free(result: *mut L2bResult) {
    unsafe { free(result) }
}
