//! C ABI over `fcg_core`.
//!
//! Every function returns an [`FcgStatus`]; results go through out-pointers.
//! On failure a message is kept per thread and read with
//! [`fcg_last_error_message`]. Objects are opaque handles released with the
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;

use fcg_core::fracture::{
    deflection_angle, paris_increment, simulate_fcg, CrackPath, MaterialSpec, PlateSpec, Point, SifPair,
};
use fcg_core::library::{load_library, Library};
use fcg_core::loads::LoadSchedule;
use fcg_core::metrics::{path_rmse, ssim_values};
use fcg_core::model::{load_bundle, ModelBundle};
use fcg_core::raster::VoxelGrid;
use fcg_core::sax::data_complexity;
use fcg_core::twin::{Observation, TwinSession};
use fcg_core::FcgError;

/// Status codes; the nonzero error classes match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcgStatus {
    Ok = 0,
    Config = 2,
    Io = 3,
    Version = 4,
    Format = 5,
    Missing = 6,
    Shape = 7,
    Domain = 8,
    Numerical = 9,
    NullPointer = 10,
    InvalidArgument = 11,
    Panic = 12,
}

impl From<&FcgError> for FcgStatus {
    fn from(e: &FcgError) -> Self {
        match e.exit_code() {
            2 => FcgStatus::Config,
            3 => FcgStatus::Io,
            4 => FcgStatus::Version,
            5 => FcgStatus::Format,
            6 => FcgStatus::Missing,
            7 => FcgStatus::Shape,
            8 => FcgStatus::Domain,
            _ => FcgStatus::Numerical,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(FcgStatus, String);

impl From<FcgError> for Failure {
    fn from(e: FcgError) -> Self {
        Failure((&e).into(), format!("error[{}]: {e}", e.class()))
    }
}

fn null(what: &str) -> Failure {
    Failure(FcgStatus::NullPointer, format!("null pointer: {what}"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(FcgStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FcgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FcgStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FcgStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn points(xy: &[f64]) -> Result<Vec<Point>, Failure> {
    if !xy.len().is_multiple_of(2) {
        return Err(invalid("point buffer length must be even (x, y pairs)"));
    }
    Ok(xy.chunks(2).map(|c| Point::new(c[0], c[1])).collect())
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn fcg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Kink angle (radians) for the given stress intensity factors.
///
/// # Safety
/// `out_angle` must be null or point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn fcg_deflection_angle(k1: f64, k2: f64, out_angle: *mut f64) -> FcgStatus {
    guard(|| {
        let o = out(out_angle, "out_angle")?;
        *o = deflection_angle(SifPair { k1, k2 })?;
        Ok(())
    })
}

/// Cycles to advance one step of `advance_step` metres at a constant
/// driving force, for Paris constants `paris_c`, `paris_m`.
///
/// # Safety
/// `out_cycles` must be null or point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn fcg_paris_increment(
    delta_k: f64,
    paris_c: f64,
    paris_m: f64,
    advance_step: f64,
    out_cycles: *mut f64,
) -> FcgStatus {
    guard(|| {
        let o = out(out_cycles, "out_cycles")?;
        let material = MaterialSpec {
            paris_c,
            paris_m,
            ..MaterialSpec::default()
        };
        material.validate()?;
        *o = paris_increment(delta_k, &material, advance_step)?;
        Ok(())
    })
}

/// Global SSIM of two equally long value buffers (range 1).
///
/// # Safety
/// `pred` and `truth` must each hold `len` readable values.
#[no_mangle]
pub unsafe extern "C" fn fcg_ssim(pred: *const f64, truth: *const f64, len: usize, out_ssim: *mut f64) -> FcgStatus {
    guard(|| {
        let o = out(out_ssim, "out_ssim")?;
        *o = ssim_values(slice(pred, len, "pred")?, slice(truth, len, "truth")?)?;
        Ok(())
    })
}

/// Path RMSE over the unknown points `k..=n` after resampling both
/// polylines to `n` points. Polylines are interleaved (x, y) pairs;
/// `pred_len` and `truth_len` count doubles, not points.
///
/// # Safety
/// Buffers must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn fcg_path_rmse(
    pred_xy: *const f64,
    pred_len: usize,
    truth_xy: *const f64,
    truth_len: usize,
    k: usize,
    n: usize,
    out_rmse: *mut f64,
) -> FcgStatus {
    guard(|| {
        let o = out(out_rmse, "out_rmse")?;
        let pred = points(slice(pred_xy, pred_len, "pred_xy")?)?;
        let truth = points(slice(truth_xy, truth_len, "truth_xy")?)?;
        *o = path_rmse(&pred, &truth, k, n)?;
        Ok(())
    })
}

/// log10 of the SAX word count for word length `w` and alphabet size `l`.
///
/// # Safety
/// `out_log10` must be null or point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn fcg_data_complexity(w: usize, l: usize, out_log10: *mut f64) -> FcgStatus {
    guard(|| {
        let o = out(out_log10, "out_log10")?;
        *o = data_complexity(w, l)?.log10();
        Ok(())
    })
}

/// Simulated crack path on the default plate and material.
pub struct FcgPath {
    path: CrackPath,
}

/// Grow a crack under constant tension and shear (MPa) split over
/// `n_slices` equal slices.
///
/// # Safety
/// `out_path` must be null or point to writable memory. The handle is
/// released with [`fcg_path_free`].
#[no_mangle]
pub unsafe extern "C" fn fcg_path_simulate(
    tension: f64,
    shear: f64,
    n_slices: usize,
    out_path: *mut *mut FcgPath,
) -> FcgStatus {
    guard(|| {
        let o = out(out_path, "out_path")?;
        if n_slices == 0 {
            return Err(invalid("n_slices must be >= 1"));
        }
        let plate = PlateSpec::default();
        let schedule = LoadSchedule::uniform(tension, shear, n_slices, plate.width);
        let path = simulate_fcg(&plate, &MaterialSpec::default(), &schedule)?;
        *o = Box::into_raw(Box::new(FcgPath { path }));
        Ok(())
    })
}

/// Number of tip positions, notch tip included.
///
/// # Safety
/// `path` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fcg_path_len(path: *const FcgPath, out_len: *mut usize) -> FcgStatus {
    guard(|| {
        let p = path.as_ref().ok_or_else(|| null("path"))?;
        *out(out_len, "out_len")? = p.path.points.len();
        Ok(())
    })
}

/// Tip position `index` in metres.
///
/// # Safety
/// `path` must be a live handle or null; out-pointers writable or null.
#[no_mangle]
pub unsafe extern "C" fn fcg_path_point(
    path: *const FcgPath,
    index: usize,
    out_x: *mut f64,
    out_y: *mut f64,
) -> FcgStatus {
    guard(|| {
        let p = path.as_ref().ok_or_else(|| null("path"))?;
        let pt = p
            .path
            .points
            .get(index)
            .ok_or_else(|| invalid(format!("point {index} of {}", p.path.points.len())))?;
        *out(out_x, "out_x")? = pt.x;
        *out(out_y, "out_y")? = pt.y;
        Ok(())
    })
}

/// Total cycles to reach the length limit.
///
/// # Safety
/// `path` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fcg_path_total_life(path: *const FcgPath, out_cycles: *mut f64) -> FcgStatus {
    guard(|| {
        let p = path.as_ref().ok_or_else(|| null("path"))?;
        *out(out_cycles, "out_cycles")? = p.path.total_life;
        Ok(())
    })
}

/// # Safety
/// `path` must come from [`fcg_path_simulate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fcg_path_free(path: *mut FcgPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// A crack-pattern library loaded from disk.
pub struct FcgLibrary {
    lib: Library,
}

/// # Safety
/// `dir` must be a nul-terminated string; `out_library` writable or null.
#[no_mangle]
pub unsafe extern "C" fn fcg_library_load(dir: *const c_char, out_library: *mut *mut FcgLibrary) -> FcgStatus {
    guard(|| {
        let o = out(out_library, "out_library")?;
        let lib = load_library(&path_arg(dir)?)?;
        *o = Box::into_raw(Box::new(FcgLibrary { lib }));
        Ok(())
    })
}

/// # Safety
/// `library` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fcg_library_sample_count(library: *const FcgLibrary, out_count: *mut usize) -> FcgStatus {
    guard(|| {
        let l = library.as_ref().ok_or_else(|| null("library"))?;
        *out(out_count, "out_count")? = l.lib.samples.len();
        Ok(())
    })
}

/// # Safety
/// `library` must come from [`fcg_library_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fcg_library_free(library: *mut FcgLibrary) {
    if !library.is_null() {
        drop(Box::from_raw(library));
    }
}

/// A trained model bundle. Sessions keep their own reference, so the model
/// may be freed while sessions are alive.
pub struct FcgModel {
    bundle: Arc<ModelBundle>,
}

/// # Safety
/// `dir` must be a nul-terminated string; `out_model` writable or null.
#[no_mangle]
pub unsafe extern "C" fn fcg_model_load(dir: *const c_char, out_model: *mut *mut FcgModel) -> FcgStatus {
    guard(|| {
        let o = out(out_model, "out_model")?;
        let bundle = Arc::new(load_bundle(&path_arg(dir)?)?);
        *o = Box::into_raw(Box::new(FcgModel { bundle }));
        Ok(())
    })
}

/// Grid size the model expects.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fcg_model_resolution(
    model: *const FcgModel,
    out_rows: *mut usize,
    out_cols: *mut usize,
) -> FcgStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let (rows, cols) = m.bundle.resolution();
        *out(out_rows, "out_rows")? = rows;
        *out(out_cols, "out_cols")? = cols;
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`fcg_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fcg_model_free(model: *mut FcgModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// A digital-twin session fed with observed frames.
pub struct FcgSession {
    session: TwinSession,
}

/// # Safety
/// `model` must be a live handle or null; `out_session` writable or null.
#[no_mangle]
pub unsafe extern "C" fn fcg_session_new(model: *const FcgModel, out_session: *mut *mut FcgSession) -> FcgStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let o = out(out_session, "out_session")?;
        let session = TwinSession::new(m.bundle.clone());
        *o = Box::into_raw(Box::new(FcgSession { session }));
        Ok(())
    })
}

/// Feed one row-major frame of `len` values observed at `step_index` and
/// issue a fresh prediction. Writes the predicted remaining life and the
/// number of forecast frames.
///
/// # Safety
/// `session` must be a live handle or null; `values` must hold `len` floats.
#[no_mangle]
pub unsafe extern "C" fn fcg_session_observe(
    session: *mut FcgSession,
    values: *const f32,
    len: usize,
    step_index: usize,
    out_remaining_life: *mut f64,
    out_n_frames: *mut usize,
) -> FcgStatus {
    guard(|| {
        let s = session.as_mut().ok_or_else(|| null("session"))?;
        let values = slice(values, len, "values")?;
        let life = out(out_remaining_life, "out_remaining_life")?;
        let n_frames = out(out_n_frames, "out_n_frames")?;
        let m = s.session.models();
        let (rows, cols) = m.resolution();
        if len != rows * cols {
            return Err(FcgError::Shape(format!("{len} values for a {rows}x{cols} grid")).into());
        }
        let frame = VoxelGrid {
            values: values.to_vec(),
            ..VoxelGrid::empty(&m.plate, rows, cols)
        };
        s.session.ingest(Observation { frame, step_index })?;
        let pred = s.session.predict()?;
        *life = pred.remaining_life;
        *n_frames = pred.predicted_frames.len();
        Ok(())
    })
}

/// Copy forecast frame `index` of the latest prediction into `out_values`
/// (`len` must equal rows·cols).
///
/// # Safety
/// `session` must be a live handle or null; `out_values` must hold `len`
/// writable floats.
#[no_mangle]
pub unsafe extern "C" fn fcg_session_predicted_frame(
    session: *const FcgSession,
    index: usize,
    out_values: *mut f32,
    len: usize,
) -> FcgStatus {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        let pred = s
            .session
            .latest()
            .ok_or_else(|| invalid("no prediction issued yet"))?;
        let frame = pred
            .predicted_frames
            .get(index)
            .ok_or_else(|| invalid(format!("frame {index} of {}", pred.predicted_frames.len())))?;
        if len != frame.values.len() {
            return Err(FcgError::Shape(format!("buffer of {len} for {} values", frame.values.len())).into());
        }
        if out_values.is_null() {
            return Err(null("out_values"));
        }
        std::slice::from_raw_parts_mut(out_values, len).copy_from_slice(&frame.values);
        Ok(())
    })
}

/// # Safety
/// `session` must come from [`fcg_session_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fcg_session_free(session: *mut FcgSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}
