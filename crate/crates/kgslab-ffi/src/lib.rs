//! C ABI for the radial spectral laboratory.
//!
//! Handles are opaque pointers owned by this library; every constructor has
//! a matching `_free`, functions report a [`KgslabStatus`], and the last
//! error message is available per thread through
//! [`kgslab_last_error_message`]. The header `include/kgslab.h` is
//! generated by cbindgen at build time.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use kgslab::config::load_config;
use kgslab::experiments::run;
use kgslab::norms::sobolev_norm;
use kgslab::radial::{make_grid, GridRef, RadialField};
use kgslab::solver::{residual, solve, Method, SolverOptions, Trajectory};
use num_complex::Complex64;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgslabStatus {
    /// Success (for `kgslab_run_config`: all pass criteria held).
    Ok = 0,
    /// The run completed but one or more pass criteria failed.
    FailedCriteria = 1,
    /// A required pointer argument was null.
    NullArgument = -1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = -2,
    /// An argument was out of range.
    InvalidArgument = -3,
    /// The operation itself failed; see `kgslab_last_error_message`.
    RuntimeError = -4,
    /// The library caught a panic; state may be inconsistent.
    Panic = -5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(msg).ok();
    });
}

fn guard<F: FnOnce() -> KgslabStatus>(f: F) -> KgslabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("panic inside kgslab");
            KgslabStatus::Panic
        }
    }
}

/// Opaque radial grid handle.
pub struct KgslabGrid {
    grid: GridRef,
}

/// Opaque radial field handle.
pub struct KgslabField {
    field: RadialField,
}

/// Opaque trajectory handle.
pub struct KgslabTrajectory {
    traj: Trajectory,
}

/// Library version as a static NUL-terminated string (do not free).
#[no_mangle]
pub extern "C" fn kgslab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Last error message on this thread, or NULL. Free with
/// [`kgslab_string_free`].
#[no_mangle]
pub extern "C" fn kgslab_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.clone().into_raw())
            .unwrap_or(std::ptr::null_mut())
    })
}

/// Free a string returned by this library.
///
/// # Safety
/// `s` must come from a kgslab function and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn kgslab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Build a uniform radial grid with `n_points` interior nodes on
/// `(0, r_max)`.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn kgslab_grid_new(
    r_max: f64,
    n_points: usize,
    out: *mut *mut KgslabGrid,
) -> KgslabStatus {
    guard(|| {
        if out.is_null() {
            set_error("out pointer is null");
            return KgslabStatus::NullArgument;
        }
        match make_grid(r_max, n_points) {
            Ok(grid) => {
                *out = Box::into_raw(Box::new(KgslabGrid { grid }));
                KgslabStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                KgslabStatus::InvalidArgument
            }
        }
    })
}

/// # Safety
/// `grid` must come from [`kgslab_grid_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn kgslab_grid_free(grid: *mut KgslabGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of interior nodes.
///
/// # Safety
/// `grid` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kgslab_grid_n_points(grid: *const KgslabGrid) -> usize {
    if grid.is_null() {
        return 0;
    }
    (*grid).grid.n_points()
}

/// Largest resolvable frequency `n pi / r_max`.
///
/// # Safety
/// `grid` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kgslab_grid_xi_max(grid: *const KgslabGrid) -> f64 {
    if grid.is_null() {
        return f64::NAN;
    }
    (*grid).grid.xi_max()
}

/// Real Gaussian profile `amplitude * exp(-r^2 / (2 width^2))`.
///
/// # Safety
/// `grid` must be live; `out` must point to writable pointer storage.
#[no_mangle]
pub unsafe extern "C" fn kgslab_field_gaussian(
    grid: *const KgslabGrid,
    amplitude: f64,
    width: f64,
    out: *mut *mut KgslabField,
) -> KgslabStatus {
    guard(|| {
        if grid.is_null() || out.is_null() {
            set_error("null argument");
            return KgslabStatus::NullArgument;
        }
        if !(width > 0.0) || !amplitude.is_finite() {
            set_error("width must be positive and amplitude finite");
            return KgslabStatus::InvalidArgument;
        }
        let g = &(*grid).grid;
        let field = RadialField::from_profile(g, |r| {
            Complex64::new(amplitude * (-r * r / (2.0 * width * width)).exp(), 0.0)
        });
        *out = Box::into_raw(Box::new(KgslabField { field }));
        KgslabStatus::Ok
    })
}

/// Seed-deterministic random data with frequency support on the dyadic
/// annulus `2^k`, unit mass.
///
/// # Safety
/// `grid` must be live; `out` must point to writable pointer storage.
#[no_mangle]
pub unsafe extern "C" fn kgslab_field_annular(
    grid: *const KgslabGrid,
    k: i32,
    seed: u64,
    out: *mut *mut KgslabField,
) -> KgslabStatus {
    guard(|| {
        if grid.is_null() || out.is_null() {
            set_error("null argument");
            return KgslabStatus::NullArgument;
        }
        let g = &(*grid).grid;
        let mut rng = kgslab::sweep::cell_rng(seed, &[k as i64]);
        match kgslab::frequency::random_annular_data(g, k, &mut rng) {
            Ok(field) => {
                *out = Box::into_raw(Box::new(KgslabField { field }));
                KgslabStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                KgslabStatus::InvalidArgument
            }
        }
    })
}

/// # Safety
/// `field` must come from a kgslab constructor and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn kgslab_field_free(field: *mut KgslabField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// `L^2` norm of a field.
///
/// # Safety
/// `field` must be live; `out` must point to writable f64 storage.
#[no_mangle]
pub unsafe extern "C" fn kgslab_field_l2_norm(
    field: *const KgslabField,
    out: *mut f64,
) -> KgslabStatus {
    guard(|| {
        if field.is_null() || out.is_null() {
            set_error("null argument");
            return KgslabStatus::NullArgument;
        }
        *out = (*field).field.l2_norm();
        KgslabStatus::Ok
    })
}

/// Sobolev `H^s` norm of a field.
///
/// # Safety
/// `field` must be live; `out` must point to writable f64 storage.
#[no_mangle]
pub unsafe extern "C" fn kgslab_field_sobolev_norm(
    field: *const KgslabField,
    s: f64,
    out: *mut f64,
) -> KgslabStatus {
    guard(|| {
        if field.is_null() || out.is_null() {
            set_error("null argument");
            return KgslabStatus::NullArgument;
        }
        *out = sobolev_norm(&(*field).field, s);
        KgslabStatus::Ok
    })
}

/// Copy the complex samples of a field into caller buffers of length
/// [`kgslab_grid_n_points`].
///
/// # Safety
/// `re` and `im` must each point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn kgslab_field_copy_values(
    field: *const KgslabField,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> KgslabStatus {
    guard(|| {
        if field.is_null() || re.is_null() || im.is_null() {
            set_error("null argument");
            return KgslabStatus::NullArgument;
        }
        let values = (*field).field.values();
        if len != values.len() {
            set_error(format!(
                "buffer length {len} != field length {}",
                values.len()
            ));
            return KgslabStatus::InvalidArgument;
        }
        for (i, v) in values.iter().enumerate() {
            *re.add(i) = v.re;
            *im.add(i) = v.im;
        }
        KgslabStatus::Ok
    })
}

/// Integrate the first-order coupled system from data `(u0, N0)` over
/// `[0, t_span]` with step `dt`. `method` is 0 for the splitting scheme and
/// 1 for the exponential midpoint rule.
///
/// # Safety
/// `u0` and `n0` must be live field handles on the same grid; `out` must
/// point to writable pointer storage.
#[no_mangle]
pub unsafe extern "C" fn kgslab_solve(
    u0: *const KgslabField,
    n0: *const KgslabField,
    t_span: f64,
    dt: f64,
    method: c_int,
    out: *mut *mut KgslabTrajectory,
) -> KgslabStatus {
    guard(|| {
        if u0.is_null() || n0.is_null() || out.is_null() {
            set_error("null argument");
            return KgslabStatus::NullArgument;
        }
        let method = match method {
            0 => Method::StrangSplit,
            1 => Method::ExponentialRk2,
            _ => {
                set_error("method must be 0 (strang_split) or 1 (exponential_rk2)");
                return KgslabStatus::InvalidArgument;
            }
        };
        let opts = SolverOptions {
            method,
            ..SolverOptions::default()
        };
        match solve(&(*u0).field, &(*n0).field, t_span, dt, &opts) {
            Ok(traj) => {
                *out = Box::into_raw(Box::new(KgslabTrajectory { traj }));
                KgslabStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                KgslabStatus::InvalidArgument
            }
        }
    })
}

/// # Safety
/// `traj` must come from [`kgslab_solve`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn kgslab_trajectory_free(traj: *mut KgslabTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of stored snapshots.
///
/// # Safety
/// `traj` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kgslab_trajectory_len(traj: *const KgslabTrajectory) -> usize {
    if traj.is_null() {
        return 0;
    }
    (*traj).traj.states.len()
}

/// Time of the stored snapshot at `index`.
///
/// # Safety
/// `traj` must be live; `out` must point to writable f64 storage.
#[no_mangle]
pub unsafe extern "C" fn kgslab_trajectory_time(
    traj: *const KgslabTrajectory,
    index: usize,
    out: *mut f64,
) -> KgslabStatus {
    guard(|| {
        if traj.is_null() || out.is_null() {
            set_error("null argument");
            return KgslabStatus::NullArgument;
        }
        let states = &(*traj).traj.states;
        match states.get(index) {
            Some(s) => {
                *out = s.t;
                KgslabStatus::Ok
            }
            None => {
                set_error("snapshot index out of range");
                KgslabStatus::InvalidArgument
            }
        }
    })
}

/// Nucleon mass `||u(t)||_{L^2}` of the stored snapshot at `index`.
///
/// # Safety
/// `traj` must be live; `out` must point to writable f64 storage.
#[no_mangle]
pub unsafe extern "C" fn kgslab_trajectory_mass(
    traj: *const KgslabTrajectory,
    index: usize,
    out: *mut f64,
) -> KgslabStatus {
    guard(|| {
        if traj.is_null() || out.is_null() {
            set_error("null argument");
            return KgslabStatus::NullArgument;
        }
        let states = &(*traj).traj.states;
        match states.get(index) {
            Some(s) => {
                *out = s.u.l2_norm();
                KgslabStatus::Ok
            }
            None => {
                set_error("snapshot index out of range");
                KgslabStatus::InvalidArgument
            }
        }
    })
}

/// Maximum drift of the nucleon mass over the run.
///
/// # Safety
/// `traj` must be live; `out` must point to writable f64 storage.
#[no_mangle]
pub unsafe extern "C" fn kgslab_trajectory_mass_drift(
    traj: *const KgslabTrajectory,
    out: *mut f64,
) -> KgslabStatus {
    guard(|| {
        if traj.is_null() || out.is_null() {
            set_error("null argument");
            return KgslabStatus::NullArgument;
        }
        *out = (*traj).traj.mass_drift;
        KgslabStatus::Ok
    })
}

/// Discrete equation residual of the stored trajectory.
///
/// # Safety
/// `traj` must be live; `out` must point to writable f64 storage.
#[no_mangle]
pub unsafe extern "C" fn kgslab_trajectory_residual(
    traj: *const KgslabTrajectory,
    out: *mut f64,
) -> KgslabStatus {
    guard(|| {
        if traj.is_null() || out.is_null() {
            set_error("null argument");
            return KgslabStatus::NullArgument;
        }
        match residual(&(*traj).traj) {
            Ok(r) => {
                *out = r;
                KgslabStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                KgslabStatus::InvalidArgument
            }
        }
    })
}

/// 1 if the run tripped the instability or reflectivity guard, else 0.
///
/// # Safety
/// `traj` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kgslab_trajectory_aborted(traj: *const KgslabTrajectory) -> c_int {
    if traj.is_null() {
        return 0;
    }
    (*traj).traj.aborted.is_some() as c_int
}

/// Load a config file and run its experiment; artifacts go to the config's
/// output directory, or to `out_dir` when non-NULL. Returns `Ok` when every
/// pass criterion held, `FailedCriteria` when the run completed with
/// failures, and a negative status on error.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out_dir` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn kgslab_run_config(
    config_path: *const c_char,
    out_dir: *const c_char,
) -> KgslabStatus {
    guard(|| {
        if config_path.is_null() {
            set_error("config_path is null");
            return KgslabStatus::NullArgument;
        }
        let Ok(path) = CStr::from_ptr(config_path).to_str() else {
            set_error("config_path is not valid UTF-8");
            return KgslabStatus::InvalidUtf8;
        };
        let mut config = match load_config(std::path::Path::new(path)) {
            Ok(c) => c,
            Err(e) => {
                set_error(e.to_string());
                return KgslabStatus::InvalidArgument;
            }
        };
        if !out_dir.is_null() {
            let Ok(dir) = CStr::from_ptr(out_dir).to_str() else {
                set_error("out_dir is not valid UTF-8");
                return KgslabStatus::InvalidUtf8;
            };
            config.out_dir = PathBuf::from(dir);
        }
        match run(&config) {
            Ok(outcome) if outcome.pass => KgslabStatus::Ok,
            Ok(_) => {
                set_error("one or more pass criteria failed; see summary.json");
                KgslabStatus::FailedCriteria
            }
            Err(e) => {
                set_error(e.to_string());
                KgslabStatus::RuntimeError
            }
        }
    })
}
