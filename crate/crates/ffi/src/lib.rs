//! C ABI over `icr-core`.
//!
//! Every entry point returns an [`IcrStatus`]; on failure the message is
//! available from [`icr_last_error`] on the same thread. Objects are
//! handed out as opaque pointers that must be released with the matching
//! `*_free` function. Matrices are 4x4, row-major.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use icr_core::config::RunConfig;
use icr_core::explore::{self, EpisodeLog, Strategy};
use icr_core::fov::{self, ConeFov};
use icr_core::icr::{ControlLimits, ControlSequence, PlanningProblem, StepPolicy};
use icr_core::liegroup::{self, Pose, Twist};
use icr_core::mapcore::MapBelief;
use icr_core::{pgm, Error, GridMap};
use nalgebra::{Matrix4, Vector2};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NumericalFailure = 4,
    MapFormat = 5,
    Config = 6,
    Io = 7,
    Panic = 8,
}

/// Cone field-of-view parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IcrFovParams {
    pub height: c_double,
    pub half_angle: c_double,
    pub sigma: c_double,
    pub kappa: c_double,
}

/// One executed step of an episode.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IcrStepRecord {
    pub step: usize,
    pub x: c_double,
    pub y: c_double,
    pub theta: c_double,
    pub reward: c_double,
    pub replanned: bool,
}

/// Occupancy grid.
pub struct IcrMap {
    inner: GridMap,
}

/// Gaussian map belief.
pub struct IcrBelief {
    inner: MapBelief,
}

/// Completed exploration episode.
pub struct IcrEpisode {
    inner: EpisodeLog,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> IcrStatus {
    match e {
        Error::NonFinite(_) | Error::InvalidPose(_) | Error::InvalidParameter(_) => {
            IcrStatus::InvalidArgument
        }
        Error::DimensionMismatch { .. } => IcrStatus::DimensionMismatch,
        Error::NotPositiveDefinite(_) | Error::Singular(_) | Error::CoincidentTarget(_) => {
            IcrStatus::NumericalFailure
        }
        Error::MapFormat { .. } => IcrStatus::MapFormat,
        Error::Config(_) => IcrStatus::Config,
        Error::Io(_) => IcrStatus::Io,
    }
}

struct Fail(IcrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(IcrStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(IcrStatus::InvalidArgument, msg.into())
}

/// Runs `f`, records any error or panic and converts it to a status.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> IcrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            IcrStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            IcrStatus::Panic
        }
    }
}

unsafe fn read_array<const N: usize>(p: *const c_double, what: &str) -> Result<[f64; N], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let mut out = [0.0; N];
    ptr::copy_nonoverlapping(p, out.as_mut_ptr(), N);
    Ok(out)
}

unsafe fn write_matrix(m: &Matrix4<f64>, out: *mut c_double) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    for r in 0..4 {
        for c in 0..4 {
            *out.add(4 * r + c) = m[(r, c)];
        }
    }
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

fn fov_from(p: &IcrFovParams) -> Result<ConeFov, Fail> {
    Ok(ConeFov::new(p.height, p.half_angle, p.sigma, p.kappa)?)
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn icr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn icr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default field of view: height 3, half-angle pi/6, sigma 1, kappa 0.5.
#[no_mangle]
pub extern "C" fn icr_fov_default() -> IcrFovParams {
    let f = ConeFov::default();
    IcrFovParams {
        height: f.height(),
        half_angle: f.half_angle(),
        sigma: f.sigma(),
        kappa: f.kappa(),
    }
}

/// `exp(tau u^)` for a twist `u = [vx, vy, vz, wx, wy, wz]`.
///
/// # Safety
/// `u` must point to 6 doubles and `out` to 16 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn icr_exp_se3(tau: c_double, u: *const c_double, out: *mut c_double) -> IcrStatus {
    guard(|| {
        let u = Twist::from_array(read_array::<6>(u, "u")?)?;
        write_matrix(liegroup::exp_se3(tau, &u).matrix(), out)
    })
}

/// Derivative of `exp(tau u^)` with respect to twist component `index`.
///
/// # Safety
/// `u` must point to 6 doubles and `out` to 16 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn icr_dexp(
    tau: c_double,
    u: *const c_double,
    index: usize,
    out: *mut c_double,
) -> IcrStatus {
    guard(|| {
        let u = Twist::from_array(read_array::<6>(u, "u")?)?;
        if index >= 6 {
            return Err(invalid(format!("component index {index} out of range")));
        }
        write_matrix(&liegroup::dexp_du(tau, &u, index), out)
    })
}

/// Signed distance from the body-frame point `(qx, qy)` to the projected
/// cone, negative inside, and its gradient.
///
/// # Safety
/// `fov` must be valid; `distance` and `grad` (2 doubles) must be writable.
#[no_mangle]
pub unsafe extern "C" fn icr_sdf(
    fov: *const IcrFovParams,
    qx: c_double,
    qy: c_double,
    distance: *mut c_double,
    grad: *mut c_double,
) -> IcrStatus {
    guard(|| {
        let fov = fov_from(fov.as_ref().ok_or_else(|| null("fov"))?)?;
        if distance.is_null() || grad.is_null() {
            return Err(null("output"));
        }
        let e = fov::sdf_cone2d(&Vector2::new(qx, qy), &fov);
        *distance = e.distance;
        *grad = e.grad.x;
        *grad.add(1) = e.grad.y;
        Ok(())
    })
}

/// Loads a P2 graymap as an occupancy grid.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn icr_map_load_pgm(
    path: *const c_char,
    resolution: c_double,
    origin_x: c_double,
    origin_y: c_double,
    out: *mut *mut IcrMap,
) -> IcrStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let map = pgm::load_map(Path::new(path), resolution, Vector2::new(origin_x, origin_y))?;
        *out = Box::into_raw(Box::new(IcrMap { inner: map }));
        Ok(())
    })
}

/// Built-in room layout with `width` columns and `height` rows.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn icr_map_synthetic_room(
    width: usize,
    height: usize,
    resolution: c_double,
    out: *mut *mut IcrMap,
) -> IcrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if width < 8 || height < 8 {
            return Err(invalid("synthetic room needs at least 8x8 cells"));
        }
        let map = GridMap::synthetic_room(width, height, resolution)?;
        *out = Box::into_raw(Box::new(IcrMap { inner: map }));
        Ok(())
    })
}

/// Number of cells, or 0 for a null handle.
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn icr_map_cell_count(map: *const IcrMap) -> usize {
    map.as_ref().map_or(0, |m| m.inner.len())
}

/// # Safety
/// `map` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn icr_map_free(map: *mut IcrMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Zero-mean belief with covariance `variance * I` in diagonal storage.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn icr_belief_new(cells: usize, variance: c_double, out: *mut *mut IcrBelief) -> IcrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(invalid("variance must be positive"));
        }
        let b = MapBelief::diagonal_prior(cells, variance)?;
        *out = Box::into_raw(Box::new(IcrBelief { inner: b }));
        Ok(())
    })
}

/// `log det` of the belief information.
///
/// # Safety
/// `belief` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn icr_belief_log_det(belief: *const IcrBelief, out: *mut c_double) -> IcrStatus {
    guard(|| {
        let b = belief.as_ref().ok_or_else(|| null("belief"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = b.inner.log_det_info()?;
        Ok(())
    })
}

/// # Safety
/// `belief` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn icr_belief_free(belief: *mut IcrBelief) {
    if !belief.is_null() {
        drop(Box::from_raw(belief));
    }
}

/// Optimizes `horizon` planar controls in place, starting from the pose
/// `(x, y, theta)`, against the belief's information over the map cells.
/// `controls` holds `horizon * 6` doubles, one twist per row. The final
/// reward is written to `reward`.
///
/// # Safety
/// All pointers must be valid; `controls` must hold `horizon * 6` doubles.
#[no_mangle]
pub unsafe extern "C" fn icr_plan(
    map: *const IcrMap,
    belief: *const IcrBelief,
    fov: *const IcrFovParams,
    x: c_double,
    y: c_double,
    theta: c_double,
    tau: c_double,
    horizon: usize,
    iterations: usize,
    controls: *mut c_double,
    reward: *mut c_double,
) -> IcrStatus {
    guard(|| {
        let map = map.as_ref().ok_or_else(|| null("map"))?;
        let belief = belief.as_ref().ok_or_else(|| null("belief"))?;
        let fov = fov_from(fov.as_ref().ok_or_else(|| null("fov"))?)?;
        let reward = reward.as_mut().ok_or_else(|| null("reward"))?;
        if controls.is_null() {
            return Err(null("controls"));
        }
        if horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        let rows = std::slice::from_raw_parts_mut(controls, horizon * 6);
        let twists = rows
            .chunks(6)
            .map(|c| Twist::from_array([c[0], c[1], c[2], c[3], c[4], c[5]]))
            .collect::<Result<Vec<_>, _>>()?;
        let u0 = ControlSequence::new(twists, tau)?;
        let problem = PlanningProblem {
            start: Pose::planar(x, y, theta),
            prior: belief.inner.info(),
            positions: map.inner.positions(),
            fov: &fov,
        };
        let result = problem.optimize(&u0, &StepPolicy::default(), &ControlLimits::planar(), iterations)?;
        for (dst, src) in rows.chunks_mut(6).zip(result.controls.rows()) {
            dst.copy_from_slice(&src);
        }
        *reward = result.final_reward();
        Ok(())
    })
}

/// Runs one episode on `map`. `config_json` uses the same schema as the
/// command-line configuration (NULL for defaults); `strategy` is one of
/// `icr`, `icr_frontier`, `frontier`, `random`.
///
/// # Safety
/// `map` must be live, strings NUL-terminated or null, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn icr_episode_run(
    map: *const IcrMap,
    config_json: *const c_char,
    strategy: *const c_char,
    seed: u64,
    out: *mut *mut IcrEpisode,
) -> IcrStatus {
    guard(|| {
        let map = map.as_ref().ok_or_else(|| null("map"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = if config_json.is_null() {
            RunConfig::default()
        } else {
            RunConfig::from_json(c_str(config_json, "config_json")?)?
        };
        let strategy: Strategy = c_str(strategy, "strategy")?.parse()?;
        let log = explore::run_episode(&cfg.episode_config(strategy, seed), &map.inner)?;
        *out = Box::into_raw(Box::new(IcrEpisode { inner: log }));
        Ok(())
    })
}

/// Number of executed steps, or 0 for a null handle.
///
/// # Safety
/// `episode` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn icr_episode_len(episode: *const IcrEpisode) -> usize {
    episode.as_ref().map_or(0, |e| e.inner.records.len())
}

/// Copies record `index` into `out`.
///
/// # Safety
/// `episode` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn icr_episode_record(
    episode: *const IcrEpisode,
    index: usize,
    out: *mut IcrStepRecord,
) -> IcrStatus {
    guard(|| {
        let e = episode.as_ref().ok_or_else(|| null("episode"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = e
            .inner
            .records
            .get(index)
            .ok_or_else(|| invalid(format!("record {index} out of range")))?;
        *out = IcrStepRecord {
            step: r.step,
            x: r.x,
            y: r.y,
            theta: r.theta,
            reward: r.reward,
            replanned: r.replanned,
        };
        Ok(())
    })
}

/// # Safety
/// `episode` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn icr_episode_free(episode: *mut IcrEpisode) {
    if !episode.is_null() {
        drop(Box::from_raw(episode));
    }
}
