//! C ABI for `randjulia`.
//!
//! Regions, sequences and tail curves are opaque handles created by a
//! `*_parse` or `*_sample` call and released with the matching `*_free`.
//! Every function returns an [`RjStatus`]; on failure a description is
//! available from [`rj_last_error_message`] on the same thread. Results are
//! written through out-pointers, which are left untouched on failure.
//!
//! Strings use the command-line syntax, e.g. `disk:1`, `union:[disk:0.5,cardioid]`,
//! `constant:0.3` or `random:disk:1:7`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use randjulia::cli::{parse_region, parse_sequence};
use randjulia::{
    components, escape_time, fit_gamma, green, grid_escape_field, sample_tail, Complex, Constants,
    EscapeTime, GreenOutcome, GridBox, ParamSequence, Region, StatsError, TailCurve, TailMode,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RjStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    InsufficientData = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RjComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex> for RjComplex {
    fn from(c: Complex) -> Self {
        RjComplex { re: c.re, im: c.im }
    }
}

impl From<RjComplex> for Complex {
    fn from(c: RjComplex) -> Self {
        Complex::new(c.re, c.im)
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RjConstants {
    pub r: f64,
    pub r0: f64,
    pub tilde_r0: f64,
    pub g: f64,
}

impl From<Constants> for RjConstants {
    fn from(k: Constants) -> Self {
        RjConstants {
            r: k.r,
            r0: k.r0,
            tilde_r0: k.tilde_r0,
            g: k.g,
        }
    }
}

/// `escaped` is 1 when the orbit left the disk of radius R0 at step `k`;
/// otherwise `k` holds the horizon.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RjEscape {
    pub escaped: i32,
    pub k: u32,
    pub point: RjComplex,
}

/// `value` and `abs_error` are 0 for orbits bounded through the horizon.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RjGreen {
    pub escaped: i32,
    pub k: u32,
    pub value: f64,
    pub abs_error: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RjGammaFit {
    pub gamma_hat: f64,
    pub intercept: f64,
    pub k_first: u32,
    pub k_last: u32,
    pub points: usize,
    pub rms_residual: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RjComponents {
    pub component_count: usize,
    pub largest: usize,
    pub max_diameter: f64,
}

pub struct RjRegion(Region);

pub struct RjSequence(ParamSequence);

pub struct RjTailCurve(TailCurve);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<Vec<u8>>) {
    let mut bytes = message.into();
    bytes.retain(|&b| b != 0);
    let text = CString::new(bytes).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn fail(status: RjStatus, message: impl Into<Vec<u8>>) -> RjStatus {
    set_error(message);
    status
}

fn guard(body: impl FnOnce() -> RjStatus) -> RjStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let text = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal error".to_string());
            fail(RjStatus::Panic, text)
        }
    }
}

unsafe fn text<'a>(ptr: *const c_char) -> Result<&'a str, RjStatus> {
    if ptr.is_null() {
        return Err(fail(RjStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(RjStatus::Parse, "string is not UTF-8"))
}

macro_rules! check_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            return fail(RjStatus::NullPointer, concat!("null argument `", stringify!($p), "`"));
        })+
    };
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// The last error message on this thread. The pointer stays valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rj_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rj_constants_derive(r: f64, out: *mut RjConstants) -> RjStatus {
    guard(|| {
        check_null!(out);
        match Constants::derive(r) {
            Ok(k) => {
                *out = k.into();
                RjStatus::Ok
            }
            Err(e) => fail(RjStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `source` must be a nul-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rj_region_parse(source: *const c_char, out: *mut *mut RjRegion) -> RjStatus {
    guard(|| {
        check_null!(out);
        let source = try_status!(text(source));
        match parse_region(source) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(RjRegion(r)));
                RjStatus::Ok
            }
            Err(e) => fail(RjStatus::Parse, e.to_string()),
        }
    })
}

/// # Safety
/// `region` must come from [`rj_region_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rj_region_free(region: *mut RjRegion) {
    if !region.is_null() {
        drop(Box::from_raw(region));
    }
}

/// # Safety
/// `region` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rj_region_contains(
    region: *const RjRegion,
    c: RjComplex,
    out: *mut i32,
) -> RjStatus {
    guard(|| {
        check_null!(region, out);
        *out = (*region).0.contains(c.into()) as i32;
        RjStatus::Ok
    })
}

/// # Safety
/// `region` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rj_region_bounding_radius(region: *const RjRegion, out: *mut f64) -> RjStatus {
    guard(|| {
        check_null!(region, out);
        *out = (*region).0.bounding_radius();
        RjStatus::Ok
    })
}

/// Uniform draw from the region, a pure function of its three counters.
///
/// # Safety
/// `region` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rj_region_sample(
    region: *const RjRegion,
    master_seed: u64,
    stream: u64,
    draw: u64,
    out: *mut RjComplex,
) -> RjStatus {
    guard(|| {
        check_null!(region, out);
        *out = (*region).0.sample(master_seed, stream, draw).into();
        RjStatus::Ok
    })
}

/// # Safety
/// `source` must be a nul-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rj_sequence_parse(
    source: *const c_char,
    master_seed: u64,
    out: *mut *mut RjSequence,
) -> RjStatus {
    guard(|| {
        check_null!(out);
        let source = try_status!(text(source));
        match parse_sequence(source, master_seed) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(RjSequence(s)));
                RjStatus::Ok
            }
            Err(e) => fail(RjStatus::Parse, e.to_string()),
        }
    })
}

/// # Safety
/// `seq` must come from [`rj_sequence_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rj_sequence_free(seq: *mut RjSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// # Safety
/// `seq` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rj_sequence_at(seq: *const RjSequence, i: u64, out: *mut RjComplex) -> RjStatus {
    guard(|| {
        check_null!(seq, out);
        *out = (*seq).0.at(i).into();
        RjStatus::Ok
    })
}

/// # Safety
/// `seq` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rj_sequence_bound(seq: *const RjSequence, out: *mut f64) -> RjStatus {
    guard(|| {
        check_null!(seq, out);
        *out = (*seq).0.bound();
        RjStatus::Ok
    })
}

fn constants_for(seq: &ParamSequence, r: f64) -> Result<Constants, RjStatus> {
    if r < seq.bound() {
        return Err(fail(
            RjStatus::InvalidArgument,
            format!("R = {r} is below the sequence bound {}", seq.bound()),
        ));
    }
    Constants::derive(r).map_err(|e| fail(RjStatus::InvalidArgument, e.to_string()))
}

/// # Safety
/// `seq` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rj_escape_time(
    seq: *const RjSequence,
    z: RjComplex,
    r: f64,
    n_max: u32,
    out: *mut RjEscape,
) -> RjStatus {
    guard(|| {
        check_null!(seq, out);
        let consts = try_status!(constants_for(&(*seq).0, r));
        *out = match escape_time(&(*seq).0, z.into(), &consts, n_max) {
            EscapeTime::Escaped { k, point } => RjEscape {
                escaped: 1,
                k,
                point: point.into(),
            },
            EscapeTime::Bounded { horizon } => RjEscape {
                escaped: 0,
                k: horizon,
                point: RjComplex { re: 0.0, im: 0.0 },
            },
        };
        RjStatus::Ok
    })
}

/// # Safety
/// `seq` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rj_green(
    seq: *const RjSequence,
    z: RjComplex,
    r: f64,
    n_max: u32,
    tol: f64,
    out: *mut RjGreen,
) -> RjStatus {
    guard(|| {
        check_null!(seq, out);
        if tol.is_nan() || tol <= 0.0 {
            return fail(RjStatus::InvalidArgument, "tol must be positive");
        }
        let consts = try_status!(constants_for(&(*seq).0, r));
        *out = match green(&(*seq).0, z.into(), &consts, n_max, tol) {
            GreenOutcome::Escaped { k, eval } => RjGreen {
                escaped: 1,
                k,
                value: eval.value,
                abs_error: eval.abs_error,
            },
            GreenOutcome::Bounded { horizon } => RjGreen {
                escaped: 0,
                k: horizon,
                value: 0.0,
                abs_error: 0.0,
            },
        };
        RjStatus::Ok
    })
}

/// Connected components of the escape-time grid over the square with
/// center `center` and half-width `half_width`.
///
/// # Safety
/// `seq` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rj_components(
    seq: *const RjSequence,
    r: f64,
    center: RjComplex,
    half_width: f64,
    resolution: usize,
    n_max: u32,
    out: *mut RjComponents,
) -> RjStatus {
    guard(|| {
        check_null!(seq, out);
        if resolution < 2 || half_width.is_nan() || half_width <= 0.0 {
            return fail(RjStatus::InvalidArgument, "need resolution >= 2 and half_width > 0");
        }
        let consts = try_status!(constants_for(&(*seq).0, r));
        let grid = GridBox {
            center: center.into(),
            half_width,
        };
        let report = components(&grid_escape_field(&(*seq).0, &consts, grid, resolution, n_max));
        *out = RjComponents {
            component_count: report.component_count,
            largest: report.sizes.first().copied().unwrap_or(0),
            max_diameter: report.max_diameter,
        };
        RjStatus::Ok
    })
}

/// Survival curve of the critical escape time (`fast_escape_green` = 0) or
/// of the fast-escape event (`fast_escape_green` = 1).
///
/// # Safety
/// `region` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rj_tail_sample(
    region: *const RjRegion,
    samples: u64,
    k_max: u32,
    n_max: u32,
    master_seed: u64,
    fast_escape_green: i32,
    out: *mut *mut RjTailCurve,
) -> RjStatus {
    guard(|| {
        check_null!(region, out);
        if samples == 0 || k_max == 0 || k_max > n_max {
            return fail(RjStatus::InvalidArgument, "need samples > 0 and 0 < k_max <= n_max");
        }
        let mode = if fast_escape_green != 0 {
            TailMode::FastEscapeGreen
        } else {
            TailMode::EscapeTime
        };
        let curve = sample_tail(&(*region).0, samples, k_max, n_max, master_seed, mode);
        *out = Box::into_raw(Box::new(RjTailCurve(curve)));
        RjStatus::Ok
    })
}

/// # Safety
/// `curve` must come from [`rj_tail_sample`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rj_tail_free(curve: *mut RjTailCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Number of levels in the curve, `k_max + 1`.
///
/// # Safety
/// `curve` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rj_tail_len(curve: *const RjTailCurve, out: *mut usize) -> RjStatus {
    guard(|| {
        check_null!(curve, out);
        *out = (*curve).0.survival.len();
        RjStatus::Ok
    })
}

/// # Safety
/// `curve` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rj_tail_survival(curve: *const RjTailCurve, k: usize, out: *mut f64) -> RjStatus {
    guard(|| {
        check_null!(curve, out);
        let curve = &(*curve).0;
        match curve.survival.get(k) {
            Some(&p) => {
                *out = p;
                RjStatus::Ok
            }
            None => fail(RjStatus::InvalidArgument, format!("level {k} is beyond k_max")),
        }
    })
}

/// # Safety
/// `curve` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rj_tail_fit_gamma(
    curve: *const RjTailCurve,
    k_lo: u32,
    min_survivors: u64,
    out: *mut RjGammaFit,
) -> RjStatus {
    guard(|| {
        check_null!(curve, out);
        match fit_gamma(&(*curve).0, k_lo, min_survivors) {
            Ok(fit) => {
                *out = RjGammaFit {
                    gamma_hat: fit.gamma_hat,
                    intercept: fit.intercept,
                    k_first: fit.fit_range.0,
                    k_last: fit.fit_range.1,
                    points: fit.points,
                    rms_residual: fit.rms_residual,
                };
                RjStatus::Ok
            }
            Err(e @ StatsError::InsufficientData { .. }) => fail(RjStatus::InsufficientData, e.to_string()),
            Err(e) => fail(RjStatus::InvalidArgument, e.to_string()),
        }
    })
}
