//! C interface to tailpoint.
//!
//! Objects are opaque handles created by `tp_*_new` and released with the
//! matching `tp_*_free`. Every fallible call returns a `TpStatus`; on failure
//! `tp_last_error_message` describes the most recent error on the calling
//! thread. Strings returned by the library are freed with `tp_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tailpoint::delimit::PointEntry;
use tailpoint::kde::{sample_delimiting_points, Bandwidths, KdeModel};
use tailpoint::{make_bundle, report, DelimitingReport, DensityBundle, DistributionSpec, Side, TailError};

pub const TP_SIDE_LEFT: u32 = 0;
pub const TP_SIDE_RIGHT: u32 = 1;

pub const TP_POINT_PINF: u32 = 0;
pub const TP_POINT_PMCONV: u32 = 1;
pub const TP_POINT_PMCURV: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad input: unparsable spec, invalid parameter, bad data.
    InvalidArgument = 2,
    /// A numerical routine failed to converge.
    Numeric = 3,
    /// The requested point does not exist for this distribution.
    Absent = 4,
    /// Internal error; the library caught a panic.
    Panic = 5,
}

/// A distribution with its density, derivatives, cdf and quantile.
pub struct TpDistribution(DensityBundle);

/// Delimiting points of a distribution on both sides of the mode.
pub struct TpReport(DelimitingReport);

/// Kernel estimate of a density or one of its first two derivatives.
pub struct TpKde(KdeModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: TpStatus, msg: impl Into<String>) -> TpStatus {
    set_error(msg.into());
    status
}

fn from_error(e: TailError) -> TpStatus {
    let status = if e.is_input_error() {
        TpStatus::InvalidArgument
    } else {
        TpStatus::Numeric
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> TpStatus) -> TpStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(TpStatus::Panic, "internal error"))
}

fn side_from(side: u32) -> Option<Side> {
    match side {
        TP_SIDE_LEFT => Some(Side::Left),
        TP_SIDE_RIGHT => Some(Side::Right),
        _ => None,
    }
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, TpStatus> {
    if s.is_null() {
        return Err(fail(TpStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(TpStatus::InvalidArgument, "string is not valid UTF-8"))
}

macro_rules! deref {
    ($p:expr) => {{
        if $p.is_null() {
            return fail(TpStatus::NullPointer, concat!("null argument `", stringify!($p), "`"));
        }
        &*$p
    }};
}

macro_rules! out {
    ($p:expr) => {{
        if $p.is_null() {
            return fail(TpStatus::NullPointer, concat!("null output `", stringify!($p), "`"));
        }
        &mut *$p
    }};
}

macro_rules! try_tp {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

/// Message for the last failed call on this thread, or NULL. Free with
/// `tp_string_free`.
#[no_mangle]
pub extern "C" fn tp_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a spec such as `"studentt(nu=3)"` and build the distribution.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tp_distribution_new(spec: *const c_char, out: *mut *mut TpDistribution) -> TpStatus {
    guard(|| {
        let out = out!(out);
        *out = ptr::null_mut();
        let spec = match text(spec) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let parsed: DistributionSpec = try_tp!(spec.parse());
        let bundle = try_tp!(make_bundle(&parsed));
        *out = Box::into_raw(Box::new(TpDistribution(bundle)));
        TpStatus::Ok
    })
}

/// # Safety
/// `d` must be NULL or a handle from `tp_distribution_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tp_distribution_free(d: *mut TpDistribution) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Density (`order` 0) or its first or second derivative at `x`.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tp_distribution_density(
    d: *const TpDistribution,
    order: u32,
    x: f64,
    out: *mut f64,
) -> TpStatus {
    guard(|| {
        let d = &deref!(d).0;
        let out = out!(out);
        *out = match order {
            0 => d.pdf(x),
            1 => d.dpdf(x),
            2 => d.d2pdf(x),
            _ => {
                return fail(
                    TpStatus::InvalidArgument,
                    format!("derivative order {order} not in 0..=2"),
                )
            }
        };
        TpStatus::Ok
    })
}

/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tp_distribution_cdf(d: *const TpDistribution, x: f64, out: *mut f64) -> TpStatus {
    guard(|| {
        let d = &deref!(d).0;
        *out!(out) = d.cdf(x);
        TpStatus::Ok
    })
}

/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tp_distribution_quantile(d: *const TpDistribution, p: f64, out: *mut f64) -> TpStatus {
    guard(|| {
        let d = &deref!(d).0;
        let out = out!(out);
        *out = try_tp!(d.quantile(p));
        TpStatus::Ok
    })
}

/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tp_distribution_mode(d: *const TpDistribution, out: *mut f64) -> TpStatus {
    guard(|| {
        let d = &deref!(d).0;
        *out!(out) = d.mode();
        TpStatus::Ok
    })
}

/// Write `count` draws seeded by `seed` into `buf`.
///
/// # Safety
/// `d` must be a live handle; `buf` must hold `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn tp_distribution_sample(
    d: *const TpDistribution,
    count: usize,
    seed: u64,
    buf: *mut f64,
) -> TpStatus {
    guard(|| {
        let d = &deref!(d).0;
        if count == 0 {
            return fail(TpStatus::InvalidArgument, "count must be at least 1");
        }
        if buf.is_null() {
            return fail(TpStatus::NullPointer, "null output `buf`");
        }
        let draws = d.sample(count, seed);
        std::slice::from_raw_parts_mut(buf, count).copy_from_slice(&draws);
        TpStatus::Ok
    })
}

/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tp_report_new(d: *const TpDistribution, out: *mut *mut TpReport) -> TpStatus {
    guard(|| {
        let d = &deref!(d).0;
        let out = out!(out);
        *out = ptr::null_mut();
        let r = try_tp!(report(d.spec()));
        *out = Box::into_raw(Box::new(TpReport(r)));
        TpStatus::Ok
    })
}

/// # Safety
/// `r` must be NULL or a handle from `tp_report_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tp_report_free(r: *mut TpReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tp_report_mode(r: *const TpReport, out: *mut f64) -> TpStatus {
    guard(|| {
        let r = &deref!(r).0;
        *out!(out) = r.mode;
        TpStatus::Ok
    })
}

/// Location and cdf of one point (`TP_POINT_*`) on one side (`TP_SIDE_*`).
/// Returns `Absent` when the distribution has no such point.
///
/// # Safety
/// `r` must be a live handle; `x` and `cdf` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tp_report_point(
    r: *const TpReport,
    side: u32,
    point: u32,
    x: *mut f64,
    cdf: *mut f64,
) -> TpStatus {
    guard(|| {
        let r = &deref!(r).0;
        let (x, cdf) = (out!(x), out!(cdf));
        let Some(side) = side_from(side) else {
            return fail(TpStatus::InvalidArgument, format!("unknown side {side}"));
        };
        let s = r.side(side);
        let entry: &PointEntry = match point {
            TP_POINT_PINF => &s.pinf,
            TP_POINT_PMCONV => &s.pmconv,
            TP_POINT_PMCURV => &s.pmcurv,
            _ => return fail(TpStatus::InvalidArgument, format!("unknown point {point}")),
        };
        match (entry.x(), entry.cdf()) {
            (Some(v), Some(c)) => {
                *x = v;
                *cdf = c;
                TpStatus::Ok
            }
            _ => fail(TpStatus::Absent, "point does not exist for this distribution"),
        }
    })
}

/// The report as a JSON document, or NULL on failure. Free with
/// `tp_string_free`.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tp_report_to_json(r: *const TpReport) -> *mut c_char {
    if r.is_null() {
        fail(TpStatus::NullPointer, "null argument `r`");
        return ptr::null_mut();
    }
    catch_unwind(AssertUnwindSafe(|| {
        CString::new((*r).0.to_json().to_string()).map_or(ptr::null_mut(), CString::into_raw)
    }))
    .unwrap_or_else(|_| {
        fail(TpStatus::Panic, "internal error");
        ptr::null_mut()
    })
}

unsafe fn data<'a>(values: *const f64, len: usize) -> Result<&'a [f64], TpStatus> {
    if values.is_null() {
        return Err(fail(TpStatus::NullPointer, "null data"));
    }
    Ok(std::slice::from_raw_parts(values, len))
}

/// Kernel estimate of derivative `order` (0..=2) with bandwidth `h`. The
/// data are copied.
///
/// # Safety
/// `values` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tp_kde_new(
    values: *const f64,
    len: usize,
    order: u32,
    h: f64,
    out: *mut *mut TpKde,
) -> TpStatus {
    guard(|| {
        let out = out!(out);
        *out = ptr::null_mut();
        let values = match data(values, len) {
            Ok(v) => v,
            Err(status) => return status,
        };
        let model = try_tp!(KdeModel::new(values, order as usize, h));
        *out = Box::into_raw(Box::new(TpKde(model)));
        TpStatus::Ok
    })
}

/// # Safety
/// `k` must be NULL or a handle from `tp_kde_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tp_kde_free(k: *mut TpKde) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// # Safety
/// `k` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tp_kde_eval(k: *const TpKde, x: f64, out: *mut f64) -> TpStatus {
    guard(|| {
        let k = &deref!(k).0;
        *out!(out) = k.eval(x);
        TpStatus::Ok
    })
}

/// Sample inflection point (bandwidth `h1`) and point of maximum convexity
/// (bandwidth `h2`) on one side of `mode`.
///
/// # Safety
/// `values` must point to `len` doubles; `pinf` and `pmconv` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tp_sample_points(
    values: *const f64,
    len: usize,
    mode: f64,
    side: u32,
    h1: f64,
    h2: f64,
    pinf: *mut f64,
    pmconv: *mut f64,
) -> TpStatus {
    guard(|| {
        let (pinf, pmconv) = (out!(pinf), out!(pmconv));
        let values = match data(values, len) {
            Ok(v) => v,
            Err(status) => return status,
        };
        let Some(side) = side_from(side) else {
            return fail(TpStatus::InvalidArgument, format!("unknown side {side}"));
        };
        let p = try_tp!(sample_delimiting_points(values, mode, side, Bandwidths { h1, h2 }));
        *pinf = p.pinf;
        *pmconv = p.pmconv;
        TpStatus::Ok
    })
}
