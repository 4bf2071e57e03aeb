//! C ABI over the Bergman kernel / extremal function laboratory.
//!
//! Conventions:
//!
//! * every fallible call returns a [`BxStatus`]; `BX_STATUS_OK` is zero;
//! * on failure a thread-local message is available through
//!   [`bx_last_error_message`] until the next failing call on the same
//!   thread;
//! * node sets and orthonormalized sections are opaque handles created and
//!   released by the paired `*_free` functions; handles are validated by a
//!   magic tag, so stale or foreign pointers are rejected rather than
//!   dereferenced blindly;
//! * points are passed as `(chart, re, im)` with chart `0` for the
//!   coordinate centered at zero and `1` for the coordinate centered at
//!   infinity.

use bergman_extremal::{
    extremal_value, orthonormalize, phi_log, OrthonormalSections, PhiOptions, ProjectivePoint,
    Scenario, WeightedCompactSet,
};
use num_complex::Complex64;
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// ABI revision; bump on any incompatible change.
pub const BX_ABI_VERSION: u32 = 1;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BxStatus {
    BxStatusOk = 0,
    BxStatusNullPointer = 1,
    BxStatusInvalidHandle = 2,
    BxStatusInvalidParameter = 3,
    BxStatusSingular = 4,
    BxStatusUnsupported = 5,
    BxStatusRuntimeError = 6,
    BxStatusPanicked = 7,
}

/// Opaque handle to a weighted node set.
#[repr(C)]
pub struct BxSet {
    _opaque: [u8; 0],
}

/// Opaque handle to an orthonormalized section family.
#[repr(C)]
pub struct BxSections {
    _opaque: [u8; 0],
}

const SET_MAGIC: u32 = 0x4258_5345;
const SECTIONS_MAGIC: u32 = 0x4258_534F;
const FREED_MAGIC: u32 = 0xdead_dead;

struct SetInner {
    magic: u32,
    set: WeightedCompactSet,
}

struct SectionsInner {
    magic: u32,
    sections: OrthonormalSections,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_for(err: &bergman_extremal::Error) -> BxStatus {
    use bergman_extremal::Error as E;
    set_error(&err.to_string());
    match err {
        E::InvalidParameter(_) | E::Config(_) => BxStatus::BxStatusInvalidParameter,
        E::Singular(_) => BxStatus::BxStatusSingular,
        E::UnsupportedOracle(_) => BxStatus::BxStatusUnsupported,
        _ => BxStatus::BxStatusRuntimeError,
    }
}

fn guarded(f: impl FnOnce() -> BxStatus) -> BxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            BxStatus::BxStatusPanicked
        }
    }
}

/// Last error message for this thread (empty string when none). The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

fn point_from(chart: c_int, re: f64, im: f64) -> Result<ProjectivePoint, BxStatus> {
    if !(re.is_finite() && im.is_finite()) {
        set_error("point coordinates must be finite");
        return Err(BxStatus::BxStatusInvalidParameter);
    }
    let c = Complex64::new(re, im);
    match chart {
        0 => Ok(ProjectivePoint::from_zero_chart(c)),
        1 => Ok(ProjectivePoint::from_infinity_chart(c)),
        _ => {
            set_error("chart must be 0 (zero chart) or 1 (infinity chart)");
            Err(BxStatus::BxStatusInvalidParameter)
        }
    }
}

fn scenario_from(code: c_int) -> Result<Scenario, BxStatus> {
    match code {
        0 => Ok(Scenario::Circle),
        1 => Ok(Scenario::Interval),
        2 => Ok(Scenario::AnnulusPair),
        _ => {
            set_error("scenario must be 0 (circle), 1 (interval) or 2 (annulus_pair)");
            Err(BxStatus::BxStatusInvalidParameter)
        }
    }
}

unsafe fn set_ref<'a>(p: *const BxSet) -> Result<&'a SetInner, BxStatus> {
    if p.is_null() {
        set_error("null set handle");
        return Err(BxStatus::BxStatusNullPointer);
    }
    let inner = &*(p as *const SetInner);
    if inner.magic != SET_MAGIC {
        set_error("invalid or freed set handle");
        return Err(BxStatus::BxStatusInvalidHandle);
    }
    Ok(inner)
}

unsafe fn sections_ref<'a>(p: *const BxSections) -> Result<&'a SectionsInner, BxStatus> {
    if p.is_null() {
        set_error("null sections handle");
        return Err(BxStatus::BxStatusNullPointer);
    }
    let inner = &*(p as *const SectionsInner);
    if inner.magic != SECTIONS_MAGIC {
        set_error("invalid or freed sections handle");
        return Err(BxStatus::BxStatusInvalidHandle);
    }
    Ok(inner)
}

fn emit_set(out: *mut *mut BxSet, set: WeightedCompactSet) -> BxStatus {
    let boxed = Box::new(SetInner {
        magic: SET_MAGIC,
        set,
    });
    unsafe {
        *out = Box::into_raw(boxed) as *mut BxSet;
    }
    BxStatus::BxStatusOk
}

/// Equally spaced nodes with equal masses on a circle of the given radius
/// (between 0 exclusive and 1 inclusive), zero node weight.
#[no_mangle]
pub extern "C" fn bx_set_circle(
    node_count: usize,
    radius: f64,
    out: *mut *mut BxSet,
) -> BxStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return BxStatus::BxStatusNullPointer;
        }
        match bergman_extremal::circle_set(node_count, radius) {
            Ok(set) => emit_set(out, set),
            Err(e) => status_for(&e),
        }
    })
}

/// Chebyshev nodes with equal masses on the segment [-1, 1], node weight
/// canceling the field weight.
#[no_mangle]
pub extern "C" fn bx_set_interval(node_count: usize, out: *mut *mut BxSet) -> BxStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return BxStatus::BxStatusNullPointer;
        }
        match bergman_extremal::interval_set(node_count) {
            Ok(set) => emit_set(out, set),
            Err(e) => status_for(&e),
        }
    })
}

/// Two concentric equally weighted circles (an even node count split
/// between them), zero node weight.
#[no_mangle]
pub extern "C" fn bx_set_annulus_pair(
    node_count: usize,
    r_inner: f64,
    r_outer: f64,
    out: *mut *mut BxSet,
) -> BxStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return BxStatus::BxStatusNullPointer;
        }
        match bergman_extremal::measure::annulus_pair_set(node_count, r_inner, r_outer) {
            Ok(set) => emit_set(out, set),
            Err(e) => status_for(&e),
        }
    })
}

/// Number of nodes in the set.
#[no_mangle]
pub extern "C" fn bx_set_node_count(set: *const BxSet, out: *mut usize) -> BxStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return BxStatus::BxStatusNullPointer;
        }
        match unsafe { set_ref(set) } {
            Ok(inner) => {
                unsafe { *out = inner.set.len() };
                BxStatus::BxStatusOk
            }
            Err(s) => s,
        }
    })
}

/// Release a set handle. Passing NULL is a no-op.
#[no_mangle]
pub extern "C" fn bx_set_free(set: *mut BxSet) {
    let _ = guarded(|| {
        if set.is_null() {
            return BxStatus::BxStatusOk;
        }
        let inner = set as *mut SetInner;
        unsafe {
            if (*inner).magic != SET_MAGIC {
                set_error("invalid or freed set handle");
                return BxStatus::BxStatusInvalidHandle;
            }
            (*inner).magic = FREED_MAGIC;
            drop(Box::from_raw(inner));
        }
        BxStatus::BxStatusOk
    });
}

/// Orthonormalize the degree-`degree` section space against the set's
/// discrete inner product.
#[no_mangle]
pub extern "C" fn bx_orthonormalize(
    set: *const BxSet,
    degree: usize,
    out: *mut *mut BxSections,
) -> BxStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return BxStatus::BxStatusNullPointer;
        }
        let inner = match unsafe { set_ref(set) } {
            Ok(i) => i,
            Err(s) => return s,
        };
        match orthonormalize(&inner.set, degree) {
            Ok(sections) => {
                let boxed = Box::new(SectionsInner {
                    magic: SECTIONS_MAGIC,
                    sections,
                });
                unsafe {
                    *out = Box::into_raw(boxed) as *mut BxSections;
                }
                BxStatus::BxStatusOk
            }
            Err(e) => status_for(&e),
        }
    })
}

/// Degree of an orthonormalized family.
#[no_mangle]
pub extern "C" fn bx_sections_degree(
    sections: *const BxSections,
    out: *mut usize,
) -> BxStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return BxStatus::BxStatusNullPointer;
        }
        match unsafe { sections_ref(sections) } {
            Ok(inner) => {
                unsafe { *out = inner.sections.degree() };
                BxStatus::BxStatusOk
            }
            Err(s) => s,
        }
    })
}

/// Release a sections handle. Passing NULL is a no-op.
#[no_mangle]
pub extern "C" fn bx_sections_free(sections: *mut BxSections) {
    let _ = guarded(|| {
        if sections.is_null() {
            return BxStatus::BxStatusOk;
        }
        let inner = sections as *mut SectionsInner;
        unsafe {
            if (*inner).magic != SECTIONS_MAGIC {
                set_error("invalid or freed sections handle");
                return BxStatus::BxStatusInvalidHandle;
            }
            (*inner).magic = FREED_MAGIC;
            drop(Box::from_raw(inner));
        }
        BxStatus::BxStatusOk
    });
}

/// Log of the kernel diagonal at a point.
#[no_mangle]
pub extern "C" fn bx_bergman_log(
    sections: *const BxSections,
    chart: c_int,
    re: f64,
    im: f64,
    out: *mut f64,
) -> BxStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return BxStatus::BxStatusNullPointer;
        }
        let inner = match unsafe { sections_ref(sections) } {
            Ok(i) => i,
            Err(s) => return s,
        };
        let p = match point_from(chart, re, im) {
            Ok(p) => p,
            Err(s) => return s,
        };
        unsafe { *out = inner.sections.bergman_log(&p) };
        BxStatus::BxStatusOk
    })
}

/// Log of the largest node value of the kernel diagonal.
#[no_mangle]
pub extern "C" fn bx_bm_constant_log(sections: *const BxSections, out: *mut f64) -> BxStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return BxStatus::BxStatusNullPointer;
        }
        match unsafe { sections_ref(sections) } {
            Ok(inner) => {
                unsafe { *out = inner.sections.bm_constant_log().0 };
                BxStatus::BxStatusOk
            }
            Err(s) => s,
        }
    })
}

/// Log of the mass-weighted trace of the kernel diagonal (equals
/// ln(degree + 1) exactly in exact arithmetic).
#[no_mangle]
pub extern "C" fn bx_trace_log(sections: *const BxSections, out: *mut f64) -> BxStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return BxStatus::BxStatusNullPointer;
        }
        match unsafe { sections_ref(sections) } {
            Ok(inner) => {
                unsafe { *out = inner.sections.weighted_trace_log() };
                BxStatus::BxStatusOk
            }
            Err(s) => s,
        }
    })
}

/// Certified enclosure of the log extremal value at a point. `out_upper`
/// receives the dual certificate (upper bound), `out_lower` the primal one;
/// `out_gap` and `out_converged` may be NULL when not needed.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn bx_phi_log(
    set: *const BxSet,
    degree: usize,
    chart: c_int,
    re: f64,
    im: f64,
    tol: f64,
    max_iter: usize,
    out_upper: *mut f64,
    out_lower: *mut f64,
    out_gap: *mut f64,
    out_converged: *mut c_int,
) -> BxStatus {
    guarded(|| {
        if out_upper.is_null() {
            set_error("null output pointer");
            return BxStatus::BxStatusNullPointer;
        }
        let inner = match unsafe { set_ref(set) } {
            Ok(i) => i,
            Err(s) => return s,
        };
        let p = match point_from(chart, re, im) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let opts = PhiOptions { tol, max_iter };
        match phi_log(&inner.set, degree, &p, &opts) {
            Ok(r) => {
                unsafe {
                    *out_upper = r.log_phi;
                    if !out_lower.is_null() {
                        *out_lower = r.log_phi_primal;
                    }
                    if !out_gap.is_null() {
                        *out_gap = r.final_gap;
                    }
                    if !out_converged.is_null() {
                        *out_converged = c_int::from(r.converged);
                    }
                }
                BxStatus::BxStatusOk
            }
            Err(e) => status_for(&e),
        }
    })
}

/// Closed-form extremal value for a built-in scenario (0 = circle,
/// 1 = interval). Scenario 2 (annulus_pair) has no closed form and returns
/// `BX_STATUS_UNSUPPORTED`.
#[no_mangle]
pub extern "C" fn bx_extremal_value(
    scenario: c_int,
    chart: c_int,
    re: f64,
    im: f64,
    out: *mut f64,
) -> BxStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return BxStatus::BxStatusNullPointer;
        }
        let sc = match scenario_from(scenario) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let p = match point_from(chart, re, im) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match extremal_value(sc, &p) {
            Ok(v) => {
                unsafe { *out = v };
                BxStatus::BxStatusOk
            }
            Err(e) => status_for(&e),
        }
    })
}

/// The ABI revision compiled into the library.
#[no_mangle]
pub extern "C" fn bx_abi_version() -> u32 {
    BX_ABI_VERSION
}
