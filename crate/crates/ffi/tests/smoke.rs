//! Exercises the C ABI end to end: handle lifecycle, numerical round
//! trips against closed forms, and the error paths a C caller hits.

use bergman_extremal_ffi::*;
use std::ffi::CStr;
use std::os::raw::c_int;
use std::ptr;

fn last_error() -> String {
    unsafe { CStr::from_ptr(bx_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn make_circle(nodes: usize, radius: f64) -> *mut BxSet {
    let mut set: *mut BxSet = ptr::null_mut();
    let st = bx_set_circle(nodes, radius, &mut set);
    assert_eq!(st, BxStatus::BxStatusOk, "{}", last_error());
    assert!(!set.is_null());
    set
}

fn make_sections(set: *const BxSet, degree: usize) -> *mut BxSections {
    let mut sections: *mut BxSections = ptr::null_mut();
    let st = bx_orthonormalize(set, degree, &mut sections);
    assert_eq!(st, BxStatus::BxStatusOk, "{}", last_error());
    assert!(!sections.is_null());
    sections
}

#[test]
fn abi_version_is_published() {
    assert_eq!(bx_abi_version(), 1);
}

#[test]
fn circle_kernel_matches_closed_forms() {
    let n = 4usize;
    let set = make_circle(24, 1.0);

    let mut count = 0usize;
    assert_eq!(bx_set_node_count(set, &mut count), BxStatus::BxStatusOk);
    assert_eq!(count, 24);

    let sections = make_sections(set, n);
    let mut deg = 0usize;
    assert_eq!(bx_sections_degree(sections, &mut deg), BxStatus::BxStatusOk);
    assert_eq!(deg, n);

    // Kernel diagonal at the origin is 2^n for the unit circle.
    let mut b0 = f64::NAN;
    assert_eq!(
        bx_bergman_log(sections, 0, 0.0, 0.0, &mut b0),
        BxStatus::BxStatusOk
    );
    assert!((b0 - n as f64 * std::f64::consts::LN_2).abs() < 1e-9);

    // On the nodes the diagonal equals the section count, so both the
    // largest node value and the mass-weighted trace land on ln(n + 1).
    let expect = ((n + 1) as f64).ln();
    let mut bm = f64::NAN;
    assert_eq!(bx_bm_constant_log(sections, &mut bm), BxStatus::BxStatusOk);
    assert!((bm - expect).abs() < 1e-9);
    let mut tr = f64::NAN;
    assert_eq!(bx_trace_log(sections, &mut tr), BxStatus::BxStatusOk);
    assert!((tr - expect).abs() < 1e-9);

    bx_sections_free(sections);
    bx_set_free(set);
}

#[test]
fn phi_enclosure_at_circle_origin() {
    let n = 4usize;
    let set = make_circle(24, 1.0);

    let mut upper = f64::NAN;
    let mut lower = f64::NAN;
    let mut gap = f64::NAN;
    let mut converged: c_int = -1;
    let st = bx_phi_log(
        set,
        n,
        0,
        0.0,
        0.0,
        1e-8,
        2000,
        &mut upper,
        &mut lower,
        &mut gap,
        &mut converged,
    );
    assert_eq!(st, BxStatus::BxStatusOk, "{}", last_error());

    let expect = 0.5 * n as f64 * std::f64::consts::LN_2;
    assert_eq!(converged, 1);
    assert!(gap >= 0.0 && gap <= 1e-8);
    assert!((upper - expect).abs() < 1e-6);
    assert!((lower - expect).abs() < 1e-6);
    assert!(lower <= upper);

    // Optional outputs really are optional.
    let mut upper2 = f64::NAN;
    let st = bx_phi_log(
        set,
        n,
        0,
        0.0,
        0.0,
        1e-8,
        2000,
        &mut upper2,
        ptr::null_mut(),
        ptr::null_mut(),
        ptr::null_mut(),
    );
    assert_eq!(st, BxStatus::BxStatusOk);
    assert!((upper2 - expect).abs() < 1e-6);

    bx_set_free(set);
}

#[test]
fn extremal_values_match_both_charts() {
    // Circle scenario at coordinate 2: ln 2 + ln(2)/2 - ln(5)/2.
    let mut v = f64::NAN;
    assert_eq!(
        bx_extremal_value(0, 0, 2.0, 0.0, &mut v),
        BxStatus::BxStatusOk
    );
    let expect = 1.5 * std::f64::consts::LN_2 - 0.5 * 5f64.ln();
    assert!((v - expect).abs() < 1e-12);

    // The same point seen from the other chart (coordinate 1/2).
    let mut w = f64::NAN;
    assert_eq!(
        bx_extremal_value(0, 1, 0.5, 0.0, &mut w),
        BxStatus::BxStatusOk
    );
    assert!((w - expect).abs() < 1e-12);

    // On the segment the interval scenario's extremal function vanishes.
    let mut s = f64::NAN;
    assert_eq!(
        bx_extremal_value(1, 0, 0.0, 0.0, &mut s),
        BxStatus::BxStatusOk
    );
    assert!(s.abs() < 1e-12);

    // The two-circle scenario has no closed form.
    let mut u = f64::NAN;
    assert_eq!(
        bx_extremal_value(2, 0, 0.0, 0.0, &mut u),
        BxStatus::BxStatusUnsupported
    );
    assert!(!last_error().is_empty());
}

#[test]
fn annulus_pair_set_builds_and_orthonormalizes() {
    let mut set: *mut BxSet = ptr::null_mut();
    let st = bx_set_annulus_pair(32, 0.5, 1.0, &mut set);
    assert_eq!(st, BxStatus::BxStatusOk, "{}", last_error());

    let sections = make_sections(set, 2);
    let mut tr = f64::NAN;
    assert_eq!(bx_trace_log(sections, &mut tr), BxStatus::BxStatusOk);
    assert!((tr - 3f64.ln()).abs() < 1e-9);

    bx_sections_free(sections);
    bx_set_free(set);
}

#[test]
fn null_pointers_are_rejected() {
    assert_eq!(
        bx_set_circle(16, 1.0, ptr::null_mut()),
        BxStatus::BxStatusNullPointer
    );
    let mut count = 0usize;
    assert_eq!(
        bx_set_node_count(ptr::null(), &mut count),
        BxStatus::BxStatusNullPointer
    );
    let set = make_circle(16, 1.0);
    assert_eq!(
        bx_set_node_count(set, ptr::null_mut()),
        BxStatus::BxStatusNullPointer
    );
    bx_set_free(set);
    // Releasing NULL must be silently accepted.
    bx_set_free(ptr::null_mut());
    bx_sections_free(ptr::null_mut());
}

#[test]
fn invalid_parameters_are_reported() {
    let mut set: *mut BxSet = ptr::null_mut();
    assert_eq!(
        bx_set_circle(0, 1.0, &mut set),
        BxStatus::BxStatusInvalidParameter
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        bx_set_circle(16, 0.0, &mut set),
        BxStatus::BxStatusInvalidParameter
    );
    assert_eq!(
        bx_set_circle(16, 1.5, &mut set),
        BxStatus::BxStatusInvalidParameter
    );

    // Chart codes other than 0/1 and non-finite coordinates are refused.
    let mut v = f64::NAN;
    assert_eq!(
        bx_extremal_value(0, 7, 0.0, 0.0, &mut v),
        BxStatus::BxStatusInvalidParameter
    );
    assert_eq!(
        bx_extremal_value(0, 0, f64::INFINITY, 0.0, &mut v),
        BxStatus::BxStatusInvalidParameter
    );
    assert_eq!(
        bx_extremal_value(9, 0, 0.0, 0.0, &mut v),
        BxStatus::BxStatusInvalidParameter
    );

    // Asking for more sections than nodes can support is refused.
    let set = make_circle(8, 1.0);
    let mut sections: *mut BxSections = ptr::null_mut();
    assert_eq!(
        bx_orthonormalize(set, 64, &mut sections),
        BxStatus::BxStatusInvalidParameter
    );
    assert!(sections.is_null());
    bx_set_free(set);
}

#[test]
fn foreign_pointers_are_not_treated_as_handles() {
    // A valid allocation that was never produced by this library fails the
    // tag check instead of being dereferenced as a set.
    let decoy = Box::new([0u64; 8]);
    let raw = Box::into_raw(decoy);
    let mut count = 0usize;
    assert_eq!(
        bx_set_node_count(raw as *const BxSet, &mut count),
        BxStatus::BxStatusInvalidHandle
    );
    let mut deg = 0usize;
    assert_eq!(
        bx_sections_degree(raw as *const BxSections, &mut deg),
        BxStatus::BxStatusInvalidHandle
    );
    drop(unsafe { Box::from_raw(raw) });
}
