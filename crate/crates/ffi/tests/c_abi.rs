use std::f64::consts::TAU;
use std::ffi::{c_char, CString};
use std::process::Command;
use std::ptr;

use manifold_kde_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe {
        let len = kde_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0 as c_char; len + 1];
        kde_last_error_message(buf.as_mut_ptr(), buf.len());
        std::ffi::CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn manifold(desc: &str) -> *mut KdeManifold {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { kde_manifold_new(c(desc).as_ptr(), &mut m) }, KdeStatus::Ok);
    m
}

#[test]
fn round_trip_on_the_circle() {
    unsafe {
        let m = manifold("circle");
        assert_eq!(kde_manifold_intrinsic_dim(m), 1);
        assert_eq!(kde_manifold_point_dim(m), 1);

        let mut d = ptr::null_mut();
        assert_eq!(kde_density_new(m, c("uniform").as_ptr(), &mut d), KdeStatus::Ok);
        let mut p = 0.0;
        assert_eq!(kde_density_evaluate(d, [1.0].as_ptr(), 1, &mut p), KdeStatus::Ok);
        assert!((p - 1.0 / TAU).abs() < 1e-15);

        let mut s = ptr::null_mut();
        assert_eq!(kde_sample(d, 50_000, 9, &mut s), KdeStatus::Ok);
        assert_eq!(kde_samples_len(s), 50_000);
        assert_eq!(kde_samples_dim(s), 1);

        let mut e = ptr::null_mut();
        assert_eq!(kde_estimator_new(m, c("uniform:rho=1").as_ptr(), 0.1, s, &mut e), KdeStatus::Ok);
        kde_samples_free(s);
        let points: Vec<f64> = (0..8).map(|i| TAU * i as f64 / 8.0).collect();
        let mut values = [0.0; 8];
        assert_eq!(kde_estimate(e, points.as_ptr(), 8, 1, values.as_mut_ptr()), KdeStatus::Ok);
        assert!(values.iter().all(|v| (v - 1.0 / TAU).abs() < 0.03), "{values:?}");

        kde_estimator_free(e);
        kde_density_free(d);
        kde_manifold_free(m);
    }
}

#[test]
fn same_seed_same_points() {
    unsafe {
        let m = manifold("sphere:d=2");
        let mut d = ptr::null_mut();
        assert_eq!(kde_density_new(m, c("holder:kappa=1,strength=0.5").as_ptr(), &mut d), KdeStatus::Ok);
        let draw = || {
            let mut s = ptr::null_mut();
            assert_eq!(kde_sample(d, 100, 4, &mut s), KdeStatus::Ok);
            let mut buf = vec![0.0; kde_samples_len(s) * kde_samples_dim(s)];
            assert_eq!(kde_samples_copy(s, buf.as_mut_ptr(), buf.len()), KdeStatus::Ok);
            kde_samples_free(s);
            buf
        };
        let (a, b) = (draw(), draw());
        assert_eq!(a.len(), 300);
        assert_eq!(a, b);
        kde_density_free(d);
        kde_manifold_free(m);
    }
}

#[test]
fn external_points_match_a_hand_sum() {
    unsafe {
        let m = manifold("circle");
        let pts = [0.0, 0.05, 3.0];
        let mut s = ptr::null_mut();
        assert_eq!(kde_samples_from_points(pts.as_ptr(), 3, 1, &mut s), KdeStatus::Ok);
        let mut e = ptr::null_mut();
        assert_eq!(kde_estimator_new(m, c("uniform:rho=1").as_ptr(), 0.1, s, &mut e), KdeStatus::Ok);
        let mut v = 0.0;
        assert_eq!(kde_estimate(e, [0.0].as_ptr(), 1, 1, &mut v), KdeStatus::Ok);
        // Two of three samples lie within the chord radius; the normalized 1-d box is 1/(2ε).
        assert!((v - 2.0 / 3.0 * 5.0).abs() < 1e-12, "{v}");
        kde_estimator_free(e);
        kde_samples_free(s);
        kde_manifold_free(m);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(kde_manifold_new(c("klein:d=2").as_ptr(), &mut m), KdeStatus::Configuration);
        assert!(m.is_null());
        assert!(last_error().contains("klein"), "{}", last_error());

        assert_eq!(kde_manifold_new(ptr::null(), &mut m), KdeStatus::NullPointer);
        let bad = [0xffu8, 0];
        assert_eq!(kde_manifold_new(bad.as_ptr().cast(), &mut m), KdeStatus::InvalidUtf8);

        let m = manifold("sphere:d=2");
        let mut d = ptr::null_mut();
        assert_eq!(kde_density_new(m, c("uniform").as_ptr(), &mut d), KdeStatus::Ok);
        let mut p = 0.0;
        assert_eq!(kde_density_evaluate(d, [1.0, 0.0].as_ptr(), 2, &mut p), KdeStatus::DimensionMismatch);

        let mut s = ptr::null_mut();
        assert_eq!(kde_sample(d, 10, 1, &mut s), KdeStatus::Ok);
        let mut e = ptr::null_mut();
        assert_eq!(kde_estimator_new(m, c("uniform:rho=1").as_ptr(), -1.0, s, &mut e), KdeStatus::Argument);
        let mut small = [0.0; 3];
        assert_eq!(kde_samples_copy(s, small.as_mut_ptr(), 3), KdeStatus::Argument);

        // A successful call clears the message.
        assert_eq!(kde_density_evaluate(d, [0.0, 0.0, 1.0].as_ptr(), 3, &mut p), KdeStatus::Ok);
        assert_eq!(last_error(), "");

        kde_samples_free(s);
        kde_density_free(d);
        kde_manifold_free(m);
        kde_manifold_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api_and_parses_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/manifold_kde.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["kde_manifold_new", "kde_estimate", "kde_last_error_message", "KDE_STATUS_DIMENSION_MISMATCH"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    // Skip the compile check where no C compiler is installed.
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
