use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use isovar_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(isovar_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn mesh_text_round_trip() {
    unsafe {
        let mut amb = ptr::null_mut();
        assert_eq!(isovar_ambient_plane(&mut amb), IsovarStatus::Ok);
        let mut m = ptr::null_mut();
        assert_eq!(isovar_mesh_circle(0.0, 0.0, 2.0, 64, &mut m), IsovarStatus::Ok);
        let mut text = ptr::null_mut();
        assert_eq!(isovar_mesh_to_text(m, &mut text), IsovarStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(isovar_mesh_parse(text, amb, &mut back), IsovarStatus::Ok);
        let (mut a, mut b) = (0.0, 0.0);
        isovar_mesh_measures(m, &mut a, ptr::null_mut(), ptr::null_mut());
        isovar_mesh_measures(back, &mut b, ptr::null_mut(), ptr::null_mut());
        assert_eq!(a, b);
        assert_eq!(isovar_mesh_dimension(back), 1);
        isovar_string_free(text);
        isovar_mesh_free(m);
        isovar_mesh_free(back);
        isovar_ambient_free(amb);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let mut amb = ptr::null_mut();
        assert_eq!(isovar_ambient_round_sphere(-1.0, &mut amb), IsovarStatus::Validation);
        assert!(amb.is_null());
        assert!(!last_error().is_empty());

        let bad = CString::new("1 + (z").unwrap();
        assert_ne!(isovar_ambient_revolution(bad.as_ptr(), -1.0, 1.0, &mut amb), IsovarStatus::Ok);

        let mut c = std::mem::zeroed::<IsovarCheck>();
        assert_eq!(isovar_check_ball_bound(ptr::null(), &mut c), IsovarStatus::NullPointer);
        assert!(last_error().contains("mesh"));
    }
}

#[test]
fn linear_check_on_a_non_euclidean_ambient_is_unsupported_for_balls() {
    unsafe {
        let mut s = ptr::null_mut();
        isovar_ambient_round_sphere(1.0, &mut s);
        let mut lat = ptr::null_mut();
        assert_eq!(isovar_mesh_latitude(s, 1.0, 128, &mut lat), IsovarStatus::Ok);
        let mut c = std::mem::zeroed::<IsovarCheck>();
        assert_eq!(isovar_check_ball_bound(lat, &mut c), IsovarStatus::Unsupported);
        assert_eq!(isovar_check_linear(lat, 10.0, ptr::null(), &mut c), IsovarStatus::Ok);
        assert_eq!(c.verdict, IsovarVerdict::Holds);
        isovar_mesh_free(lat);
        isovar_ambient_free(s);
    }
}

#[test]
fn great_circle_is_unstable_and_waist_stable() {
    unsafe {
        let mut s = ptr::null_mut();
        isovar_ambient_round_sphere(1.0, &mut s);
        let mut gc = ptr::null_mut();
        isovar_mesh_latitude(s, std::f64::consts::FRAC_PI_2, 256, &mut gc);
        let mut ev = 0.0;
        assert_eq!(isovar_stability_eigenvalue(gc, 128, &mut ev), IsovarStatus::Ok);
        assert!((ev + 1.0).abs() < 1e-3);

        let profile = CString::new("1 + z^2").unwrap();
        let mut r = ptr::null_mut();
        isovar_ambient_revolution(profile.as_ptr(), -1.5, 1.5, &mut r);
        let mut w = ptr::null_mut();
        isovar_mesh_latitude(r, 0.0, 256, &mut w);
        assert_eq!(isovar_stability_eigenvalue(w, 128, &mut ev), IsovarStatus::Ok);
        assert!((ev - 2.0).abs() < 1e-2);
        for m in [gc, w] {
            isovar_mesh_free(m);
        }
        isovar_ambient_free(s);
        isovar_ambient_free(r);
    }
}

#[test]
fn disk_goes_extinct() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(isovar_domain_disk(0.0, 0.0, 1.0, &mut d), IsovarStatus::Ok);
        let mut out = std::mem::zeroed::<IsovarDichotomy>();
        assert_eq!(isovar_dichotomy(d, &mut out), IsovarStatus::Ok);
        assert_eq!(out.extinct, 1);
        assert!((out.t_ext - 0.5).abs() < 0.01);
        assert!(out.length.is_nan());
        isovar_domain_free(d);
    }
}

#[test]
fn config_run_reports_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = CString::new(
        "[[scenario]]\nid = \"u\"\nkind = \"stability\"\nuniform = { length = 6.283185307179586, q = 1.0 }\n\
         expect = { eigenvalue = { value = 5.0, tol = 1e-3 } }\n",
    )
    .unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut code = -1;
    let seed = 3u64;
    unsafe {
        assert_eq!(isovar_run_config(text.as_ptr(), ptr::null(), out.as_ptr(), &seed, &mut code), IsovarStatus::Ok);
    }
    assert_eq!(code, 1);
    assert!(dir.path().join("report.jsonl").exists());

    let bad = CString::new("[[scenario]]\nid = 3\n").unwrap();
    unsafe {
        assert_eq!(isovar_run_config(bad.as_ptr(), ptr::null(), out.as_ptr(), ptr::null(), &mut code), IsovarStatus::Parse);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(isovar_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/isovar.h");
    assert!(header.exists());
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99", "-Wall", "-Werror"]).arg(&header).status()
    else {
        eprintln!("no C compiler available; header syntax not checked");
        return;
    };
    assert!(status.success());
}
