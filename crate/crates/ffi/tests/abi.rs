use std::ffi::{CStr, CString};
use std::ptr;

use hyrep_ffi::*;

fn last_error() -> String {
    let p = hyrep_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn state_lifecycle_and_fidelity() {
    unsafe {
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(hyrep_state_cat_two(2.0, 0.0, 30, &mut a), HyrepStatus::Ok);
        assert_eq!(hyrep_state_cat_two(2.0, 0.0, 30, &mut b), HyrepStatus::Ok);
        assert!(hyrep_last_error().is_null());
        assert_eq!(hyrep_state_nmodes(a), 2);
        let mut f = 0.0;
        assert_eq!(hyrep_state_fidelity(a, b, &mut f), HyrepStatus::Ok);
        assert!((f - 1.0).abs() < 1e-12);
        let mut n = 0.0;
        assert_eq!(hyrep_state_norm_sqr(a, &mut n), HyrepStatus::Ok);
        assert!((n - 1.0).abs() < 1e-12);
        hyrep_state_free(a);
        hyrep_state_free(b);
        hyrep_state_free(ptr::null_mut());
    }
}

#[test]
fn errors_set_code_and_message() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(hyrep_state_cat_single(3.0, 5, &mut s), HyrepStatus::InsufficientCutoff);
        assert!(s.is_null());
        assert!(last_error().contains("insufficient cutoff"));
        assert_eq!(hyrep_state_cat_single(1.0, 20, ptr::null_mut()), HyrepStatus::NullPointer);
        assert!(last_error().contains("out"));
        let mut f = 0.0;
        let mut one = ptr::null_mut();
        let mut two = ptr::null_mut();
        assert_eq!(hyrep_state_cat_single(1.0, 20, &mut one), HyrepStatus::Ok);
        assert_eq!(hyrep_state_cat_two(1.0, 0.0, 20, &mut two), HyrepStatus::Ok);
        assert_eq!(hyrep_state_fidelity(one, two, &mut f), HyrepStatus::InvalidArgument);
        hyrep_state_free(one);
        hyrep_state_free(two);
        assert_eq!(hyrep_state_nmodes(ptr::null()), 0);
    }
}

#[test]
fn scalar_entry_points() {
    assert!((hyrep_k_n(1) - 3.0).abs() < 1e-12);
    let mut a = 0.0;
    assert_eq!(unsafe { hyrep_swap_acceptance(2.5, 0, -1.0, &mut a) }, HyrepStatus::Ok);
    assert!((a - 0.5).abs() < 1e-3);
    let v = unsafe { CStr::from_ptr(hyrep_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn config_and_commands() {
    unsafe {
        let text = CString::new("seed = 3\nalpha = 2.5\n").unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(hyrep_config_from_toml(text.as_ptr(), &mut cfg), HyrepStatus::Ok);
        assert_eq!(hyrep_config_set_run(cfg, 3, 1, 0), HyrepStatus::Ok);
        let mut out = ptr::null_mut();
        let cmd = CString::new("swap").unwrap();
        assert_eq!(hyrep_run(cfg, cmd.as_ptr(), &mut out), HyrepStatus::Ok);
        let json = CStr::from_ptr(out).to_string_lossy().into_owned();
        assert!(json.contains("\"acceptance\""));
        hyrep_string_free(out);
        let bad = CString::new("nope").unwrap();
        assert_eq!(hyrep_run(cfg, bad.as_ptr(), &mut out), HyrepStatus::InvalidArgument);
        assert!(out.is_null());
        assert!(last_error().contains("nope"));
        hyrep_config_free(cfg);

        let bad_cfg = CString::new("eta_d = 2.0").unwrap();
        let mut c2 = ptr::null_mut();
        assert_eq!(hyrep_config_from_toml(bad_cfg.as_ptr(), &mut c2), HyrepStatus::InvalidArgument);
        assert!(last_error().contains("eta_d"));
        let d = hyrep_config_default();
        hyrep_config_free(d);
    }
}

#[test]
fn generated_header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/hyrep.h");
    let text = std::fs::read_to_string(header).unwrap();
    for sym in ["hyrep_last_error", "hyrep_run", "HyrepState", "HYREP_STATUS_INSUFFICIENT_CUTOFF"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        format!("#include \"{header}\"\nint main(void) {{ HyrepState *s = 0; return (int)hyrep_state_nmodes(s) + HYREP_STATUS_OK; }}\n"),
    )
    .unwrap();
    let status = std::process::Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).status();
    match status {
        Ok(s) => assert!(s.success(), "header does not compile"),
        Err(e) => eprintln!("no C compiler available: {e}"),
    }
}
