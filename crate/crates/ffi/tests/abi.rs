use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use dipole_core::dist::{smear_factor, ShellFactor, Sign};
use dipole_core::model::euclid_kernel_radial;
use dipole_core::{QuadSpec, WavePacket};
use dipole_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { dp_last_error(buf.as_mut_ptr().cast(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr().cast()) }.to_string_lossy().into_owned()
}

fn zero() -> DpValue {
    DpValue {
        re: 0.0,
        im: 0.0,
        err_est: 0.0,
        converged: 0,
    }
}

#[test]
fn packets_round_trip_through_handles() {
    let center = [1.5, 0.4];
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { dp_packet_gaussian(2, center.as_ptr(), 0.6, &mut p) }, DpStatus::Ok);
    let mut v = zero();
    assert_eq!(unsafe { dp_packet_eval(p, center.as_ptr(), &mut v) }, DpStatus::Ok);
    let direct = WavePacket::gaussian(&center, 0.6).eval(&center);
    assert_eq!((v.re, v.im), (direct.re, direct.im));

    let mut s = zero();
    assert_eq!(unsafe { dp_smear_shell(DpShell::DeltaPrimePlus, 1.0, p, &mut s) }, DpStatus::Ok);
    let direct = smear_factor(&ShellFactor::delta_prime(Sign::Plus, 1.0), &WavePacket::gaussian(&center, 0.6), &QuadSpec::default()).unwrap();
    assert_eq!((s.re, s.im), (direct.value.re, direct.value.im));
    assert_eq!(s.converged, 1);
    unsafe { dp_packet_free(p) };

    let json = CString::new(serde_json::to_string(&WavePacket::gaussian(&center, 0.6)).unwrap()).unwrap();
    let mut q = ptr::null_mut();
    assert_eq!(unsafe { dp_packet_from_json(json.as_ptr(), &mut q) }, DpStatus::Ok);
    unsafe { dp_packet_free(q) };
}

#[test]
fn errors_map_to_codes_and_messages() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { dp_packet_gaussian(2, ptr::null(), 0.6, &mut p) }, DpStatus::NullPointer);
    let bad = CString::new("{\"dim\": 2}").unwrap();
    assert_eq!(unsafe { dp_packet_from_json(bad.as_ptr(), &mut p) }, DpStatus::Parse);
    assert!(!last_error().is_empty());
    let mut k = 0.0;
    assert_eq!(unsafe { dp_euclid_kernel(1, 1.0, -1.0, 2, &mut k) }, DpStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    unsafe {
        dp_packet_free(ptr::null_mut());
        dp_model_free(ptr::null_mut());
        dp_string_free(ptr::null_mut());
    }
}

#[test]
fn model_handles_smear_wightman_functions() {
    let cumulants = [1.0];
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { dp_model_new(1.0, 2, cumulants.as_ptr(), 1, &mut m) }, DpStatus::Ok);
    let c1 = [1.4, 0.3];
    let c2 = [-1.4, -0.3];
    let (mut p1, mut p2) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(dp_packet_gaussian(2, c1.as_ptr(), 0.6, &mut p1), DpStatus::Ok);
        assert_eq!(dp_packet_gaussian(2, c2.as_ptr(), 0.6, &mut p2), DpStatus::Ok);
    }
    let ps = [p1 as *const DpPacket, p2 as *const DpPacket];
    let mut v = zero();
    assert_eq!(unsafe { dp_wightman(m, 2, ps.as_ptr(), &mut v) }, DpStatus::Ok);
    assert!(v.re.is_finite() && v.converged == 1);
    let mut k = 0.0;
    assert_eq!(unsafe { dp_euclid_kernel(1, 1.0, 1.0, 2, &mut k) }, DpStatus::Ok);
    assert_eq!(k, euclid_kernel_radial(1, 1.0, 1.0, 2).unwrap());
    unsafe {
        dp_packet_free(p1);
        dp_packet_free(p2);
        dp_model_free(m);
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "dipole.h"

int main(void) {
    double center[2] = {1.5, 0.4};
    DpPacket *p = NULL;
    if (dp_packet_gaussian(2, center, 0.6, &p) != DP_STATUS_OK) return 3;
    DpValue v;
    if (dp_smear_shell(DP_SHELL_DELTA_PLUS, 1.0, p, &v) != DP_STATUS_OK) return 4;
    printf("%.17g %.17g\n", v.re, v.im);
    dp_packet_free(p);
    double k;
    if (dp_euclid_kernel(1, 1.0, -1.0, 2, &k) != DP_STATUS_INVALID_ARGUMENT) return 5;
    char msg[128];
    if (dp_last_error(msg, sizeof msg) == 0) return 6;
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_header() {
    let Ok(cc) = which_cc() else {
        eprintln!("skipping: no C compiler found");
        return;
    };
    // test builds refresh the archive next to the test binary, not in the
    // profile root
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().join("libdipole_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("abi_c");
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    let bin = dir.join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let parts: Vec<f64> = text.split_whitespace().map(|s| s.parse().unwrap()).collect();
    let direct = smear_factor(&ShellFactor::delta(Sign::Plus, 1.0), &WavePacket::gaussian(&[1.5, 0.4], 0.6), &QuadSpec::default()).unwrap();
    assert_eq!(parts, vec![direct.value.re, direct.value.im]);
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
