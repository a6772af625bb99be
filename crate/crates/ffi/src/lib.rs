//! C ABI over `dipole-core`.
//!
//! Objects cross the boundary as opaque handles created by `dp_*_new` or
//! `dp_*_from_json` and released by the matching `dp_*_free`. Every fallible
//! call returns a [`DpStatus`]; on failure the message is kept per thread
//! and can be copied out with [`dp_last_error`]. Panics are caught and
//! reported as [`DpStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dipole_core::criteria::{run_suite, Level};
use dipole_core::dist::{smear_factor, smear_regularized, ShellFactor, Sign, SmearConfig};
use dipole_core::model::{euclid_kernel_radial, wightman_truncated, MomentModel};
use dipole_core::{Error, QuadSpec, SmearValue, WavePacket};
use num_complex::Complex64;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Numeric = 4,
    Panic = 5,
}

/// Shell distribution selector for [`dp_smear_shell`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DpShell {
    DeltaPlus = 0,
    DeltaMinus = 1,
    DeltaPrimePlus = 2,
    DeltaPrimeMinus = 3,
}

/// A complex value with its absolute error estimate.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DpValue {
    pub re: f64,
    pub im: f64,
    pub err_est: f64,
    /// 1 when the quadrature met its tolerance.
    pub converged: i32,
}

impl From<SmearValue> for DpValue {
    fn from(v: SmearValue) -> Self {
        DpValue {
            re: v.value.re,
            im: v.value.im,
            err_est: v.err_est,
            converged: i32::from(v.converged),
        }
    }
}

/// Opaque wave packet.
pub struct DpPacket {
    inner: WavePacket,
}

/// Opaque moment model.
pub struct DpModel {
    inner: MomentModel,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: DpStatus, msg: impl Into<String>) -> DpStatus {
    set_error(msg.into());
    status
}

fn status_of(e: &Error) -> DpStatus {
    match e {
        Error::Invalid(_) | Error::Packet(_) => DpStatus::InvalidArgument,
        _ => DpStatus::Numeric,
    }
}

/// Run `f`, converting panics into a status.
fn guard<F: FnOnce() -> DpStatus>(f: F) -> DpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == DpStatus::Ok {
                set_error(String::new());
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(DpStatus::Panic, msg)
        }
    }
}

unsafe fn c_str<'a>(s: *const c_char) -> Result<&'a str, DpStatus> {
    if s.is_null() {
        return Err(fail(DpStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(DpStatus::Parse, "string is not UTF-8"))
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dp_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Gaussian packet of dimension `dim` centered at `center[0..dim]` with
/// isotropic width `sigma`.
///
/// # Safety
/// `center` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_packet_gaussian(dim: usize, center: *const f64, sigma: f64, out: *mut *mut DpPacket) -> DpStatus {
    guard(|| {
        if center.is_null() || out.is_null() {
            return fail(DpStatus::NullPointer, "null argument");
        }
        if dim < 2 || !(sigma > 0.0) || !sigma.is_finite() {
            return fail(DpStatus::InvalidArgument, "need dim >= 2 and a positive width");
        }
        let c = std::slice::from_raw_parts(center, dim);
        if c.iter().any(|x| !x.is_finite()) {
            return fail(DpStatus::InvalidArgument, "center must be finite");
        }
        *out = Box::into_raw(Box::new(DpPacket {
            inner: WavePacket::gaussian(c, sigma),
        }));
        DpStatus::Ok
    })
}

/// Packet from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_packet_from_json(json: *const c_char, out: *mut *mut DpPacket) -> DpStatus {
    guard(|| {
        if out.is_null() {
            return fail(DpStatus::NullPointer, "null output");
        }
        let s = match c_str(json) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match serde_json::from_str::<WavePacket>(s) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(DpPacket { inner: p }));
                DpStatus::Ok
            }
            Err(e) => fail(DpStatus::Parse, format!("line {}, column {}: {e}", e.line(), e.column())),
        }
    })
}

/// Value of the packet at momentum `k[0..dim]`.
///
/// # Safety
/// `p` must be a live packet handle, `k` must point to its dimension's
/// doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_packet_eval(p: *const DpPacket, k: *const f64, out: *mut DpValue) -> DpStatus {
    guard(|| {
        if p.is_null() || k.is_null() || out.is_null() {
            return fail(DpStatus::NullPointer, "null argument");
        }
        let p = &(*p).inner;
        let v: Complex64 = p.eval(std::slice::from_raw_parts(k, p.dim()));
        *out = DpValue {
            re: v.re,
            im: v.im,
            err_est: 0.0,
            converged: 1,
        };
        DpStatus::Ok
    })
}

/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dp_packet_free(p: *mut DpPacket) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Model with cumulants `c_2 .. c_{n+1}` taken from `cumulants[0..n]`.
///
/// # Safety
/// `cumulants` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_model_new(mass: f64, dim: usize, cumulants: *const f64, n: usize, out: *mut *mut DpModel) -> DpStatus {
    guard(|| {
        if out.is_null() || (cumulants.is_null() && n > 0) {
            return fail(DpStatus::NullPointer, "null argument");
        }
        let c = if n == 0 { vec![] } else { std::slice::from_raw_parts(cumulants, n).to_vec() };
        match MomentModel::new(mass, dim, c) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(DpModel { inner: m }));
                DpStatus::Ok
            }
            Err(e) => fail(DpStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Model from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_model_from_json(json: *const c_char, out: *mut *mut DpModel) -> DpStatus {
    guard(|| {
        if out.is_null() {
            return fail(DpStatus::NullPointer, "null output");
        }
        let s = match c_str(json) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match MomentModel::from_json(s) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(DpModel { inner: m }));
                DpStatus::Ok
            }
            Err(e) => fail(DpStatus::Parse, e.to_string()),
        }
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dp_model_free(m: *mut DpModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Smear a mass-shell delta or its mass derivative against a packet with
/// default quadrature settings.
///
/// # Safety
/// `p` must be a live packet handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_smear_shell(shell: DpShell, mass: f64, p: *const DpPacket, out: *mut DpValue) -> DpStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            return fail(DpStatus::NullPointer, "null argument");
        }
        let f = match shell {
            DpShell::DeltaPlus => ShellFactor::delta(Sign::Plus, mass),
            DpShell::DeltaMinus => ShellFactor::delta(Sign::Minus, mass),
            DpShell::DeltaPrimePlus => ShellFactor::delta_prime(Sign::Plus, mass),
            DpShell::DeltaPrimeMinus => ShellFactor::delta_prime(Sign::Minus, mass),
        };
        match smear_factor(&f, &(*p).inner, &QuadSpec::default()) {
            Ok(v) => {
                *out = v.into();
                DpStatus::Ok
            }
            Err(e) => {
                let e = Error::from(e);
                fail(status_of(&e), e.to_string())
            }
        }
    })
}

/// Truncated `n`-point Wightman function of `model` smeared against
/// `packets[0..n]`, mollified and extrapolated where the shells are
/// over-determined.
///
/// # Safety
/// `model` must be a live handle, `packets` must point to `n` live packet
/// handles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_wightman(model: *const DpModel, n: usize, packets: *const *const DpPacket, out: *mut DpValue) -> DpStatus {
    guard(|| {
        if model.is_null() || packets.is_null() || out.is_null() {
            return fail(DpStatus::NullPointer, "null argument");
        }
        let handles = std::slice::from_raw_parts(packets, n);
        if handles.iter().any(|h| h.is_null()) {
            return fail(DpStatus::NullPointer, "null packet handle");
        }
        let ps: Vec<WavePacket> = handles.iter().map(|&h| (*h).inner.clone()).collect();
        let res = wightman_truncated(n, &(*model).inner)
            .map_err(Error::from)
            .and_then(|e| smear_regularized(&e, &ps, &QuadSpec::default(), &SmearConfig::default()).map_err(Error::from));
        match res {
            Ok(v) => {
                *out = v.value.into();
                DpStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Euclidean kernel of the given order (1 or 2) at distance `r`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_euclid_kernel(order: u32, r: f64, mass: f64, dim: usize, out: *mut f64) -> DpStatus {
    guard(|| {
        if out.is_null() {
            return fail(DpStatus::NullPointer, "null output");
        }
        match euclid_kernel_radial(order, r, mass, dim) {
            Ok(v) => {
                *out = v;
                DpStatus::Ok
            }
            Err(e) => fail(DpStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Run the acceptance suite (`full` nonzero for the full tier) and return
/// the JSON report, to be released with [`dp_string_free`]. `passed`
/// receives 1 when every criterion passes.
///
/// # Safety
/// `out` and `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_suite_run(full: i32, seed: u64, out: *mut *mut c_char, passed: *mut i32) -> DpStatus {
    guard(|| {
        if out.is_null() || passed.is_null() {
            return fail(DpStatus::NullPointer, "null output");
        }
        let level = if full != 0 { Level::Full } else { Level::Quick };
        match run_suite(level, seed, &QuadSpec::default()) {
            Ok((report, _)) => {
                let text = serde_json::to_string(&report).expect("reports serialize");
                *passed = i32::from(report.pass);
                *out = CString::new(text).expect("JSON has no NUL bytes").into_raw();
                DpStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
