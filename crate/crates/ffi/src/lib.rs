//! C ABI for the frobtrace library: opaque profile handles, plain-data
//! structs and integer status codes, so other languages can bind without
//! touching Rust types. The companion header `include/frobtrace.h` is
//! generated by cbindgen from this file (see `build.rs`).

use frobtrace::curves::{ap, ap_bsgs, serre_family_check, CurveSpec};
use frobtrace::exceptional::SerrePairProfile;
use frobtrace::matcount::universal_product;
use frobtrace::satotate::{predict_value, sato_tate_factor, SatoTate};
use num::ToPrimitive;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrobStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SingularCurve = 3,
    BadReduction = 4,
    NotSerrePair = 5,
    ComputationFailed = 6,
    Overflow = 7,
}

/// Opaque Serre-pair profile handle.
pub struct FrobProfile {
    inner: SerrePairProfile,
}

/// Factor breakdown of the density constant at one trace value.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FrobConstant {
    pub t: i64,
    /// 16 / (3 pi^2)
    pub sato_tate: f64,
    /// exceptional factor (exact rational, rounded to double)
    pub exceptional: f64,
    /// truncated universal product
    pub universal: f64,
    /// multiplicative tail bound of the truncation
    pub tail: f64,
    /// assembled constant
    pub c: f64,
}

fn guard<F: FnOnce() -> FrobStatus>(f: F) -> FrobStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => FrobStatus::ComputationFailed,
    }
}

/// Library version, as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn frob_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Discriminant of the long Weierstrass model `(a1, a2, a3, a4, a6)`.
/// Fails with `Overflow` when the value does not fit a 64-bit integer.
#[no_mangle]
pub extern "C" fn frob_discriminant(
    a1: i64,
    a2: i64,
    a3: i64,
    a4: i64,
    a6: i64,
    out: *mut i64,
) -> FrobStatus {
    if out.is_null() {
        return FrobStatus::NullPointer;
    }
    guard(|| {
        let d = CurveSpec::new(a1, a2, a3, a4, a6).discriminant();
        match d.to_i64() {
            Some(v) => {
                unsafe { *out = v };
                FrobStatus::Ok
            }
            None => FrobStatus::Overflow,
        }
    })
}

/// Frobenius trace `a_p` for a good prime `p` (baseline kernel for small
/// primes, order finding for large ones).
#[no_mangle]
pub extern "C" fn frob_ap(
    a1: i64,
    a2: i64,
    a3: i64,
    a4: i64,
    a6: i64,
    p: u64,
    out: *mut i64,
) -> FrobStatus {
    if out.is_null() {
        return FrobStatus::NullPointer;
    }
    guard(|| {
        let curve = CurveSpec::new(a1, a2, a3, a4, a6);
        let r = if p > 20_000 {
            ap_bsgs(&curve, p)
        } else {
            ap(&curve, p)
        };
        match r {
            Ok(v) => {
                unsafe { *out = v };
                FrobStatus::Ok
            }
            Err(frobtrace::curves::CurveError::Singular) => FrobStatus::SingularCurve,
            Err(frobtrace::curves::CurveError::BadReduction(_)) => FrobStatus::BadReduction,
            Err(_) => FrobStatus::InvalidArgument,
        }
    })
}

/// 1 when the family pair `y^2+xy = x^3+l1`, `y^2+xy = x^3+l2` carries the
/// Serre-pair certificate, 0 otherwise.
#[no_mangle]
pub extern "C" fn frob_serre_family_check(l1: u64, l2: u64) -> i32 {
    match catch_unwind(|| serre_family_check(l1, l2)) {
        Ok(true) => 1,
        _ => 0,
    }
}

fn profile_from(
    c1: CurveSpec,
    c2: CurveSpec,
    attest: bool,
    out: *mut *mut FrobProfile,
) -> FrobStatus {
    match SerrePairProfile::from_curves(&c1, &c2, attest) {
        Ok(inner) => {
            let boxed = Box::new(FrobProfile { inner });
            unsafe { *out = Box::into_raw(boxed) };
            FrobStatus::Ok
        }
        Err(frobtrace::exceptional::ProfileError::NotCertified) => FrobStatus::NotSerrePair,
        Err(frobtrace::exceptional::ProfileError::Singular) => FrobStatus::SingularCurve,
        Err(_) => FrobStatus::ComputationFailed,
    }
}

/// Profile for a certified family pair.
#[no_mangle]
pub extern "C" fn frob_profile_family(l1: u64, l2: u64, out: *mut *mut FrobProfile) -> FrobStatus {
    if out.is_null() {
        return FrobStatus::NullPointer;
    }
    guard(|| profile_from(CurveSpec::family(l1), CurveSpec::family(l2), false, out))
}

/// Profile for arbitrary curves given as coefficient arrays
/// `[a1, a2, a3, a4, a6]`; `attest` must be nonzero for pairs outside the
/// certified family.
#[no_mangle]
pub extern "C" fn frob_profile_new(
    curve1: *const i64,
    curve2: *const i64,
    attest: i32,
    out: *mut *mut FrobProfile,
) -> FrobStatus {
    if curve1.is_null() || curve2.is_null() || out.is_null() {
        return FrobStatus::NullPointer;
    }
    guard(|| {
        let c = |p: *const i64| unsafe {
            let s = std::slice::from_raw_parts(p, 5);
            CurveSpec::new(s[0], s[1], s[2], s[3], s[4])
        };
        profile_from(c(curve1), c(curve2), attest != 0, out)
    })
}

/// Release a profile handle.
#[no_mangle]
pub extern "C" fn frob_profile_free(profile: *mut FrobProfile) {
    if !profile.is_null() {
        drop(unsafe { Box::from_raw(profile) });
    }
}

/// Conductor `m_A`; `Overflow` when it exceeds 64 bits.
#[no_mangle]
pub extern "C" fn frob_profile_conductor(profile: *const FrobProfile, out: *mut u64) -> FrobStatus {
    if profile.is_null() || out.is_null() {
        return FrobStatus::NullPointer;
    }
    guard(|| {
        let p = unsafe { &*profile };
        match p.inner.m_a.to_u64() {
            Some(v) => {
                unsafe { *out = v };
                FrobStatus::Ok
            }
            None => FrobStatus::Overflow,
        }
    })
}

/// Signed fundamental discriminants of the pair; `Overflow` past 64 bits.
#[no_mangle]
pub extern "C" fn frob_profile_discriminants(
    profile: *const FrobProfile,
    d1: *mut i64,
    d2: *mut i64,
) -> FrobStatus {
    if profile.is_null() || d1.is_null() || d2.is_null() {
        return FrobStatus::NullPointer;
    }
    guard(|| {
        let p = unsafe { &*profile };
        match (p.inner.d1.to_i64(), p.inner.d2.to_i64()) {
            (Some(a), Some(b)) => {
                unsafe {
                    *d1 = a;
                    *d2 = b;
                }
                FrobStatus::Ok
            }
            _ => FrobStatus::Overflow,
        }
    })
}

/// Factor breakdown of `C(E1 x E2, T)` with the universal product truncated
/// at `trunc` (pass 0 for the default 10^4).
#[no_mangle]
pub extern "C" fn frob_constant(
    profile: *const FrobProfile,
    t: i64,
    trunc: u64,
    out: *mut FrobConstant,
) -> FrobStatus {
    if profile.is_null() || out.is_null() {
        return FrobStatus::NullPointer;
    }
    if t == 0 {
        return FrobStatus::InvalidArgument;
    }
    guard(|| {
        let p = unsafe { &*profile };
        let trunc = if trunc == 0 { 10_000 } else { trunc };
        let exc = frobtrace::exceptional::exceptional_factor(&p.inner, t)
            .to_f64()
            .unwrap_or(f64::NAN);
        let (universal, tail) = universal_product(t, &p.inner.m_a, trunc);
        let c = sato_tate_factor() * exc * universal;
        unsafe {
            *out = FrobConstant {
                t,
                sato_tate: sato_tate_factor(),
                exceptional: exc,
                universal,
                tail,
                c,
            };
        }
        FrobStatus::Ok
    })
}

/// Predicted count of good primes up to `x` with trace sum `T`.
#[no_mangle]
pub extern "C" fn frob_predict(
    profile: *const FrobProfile,
    t: i64,
    x: u64,
    trunc: u64,
    out: *mut f64,
) -> FrobStatus {
    if profile.is_null() || out.is_null() {
        return FrobStatus::NullPointer;
    }
    if t == 0 || x < 3 {
        return FrobStatus::InvalidArgument;
    }
    guard(|| {
        let p = unsafe { &*profile };
        let trunc = if trunc == 0 { 10_000 } else { trunc };
        let exc = frobtrace::exceptional::exceptional_factor(&p.inner, t)
            .to_f64()
            .unwrap_or(f64::NAN);
        let (universal, _) = universal_product(t, &p.inner.m_a, trunc);
        let st = SatoTate::get();
        match predict_value(exc * universal, t, x, 1e-8, &|s| st.phi(s)) {
            Ok(v) => {
                unsafe { *out = v };
                FrobStatus::Ok
            }
            Err(_) => FrobStatus::ComputationFailed,
        }
    })
}
