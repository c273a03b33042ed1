//! Counting at the prime 2: scalar-distance stratified matrix counts, total
//! fixed-trace/determinant counts in `GL2(Z/2^n)`, the same counts cut by the
//! quadratic characters `psi_2`, and the 2-adic sums feeding the exceptional
//! factor.
//!
//! The discriminant `D(t,s) = t^2 - 4s` of a residue pair `(t,s) mod 2^n` is
//! only well defined modulo `2^(n+2)` (and only for even `t`; odd traces never
//! reach the stratified cases), so every case condition below is phrased in
//! terms of `D mod 2^(n+2)` with the valuation capped at `n+2`.

use crate::arith::{int, ExactInt};
use num::Integer;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// The four possible 2-adic components `psi_2` of the quadratic character
/// attached to a fundamental discriminant: the signature character `eps` of
/// `GL2(F_2)` optionally twisted by `chi_4 = (-1/.)` and/or `chi_8 = (2/.)`
/// composed with the determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Psi2Code {
    Eps,
    EpsChi4,
    EpsChi8,
    EpsChi4Chi8,
}

/// `chi_4(x) = (-1/x)`: the character mod 4, zero on even inputs.
fn chi4(x: u64) -> i32 {
    match x % 4 {
        1 => 1,
        3 => -1,
        _ => 0,
    }
}

/// `chi_8(x) = (2/x)`: the character mod 8, zero on even inputs.
fn chi8(x: u64) -> i32 {
    match x % 8 {
        1 | 7 => 1,
        3 | 5 => -1,
        _ => 0,
    }
}

impl Psi2Code {
    /// Selects the code from a signed fundamental discriminant `D`: the
    /// 2-part of `(D/.) * (./|D'|)` computed by quadratic reciprocity is
    /// trivial, `chi_4`, `chi_8` or `chi_4 chi_8` according to `D mod 4` and,
    /// for even `D`, `(D/4) mod 8`.
    pub fn from_discriminant(d: &ExactInt) -> Psi2Code {
        let four = int(4);
        if d.mod_floor(&four) == int(1) {
            return Psi2Code::Eps;
        }
        let q = d / &four;
        debug_assert_eq!(&q * &four, d.clone(), "fundamental discriminant expected");
        let r4 = q.mod_floor(&four);
        let r8 = q.mod_floor(&int(8));
        if r4 == int(3) {
            Psi2Code::EpsChi4
        } else if r8 == int(2) {
            Psi2Code::EpsChi8
        } else if r8 == int(6) {
            Psi2Code::EpsChi4Chi8
        } else {
            unreachable!("not a fundamental discriminant")
        }
    }

    /// The determinant-character part evaluated at an odd residue.
    pub fn det_character(&self, d: u64) -> i32 {
        match self {
            Psi2Code::Eps => 1,
            Psi2Code::EpsChi4 => chi4(d),
            Psi2Code::EpsChi8 => chi8(d),
            Psi2Code::EpsChi4Chi8 => chi4(d) * chi8(d),
        }
    }

    /// Smallest level at which the determinant character is defined at all.
    pub fn min_defined_level(&self) -> u32 {
        match self {
            Psi2Code::Eps => 1,
            Psi2Code::EpsChi4 => 2,
            Psi2Code::EpsChi8 | Psi2Code::EpsChi4Chi8 => 3,
        }
    }

    /// Smallest level at which the closed-form sign-split count is valid;
    /// below it (but at or above `min_defined_level`) direct enumeration is
    /// used instead.
    pub fn min_closed_level(&self) -> u32 {
        match self {
            Psi2Code::Eps => 1,
            Psi2Code::EpsChi4 => 3,
            Psi2Code::EpsChi8 | Psi2Code::EpsChi4Chi8 => 5,
        }
    }
}

/// `D(t,s) mod 2^(n+2)` together with its capped valuation: the valuation is
/// reported as `n+2` when the residue vanishes.
fn delta_val(n: u32, t: u64, s: u64) -> (u64, u32) {
    debug_assert!(n + 2 <= 62);
    let md = 1u128 << (n + 2);
    let t = t as u128;
    let s = s as u128;
    let delta = (t * t + 4 * md - 4 * s % md) % md;
    let delta = delta as u64;
    let v = if delta == 0 {
        n + 2
    } else {
        delta.trailing_zeros().min(n + 2)
    };
    (delta, v)
}

/// Number of matrices in `M_2(Z/2^n)` with trace `t`, determinant `s` (odd)
/// and scalar level exactly `i`. The stratified cases `1 <= i <= n-1` require
/// `n >= 3`; `i = 0` is valid for all `n >= 1`, and `i = n` counts the scalar
/// solutions directly.
pub fn h2_count(i: u32, n: u32, t: u64, s: u64) -> ExactInt {
    assert!(n >= 1 && i <= n);
    let m = 1u64 << n;
    let (t, s) = (t % m, s % m);
    assert!(s % 2 == 1, "determinant must be odd");
    let (delta, v) = delta_val(n, t, s);

    if i == n {
        // scalars lambda*I with 2*lambda = t and lambda^2 = s mod 2^n
        if t % 2 == 1 {
            return int(0);
        }
        let mut cands = vec![(t >> 1) % m];
        let other = ((t >> 1) + (1 << (n - 1))) % m;
        if !cands.contains(&other) {
            cands.push(other);
        }
        if n == 1 {
            // 2*lambda = t is vacuous mod 2; both residues are candidates
            cands = vec![0, 1];
        }
        let cnt = cands.iter().filter(|&&lam| lam * lam % m == s).count() as u64;
        return int(cnt);
    }

    if i == 0 {
        let c = if v >= 2 {
            3
        } else if delta % 8 == 5 {
            2
        } else if delta % 8 == 1 {
            6
        } else {
            0
        };
        return int(c) * int(1u64 << (2 * n - 2));
    }

    assert!(n >= 3, "stratified counts need level at least 3");
    if 2 * i < n {
        if v < 2 * i {
            return int(0);
        }
        let q = delta >> (2 * i);
        let c = if q % 4 == 0 {
            3
        } else if q % 8 == 5 {
            2
        } else if q % 8 == 1 {
            6
        } else {
            0
        };
        int(c) * int(1u64 << (2 * n - 2 - i))
    } else if 2 * i == n {
        if v < n {
            return int(0);
        }
        match (delta >> n) & 3 {
            0 => int(3u64 << (3 * n - 3 * i - 2)),
            1 => int(1u64 << (3 * n - 3 * i)),
            _ => int(0),
        }
    } else if 2 * i == n + 1 {
        if v < n + 1 {
            return int(0);
        }
        match (delta >> (n + 1)) & 1 {
            0 => int(3u64 << (3 * n - 3 * i - 2)),
            _ => int(1u64 << (3 * n - 3 * i)),
        }
    } else {
        // i >= n/2 + 1
        if v >= n + 2 {
            int(7u64 << (3 * n - 3 * i - 2))
        } else {
            int(0)
        }
    }
}

/// `|GL2(Z/2^n) with trace t, det d|` (d odd) via the five-term closed form.
pub fn count2_trace_det(n: u32, t: u64, d: u64) -> ExactInt {
    int(count2_u64(n, t, d))
}

pub(crate) fn count2_u64(n: u32, t: u64, d: u64) -> u64 {
    assert!(n >= 1);
    let m = 1u64 << n;
    let (t, d) = (t % m, d % m);
    assert!(d % 2 == 1, "determinant must be odd");
    let (delta, v) = delta_val(n, t, d);
    let e = n.div_ceil(2).min(v / 2);

    // 3 * 2^(2n-1) * (1 - 2^-e)
    let mut total = 3 * ((1u64 << (2 * n - 1)) - (1u64 << (2 * n - 1 - e)));

    if v < n && v % 2 == 0 {
        let q = delta >> v;
        if q % 4 == 1 {
            total += (1u64 << (2 * n - 2 - v / 2)) * (4 + 2 * chi8(q % 8) as i64) as u64;
        }
    }
    if v >= n && n % 2 == 0 {
        match (delta >> n) & 3 {
            0 => total += 3 << (3 * n / 2 - 2),
            1 => total += 4 << (3 * n / 2 - 2),
            _ => {}
        }
    }
    if n % 2 == 1 && v >= n + 1 {
        if (delta >> (n + 1)) & 1 == 1 {
            // 8 * 2^(3(n-3)/2) = 2^((3n-3)/2)
            total += 1u64 << ((3 * n - 3) / 2);
        } else {
            // 6 * 2^(3(n-3)/2); cannot occur at n = 1 since there delta/4 is odd
            assert!(n >= 3);
            total += 6 << (3 * (n - 3) / 2);
        }
    }
    if v >= n + 2 {
        // unreachable at n = 1 for odd d (then delta = 4 mod 8)
        assert!(n >= 2);
        total += 1u64 << (3 * n - 3 * n.div_ceil(2) - 2);
    }
    total
}

/// Enumerated `(t, d, eps) -> count` tables for small levels, used below the
/// validity thresholds of the closed-form character counts.
fn enum_table(n: u32) -> &'static HashMap<(u64, u64, i32), u64> {
    static CACHE: OnceLock<Mutex<HashMap<u32, &'static HashMap<(u64, u64, i32), u64>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    if let Some(t) = guard.get(&n) {
        return t;
    }
    assert!(n <= 4, "enumeration fallback limited to small levels");
    let m = 1u64 << n;
    let mut tbl: HashMap<(u64, u64, i32), u64> = HashMap::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for dd in 0..m {
                    let det = (a * dd + 4 * m * m - b * c) % m;
                    if det % 2 == 0 {
                        continue;
                    }
                    let tr = (a + dd) % m;
                    // eps = -1 iff the reduction mod 2 is one of the three
                    // order-two elements: trace even and not scalar mod 2
                    let scalar_mod2 = b % 2 == 0 && c % 2 == 0 && (a + m - dd) % 2 == 0;
                    let eps = if tr % 2 == 0 && !scalar_mod2 { -1 } else { 1 };
                    *tbl.entry((tr, det, eps)).or_insert(0) += 1;
                }
            }
        }
    }
    let leaked: &'static _ = Box::leak(Box::new(tbl));
    guard.insert(n, leaked);
    leaked
}

/// `|GL2(Z/2^n) with trace t, det d, psi_2 = sign|` where
/// `psi_2 = eps * chi(det)` for the character selected by `code`.
///
/// Uses the closed-form case tables at levels where they are valid and exact
/// enumeration below that; `n` must be at least the level at which the
/// character is defined at all.
pub fn count2_trace_det_psi(n: u32, t: u64, d: u64, code: Psi2Code, sign: i32) -> ExactInt {
    int(count2_psi_u64(n, t, d, code, sign))
}

pub(crate) fn count2_psi_u64(n: u32, t: u64, d: u64, code: Psi2Code, sign: i32) -> u64 {
    assert!(sign == 1 || sign == -1);
    assert!(
        n >= code.min_defined_level(),
        "character undefined at level {n}"
    );
    let m = 1u64 << n;
    let (t, d) = (t % m, d % m);
    assert!(d % 2 == 1);
    let minus = if n >= code.min_closed_level() {
        psi_minus_closed(n, t, d, code)
    } else {
        enum_minus(n, t, d, code)
    };
    if sign == -1 {
        minus
    } else {
        count2_u64(n, t, d) - minus
    }
}

fn enum_minus(n: u32, t: u64, d: u64, code: Psi2Code) -> u64 {
    let tbl = enum_table(n);
    let chi = code.det_character(d);
    // psi = eps * chi(d) = -1 means eps = -chi(d)
    *tbl.get(&(t, d, -chi)).unwrap_or(&0)
}

/// The sign = -1 case tables, valid from `min_closed_level` upward.
fn psi_minus_closed(n: u32, t: u64, d: u64, code: Psi2Code) -> u64 {
    let p4 = |k: u32| 1u64 << (2 * k);
    match code {
        Psi2Code::Eps => {
            if t % 2 == 0 {
                3 * p4(n - 1)
            } else {
                0
            }
        }
        Psi2Code::EpsChi4 => {
            if t % 2 == 0 && chi4(d) == 1 {
                3 * p4(n - 1)
            } else if t % 2 == 1 && chi4(d) == -1 {
                2 * p4(n - 1)
            } else if chi4(d) == -1 && t % 2 == 0 && t % 8 == (d + 1) % 8 {
                3 * p4(n - 1)
            } else if chi4(d) == -1 && t % 2 == 0 && t % 8 == (d + 5) % 8 {
                p4(n - 1)
            } else {
                0
            }
        }
        Psi2Code::EpsChi8 => {
            if t % 2 == 0 && chi8(d) == 1 {
                3 * p4(n - 1)
            } else if t % 2 == 1 && chi8(d) == -1 {
                2 * p4(n - 1)
            } else if t % 8 == 4 && d % 8 == 3 {
                3 * p4(n - 1)
            } else if t % 8 == 0 && d % 8 == 3 {
                p4(n - 1)
            } else {
                chi8_tail(n, t, d)
            }
        }
        Psi2Code::EpsChi4Chi8 => {
            let chi = chi8(d) * chi4(d);
            if t % 2 == 0 && chi == 1 {
                3 * p4(n - 1)
            } else if t % 2 == 1 && chi == -1 {
                2 * p4(n - 1)
            } else if t % 8 == 0 && d % 8 == 7 {
                3 * p4(n - 1)
            } else if t % 8 == 4 && d % 8 == 7 {
                p4(n - 1)
            } else {
                chi8_tail(n, t, d)
            }
        }
    }
}

/// Shared rows of the two chi_8-twisted tables: traces 2 and 6 mod 8 with the
/// determinant pinned mod 16.
fn chi8_tail(n: u32, t: u64, d: u64) -> u64 {
    let p4 = |k: u32| 1u64 << (2 * k);
    let t8 = t % 8;
    let d16 = d % 16;
    if (t8 == 2 && d16 == (t + 3) % 16) || (t8 == 6 && d16 == (t + 7) % 16) {
        6 * p4(n - 2)
    } else if (t8 == 2 && d16 == (t + 16 - 5) % 16) || (t8 == 6 && d16 == (t + 16 - 1) % 16) {
        let (delta, _) = delta_val(n, t, d);
        (10 + 2 * chi8((delta >> 4) % 8) as i64) as u64 * p4(n - 2)
    } else {
        0
    }
}

/// Which psi_2-value vectors to sum over.
pub type ImPsi = Vec<(i32, i32)>;

/// Per-vector 2-adic sums: for each `v` in `im`, the det-matched pair count
/// over `GL2(Z/2^alpha)` with trace sum `T` and prescribed psi_2 values.
///
/// Cost is `O(4^alpha)` thanks to the per-(t,d) closed-form counts.
pub fn sfrak_by_v(
    t_sum: i64,
    alpha: u32,
    codes: (Psi2Code, Psi2Code),
    im: &[(i32, i32)],
) -> Vec<((i32, i32), ExactInt)> {
    assert!(alpha >= 1 && alpha <= 20);
    let m = 1u64 << alpha;
    let t_sum = t_sum.rem_euclid(m as i64) as u64;
    let mut keys: Vec<(i32, i32)> = im.to_vec();
    keys.sort_by_key(|&v| (-v.0, -v.1));
    keys.dedup();
    let mut acc = vec![0i128; keys.len()];
    for t1 in 0..m {
        let t2 = (t_sum + m - t1) % m;
        for d in (1..m).step_by(2) {
            let tot1 = count2_u64(alpha, t1, d);
            let m1 = count2_psi_u64(alpha, t1, d, codes.0, -1);
            let tot2 = count2_u64(alpha, t2, d);
            let m2 = count2_psi_u64(alpha, t2, d, codes.1, -1);
            for (k, &(v1, v2)) in keys.iter().enumerate() {
                let c1 = if v1 == 1 { tot1 - m1 } else { m1 };
                let c2 = if v2 == 1 { tot2 - m2 } else { m2 };
                acc[k] += c1 as i128 * c2 as i128;
            }
        }
    }
    keys.into_iter().zip(acc.into_iter().map(int)).collect()
}

/// The aggregated 2-adic sums `(S, S1, S2)`: the plain sum over the image
/// vectors and the two signed sums weighted by `v1` resp. `v2`.
pub fn sfrak(
    t_sum: i64,
    alpha: u32,
    codes: (Psi2Code, Psi2Code),
    im: &[(i32, i32)],
) -> (ExactInt, ExactInt, ExactInt) {
    let parts = sfrak_by_v(t_sum, alpha, codes, im);
    let mut s = int(0);
    let mut s1 = int(0);
    let mut s2 = int(0);
    for ((v1, v2), c) in parts {
        s += &c;
        s1 += int(v1) * &c;
        s2 += int(v2) * &c;
    }
    (s, s1, s2)
}
