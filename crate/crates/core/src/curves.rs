//! Elliptic curve models over Q, reduction mod p, Frobenius trace kernels,
//! and the prime sweep that produces empirical trace-sum histograms.
//!
//! Two `a_p` kernels are provided. The baseline is a quadratic character sum
//! over `y^2 = f(x)` with a per-prime residue bitset: `O(p)` time, one bit
//! per residue class, no multiplications in the inner loop. The accelerator
//! finds the group order by baby-step/giant-step order finding in
//! `O(p^(1/4+eps))`; it falls back to the baseline on the rare primes where
//! point orders do not pin the group order inside the Hasse window. Both
//! kernels agree everywhere both run (see the tests), and the sweep output is
//! independent of how work is partitioned across workers.

use crate::arith::{int, isqrt_u64, primes_in_range, small_primes, ExactInt};
use num::{Integer, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Debug, thiserror::Error)]
pub enum CurveError {
    #[error("curve is singular (discriminant zero)")]
    Singular,
    #[error("prime {0} divides the model discriminant (bad reduction)")]
    BadReduction(u64),
    #[error("invalid curve spec: {0}")]
    Parse(String),
}

/// Long Weierstrass coefficients `(a1, a2, a3, a4, a6)` of a curve over Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CurveSpec {
    pub a1: i64,
    pub a2: i64,
    pub a3: i64,
    pub a4: i64,
    pub a6: i64,
}

impl CurveSpec {
    pub fn new(a1: i64, a2: i64, a3: i64, a4: i64, a6: i64) -> CurveSpec {
        CurveSpec { a1, a2, a3, a4, a6 }
    }

    /// `y^2 + xy = x^3 + l`, the one-parameter family used throughout.
    pub fn family(ell: u64) -> CurveSpec {
        CurveSpec::new(1, 0, 0, 0, ell as i64)
    }

    /// The b-invariants `(b2, b4, b6, b8)` of the long model.
    pub fn b_invariants(&self) -> (ExactInt, ExactInt, ExactInt, ExactInt) {
        let (a1, a2, a3, a4, a6) = (
            int(self.a1),
            int(self.a2),
            int(self.a3),
            int(self.a4),
            int(self.a6),
        );
        let b2 = &a1 * &a1 + int(4) * &a2;
        let b4 = int(2) * &a4 + &a1 * &a3;
        let b6 = &a3 * &a3 + int(4) * &a6;
        let b8 =
            &a1 * &a1 * &a6 + int(4) * &a2 * &a6 - &a1 * &a3 * &a4 + &a2 * &a3 * &a3 - &a4 * &a4;
        (b2, b4, b6, b8)
    }

    /// Standard discriminant of the long Weierstrass model; zero iff singular.
    pub fn discriminant(&self) -> ExactInt {
        let (b2, b4, b6, b8) = self.b_invariants();
        -&b2 * &b2 * &b8 - int(8) * &b4 * &b4 * &b4 - int(27) * &b6 * &b6 + int(9) * &b2 * &b4 * &b6
    }

    pub fn is_singular(&self) -> bool {
        self.discriminant().is_zero()
    }

    /// The c-invariants `(c4, c6)`.
    pub fn c_invariants(&self) -> (ExactInt, ExactInt) {
        let (b2, b4, b6, _) = self.b_invariants();
        let c4 = &b2 * &b2 - int(24) * &b4;
        let c6 = -&b2 * &b2 * &b2 + int(36) * &b2 * &b4 - int(216) * &b6;
        (c4, c6)
    }
}

impl fmt::Display for CurveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {}",
            self.a1, self.a2, self.a3, self.a4, self.a6
        )
    }
}

impl FromStr for CurveSpec {
    type Err = CurveError;
    fn from_str(s: &str) -> Result<CurveSpec, CurveError> {
        let parts: Vec<&str> = s.split([',', ' ']).filter(|v| !v.is_empty()).collect();
        if parts.len() != 5 {
            return Err(CurveError::Parse(format!(
                "expected 5 coefficients, got {}",
                parts.len()
            )));
        }
        let mut a = [0i64; 5];
        for (slot, part) in a.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|e| CurveError::Parse(format!("bad coefficient {part}: {e}")))?;
        }
        Ok(CurveSpec::new(a[0], a[1], a[2], a[3], a[4]))
    }
}

/// Serre-pair certificate for the family `y^2 + xy = x^3 + l`: true iff
/// `l1, l2` are distinct primes outside `{2, 7}` with
/// `gcd(432 l1^2 + l1, 432 l2^2 + l2) = 1`.
pub fn serre_family_check(l1: u64, l2: u64) -> bool {
    if l1 == l2 || l1 == 2 || l1 == 7 || l2 == 2 || l2 == 7 {
        return false;
    }
    if !crate::arith::is_prime_u128(l1 as u128) || !crate::arith::is_prime_u128(l2 as u128) {
        return false;
    }
    let g = int(432) * int(l1) * int(l1) + int(l1);
    let h = int(432) * int(l2) * int(l2) + int(l2);
    g.gcd(&h) == int(1)
}

/// A single Frobenius trace record; Hasse bound asserted on construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApRecord {
    pub p: u64,
    pub ap: i64,
}

impl ApRecord {
    pub fn new(p: u64, ap: i64) -> ApRecord {
        assert!(
            (ap as i128) * (ap as i128) <= 4 * p as i128,
            "Hasse bound violated at p={p}"
        );
        ApRecord { p, ap }
    }
}

// ---------------------------------------------------------------------------
// kernels
// ---------------------------------------------------------------------------

fn mod_p(v: i64, p: u64) -> u64 {
    v.rem_euclid(p as i64) as u64
}

fn big_mod_p(v: &ExactInt, p: u64) -> u64 {
    v.mod_floor(&int(p)).to_u64().unwrap()
}

/// Quadratic residue bitset mod p: bit z set iff z is a nonzero square.
struct QrTable {
    bits: Vec<u64>,
}

impl QrTable {
    fn build(p: u64) -> QrTable {
        let mut bits = vec![0u64; (p as usize + 63) / 64];
        // mark y^2 for y = 1 .. p/2 incrementally: (y+1)^2 - y^2 = 2y + 1
        let mut sq = 1u64;
        let mut inc = 3u64;
        let mut y = 1u64;
        while 2 * y <= p {
            bits[(sq >> 6) as usize] |= 1 << (sq & 63);
            sq += inc;
            if sq >= p {
                sq -= p;
            }
            inc += 2;
            if inc >= p {
                inc -= p;
            }
            y += 1;
        }
        QrTable { bits }
    }

    #[inline(always)]
    fn chi(&self, z: u64) -> i64 {
        if z == 0 {
            0
        } else if self.bits[(z >> 6) as usize] >> (z & 63) & 1 == 1 {
            1
        } else {
            -1
        }
    }
}

/// Cubic `f(x) = 4x^3 + b2 x^2 + 2 b4 x + b6 mod p`; the substitution
/// `z = 2y + a1 x + a3` turns the affine long model into `z^2 = f(x)` for
/// odd p, so `a_p = -sum_x chi(f(x))`. Evaluated by constant third
/// differences: no multiplications in the loop.
struct ReducedCubic {
    f0: u64,
    d1: u64,
    d2: u64,
    d3: u64,
    p: u64,
}

impl ReducedCubic {
    fn new(curve: &CurveSpec, p: u64) -> ReducedCubic {
        let (b2, b4, b6, _) = curve.b_invariants();
        let (b2, b4, b6) = (big_mod_p(&b2, p), big_mod_p(&b4, p), big_mod_p(&b6, p));
        let f = |x: u64| -> u64 {
            let x = x as u128;
            let p128 = p as u128;
            ((4 * x % p128 * x % p128 * x
                + b2 as u128 * x % p128 * x
                + 2 * b4 as u128 * x
                + b6 as u128)
                % p128) as u64
        };
        let (f0, f1, f2, f3) = (f(0), f(1), f(2), f(3));
        let sub = |a: u64, b: u64| (a + p - b) % p;
        let d1 = sub(f1, f0);
        let d2 = sub(sub(f2, f1), d1);
        // third difference of a cubic with leading coefficient 4
        let d3 = 24 % p;
        debug_assert_eq!(
            d3,
            sub(sub(sub(f3, f2), sub(f2, f1)), sub(sub(f2, f1), sub(f1, f0)))
        );
        ReducedCubic { f0, d1, d2, d3, p }
    }

    fn char_sum(&self, qr: &QrTable) -> i64 {
        let p = self.p;
        let (mut cur, mut d1, mut d2) = (self.f0, self.d1, self.d2);
        let mut sum = 0i64;
        for _ in 0..p {
            sum += qr.chi(cur);
            cur += d1;
            if cur >= p {
                cur -= p;
            }
            d1 += d2;
            if d1 >= p {
                d1 -= p;
            }
            d2 += self.d3;
            if d2 >= p {
                d2 -= p;
            }
        }
        sum
    }
}

/// Point enumeration on the long model; used for p = 2 and 3.
fn ap_enumerate(curve: &CurveSpec, p: u64) -> i64 {
    let (a1, a2, a3, a4, a6) = (
        mod_p(curve.a1, p),
        mod_p(curve.a2, p),
        mod_p(curve.a3, p),
        mod_p(curve.a4, p),
        mod_p(curve.a6, p),
    );
    let mut n = 1u64; // point at infinity
    for x in 0..p {
        for y in 0..p {
            let lhs = (y * y + a1 * x % p * y + a3 * y) % p;
            let rhs = (x * x % p * x + a2 * x % p * x + a4 * x + a6) % p;
            if lhs == rhs {
                n += 1;
            }
        }
    }
    p as i64 + 1 - n as i64
}

/// Baseline `a_p` kernel: enumeration for p in {2, 3}, character sum above.
/// Rejects primes dividing the model discriminant.
pub fn ap(curve: &CurveSpec, p: u64) -> Result<i64, CurveError> {
    let disc = curve.discriminant();
    if disc.is_zero() {
        return Err(CurveError::Singular);
    }
    if big_mod_p(&disc, p) == 0 {
        return Err(CurveError::BadReduction(p));
    }
    let ap = if p <= 3 {
        ap_enumerate(curve, p)
    } else {
        let qr = QrTable::build(p);
        -ReducedCubic::new(curve, p).char_sum(&qr)
    };
    Ok(ApRecord::new(p, ap).ap)
}

// --- baby-step/giant-step order finding ------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Pt {
    Inf,
    Affine(u64, u64),
}

struct ShortCurve {
    p: u64,
    a: u64,
    b: u64,
}

impl ShortCurve {
    fn mul(&self, x: u64, y: u64) -> u64 {
        (x as u128 * y as u128 % self.p as u128) as u64
    }

    fn add_m(&self, x: u64, y: u64) -> u64 {
        let s = x + y;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    fn sub_m(&self, x: u64, y: u64) -> u64 {
        if x >= y {
            x - y
        } else {
            x + self.p - y
        }
    }

    fn inv(&self, a: u64) -> u64 {
        let (mut t, mut new_t) = (0i128, 1i128);
        let (mut r, mut new_r) = (self.p as i128, a as i128);
        while new_r != 0 {
            let q = r / new_r;
            (t, new_t) = (new_t, t - q * new_t);
            (r, new_r) = (new_r, r - q * new_r);
        }
        debug_assert_eq!(r, 1);
        t.rem_euclid(self.p as i128) as u64
    }

    fn neg(&self, pt: Pt) -> Pt {
        match pt {
            Pt::Inf => Pt::Inf,
            Pt::Affine(x, y) => Pt::Affine(x, if y == 0 { 0 } else { self.p - y }),
        }
    }

    fn add(&self, p1: Pt, p2: Pt) -> Pt {
        match (p1, p2) {
            (Pt::Inf, q) => q,
            (q, Pt::Inf) => q,
            (Pt::Affine(x1, y1), Pt::Affine(x2, y2)) => {
                if x1 == x2 {
                    if self.add_m(y1, y2) == 0 {
                        return Pt::Inf;
                    }
                    let num = self.add_m(self.mul(3, self.mul(x1, x1)), self.a);
                    let lam = self.mul(num, self.inv(self.mul(2, y1)));
                    let x3 = self.sub_m(self.mul(lam, lam), self.add_m(x1, x1));
                    let y3 = self.sub_m(self.mul(lam, self.sub_m(x1, x3)), y1);
                    Pt::Affine(x3, y3)
                } else {
                    let lam = self.mul(self.sub_m(y2, y1), self.inv(self.sub_m(x2, x1)));
                    let x3 = self.sub_m(self.sub_m(self.mul(lam, lam), x1), x2);
                    let y3 = self.sub_m(self.mul(lam, self.sub_m(x1, x3)), y1);
                    Pt::Affine(x3, y3)
                }
            }
        }
    }

    fn mul_pt(&self, mut k: u64, pt: Pt) -> Pt {
        let mut acc = Pt::Inf;
        let mut base = pt;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            k >>= 1;
        }
        acc
    }

    fn rhs(&self, x: u64) -> u64 {
        self.add_m(
            self.add_m(self.mul(self.mul(x, x), x), self.mul(self.a, x)),
            self.b,
        )
    }
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * a as u128 % p as u128) as u64;
        }
        a = (a as u128 * a as u128 % p as u128) as u64;
        e >>= 1;
    }
    r
}

/// Tonelli-Shanks square root mod an odd prime; None for non-residues.
fn mod_sqrt(a: u64, p: u64) -> Option<u64> {
    if a == 0 {
        return Some(0);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(a, (p + 1) / 4, p));
    }
    let s = (p - 1).trailing_zeros();
    let q = (p - 1) >> s;
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = (t2 as u128 * t2 as u128 % p as u128) as u64;
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = (b as u128 * b as u128 % p as u128) as u64;
        t = (t as u128 * c as u128 % p as u128) as u64;
        r = (r as u128 * b as u128 % p as u128) as u64;
    }
    Some(r)
}

/// Smallest `j in [0, width]` with `base + j P = O`, by baby-step/giant-step.
fn bsgs_first_kill(curve: &ShortCurve, base: Pt, point: Pt, width: u64) -> Option<u64> {
    let m = isqrt_u64(width) + 1;
    let mut table: HashMap<Pt, u64> = HashMap::with_capacity(m as usize + 1);
    let mut acc = Pt::Inf;
    for j in 0..m {
        table.entry(acc).or_insert(j);
        acc = curve.add(acc, point);
    }
    // acc = m P; solve j P = -base with j = a m + b
    let step = curve.neg(acc);
    let mut target = curve.neg(base);
    let mut best: Option<u64> = None;
    let mut a = 0u64;
    while a * m <= width {
        if let Some(&b) = table.get(&target) {
            let j = a * m + b;
            if j <= width {
                best = Some(best.map_or(j, |v: u64| v.min(j)));
            }
        }
        target = curve.add(target, step);
        a += 1;
    }
    best
}

/// Exact order of a point given some multiple `k` with `k P = O`.
fn point_order(curve: &ShortCurve, point: Pt, k: u64) -> u64 {
    let mut ord = k;
    let fact = crate::arith::factorize(&int(k)).expect("small integer factors");
    for (q, _) in &fact.factors {
        let q = q.to_u64().unwrap();
        while ord % q == 0 && curve.mul_pt(ord / q, point) == Pt::Inf {
            ord /= q;
        }
    }
    ord
}

/// Group order of `y^2 = x^3 + ax + b` over F_p via accumulation of point
/// orders; None if several candidates survive the point budget (possible
/// when the group exponent is small relative to the Hasse window).
fn find_group_order(curve: &ShortCurve) -> Option<u64> {
    let p = curve.p;
    let h = isqrt_u64(4 * p);
    let (lo, hi) = (p + 1 - h, p + 1 + h);
    let mut l = 1u64;
    let mut tried = 0;
    for x in 0..p {
        if tried >= 12 {
            return None;
        }
        let y = match mod_sqrt(curve.rhs(x), p) {
            Some(y) => y,
            None => continue,
        };
        tried += 1;
        let pt = Pt::Affine(x, y);
        let base = curve.mul_pt(lo, pt);
        let j = bsgs_first_kill(curve, base, pt, hi - lo)?;
        let ord = point_order(curve, pt, lo + j);
        l = l / crate::arith::gcd_u64(l, ord) * ord;
        // the true order is the unique multiple of l in the window, if unique
        let first = lo.div_ceil(l) * l;
        if first > hi {
            return None;
        }
        if first + l > hi {
            return Some(first);
        }
    }
    None
}

/// Accelerated `a_p` kernel (p >= 5): group order by BSGS, with a baseline
/// fallback on primes where the order is not pinned by point orders alone.
pub fn ap_bsgs(curve: &CurveSpec, p: u64) -> Result<i64, CurveError> {
    let disc = curve.discriminant();
    if disc.is_zero() {
        return Err(CurveError::Singular);
    }
    if big_mod_p(&disc, p) == 0 {
        return Err(CurveError::BadReduction(p));
    }
    if p < 5 {
        return ap(curve, p);
    }
    let (c4, c6) = curve.c_invariants();
    let a = big_mod_p(&(-c4 * int(27)), p);
    let b = big_mod_p(&(-c6 * int(54)), p);
    let short = ShortCurve { p, a, b };
    match find_group_order(&short) {
        Some(n) => Ok(ApRecord::new(p, p as i64 + 1 - n as i64).ap),
        None => ap(curve, p),
    }
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

/// Per-prime sweep output: `(p, a_p(E1) + a_p(E2))` for good primes in
/// ascending order, plus the excluded bad primes.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub curve1: CurveSpec,
    pub curve2: CurveSpec,
    pub x: u64,
    pub bad_primes: BTreeSet<u64>,
    pub records: Vec<(u64, i64)>,
}

/// Histogram of trace sums `T` over good primes `p <= x`. Keys never observed
/// are absent and count as zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceHistogram {
    pub x: u64,
    pub curve1: CurveSpec,
    pub curve2: CurveSpec,
    pub bad_primes: BTreeSet<u64>,
    pub counts: BTreeMap<i64, u64>,
}

impl TraceHistogram {
    pub fn from_outcome(out: &SweepOutcome) -> TraceHistogram {
        let mut counts = BTreeMap::new();
        let bound = (4.0 * (out.x as f64).sqrt()).ceil() as i64;
        for &(_, t) in &out.records {
            assert!(t.abs() <= bound, "Hasse bound violated in histogram");
            *counts.entry(t).or_insert(0u64) += 1;
        }
        TraceHistogram {
            x: out.x,
            curve1: out.curve1,
            curve2: out.curve2,
            bad_primes: out.bad_primes.clone(),
            counts,
        }
    }

    /// Count for a trace value (absent keys are zero).
    pub fn count(&self, t: i64) -> u64 {
        self.counts.get(&t).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// Primes above this bound go to the BSGS kernel inside the sweep.
const BSGS_CROSSOVER: u64 = 20_000;
const BLOCK: u64 = 1 << 15;

/// Frobenius trace sums for both curves over all good primes in `(lo, hi]`,
/// fanned out to `workers` threads in fixed blocks. Blocks are merged in
/// block order and the per-prime work is deterministic, so the result does
/// not depend on `workers`.
pub fn sweep_range(
    curve1: &CurveSpec,
    curve2: &CurveSpec,
    lo: u64,
    hi: u64,
    workers: usize,
) -> Result<(Vec<(u64, i64)>, BTreeSet<u64>), CurveError> {
    let d1 = curve1.discriminant();
    let d2 = curve2.discriminant();
    if d1.is_zero() || d2.is_zero() {
        return Err(CurveError::Singular);
    }
    let base = small_primes(isqrt_u64(hi) + 1);
    let mut blocks = Vec::new();
    let mut b = lo;
    while b < hi {
        let e = (b + BLOCK).min(hi);
        blocks.push((b, e));
        b = e;
    }
    let workers = workers.max(1);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<(Vec<(u64, i64)>, Vec<u64>)>>> =
        Mutex::new(vec![None; blocks.len()]);

    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= blocks.len() {
                    break;
                }
                let (blo, bhi) = blocks[idx];
                let mut recs = Vec::new();
                let mut bad = Vec::new();
                for p in primes_in_range(blo, bhi, &base) {
                    if big_mod_p(&d1, p) == 0 || big_mod_p(&d2, p) == 0 {
                        bad.push(p);
                        continue;
                    }
                    let (t1, t2) = if p <= 3 {
                        (ap_enumerate(curve1, p), ap_enumerate(curve2, p))
                    } else if p <= BSGS_CROSSOVER {
                        let qr = QrTable::build(p);
                        (
                            -ReducedCubic::new(curve1, p).char_sum(&qr),
                            -ReducedCubic::new(curve2, p).char_sum(&qr),
                        )
                    } else {
                        (
                            ap_bsgs(curve1, p).expect("good prime"),
                            ap_bsgs(curve2, p).expect("good prime"),
                        )
                    };
                    let (t1, t2) = (ApRecord::new(p, t1).ap, ApRecord::new(p, t2).ap);
                    recs.push((p, t1 + t2));
                }
                results.lock().unwrap()[idx] = Some((recs, bad));
            });
        }
    });

    let mut records = Vec::new();
    let mut bad = BTreeSet::new();
    for slot in results.into_inner().unwrap() {
        let (recs, b) = slot.expect("all blocks computed");
        records.extend(recs);
        bad.extend(b);
    }
    Ok((records, bad))
}

/// Full sweep over good primes `p <= x`.
pub fn sweep(
    curve1: &CurveSpec,
    curve2: &CurveSpec,
    x: u64,
    workers: usize,
) -> Result<SweepOutcome, CurveError> {
    assert!(x >= 2);
    let (records, bad_primes) = sweep_range(curve1, curve2, 1, x, workers)?;
    Ok(SweepOutcome {
        curve1: *curve1,
        curve2: *curve2,
        x,
        bad_primes,
        records,
    })
}

// ---------------------------------------------------------------------------
// sweep cache file
// ---------------------------------------------------------------------------

pub mod cache {
    //! Text cache for sweep results:
    //! ```text
    //! # frobtrace-cache v1
    //! # curve1: a1 a2 a3 a4 a6
    //! # curve2: a1 a2 a3 a4 a6
    //! # x: <bound>
    //! # bad: <space-separated primes>
    //! p,apsum        (one line per good prime, increasing p)
    //! ```

    use super::{CurveError, CurveSpec, SweepOutcome};
    use std::collections::BTreeSet;
    use std::io::Write;
    use std::path::Path;

    pub const MAGIC: &str = "# frobtrace-cache v1";

    #[derive(Debug, thiserror::Error)]
    pub enum CacheError {
        #[error("io error: {0}")]
        Io(#[from] std::io::Error),
        #[error("malformed cache: {0}")]
        Malformed(String),
        #[error("cache header does not match the requested curves (use --force to overwrite)")]
        HeaderMismatch,
        #[error(transparent)]
        Curve(#[from] CurveError),
    }

    pub fn render(out: &SweepOutcome) -> String {
        let mut s = String::new();
        s.push_str(MAGIC);
        s.push('\n');
        s.push_str(&format!("# curve1: {}\n", out.curve1));
        s.push_str(&format!("# curve2: {}\n", out.curve2));
        s.push_str(&format!("# x: {}\n", out.x));
        let bad: Vec<String> = out.bad_primes.iter().map(|p| p.to_string()).collect();
        s.push_str(&format!("# bad: {}\n", bad.join(" ")));
        for &(p, t) in &out.records {
            s.push_str(&format!("{p},{t}\n"));
        }
        s
    }

    pub fn write(path: &Path, out: &SweepOutcome) -> Result<(), CacheError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(render(out).as_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<SweepOutcome, CacheError> {
        let text = std::fs::read_to_string(path)?;
        parse(&text)
    }

    pub fn parse(text: &str) -> Result<SweepOutcome, CacheError> {
        let mut lines = text.lines();
        let magic = lines.next().unwrap_or("");
        if magic != MAGIC {
            return Err(CacheError::Malformed(format!("bad magic line: {magic}")));
        }
        let header = |line: Option<&str>, key: &str| -> Result<String, CacheError> {
            let line = line.ok_or_else(|| CacheError::Malformed("truncated header".into()))?;
            let prefix = format!("# {key}:");
            line.strip_prefix(&prefix)
                .map(|v| v.trim().to_string())
                .ok_or_else(|| CacheError::Malformed(format!("expected `{prefix}`, got `{line}`")))
        };
        let curve1: CurveSpec = header(lines.next(), "curve1")?.parse()?;
        let curve2: CurveSpec = header(lines.next(), "curve2")?.parse()?;
        let x: u64 = header(lines.next(), "x")?
            .parse()
            .map_err(|e| CacheError::Malformed(format!("bad x: {e}")))?;
        let bad: BTreeSet<u64> = header(lines.next(), "bad")?
            .split_whitespace()
            .map(|v| {
                v.parse()
                    .map_err(|e| CacheError::Malformed(format!("bad prime: {e}")))
            })
            .collect::<Result<_, _>>()?;
        let mut records = Vec::new();
        let mut last_p = 0;
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let (p, t) = line
                .split_once(',')
                .ok_or_else(|| CacheError::Malformed(format!("bad record `{line}`")))?;
            let p: u64 = p
                .parse()
                .map_err(|e| CacheError::Malformed(format!("bad prime: {e}")))?;
            let t: i64 = t
                .parse()
                .map_err(|e| CacheError::Malformed(format!("bad trace: {e}")))?;
            if p <= last_p {
                return Err(CacheError::Malformed("primes not increasing".into()));
            }
            last_p = p;
            records.push((p, t));
        }
        Ok(SweepOutcome {
            curve1,
            curve2,
            x,
            bad_primes: bad,
            records,
        })
    }

    /// Outcome of a cache-aware sweep.
    #[derive(Debug, PartialEq, Eq, Clone, Copy)]
    pub enum CacheStatus {
        Miss,
        Hit,
        Resumed,
        Truncated,
        Overwritten,
    }

    /// Sweep with a cache file: a matching header returns or resumes from the
    /// cached records; a mismatched header is an error unless `force`.
    pub fn cached_sweep(
        curve1: &CurveSpec,
        curve2: &CurveSpec,
        x: u64,
        workers: usize,
        path: &Path,
        force: bool,
    ) -> Result<(SweepOutcome, CacheStatus), CacheError> {
        if path.exists() {
            match read(path) {
                Ok(prev) if prev.curve1 == *curve1 && prev.curve2 == *curve2 => {
                    if prev.x == x {
                        return Ok((prev, CacheStatus::Hit));
                    }
                    if prev.x > x {
                        // serve the prefix without touching the file
                        let records = prev
                            .records
                            .iter()
                            .copied()
                            .filter(|&(p, _)| p <= x)
                            .collect();
                        let bad_primes = prev
                            .bad_primes
                            .iter()
                            .copied()
                            .filter(|&p| p <= x)
                            .collect();
                        return Ok((
                            SweepOutcome {
                                curve1: *curve1,
                                curve2: *curve2,
                                x,
                                bad_primes,
                                records,
                            },
                            CacheStatus::Truncated,
                        ));
                    }
                    // resume from the cached bound
                    let (mut records, mut bad) = (prev.records, prev.bad_primes);
                    let (more, more_bad) = super::sweep_range(curve1, curve2, prev.x, x, workers)?;
                    records.extend(more);
                    bad.extend(more_bad);
                    let out = SweepOutcome {
                        curve1: *curve1,
                        curve2: *curve2,
                        x,
                        bad_primes: bad,
                        records,
                    };
                    write(path, &out)?;
                    return Ok((out, CacheStatus::Resumed));
                }
                _ if !force => return Err(CacheError::HeaderMismatch),
                _ => {
                    let out = super::sweep(curve1, curve2, x, workers)?;
                    write(path, &out)?;
                    return Ok((out, CacheStatus::Overwritten));
                }
            }
        }
        let out = super::sweep(curve1, curve2, x, workers)?;
        write(path, &out)?;
        Ok((out, CacheStatus::Miss))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discriminants() {
        assert_eq!(CurveSpec::new(0, 0, 0, 1, 1).discriminant(), int(-496));
        assert_eq!(CurveSpec::family(3).discriminant(), int(-3891));
        assert_eq!(CurveSpec::family(11).discriminant(), int(-52283));
        assert!(CurveSpec::new(0, 0, 0, 0, 0).is_singular());
    }

    #[test]
    fn ap_examples() {
        // y^2 = x^3 + x + 1 over F_5 has 9 points
        assert_eq!(ap(&CurveSpec::new(0, 0, 0, 1, 1), 5).unwrap(), -3);
        // y^2 = x^3 + 2 over F_5 has 6 points
        assert_eq!(ap(&CurveSpec::new(0, 0, 0, 0, 2), 5).unwrap(), 0);
        assert!(matches!(
            ap(&CurveSpec::family(3), 3),
            Err(CurveError::BadReduction(3))
        ));
    }

    #[test]
    fn ap_matches_naive_enumeration() {
        let curves = [
            CurveSpec::family(3),
            CurveSpec::family(11),
            CurveSpec::new(0, 1, 0, 1, 0),
            CurveSpec::new(1, 1, 0, 1, 0),
            CurveSpec::new(0, 0, 0, -1, 1),
        ];
        for curve in &curves {
            let disc = curve.discriminant();
            for p in crate::arith::Primes::up_to(60) {
                if big_mod_p(&disc, p) == 0 {
                    continue;
                }
                assert_eq!(
                    ap(curve, p).unwrap(),
                    ap_enumerate(curve, p),
                    "curve={curve} p={p}"
                );
            }
        }
    }

    #[test]
    fn kernel_agreement() {
        // baseline vs accelerator on all good primes in [5, 10^4]
        let curve = CurveSpec::family(3);
        let disc = curve.discriminant();
        for p in crate::arith::Primes::up_to(10_000) {
            if p < 5 || big_mod_p(&disc, p) == 0 {
                continue;
            }
            assert_eq!(ap(&curve, p).unwrap(), ap_bsgs(&curve, p).unwrap(), "p={p}");
        }
    }

    #[test]
    fn kernel_agreement_large_primes() {
        let c1 = CurveSpec::family(11);
        for p in [100_003u64, 262_147, 999_983] {
            if !crate::arith::is_prime_u128(p as u128) {
                continue;
            }
            assert_eq!(ap(&c1, p).unwrap(), ap_bsgs(&c1, p).unwrap(), "p={p}");
        }
    }

    #[test]
    fn sweep_small() {
        let (c1, c2) = (CurveSpec::family(3), CurveSpec::family(11));
        let out = sweep(&c1, &c2, 10, 1).unwrap();
        // good primes up to 10: 2 and 5 (3 divides -3891, 7 divides -52283)
        let ps: Vec<u64> = out.records.iter().map(|r| r.0).collect();
        assert_eq!(ps, vec![2, 5]);
        assert_eq!(
            out.bad_primes.iter().copied().collect::<Vec<_>>(),
            vec![3, 7]
        );
        for &(p, t) in &out.records {
            assert_eq!(t, ap(&c1, p).unwrap() + ap(&c2, p).unwrap());
        }
    }

    #[test]
    fn sweep_worker_independence() {
        let (c1, c2) = (CurveSpec::family(3), CurveSpec::family(11));
        let a = sweep(&c1, &c2, 30_000, 1).unwrap();
        let b = sweep(&c1, &c2, 30_000, 3).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.bad_primes, b.bad_primes);
    }

    #[test]
    fn sweep_totals_partition_primes() {
        let (c1, c2) = (CurveSpec::family(3), CurveSpec::family(11));
        let out = sweep(&c1, &c2, 10_000, 2).unwrap();
        let hist = TraceHistogram::from_outcome(&out);
        let pi = crate::arith::Primes::up_to(10_000).count() as u64;
        assert_eq!(hist.total() + out.bad_primes.len() as u64, pi);
    }

    #[test]
    fn doubled_curve_gives_even_traces() {
        let c = CurveSpec::family(5);
        let out = sweep(&c, &c, 3_000, 2).unwrap();
        let hist = TraceHistogram::from_outcome(&out);
        assert!(hist.counts.keys().all(|t| t % 2 == 0));
    }

    #[test]
    fn serre_family_examples() {
        assert!(serre_family_check(3, 11));
        assert!(!serre_family_check(3, 7));
        assert!(!serre_family_check(5, 5));
        assert!(serre_family_check(31, 107));
        assert!(serre_family_check(79, 107));
    }

    #[test]
    fn cache_roundtrip() {
        let (c1, c2) = (CurveSpec::family(3), CurveSpec::family(11));
        let out = sweep(&c1, &c2, 500, 1).unwrap();
        let text = cache::render(&out);
        let back = cache::parse(&text).unwrap();
        assert_eq!(back.records, out.records);
        assert_eq!(back.bad_primes, out.bad_primes);
        assert_eq!(back.x, out.x);
        assert_eq!(cache::render(&back), text);
    }

    #[test]
    fn cached_sweep_flow() {
        let dir = std::env::temp_dir().join(format!("frobtrace-cache-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sweep.cache");
        let _ = std::fs::remove_file(&path);
        let (c1, c2) = (CurveSpec::family(3), CurveSpec::family(11));

        let (out, st) = cache::cached_sweep(&c1, &c2, 400, 1, &path, false).unwrap();
        assert_eq!(st, cache::CacheStatus::Miss);
        let bytes = std::fs::read(&path).unwrap();

        let (again, st) = cache::cached_sweep(&c1, &c2, 400, 1, &path, false).unwrap();
        assert_eq!(st, cache::CacheStatus::Hit);
        assert_eq!(again.records, out.records);
        assert_eq!(
            std::fs::read(&path).unwrap(),
            bytes,
            "cache hit must not rewrite"
        );

        let (more, st) = cache::cached_sweep(&c1, &c2, 800, 1, &path, false).unwrap();
        assert_eq!(st, cache::CacheStatus::Resumed);
        let direct = sweep(&c1, &c2, 800, 1).unwrap();
        assert_eq!(more.records, direct.records);
        assert_eq!(more.bad_primes, direct.bad_primes);

        let (less, st) = cache::cached_sweep(&c1, &c2, 400, 1, &path, false).unwrap();
        assert_eq!(st, cache::CacheStatus::Truncated);
        assert_eq!(less.records, out.records);

        // different curves: refuse without force
        let other = CurveSpec::family(5);
        assert!(matches!(
            cache::cached_sweep(&c1, &other, 400, 1, &path, false),
            Err(cache::CacheError::HeaderMismatch)
        ));
        let (_, st) = cache::cached_sweep(&c1, &other, 400, 1, &path, true).unwrap();
        assert_eq!(st, cache::CacheStatus::Overwritten);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn curve_parsing() {
        let c: CurveSpec = "1,0,0,0,3".parse().unwrap();
        assert_eq!(c, CurveSpec::family(3));
        assert!("1,2,3".parse::<CurveSpec>().is_err());
        assert!("1,2,3,x,5".parse::<CurveSpec>().is_err());
    }
}
