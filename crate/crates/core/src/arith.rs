//! Number-theoretic primitives shared by every other module: Kronecker
//! symbols, valuations, factorization, squarefree parts and prime sieves.
//!
//! All counting code downstream works with exact arithmetic; the aliases
//! [`ExactInt`] and [`ExactRat`] are used for every group count and local
//! factor until the final floating-point assembly.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, Zero};
use std::fmt;

pub type ExactInt = BigInt;
pub type ExactRat = BigRational;

/// Shorthand for building an `ExactInt` from any primitive integer.
pub fn int<T: Into<BigInt>>(v: T) -> ExactInt {
    v.into()
}

/// Exact rational from an integer numerator/denominator pair.
pub fn rat<N: Into<BigInt>, D: Into<BigInt>>(num: N, den: D) -> ExactRat {
    BigRational::new(num.into(), den.into())
}

#[derive(Debug, thiserror::Error)]
pub enum ArithError {
    #[error("factorization incomplete: cofactor {cofactor} survived trial division and rho")]
    FactorizationFailure {
        cofactor: ExactInt,
        partial: Factorization,
    },
}

/// Sign and ordered prime-power decomposition of a nonzero integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    /// `+1` or `-1`.
    pub sign: i8,
    /// `(prime, exponent)` with primes strictly increasing, exponents >= 1.
    pub factors: Vec<(ExactInt, u32)>,
}

impl Factorization {
    /// Multiplies the factorization back out.
    pub fn value(&self) -> ExactInt {
        let mut v = int(self.sign);
        for (p, e) in &self.factors {
            v *= p.pow(*e);
        }
        v
    }

    /// Iterator over the distinct primes.
    pub fn primes(&self) -> impl Iterator<Item = &ExactInt> {
        self.factors.iter().map(|(p, _)| p)
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign < 0 {
            write!(f, "-")?;
        }
        let mut first = true;
        for (p, e) in &self.factors {
            if !first {
                write!(f, " * ")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{e}")?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// Full Kronecker symbol `(a/n)`, defined for all integers including
/// `n <= 0` and even `n`; agrees with the Legendre symbol for odd prime `n`.
pub fn kronecker(a: &ExactInt, n: &ExactInt) -> i32 {
    // (a/0) = 1 iff a = +-1
    if n.is_zero() {
        return if a.abs().is_one() { 1 } else { 0 };
    }
    if a.is_even() && n.is_even() {
        return 0;
    }
    let mut a = a.clone();
    let mut n = n.clone();
    // (a/2) lookup by a mod 8: 0,1,0,-1,0,-1,0,1
    fn tab2(x: &ExactInt) -> i32 {
        const TAB: [i32; 8] = [0, 1, 0, -1, 0, -1, 0, 1];
        TAB[mod_pow2(x, 3) as usize]
    }
    let mut k = 1i32;
    let v = trailing_zeros(&n);
    n >>= v;
    if v % 2 == 1 {
        k = tab2(&a);
    }
    if n.is_negative() {
        n = -n;
        if a.is_negative() {
            k = -k;
        }
    }
    // invariant: n odd, positive
    loop {
        if a.is_zero() {
            return if n.is_one() { k } else { 0 };
        }
        let v = trailing_zeros(&a);
        a >>= v;
        if v % 2 == 1 {
            k *= tab2(&n);
        }
        // reciprocity flip when a = n = 3 mod 4 (valid for negative a too)
        if mod_pow2(&a, 2) == 3 && mod_pow2(&n, 2) == 3 {
            k = -k;
        }
        let r = a.abs();
        a = n.mod_floor(&r);
        n = r;
    }
}

/// Kronecker symbol on machine integers.
pub fn kronecker_i64(a: i64, n: i64) -> i32 {
    kronecker(&int(a), &int(n))
}

/// Residue of `x` modulo `2^bits` as a small nonnegative integer.
fn mod_pow2(x: &ExactInt, bits: u64) -> u64 {
    let m = int(1u64 << bits);
    let r = x.mod_floor(&m);
    let (_, digits) = r.to_u64_digits();
    digits.first().copied().unwrap_or(0)
}

fn trailing_zeros(x: &ExactInt) -> u64 {
    x.trailing_zeros().expect("trailing_zeros of zero")
}

/// Largest `e` with `l^e | n`. Panics on `n = 0`.
pub fn valuation(n: &ExactInt, l: &ExactInt) -> u32 {
    assert!(!n.is_zero(), "valuation of 0 is undefined");
    let mut n = n.abs();
    let mut e = 0u32;
    loop {
        let (q, r) = n.div_rem(l);
        if !r.is_zero() {
            return e;
        }
        n = q;
        e += 1;
    }
}

/// `v_l(n)` on machine integers. Panics on `n = 0`.
pub fn valuation_i64(n: i64, l: u64) -> u32 {
    assert!(n != 0, "valuation of 0 is undefined");
    let mut n = n.unsigned_abs();
    let mut e = 0u32;
    while n % l == 0 {
        n /= l;
        e += 1;
    }
    e
}

const TRIAL_LIMIT: u64 = 10_000_000;

/// Deterministic Miller-Rabin, valid for all `n < 3.3 * 10^24`.
///
/// For larger inputs the same base set is used and the result is a strong
/// probable-prime statement; `factorize` only meets such inputs when a curve
/// discriminant has a huge prime cofactor.
pub fn is_prime(n: &ExactInt) -> bool {
    if n < &int(2) {
        return false;
    }
    if let Some(n) = to_u128(n) {
        return is_prime_u128(n);
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    let nm1 = n - 1;
    let d = &nm1 >> trailing_zeros(&nm1);
    let s = trailing_zeros(&nm1);
    'bases: for b in BASES {
        let b = int(b).mod_floor(n);
        if b.is_zero() {
            continue;
        }
        let mut x = b.modpow(&d, n);
        if x.is_one() || x == nm1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&int(2), n);
            if x == nm1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

fn to_u128(n: &ExactInt) -> Option<u128> {
    use num::ToPrimitive;
    n.to_u128()
}

fn mulmod_u128(a: u128, b: u128, m: u128) -> u128 {
    if let (Ok(a), Ok(b), Ok(m)) = (u64::try_from(a), u64::try_from(b), u64::try_from(m)) {
        return (a as u128 * b as u128) % m as u128;
    }
    // schoolbook double-and-add; only hit for moduli above 2^64
    let mut r: u128 = 0;
    let mut a = a % m;
    let mut b = b % m;
    while b > 0 {
        if b & 1 == 1 {
            r = r.checked_add(a).map_or_else(|| (r % m) + (a % m), |v| v) % m;
        }
        a = a.checked_add(a).map_or_else(|| ((a % m) << 1) % m, |v| v) % m;
        b >>= 1;
    }
    r
}

fn powmod_u128(mut a: u128, mut e: u128, m: u128) -> u128 {
    let mut r: u128 = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod_u128(r, a, m);
        }
        a = mulmod_u128(a, a, m);
        e >>= 1;
    }
    r
}

pub fn is_prime_u128(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'bases: for b in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod_u128(b, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod_u128(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// Brent-cycle Pollard rho. Returns a nontrivial factor or None.
fn brent_rho(n: u128, seed: u64) -> Option<u128> {
    if n % 2 == 0 {
        return Some(2);
    }
    let c = 1 + (seed as u128) % (n - 1);
    let f = |x: u128| (mulmod_u128(x, x, n) + c) % n;
    let mut y: u128 = (seed as u128 + 2) % n;
    let (mut q, mut g) = (1u128, 1u128);
    let (mut x, mut ys) = (y, y);
    let m = 128u32;
    let mut r = 1u32;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0u32;
        while k < r && g == 1 {
            ys = y;
            for _ in 0..m.min(r - k) {
                y = f(y);
                let diff = if x > y { x - y } else { y - x };
                q = mulmod_u128(q, diff.max(1), n);
            }
            g = gcd_u128(q, n);
            k += m;
        }
        r <<= 1;
        if r > 1 << 24 {
            return None;
        }
    }
    if g == n {
        // backtrack
        loop {
            ys = f(ys);
            let diff = if x > ys { x - ys } else { ys - x };
            g = gcd_u128(diff.max(1), n);
            if g > 1 {
                break;
            }
        }
    }
    if g == n {
        None
    } else {
        Some(g)
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Complete prime factorization of a nonzero integer. Trial division up to
/// `min(10^7, sqrt(n))`, then bounded Brent-rho rounds with a Miller-Rabin
/// certificate on every reported prime. Fails loudly with the partial result
/// rather than mis-factoring.
pub fn factorize(n: &ExactInt) -> Result<Factorization, ArithError> {
    assert!(!n.is_zero(), "factorize(0) is undefined");
    let sign = if n.is_negative() { -1 } else { 1 };
    let mut out: Vec<(ExactInt, u32)> = Vec::new();
    let mut push = |p: ExactInt, e: u32| {
        out.push((p, e));
    };

    let abs = n.abs();
    let mut rest: u128 = match to_u128(&abs) {
        Some(v) => v,
        None => {
            // peel small primes in bigint arithmetic until the cofactor fits
            let mut m = abs.clone();
            let mut fits = None;
            let mut d = 2u64;
            while d < 100_000 {
                let dd = int(d);
                let mut e = 0;
                loop {
                    let (q, r) = m.div_rem(&dd);
                    if !r.is_zero() {
                        break;
                    }
                    m = q;
                    e += 1;
                }
                if e > 0 {
                    push(dd, e);
                }
                if let Some(v) = to_u128(&m) {
                    fits = Some(v);
                    break;
                }
                d = if d == 2 { 3 } else { d + 2 };
            }
            match fits {
                Some(v) => v,
                None if is_prime(&m) => {
                    push(m, 1);
                    out.sort();
                    return Ok(Factorization { sign, factors: out });
                }
                None => {
                    out.sort();
                    return Err(ArithError::FactorizationFailure {
                        cofactor: m,
                        partial: Factorization { sign, factors: out },
                    });
                }
            }
        }
    };

    // trial division with a 2,3 wheel
    let mut d: u64 = 2;
    while rest > 1 {
        if (d as u128) * (d as u128) > rest || d > TRIAL_LIMIT {
            break;
        }
        if rest % d as u128 == 0 {
            let mut e = 0;
            while rest % d as u128 == 0 {
                rest /= d as u128;
                e += 1;
            }
            push(int(d), e);
        }
        d = match d {
            2 => 3,
            3 => 5,
            _ => d + if d % 6 == 5 { 2 } else { 4 },
        };
    }
    // remaining cofactor: prime, or split with rho
    let mut stack = vec![rest];
    let mut rho_rounds = 0;
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime_u128(m) {
            merge_factor(&mut out, int(m));
            continue;
        }
        // cofactor below the trial bound squared would have been split already
        let mut split = None;
        for seed in 1..=24u64 {
            rho_rounds += 1;
            if rho_rounds > 64 {
                break;
            }
            if let Some(g) = brent_rho(m, seed) {
                if g != 1 && g != m {
                    split = Some(g);
                    break;
                }
            }
        }
        match split {
            Some(g) => {
                stack.push(g);
                stack.push(m / g);
            }
            None => {
                out.sort();
                return Err(ArithError::FactorizationFailure {
                    cofactor: int(m),
                    partial: Factorization { sign, factors: out },
                });
            }
        }
    }
    out.sort();
    Ok(Factorization { sign, factors: out })
}

fn merge_factor(out: &mut Vec<(ExactInt, u32)>, p: ExactInt) {
    for (q, e) in out.iter_mut() {
        if *q == p {
            *e += 1;
            return;
        }
    }
    out.push((p, 1));
}

/// The unique squarefree `d` with `n = d * k^2`; sign preserved.
pub fn squarefree_part(n: &ExactInt) -> Result<ExactInt, ArithError> {
    let f = factorize(n)?;
    let mut d = int(f.sign);
    for (p, e) in &f.factors {
        if e % 2 == 1 {
            d *= p;
        }
    }
    Ok(d)
}

/// Signed discriminant of the quadratic field `Q(sqrt(d_sf))`:
/// `d_sf` when `d_sf = 1 mod 4`, else `4 * d_sf`. Input must be squarefree.
pub fn fundamental_discriminant(d_sf: &ExactInt) -> ExactInt {
    debug_assert!(
        squarefree_part(d_sf).map(|s| &s == d_sf).unwrap_or(true),
        "input must be squarefree"
    );
    assert!(!d_sf.is_zero());
    if d_sf.mod_floor(&int(4)).is_one() {
        d_sf.clone()
    } else {
        d_sf * 4
    }
}

// ---------------------------------------------------------------------------
// primes
// ---------------------------------------------------------------------------

/// All primes `<= limit` by a simple sieve. Used for base primes and for
/// small enumerations; the segmented iterator below handles large sweeps.
pub fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Segmented prime iterator over `[2, limit]` with `O(sqrt(limit) + segment)`
/// memory.
pub struct Primes {
    base: Vec<u64>,
    segment: Vec<bool>,
    seg_lo: u64,
    seg_len: u64,
    idx: usize,
    limit: u64,
}

const SEGMENT: u64 = 1 << 18;

impl Primes {
    pub fn up_to(limit: u64) -> Primes {
        let root = (limit as f64).sqrt() as u64 + 2;
        Primes {
            base: small_primes(root),
            segment: Vec::new(),
            seg_lo: 2,
            seg_len: 0,
            idx: 0,
            limit,
        }
    }

    fn fill(&mut self, lo: u64) {
        let len = SEGMENT.min(self.limit.saturating_sub(lo) + 1);
        self.segment.clear();
        self.segment.resize(len as usize, true);
        for &p in &self.base {
            if p * p > lo + len {
                break;
            }
            let start = p.max(lo.div_ceil(p)) * p;
            if start > lo + len - 1 {
                continue;
            }
            let mut j = start - lo;
            while j < len {
                self.segment[j as usize] = false;
                j += p;
            }
        }
        if lo == 0 {
            if len > 0 {
                self.segment[0] = false;
            }
            if len > 1 {
                self.segment[1] = false;
            }
        } else if lo == 1 {
            self.segment[0] = false;
        }
        self.seg_lo = lo;
        self.seg_len = len;
        self.idx = 0;
    }
}

impl Iterator for Primes {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        loop {
            if self.seg_len == 0 {
                if self.seg_lo > self.limit {
                    return None;
                }
                let lo = if self.segment.is_empty() && self.seg_lo == 2 {
                    2
                } else {
                    self.seg_lo
                };
                if lo > self.limit {
                    return None;
                }
                self.fill(lo);
                continue;
            }
            while (self.idx as u64) < self.seg_len {
                let i = self.idx;
                self.idx += 1;
                if self.segment[i] {
                    return Some(self.seg_lo + i as u64);
                }
            }
            self.seg_lo += self.seg_len;
            self.seg_len = 0;
            if self.seg_lo > self.limit {
                return None;
            }
        }
    }
}

/// Primes in `(lo, hi]`, sieved segment-wise against `base` (all primes up to
/// `sqrt(hi)`). Used to hand prime blocks to sweep workers.
pub fn primes_in_range(lo: u64, hi: u64, base: &[u64]) -> Vec<u64> {
    if hi <= 1 || hi <= lo {
        return Vec::new();
    }
    let start = lo + 1;
    let len = (hi - start + 1) as usize;
    let mut flags = vec![true; len];
    for &p in base {
        if p * p > hi {
            break;
        }
        let first = p.max(start.div_ceil(p)) * p;
        let mut j = first;
        while j <= hi {
            if j > lo {
                flags[(j - start) as usize] = false;
            }
            j += p;
        }
    }
    let mut out = Vec::new();
    for (i, &f) in flags.iter().enumerate() {
        let v = start + i as u64;
        if f && v >= 2 {
            out.push(v);
        }
    }
    out
}

/// `gcd` on machine integers.
pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Integer square root.
pub fn isqrt_u64(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).map_or(false, |v| v <= n) {
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker_i64(1, 7), 1);
        assert_eq!(kronecker_i64(2, 3), -1);
        assert_eq!(kronecker_i64(-4, 7), -1);
        // full Kronecker edge cases
        assert_eq!(kronecker_i64(5, 0), 0);
        assert_eq!(kronecker_i64(1, 0), 1);
        assert_eq!(kronecker_i64(-1, 0), 1);
        assert_eq!(kronecker_i64(4, 6), 0);
        assert_eq!(kronecker_i64(2, -7), 1);
    }

    #[test]
    fn kronecker_matches_euler_criterion() {
        for &l in &[3u64, 5, 7, 11, 13, 17, 19, 23] {
            for a in -30i64..30 {
                let euler = {
                    let am = a.rem_euclid(l as i64) as u64;
                    if am == 0 {
                        0
                    } else {
                        let e = powmod_u128(am as u128, ((l - 1) / 2) as u128, l as u128);
                        if e == 1 {
                            1
                        } else {
                            -1
                        }
                    }
                };
                assert_eq!(kronecker_i64(a, l as i64), euler, "a={a} l={l}");
            }
        }
    }

    #[test]
    fn kronecker_multiplicative() {
        // deterministic pseudo-random triples, n odd positive
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..2000 {
            let a = (next() % 2001) as i64 - 1000;
            let b = (next() % 2001) as i64 - 1000;
            let n = (next() % 999 * 2 + 1) as i64;
            assert_eq!(
                kronecker_i64(a, n) * kronecker_i64(b, n),
                kronecker_i64(a.wrapping_mul(b), n)
            );
        }
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(&int(12), &int(2)), 2);
        assert_eq!(valuation(&int(12), &int(3)), 1);
        assert_eq!(valuation(&int(-3891), &int(3)), 1);
        assert_eq!(valuation_i64(-3891, 3), 1);
    }

    #[test]
    #[should_panic]
    fn valuation_rejects_zero() {
        valuation(&int(0), &int(3));
    }

    #[test]
    fn factorize_examples() {
        let f = factorize(&int(52283)).unwrap();
        assert_eq!(f.sign, 1);
        assert_eq!(f.factors, vec![(int(7), 2), (int(11), 1), (int(97), 1)]);
        let f = factorize(&int(-12)).unwrap();
        assert_eq!(f.sign, -1);
        assert_eq!(f.factors, vec![(int(2), 2), (int(3), 1)]);
        let f = factorize(&int(1297)).unwrap();
        assert_eq!(f.factors, vec![(int(1297), 1)]);
    }

    #[test]
    fn factorize_roundtrip() {
        for n in [-1i64, 1, 2, -2, 360, -360, 52283, 1297, 3891 * 52283] {
            let f = factorize(&int(n)).unwrap();
            assert_eq!(f.value(), int(n));
        }
        // a semiprime beyond the trial bound exercises rho
        let n = int(1_000_000_007i64) * int(998_244_353i64);
        let f = factorize(&n).unwrap();
        assert_eq!(f.value(), n);
        assert_eq!(f.factors.len(), 2);
    }

    #[test]
    fn squarefree_examples() {
        assert_eq!(squarefree_part(&int(12)).unwrap(), int(3));
        assert_eq!(squarefree_part(&int(-3891)).unwrap(), int(-3891));
        assert_eq!(squarefree_part(&int(-52283)).unwrap(), int(-1067));
        let n = 12i64;
        let d = squarefree_part(&int(n)).unwrap();
        let k2 = int(n) / &d;
        let k = isqrt_u64(4) as i64;
        assert_eq!(int(k) * int(k), k2);
    }

    #[test]
    fn fundamental_discriminant_examples() {
        assert_eq!(fundamental_discriminant(&int(5)), int(5));
        assert_eq!(fundamental_discriminant(&int(-1)), int(-4));
        assert_eq!(fundamental_discriminant(&int(-3891)), int(-3891));
        assert_eq!(fundamental_discriminant(&int(-3)), int(-3));
        assert_eq!(fundamental_discriminant(&int(2)), int(8));
        assert_eq!(fundamental_discriminant(&int(-2)), int(-8));
    }

    #[test]
    fn primes_examples() {
        assert_eq!(Primes::up_to(10).collect::<Vec<_>>(), vec![2, 3, 5, 7]);
        assert_eq!(Primes::up_to(2).collect::<Vec<_>>(), vec![2]);
        let p100: Vec<u64> = Primes::up_to(100).collect();
        assert_eq!(p100.len(), 25);
        assert_eq!(*p100.last().unwrap(), 97);
    }

    #[test]
    fn segmented_matches_simple() {
        let a: Vec<u64> = Primes::up_to(700_000).collect();
        let b = small_primes(700_000);
        assert_eq!(a, b);
        let r = primes_in_range(500_000, 500_500, &small_primes(1000));
        for &p in &r {
            assert!(is_prime_u128(p as u128));
        }
        assert_eq!(
            r,
            a.iter()
                .copied()
                .filter(|&p| p > 500_000 && p <= 500_500)
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn miller_rabin_spot_checks() {
        assert!(is_prime(&int(2)));
        assert!(is_prime(&int(1297)));
        assert!(!is_prime(&int(3891)));
        assert!(is_prime(&int(1_000_000_007i64)));
        assert!(!is_prime(&(int(1_000_000_007i64) * int(998_244_353i64))));
    }
}
