//! Serre-pair profiles and the factor of the density constant carried by the
//! primes dividing the conductor `m_A = lcm(2, |D1|, |D2|)`.
//!
//! The canonical assembly (`exceptional_count`) follows the direct
//! summation: the 2-adic block is summed per character-value vector `v`,
//! each odd conductor prime contributes a block `(A_l + v_l B_l)/2` with the
//! sign vector `(v_l)` constrained by the two Jacobi products, and the
//! prefactor collects the per-prime scale `l^(5a-5) phi(l^a)`. Two collapsed
//! closed forms of this sum are in circulation that disagree with each other;
//! `oracle::resolve_variants` arbitrates them against enumeration, and the
//! provably equivalent four-term collapse is asserted here in debug builds.

use crate::arith::{
    factorize, fundamental_discriminant, int, squarefree_part, valuation_i64, ArithError, ExactInt,
    ExactRat,
};
use crate::curves::{serre_family_check, CurveSpec};
use crate::matcount;
use crate::twocount::{self, Psi2Code};
use num::{Integer, One, Signed, ToPrimitive, Zero};

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("curve is singular")]
    Singular,
    #[error(transparent)]
    Factor(#[from] ArithError),
    #[error("pair is not certified as a Serre pair (family check failed and no attestation)")]
    NotCertified,
    #[error("conductor prime {0} too large for exact evaluation")]
    ConductorPrimeTooLarge(ExactInt),
}

/// Conductor-level data for a Serre pair.
#[derive(Debug, Clone)]
pub struct SerrePairProfile {
    /// Signed fundamental discriminants of `Q(sqrt(disc E_i))`.
    pub d1: ExactInt,
    pub d2: ExactInt,
    /// Positive odd parts `|D_i'|`.
    pub d1_odd: ExactInt,
    pub d2_odd: ExactInt,
    /// `m_A = lcm(2, |D1|, |D2|)`.
    pub m_a: ExactInt,
    /// 2-adic character components.
    pub psi2: (Psi2Code, Psi2Code),
    /// Image of the odd-part character pair, as value vectors.
    pub im_psi: Vec<(i32, i32)>,
    /// Odd primes dividing `m_A` (equivalently `|D1' D2'|`), increasing.
    pub odd_primes: Vec<u64>,
    pub d1_primes: Vec<u64>,
    pub d2_primes: Vec<u64>,
}

impl SerrePairProfile {
    /// Profile from the signed fundamental discriminants directly; used for
    /// synthetic tests and by `from_curves` below.
    pub fn from_discriminants(
        d1: ExactInt,
        d2: ExactInt,
    ) -> Result<SerrePairProfile, ProfileError> {
        let odd_part = |d: &ExactInt| -> ExactInt {
            let mut v = d.abs();
            while v.is_even() {
                v /= 2;
            }
            v
        };
        let d1_odd = odd_part(&d1);
        let d2_odd = odd_part(&d2);
        let m_a = int(2).lcm(&d1.abs()).lcm(&d2.abs());
        let psi2 = (
            Psi2Code::from_discriminant(&d1),
            Psi2Code::from_discriminant(&d2),
        );

        let prime_list = |d: &ExactInt| -> Result<Vec<u64>, ProfileError> {
            if d.is_one() {
                return Ok(Vec::new());
            }
            let f = factorize(d)?;
            f.primes()
                .map(|p| {
                    p.to_u64()
                        .ok_or_else(|| ProfileError::ConductorPrimeTooLarge(p.clone()))
                })
                .collect()
        };
        let d1_primes = prime_list(&d1_odd)?;
        let d2_primes = prime_list(&d2_odd)?;
        let mut odd_primes: Vec<u64> = d1_primes.iter().chain(&d2_primes).copied().collect();
        odd_primes.sort_unstable();
        odd_primes.dedup();

        // literal image of d -> ((d/|D1'|), (d/|D2'|)); the classical
        // dichotomy by |D1'| = |D2'| fails when an odd part is 1
        let im_psi: Vec<(i32, i32)> = match (d1_odd.is_one(), d2_odd.is_one()) {
            (true, true) => vec![(1, 1)],
            (true, false) => vec![(1, 1), (1, -1)],
            (false, true) => vec![(1, 1), (-1, 1)],
            (false, false) if d1_odd == d2_odd => vec![(1, 1), (-1, -1)],
            _ => vec![(1, 1), (1, -1), (-1, 1), (-1, -1)],
        };

        Ok(SerrePairProfile {
            d1,
            d2,
            d1_odd,
            d2_odd,
            m_a,
            psi2,
            im_psi,
            odd_primes,
            d1_primes,
            d2_primes,
        })
    }

    /// Profile of a pair of curves. The pair must be certified as a Serre
    /// pair: either the family gcd certificate applies or the caller attests.
    pub fn from_curves(
        curve1: &CurveSpec,
        curve2: &CurveSpec,
        attested: bool,
    ) -> Result<SerrePairProfile, ProfileError> {
        if !attested && !family_certificate(curve1, curve2) {
            return Err(ProfileError::NotCertified);
        }
        let disc1 = curve1.discriminant();
        let disc2 = curve2.discriminant();
        if disc1.is_zero() || disc2.is_zero() {
            return Err(ProfileError::Singular);
        }
        let d1 = fundamental_discriminant(&squarefree_part(&disc1)?);
        let d2 = fundamental_discriminant(&squarefree_part(&disc2)?);
        Self::from_discriminants(d1, d2)
    }

    /// `v_2(m_A)`, always in 1..=3 for fundamental discriminants.
    pub fn alpha_base(&self) -> u32 {
        crate::arith::valuation(&self.m_a, &int(2))
    }
}

/// True when both curves belong to the `y^2 + xy = x^3 + l` family and the
/// gcd certificate applies.
fn family_certificate(curve1: &CurveSpec, curve2: &CurveSpec) -> bool {
    let family_param = |c: &CurveSpec| -> Option<u64> {
        if (c.a1, c.a2, c.a3, c.a4) == (1, 0, 0, 0) && c.a6 > 0 {
            Some(c.a6 as u64)
        } else {
            None
        }
    };
    match (family_param(curve1), family_param(curve2)) {
        (Some(l1), Some(l2)) => serre_family_check(l1, l2),
        _ => false,
    }
}

/// `m_{A,T} = m_A * prod over l | m_A of l^(v_l(T))` for nonzero `T`.
pub fn m_at(profile: &SerrePairProfile, t_sum: i64) -> ExactInt {
    assert!(t_sum != 0, "trace must be nonzero");
    let mut m = profile.m_a.clone();
    m *= int(2).pow(valuation_i64(t_sum, 2));
    for &l in &profile.odd_primes {
        m *= int(l).pow(valuation_i64(t_sum, l));
    }
    // v_l(m) > v_l(T) for every conductor prime, by construction
    m
}

/// The odd-prime block values `A_l(T)` and `B_l(T)`: for a unit trace class
/// they are `l^2 (l^4-l^3-2l^2+l+2) / (l-1)` and `l^2/(l-1)`; for `l | T`
/// the `A` value is the trace-sum count scaled by `(l-1) l^(6n-6)` at the
/// stable level and `B = A - (l^5 - l^3)`.
#[derive(Debug, Clone)]
pub struct ABValues {
    pub ell: u64,
    pub a: ExactRat,
    pub b: ExactRat,
}

pub fn ab_values(ell: u64, t_sum: i64) -> ABValues {
    assert!(ell >= 3 && ell % 2 == 1);
    let l = int(ell);
    if t_sum != 0 && valuation_i64(t_sum, ell) > 0 {
        let v = valuation_i64(t_sum, ell);
        let n = v + 1;
        let count = matcount::group_trace_count(ell, n, t_sum);
        let a = ExactRat::new(count, (&l - int(1)) * l.pow(6 * n - 6));
        let b = &a - ExactRat::from(l.pow(5) - l.pow(3));
        ABValues { ell, a, b }
    } else {
        let a = ExactRat::new(
            &l * &l * (l.pow(4) - l.pow(3) - int(2) * &l * &l + &l + int(2)),
            &l - int(1),
        );
        let b = ExactRat::new(&l * &l, &l - int(1));
        ABValues { ell, a, b }
    }
}

/// `|G(m, T) restricted to psi = 1|` at `m = m_{A,T}`: the canonical direct
/// assembly. Exact; the result is asserted to be a nonnegative integer.
pub fn exceptional_count(profile: &SerrePairProfile, t_sum: i64) -> ExactInt {
    assert!(t_sum != 0, "constant not computed at zero trace");
    let alpha = profile.alpha_base() + valuation_i64(t_sum, 2);
    let sfrak = twocount::sfrak_by_v(t_sum, alpha, profile.psi2, &profile.im_psi);

    let blocks: Vec<ABValues> = profile
        .odd_primes
        .iter()
        .map(|&l| ab_values(l, t_sum))
        .collect();

    // prefactor: prod over l | m' of l^(5 a_l - 5) phi(l^(a_l)) / 2
    let mut prefactor = ExactRat::one();
    for &l in &profile.odd_primes {
        let a_l = 1 + valuation_i64(t_sum, l);
        let lb = int(l);
        let scale = lb.pow(5 * a_l - 5) * lb.pow(a_l - 1) * (&lb - int(1));
        prefactor *= ExactRat::new(scale, int(2));
    }

    let mut total = ExactRat::zero();
    for ((v1, v2), s_v) in &sfrak {
        let w = sign_vector_sum(profile, &blocks, (*v1, *v2));
        total += ExactRat::from(s_v.clone()) * w;
    }
    let total = prefactor * total;

    debug_assert_eq!(
        total,
        collapsed_four_term(profile, t_sum),
        "four-term collapse must match the direct assembly"
    );
    assert!(total.is_integer(), "exceptional count must be integral");
    let out = total.to_integer();
    assert!(!out.is_negative());
    out
}

/// Sum over sign vectors `(v_l)` with `prod over l | D1' = v1` and
/// `prod over l | D2' = v2` of the product of `(A_l + v_l B_l)`.
fn sign_vector_sum(profile: &SerrePairProfile, blocks: &[ABValues], v: (i32, i32)) -> ExactRat {
    let primes = &profile.odd_primes;
    let k = primes.len();
    let mut total = ExactRat::zero();
    for mask in 0u32..1 << k {
        let sign = |idx: usize| if mask >> idx & 1 == 0 { 1i32 } else { -1 };
        let prod_over = |list: &[u64]| -> i32 {
            list.iter()
                .map(|l| sign(primes.iter().position(|p| p == l).unwrap()))
                .product()
        };
        if prod_over(&profile.d1_primes) != v.0 || prod_over(&profile.d2_primes) != v.1 {
            continue;
        }
        let mut term = ExactRat::one();
        for (idx, b) in blocks.iter().enumerate() {
            let s = sign(idx);
            term *= if s == 1 { &b.a + &b.b } else { &b.a - &b.b };
        }
        total += term;
    }
    total
}

/// The provably equivalent collapse of `sign_vector_sum` into at most four
/// terms, one per distinct element of the span of the two constraint
/// supports: the sign-vector sum equals
/// `2^(k - rank) * sum over span subsets S of chi_S(v) * T(S)`,
/// where `T(S)` takes the `B` block on primes in `S` and `A` elsewhere.
/// Used as a debug cross-check of the direct assembly.
fn collapsed_four_term(profile: &SerrePairProfile, t_sum: i64) -> ExactRat {
    let alpha = profile.alpha_base() + valuation_i64(t_sum, 2);
    let sfrak = twocount::sfrak_by_v(t_sum, alpha, profile.psi2, &profile.im_psi);
    let blocks: Vec<ABValues> = profile
        .odd_primes
        .iter()
        .map(|&l| ab_values(l, t_sum))
        .collect();
    let primes = &profile.odd_primes;
    let k = primes.len();

    let mask_of = |list: &[u64]| -> u32 {
        let mut m = 0u32;
        for l in list {
            m |= 1 << primes.iter().position(|p| p == l).unwrap();
        }
        m
    };
    let (m1, m2) = (mask_of(&profile.d1_primes), mask_of(&profile.d2_primes));
    // distinct span elements with their character labels (use1, use2)
    let mut span: Vec<(u32, bool, bool)> = Vec::new();
    for (use1, use2) in [(false, false), (true, false), (false, true), (true, true)] {
        let m = if use1 { m1 } else { 0 } ^ if use2 { m2 } else { 0 };
        if !span.iter().any(|&(mm, _, _)| mm == m) {
            span.push((m, use1, use2));
        }
    }
    let rank = span.len().trailing_zeros(); // span has 2^rank elements
    let subspace = int(1) << (k as u32 - rank) as usize;

    let term = |mask: u32| -> ExactRat {
        let mut p = ExactRat::one();
        for (idx, b) in blocks.iter().enumerate() {
            p *= if mask >> idx & 1 == 1 {
                b.b.clone()
            } else {
                b.a.clone()
            };
        }
        p
    };

    let mut prefactor = ExactRat::one();
    for &l in primes {
        let a_l = 1 + valuation_i64(t_sum, l);
        let lb = int(l);
        prefactor *= ExactRat::new(
            lb.pow(5 * a_l - 5) * lb.pow(a_l - 1) * (&lb - int(1)),
            int(2),
        );
    }

    let mut total = ExactRat::zero();
    for ((v1, v2), s_v) in &sfrak {
        let mut bracket = ExactRat::zero();
        for &(mask, use1, use2) in &span {
            let chi = if use1 { *v1 } else { 1 } * if use2 { *v2 } else { 1 };
            bracket += ExactRat::from(int(chi)) * term(mask);
        }
        total += ExactRat::from(s_v.clone()) * bracket;
    }
    prefactor * ExactRat::from(subspace) * total
}

/// `|G(m)| = prod over l | m of l^(7 v_l(m) - 5) (l^2-1)^2 (l-1)`.
pub fn group_order_at(m: &ExactInt) -> ExactInt {
    let f = factorize(m).expect("conductor must factor");
    let mut total = int(1);
    for (p, e) in &f.factors {
        total *= p.pow(7 * e - 5) * (p * p - int(1)).pow(2) * (p - int(1));
    }
    total
}

/// The exceptional factor `m |H(m, T)| / |H(m)|` at `m = m_{A,T}`, where
/// `H(m) = ker psi` has index 4 in `G(m)`.
pub fn exceptional_factor(profile: &SerrePairProfile, t_sum: i64) -> ExactRat {
    let m = m_at(profile, t_sum);
    let count = exceptional_count(profile, t_sum);
    let g = group_order_at(&m);
    ExactRat::from(m * count * int(4)) / ExactRat::from(g)
}
