//! Brute-force ground truth: exhaustive enumeration of matrix groups over
//! small residue rings, bucketed by trace, determinant and scalar level.
//!
//! Everything in `matcount`, `twocount` and `exceptional` is a closed form or
//! a structured sum; this module recomputes the same quantities by walking
//! all `l^(4n)` matrices, and `resolve_variants` arbitrates between the
//! competing closed-form variants (see the design notes in those modules).
//! The enumeration itself never calls into the closed forms it checks.

use crate::arith::{gcd_u64, int, kronecker, valuation_i64, ExactInt};
use crate::twocount::Psi2Code;
use num::Zero;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("enumeration budget exceeded: {0}^(4*{1}) > 10^8 matrices")]
    BudgetExceeded(u64, u32),
}

/// Exhaustive bucket table for `GL2(Z/l^n)`.
///
/// Keys are `(trace, det, scalar level)` where the scalar level is the
/// largest `i <= n` such that the matrix is congruent to a scalar matrix
/// modulo `l^i`. Only invertible matrices are stored, so the total mass is
/// `|GL2(Z/l^n)|`.
#[derive(Debug, Clone)]
pub struct BucketTable {
    pub ell: u64,
    pub n: u32,
    pub modulus: u64,
    pub counts: HashMap<(u64, u64, u32), u64>,
}

const BUDGET: u64 = 100_000_000;

impl BucketTable {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Count at an exact `(t, d, i)` key.
    pub fn at(&self, t: u64, d: u64, i: u32) -> u64 {
        self.counts.get(&(t, d, i)).copied().unwrap_or(0)
    }

    /// Count over all scalar levels for fixed `(t, d)`.
    pub fn at_td(&self, t: u64, d: u64) -> u64 {
        (0..=self.n).map(|i| self.at(t, d, i)).sum()
    }

    /// Signature character value at the prime 2, derived from the key:
    /// epsilon = -1 exactly when the matrix reduces mod 2 to one of the three
    /// order-two elements, i.e. when the trace is even and the matrix is not
    /// congruent to a scalar mod 2.
    pub fn eps_of_key(t: u64, i: u32) -> i32 {
        if t % 2 == 0 && i == 0 {
            -1
        } else {
            1
        }
    }

    /// Count with trace `t`, det `d` and epsilon value `nu` (only meaningful
    /// for `ell = 2`).
    pub fn at_td_eps(&self, t: u64, d: u64, nu: i32) -> u64 {
        (0..=self.n)
            .filter(|&i| Self::eps_of_key(t, i) == nu)
            .map(|i| self.at(t, d, i))
            .sum()
    }
}

/// Enumerate all matrices mod `l^n`, keep the invertible ones, bucket by
/// `(trace, det, scalar level)`. Budget-checked at `l^(4n) <= 10^8`; results
/// are memoized since the validation suites revisit the same tables.
pub fn bucket_matrices(ell: u64, n: u32) -> Result<Arc<BucketTable>, OracleError> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u32), Arc<BucketTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&(ell, n)) {
        return Ok(t.clone());
    }

    let m = ell
        .checked_pow(n)
        .filter(|&m| {
            (m as u128)
                .checked_pow(4)
                .map_or(false, |v| v <= BUDGET as u128)
        })
        .ok_or(OracleError::BudgetExceeded(ell, n))?;

    let table = build_table(ell, n, m);
    let arc = Arc::new(table);
    cache.lock().unwrap().insert((ell, n), arc.clone());
    Ok(arc)
}

fn build_table(ell: u64, n: u32, m: u64) -> BucketTable {
    let mu = m as usize;
    // valuation of each residue, capped at n (residue 0 counts as n)
    let vtab: Vec<u32> = (0..m)
        .map(|x| {
            if x == 0 {
                n
            } else {
                let mut v = 0;
                let mut x = x;
                while x % ell == 0 {
                    x /= ell;
                    v += 1;
                }
                v
            }
        })
        .collect();
    let mul: Vec<u64> = (0..m)
        .flat_map(|a| (0..m).map(move |b| a * b % m))
        .collect();

    let levels = n as usize + 1;
    let slot = move |t: u64, d: u64, i: u32| ((t as usize * mu) + d as usize) * levels + i as usize;

    let threads = std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1)
        .min(8);
    let chunk = (mu + threads - 1) / threads;
    let mut dense = vec![0u64; mu * mu * levels];
    std::thread::scope(|s| {
        let mut handles = Vec::new();
        for tix in 0..threads {
            let lo = tix * chunk;
            let hi = ((tix + 1) * chunk).min(mu);
            let vtab = &vtab;
            let mul = &mul;
            handles.push(s.spawn(move || {
                let mut local = vec![0u64; mu * mu * levels];
                for a in lo as u64..hi as u64 {
                    for d in 0..m {
                        let t = (a + d) % m;
                        let ad = mul[(a * m + d) as usize];
                        let vad = vtab[((a + m - d) % m) as usize];
                        for b in 0..m {
                            let vmin_ab = vad.min(vtab[b as usize]);
                            let row = (b * m) as usize;
                            for c in 0..m {
                                let det = (ad + m - mul[row + c as usize]) % m;
                                if det % ell == 0 {
                                    continue;
                                }
                                let i = vmin_ab.min(vtab[c as usize]);
                                local[slot(t, det, i)] += 1;
                            }
                        }
                    }
                }
                local
            }));
        }
        for h in handles {
            let local = h.join().unwrap();
            for (acc, v) in dense.iter_mut().zip(local) {
                *acc += v;
            }
        }
    });

    let mut counts = HashMap::new();
    for t in 0..m {
        for d in 0..m {
            for i in 0..=n {
                let v = dense[slot(t, d, i)];
                if v > 0 {
                    counts.insert((t, d, i), v);
                }
            }
        }
    }
    BucketTable {
        ell,
        n,
        modulus: m,
        counts,
    }
}

/// `|G(l^n, T)|` by det-matched bucket combination: pairs of invertible
/// matrices with a common determinant and trace sum congruent to `T`.
pub fn pair_count(ell: u64, n: u32, t_sum: i64) -> Result<ExactInt, OracleError> {
    let tbl = bucket_matrices(ell, n)?;
    let m = tbl.modulus;
    let t_sum = t_sum.rem_euclid(m as i64) as u64;
    let mut by_td: HashMap<(u64, u64), u64> = HashMap::new();
    for (&(t, d, _), &c) in &tbl.counts {
        *by_td.entry((t, d)).or_insert(0) += c;
    }
    let mut total = int(0);
    for (&(t1, d), &c1) in &by_td {
        let t2 = (t_sum + m - t1) % m;
        if let Some(&c2) = by_td.get(&(t2, d)) {
            total += int(c1) * int(c2);
        }
    }
    Ok(total)
}

/// Ordered pair count at exact scalar levels `(i, i2)`: first component
/// congruent to a scalar exactly mod `l^i`, second exactly mod `l^i2`.
pub fn pair_count_levels(
    ell: u64,
    n: u32,
    t_sum: i64,
    i: u32,
    i2: u32,
) -> Result<ExactInt, OracleError> {
    let tbl = bucket_matrices(ell, n)?;
    let m = tbl.modulus;
    let t_sum = t_sum.rem_euclid(m as i64) as u64;
    let mut total = int(0);
    for (&(t1, d, lvl), &c1) in &tbl.counts {
        if lvl != i {
            continue;
        }
        let t2 = (t_sum + m - t1) % m;
        let c2 = tbl.at(t2, d, i2);
        if c2 > 0 {
            total += int(c1) * int(c2);
        }
    }
    Ok(total)
}

/// Pair count restricted to determinants in a fixed Legendre class
/// (`nu = +1` squares, `nu = -1` non-squares); odd `l` only.
pub fn pair_count_det_class(
    ell: u64,
    n: u32,
    t_sum: i64,
    nu: i32,
) -> Result<ExactInt, OracleError> {
    assert!(ell % 2 == 1);
    let tbl = bucket_matrices(ell, n)?;
    let m = tbl.modulus;
    let t_sum = t_sum.rem_euclid(m as i64) as u64;
    let mut by_td: HashMap<(u64, u64), u64> = HashMap::new();
    for (&(t, d, _), &c) in &tbl.counts {
        *by_td.entry((t, d)).or_insert(0) += c;
    }
    let mut total = int(0);
    for (&(t1, d), &c1) in &by_td {
        if kronecker(&int(d), &int(ell)) != nu {
            continue;
        }
        let t2 = (t_sum + m - t1) % m;
        if let Some(&c2) = by_td.get(&(t2, d)) {
            total += int(c1) * int(c2);
        }
    }
    Ok(total)
}

/// Enumerated counterpart of the closed-form 2-adic sums: for every
/// psi_2-value vector `v` in `{-1,+1}^2`, the det-matched pair count over
/// `GL2(Z/2^alpha)` with trace sum `T` and `psi_2^(i)(g_i) = v_i`.
pub fn sfrak_by_v(
    alpha: u32,
    codes: (Psi2Code, Psi2Code),
    t_sum: i64,
) -> Result<HashMap<(i32, i32), ExactInt>, OracleError> {
    let tbl = bucket_matrices(2, alpha)?;
    let m = tbl.modulus;
    let t_sum = t_sum.rem_euclid(m as i64) as u64;
    // per (t,d): counts split by psi2 value for each of the two codes
    let mut split: HashMap<(u64, u64), [[u64; 2]; 2]> = HashMap::new();
    for (&(t, d, lvl), &c) in &tbl.counts {
        let eps = BucketTable::eps_of_key(t, lvl);
        let e = split.entry((t, d)).or_insert([[0; 2]; 2]);
        for (k, code) in [codes.0, codes.1].into_iter().enumerate() {
            let psi = eps * code.det_character(d);
            e[k][if psi == 1 { 0 } else { 1 }] += c;
        }
    }
    let mut out: HashMap<(i32, i32), ExactInt> = HashMap::new();
    for v1 in [1i32, -1] {
        for v2 in [1i32, -1] {
            out.insert((v1, v2), int(0));
        }
    }
    for (&(t1, d), e1) in &split {
        let t2 = (t_sum + m - t1) % m;
        if let Some(e2) = split.get(&(t2, d)) {
            // e[0] holds the split for the first code, e[1] for the second
            for (v1, s1) in [(1i32, 0usize), (-1, 1)] {
                for (v2, s2) in [(1i32, 0usize), (-1, 1)] {
                    let c = int(e1[0][s1]) * int(e2[1][s2]);
                    *out.get_mut(&(v1, v2)).unwrap() += c;
                }
            }
        }
    }
    Ok(out)
}

/// `|G(m, T)|` restricted to `psi = 1`, by exhaustive CRT-bucket combination,
/// where `psi^(i)(g) = eps(g^(i)) * (D_i / det g^(i))`.
///
/// `m` must factor into prime powers within the enumeration budget. For odd
/// `m` (no 2-part) the epsilon factor is absent and the condition degenerates
/// to `(D_i / det) = 1`.
pub fn oracle_exceptional(
    m: u64,
    d1: &ExactInt,
    d2: &ExactInt,
    t_sum: i64,
) -> Result<ExactInt, OracleError> {
    let parts = prime_power_parts(m);
    let mut odd_tables = Vec::new();
    let mut two_table = None;
    for &(l, e) in &parts {
        let tbl = bucket_matrices(l, e)?;
        if l == 2 {
            two_table = Some(tbl);
        } else {
            odd_tables.push(tbl);
        }
    }
    let t_sum = t_sum.rem_euclid(m as i64) as u64;

    // matrices mod m with trace t, det d and (for even m) a given epsilon,
    // assembled multiplicatively across the CRT parts
    let count_one = |t: u64, d: u64, want_eps: i32| -> ExactInt {
        let mut c = int(1);
        for tbl in &odd_tables {
            let mm = tbl.modulus;
            c *= int(tbl.at_td(t % mm, d % mm));
            if c.is_zero() {
                return c;
            }
        }
        if let Some(tbl) = &two_table {
            let mm = tbl.modulus;
            c *= int(tbl.at_td_eps(t % mm, d % mm, want_eps));
        }
        c
    };

    let mut total = int(0);
    for d in (0..m).filter(|&d| gcd_u64(d, m) == 1) {
        let chi1 = kronecker(d1, &int(d));
        let chi2 = kronecker(d2, &int(d));
        if chi1 == 0 || chi2 == 0 {
            continue;
        }
        for t1 in 0..m {
            let c1 = count_one(t1, d, chi1);
            if c1.is_zero() {
                continue;
            }
            let t2 = (t_sum + m - t1) % m;
            total += c1 * count_one(t2, d, chi2);
        }
    }
    Ok(total)
}

/// `|G(m)|` by enumeration: sum over units `d` of the squared fixed-det count.
pub fn oracle_group_order(m: u64) -> Result<ExactInt, OracleError> {
    let parts = prime_power_parts(m);
    let mut tables = Vec::new();
    for &(l, e) in &parts {
        tables.push(bucket_matrices(l, e)?);
    }
    let gl_det = |d: u64| -> ExactInt {
        let mut c = int(1);
        for tbl in &tables {
            let mm = tbl.modulus;
            let s: u64 = (0..mm).map(|t| tbl.at_td(t, d % mm)).sum();
            c *= int(s);
        }
        c
    };
    let mut total = int(0);
    for d in (0..m).filter(|&d| gcd_u64(d, m) == 1) {
        let c = gl_det(d);
        total += &c * &c;
    }
    Ok(total)
}

fn prime_power_parts(m: u64) -> Vec<(u64, u32)> {
    let mut parts = Vec::new();
    let mut m = m;
    let mut l = 2;
    while m > 1 {
        if m % l == 0 {
            let e = valuation_i64(m as i64, l);
            for _ in 0..e {
                m /= l;
            }
            parts.push((l, e));
        }
        l += if l == 2 { 1 } else { 2 };
    }
    parts
}

// ---------------------------------------------------------------------------
// formula adjudication and the full validation suite
// ---------------------------------------------------------------------------

pub mod variants {
    //! Competing closed-form variants for the counts, adjudicated against
    //! enumeration. Several displayed forms of the same quantity circulate
    //! that disagree with one another; the canonical level-sum evaluation and
    //! the enumeration below decide which (if any) is right, and the winners
    //! are frozen in `FROZEN_DECISIONS`. `resolve_variants` recomputes the
    //! adjudication from scratch on every run and must reproduce the frozen
    //! choices exactly.

    use crate::arith::{int, rat, valuation_i64, ExactInt, ExactRat};
    use crate::exceptional::{ab_values, m_at, SerrePairProfile};
    use crate::matcount;
    use crate::twocount;
    use num::{One, ToPrimitive, Zero};

    /// Frozen outcome of the adjudication: decision id -> winning candidate.
    /// `resolve_variants` fails a decision if the recomputed winner differs.
    pub const FROZEN_DECISIONS: &[(&str, &str)] = &[
        ("remainder-scale", "doubled-remainder-inside-bracket"),
        ("remainder-second-term", "half-cube-weighted"),
        ("even-valuation-term", "scaled-inside-bracket"),
        ("stable-ratio-display", "corrected"),
        ("conductor-assembly", "direct-sign-vector-sum"),
        ("two-adic-restriction", "psi2-vector-in-odd-image"),
    ];

    #[derive(Debug, Clone)]
    pub struct Candidate {
        pub name: String,
        pub matches: bool,
        pub value: String,
    }

    #[derive(Debug, Clone)]
    pub struct Decision {
        pub id: String,
        pub probe: String,
        pub oracle_value: String,
        pub candidates: Vec<Candidate>,
        /// Winner (empty when no candidate matches -> unresolved).
        pub chosen: String,
        pub frozen_ok: bool,
    }

    impl Decision {
        pub fn resolved(&self) -> bool {
            !self.chosen.is_empty() && self.frozen_ok
        }
    }

    /// The two printed remainder-term variants (second numerator term
    /// `(l^4+l^3+2l^2+-l-1)(l^(4e)-1)`) next to the corrected one.
    fn remainder_candidates(ell: u64, e: u32) -> Vec<(String, ExactRat)> {
        let l = int(ell);
        let lead = l.pow(3) * (&l + int(1)) * (l.pow(4 * e + 4) - int(1));
        let den = (&l * &l + int(1)) * (&l + int(1));
        let plus = (l.pow(4) + l.pow(3) + int(2) * &l * &l + &l - int(1)) * (l.pow(4 * e) - int(1));
        let minus =
            (l.pow(4) + l.pow(3) + int(2) * &l * &l - &l - int(1)) * (l.pow(4 * e) - int(1));
        vec![
            (
                "plus-linear-term".into(),
                ExactRat::new(&lead + plus, den.clone()),
            ),
            (
                "minus-linear-term".into(),
                ExactRat::new(&lead + minus, den.clone()),
            ),
            (
                "half-cube-weighted".into(),
                matcount::remainder_term(ell, e),
            ),
        ]
    }

    /// Pair count `|G(l^n, T)|` rebuilt from a remainder term `E`, with the
    /// doubled coefficient and the even-valuation term inside the bracket.
    fn count_from_bracket(ell: u64, n: u32, v: u32, e_term: &ExactRat) -> ExactRat {
        let l = int(ell);
        let e = (v - 1) / 2;
        let mut a = ExactRat::from(l.pow(5) - l.pow(3) - int(3) * &l * &l + int(1));
        a += rat(2, 1) * e_term / ExactRat::from(l.pow(4 * e + 3));
        if v % 2 == 0 {
            a += ExactRat::new(l.pow(3) - int(1), l.pow(4 * e + 2));
        }
        ExactRat::from((&l - int(1)) * l.pow(6 * n - 6)) * a
    }

    fn fmt_rat(r: &ExactRat) -> String {
        if r.is_integer() {
            r.to_integer().to_string()
        } else {
            format!("{}/{}", r.numer(), r.denom())
        }
    }

    /// Recompute every adjudication from enumeration. Deterministic.
    pub fn resolve_variants() -> Vec<Decision> {
        let mut out = Vec::new();
        let frozen = |id: &str, chosen: &str| {
            FROZEN_DECISIONS
                .iter()
                .any(|&(i, c)| i == id && c == chosen)
        };

        // 1. remainder scale: doubled vs plain remainder coefficient, and the
        //    even-valuation term inside vs appended unscaled. Probed at
        //    l=3, n=2, T=3 where the variants already split.
        {
            let oracle = super::pair_count(3, 2, 3).unwrap();
            let e_term = matcount::remainder_term(3, 0);
            let l = int(3);
            let doubled = count_from_bracket(3, 2, 1, &e_term);
            let plain = {
                // (l-1) l^(6n-4e-9) (l^(4e+3) base + E) + delta2(v)(l^3-1)
                let base = l.pow(5) - l.pow(3) - int(3) * &l * &l + int(1);
                ExactRat::from((&l - int(1)) * l.pow(3))
                    * (ExactRat::from(l.pow(3) * base) + &e_term)
            };
            let cands = vec![
                ("doubled-remainder-inside-bracket".to_string(), doubled),
                ("plain-remainder-appended".to_string(), plain),
            ];
            out.push(decide(
                "remainder-scale",
                "l=3 n=2 T=3",
                &oracle,
                cands,
                &frozen,
            ));
        }

        // 2. second numerator term of the remainder: probed at v = 3 where
        //    the printed variants differ from the level sum (l=3, n=4, T=27;
        //    4^16 enumeration is within budget).
        {
            let oracle = super::pair_count(3, 4, 27).unwrap();
            let cands = remainder_candidates(3, 1)
                .into_iter()
                .map(|(name, e)| (name, count_from_bracket(3, 4, 3, &e)))
                .collect();
            out.push(decide(
                "remainder-second-term",
                "l=3 n=4 T=27",
                &oracle,
                cands,
                &frozen,
            ));
        }

        // 3. even-valuation term: inside the bracket scaled by l^-(4e+2)
        //    versus appended unscaled; probed at v = 2 (l=3, n=3, T=9).
        {
            let oracle = super::pair_count(3, 3, 9).unwrap();
            let e_term = matcount::remainder_term(3, 0);
            let l = int(3);
            let inside = count_from_bracket(3, 3, 2, &e_term);
            let appended = {
                let base = l.pow(5) - l.pow(3) - int(3) * &l * &l + int(1);
                ExactRat::from((&l - int(1)) * l.pow(9))
                    * (ExactRat::from(l.pow(3) * base) + rat(2, 1) * &e_term)
                    + ExactRat::from(l.pow(3) - int(1))
            };
            let cands = vec![
                ("scaled-inside-bracket".to_string(), inside),
                ("appended-unscaled".to_string(), appended),
            ];
            out.push(decide(
                "even-valuation-term",
                "l=3 n=3 T=9",
                &oracle,
                cands,
                &frozen,
            ));
        }

        // 4. the stable-ratio display: first term (l^6-l^4-3l^3 +- l) over
        //    l^2(l^2-1)^2 plus remainder; probed against the enumerated ratio
        //    at l=3, T=3 and T=9.
        {
            let mut cands: Vec<(String, ExactRat)> = Vec::new();
            let mut oracle_vals = Vec::new();
            for (t_sum, n) in [(3i64, 2u32), (9, 3)] {
                let v = valuation_i64(t_sum, 3);
                let count = super::pair_count(3, n, t_sum).unwrap();
                oracle_vals.push(
                    ExactRat::from(int(3).pow(n) * count) / ExactRat::from(matcount::order_g(3, n)),
                );
                let _ = v;
            }
            let display = |first_sign: i64, e_scale: i64, delta_scale: bool, t_sum: i64| {
                let l = int(3);
                let v = valuation_i64(t_sum, 3);
                let e = (v - 1) / 2;
                let first = ExactRat::new(
                    l.pow(6) - l.pow(4) - int(3) * l.pow(3) + int(first_sign) * &l,
                    &l * &l * (&l * &l - int(1)).pow(2),
                );
                let e_term = matcount::remainder_term(3, e) * ExactRat::from(int(e_scale));
                let delta = if v % 2 == 0 {
                    let w = if delta_scale {
                        &l * (l.pow(3) - int(1))
                    } else {
                        l.pow(3) - int(1)
                    };
                    ExactRat::from(w)
                } else {
                    ExactRat::zero()
                };
                first
                    + (e_term + delta)
                        / ExactRat::from(l.pow(4 * e + 4) * (&l * &l - int(1)).pow(2))
            };
            let printed_ok = (0..2).all(|k| {
                let t_sum = [3i64, 9][k];
                display(-1, 1, false, t_sum) == oracle_vals[k]
            });
            let corrected_ok = (0..2).all(|k| {
                let t_sum = [3i64, 9][k];
                display(1, 2, true, t_sum) == oracle_vals[k]
            });
            cands.push((
                "printed".to_string(),
                if printed_ok {
                    ExactRat::one()
                } else {
                    ExactRat::zero()
                },
            ));
            cands.push((
                "corrected".to_string(),
                if corrected_ok {
                    ExactRat::one()
                } else {
                    ExactRat::zero()
                },
            ));
            let target = ExactRat::one();
            out.push(decide(
                "stable-ratio-display",
                "l=3, T in {3, 9} stable ratios",
                &target.to_integer(),
                cands,
                &frozen,
            ));
        }

        // 5. conductor assembly: direct sign-vector sum vs the two printed
        //    collapses, probed on synthetic profiles against CRT enumeration.
        {
            let mut direct_ok = true;
            let mut weighted_ok = true;
            let mut unweighted_ok = true;
            let mut probe_val = int(0);
            for (d1, d2, t_sum) in [
                (5i64, 13i64, 1i64),
                (5, 13, 3),
                (-3, -3, 6),
                (5, -4, 1),
                (-15, -4, 1),
            ] {
                let profile = SerrePairProfile::from_discriminants(int(d1), int(d2)).unwrap();
                let m = m_at(&profile, t_sum).to_u64().unwrap();
                if m > 200 {
                    continue;
                }
                let oracle = super::oracle_exceptional(m, &profile.d1, &profile.d2, t_sum).unwrap();
                probe_val = oracle.clone();
                let direct = crate::exceptional::exceptional_count(&profile, t_sum);
                direct_ok &= direct == oracle;
                let (w, u) = printed_conductor_collapses(&profile, t_sum);
                weighted_ok &= w == ExactRat::from(oracle.clone());
                unweighted_ok &= u == ExactRat::from(oracle.clone());
            }
            let cands = vec![
                Candidate {
                    name: "direct-sign-vector-sum".into(),
                    matches: direct_ok,
                    value: String::new(),
                },
                Candidate {
                    name: "collapsed-with-2^omega-weights".into(),
                    matches: weighted_ok,
                    value: String::new(),
                },
                Candidate {
                    name: "collapsed-unweighted".into(),
                    matches: unweighted_ok,
                    value: String::new(),
                },
            ];
            let chosen = cands
                .iter()
                .find(|c| c.matches)
                .map(|c| c.name.clone())
                .unwrap_or_default();
            let frozen_ok = frozen("conductor-assembly", &chosen);
            out.push(Decision {
                id: "conductor-assembly".into(),
                probe: "synthetic profiles, m <= 200, vs CRT enumeration".into(),
                oracle_value: probe_val.to_string(),
                candidates: cands,
                chosen,
                frozen_ok,
            });
        }

        // 6. the 2-adic restriction in the conductor sums: summing the
        //    psi_2-value vector over the image of the odd-part character pair
        //    must reproduce enumeration.
        {
            let mut ok = true;
            for alpha in 1..=4u32 {
                for codes in [
                    (twocount::Psi2Code::Eps, twocount::Psi2Code::Eps),
                    (twocount::Psi2Code::Eps, twocount::Psi2Code::EpsChi4),
                ] {
                    if alpha < codes.1.min_defined_level() {
                        continue;
                    }
                    for t_sum in 0..1i64 << alpha {
                        let closed = twocount::sfrak_by_v(
                            t_sum,
                            alpha,
                            codes,
                            &[(1, 1), (1, -1), (-1, 1), (-1, -1)],
                        );
                        let oracle = super::sfrak_by_v(alpha, codes, t_sum).unwrap();
                        for (v, c) in &closed {
                            ok &= oracle.get(&(v.0, v.1)) == Some(c);
                        }
                    }
                }
            }
            let cands = vec![Candidate {
                name: "psi2-vector-in-odd-image".into(),
                matches: ok,
                value: String::new(),
            }];
            let chosen = if ok {
                cands[0].name.clone()
            } else {
                String::new()
            };
            let frozen_ok = frozen("two-adic-restriction", &chosen);
            out.push(Decision {
                id: "two-adic-restriction".into(),
                probe: "per-vector 2-adic sums vs enumeration, alpha <= 4".into(),
                oracle_value: String::new(),
                candidates: cands,
                chosen,
                frozen_ok,
            });
        }

        out
    }

    /// The two printed collapses of the conductor-level count: with
    /// `2^omega(m'/|D_i'|)` weights on the signed blocks (and missing
    /// complementary factors), and the same without the weights.
    fn printed_conductor_collapses(profile: &SerrePairProfile, t_sum: i64) -> (ExactRat, ExactRat) {
        let alpha = profile.alpha_base() + valuation_i64(t_sum, 2);
        let (s, s1, s2) = twocount::sfrak(t_sum, alpha, profile.psi2, &profile.im_psi);
        let blocks: Vec<_> = profile
            .odd_primes
            .iter()
            .map(|&l| ab_values(l, t_sum))
            .collect();
        let equal_odd = profile.d1_odd == profile.d2_odd;

        let mut mp5_phi = ExactRat::one(); // (m')^5 phi(m') / rad(m')^5
        for &l in &profile.odd_primes {
            let a_l = 1 + valuation_i64(t_sum, l);
            let lb = int(l);
            mp5_phi *= ExactRat::from(lb.pow(5 * a_l - 5) * lb.pow(a_l - 1) * (&lb - int(1)));
        }
        let prod_a_plus_one: ExactRat = blocks.iter().map(|b| &b.a + ExactRat::one()).product();
        let prod_b = |list: &[u64]| -> ExactRat {
            blocks
                .iter()
                .filter(|b| list.contains(&b.ell))
                .map(|b| b.b.clone())
                .product()
        };
        let omega = |list: &[u64]| -> u32 {
            profile
                .odd_primes
                .iter()
                .filter(|l| !list.contains(l))
                .count() as u32
        };
        let two_pow = |w: u32| ExactRat::from(int(1) << w as usize);

        let b1 = prod_b(&profile.d1_primes);
        let b2 = prod_b(&profile.d2_primes);
        let s_r = ExactRat::from(s);
        let s1_r = ExactRat::from(s1);
        let s2_r = ExactRat::from(s2);
        if equal_odd {
            let bracket_w =
                &s_r * &prod_a_plus_one + two_pow(omega(&profile.d1_primes)) * &s1_r * &b1;
            let bracket_u = &s_r * &prod_a_plus_one + &s1_r * &b1;
            (
                mp5_phi.clone() / rat(2, 1) * bracket_w,
                mp5_phi / rat(2, 1) * bracket_u,
            )
        } else {
            let bracket_w = &s_r * &prod_a_plus_one
                + two_pow(omega(&profile.d1_primes)) * &s1_r * &b1
                + two_pow(omega(&profile.d2_primes)) * &s2_r * &b2;
            let bracket_u = &s_r * &prod_a_plus_one + &s1_r * &b1 + &s2_r * &b2;
            (
                mp5_phi.clone() / rat(4, 1) * bracket_w,
                mp5_phi / rat(4, 1) * bracket_u,
            )
        }
    }

    fn decide(
        id: &str,
        probe: &str,
        oracle: &ExactInt,
        cands: Vec<(String, ExactRat)>,
        frozen: &dyn Fn(&str, &str) -> bool,
    ) -> Decision {
        let target = ExactRat::from(oracle.clone());
        let candidates: Vec<Candidate> = cands
            .into_iter()
            .map(|(name, value)| Candidate {
                matches: value == target,
                value: fmt_rat(&value),
                name,
            })
            .collect();
        let chosen = candidates
            .iter()
            .find(|c| c.matches)
            .map(|c| c.name.clone())
            .unwrap_or_default();
        let frozen_ok = frozen(id, &chosen);
        Decision {
            id: id.into(),
            probe: probe.into(),
            oracle_value: oracle.to_string(),
            candidates,
            chosen,
            frozen_ok,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_totals() {
        // |GL2(F_3)| = 48, |GL2(F_2)| = 6, |GL2(Z/9)| = 48 * 81
        assert_eq!(bucket_matrices(3, 1).unwrap().total(), 48);
        assert_eq!(bucket_matrices(2, 1).unwrap().total(), 6);
        assert_eq!(bucket_matrices(3, 2).unwrap().total(), 48 * 81);
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            bucket_matrices(2, 7),
            Err(OracleError::BudgetExceeded(..))
        ));
        assert!(matches!(
            bucket_matrices(5, 3),
            Err(OracleError::BudgetExceeded(..))
        ));
    }

    #[test]
    fn pair_counts_small() {
        // |G(3, 0)| = l^2 (l-1)(l^3 - l - 1) = 414
        assert_eq!(pair_count(3, 1, 0).unwrap(), int(414));
        // |G(9, 3)| = 300348
        assert_eq!(pair_count(3, 2, 3).unwrap(), int(300348));
        // unit traces are uniform: (|G(3)| - |G(3,0)|) / 2 = 369
        assert_eq!(pair_count(3, 1, 1).unwrap(), int(369));
        assert_eq!(pair_count(3, 1, 2).unwrap(), int(369));
    }

    #[test]
    fn pair_count_total_mass() {
        // sum over T mod 9 of |G(9,T)| = |G(9)| = 3^7 * 1152
        let total: ExactInt = (0..9).map(|t| pair_count(3, 2, t).unwrap()).sum();
        assert_eq!(total, int(3u64.pow(7) * 1152));
    }

    #[test]
    fn group_order_by_enumeration() {
        // |G(6)| = prod over l | 6 of l^(7v-5) (l^2-1)^2 (l-1) = 36 * 1152
        assert_eq!(oracle_group_order(6).unwrap(), int(36u64 * 1152));
        // |G(2^n)| = 2^(7n-5) * 9
        assert_eq!(oracle_group_order(8).unwrap(), int(2u64.pow(16) * 9));
    }

    #[test]
    fn eps_splits_gl2_f2() {
        // GL2(F_2) has three epsilon = -1 elements, all of trace 0
        let tbl = bucket_matrices(2, 1).unwrap();
        assert_eq!(tbl.at_td_eps(0, 1, -1), 3);
        assert_eq!(tbl.at_td_eps(0, 1, 1), 1);
        assert_eq!(tbl.at_td_eps(1, 1, 1), 2);
        assert_eq!(tbl.at_td_eps(1, 1, -1), 0);
    }
}

// ---------------------------------------------------------------------------
// validation suite
// ---------------------------------------------------------------------------

/// One validated claim: a formula checked against enumeration.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
    /// Golden CSV payloads by file name.
    pub golden: Vec<(String, String)>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    fn push(&mut self, name: &str, ok: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            ok,
            detail,
        });
    }

    /// Write the golden CSVs to a directory.
    pub fn write_golden(&self, dir: &std::path::Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, content) in &self.golden {
            std::fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

/// Run every oracle check: exact equality of all closed forms with
/// exhaustive enumeration over the full small-case grid, plus the variant
/// adjudication. Deterministic; also produces golden CSV transcripts.
pub fn run_suite() -> SuiteReport {
    use crate::{exceptional, matcount, twocount};
    let mut report = SuiteReport::default();

    // grid of bucket tables
    let grid: &[(u64, u32)] = &[
        (3, 1),
        (3, 2),
        (3, 3),
        (5, 1),
        (5, 2),
        (7, 1),
        (7, 2),
        (2, 1),
        (2, 2),
        (2, 3),
        (2, 4),
        (2, 5),
        (2, 6),
    ];

    // 1. group orders
    {
        let mut ok = true;
        let mut detail = String::new();
        for &(l, n) in grid {
            let total = int(bucket_matrices(l, n).unwrap().total());
            let formula = if l == 2 {
                int(6) * int(16u64).pow(n - 1)
            } else {
                // |GL2(Z/l^n)| = l^(4(n-1)) (l^2-1)(l^2-l)
                int(l).pow(4 * (n - 1)) * (int(l) * int(l) - int(1)) * (int(l) * int(l) - int(l))
            };
            if total != formula {
                ok = false;
                detail = format!("l={l} n={n}: {total} vs {formula}");
                break;
            }
        }
        report.push("gl2-group-orders", ok, detail);
    }

    // 2. pair-group orders |G(l^n)| via det-matched combination
    {
        let mut ok = true;
        let mut detail = String::new();
        for &(l, n) in grid {
            let m = l.pow(n);
            let by_enum = oracle_group_order(m).unwrap();
            let formula =
                int(l).pow(7 * n - 5) * (int(l) * int(l) - int(1)).pow(2) * (int(l) - int(1));
            if by_enum != formula {
                ok = false;
                detail = format!("l={l} n={n}: {by_enum} vs {formula}");
                break;
            }
        }
        report.push("pair-group-orders", ok, detail);
    }

    // 3. scalar-level strata at odd primes
    {
        let mut ok = true;
        let mut detail = String::new();
        'outer: for &(l, n) in grid.iter().filter(|&&(l, _)| l != 2) {
            let tbl = bucket_matrices(l, n).unwrap();
            let m = tbl.modulus;
            for t in 0..m {
                for s in (0..m).filter(|s| s % l != 0) {
                    for i in 0..=n {
                        let f = matcount::h_count(l, i, n, t, s);
                        let e = int(tbl.at(t, s, i));
                        if f != e {
                            ok = false;
                            detail = format!("l={l} n={n} t={t} s={s} i={i}: {f} vs {e}");
                            break 'outer;
                        }
                    }
                }
            }
        }
        report.push("strata-odd", ok, detail);
    }

    // 4. scalar-level strata at 2 (i = 0 everywhere; stratified cases at
    //    n >= 3; the scalar level i = n always)
    {
        let mut ok = true;
        let mut detail = String::new();
        'outer: for &(_, n) in grid.iter().filter(|&&(l, _)| l == 2) {
            let tbl = bucket_matrices(2, n).unwrap();
            let m = tbl.modulus;
            for t in 0..m {
                for s in (1..m).step_by(2) {
                    for i in 0..=n {
                        if i >= 1 && i < n && n < 3 {
                            continue;
                        }
                        let f = twocount::h2_count(i, n, t, s);
                        let e = int(tbl.at(t, s, i));
                        if f != e {
                            ok = false;
                            detail = format!("n={n} t={t} s={s} i={i}: {f} vs {e}");
                            break 'outer;
                        }
                    }
                }
            }
        }
        report.push("strata-two", ok, detail);
    }

    // 5. fixed trace/det counts: mod-l closed form and the 2-adic five-term
    //    expression
    {
        let mut ok = true;
        let mut detail = String::new();
        for l in [3u64, 5, 7] {
            let tbl = bucket_matrices(l, 1).unwrap();
            for t in 0..l {
                for d in 1..l {
                    let f = matcount::count_trace_det(l, t as i64, d as i64);
                    let e = int(tbl.at_td(t, d));
                    if f != e {
                        ok = false;
                        detail = format!("l={l} t={t} d={d}: {f} vs {e}");
                    }
                }
            }
        }
        'outer: for n in 1..=6u32 {
            let tbl = bucket_matrices(2, n).unwrap();
            let m = tbl.modulus;
            for t in 0..m {
                for d in (1..m).step_by(2) {
                    let f = twocount::count2_trace_det(n, t, d);
                    let e = int(tbl.at_td(t, d));
                    if f != e {
                        ok = false;
                        detail = format!("2-adic n={n} t={t} d={d}: {f} vs {e}");
                        break 'outer;
                    }
                }
            }
        }
        report.push("fixed-trace-det", ok, detail);
    }

    // 6. psi_2-split counts for all four characters over their defined range
    {
        let mut ok = true;
        let mut detail = String::new();
        'outer: for code in [
            twocount::Psi2Code::Eps,
            twocount::Psi2Code::EpsChi4,
            twocount::Psi2Code::EpsChi8,
            twocount::Psi2Code::EpsChi4Chi8,
        ] {
            for n in code.min_defined_level()..=6 {
                let tbl = bucket_matrices(2, n).unwrap();
                let m = tbl.modulus;
                for t in 0..m {
                    for d in (1..m).step_by(2) {
                        let chi = code.det_character(d);
                        let f = twocount::count2_trace_det_psi(n, t, d, code, -1);
                        let e = int(tbl.at_td_eps(t, d, -chi));
                        if f != e {
                            ok = false;
                            detail = format!("code={code:?} n={n} t={t} d={d}: {f} vs {e}");
                            break 'outer;
                        }
                    }
                }
            }
        }
        report.push("psi-two-split", ok, detail);
    }

    // 7. trace-sum pair counts and a golden transcript
    {
        let mut ok = true;
        let mut detail = String::new();
        let mut csv = String::from(
            "# trace-sum pair counts |G(l^n, T)| by exhaustive enumeration\nell,n,t_sum,count\n",
        );
        for &(l, n) in grid.iter().filter(|&&(l, _)| l != 2) {
            let m = l.pow(n);
            for t_sum in 0..m as i64 {
                let e = pair_count(l, n, t_sum).unwrap();
                csv.push_str(&format!("{l},{n},{t_sum},{e}\n"));
                let defined = if t_sum == 0 {
                    n == 1
                } else {
                    crate::arith::valuation_i64(t_sum, l) < n
                };
                if !defined {
                    continue;
                }
                let f = matcount::group_trace_count(l, n, t_sum);
                if f != e {
                    ok = false;
                    detail = format!("l={l} n={n} T={t_sum}: {f} vs {e}");
                }
            }
        }
        report.push("trace-sum-counts", ok, detail);
        report.golden.push(("pair_counts.csv".into(), csv));
    }

    // 8. stratified pair counts
    {
        let mut ok = true;
        let mut detail = String::new();
        'outer: for &(l, n) in &[(3u64, 2u32), (3, 3), (5, 2), (7, 2)] {
            let m = l.pow(n);
            for t_sum in (l as i64..m as i64).step_by(l as usize) {
                let v = crate::arith::valuation_i64(t_sum, l);
                if v >= n {
                    continue;
                }
                for i in 0..=n {
                    for i2 in 0..=n {
                        if i.min(i2) > v / 2 || (i == 0 && i2 == 0) {
                            continue;
                        }
                        let f = matcount::s_count(l, i, i2, n, t_sum);
                        let e = pair_count_levels(l, n, t_sum, i, i2).unwrap();
                        if f != e {
                            ok = false;
                            detail = format!("l={l} n={n} T={t_sum} i={i} i2={i2}: {f} vs {e}");
                            break 'outer;
                        }
                    }
                }
            }
        }
        report.push("stratified-pair-counts", ok, detail);
    }

    // 9. 2-adic per-vector sums vs enumeration, all code pairs
    {
        let mut ok = true;
        let mut detail = String::new();
        let codes_all = [
            twocount::Psi2Code::Eps,
            twocount::Psi2Code::EpsChi4,
            twocount::Psi2Code::EpsChi8,
            twocount::Psi2Code::EpsChi4Chi8,
        ];
        let im_full: Vec<(i32, i32)> = vec![(1, 1), (1, -1), (-1, 1), (-1, -1)];
        'outer: for &c1 in &codes_all {
            for &c2 in &codes_all {
                let lvl = c1.min_defined_level().max(c2.min_defined_level());
                for alpha in lvl..=5 {
                    for t_sum in 0..1i64 << alpha {
                        let closed = twocount::sfrak_by_v(t_sum, alpha, (c1, c2), &im_full);
                        let by_enum = sfrak_by_v(alpha, (c1, c2), t_sum).unwrap();
                        for (v, c) in &closed {
                            if by_enum.get(&(v.0, v.1)) != Some(c) {
                                ok = false;
                                detail = format!(
                                    "codes=({c1:?},{c2:?}) alpha={alpha} T={t_sum} v={v:?}"
                                );
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
        report.push("two-adic-sums", ok, detail);
    }

    // 10. conductor-level counts over the synthetic profile family, golden
    {
        let mut ok = true;
        let mut detail = String::new();
        let mut csv = String::from("# conductor-level counts |G(m, T) restricted to psi = 1| by CRT enumeration\nd1,d2,m,t_sum,count\n");
        let profiles: &[(i64, i64)] = &[
            (5, 5),    // m_A = 10
            (-3, -4),  // 12
            (5, -4),   // 20
            (-3, 8),   // 24
            (-3, -3),  // 6  -> 36 at T = 6
            (5, 8),    // 40
            (-15, -4), // 60
            (5, 13),   // 130, odd part 65
        ];
        for &(d1, d2) in profiles {
            let profile =
                exceptional::SerrePairProfile::from_discriminants(int(d1), int(d2)).unwrap();
            let t_cap = (int(2) * &profile.m_a).min(int(72)).to_u64v() as i64;
            for t_sum in 1..=t_cap {
                let m = exceptional::m_at(&profile, t_sum);
                if m > int(200) {
                    continue;
                }
                let m_u = m.to_u64v();
                let e = oracle_exceptional(m_u, &profile.d1, &profile.d2, t_sum).unwrap();
                let f = exceptional::exceptional_count(&profile, t_sum);
                csv.push_str(&format!("{d1},{d2},{m_u},{t_sum},{e}\n"));
                if f != e {
                    ok = false;
                    detail = format!("D=({d1},{d2}) T={t_sum} m={m_u}: {f} vs {e}");
                }
            }
        }
        report.push("conductor-counts", ok, detail);
        report.golden.push(("exceptional_counts.csv".into(), csv));
    }

    // 11. trace partition and kernel index at small conductors
    {
        let mut ok = true;
        let mut detail = String::new();
        for &(d1, d2, m) in &[(5i64, 5i64, 10u64), (-3, -4, 12), (-3, -3, 6)] {
            let mut total = int(0);
            for t_sum in 0..m as i64 {
                total += oracle_exceptional(m, &int(d1), &int(d2), t_sum).unwrap();
            }
            let quarter = exceptional::group_order_at(&int(m)) / int(4);
            if total != quarter {
                ok = false;
                detail = format!("D=({d1},{d2}) m={m}: kernel {total} vs |G|/4 {quarter}");
            }
        }
        report.push("kernel-index", ok, detail);
    }

    // 12. variant adjudication + golden transcript
    {
        let decisions = variants::resolve_variants();
        let mut csv = String::from("# closed-form variant adjudication against enumeration\ndecision,candidate,matches,chosen\n");
        let mut ok = true;
        let mut detail = String::new();
        for d in &decisions {
            for c in &d.candidates {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    d.id,
                    c.name,
                    c.matches,
                    (c.name == d.chosen)
                ));
            }
            if !d.resolved() {
                ok = false;
                detail = format!("decision {} unresolved or drifted from frozen choice", d.id);
            }
        }
        report.push("variant-resolution", ok, detail);
        report.golden.push(("variants.csv".into(), csv));
    }

    report
}

trait ToU64V {
    fn to_u64v(&self) -> u64;
}

impl ToU64V for ExactInt {
    fn to_u64v(&self) -> u64 {
        use num::ToPrimitive;
        self.to_u64().expect("value fits u64")
    }
}
