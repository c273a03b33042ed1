//! The trace density for a product of two generic curves: the semicircle
//! density, its self-convolution on `[-4, 4]`, the assembled density constant
//! `C(E1 x E2, T)` and the integral predictor for fixed-trace prime counts.

use crate::arith::ExactRat;
use crate::exceptional::{exceptional_factor, SerrePairProfile};
use crate::matcount::universal_product;
use num::ToPrimitive;
use std::f64::consts::PI;
use std::sync::OnceLock;

#[derive(Debug, thiserror::Error)]
pub enum QuadError {
    #[error("quadrature did not converge (depth exhausted)")]
    NonConvergence,
}

pub mod quad {
    //! Two independent adaptive quadrature schemes. The Simpson scheme is the
    //! workhorse; the Gauss-Kronrod scheme exists to cross-validate it.

    use super::QuadError;

    const MAX_DEPTH: u32 = 64;

    /// Adaptive Simpson with interval bisection and Richardson correction,
    /// to absolute tolerance `tol`.
    pub fn adaptive_simpson<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        tol: f64,
    ) -> Result<f64, QuadError> {
        if a >= b {
            return Ok(0.0);
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
    }

    #[allow(clippy::too_many_arguments)]
    fn simpson_step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, QuadError> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(QuadError::NonConvergence);
        }
        let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
        let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
        Ok(l + r)
    }

    // 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1]
    const KRONROD_X: [f64; 8] = [
        0.991455371120813,
        0.949107912342759,
        0.864864423359769,
        0.741531185599394,
        0.586087235467691,
        0.405845151377397,
        0.207784955007898,
        0.0,
    ];
    const KRONROD_W: [f64; 8] = [
        0.022935322010529,
        0.063092092629979,
        0.104790010322250,
        0.140653259715525,
        0.169004726639267,
        0.190350578064785,
        0.204432940075298,
        0.209482141084728,
    ];
    const GAUSS_W: [f64; 4] = [
        0.129484966168870,
        0.279705391489277,
        0.381830050505119,
        0.417959183673469,
    ];

    fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut k = 0.0;
        let mut g = 0.0;
        for (i, (&x, &w)) in KRONROD_X.iter().zip(&KRONROD_W).enumerate() {
            let pair = if x == 0.0 {
                f(c)
            } else {
                f(c - h * x) + f(c + h * x)
            };
            k += w * pair;
            // odd-index Kronrod nodes are the embedded Gauss nodes
            if i % 2 == 1 {
                g += GAUSS_W[i / 2] * pair;
            }
        }
        (h * k, (h * (k - g)).abs())
    }

    /// Globally adaptive Gauss-Kronrod: repeatedly bisect the interval with
    /// the largest error estimate until the summed estimate meets `tol`.
    pub fn gauss_kronrod<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        tol: f64,
    ) -> Result<f64, QuadError> {
        if a >= b {
            return Ok(0.0);
        }
        let (v, e) = gk15(f, a, b);
        let mut segs = vec![(a, b, v, e)];
        for _ in 0..100_000 {
            let err: f64 = segs.iter().map(|s| s.3).sum();
            if err <= tol {
                return Ok(segs.iter().map(|s| s.2).sum());
            }
            // split the worst segment
            let (idx, _) = segs
                .iter()
                .enumerate()
                .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
                .unwrap();
            let (sa, sb, _, _) = segs.swap_remove(idx);
            let mid = 0.5 * (sa + sb);
            let (v1, e1) = gk15(f, sa, mid);
            let (v2, e2) = gk15(f, mid, sb);
            segs.push((sa, mid, v1, e1));
            segs.push((mid, sb, v2, e2));
        }
        Err(QuadError::NonConvergence)
    }
}

/// Semicircle density `sqrt(4 - t^2) / (2 pi)` on `[-2, 2]`, zero outside.
pub fn phi_su2(t: f64) -> f64 {
    if t.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - t * t).sqrt() / (2.0 * PI)
    }
}

/// Self-convolution of the semicircle density, supported on `[-4, 4]` and
/// even; computed by adaptive quadrature to absolute error `tol`.
pub fn phi_conv(s: f64, tol: f64) -> Result<f64, QuadError> {
    assert!(tol > 0.0);
    let s = s.abs();
    if s >= 4.0 {
        return Ok(0.0);
    }
    let (lo, hi) = ((s - 2.0).max(-2.0), 2.0f64.min(s + 2.0));
    quad::adaptive_simpson(&|u: f64| phi_su2(u) * phi_su2(s - u), lo, hi, tol)
}

/// `2 Phi(0) = 16 / (3 pi^2)`, the leading density factor.
pub fn sato_tate_factor() -> f64 {
    16.0 / (3.0 * PI * PI)
}

const GRID_STEP: f64 = 1e-3;
const CONV_TOL: f64 = 1e-10;

/// Cached trace density on a uniform grid over `[0, 4]` with monotone cubic
/// (Fritsch-Carlson) interpolation; the density is even and nonincreasing on
/// `[0, 4]`, and the interpolant preserves that shape between knots.
pub struct SatoTate {
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl SatoTate {
    fn build() -> SatoTate {
        let n = (4.0 / GRID_STEP).round() as usize;
        let ys: Vec<f64> = (0..=n)
            .map(|k| phi_conv(k as f64 * GRID_STEP, CONV_TOL).expect("convolution converges"))
            .collect();
        // Fritsch-Carlson monotone slopes
        let h = GRID_STEP;
        let deltas: Vec<f64> = ys.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut slopes = vec![0.0; ys.len()];
        slopes[0] = deltas[0];
        let last = ys.len() - 1;
        slopes[last] = deltas[last - 1];
        for k in 1..last {
            let (d0, d1) = (deltas[k - 1], deltas[k]);
            slopes[k] = if d0 * d1 <= 0.0 {
                0.0
            } else {
                2.0 * d0 * d1 / (d0 + d1)
            };
        }
        // clamp to the monotonicity region
        for k in 0..deltas.len() {
            if deltas[k] == 0.0 {
                slopes[k] = 0.0;
                slopes[k + 1] = 0.0;
            } else {
                let a = slopes[k] / deltas[k];
                let b = slopes[k + 1] / deltas[k];
                let r = a * a + b * b;
                if r > 9.0 {
                    let t = 3.0 / r.sqrt();
                    slopes[k] = t * a * deltas[k];
                    slopes[k + 1] = t * b * deltas[k];
                }
            }
        }
        SatoTate { ys, slopes }
    }

    /// The process-wide cached density.
    pub fn get() -> &'static SatoTate {
        static CACHE: OnceLock<SatoTate> = OnceLock::new();
        CACHE.get_or_init(SatoTate::build)
    }

    /// Interpolated density value.
    pub fn phi(&self, s: f64) -> f64 {
        let s = s.abs();
        if s >= 4.0 {
            return 0.0;
        }
        let pos = s / GRID_STEP;
        let k = (pos.floor() as usize).min(self.ys.len() - 2);
        let t = pos - k as f64;
        let h = GRID_STEP;
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        v.max(0.0)
    }
}

/// The assembled constant and its three factors.
#[derive(Debug, Clone)]
pub struct ConstantBreakdown {
    pub t_sum: i64,
    /// `2 Phi(0) = 16/(3 pi^2)`.
    pub sato_tate: f64,
    /// Exact exceptional factor at the conductor.
    pub exceptional: ExactRat,
    /// Truncated universal product and its multiplicative tail bound.
    pub universal: f64,
    pub tail: f64,
    /// `C = sato_tate * exceptional * universal`.
    pub c: f64,
}

/// Assemble `C(E1 x E2, T)` for a Serre pair profile, truncating the
/// universal product at `trunc`.
pub fn constant(profile: &SerrePairProfile, t_sum: i64, trunc: u64) -> ConstantBreakdown {
    assert!(t_sum != 0, "constant not computed at zero trace");
    let exceptional = exceptional_factor(profile, t_sum);
    let (universal, tail) = universal_product(t_sum, &profile.m_a, trunc);
    let c = sato_tate_factor() * exceptional.to_f64().expect("factor fits f64") * universal;
    ConstantBreakdown {
        t_sum,
        sato_tate: sato_tate_factor(),
        exceptional,
        universal,
        tail,
        c,
    }
}

/// Integral predictor with an explicit density function and the scale
/// `C / (2 Phi(0))` = exceptional * universal:
/// `scale * integral from max(2,(T/4)^2) to x of Phi(T/sqrt(u)) du/(sqrt(u) log u)`.
///
/// The weight `du / (sqrt(u) log u)` is the prime-counting measure applied
/// to `1/sqrt(p)`: it reproduces `sum over p <= x of Phi(T/sqrt(p))/sqrt(p)`
/// (asymptotically `2 Phi(0) sqrt(x)/log x`), so `predict / predict_simple`
/// tends to 1 for fixed `T`. A halved weight is sometimes displayed for this
/// integral; it fails both properties by an exact factor 2 (see the tests).
pub fn predict_value<F: Fn(f64) -> f64>(
    scale: f64,
    t_sum: i64,
    x: u64,
    tol_rel: f64,
    phi: &F,
) -> Result<f64, QuadError> {
    let t0 = 2f64.max((t_sum as f64 / 4.0).powi(2));
    let xf = x as f64;
    if t0 >= xf {
        return Ok(0.0);
    }
    let integrand = |u: f64| phi(t_sum as f64 / u.sqrt()) / (u.sqrt() * u.ln());
    // coarse fixed-panel pass to set the absolute tolerance
    let coarse: f64 = {
        let n = 128;
        let h = (xf - t0) / n as f64;
        let mut acc = 0.5 * (integrand(t0) + integrand(xf));
        for k in 1..n {
            acc += integrand(t0 + k as f64 * h);
        }
        acc * h
    };
    let tol_abs = (coarse.abs() * tol_rel).max(1e-14);
    let integral = quad::adaptive_simpson(&integrand, t0, xf, tol_abs)?;
    Ok(scale * integral)
}

/// Integral predictor for the count of good primes `p <= x` with trace sum
/// `T`, using the cached density.
pub fn predict(
    profile: &SerrePairProfile,
    t_sum: i64,
    x: u64,
    trunc: u64,
    tol_rel: f64,
) -> Result<f64, QuadError> {
    assert!(t_sum != 0 && x >= 3);
    let b = constant(profile, t_sum, trunc);
    let scale = b.c / b.sato_tate;
    let st = SatoTate::get();
    predict_value(scale, t_sum, x, tol_rel, &|s| st.phi(s))
}

/// First-order predictor `C * sqrt(x) / log(x)`.
pub fn predict_simple(profile: &SerrePairProfile, t_sum: i64, x: u64, trunc: u64) -> f64 {
    let b = constant(profile, t_sum, trunc);
    let xf = x as f64;
    b.c * xf.sqrt() / xf.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::int;

    #[test]
    fn semicircle_values() {
        assert!((phi_su2(0.0) - 1.0 / PI).abs() < 1e-15);
        assert_eq!(phi_su2(2.0), 0.0);
        assert_eq!(phi_su2(-2.0), 0.0);
        let mass = quad::adaptive_simpson(&phi_su2, -2.0, 2.0, 1e-10).unwrap();
        assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn convolution_closed_form_at_zero() {
        // 2 Phi(0) = 16 / (3 pi^2)
        let v = phi_conv(0.0, 1e-10).unwrap();
        assert!((2.0 * v - sato_tate_factor()).abs() < 1e-9, "{v}");
        assert_eq!(phi_conv(4.0, 1e-10).unwrap(), 0.0);
        assert_eq!(phi_conv(-4.0, 1e-10).unwrap(), 0.0);
        let a = phi_conv(1.3, 1e-10).unwrap();
        let b = phi_conv(-1.3, 1e-10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn convolution_total_mass() {
        let mass =
            quad::adaptive_simpson(&|s: f64| phi_conv(s, 1e-10).unwrap(), -4.0, 4.0, 1e-9).unwrap();
        assert!((mass - 1.0).abs() < 1e-8, "{mass}");
    }

    #[test]
    fn interpolant_tracks_quadrature() {
        let st = SatoTate::get();
        for &s in &[0.0, 0.37, 1.0, 1.999, 2.5, 3.75, 3.999] {
            let exact = phi_conv(s, 1e-12).unwrap();
            assert!((st.phi(s) - exact).abs() < 5e-7, "s={s}");
        }
        // nonincreasing on [0, 4]
        let mut last = st.phi(0.0);
        let mut s = 0.0;
        while s < 4.0 {
            s += 0.0007;
            let v = st.phi(s);
            assert!(v <= last + 1e-12, "not monotone at {s}");
            last = v;
        }
    }

    #[test]
    fn quadrature_schemes_agree() {
        let f = |x: f64| (x * x).sin() * (1.0 + x).ln();
        let a = quad::adaptive_simpson(&f, 0.0, 3.0, 1e-11).unwrap();
        let b = quad::gauss_kronrod(&f, 0.0, 3.0, 1e-11).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn predictor_sanity() {
        let profile =
            crate::exceptional::SerrePairProfile::from_discriminants(int(5), int(13)).unwrap();
        // out of range: |T| > 4 sqrt(x)
        let v = predict(&profile, 1_000_000, 10_000, 100, 1e-8).unwrap();
        assert_eq!(v, 0.0);
        // monotone in x
        let p1 = predict(&profile, 1, 10_000, 10_000, 1e-9).unwrap();
        let p2 = predict(&profile, 1, 40_000, 10_000, 1e-9).unwrap();
        assert!(p2 > p1 && p1 > 0.0);
        // asymptotic agreement with the simple form within a factor
        let simple = predict_simple(&profile, 1, 40_000, 10_000);
        assert!(p2 / simple > 0.5 && p2 / simple < 1.5, "{p2} vs {simple}");
        // the ratio stays in (0.5, 1.5) across |T| <= sqrt(x)/10 at x = 10^6
        for t in [-100i64, -31, 1, 12, 60, 97] {
            let a = predict(&profile, t, 1_000_000, 10_000, 1e-8).unwrap();
            let b = predict_simple(&profile, t, 1_000_000, 10_000);
            let r = a / b;
            assert!(r > 0.5 && r < 1.5, "T={t}: {r}");
        }
    }

    #[test]
    fn dual_scheme_cross_validation() {
        // the two schemes on the outer integral, density uncached
        let t_sum = 1i64;
        let x = 1_000_000u64;
        let t0 = 2f64.max((t_sum as f64 / 4.0).powi(2));
        let integrand =
            |u: f64| phi_conv(t_sum as f64 / u.sqrt(), 1e-10).unwrap() / (u.sqrt() * u.ln());
        let a = quad::adaptive_simpson(&integrand, t0, x as f64, 1e-9).unwrap();
        let b = quad::gauss_kronrod(&integrand, t0, x as f64, 1e-9).unwrap();
        assert!(((a - b) / a).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn predictor_weight_matches_prime_sum() {
        // sum over p <= x of Phi(T/sqrt(p))/sqrt(p) against the integral
        // weight actually used; the halved weight misses by a factor 2
        let x = 200_000u64;
        let st = SatoTate::get();
        let mut direct = 0.0;
        for p in crate::arith::Primes::up_to(x) {
            let pf = p as f64;
            direct += st.phi(1.0 / pf.sqrt()) / pf.sqrt();
        }
        let used = predict_value(1.0, 1, x, 1e-9, &|s| st.phi(s)).unwrap();
        assert!((used / direct - 1.0).abs() < 0.02, "{used} vs {direct}");
    }
}
