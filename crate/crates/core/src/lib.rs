//! Fixed-trace prime counting for products of non-CM elliptic curves over Q.
//!
//! The library has two halves that are meant to be compared against each other:
//!
//! * an *empirical* side ([`curves`]) that sweeps primes, computes Frobenius
//!   traces `a_p` for a pair of curves and histograms the trace sums, and
//! * a *predictive* side ([`matcount`], [`twocount`], [`exceptional`],
//!   [`satotate`]) that assembles the conjectural density constant
//!   `C(E1 x E2, T)` from exact matrix counts over residue rings and the
//!   Sato-Tate density, and turns it into a predicted count.
//!
//! Every closed-form count used by the predictive side is validated against
//! brute-force enumeration in [`oracle`]; the CLI surface lives in [`cli`].

pub mod arith;
pub mod cli;
pub mod curves;
pub mod exceptional;
pub mod matcount;
pub mod oracle;
pub mod satotate;
pub mod twocount;

pub use arith::{ExactInt, ExactRat};
pub use curves::{CurveSpec, TraceHistogram};
pub use exceptional::SerrePairProfile;
pub use satotate::ConstantBreakdown;
