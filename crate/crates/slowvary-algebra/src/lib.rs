//! Exact algebra for slowly-varying model construction.
//!
//! Coefficients are Gaussian rationals ([`Scalar`]). Expressions ([`Expr`]) are
//! polynomials in named symbols times products of history convolutions
//! `z(f;μ) = ∫₀ᵗ e^{μ(t−s)} f(s) ds`, written `Z[f;μ]` in text form.
//!
//! Symbols are either *slow* (amplitudes, parameters, order counters) or
//! *coupling* inputs that vary on the fast time scale. Convolutions are linear
//! and pull slow factors out, which keeps every atom in a normal form.

mod calculus;
mod error;
mod expr;
mod grading;
mod scalar;
mod text;

pub use calculus::{atom_time_derivative, conv, conv_int, ddt, diff, normalize, DependencyTable};
pub use error::{AlgebraError, ParseError};
pub use expr::{Atom, Expr, Factor, Monomial, SymKind, Symbol};
pub use grading::{Graded, GradedRing, Registry};
pub use scalar::{fmt_rational, Scalar};
pub use text::{monomial_to_string, parse_expr};

pub use num_bigint::BigInt;
pub use num_rational::BigRational;

/// `p/q` as a rational; panics when `q == 0`.
pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}
