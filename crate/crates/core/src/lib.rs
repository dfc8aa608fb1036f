//! Numerical certification of generalized convexity and of midpoint-type
//! integral bounds for preinvex and log-preinvex functions.

// `!(a < b)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::redundant_guards)]

pub mod bounds;
pub mod error;
pub mod expr;
pub mod function;
pub mod harness;
pub mod invex;
pub mod multivar;
pub mod quadrature;

pub use error::{Error, Result};
pub use function::{DerivativeMagnitude, DifferentiableFunction, Interval, RealFunction, ScalarFunction};
pub use invex::{ClassCertificate, ClassifyOptions, ConvexityClass, EtaMap, InvexDomain};
