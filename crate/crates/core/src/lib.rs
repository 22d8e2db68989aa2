//! Numerical analytic continuation of the Hadamard product `f ⊙ g` of two
//! endlessly continuable germs.
//!
//! The engine continues `f ⊙ g` along an arbitrary path `γ` avoiding
//! `Ω = {0} ∪ A·B` by deforming the circle of the Cauchy-type integral
//!
//! ```text
//! f ⊙ g(ξ) = (1 / 2πi) ∮ f(ζ) g(ξ/ζ) dζ/ζ
//! ```
//!
//! under the flow of a non-autonomous vector field that keeps the singular
//! points of `f` fixed and carries the moving singular points `γ(t)/β` of
//! the second factor along. Every node of the deformed contour carries its
//! own branch trackers for `f` and `g`, so non-principal sheets are reached
//! simply by choosing `γ`.
//!
//! Module map:
//!
//! * [`germ`]: germs, the catalog, and branch trackers.
//! * [`geometry`]: singular sets, `Ω = {0} ∪ A·B`, paths and the constants
//!   `a, b, ρ, δ, M, ε, K`.
//! * [`deformation`]: the cutoff `η`, the vector field and its flow.
//! * [`hadamard`]: principal evaluation, continuation and monodromy.
//! * [`borel`]: Borel transform, convolution and coefficientwise products on
//!   truncated formal series.
//! * [`io`]: the germ-spec mini-language and the JSON formats.
//! * [`acceptance`]: the verification criteria shared by the test suite and
//!   the `selftest` command.

pub mod acceptance;
pub mod borel;
pub mod deformation;
mod error;
pub mod geometry;
pub mod germ;
pub mod hadamard;
pub mod io;
pub(crate) mod poly;

pub use error::{Error, ErrorKind, Result};
pub use num_complex::Complex64;
