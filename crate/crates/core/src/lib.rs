//! Polyhedral invariants of polynomials and a numerical laboratory for the
//! singular integral kernels those invariants control.
//!
//! The library has three layers:
//!
//! * exact combinatorics: sparse rational polynomials ([`poly`]), their Newton
//!   polyhedra, Newton distance, critical integrability exponent and face
//!   structure ([`newton`]), and a numerical screen for the face-zero
//!   hypotheses ([`hypothesis`]);
//! * kernel construction: smooth cutoffs ([`bump`]), odd homogeneous-type
//!   kernels with their dyadic pieces, truncations, cancellation and
//!   distribution pairing ([`kernel`]), and the blown-up Riesz cone example
//!   ([`riesz`]);
//! * quantitative verification: sublevel-set asymptotics, shell integrals,
//!   oscillatory Fourier transforms, multiplier/symbol bounds and an FFT
//!   convolution harness ([`estimate`]), on top of shared quadrature rules
//!   ([`quad`]).

pub mod bump;
pub mod estimate;
pub mod hypothesis;
pub mod kernel;
pub mod newton;
pub mod poly;
pub mod quad;
pub mod riesz;
pub(crate) mod util;

pub use poly::{MultiPoly, PolyError};
pub use newton::{pareto_minimal, Face, NewtonError, NewtonInvariants, NewtonPolyhedron};
