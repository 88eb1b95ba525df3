//! # ltlab
//!
//! A numerical laboratory for strong-coupling Lieb–Thirring inequalities.
//!
//! The crate provides, as composable pieces:
//!
//! * a periodic spectral substrate for fractional kinetic energies and
//!   fractional Sobolev seminorms ([`grid`]),
//! * closed-form analytic constants ([`constants`]),
//! * variational estimates of Gagliardo–Nirenberg-type quotient constants
//!   and of the empirical constants in local uncertainty principles
//!   ([`gn`]),
//! * the stopping-time cube/cluster covering of a density ([`covering`]),
//! * explicit local exclusion lower bounds on interaction energies
//!   ([`exclusion`]),
//! * desk-scale N-body states and energy quotients ([`nbody`]),
//! * a certificate pipeline assembling all of the above into a lower bound
//!   on interacting energy quotients ([`certify`]),
//! * binary grid I/O and report plumbing for the `ltlab` CLI ([`io`]).
//!
//! See the book under `book/` for a guided tour; its code snippets are
//! compiled as doc-tests.

pub mod constants;
pub mod certify;
pub mod error;
pub(crate) mod fft;
pub mod gn;
pub mod covering;
pub mod exclusion;
pub mod grid;
pub mod io;
pub mod nbody;

pub use error::{Error, Result};
