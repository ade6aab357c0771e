//! Numerical bifurcation analysis of the scalar state-dependent delay equation
//!
//! ```text
//! u'(t) = alpha u(t) + beta u(t - 1 - u(t - b))
//! ```
//!
//! The crate covers time integration ([`simulate`]), the characteristic equation of
//! the zero equilibrium ([`linstab`]), periodic orbits by collocation ([`orbit`]),
//! one- and two-parameter continuation ([`continuation`]), the exact center-manifold
//! expansion at the double-zero point ([`cmf`]) and the resulting planar unfolding
//! ([`planar`]).

pub mod cmf;
pub mod colloc;
pub mod continuation;
pub mod error;
pub mod linstab;
pub mod model;
pub mod orbit;
pub mod par;
pub mod planar;
pub mod pp;
pub mod simulate;
pub mod table;

pub use error::{Error, Result};
pub use model::{HistorySegment, Param, Params, ReducedParams};
