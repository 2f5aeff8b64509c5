//! Certified total-variation convergence bounds for two- and
//! three-component Gibbs samplers.
//!
//! The crate is organized around a small set of model types
//! ([`model::TwoComponentModel`], [`model::ThreeComponentModel`]), the
//! analytical bounds that can be certified for them ([`bounds`]), exact
//! ground-truth oracles ([`oracle`]) against which every bound is checked,
//! a grid tuner for the free parameters of the drift/minorization bounds
//! ([`tuner`]), ergodicity checks ([`ergodicity`]) and report writers
//! ([`report`]).

pub mod bounds;
pub mod cli;
pub mod ergodicity;
pub mod error;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod par;
pub mod quadrature;
pub mod report;
pub mod tuner;

pub use error::{Error, Result};
pub use par::Execution;
