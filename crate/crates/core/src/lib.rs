//! Quantitative persistence-of-excitation analysis for discrete-time LTI
//! systems.
//!
//! The crate builds Hankel matrices and excitation certificates, constructs
//! the structured matrices that propagate input excitation to outputs and
//! states, machine-verifies the resulting lower bounds, and checks the
//! data-driven trajectory parametrization (image equality plus the explicit
//! rank condition). It also ships the counterexample showing that excitation
//! of the filtered input is sufficient but not necessary for an excited
//! output.

pub mod bounds;
pub mod error;
pub mod fundamental;
pub mod linalg;
pub mod lti;
pub mod pe;
pub mod signal;
pub mod structmat;

pub use error::{Error, Result};
pub use lti::LtiSystem;
pub use signal::Signal;
