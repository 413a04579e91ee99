//! Quadrature coherence scale (QCS) of bosonic states.
//!
//! - [`gaussian`]: covariance-matrix states, symplectic operations, loss and
//!   closed-form QCS expressions.
//! - [`fock`]: truncated Fock-space states and the two-copy photon-counting
//!   identity.
//! - [`protocol`]: the squeezed-vacuum and thermal two-copy experiments as
//!   circuits, executable on either engine.
//! - [`estimator`]: the photon-counting QCS estimator, multinomial sampling
//!   and error propagation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod estimator;
pub mod fock;
pub mod gaussian;
pub mod protocol;
