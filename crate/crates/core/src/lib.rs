//! Simultaneous estimation of the amplitude and frequency of a linearly
//! polarized AC field with a control Hamiltonian that makes the two
//! estimation generators orthogonal.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: small dense complex operators and pure states.
//! * [`dynamics`]: field Hamiltonians, time-ordered propagation and the
//!   Heisenberg-picture generators, numerically and in closed form.
//! * [`qfim`]: quantum Fisher information matrix assembly, Cramér-Rao
//!   bounds, probe and measurement optimality checks.
//! * [`bounds`]: single-parameter benchmarks and the sequential-strategy
//!   comparison.
//! * [`nv`]: the NV electron/nuclear two-qubit protocol with dynamical
//!   decoupling, Bell readout and Jacobian-based uncertainty extraction.
//! * [`fit`]: ordinary least squares helpers shared by the studies.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod linalg;
pub mod nv;
pub mod qfim;
pub mod seeding;

pub use error::{Error, Result};
pub use linalg::{Operator, PureState, C64};
