//! Learned-transport sparse grid integration on the unit cube.
//!
//! Expectations under an unknown distribution `μ` on `[0,1]^d` are computed by
//! learning a neural ODE flow `Φ` with `Φ_*ν ≈ μ` for a simple factorized
//! source `ν`, then applying a Clenshaw–Curtis Smolyak rule for `ν` to the
//! composition `qoi ∘ Φ`.
//!
//! The crate is `no_std` with `alloc`. IO, file formats and threading live in
//! the companion `lti` crate; batch work is routed through [`Executor`] so
//! callers can plug in a parallel backend without affecting results.
#![no_std]
#![deny(rust_2018_idioms)]

extern crate alloc;

pub mod analysis;
pub mod exec;
pub mod flow;
pub(crate) mod math;
pub mod network;
pub mod quadrature;
pub mod sum;
pub mod training;
pub mod transport;

pub use exec::{Executor, Serial};
pub use sum::NeumaierSum;
