//! Quasienergies and lifetimes of a particle in a square well whose barrier
//! height oscillates periodically in time.
//!
//! The potential is a hard wall at the origin, a free region of width `a`,
//! a barrier of height `V0 + V1 cos(omega t)` between `a` and `b`, and a
//! shelf `V0'` beyond. Floquet states `exp(-i eps t) Phi(x, t)` with `Phi`
//! time-periodic are expanded over sidebands; matching the wavefunction at
//! the two interfaces under an outgoing (Gamow) condition beyond the barrier
//! yields a scalar equation whose complex roots `eps` are the quasienergies.
//! A negative imaginary part is a finite lifetime.
//!
//! Module layout:
//!
//! - [`numerics`]: Bessel J, branch-fixed complex square roots, dense
//!   complex solves, complex root finding, quadrature.
//! - [`model`]: well geometry, channel momenta, and the static spectrum.
//! - [`floquet`]: the sideband elimination, reduction coefficients, the
//!   quasienergy residual and its solver.
//! - [`spectra`]: branch continuation over frequency and direct/avoided
//!   crossing classification.
//! - [`observables`]: wavefunction assembly, densities, and nondecay
//!   probabilities.
//! - [`cli`]: the command-line front end and table emission.

// Negated float comparisons are deliberate: `!(x > 0.0)` rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)] // Index loops read better in the matrix code.
#![allow(clippy::manual_is_multiple_of)]

pub mod cli;
pub mod error;
pub mod floquet;
pub mod model;
pub mod numerics;
pub mod observables;
pub mod spectra;

pub use error::{Error, Result};
pub use floquet::{FloquetRoot, Truncation};
pub use model::{StaticLevel, WellConfig};
