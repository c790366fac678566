//! N-segment piecewise-constant approximation of 1-D signals under the
//! mean-squared-error criterion.
//!
//! Three solvers are provided for the same energy:
//!
//! * [`dar_bruckstein`] — the Dar–Bruckstein adaptive sampler, which places
//!   boundaries so that every segment carries the same amount of the cube
//!   root of the squared signal derivative,
//! * [`pso`] — direct minimisation with SPSO-2011 (adaptive random
//!   neighbourhood topology, rotation-invariant hypersphere updates),
//! * [`dp`] — an exact dynamic-programming oracle over a refined uniform
//!   candidate grid.
//!
//! Signals live in [`signal`] as uniform piecewise-constant cells with prefix
//! sums, so all interval statistics are O(1). The [`approx`] module defines
//! the boundary vector, the mean-value approximation and the energy.

pub mod approx;
pub mod cli;
pub mod dar_bruckstein;
pub mod dp;
pub mod pgm;
pub mod pso;
pub mod signal;

pub use approx::{build_approximation, energy, BoundaryVector, PiecewiseApprox};
pub use signal::{DiscretizedSignal, NoiseSpec};
