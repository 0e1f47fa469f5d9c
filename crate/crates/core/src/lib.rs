//! Dissipative quantum walks on a bipartite lossy ring.
//!
//! A particle starts on a non-decaying site and hops along a chain whose
//! every second site leaks probability. The mean displacement before decay
//! is quantized for coherent linear dynamics and becomes continuous once
//! translational symmetry on the non-decaying sublattice is broken, either
//! by a mean-field interaction or by an energy offset on the initial site.
//!
//! * [`lattice`]: parameters, state layouts and right-hand sides.
//! * [`ode`]: adaptive Dormand-Prince integration and the displacement observable.
//! * [`rate`]: incoherent rate equations, including the self-consistent closure.
//! * [`momentum`]: exact momentum-space solution of the rate equations.
//! * [`experiments`]: scenario presets and parameter sweeps.
//! * [`cli`]: configuration and output writers used by the `qwalk` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod momentum;
pub mod ode;
pub mod rate;
mod tableau;

pub use error::{Error, Result};
pub use lattice::{ChainState, DensityMatrix, LatticeParams, WalkState};
pub use ode::{IntegratorConfig, ObservableSeries, Trajectory};
pub use rate::{HoppingRates, RateState};
