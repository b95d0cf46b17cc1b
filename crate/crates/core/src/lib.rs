//! Entanglement of one-particle states in the one-dimensional Anderson model.
//!
//! The crate builds disordered tight-binding chains ([`lattice`]), finds their low-lying
//! eigenstates ([`eigen`]), measures pairwise concurrence ([`entanglement`]) and
//! localization ([`localization`]), propagates states in time ([`dynamics`]), fits the
//! resulting curves ([`fitting`]) and averages everything over disorder ([`ensemble`]).
//! [`output`] and [`config`] handle CSV files and run recipes.

pub mod config;
pub mod dynamics;
pub mod eigen;
pub mod ensemble;
pub mod entanglement;
pub mod error;
pub mod fitting;
pub mod lattice;
pub mod localization;
pub mod output;
pub mod selfcheck;
pub mod state;
pub mod tridiag;

pub use ensemble::{Observable, Seeding, SweepConfig};
pub use error::{Error, Result};
pub use lattice::{Boundary, DisorderConfig, Hamiltonian};
pub use state::State;
