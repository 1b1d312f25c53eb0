//! Simulation of a hybrid continuous/discrete-variable quantum repeater.
//!
//! Entanglement is heralded by single-photon detection ([`entgen`]), grown
//! into squeezed cat states by homodyne-conditioned breeding ([`breeding`]),
//! and connected by linear-optics entanglement swapping ([`swapping`]).
//! [`repeater`] assembles the chain and estimates rate and fidelity versus
//! distance. [`fock`] is the numerical engine; [`cat_algebra`] handles exact
//! superpositions of coherent states.

pub mod breeding;
pub mod cat_algebra;
pub mod cli;
pub mod config;
pub mod entgen;
pub mod error;
pub mod fock;
pub mod mc;
pub mod optim;
pub mod repeater;
pub mod swapping;
pub mod validation;

pub use error::{HyrepError, Result};
