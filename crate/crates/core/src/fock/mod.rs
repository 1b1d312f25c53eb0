//! Truncated Fock-space engine: multimode pure states, linear optics,
//! squeezing and homodyne conditioning.
//!
//! Quadratures follow `x̂ = (a + a†)/√2`, so the vacuum has X-variance 1/2.

pub mod hermite;
pub mod homodyne;
pub mod ops;
pub mod state;

pub use hermite::{hermite_functions, Quadrature};
pub use homodyne::{condition, homodyne_density, homodyne_project, homodyne_sample, Conditioned, Conditioning, Marginal};
pub use ops::{
    apply_beamsplitter, apply_single_mode, apply_squeeze, cat_single, cat_two, coherent, ensemble_fidelity,
    fidelity, required_cutoff, squeeze_matrix, PDisplacer,
};
pub use state::{BranchEnsemble, PureState, StateDump, DEFAULT_LEAK_TOL};
