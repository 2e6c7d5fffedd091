//! Protocol layer: crosstalk extraction, mutually unbiased bases,
//! post-selected bipartite states, error rates and secret-key rates.

mod crosstalk;
mod gf;
mod keyrate;
mod mubs;
mod state;
mod subspace;

pub use crosstalk::{crosstalk_matrix, CrosstalkMatrix, ReceiverBasis};
pub use keyrate::{
    average_error_rate, best_subspace, best_subspace_by, evaluate_ensemble, holevo_check, key_rate_per_photon,
    secret_key_rate, HolevoCheck, KeyRateResult,
};
pub use mubs::{build_mubs, MUBSet};
pub use state::{
    average_density_matrix, maximally_entangled, postselect_from_matrix, postselect_state, von_neumann_entropy,
    DensityMatrix,
};
pub use subspace::{EncodingSubspace, ALL_MODES, MAX_OAM};

pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;
pub type CVector = nalgebra::DVector<num_complex::Complex64>;
