//! Potts/Ising parameter estimation by band-gap maximization.
//!
//! Given a graph and label-energy tables, the crate finds parameters theta =
//! (H, J) that maximize the spectral band gap, either for a prescribed data
//! set of ground states (DAS) or a prescribed ground-state count (GSM), via
//! mixed-integer linear programming. Every result is validated against an
//! exhaustive enumeration of the state space.

pub mod formulations;
pub mod graph;
pub mod potts;
pub mod spectrum;

pub use formulations::{
    big_m, build_das, build_gsm, das_relaxed_lp, estimate_das, estimate_gsm, extract_and_validate,
    gsm_bruteforce, EstimationMode, EstimationResult, FormulationError,
};
pub use graph::{Graph, GraphError};
pub use potts::{model_to_json, parse_model, Params, ParamBounds, PottsError, PottsModel, State};
pub use spectrum::{
    beta_grid, beta_star, compute_spectrum, log_partition_function, nll, nll_curve_csv,
    nll_gradient, nll_upper_bound, partition_function, probability, spectrum_summary, train_nll,
    Spectrum, SpectrumError,
};
