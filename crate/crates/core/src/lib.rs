//! Information geometry of multivariate Markov chains.
//!
//! f-divergences between transition matrices, information projections onto
//! product, partition-factorizable and clique-factorizable chains, Han and
//! Shearer type inequalities, spectral diagnostics, and the swapping
//! (parallel tempering) chain with its projection sampler.

pub mod cli;
pub mod divergence;
pub mod error;
pub mod ext;
pub mod factorization;
pub mod inequality;
pub mod io;
pub mod projection;
pub mod random;
pub mod spectral;
pub mod state;
pub mod swapping;

pub use error::{Error, Result};
pub use ext::ExtReal;
pub use state::{
    edge_measure, stationary_distribution, tensor_blocks, tensor_product, time_reversal,
    CoordinateSubset, Distribution, EdgeMeasure, ProductStateSpace, StochasticMatrix,
};
pub use divergence::{f_div_chains, f_div_measures, kl_rate, DivergenceGenerator, GeneratorKind};
