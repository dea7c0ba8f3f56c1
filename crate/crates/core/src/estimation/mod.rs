//! Estimation theory for a one-parameter family of outcome distributions:
//! Fisher information, relative entropy, the first-order bias of the
//! asymptotic MLE and a brute-force likelihood maximizer to check it against.

mod bias;
pub mod closed_form;
mod distribution;
mod model;
mod oracle;

pub use bias::{
    d_relative_entropy_dg, first_order_bias, fisher_information, relative_entropy,
    systematic_error_first_order, BiasReport, Observation,
};
pub use closed_form::{systematic_error_postselected, systematic_error_standard};
pub use distribution::OutcomeDistribution;
pub use model::{binomial_model, finite_difference_step, FnModel, ParametricModel};
pub use oracle::{mle_oracle, mle_oracle_distribution, OracleEstimate, OracleOptions};
