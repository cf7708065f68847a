//! Problem dimensions, variable laws, coefficient priors, observation models and
//! synthetic data generation.

mod dataset;
mod dims;
mod discrete;
mod distribution;
mod likelihood;
mod observation;
mod prior;

pub use dataset::{apply_missing, sample_dataset, Dataset, DatasetHeader, Observations};
pub use dims::{Combinations, ProblemDims, SupportPartition, SupportSet, SUPPORT_ENUMERATION_CAP};
pub use discrete::{ChannelTable, PartitionedCodes, CHANNEL_ENUMERATION_CAP};
pub use distribution::VariableDistribution;
pub use likelihood::{
    conditional_log_likelihood, marginal_log_likelihood, MarginalLogLik, DEFAULT_PRIOR_DRAWS,
};
pub use observation::{ObservationModel, TabularChannel};
pub use prior::{sign_grid, BetaPrior, BETA_ENUMERATION_CAP};

