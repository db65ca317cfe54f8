//! Replicated experiments and the statistics used to check limit theorems
//! against them.

mod distance;
mod limit;
mod replicates;
mod schedule;

pub use distance::{
    kolmogorov_to_normal, ks_two_sample, tv_pmf_to_poisson, tv_to_poisson, KsResult, TvEstimate,
};
pub use limit::{
    conditioned_cluster_sample, conditioned_cluster_sample_with, sample_limit_law,
    sample_limit_law_thinned, sample_limit_law_with, ConditionedClusters, LimitLawSample,
    DEFAULT_ATTEMPT_BUDGET, DEFAULT_THIN,
};
pub use replicates::{
    dispersion_index, mean_var, run_replicates, run_replicates_at, run_replicates_with, MeanVar,
    ReplicateBatch,
};
pub use schedule::{schedule_radius, Regime, RegimeSchedule};
