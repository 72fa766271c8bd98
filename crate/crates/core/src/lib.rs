//! Voting in a stochastic environment: a society of egoists and one group
//! that supports a proposal when its mean increment exceeds a claims
//! threshold.
//!
//! Closed-form expectations live in [`expectations`], the optimal claims
//! threshold in [`optimal`], Monte Carlo checks in [`simulate`], and grid
//! evaluation in [`sweep`].

pub mod error;
pub mod expectations;
pub mod model;
pub mod optimal;
pub mod simulate;
pub mod special;
pub mod sweep;

pub use error::{Result, ViseError};
pub use expectations::{
    expected_egoist_increment, expected_group_increment, expected_society_increment, group_support_prob, mu_plus,
    rule_terms, ExpectationReport, RuleTerms, SupportProbability,
};
pub use model::{
    apply_step, tally_votes, validate, Configuration, DerivedShares, EnvironmentParams, Proposal, SocietyParams,
    VoteOutcome, VotingRule,
};
pub use optimal::{
    numeric_argmax_t, optimal_threshold, stationarity_check, ArgmaxMethod, ArgmaxResult, CaseTag,
    OptimalThresholdResult, StationarityDiagnostics,
};
pub use simulate::{estimate_mu_plus, run, MeanEstimate, SimulationConfig, TrajectoryStats};
pub use special::{binomial_upper_tail, binomial_upper_tail_normal_approx, Probability, TailSpec};
pub use sweep::{majority_threshold_classes, max_delta_curve, pit_region, sweep, PitResult, SweepSpec, TMode};
