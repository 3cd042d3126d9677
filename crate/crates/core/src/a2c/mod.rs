//! Actor-critic search over topologies with an optional learned reward.

pub mod agent;
pub mod env;
pub mod gs;

pub use agent::{compute_gae, A2cConfig, Agent, Head, Losses, Rollout};
pub use env::{Action, RewardSource, Step, TopoEnv};
pub use gs::{
    evaluate_policy, evaluate_random, evaluate_with, run_a2c_gs, A2cGsConfig, A2cGsOutput, EpochTrace, EvalStats,
    Learner, LossRecord, ReplayBuffer, Transition, HISTOGRAM_BIN,
};
