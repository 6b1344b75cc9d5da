//! Stochastic resource-constrained project scheduling with repair.
//!
//! The crate covers the whole pipeline: reading instances ([`psplib`]),
//! drawing duration scenarios ([`scenario`]), minimum-makespan scheduling
//! ([`scheduler`]), executing first-stage start times under realized
//! durations with unit postponements ([`repair`]), post-hoc regret
//! ([`regret`]), and the three ways of choosing a first stage compared here:
//! the deterministic sample-average baseline and the scenario program
//! ([`saa`]), and decision-focused training of a stochastic estimator
//! ([`dfl`]).
//!
//! Time is discrete ([`Time`]). Real-valued quantities are generic over
//! [`Real`] (`f32` or `f64`); the `*64` aliases below fix `f64`.

pub mod check;
pub mod dfl;
pub mod error;
pub mod instance;
mod profile;
pub mod psplib;
pub mod regret;
pub mod repair;
pub mod saa;
pub mod scalar;
pub mod scenario;
pub mod scheduler;

pub use error::{Error, Result};
pub use instance::{
    two_task_maintenance, Instance, Lag, ResourceDef, Scenario, Successor, Task, Time,
    Unavailability,
};
pub use scalar::Real;
pub use scheduler::{sgs_serial, solve_min_makespan, Optimality, Schedule, SolveBudget};

pub type BaseStats64 = scenario::BaseStats<f64>;
pub type Penalty64 = repair::PenaltyCoefficient<f64>;
pub type ExecutionResult64 = repair::ExecutionResult<f64>;
pub type RegretRecord64 = regret::RegretRecord<f64>;
pub type Evaluation64 = regret::Evaluation<f64>;
pub type EstimatorParams64 = dfl::EstimatorParams<f64>;
pub type TrainConfig64 = dfl::TrainConfig<f64>;
pub type SaaConfig64 = saa::SaaConfig<f64>;
pub type SaaSolution64 = saa::SaaSolution<f64>;

pub type BaseStats32 = scenario::BaseStats<f32>;
pub type Penalty32 = repair::PenaltyCoefficient<f32>;
pub type EstimatorParams32 = dfl::EstimatorParams<f32>;
pub type TrainConfig32 = dfl::TrainConfig<f32>;
