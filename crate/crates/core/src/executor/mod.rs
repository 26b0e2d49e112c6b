//! Bilateral actions, cable dynamics and the trial loop.

pub mod action;
pub mod dynamics;
pub mod moves;
pub mod trial;

pub use action::{Arm, ArmAction, BilateralAction, MoveKind};
pub use dynamics::{DynamicsConfig, GraspOutcome, GraspReport};
pub use trial::{
    classify_failure, run_trial, run_trial_traced, ActionRecord, ConditionLog, Event, FailureMode, Frame, Policy, SimConfig,
    TerminalCause, TrialEnd, TrialResult, WorldState, LOG_SCHEMA_VERSION,
};
