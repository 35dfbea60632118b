//! Generalized Ricci flow: right-hand sides, an adaptive RK4 integrator and
//! stability experiments around solitons.

mod experiment;
mod integrate;
mod rhs;

pub use experiment::{stability_experiment, DirectionClass, ExperimentError, ExperimentReport, ExperimentRun};
pub use integrate::{
    fit_rate, integrate, rk4_step, BlowupKind, FlowControl, FlowError, FlowTrajectory, RateFit, StopReason, TrajectoryRow,
};
pub use rhs::{flow_rhs, gauged_rhs, gauged_rhs_at, grf_consistency, grf_rhs, FlowKind, FlowRhs};
