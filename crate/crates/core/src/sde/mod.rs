//! Reference diffusions, scaled Brownian bridges and SDE simulation.

pub(crate) mod bridge;
mod doob;
mod schedule;
mod simulate;
mod trajectory;

pub use bridge::{
    bridge_drift_target, bridge_marginal_moments, bridge_marginal_sample, BridgeSample,
};
pub use doob::{estimate_h_mc, estimate_log_h_mc};
pub use schedule::{DiffusivitySchedule, TimeGrid};
pub use simulate::{
    simulate_conditioned, simulate_sde, simulate_sde_from, DoobField, DriftField, PointwiseDrift,
    SimOptions, ZeroDrift,
};
pub use trajectory::{write_trajectories_csv, TrajectoryBatch};
