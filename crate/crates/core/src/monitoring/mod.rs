//! Projective measurements, quantum trajectories and ensemble averages.

mod engine;
mod ensemble;
mod measurement;

pub use engine::{run_trajectory, Protocol, Snapshot, TrajectoryEngine, TrajectoryParams, TrajectoryRecord};
pub use ensemble::{run_ensemble, EnsembleResult, EnsembleSeries, ExcludedTrajectory};
pub use measurement::{
    check_schedule, measure, measure_occupation, measure_z, measurement_sweep, CovarianceState, Measurable,
    MeasurementEvent, NumberState, CERTAINTY_TOL, MAX_STEP_PROBABILITY,
};
