//! Calibrated GP dynamics machinery: kernels, the multi-output regression
//! model, the confidence schedule, information-gain accounting and
//! temperature-scaling recalibration.

mod beta;
mod calibrate;
mod info;
mod kernel;
mod linalg;
mod model;

pub use beta::{BetaMode, BetaSchedule};
pub use calibrate::{expected_calibration_error, recalibrate, search_temperature};
pub use info::{complexity_report, mig_greedy, total_info_gain, ComplexityTracker};
pub use kernel::Kernel;
pub use linalg::Cholesky;
pub use model::{GpDynamicsModel, GpModelConfig, GpModelSnapshot, TargetMode};
