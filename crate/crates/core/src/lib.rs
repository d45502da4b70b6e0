//! Robust model-based reinforcement learning at desk scale: calibrated GP
//! dynamics models, hallucinated optimistic/pessimistic control, max-min
//! policy search, an episodic learning loop and a worst-case evaluation
//! harness.

pub mod algorithm;
pub mod checks;
pub mod env;
pub mod error;
pub mod eval;
pub mod gp;
pub mod hallucinate;
pub mod optimize;
pub mod policy;
pub mod seed;
pub mod sim;
pub mod types;

pub use error::{CoreError, Result};
