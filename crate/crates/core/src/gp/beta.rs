//! Confidence-scale schedule for the calibrated model tube.

use serde::{Deserialize, Serialize};

use super::model::GpDynamicsModel;
use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum BetaMode {
    /// Constant confidence scale (the practical default).
    Fixed { value: f64 },
    /// RKHS concentration form
    /// `B_f + (sigma / lambda) * sqrt(2 ln(1/delta) + 2 gamma_t)`,
    /// non-decreasing as the running information gain grows.
    Theoretical {
        rkhs_bound: f64,
        noise_scale: f64,
        delta: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    #[serde(flatten)]
    pub mode: BetaMode,
}

impl BetaSchedule {
    pub fn fixed(value: f64) -> Self {
        BetaSchedule {
            mode: BetaMode::Fixed { value },
        }
    }

    pub fn theoretical(rkhs_bound: f64, noise_scale: f64, delta: f64) -> Self {
        BetaSchedule {
            mode: BetaMode::Theoretical {
                rkhs_bound,
                noise_scale,
                delta,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.mode {
            BetaMode::Fixed { value } => {
                if !(*value >= 0.0) {
                    return Err(CoreError::invalid("fixed beta must be non-negative"));
                }
            }
            BetaMode::Theoretical {
                rkhs_bound,
                noise_scale,
                delta,
            } => {
                if !(*delta > 0.0 && *delta < 1.0) {
                    return Err(CoreError::invalid(format!(
                        "delta must lie in (0, 1), got {delta}"
                    )));
                }
                if !(*rkhs_bound >= 0.0 && *noise_scale >= 0.0) {
                    return Err(CoreError::invalid(
                        "rkhs_bound and noise_scale must be non-negative",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Beta from explicit regularizer and accumulated information gain.
    pub fn beta_from_info(&self, lambda: f64, info_gain: f64) -> Result<f64> {
        self.validate()?;
        Ok(match &self.mode {
            BetaMode::Fixed { value } => *value,
            BetaMode::Theoretical {
                rkhs_bound,
                noise_scale,
                delta,
            } => {
                rkhs_bound
                    + (noise_scale / lambda) * (2.0 * (1.0 / delta).ln() + 2.0 * info_gain).sqrt()
            }
        })
    }

    /// Beta for the model's current state.
    pub fn beta(&self, model: &GpDynamicsModel) -> Result<f64> {
        self.beta_from_info(model.lambda(), model.tracker().info_gain())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_mode_returns_the_constant() {
        let s = BetaSchedule::fixed(1.0);
        assert_eq!(s.beta_from_info(7.0, 123.0).unwrap(), 1.0);
    }

    #[test]
    fn theoretical_mode_matches_direct_formula() {
        let s = BetaSchedule::theoretical(1.0, 0.1, 0.1);
        let got = s.beta_from_info(1.0, 0.0).unwrap();
        let want = 1.0 + 0.1 * (2.0 * 10.0_f64.ln()).sqrt();
        assert!((got - want).abs() < 1e-12);
        assert!((got - 1.21459).abs() < 1e-5);
    }

    #[test]
    fn theoretical_mode_is_monotone_in_info_gain() {
        let s = BetaSchedule::theoretical(0.5, 0.2, 0.05);
        let mut last = 0.0;
        for g in [0.0, 0.5, 1.0, 4.0, 10.0] {
            let b = s.beta_from_info(2.0, g).unwrap();
            assert!(b >= last);
            last = b;
        }
    }

    #[test]
    fn invalid_delta_is_rejected() {
        for delta in [0.0, 1.0, -0.5, 1.5] {
            let s = BetaSchedule::theoretical(1.0, 0.1, delta);
            assert!(s.beta_from_info(1.0, 0.0).is_err());
        }
    }
}
