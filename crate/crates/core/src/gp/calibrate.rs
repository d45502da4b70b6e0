//! Temperature-scaling recalibration of one-step-ahead Gaussian predictive
//! intervals: binary search for the temperature that balances empirical
//! coverage against nominal coverage across central interval levels, which
//! minimizes the expected calibration error for Gaussian-shaped residuals.

use super::model::GpDynamicsModel;
use crate::error::{CoreError, Result};
use crate::types::Transition;

/// Central-interval levels and their two-sided standard-normal quantiles.
const LEVELS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const Z_LEVELS: [f64; 9] = [
    0.125_661_346_855_074,
    0.253_347_103_135_800,
    0.385_320_466_407_568,
    0.524_400_512_708_041,
    0.674_489_750_196_082,
    0.841_621_233_572_914,
    1.036_433_389_493_790,
    1.281_551_565_544_600,
    1.644_853_626_951_470,
];

pub const TEMPERATURE_LO: f64 = 0.01;
pub const TEMPERATURE_HI: f64 = 100.0;

/// Empirical coverage of the temperature-scaled central interval at one level.
fn coverage(zscores: &[f64], temperature: f64, z_level: f64) -> f64 {
    let hits = zscores
        .iter()
        .filter(|&&z| z.abs() <= temperature * z_level)
        .count();
    hits as f64 / zscores.len() as f64
}

/// Signed coverage imbalance summed over levels; monotone non-decreasing in
/// the temperature, so its root is found by bisection.
fn imbalance(zscores: &[f64], temperature: f64) -> f64 {
    LEVELS
        .iter()
        .zip(&Z_LEVELS)
        .map(|(&l, &z)| coverage(zscores, temperature, z) - l)
        .sum()
}

/// Expected calibration error of the scaled intervals.
pub fn expected_calibration_error(zscores: &[f64], temperature: f64) -> f64 {
    LEVELS
        .iter()
        .zip(&Z_LEVELS)
        .map(|(&l, &z)| (coverage(zscores, temperature, z) - l).abs())
        .sum::<f64>()
        / LEVELS.len() as f64
}

/// Temperature search over standardized residuals.
pub fn search_temperature(zscores: &[f64]) -> Result<f64> {
    if zscores.is_empty() {
        return Err(CoreError::Empty("recalibration residuals"));
    }
    let (mut lo, mut hi) = (TEMPERATURE_LO, TEMPERATURE_HI);
    if imbalance(zscores, lo) >= 0.0 {
        return Ok(lo);
    }
    if imbalance(zscores, hi) <= 0.0 {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if imbalance(zscores, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Recalibrates the model's predictive std on held-out transitions and
/// applies the temperature. The validation set must be disjoint from the
/// training data for the coverage estimate to mean anything.
pub fn recalibrate(model: &mut GpDynamicsModel, validation: &[Transition]) -> Result<f64> {
    if validation.is_empty() {
        return Err(CoreError::Empty("recalibration validation set"));
    }
    // standardize against the un-tempered model
    let previous = model.temperature();
    model.set_temperature(1.0);
    let mut zscores = Vec::with_capacity(validation.len() * model.state_dim());
    for t in validation {
        let (mean, std) = match model.predict(
            &t.state.0,
            &t.agent_action.0,
            &t.adversary_action.0,
        ) {
            Ok(v) => v,
            Err(e) => {
                model.set_temperature(previous);
                return Err(e);
            }
        };
        for c in 0..model.state_dim() {
            let s = std[c].max(1e-300);
            zscores.push((t.next_state.0[c] - mean[c]) / s);
        }
    }
    let temperature = search_temperature(&zscores)?;
    model.set_temperature(temperature);
    Ok(temperature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_scores(n: usize, scale: f64, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, "calibration-test", &[]);
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            })
            .collect()
    }

    #[test]
    fn self_consistent_scores_give_unit_temperature() {
        for seed in 0..5 {
            let z = normal_scores(800, 1.0, seed);
            let t = search_temperature(&z).unwrap();
            assert!((0.8..=1.25).contains(&t), "temperature {t}");
        }
    }

    #[test]
    fn doubled_noise_needs_temperature_above_one() {
        for seed in 0..5 {
            let z = normal_scores(800, 2.0, 100 + seed);
            let t = search_temperature(&z).unwrap();
            assert!(t > 1.0, "temperature {t}");
            assert!((t - 2.0).abs() < 0.5, "temperature {t}");
        }
    }

    #[test]
    fn search_is_confined_to_the_interval() {
        let tiny = normal_scores(500, 1e-6, 7);
        let huge = normal_scores(500, 1e6, 8);
        assert_eq!(search_temperature(&tiny).unwrap(), TEMPERATURE_LO);
        assert_eq!(search_temperature(&huge).unwrap(), TEMPERATURE_HI);
    }

    #[test]
    fn matched_temperature_minimizes_ece() {
        let z = normal_scores(4000, 1.5, 9);
        let best = search_temperature(&z).unwrap();
        let ece_best = expected_calibration_error(&z, best);
        for t in [0.5, 0.75, 3.0, 6.0] {
            assert!(ece_best <= expected_calibration_error(&z, t) + 1e-9);
        }
    }

    #[test]
    fn empty_validation_is_an_error() {
        assert!(search_temperature(&[]).is_err());
    }
}
