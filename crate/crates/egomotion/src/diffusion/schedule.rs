//! Variance schedule driving forward corruption and sampler transitions.

use crate::error::{Error, Result};

/// Default number of corruption steps.
pub const DEFAULT_DIFFUSION_STEPS: usize = 100;
/// Default β at t = 1.
pub const DEFAULT_BETA_MIN: f64 = 1e-4;
/// Default β at t = T.
pub const DEFAULT_BETA_MAX: f64 = 0.02;

/// Linear variance schedule β_t ∈ (0, 1) with cached cumulative products
/// ᾱ_t = ∏_{s ≤ t} (1 − β_s).
///
/// Timesteps are 1-based: `beta(t)` accepts t ∈ [1, steps]. `alpha_bar(t)`
/// additionally accepts t = 0 and returns exactly 1 there, so the last
/// sampler transition (t → 0) lands on the clean-sample endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    /// `alpha_bars[t]` = ᾱ_t; index 0 holds exactly 1.0.
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// β interpolated linearly from `beta_min` (t = 1) to `beta_max`
    /// (t = `steps`). A single-step schedule uses β_1 = `beta_min`.
    pub fn linear(steps: usize, beta_min: f64, beta_max: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("NoiseSchedule", "steps must be positive"));
        }
        if !(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0)
            || !beta_min.is_finite()
            || !beta_max.is_finite()
        {
            return Err(Error::invalid(
                "NoiseSchedule",
                format!("need 0 < beta_min <= beta_max < 1, got [{beta_min}, {beta_max}]"),
            ));
        }
        let denom = (steps.max(2) - 1) as f64;
        let betas: Vec<f64> = (0..steps)
            .map(|k| beta_min + (beta_max - beta_min) * k as f64 / denom)
            .collect();
        let mut alpha_bars = Vec::with_capacity(steps + 1);
        alpha_bars.push(1.0);
        let mut prod = 1.0;
        for &b in &betas {
            prod *= 1.0 - b;
            alpha_bars.push(prod);
        }
        Ok(NoiseSchedule { betas, alpha_bars })
    }

    pub fn default_linear() -> Self {
        Self::linear(DEFAULT_DIFFUSION_STEPS, DEFAULT_BETA_MIN, DEFAULT_BETA_MAX)
            .expect("default schedule parameters are valid")
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    /// β_t for t ∈ [1, steps].
    pub fn beta(&self, t: usize) -> f64 {
        assert!(
            (1..=self.betas.len()).contains(&t),
            "timestep {t} outside [1, {}]",
            self.betas.len()
        );
        self.betas[t - 1]
    }

    /// ᾱ_t for t ∈ [0, steps]; ᾱ_0 = 1 exactly.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        assert!(
            t <= self.betas.len(),
            "timestep {t} outside [0, {}]",
            self.betas.len()
        );
        self.alpha_bars[t]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_schedule_is_one_product() {
        let s = NoiseSchedule::linear(1, 0.5, 0.5).unwrap();
        assert_eq!(s.steps(), 1);
        assert_eq!(s.beta(1), 0.5);
        assert_eq!(s.alpha_bar(0), 1.0);
        assert_eq!(s.alpha_bar(1), 0.5);
    }

    #[test]
    fn constant_beta_products_match_hand_arithmetic() {
        // β ≡ 0.1 over two steps: ᾱ = [0.9, 0.81].
        let s = NoiseSchedule::linear(2, 0.1, 0.1).unwrap();
        assert!((s.alpha_bar(1) - 0.9).abs() < 1e-15);
        assert!((s.alpha_bar(2) - 0.81).abs() < 1e-15);
    }

    #[test]
    fn default_schedule_is_strictly_decreasing_with_valid_betas() {
        let s = NoiseSchedule::default_linear();
        assert_eq!(s.steps(), DEFAULT_DIFFUSION_STEPS);
        assert_eq!(s.beta(1), DEFAULT_BETA_MIN);
        assert_eq!(s.beta(s.steps()), DEFAULT_BETA_MAX);
        for t in 1..=s.steps() {
            assert!(s.beta(t) > 0.0 && s.beta(t) < 1.0);
            assert!(
                s.alpha_bar(t) < s.alpha_bar(t - 1),
                "alpha_bar not strictly decreasing at t={t}"
            );
        }
        // The first product sits in the neighborhood of 1.
        assert!((s.alpha_bar(1) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn invalid_ranges_are_rejected() {
        assert!(NoiseSchedule::linear(0, 0.1, 0.2).is_err());
        assert!(NoiseSchedule::linear(10, 0.0, 0.2).is_err());
        assert!(NoiseSchedule::linear(10, -0.1, 0.2).is_err());
        assert!(NoiseSchedule::linear(10, 0.3, 0.2).is_err());
        assert!(NoiseSchedule::linear(10, 0.1, 1.0).is_err());
    }
}
