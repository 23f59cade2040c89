//! Stochastic DDIM-η sampler with per-step Gaussian transition densities.
//!
//! Each reverse transition t → t_prev is the Gaussian
//!     x_{t_prev} ~ N(μ, σ̃² I),
//!     μ = √ᾱ_prev · x̂₀ + √(1 − ᾱ_prev − σ̃²) · ε̂,
//!     ε̂ = (x_t − √ᾱ_t · x̂₀) / √(1 − ᾱ_t),
//!     σ̃ = η · σ_ancestral(t → t_prev),
//! where x̂₀ is the denoiser prediction. η = 0 is the deterministic sampler;
//! η = 1 matches the ancestral posterior noise level. Closed-form densities
//! make the policy ratio of group-relative updates exactly computable.

use crate::error::{Error, Result};
use crate::numerics::Rng;

use super::denoiser::Denoiser;
use super::schedule::NoiseSchedule;
use super::vector::MotionVector;

/// Default number of strided sampling steps.
pub const DEFAULT_SAMPLE_STEPS: usize = 16;
/// Default stochasticity for policy-gradient rollouts.
pub const DEFAULT_ETA: f64 = 0.7;

/// Sampler settings: number of strided steps, stochasticity η ∈ [0, 1], and
/// whether per-step transition tuples (with log densities) are recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub steps: usize,
    pub eta: f64,
    pub record_logprobs: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            steps: DEFAULT_SAMPLE_STEPS,
            eta: DEFAULT_ETA,
            record_logprobs: false,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self, sched: &NoiseSchedule) -> Result<()> {
        if self.steps == 0 || self.steps > sched.steps() {
            return Err(Error::invalid(
                "SamplerConfig",
                format!(
                    "sampling steps {} outside [1, {}]",
                    self.steps,
                    sched.steps()
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.eta) || !self.eta.is_finite() {
            return Err(Error::invalid(
                "SamplerConfig",
                format!("eta must lie in [0, 1], got {}", self.eta),
            ));
        }
        if self.record_logprobs && self.eta == 0.0 {
            return Err(Error::DegenerateDensity);
        }
        Ok(())
    }
}

/// Ascending strided sub-schedule t_k = round(k·T/n), k = 1..n.
pub fn strided_timesteps(t_diff: usize, n: usize) -> Result<Vec<usize>> {
    if n == 0 || n > t_diff {
        return Err(Error::invalid(
            "strided_timesteps",
            format!("need 1 <= n <= {t_diff}, got {n}"),
        ));
    }
    let ratio = t_diff as f64 / n as f64;
    let ts: Vec<usize> = (1..=n).map(|k| (k as f64 * ratio).round() as usize).collect();
    debug_assert!(ts.windows(2).all(|w| w[0] < w[1]) && ts[0] >= 1 && ts[n - 1] == t_diff);
    Ok(ts)
}

/// Scalar coefficients of one reverse transition t → t_prev.
#[derive(Debug, Clone, Copy)]
pub struct TransitionCoefficients {
    pub sqrt_alpha_bar_t: f64,
    pub sqrt_one_minus_ab_t: f64,
    pub sqrt_alpha_bar_prev: f64,
    /// σ̃ = η · σ_ancestral; the transition's noise scale.
    pub sigma: f64,
    /// Coefficient of ε̂ in the mean: √max(0, 1 − ᾱ_prev − σ̃²).
    pub dir: f64,
    /// ∂μ_d/∂x̂₀_d = √ᾱ_prev − dir·√ᾱ_t/√(1−ᾱ_t); the scalar through which
    /// density gradients flow back into the denoiser output.
    pub dmean_dx0: f64,
}

/// Ancestral noise scale substituted for the final transition (t_prev = 0),
/// where the true ancestral variance vanishes because ᾱ_0 = 1. The floor keeps
/// the recorded density proper for η > 0 without letting last-step noise
/// dominate the spread of otherwise-deterministic rollouts. Its magnitude
/// matches √β₁ (the classic fixed-large final-step choice): much smaller
/// floors make the final transition's log-density orders of magnitude steeper
/// than every other step, and policy-gradient updates through the recorded
/// densities would then be dominated by that single transition.
pub const FINAL_SIGMA_FLOOR: f64 = 1e-2;

/// Computes the scalar transition coefficients. The last transition
/// (t_prev = 0) has zero ancestral noise because ᾱ_0 = 1; its noise scale is
/// floored at [`FINAL_SIGMA_FLOOR`] so the recorded density stays proper for
/// η > 0 (and the mean collapses to x̂₀ exactly there).
pub fn transition_coefficients(
    sched: &NoiseSchedule,
    t: usize,
    t_prev: usize,
    eta: f64,
) -> Result<TransitionCoefficients> {
    if t == 0 || t > sched.steps() || t_prev >= t {
        return Err(Error::invalid(
            "transition",
            format!("need steps >= t > t_prev >= 0, got t={t}, t_prev={t_prev}"),
        ));
    }
    let ab_t = sched.alpha_bar(t);
    let ab_p = sched.alpha_bar(t_prev);
    let sigma_ancestral = if t_prev == 0 {
        FINAL_SIGMA_FLOOR
    } else {
        ((1.0 - ab_p) / (1.0 - ab_t) * (1.0 - ab_t / ab_p)).sqrt()
    };
    let sigma = eta * sigma_ancestral;
    let dir = (1.0 - ab_p - sigma * sigma).max(0.0).sqrt();
    let sqrt_ab_t = ab_t.sqrt();
    let sqrt_one_minus_ab_t = (1.0 - ab_t).sqrt();
    Ok(TransitionCoefficients {
        sqrt_alpha_bar_t: sqrt_ab_t,
        sqrt_one_minus_ab_t,
        sqrt_alpha_bar_prev: ab_p.sqrt(),
        sigma,
        dir,
        dmean_dx0: ab_p.sqrt() - dir * sqrt_ab_t / sqrt_one_minus_ab_t,
    })
}

impl TransitionCoefficients {
    /// μ = √ᾱ_prev·x̂₀ + dir·(x_t − √ᾱ_t·x̂₀)/√(1−ᾱ_t), elementwise.
    pub fn mean(&self, x_t: &[f64], pred_x0: &[f64]) -> Vec<f64> {
        let c_state = self.dir / self.sqrt_one_minus_ab_t;
        let c_pred = self.sqrt_alpha_bar_prev - c_state * self.sqrt_alpha_bar_t;
        x_t.iter()
            .zip(pred_x0)
            .map(|(x, p)| c_pred * p + c_state * x)
            .collect()
    }
}

/// Sum over entries of the isotropic Gaussian log density ln N(x; mean, std²I).
pub fn gaussian_log_density(x: &[f64], mean: &[f64], std: f64) -> f64 {
    assert_eq!(x.len(), mean.len(), "density dimensions differ");
    assert!(std > 0.0, "density requires positive std, got {std}");
    const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_7;
    let ln_std = std.ln();
    x.iter()
        .zip(mean)
        .map(|(xi, mi)| {
            let z = (xi - mi) / std;
            -HALF_LN_TWO_PI - ln_std - 0.5 * z * z
        })
        .sum()
}

/// Everything produced by one reverse transition.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub sample: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: f64,
    /// Present only when the config records log densities.
    pub log_prob: Option<f64>,
    pub pred_x0: Vec<f64>,
}

/// One reverse transition t → t_prev from state `x_t`.
pub fn sample_step(
    denoiser: &Denoiser,
    x_t: &[f64],
    t: usize,
    t_prev: usize,
    cond: &[f64],
    cfg: &SamplerConfig,
    sched: &NoiseSchedule,
    rng: &mut Rng,
) -> Result<StepOutcome> {
    if cfg.record_logprobs && cfg.eta == 0.0 {
        return Err(Error::DegenerateDensity);
    }
    let pred_x0 = denoiser.predict_x0(x_t, t, cond)?;
    let coeff = transition_coefficients(sched, t, t_prev, cfg.eta)?;
    let mean = coeff.mean(x_t, &pred_x0);
    let sample = if coeff.sigma > 0.0 {
        let mut z = vec![0.0; mean.len()];
        rng.fill_normal(&mut z);
        mean.iter()
            .zip(&z)
            .map(|(m, zi)| m + coeff.sigma * zi)
            .collect()
    } else {
        mean.clone()
    };
    let log_prob = cfg
        .record_logprobs
        .then(|| gaussian_log_density(&sample, &mean, coeff.sigma));
    Ok(StepOutcome {
        sample,
        mean,
        std: coeff.sigma,
        log_prob,
        pred_x0,
    })
}

/// One recorded reverse transition of a rollout.
#[derive(Debug, Clone)]
pub struct DenoiseStep {
    pub t: usize,
    pub t_prev: usize,
    /// State x_t the transition started from.
    pub state: Vec<f64>,
    /// Action x_{t_prev} the policy took (the drawn sample).
    pub action: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: f64,
    pub log_prob: Option<f64>,
    /// The denoiser's clean-sample prediction at this step.
    pub pred_x0: Vec<f64>,
}

/// A full reverse rollout: recorded transitions (when requested), the final
/// clean sample, and the initial noise it started from.
#[derive(Debug, Clone)]
pub struct DenoiseTrajectory {
    steps: Vec<DenoiseStep>,
    final_sample: MotionVector,
    init_noise: MotionVector,
}

impl DenoiseTrajectory {
    pub fn steps(&self) -> &[DenoiseStep] {
        &self.steps
    }

    pub fn final_sample(&self) -> &MotionVector {
        &self.final_sample
    }

    pub fn init_noise(&self) -> &MotionVector {
        &self.init_noise
    }
}

/// Runs the full reverse process from externally supplied initial noise
/// (shared initialization across a rollout group is the caller's choice).
/// Transition tuples are recorded only when `cfg.record_logprobs`.
pub fn sample_trajectory(
    denoiser: &Denoiser,
    cond: &[f64],
    cfg: &SamplerConfig,
    sched: &NoiseSchedule,
    init_noise: &MotionVector,
    rng: &mut Rng,
) -> Result<DenoiseTrajectory> {
    cfg.validate(sched)?;
    if init_noise.dim() != denoiser.motion_dim() || init_noise.frames() != denoiser.frames() {
        return Err(Error::dimension(
            "sample_trajectory init noise",
            denoiser.motion_dim(),
            init_noise.dim(),
        ));
    }
    let ts = strided_timesteps(sched.steps(), cfg.steps)?;
    let mut x = init_noise.data().to_vec();
    let mut steps = Vec::with_capacity(if cfg.record_logprobs { cfg.steps } else { 0 });
    for k in (0..ts.len()).rev() {
        let t = ts[k];
        let t_prev = if k > 0 { ts[k - 1] } else { 0 };
        let out = sample_step(denoiser, &x, t, t_prev, cond, cfg, sched, rng)?;
        if cfg.record_logprobs {
            steps.push(DenoiseStep {
                t,
                t_prev,
                state: std::mem::take(&mut x),
                action: out.sample.clone(),
                mean: out.mean,
                std: out.std,
                log_prob: out.log_prob,
                pred_x0: out.pred_x0,
            });
        }
        x = out.sample;
    }
    let final_sample = MotionVector::from_data(init_noise.frames(), init_noise.joints(), x)?;
    Ok(DenoiseTrajectory {
        steps,
        final_sample,
        init_noise: init_noise.clone(),
    })
}

/// Recomputes each recorded transition's log density of the stored action
/// under the CURRENT denoiser parameters. Equals the stored log-probs when
/// the parameters have not changed since recording.
pub fn replay_log_prob(
    denoiser: &Denoiser,
    traj: &DenoiseTrajectory,
    cond: &[f64],
    cfg: &SamplerConfig,
    sched: &NoiseSchedule,
) -> Result<Vec<f64>> {
    if traj.steps.is_empty() {
        return Err(Error::invalid(
            "replay_log_prob",
            "trajectory was recorded without transition tuples",
        ));
    }
    if cfg.eta == 0.0 {
        return Err(Error::DegenerateDensity);
    }
    if traj.steps.len() != cfg.steps {
        return Err(Error::dimension(
            "replay_log_prob steps",
            cfg.steps,
            traj.steps.len(),
        ));
    }
    traj.steps
        .iter()
        .map(|step| {
            let pred_x0 = denoiser.predict_x0(&step.state, step.t, cond)?;
            let coeff = transition_coefficients(sched, step.t, step.t_prev, cfg.eta)?;
            let mean = coeff.mean(&step.state, &pred_x0);
            Ok(gaussian_log_density(&step.action, &mean, coeff.sigma))
        })
        .collect()
}
