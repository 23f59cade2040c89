//! Conditional denoising diffusion over flattened motion vectors.
//!
//! The pieces, in pipeline order:
//! - [`NoiseSchedule`] — linear β variance schedule with cached ᾱ products;
//! - [`MotionVector`] — a motion sequence flattened into the diffusion state
//!   (quaternions renormalized only at decode time, keeping every transition
//!   an exact Gaussian);
//! - [`Denoiser`] — conditional MLP predicting the clean sample x₀ from
//!   `[x_t ‖ timestep embedding ‖ condition features]`, pre-trained with the
//!   denoising loss ([`pretrain_step`]);
//! - the DDIM-η sampler ([`sample_trajectory`]) — reverse transitions with
//!   closed-form Gaussian densities recorded per step, which is what makes
//!   the sampling chain usable as a multi-step decision process for
//!   group-relative policy optimization ([`replay_log_prob`] recomputes the
//!   densities under updated parameters for importance ratios).

mod denoiser;
mod sampler;
mod schedule;
mod vector;

pub use denoiser::{
    forward_diffuse, pretrain_loss_grads, pretrain_step, timestep_embedding, ConditionStats,
    Denoiser, NoiseWeighting, PretrainItem, DEFAULT_DENOISER_HIDDEN, TIMESTEP_EMBED_DIM,
};
pub use sampler::{
    gaussian_log_density, replay_log_prob, sample_step, sample_trajectory, strided_timesteps,
    transition_coefficients, DenoiseStep, DenoiseTrajectory, SamplerConfig, StepOutcome,
    TransitionCoefficients, DEFAULT_ETA, DEFAULT_SAMPLE_STEPS, FINAL_SIGMA_FLOOR,
};
pub use schedule::{
    NoiseSchedule, DEFAULT_BETA_MAX, DEFAULT_BETA_MIN, DEFAULT_DIFFUSION_STEPS,
};
pub use vector::{motion_dim, MotionVector, ROOT_DIM};
