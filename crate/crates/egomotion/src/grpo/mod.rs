//! Group-relative policy optimization of the denoiser (under construction:
//! currently the condition-perturbation machinery).

mod perlin;

pub use perlin::{
    perlin_kernel, perturb_head, perturbed_condition, ConditionPerturbation, PerlinNoise1D,
    DEFAULT_PERLIN_FREQUENCY, DEFAULT_PERLIN_LAMBDA,
};
