//! 1-D lattice-gradient (Perlin) noise and the smooth condition perturbation
//! it drives.
//!
//! Rollout groups conditioned on an exact training trajectory collapse: the
//! denoiser has learned to ignore its noisy input there, so group members
//! coincide, rewards tie, and the normalized advantages vanish. Adding a
//! temporally smooth perturbation to the head translations moves the
//! condition slightly off the training manifold, which restores intra-group
//! spread while staying plausible enough that the rewards remain meaningful.

use nalgebra::Vector3;

use crate::kinematics::{invariant_condition, ConditionFeatures, HeadTrajectory, Se3};
use crate::numerics::Rng;

/// Default perturbation scale λ (meters of translation per unit noise).
pub const DEFAULT_PERLIN_LAMBDA: f64 = 0.1;
/// Default lattice frequency in cells per frame (lattice spacing = 10 frames).
pub const DEFAULT_PERLIN_FREQUENCY: f64 = 0.1;

/// Quintic fade 6f⁵ − 15f⁴ + 10f³: zero slope at both lattice ends, so the
/// noise is C¹-continuous across cells.
fn fade(f: f64) -> f64 {
    f * f * f * (f * (6.0 * f - 15.0) + 10.0)
}

/// Core 1-D gradient-noise kernel on one cell: gradients g_i, g_next at the
/// cell ends, fractional coordinate f ∈ [0, 1).
pub fn perlin_kernel(g_i: f64, g_next: f64, f: f64) -> f64 {
    let a = g_i * f;
    let b = g_next * (f - 1.0);
    let w = fade(f);
    a + w * (b - a)
}

/// Infinite 1-D gradient noise stream: a uniform [−1, 1] gradient sits at
/// every integer lattice point (derived on demand from a counter-based RNG,
/// so lookup is random-access and allocation-free), values are exactly zero
/// at lattice points, and |value| ≤ 1 everywhere.
#[derive(Debug, Clone)]
pub struct PerlinNoise1D {
    lattice: Rng,
    frequency: f64,
}

impl PerlinNoise1D {
    /// `rng` seeds the lattice; `frequency` is in lattice cells per frame.
    pub fn new(rng: Rng, frequency: f64) -> Self {
        assert!(frequency > 0.0 && frequency.is_finite());
        PerlinNoise1D { lattice: rng, frequency }
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    /// Gradient at integer lattice point `i`.
    fn gradient(&self, i: i64) -> f64 {
        self.lattice.child_index(i as u64).uniform_in(-1.0, 1.0)
    }

    /// Noise value at a position in lattice-cell coordinates.
    pub fn sample_at_cell(&self, u: f64) -> f64 {
        let i = u.floor();
        let f = u - i;
        let i = i as i64;
        perlin_kernel(self.gradient(i), self.gradient(i + 1), f)
    }

    /// Noise value at a (fractional) frame index: cell position = t · freq.
    pub fn sample_frame(&self, t: f64) -> f64 {
        self.sample_at_cell(t * self.frequency)
    }
}

/// One independent noise stream per translation axis.
#[derive(Debug, Clone)]
pub struct ConditionPerturbation {
    axes: [PerlinNoise1D; 3],
}

impl ConditionPerturbation {
    pub fn new(rng: &Rng, frequency: f64) -> Self {
        let axes = ["x", "y", "z"].map(|axis| PerlinNoise1D::new(rng.child(axis), frequency));
        ConditionPerturbation { axes }
    }

    pub fn axis(&self, k: usize) -> &PerlinNoise1D {
        &self.axes[k]
    }

    /// The translation offset applied at frame `t` (before the λ scale).
    pub fn offset(&self, t: f64) -> Vector3<f64> {
        Vector3::new(
            self.axes[0].sample_frame(t),
            self.axes[1].sample_frame(t),
            self.axes[2].sample_frame(t),
        )
    }
}

/// Adds the smooth noise to the head translations, leaving rotations intact:
/// τ_t ← τ_t + λ·P(t). λ = 0 returns the input unchanged.
pub fn perturb_head(h: &HeadTrajectory, lambda: f64, noise: &ConditionPerturbation) -> HeadTrajectory {
    assert!(lambda >= 0.0 && lambda.is_finite(), "lambda must be >= 0");
    if lambda == 0.0 {
        return h.clone();
    }
    let poses = h
        .poses
        .iter()
        .enumerate()
        .map(|(t, p)| {
            let delta = noise.offset(t as f64) * lambda;
            Se3::new(p.rotation, p.translation + delta)
        })
        .collect();
    HeadTrajectory { poses }
}

/// The perturbed-and-canonicalized condition the policy is actually fed:
/// g(H̃) where H̃ carries the λ-scaled noise on its translations.
pub fn perturbed_condition(
    h: &HeadTrajectory,
    lambda: f64,
    noise: &ConditionPerturbation,
) -> ConditionFeatures {
    invariant_condition(&perturb_head(h, lambda, noise))
}
