//! Contrastive training of the perceptual scorer with online hard negatives.
//!
//! The scorer learns to rank a ground-truth (motion, head-track) pair above
//! policy-generated motions paired with the same head track. Negatives are
//! mined online: for each head condition the current base policy runs the
//! full strided reverse process, and the clean-motion prediction extracted at
//! one of the last [`NEGATIVE_STEP_POOL`] denoising transitions (chosen
//! uniformly) is decoded and featurized. These are *hard* negatives — almost
//! plausible motions that genuinely follow the head track — so separating
//! them from ground truth forces the scorer to pick up on subtle artifacts of
//! the generator rather than gross condition mismatch. Scores compete through
//! an InfoNCE objective at temperature δ.

use super::joint::SkeletonFeatures;
use super::scorer::{PerceptualScorer, ScorerGradients};
use crate::diffusion::{
    sample_step, strided_timesteps, Denoiser, MotionVector, NoiseSchedule, SamplerConfig,
};
use crate::error::{Error, Result};
use crate::kinematics::{invariant_condition, HeadTrajectory, Skeleton};
use crate::numerics::{AdamState, Rng};
use crate::synthdata::{Dataset, Split};

/// Default InfoNCE temperature δ.
pub const DEFAULT_DELTA: f64 = 0.07;

/// Default number of online hard negatives contrasted against each positive.
pub const DEFAULT_NEGATIVES: usize = 15;

/// Hard negatives are extracted uniformly from the last this-many reverse
/// transitions of the sampling chain (clamped to the chain length).
pub const NEGATIVE_STEP_POOL: usize = 3;

/// InfoNCE loss over raw scores, with its exact gradient.
///
/// L = −log[ exp(s⁺/δ) / (exp(s⁺/δ) + Σᵢ exp(sᵢ⁻/δ)) ],
/// evaluated in the overflow-safe form L = m + ln(e^{−m} + Σᵢ e^{zᵢ−m}) with
/// zᵢ = (sᵢ⁻ − s⁺)/δ and m = max(0, maxᵢ zᵢ), which never exponentiates a
/// positive argument. Returns `(loss, ∂L/∂s⁺, ∂L/∂sᵢ⁻)`; the gradient is the
/// exact softmax form ∂L/∂s⁺ = −(1 − p⁺)/δ, ∂L/∂sᵢ⁻ = pᵢ⁻/δ, so the entries
/// always sum to zero.
pub fn infonce_from_scores(
    positive: f64,
    negatives: &[f64],
    delta: f64,
) -> Result<(f64, f64, Vec<f64>)> {
    if negatives.is_empty() {
        return Err(Error::invalid("infonce", "at least one negative required"));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(
            "infonce",
            format!("temperature must be finite and positive, got {delta}"),
        ));
    }
    if !positive.is_finite() || negatives.iter().any(|s| !s.is_finite()) {
        return Err(Error::non_finite("infonce scores"));
    }
    let z: Vec<f64> = negatives.iter().map(|s| (s - positive) / delta).collect();
    let m = z.iter().fold(0.0_f64, |a, &b| a.max(b));
    let exp_pos = (-m).exp();
    let exp_negs: Vec<f64> = z.iter().map(|zi| (zi - m).exp()).collect();
    let neg_sum = exp_negs.iter().sum::<f64>();
    let denom = exp_pos + neg_sum;
    // When the positive dominates (m = 0, exp_pos = 1) the direct form
    // ln(1 + Σe^{zᵢ}) loses the tiny loss to rounding; ln_1p keeps it exact.
    let loss = if m == 0.0 { neg_sum.ln_1p() } else { m + denom.ln() };
    let p_pos = exp_pos / denom;
    let d_pos = -(1.0 - p_pos) / delta;
    let d_negs = exp_negs.iter().map(|e| e / denom / delta).collect();
    Ok((loss, d_pos, d_negs))
}

/// InfoNCE loss of one positive (features, head) pair against a list of
/// negative pairs, scored by the given scorer. Forward only; see
/// [`infonce_loss_grads`] for the training path.
pub fn infonce_loss(
    scorer: &PerceptualScorer,
    positive: (&SkeletonFeatures, &HeadTrajectory),
    negatives: &[(&SkeletonFeatures, &HeadTrajectory)],
    delta: f64,
) -> Result<f64> {
    if negatives.is_empty() {
        return Err(Error::invalid("infonce", "at least one negative required"));
    }
    let s_pos = scorer.forward(positive.0, positive.1)?;
    let s_negs = negatives
        .iter()
        .map(|(f, h)| scorer.forward(f, h))
        .collect::<Result<Vec<f64>>>()?;
    let (loss, _, _) = infonce_from_scores(s_pos, &s_negs, delta)?;
    Ok(loss)
}

/// InfoNCE loss with parameter gradients accumulated into `grads`
/// (gradients of the loss, i.e. the direction for descent).
pub fn infonce_loss_grads(
    scorer: &PerceptualScorer,
    positive: (&SkeletonFeatures, &HeadTrajectory),
    negatives: &[(&SkeletonFeatures, &HeadTrajectory)],
    delta: f64,
    grads: &mut ScorerGradients,
) -> Result<f64> {
    if negatives.is_empty() {
        return Err(Error::invalid("infonce", "at least one negative required"));
    }
    let pos_cache = scorer.forward_cached(positive.0, positive.1)?;
    let neg_caches = negatives
        .iter()
        .map(|(f, h)| scorer.forward_cached(f, h))
        .collect::<Result<Vec<_>>>()?;
    let s_negs: Vec<f64> = neg_caches.iter().map(|c| c.score()).collect();
    let (loss, d_pos, d_negs) = infonce_from_scores(pos_cache.score(), &s_negs, delta)?;
    scorer.backward_accumulate(&pos_cache, d_pos, grads)?;
    for (cache, d) in neg_caches.iter().zip(&d_negs) {
        scorer.backward_accumulate(cache, *d, grads)?;
    }
    Ok(loss)
}

/// One online contrastive negative: the policy's clean-motion prediction
/// extracted near the end of a sampling chain, featurized and paired with the
/// head track that conditioned it.
#[derive(Debug, Clone)]
pub struct HardNegative {
    /// Skeleton features of the decoded clean-motion prediction.
    pub features: SkeletonFeatures,
    /// How many reverse transitions before the final one the prediction was
    /// taken from (0 = the final transition itself).
    pub steps_before_final: usize,
}

/// Generates one hard negative per head track.
///
/// For each head, a child generator (`rng.child_index(i)`) drives an
/// independent sampling chain conditioned on that head; the clean-motion
/// prediction at a uniformly chosen one of the last [`NEGATIVE_STEP_POOL`]
/// transitions (clamped to the chain length) is decoded at `fps` and
/// featurized against `skel`. The emitted negative is meant to be scored
/// against the SAME head trajectory that conditioned it.
pub fn make_hard_negatives(
    denoiser: &Denoiser,
    heads: &[HeadTrajectory],
    skel: &Skeleton,
    fps: f64,
    sched: &NoiseSchedule,
    cfg: &SamplerConfig,
    rng: &Rng,
) -> Result<Vec<HardNegative>> {
    heads
        .iter()
        .enumerate()
        .map(|(i, head)| {
            let mut child = rng.child_index(i as u64);
            hard_negative_for_head(denoiser, head, skel, fps, sched, cfg, &mut child, None)
        })
        .collect()
}

/// Single-head worker behind [`make_hard_negatives`]. `forced_steps_before_final`
/// overrides the uniform step choice (0 = final transition); `None` draws it
/// from `rng`. Exposed for tests that pin the extraction step.
#[allow(clippy::too_many_arguments)]
pub(crate) fn hard_negative_for_head(
    denoiser: &Denoiser,
    head: &HeadTrajectory,
    skel: &Skeleton,
    fps: f64,
    sched: &NoiseSchedule,
    cfg: &SamplerConfig,
    rng: &mut Rng,
    forced_steps_before_final: Option<usize>,
) -> Result<HardNegative> {
    cfg.validate(sched)?;
    let pool = NEGATIVE_STEP_POOL.min(cfg.steps);
    let chosen = match forced_steps_before_final {
        Some(k) if k >= pool => {
            return Err(Error::invalid(
                "hard negative",
                format!("forced step {k} outside pool of {pool}"),
            ));
        }
        Some(k) => k,
        None => rng.index(pool),
    };
    let cond = invariant_condition(head).flat();
    let frames = denoiser.frames();
    let joints = denoiser.joints();
    let mut init = MotionVector::zeros(frames, joints);
    rng.fill_normal(init.data_mut());

    let ts = strided_timesteps(sched.steps(), cfg.steps)?;
    let mut x = init.data().to_vec();
    let mut extracted = None;
    for k in (0..ts.len()).rev() {
        let t = ts[k];
        let t_prev = if k > 0 { ts[k - 1] } else { 0 };
        let out = sample_step(denoiser, &x, t, t_prev, &cond, cfg, sched, rng)?;
        if k == chosen {
            extracted = Some(out.pred_x0);
            break;
        }
        x = out.sample;
    }
    let pred_x0 = extracted.expect("chosen step lies inside the chain");
    let motion = MotionVector::from_data(frames, joints, pred_x0)?.decode(fps)?;
    Ok(HardNegative {
        features: SkeletonFeatures::from_motion(skel, &motion)?,
        steps_before_final: chosen,
    })
}

/// Hyperparameters of contrastive scorer training.
#[derive(Debug, Clone)]
pub struct ScorerTrainConfig {
    /// InfoNCE temperature δ.
    pub delta: f64,
    /// Number of online hard negatives per positive.
    pub negatives: usize,
    /// Sampler used to generate negatives (log-prob recording is unnecessary
    /// and must stay off so the η = 0 deterministic sampler remains legal).
    pub sampler: SamplerConfig,
}

impl Default for ScorerTrainConfig {
    fn default() -> Self {
        ScorerTrainConfig {
            delta: DEFAULT_DELTA,
            negatives: DEFAULT_NEGATIVES,
            sampler: SamplerConfig {
                record_logprobs: false,
                ..SamplerConfig::default()
            },
        }
    }
}

impl ScorerTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::invalid(
                "scorer training",
                format!("temperature must be finite and positive, got {}", self.delta),
            ));
        }
        if self.negatives == 0 {
            return Err(Error::invalid(
                "scorer training",
                "at least one negative per positive",
            ));
        }
        if self.sampler.record_logprobs {
            return Err(Error::invalid(
                "scorer training",
                "negative generation does not use log-probs; disable recording",
            ));
        }
        Ok(())
    }
}

/// Contrastive training loop. Each step draws one training record as the
/// positive (its ground-truth features with its own head track), mines
/// `cfg.negatives` online hard negatives from the heads of independently
/// drawn training records, and takes one optimizer step on the InfoNCE loss.
/// Returns the per-step loss curve; `steps = 0` leaves the scorer untouched.
#[allow(clippy::too_many_arguments)]
pub fn train_scorer(
    scorer: &mut PerceptualScorer,
    dataset: &Dataset,
    denoiser: &Denoiser,
    skel: &Skeleton,
    sched: &NoiseSchedule,
    steps: usize,
    cfg: &ScorerTrainConfig,
    rng: &Rng,
    opt: &mut AdamState,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let train_idx = dataset.indices_of(Split::Train);
    if train_idx.is_empty() {
        return Err(Error::invalid("scorer training", "empty training split"));
    }
    let records = dataset.records();
    let fps = records[train_idx[0]].motion.fps();
    let positives: Vec<SkeletonFeatures> = train_idx
        .iter()
        .map(|&i| SkeletonFeatures::from_motion(skel, &records[i].motion))
        .collect::<Result<_>>()?;

    let mut curve = Vec::with_capacity(steps);
    for step in 0..steps {
        let mut step_rng = rng.child_index(step as u64);
        let pos = step_rng.index(train_idx.len());
        let neg_heads: Vec<HeadTrajectory> = (0..cfg.negatives)
            .map(|_| records[train_idx[step_rng.index(train_idx.len())]].head.clone())
            .collect();
        let negatives = make_hard_negatives(
            denoiser,
            &neg_heads,
            skel,
            fps,
            sched,
            &cfg.sampler,
            &step_rng.child("negatives"),
        )?;
        let neg_pairs: Vec<(&SkeletonFeatures, &HeadTrajectory)> = negatives
            .iter()
            .zip(&neg_heads)
            .map(|(n, h)| (&n.features, h))
            .collect();
        let mut grads = ScorerGradients::zeros_like(scorer);
        let loss = infonce_loss_grads(
            scorer,
            (&positives[pos], &records[train_idx[pos]].head),
            &neg_pairs,
            cfg.delta,
            &mut grads,
        )?;
        let grad_tensors = grads.tensors();
        let mut params = scorer.params_mut();
        opt.step(&mut params, &grad_tensors)?;
        curve.push(loss);
    }
    Ok(curve)
}
