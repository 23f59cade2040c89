//! Hybrid reward mechanism: exponential joint rewards computed against a
//! reference motion, plus a learned perceptual score turned into a visual
//! reward. Each rollout receives a [`RewardBreakdown`] whose components are
//! normalized independently into advantages by the policy-gradient stage.

mod joint;
mod scorer;
mod trainer;
mod umeyama;

pub use joint::{
    joint_rewards, visual_reward, RewardBreakdown, RewardWeights, SkeletonFeatures,
    SKELETON_FEATURE_DIM,
};
pub use scorer::{
    scorer_forward, total_reward, PerceptualScorer, ScorerCache, ScorerGradients, SCORER_BLOCKS,
    SCORER_LATENT,
};
pub use trainer::{
    infonce_from_scores, infonce_loss, infonce_loss_grads, make_hard_negatives, train_scorer,
    HardNegative, ScorerTrainConfig, DEFAULT_DELTA, DEFAULT_NEGATIVES, NEGATIVE_STEP_POOL,
};
pub use umeyama::{mean_residual, umeyama_align, Alignment};
