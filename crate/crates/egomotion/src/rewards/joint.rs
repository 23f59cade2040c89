//! Exponential joint rewards over forward-kinematics features.
//!
//! Each component maps a mean per-frame error e to exp(−ω·e), so a perfect
//! prediction scores exactly 1, errors decay the score smoothly toward 0,
//! and the weight ω sets how quickly. Positions are compared twice: raw
//! (sensitive to global placement) and after a per-frame least-squares
//! similarity alignment (shape only), mirroring the with/without-alignment
//! pairing used in the evaluation metrics.

use nalgebra::Vector3;

use super::umeyama::umeyama_align;
use crate::error::{Error, Result};
use crate::kinematics::{
    forward_kinematics, rotation_entries, MotionSequence, Skeleton,
};
use crate::metrics::velocities_from_positions;

/// Weights for the five reward components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights {
    /// Scales the perceptual score inside the visual reward exponent.
    pub omega_vis: f64,
    /// Rotation error weight.
    pub omega_rot: f64,
    /// Raw global-position error weight.
    pub omega_pos: f64,
    /// Similarity-aligned position error weight.
    pub omega_pos_aligned: f64,
    /// Velocity error weight.
    pub omega_vel: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            omega_vis: 1.0,
            omega_rot: 1.0,
            omega_pos: 1.0,
            omega_pos_aligned: 0.5,
            omega_vel: 1.0,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.omega_vis,
            self.omega_rot,
            self.omega_pos,
            self.omega_pos_aligned,
            self.omega_vel,
        ];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(
                "RewardWeights",
                "weights must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// All reward components of one sample, plus their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown {
    pub r_vis: f64,
    pub r_rot: f64,
    pub r_pos: f64,
    pub r_pos_aligned: f64,
    pub r_vel: f64,
    pub r_total: f64,
}

impl RewardBreakdown {
    /// Component values in a fixed order (visual, rotation, position,
    /// aligned position, velocity) — the order used for per-component
    /// advantage normalization.
    pub fn components(&self) -> [f64; 5] {
        [
            self.r_vis,
            self.r_rot,
            self.r_pos,
            self.r_pos_aligned,
            self.r_vel,
        ]
    }

    /// Number of reward components.
    pub const COMPONENTS: usize = 5;
}

/// Per-frame per-joint pose features: unit quaternion (w, x, y, z) followed
/// by the global joint position, the 7-D descriptor consumed by the
/// perceptual scorer.
#[derive(Debug, Clone)]
pub struct SkeletonFeatures {
    /// `[frame][joint] -> [qw, qx, qy, qz, px, py, pz]`
    data: Vec<Vec<[f64; 7]>>,
}

/// Feature width per joint: quaternion (4) + global position (3).
pub const SKELETON_FEATURE_DIM: usize = 7;

impl SkeletonFeatures {
    /// Runs forward kinematics and packs global rotations and positions.
    pub fn from_motion(skel: &Skeleton, motion: &MotionSequence) -> Result<SkeletonFeatures> {
        let fk = forward_kinematics(skel, motion)?;
        let data = fk
            .rotations
            .iter()
            .zip(&fk.positions)
            .map(|(rots, poss)| {
                rots.iter()
                    .zip(poss)
                    .map(|(q, p)| {
                        [q.w, q.i, q.j, q.k, p.x, p.y, p.z]
                    })
                    .collect()
            })
            .collect();
        Ok(SkeletonFeatures { data })
    }

    /// Wraps raw per-frame per-joint 7-vectors (e.g. synthetic inputs in
    /// tests). Frames must be non-empty and agree on the joint count.
    pub fn from_raw(data: Vec<Vec<[f64; 7]>>) -> Result<SkeletonFeatures> {
        let joints = data.first().map_or(0, Vec::len);
        if data.is_empty() || joints == 0 || data.iter().any(|f| f.len() != joints) {
            return Err(Error::invalid(
                "SkeletonFeatures::from_raw",
                "need >= 1 frame and a uniform non-zero joint count",
            ));
        }
        Ok(SkeletonFeatures { data })
    }

    pub fn frames(&self) -> usize {
        self.data.len()
    }

    pub fn joints(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn frame(&self, t: usize) -> &[[f64; 7]] {
        &self.data[t]
    }
}

fn check_pair(pred: &MotionSequence, gt: &MotionSequence) -> Result<()> {
    if pred.frames() != gt.frames() {
        return Err(Error::dimension("joint_rewards frames", gt.frames(), pred.frames()));
    }
    if pred.joint_count() != gt.joint_count() {
        return Err(Error::dimension(
            "joint_rewards joints",
            gt.joint_count(),
            pred.joint_count(),
        ));
    }
    Ok(())
}

fn mean_frame_position_error(pred: &[Vec<Vector3<f64>>], gt: &[Vec<Vector3<f64>>]) -> f64 {
    let mut sum = 0.0;
    for (pf, gf) in pred.iter().zip(gt) {
        let frame_mean: f64 =
            pf.iter().zip(gf).map(|(p, g)| (p - g).norm()).sum::<f64>() / pf.len() as f64;
        sum += frame_mean;
    }
    sum / pred.len() as f64
}

/// The four joint-reward components `(r_rot, r_pos, r_pos_aligned, r_vel)`.
///
/// - `r_rot`: exp(−ω_rot · mean_t mean_j ‖R̂ − R‖₁) over the 9 entries of
///   each local rotation matrix;
/// - `r_pos`: exp(−ω_pos · mean_t mean_j ‖p̂ − p‖₂) on global joint positions;
/// - `r_pos_aligned`: the same after a per-frame least-squares similarity
///   alignment of the predicted joint cloud onto the reference;
/// - `r_vel`: exp(−ω_vel · mean_t mean_j ‖v̂ − v‖₂) with per-frame position
///   differences as velocities (first frame copies the second; no time
///   rescaling).
pub fn joint_rewards(
    pred: &MotionSequence,
    gt: &MotionSequence,
    skel: &Skeleton,
    w: &RewardWeights,
) -> Result<(f64, f64, f64, f64)> {
    w.validate()?;
    check_pair(pred, gt)?;

    // Rotation error on local joint rotations, L1 over matrix entries.
    let mut rot_sum = 0.0;
    for (pf, gf) in pred.local_rot().iter().zip(gt.local_rot()) {
        let frame_mean: f64 = pf
            .iter()
            .zip(gf)
            .map(|(p, g)| {
                let (rp, rg) = (rotation_entries(p), rotation_entries(g));
                rp.iter().zip(&rg).map(|(a, b)| (a - b).abs()).sum::<f64>()
            })
            .sum::<f64>()
            / pf.len() as f64;
        rot_sum += frame_mean;
    }
    let rot_err = rot_sum / pred.frames() as f64;

    let fk_pred = forward_kinematics(skel, pred)?;
    let fk_gt = forward_kinematics(skel, gt)?;

    let pos_err = mean_frame_position_error(&fk_pred.positions, &fk_gt.positions);

    let mut aligned_sum = 0.0;
    for (pf, gf) in fk_pred.positions.iter().zip(&fk_gt.positions) {
        let alignment = umeyama_align(pf, gf)?;
        let frame_mean: f64 = alignment
            .aligned
            .iter()
            .zip(gf)
            .map(|(p, g)| (p - g).norm())
            .sum::<f64>()
            / gf.len() as f64;
        aligned_sum += frame_mean;
    }
    let aligned_err = aligned_sum / pred.frames() as f64;

    let vel_pred = velocities_from_positions(&fk_pred.positions, 1.0);
    let vel_gt = velocities_from_positions(&fk_gt.positions, 1.0);
    let vel_err = mean_frame_position_error(&vel_pred, &vel_gt);

    Ok((
        (-w.omega_rot * rot_err).exp(),
        (-w.omega_pos * pos_err).exp(),
        (-w.omega_pos_aligned * aligned_err).exp(),
        (-w.omega_vel * vel_err).exp(),
    ))
}

/// Visual reward exp(ω_vis · s) from a perceptual score s ∈ [0, 1].
pub fn visual_reward(score: f64, w: &RewardWeights) -> Result<f64> {
    w.validate()?;
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::invalid(
            "visual_reward",
            format!("score must lie in [0, 1], got {score}"),
        ));
    }
    Ok((w.omega_vis * score).exp())
}
