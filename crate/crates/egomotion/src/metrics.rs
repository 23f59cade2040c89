//! Kinematic evaluation suite: position, dynamics, and plausibility errors,
//! group diversity, and scorer ranking accuracy.
//!
//! Position-family metrics report millimeters (velocities mm/s); jitter,
//! ground penetration, and foot skating stay in meter-based units. All
//! functions are pure; the `*_from_positions` variants operate on raw
//! per-frame per-joint positions so closed-form oracles can drive them
//! directly, and the motion-level wrappers run forward kinematics first.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, rotation_entries, MotionSequence, Skeleton};
use crate::rewards::umeyama_align;

/// Foot height (meters) below which a frame counts as ground contact.
pub const DEFAULT_CONTACT_THRESHOLD: f64 = 0.02;

/// One row of the evaluation table. Units: mpjpe/pa_mpjpe mm, mpjve mm/s,
/// mpjre unitless (L1 over rotation-matrix entries), jitter m/s³, gp m, fs m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub mpjpe: f64,
    pub pa_mpjpe: f64,
    pub mpjve: f64,
    pub mpjre: f64,
    pub jitter: f64,
    pub gp: f64,
    pub fs: f64,
}

impl MetricRow {
    pub const CSV_HEADER: &'static str = "MPJPE,PA-MPJPE,MPJVE,MPJRE,Jitter,GP,FS";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.mpjpe, self.pa_mpjpe, self.mpjve, self.mpjre, self.jitter, self.gp, self.fs
        )
    }

    pub fn is_finite(&self) -> bool {
        [
            self.mpjpe,
            self.pa_mpjpe,
            self.mpjve,
            self.mpjre,
            self.jitter,
            self.gp,
            self.fs,
        ]
        .iter()
        .all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Aggregate evaluation over a set of sequences: the mean row plus the
/// per-sequence breakdown it was averaged from.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub mean: MetricRow,
    pub per_sequence: Vec<MetricRow>,
}

impl EvalReport {
    pub fn from_rows(per_sequence: Vec<MetricRow>) -> Result<Self> {
        if per_sequence.is_empty() {
            return Err(Error::invalid("EvalReport", "no sequences"));
        }
        let n = per_sequence.len() as f64;
        let mut sum = [0.0; 7];
        for r in &per_sequence {
            for (s, v) in sum.iter_mut().zip([
                r.mpjpe, r.pa_mpjpe, r.mpjve, r.mpjre, r.jitter, r.gp, r.fs,
            ]) {
                *s += v;
            }
        }
        let mean = MetricRow {
            mpjpe: sum[0] / n,
            pa_mpjpe: sum[1] / n,
            mpjve: sum[2] / n,
            mpjre: sum[3] / n,
            jitter: sum[4] / n,
            gp: sum[5] / n,
            fs: sum[6] / n,
        };
        Ok(EvalReport { mean, per_sequence })
    }

    /// CSV with the mean row first, then one row per sequence.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(MetricRow::CSV_HEADER);
        out.push('\n');
        out.push_str(&self.mean.csv_row());
        out.push('\n');
        for r in &self.per_sequence {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

fn check_same_shape(pred: &[Vec<Vector3<f64>>], gt: &[Vec<Vector3<f64>>]) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::dimension("metric frames", gt.len(), pred.len()));
    }
    for (p, g) in pred.iter().zip(gt) {
        if p.len() != g.len() {
            return Err(Error::dimension("metric joints", g.len(), p.len()));
        }
    }
    Ok(())
}

/// Mean per-joint position error in meters.
pub fn mpjpe_from_positions(pred: &[Vec<Vector3<f64>>], gt: &[Vec<Vector3<f64>>]) -> Result<f64> {
    check_same_shape(pred, gt)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (pf, gf) in pred.iter().zip(gt) {
        for (p, g) in pf.iter().zip(gf) {
            sum += (p - g).norm();
            count += 1;
        }
    }
    Ok(sum / count as f64)
}

/// Mean per-joint position error after per-frame similarity alignment of the
/// prediction onto the ground truth, in meters.
pub fn pa_mpjpe_from_positions(
    pred: &[Vec<Vector3<f64>>],
    gt: &[Vec<Vector3<f64>>],
) -> Result<f64> {
    check_same_shape(pred, gt)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (pf, gf) in pred.iter().zip(gt) {
        let aligned = umeyama_align(pf, gf)?.aligned;
        for (p, g) in aligned.iter().zip(gf) {
            sum += (p - g).norm();
            count += 1;
        }
    }
    Ok(sum / count as f64)
}

/// Per-frame velocities from position differences: v_t = (p_t − p_{t−1})·scale
/// for t ≥ 1, with the first frame copying the second so every frame has a
/// velocity sample. `scale` is fps for m/s (metrics) or 1 for per-frame units
/// (rewards); both sides share this one convention.
pub fn velocities_from_positions(
    positions: &[Vec<Vector3<f64>>],
    scale: f64,
) -> Vec<Vec<Vector3<f64>>> {
    assert!(positions.len() >= 2, "velocities need at least 2 frames");
    let mut vel = Vec::with_capacity(positions.len());
    for t in 1..positions.len() {
        let row: Vec<Vector3<f64>> = positions[t]
            .iter()
            .zip(&positions[t - 1])
            .map(|(a, b)| (a - b) * scale)
            .collect();
        vel.push(row);
    }
    vel.insert(0, vel[0].clone());
    vel
}

/// Mean jerk magnitude of a position track: third forward differences scaled
/// by fps³, averaged over the T−3 interior samples and all joints. Depends on
/// the prediction only.
pub fn jitter_from_positions(positions: &[Vec<Vector3<f64>>], fps: f64) -> Result<f64> {
    let t_total = positions.len();
    if t_total < 4 {
        return Err(Error::invalid(
            "jitter",
            format!("third differences need at least 4 frames, got {t_total}"),
        ));
    }
    let fps3 = fps * fps * fps;
    let mut sum = 0.0;
    let mut count = 0usize;
    for t in 0..t_total - 3 {
        for j in 0..positions[t].len() {
            let d3 = positions[t + 3][j] - 3.0 * positions[t + 2][j] + 3.0 * positions[t + 1][j]
                - positions[t][j];
            sum += (d3 * fps3).norm();
            count += 1;
        }
    }
    Ok(sum / count as f64)
}

/// Ground penetration: accumulated below-floor depth Σ max(0, −z) over every
/// frame and joint, meters.
pub fn ground_penetration_from_positions(positions: &[Vec<Vector3<f64>>]) -> f64 {
    positions
        .iter()
        .flatten()
        .map(|p| (-p.z).max(0.0))
        .sum()
}

/// Foot skating: horizontal displacement of each foot accumulated over the
/// frames where that foot's height is below `threshold`, meters.
pub fn foot_skating_from_positions(
    positions: &[Vec<Vector3<f64>>],
    foot_indices: &[usize],
    threshold: f64,
) -> f64 {
    let mut fs = 0.0;
    for t in 1..positions.len() {
        for &j in foot_indices {
            if positions[t][j].z < threshold {
                let d = positions[t][j] - positions[t - 1][j];
                fs += (d.x * d.x + d.y * d.y).sqrt();
            }
        }
    }
    fs
}

/// MPJPE and PA-MPJPE (both mm) between two motions under one skeleton.
pub fn position_metrics(
    pred: &MotionSequence,
    gt: &MotionSequence,
    skel: &Skeleton,
) -> Result<(f64, f64)> {
    let fk_p = forward_kinematics(skel, pred)?;
    let fk_g = forward_kinematics(skel, gt)?;
    Ok((
        1000.0 * mpjpe_from_positions(&fk_p.positions, &fk_g.positions)?,
        1000.0 * pa_mpjpe_from_positions(&fk_p.positions, &fk_g.positions)?,
    ))
}

/// MPJVE (mm/s), MPJRE (unitless L1 over local rotation-matrix entries), and
/// jitter of the prediction (m/s³).
pub fn dynamics_metrics(
    pred: &MotionSequence,
    gt: &MotionSequence,
    skel: &Skeleton,
) -> Result<(f64, f64, f64)> {
    if (pred.fps() - gt.fps()).abs() > 1e-12 {
        return Err(Error::invalid(
            "dynamics_metrics",
            format!("fps mismatch: {} vs {}", pred.fps(), gt.fps()),
        ));
    }
    let fk_p = forward_kinematics(skel, pred)?;
    let fk_g = forward_kinematics(skel, gt)?;
    let vel_p = velocities_from_positions(&fk_p.positions, pred.fps());
    let vel_g = velocities_from_positions(&fk_g.positions, gt.fps());
    let mpjve = 1000.0 * mpjpe_from_positions(&vel_p, &vel_g)?;
    let mpjre = mpjre_l1(pred, gt)?;
    let jitter = jitter_from_positions(&fk_p.positions, pred.fps())?;
    Ok((mpjve, mpjre, jitter))
}

fn check_rotation_shapes(pred: &MotionSequence, gt: &MotionSequence) -> Result<()> {
    if pred.frames() != gt.frames() {
        return Err(Error::dimension("rotation frames", gt.frames(), pred.frames()));
    }
    if pred.joint_count() != gt.joint_count() {
        return Err(Error::dimension(
            "rotation joints",
            gt.joint_count(),
            pred.joint_count(),
        ));
    }
    Ok(())
}

/// Mean L1 distance between local joint rotations as 3×3 matrix entries,
/// averaged over frames and joints (the root transform is not a joint and is
/// scored by the position metrics instead).
pub fn mpjre_l1(pred: &MotionSequence, gt: &MotionSequence) -> Result<f64> {
    check_rotation_shapes(pred, gt)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (pf, gf) in pred.local_rot().iter().zip(gt.local_rot()) {
        for (p, g) in pf.iter().zip(gf) {
            let (rp, rg) = (rotation_entries(p), rotation_entries(g));
            sum += rp.iter().zip(&rg).map(|(a, b)| (a - b).abs()).sum::<f64>();
            count += 1;
        }
    }
    Ok(sum / count as f64)
}

/// Alternate rotation error: mean geodesic angle (radians) between local
/// joint rotations.
pub fn mpjre_geodesic(pred: &MotionSequence, gt: &MotionSequence) -> Result<f64> {
    check_rotation_shapes(pred, gt)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (pf, gf) in pred.local_rot().iter().zip(gt.local_rot()) {
        for (p, g) in pf.iter().zip(gf) {
            sum += p.angle_to(g);
            count += 1;
        }
    }
    Ok(sum / count as f64)
}

/// Ground penetration (m) and foot skating (m) of a prediction.
pub fn plausibility_metrics(
    pred: &MotionSequence,
    skel: &Skeleton,
    contact_threshold: f64,
) -> Result<(f64, f64)> {
    if contact_threshold <= 0.0 {
        return Err(Error::invalid("plausibility", "threshold must be positive"));
    }
    let fk = forward_kinematics(skel, pred)?;
    let gp = ground_penetration_from_positions(&fk.positions);
    let fs = foot_skating_from_positions(&fk.positions, &skel.foot_indices(), contact_threshold);
    Ok((gp, fs))
}

/// Full metric row for one predicted/ground-truth pair.
pub fn evaluate_pair(
    pred: &MotionSequence,
    gt: &MotionSequence,
    skel: &Skeleton,
    contact_threshold: f64,
) -> Result<MetricRow> {
    let (mpjpe, pa_mpjpe) = position_metrics(pred, gt, skel)?;
    let (mpjve, mpjre, jitter) = dynamics_metrics(pred, gt, skel)?;
    let (gp, fs) = plausibility_metrics(pred, skel, contact_threshold)?;
    Ok(MetricRow {
        mpjpe,
        pa_mpjpe,
        mpjve,
        mpjre,
        jitter,
        gp,
        fs,
    })
}

/// Average pairwise Euclidean distance over a group's flattened motions:
/// (1/(G(G−1))) Σ_{i≠j} ‖M_i − M_j‖₂.
pub fn diversity(group: &[crate::diffusion::MotionVector]) -> Result<f64> {
    let g = group.len();
    if g < 2 {
        return Err(Error::invalid("diversity", "need at least 2 samples"));
    }
    for m in &group[1..] {
        if m.dim() != group[0].dim() {
            return Err(Error::dimension("diversity member", group[0].dim(), m.dim()));
        }
    }
    let mut sum = 0.0;
    for i in 0..g {
        for j in (i + 1)..g {
            let d: f64 = group[i]
                .data()
                .iter()
                .zip(group[j].data())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            sum += 2.0 * d.sqrt(); // both ordered pairs (i,j) and (j,i)
        }
    }
    Ok(sum / (g * (g - 1)) as f64)
}

/// Ranking outcome over (gt score, generated score) pairs: accuracy is the
/// fraction with s_gt strictly greater; ties count as wrong.
pub fn accuracy_from_scores(pairs: &[(f64, f64)]) -> Result<(f64, usize)> {
    if pairs.is_empty() {
        return Err(Error::invalid("scorer accuracy", "empty pool"));
    }
    let correct = pairs.iter().filter(|(gt, gen)| gt > gen).count();
    Ok((
        correct as f64 / pairs.len() as f64,
        pairs.len() - correct,
    ))
}

/// Scores each (ground-truth features, generated features, shared head track)
/// triple with the scorer and reports ranking accuracy: the fraction of
/// triples where ground truth strictly outscores the generated motion (ties
/// count as wrong), plus the number ranked wrongly.
pub fn scorer_accuracy(
    scorer: &crate::rewards::PerceptualScorer,
    pool: &[(
        crate::rewards::SkeletonFeatures,
        crate::rewards::SkeletonFeatures,
        crate::kinematics::HeadTrajectory,
    )],
) -> Result<(f64, usize)> {
    let pairs = pool
        .iter()
        .map(|(gt, generated, head)| {
            Ok((scorer.forward(gt, head)?, scorer.forward(generated, head)?))
        })
        .collect::<Result<Vec<_>>>()?;
    accuracy_from_scores(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::MotionVector;
    use crate::kinematics::Se3;
    use crate::numerics::Rng;
    use crate::synthdata::{generate_walk, sample_gait_params, GaitParams};
    use nalgebra::UnitQuaternion;

    fn walk(seed: u64, frames: usize) -> (Skeleton, MotionSequence) {
        let skel = Skeleton::desk_default();
        let mut rng = Rng::new(seed).child("metrics-walk");
        let params = sample_gait_params(&mut rng);
        let motion = generate_walk(&skel, &params, frames, 30.0).unwrap();
        (skel, motion)
    }

    fn shift_root(motion: &MotionSequence, delta: Vector3<f64>) -> MotionSequence {
        let root = motion
            .root()
            .iter()
            .map(|p| Se3::new(p.rotation, p.translation + delta))
            .collect();
        MotionSequence::new(motion.fps(), root, motion.local_rot().to_vec()).unwrap()
    }

    #[test]
    fn identical_motions_score_zero_errors() {
        let (skel, m) = walk(1, 8);
        let row = evaluate_pair(&m, &m, &skel, DEFAULT_CONTACT_THRESHOLD).unwrap();
        assert_eq!(row.mpjpe, 0.0);
        assert!(row.pa_mpjpe < 1e-9);
        assert_eq!(row.mpjve, 0.0);
        assert_eq!(row.mpjre, 0.0);
        assert!(row.is_finite());
        assert_eq!(mpjre_geodesic(&m, &m).unwrap(), 0.0);
    }

    #[test]
    fn uniform_offset_gives_exact_mpjpe_and_vanishing_pa() {
        let (skel, gt) = walk(2, 8);
        let pred = shift_root(&gt, Vector3::new(0.1, 0.0, 0.0));
        let (mpjpe, pa) = position_metrics(&pred, &gt, &skel).unwrap();
        assert!((mpjpe - 100.0).abs() < 1e-9, "mpjpe {mpjpe} mm");
        assert!(pa < 1e-6, "pa_mpjpe {pa} mm");
    }

    #[test]
    fn scaling_about_centroid_is_removed_by_alignment() {
        let mut rng = Rng::new(3).child("scale");
        let gt: Vec<Vec<Vector3<f64>>> = (0..5)
            .map(|_| {
                (0..8)
                    .map(|_| Vector3::new(rng.normal(), rng.normal(), rng.normal()))
                    .collect()
            })
            .collect();
        let pred: Vec<Vec<Vector3<f64>>> = gt
            .iter()
            .map(|frame| {
                let c = frame.iter().sum::<Vector3<f64>>() / frame.len() as f64;
                frame.iter().map(|p| c + 1.1 * (p - c)).collect()
            })
            .collect();
        let mpjpe = mpjpe_from_positions(&pred, &gt).unwrap();
        let pa = pa_mpjpe_from_positions(&pred, &gt).unwrap();
        assert!(mpjpe > 1e-3);
        assert!(pa < 1e-9, "pa {pa} m");
    }

    #[test]
    fn pa_never_exceeds_mpjpe_on_random_inputs() {
        let mut rng = Rng::new(4).child("pa-bound");
        for case in 0..200 {
            let mut r = rng.child_index(case);
            let frame = |r: &mut Rng| -> Vec<Vector3<f64>> {
                (0..6)
                    .map(|_| Vector3::new(r.normal(), r.normal(), r.normal()))
                    .collect()
            };
            let pred = vec![frame(&mut r), frame(&mut r)];
            let gt = vec![frame(&mut r), frame(&mut r)];
            let mpjpe = mpjpe_from_positions(&pred, &gt).unwrap();
            let pa = pa_mpjpe_from_positions(&pred, &gt).unwrap();
            assert!(pa <= mpjpe + 1e-9, "case {case}: pa {pa} > mpjpe {mpjpe}");
        }
    }

    #[test]
    fn velocity_metric_sees_constant_drift_exactly() {
        let (skel, gt) = walk(5, 8);
        // Drift growing 1 mm per frame adds a constant 1 mm/frame velocity
        // error: MPJVE = 0.001 · fps m/s = 30 mm/s.
        let fps = gt.fps();
        let root = gt
            .root()
            .iter()
            .enumerate()
            .map(|(t, p)| {
                Se3::new(
                    p.rotation,
                    p.translation + Vector3::new(0.001 * t as f64, 0.0, 0.0),
                )
            })
            .collect();
        let pred = MotionSequence::new(fps, root, gt.local_rot().to_vec()).unwrap();
        let (mpjve, mpjre, _) = dynamics_metrics(&pred, &gt, &skel).unwrap();
        assert!((mpjve - 30.0).abs() < 1e-9, "mpjve {mpjve}");
        assert_eq!(mpjre, 0.0);
    }

    #[test]
    fn cubic_track_has_jerk_six() {
        // p(t) = t³ on one axis, unit frame interval: Δ³p = 6 everywhere.
        let positions: Vec<Vec<Vector3<f64>>> = (0..7)
            .map(|t| vec![Vector3::new((t as f64).powi(3), 0.0, 0.0)])
            .collect();
        let j = jitter_from_positions(&positions, 1.0).unwrap();
        assert!((j - 6.0).abs() < 1e-9, "jitter {j}");
        // Straight-line motion has zero third difference (0.25 per frame is
        // dyadic, so the cancellation is exact in floating point).
        let line: Vec<Vec<Vector3<f64>>> = (0..7)
            .map(|t| vec![Vector3::new(t as f64 * 0.25, -1.0, 2.0)])
            .collect();
        assert_eq!(jitter_from_positions(&line, 30.0).unwrap(), 0.0);
        assert!(jitter_from_positions(&positions[..3], 1.0).is_err());
    }

    #[test]
    fn ground_penetration_sums_depths() {
        let mut positions: Vec<Vec<Vector3<f64>>> =
            (0..4).map(|_| vec![Vector3::new(0.0, 0.0, 0.5); 2]).collect();
        assert_eq!(ground_penetration_from_positions(&positions), 0.0);
        positions[2][1].z = -0.05;
        let gp = ground_penetration_from_positions(&positions);
        assert!((gp - 0.05).abs() < 1e-12, "gp {gp}");
    }

    #[test]
    fn foot_skating_accumulates_contact_sliding() {
        // One foot (joint 0) at height 0.01 sliding 0.02 m per frame for five
        // transitions; the other joint stays high so it never counts.
        let positions: Vec<Vec<Vector3<f64>>> = (0..6)
            .map(|t| {
                vec![
                    Vector3::new(0.02 * t as f64, 0.0, 0.01),
                    Vector3::new(0.0, 0.0, 1.0),
                ]
            })
            .collect();
        let fs = foot_skating_from_positions(&positions, &[0, 1], 0.02);
        assert!((fs - 0.10).abs() < 1e-12, "fs {fs}");
        // Raising the foot above the threshold removes the accumulation.
        let fs_air = foot_skating_from_positions(&positions, &[1], 0.02);
        assert_eq!(fs_air, 0.0);
    }

    #[test]
    fn generated_walks_have_clean_plausibility() {
        let skel = Skeleton::desk_default();
        let m = generate_walk(&skel, &GaitParams::default(), 12, 30.0).unwrap();
        let (gp, fs) = plausibility_metrics(&m, &skel, DEFAULT_CONTACT_THRESHOLD).unwrap();
        assert_eq!(gp, 0.0, "generator guarantees feet above ground");
        assert!(fs.is_finite());
    }

    #[test]
    fn diversity_oracles() {
        let base = MotionVector::zeros(4, 2);
        assert_eq!(diversity(&[base.clone(), base.clone()]).unwrap(), 0.0);

        let mut other = base.clone();
        other.data_mut()[0] = 3.0;
        other.data_mut()[1] = 4.0;
        // ‖(3,4,0,…)‖ = 5 for both ordered pairs: diversity = 10/2 = 5.
        let d = diversity(&[base.clone(), other.clone()]).unwrap();
        assert!((d - 5.0).abs() < 1e-12, "diversity {d}");

        // Homogeneity: scaling all members by c scales diversity by c.
        let mut b2 = base.clone();
        let mut o2 = other.clone();
        for v in b2.data_mut() {
            *v *= 2.0;
        }
        for v in o2.data_mut() {
            *v *= 2.0;
        }
        assert!((diversity(&[b2, o2]).unwrap() - 2.0 * d).abs() < 1e-12);

        // Translation invariance: adding a common vector changes nothing.
        let mut b3 = base.clone();
        let mut o3 = other.clone();
        for v in b3.data_mut() {
            *v += 7.5;
        }
        for v in o3.data_mut() {
            *v += 7.5;
        }
        assert!((diversity(&[b3, o3]).unwrap() - d).abs() < 1e-12);

        assert!(diversity(&[base]).is_err());
    }

    #[test]
    fn accuracy_counts_ties_as_wrong() {
        let (acc, wrong) = accuracy_from_scores(&[(0.9, 0.1), (0.5, 0.5), (0.2, 0.8)]).unwrap();
        assert!((acc - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(wrong, 2);

        // Counting oracle: 100 pairs, exactly 7 inverted.
        let pairs: Vec<(f64, f64)> = (0..100)
            .map(|i| if i < 7 { (0.2, 0.8) } else { (0.8, 0.2) })
            .collect();
        let (acc, wrong) = accuracy_from_scores(&pairs).unwrap();
        assert!((acc - 0.93).abs() < 1e-12);
        assert_eq!(wrong, 7);
        assert!(accuracy_from_scores(&[]).is_err());
    }

    #[test]
    fn scorer_accuracy_ranks_pools_end_to_end() {
        use crate::kinematics::{quat_from_wxyz, HeadTrajectory, Se3};
        use crate::numerics::Rng;
        use crate::rewards::{PerceptualScorer, SkeletonFeatures};

        let mut rng = Rng::new(404);
        let mut feats = |rng: &mut Rng| {
            let data: Vec<Vec<[f64; 7]>> = (0..3)
                .map(|_| {
                    (0..2)
                        .map(|_| std::array::from_fn(|_| rng.uniform_in(-1.0, 1.0)))
                        .collect()
                })
                .collect();
            SkeletonFeatures::from_raw(data).unwrap()
        };
        let head = HeadTrajectory {
            poses: (0..3)
                .map(|t| {
                    Se3::new(
                        quat_from_wxyz(1.0, 0.0, 0.0, 0.0),
                        nalgebra::Vector3::new(0.1 * t as f64, 0.0, 1.5),
                    )
                })
                .collect(),
        };
        let pool: Vec<_> = (0..6)
            .map(|_| (feats(&mut rng), feats(&mut rng), head.clone()))
            .collect();

        // A zero-weight scorer gives every input 0.5, so every pair ties and
        // ties count as wrong.
        let flat = PerceptualScorer::zeros(4, 1).unwrap();
        let (acc, wrong) = scorer_accuracy(&flat, &pool).unwrap();
        assert_eq!(acc, 0.0);
        assert_eq!(wrong, pool.len());

        // A random scorer must agree with its own precomputed ranking.
        let scorer = PerceptualScorer::new(4, 1, &mut rng).unwrap();
        let oracle: Vec<(f64, f64)> = pool
            .iter()
            .map(|(gt, generated, h)| {
                (
                    scorer.forward(gt, h).unwrap(),
                    scorer.forward(generated, h).unwrap(),
                )
            })
            .collect();
        let (want_acc, want_wrong) = accuracy_from_scores(&oracle).unwrap();
        let (acc, wrong) = scorer_accuracy(&scorer, &pool).unwrap();
        assert_eq!(acc, want_acc);
        assert_eq!(wrong, want_wrong);
    }

    #[test]
    fn report_aggregates_and_serializes() {
        let (skel, gt) = walk(6, 8);
        let pred = shift_root(&gt, Vector3::new(0.05, 0.0, 0.0));
        let rows = vec![
            evaluate_pair(&gt, &gt, &skel, DEFAULT_CONTACT_THRESHOLD).unwrap(),
            evaluate_pair(&pred, &gt, &skel, DEFAULT_CONTACT_THRESHOLD).unwrap(),
        ];
        let report = EvalReport::from_rows(rows).unwrap();
        assert!((report.mean.mpjpe - 25.0).abs() < 1e-9, "mean of 0 and 50 mm");
        let csv = report.to_csv();
        assert!(csv.starts_with("MPJPE,PA-MPJPE,MPJVE,MPJRE,Jitter,GP,FS\n"));
        assert_eq!(csv.lines().count(), 4);
        assert!(EvalReport::from_rows(vec![]).is_err());
    }

    #[test]
    fn rotation_error_shape_mismatch_is_reported() {
        let (_, a) = walk(7, 8);
        let (_, b) = walk(7, 10);
        assert!(mpjre_l1(&a, &b).is_err());
        let yaw = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 0.3);
        // A uniform local-rotation change must register in MPJRE.
        let rotated: Vec<Vec<UnitQuaternion<f64>>> = a
            .local_rot()
            .iter()
            .map(|f| f.iter().map(|q| yaw * q).collect())
            .collect();
        let pred = MotionSequence::new(a.fps(), a.root().to_vec(), rotated).unwrap();
        assert!(mpjre_l1(&pred, &a).unwrap() > 0.1);
        assert!((mpjre_geodesic(&pred, &a).unwrap() - 0.3).abs() < 1e-9);
    }
}
