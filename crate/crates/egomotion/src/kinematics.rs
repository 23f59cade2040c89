//! Toy articulated skeleton, SE(3) head poses, forward kinematics, and the
//! invariant conditioning function that canonicalizes a head trajectory.
//!
//! Axis convention: z-up, gravity along -z, ground plane z = 0; pitch is a
//! rotation about +y. The conditioning function quotients exactly the global
//! yaw and horizontal translation of the first frame, so conditioning features
//! keep absolute height and relative heading but forget where in the world a
//! trajectory happened.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

use crate::error::{Error, Result};

/// Canonicalizes a unit quaternion to the w >= 0 hemisphere (ties broken by
/// the first non-zero imaginary component). Idempotent.
pub fn canonicalize(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    let c = q.coords; // (x, y, z, w)
    let flip = c.w < 0.0
        || (c.w == 0.0
            && (c.x < 0.0 || (c.x == 0.0 && (c.y < 0.0 || (c.y == 0.0 && c.z < 0.0)))));
    if flip {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        q
    }
}

/// Builds a canonical unit quaternion from possibly unnormalized (w,x,y,z)
/// components. A near-zero norm falls back to the identity rotation; inputs
/// already unit to 1e-12 are taken bit-exactly (lossless persistence depends
/// on this).
pub fn quat_from_wxyz(w: f64, x: f64, y: f64, z: f64) -> UnitQuaternion<f64> {
    let q = Quaternion::new(w, x, y, z);
    let n = q.norm();
    if n < 1e-12 {
        UnitQuaternion::identity()
    } else if (n - 1.0).abs() <= 1e-12 {
        canonicalize(UnitQuaternion::new_unchecked(q))
    } else {
        canonicalize(UnitQuaternion::from_quaternion(q))
    }
}

/// Rigid transform: rotation (canonical unit quaternion) plus translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Se3 {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl Se3 {
    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Se3 {
            rotation: canonicalize(rotation),
            translation,
        }
    }

    pub fn identity() -> Self {
        Se3 {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// self ∘ other: apply `other` first, then `self`.
    pub fn compose(&self, other: &Se3) -> Se3 {
        Se3::new(
            self.rotation * other.rotation,
            self.translation + self.rotation * other.translation,
        )
    }

    pub fn inverse(&self) -> Se3 {
        let inv_rot = self.rotation.inverse();
        Se3::new(inv_rot, -(inv_rot * self.translation))
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Pose as the 7-vector (qw, qx, qy, qz, tx, ty, tz).
    pub fn to_wxyz_t(&self) -> [f64; 7] {
        let c = self.rotation.coords;
        [
            c.w,
            c.x,
            c.y,
            c.z,
            self.translation.x,
            self.translation.y,
            self.translation.z,
        ]
    }

    pub fn from_wxyz_t(v: &[f64; 7]) -> Self {
        Se3::new(
            quat_from_wxyz(v[0], v[1], v[2], v[3]),
            Vector3::new(v[4], v[5], v[6]),
        )
    }
}

/// Articulated skeleton: a topologically sorted joint tree with fixed bone
/// offsets (meters, parent frame).
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    parents: Vec<Option<usize>>,
    offsets: Vec<Vector3<f64>>,
    head_index: usize,
    foot_indices: [usize; 2],
}

impl Skeleton {
    /// The default desk-scale skeleton: pelvis (root), spine, neck, head,
    /// left hip/foot, right hip/foot. Eight joints, three chains.
    pub fn desk_default() -> Self {
        Self::with_torso_joints(2)
    }

    /// Same topology with a configurable torso chain length (`k >= 1` joints
    /// between pelvis and head, totaling 0.5 m). `k = 2` gives the default
    /// spine + neck skeleton with 8 joints.
    pub fn with_torso_joints(k: usize) -> Self {
        assert!(k >= 1, "torso needs at least one joint");
        let seg = 0.5 / k as f64;
        let mut parents = vec![None];
        let mut offsets = vec![Vector3::zeros()];
        for i in 0..k {
            parents.push(Some(i));
            offsets.push(Vector3::new(0.0, 0.0, seg));
        }
        let head_index = k + 1;
        parents.push(Some(k));
        offsets.push(Vector3::new(0.0, 0.0, 0.15));
        // Left hip/foot, right hip/foot, both legs hanging from the pelvis.
        let l_hip = head_index + 1;
        parents.push(Some(0));
        offsets.push(Vector3::new(0.12, 0.0, 0.0));
        parents.push(Some(l_hip));
        offsets.push(Vector3::new(0.0, 0.0, -Self::LEG_LENGTH));
        let r_hip = l_hip + 2;
        parents.push(Some(0));
        offsets.push(Vector3::new(-0.12, 0.0, 0.0));
        parents.push(Some(r_hip));
        offsets.push(Vector3::new(0.0, 0.0, -Self::LEG_LENGTH));

        let skel = Skeleton {
            parents,
            offsets,
            head_index,
            foot_indices: [l_hip + 1, r_hip + 1],
        };
        skel.validate().expect("built-in skeleton is valid");
        skel
    }

    /// Hip-to-foot distance of the desk skeleton.
    pub const LEG_LENGTH: f64 = 0.85;

    pub fn joint_count(&self) -> usize {
        self.parents.len()
    }

    pub fn parent(&self, joint: usize) -> Option<usize> {
        self.parents[joint]
    }

    pub fn offset(&self, joint: usize) -> &Vector3<f64> {
        &self.offsets[joint]
    }

    pub fn head_index(&self) -> usize {
        self.head_index
    }

    pub fn foot_indices(&self) -> [usize; 2] {
        self.foot_indices
    }

    /// Head height above the root in the rest pose.
    pub fn rest_head_offset(&self) -> f64 {
        let mut z = 0.0;
        let mut j = self.head_index;
        while let Some(p) = self.parents[j] {
            z += self.offsets[j].z;
            j = p;
        }
        z
    }

    /// Head height above ground when the skeleton stands with straight legs.
    pub fn rest_head_height(&self) -> f64 {
        Self::LEG_LENGTH + self.rest_head_offset()
    }

    pub fn validate(&self) -> Result<()> {
        if self.parents.len() != self.offsets.len() {
            return Err(Error::invalid("Skeleton", "parent/offset length mismatch"));
        }
        let roots = self.parents.iter().filter(|p| p.is_none()).count();
        if roots != 1 || self.parents[0].is_some() {
            return Err(Error::invalid("Skeleton", "exactly one root at index 0 required"));
        }
        for (j, p) in self.parents.iter().enumerate() {
            if let Some(p) = p {
                if *p >= j {
                    return Err(Error::invalid(
                        "Skeleton",
                        format!("joint {j} has parent {p}; joints must be topologically sorted"),
                    ));
                }
            }
        }
        let n = self.joint_count();
        if self.head_index >= n || self.foot_indices.iter().any(|&f| f >= n) {
            return Err(Error::invalid("Skeleton", "head/foot index out of range"));
        }
        Ok(())
    }
}

/// Full-body motion: per-frame root transform plus per-frame local joint
/// rotations (parent frame).
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    fps: f64,
    root: Vec<Se3>,
    local_rot: Vec<Vec<UnitQuaternion<f64>>>,
}

impl MotionSequence {
    pub fn new(fps: f64, root: Vec<Se3>, local_rot: Vec<Vec<UnitQuaternion<f64>>>) -> Result<Self> {
        if fps <= 0.0 || !fps.is_finite() {
            return Err(Error::invalid("MotionSequence", format!("fps must be positive, got {fps}")));
        }
        let frames = root.len();
        if frames < 4 {
            return Err(Error::invalid(
                "MotionSequence",
                format!("need at least 4 frames (jerk takes 3 differences), got {frames}"),
            ));
        }
        if local_rot.len() != frames {
            return Err(Error::dimension("MotionSequence local_rot frames", frames, local_rot.len()));
        }
        let joints = local_rot[0].len();
        if joints == 0 || local_rot.iter().any(|f| f.len() != joints) {
            return Err(Error::invalid("MotionSequence", "ragged or empty local_rot"));
        }
        let local_rot = local_rot
            .into_iter()
            .map(|f| f.into_iter().map(canonicalize).collect())
            .collect();
        Ok(MotionSequence { fps, root, local_rot })
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frames(&self) -> usize {
        self.root.len()
    }

    pub fn joint_count(&self) -> usize {
        self.local_rot[0].len()
    }

    pub fn root(&self) -> &[Se3] {
        &self.root
    }

    pub fn local_rot(&self) -> &[Vec<UnitQuaternion<f64>>] {
        &self.local_rot
    }
}

/// Per-frame head pose track (the synthetic stand-in for a device signal).
#[derive(Debug, Clone, PartialEq)]
pub struct HeadTrajectory {
    pub poses: Vec<Se3>,
}

impl HeadTrajectory {
    pub fn frames(&self) -> usize {
        self.poses.len()
    }
}

/// Canonicalized conditioning features: per frame, the first two columns of
/// the head rotation matrix (6 numbers) plus the head translation (3).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionFeatures {
    features: Vec<[f64; 9]>,
}

pub const CONDITION_DIM: usize = 9;

impl ConditionFeatures {
    pub fn frames(&self) -> usize {
        self.features.len()
    }

    pub fn frame(&self, t: usize) -> &[f64; 9] {
        &self.features[t]
    }

    pub fn flat(&self) -> Vec<f64> {
        self.features.iter().flatten().copied().collect()
    }

    pub fn dim(&self) -> usize {
        self.features.len() * CONDITION_DIM
    }
}

/// Global joint poses produced by forward kinematics, `[frame][joint]`.
#[derive(Debug, Clone)]
pub struct FkResult {
    pub positions: Vec<Vec<Vector3<f64>>>,
    pub rotations: Vec<Vec<UnitQuaternion<f64>>>,
}

/// Composes local rotations down the joint tree. The root joint sits at the
/// root translation with rotation `root.rotation * local_rot[root]`; every
/// child sits at `parent position + parent global rotation * offset`.
pub fn forward_kinematics(skel: &Skeleton, motion: &MotionSequence) -> Result<FkResult> {
    if motion.joint_count() != skel.joint_count() {
        return Err(Error::dimension(
            "forward_kinematics joint count",
            skel.joint_count(),
            motion.joint_count(),
        ));
    }
    let frames = motion.frames();
    let n = skel.joint_count();
    let mut positions = Vec::with_capacity(frames);
    let mut rotations = Vec::with_capacity(frames);
    for t in 0..frames {
        let mut pos = vec![Vector3::zeros(); n];
        let mut rot = vec![UnitQuaternion::identity(); n];
        for j in 0..n {
            match skel.parent(j) {
                None => {
                    rot[j] = motion.root[t].rotation * motion.local_rot[t][j];
                    pos[j] = motion.root[t].translation;
                }
                Some(p) => {
                    rot[j] = rot[p] * motion.local_rot[t][j];
                    pos[j] = pos[p] + rot[p] * skel.offset(j);
                }
            }
        }
        positions.push(pos);
        rotations.push(rot);
    }
    Ok(FkResult { positions, rotations })
}

/// Reads the head joint's global pose off forward kinematics.
pub fn derive_head_trajectory(skel: &Skeleton, motion: &MotionSequence) -> Result<HeadTrajectory> {
    let fk = forward_kinematics(skel, motion)?;
    let h = skel.head_index();
    let poses = (0..motion.frames())
        .map(|t| Se3::new(fk.rotations[t][h], fk.positions[t][h]))
        .collect();
    Ok(HeadTrajectory { poses })
}

/// Yaw (rotation about +z) of the frame such that removing it leaves the
/// rotated x-axis in the xz-plane.
fn yaw_of(r: &UnitQuaternion<f64>) -> f64 {
    let m = r.to_rotation_matrix();
    m[(1, 0)].atan2(m[(0, 0)])
}

/// Canonicalizes a head trajectory by the inverse of the yaw + horizontal
/// translation of its first frame, then encodes each frame as 6D rotation +
/// translation. Invariant under global yaw rotations and horizontal shifts of
/// the input; absolute height and pitch/roll are preserved.
pub fn invariant_condition(h: &HeadTrajectory) -> ConditionFeatures {
    assert!(!h.poses.is_empty(), "conditioning needs at least one frame");
    let first = &h.poses[0];
    let yaw = yaw_of(&first.rotation);
    let anchor = Se3::new(
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
        Vector3::new(first.translation.x, first.translation.y, 0.0),
    );
    let undo = anchor.inverse();
    let features = h
        .poses
        .iter()
        .map(|p| {
            let local = undo.compose(p);
            let m: Matrix3<f64> = local.rotation.to_rotation_matrix().into_inner();
            [
                m[(0, 0)],
                m[(1, 0)],
                m[(2, 0)],
                m[(0, 1)],
                m[(1, 1)],
                m[(2, 1)],
                local.translation.x,
                local.translation.y,
                local.translation.z,
            ]
        })
        .collect();
    ConditionFeatures { features }
}

/// Rotation matrix of a quaternion as a plain 3x3 (row-major) array; shared by
/// rewards and metrics.
pub fn rotation_entries(q: &UnitQuaternion<f64>) -> [f64; 9] {
    let m = q.to_rotation_matrix();
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[r * 3 + c] = m[(r, c)];
        }
    }
    out
}

/// Applies a yaw rotation plus horizontal translation to a whole trajectory
/// (test support for the invariance contract).
pub fn apply_yaw_shift(h: &HeadTrajectory, yaw: f64, dx: f64, dy: f64) -> HeadTrajectory {
    let b = Se3::new(
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
        Vector3::new(dx, dy, 0.0),
    );
    HeadTrajectory {
        poses: h.poses.iter().map(|p| b.compose(p)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn identity_motion(skel: &Skeleton, frames: usize) -> MotionSequence {
        MotionSequence::new(
            30.0,
            vec![Se3::identity(); frames],
            vec![vec![UnitQuaternion::identity(); skel.joint_count()]; frames],
        )
        .unwrap()
    }

    fn random_motion(skel: &Skeleton, frames: usize, rng: &mut Rng) -> MotionSequence {
        let random_quat = |rng: &mut Rng| {
            quat_from_wxyz(rng.normal(), rng.normal(), rng.normal(), rng.normal())
        };
        let root = (0..frames)
            .map(|_| {
                Se3::new(
                    random_quat(rng),
                    Vector3::new(rng.normal(), rng.normal(), rng.normal()),
                )
            })
            .collect();
        let local = (0..frames)
            .map(|_| (0..skel.joint_count()).map(|_| random_quat(rng)).collect())
            .collect();
        MotionSequence::new(30.0, root, local).unwrap()
    }

    #[test]
    fn desk_skeleton_shape() {
        let s = Skeleton::desk_default();
        assert_eq!(s.joint_count(), 8);
        assert_eq!(s.head_index(), 3);
        assert_eq!(s.foot_indices(), [5, 7]);
        assert!((s.rest_head_offset() - 0.65).abs() < 1e-15);
        assert!((s.rest_head_height() - 1.5).abs() < 1e-15);
        s.validate().unwrap();
    }

    #[test]
    fn fk_identity_pose_stacks_offsets() {
        let s = Skeleton::desk_default();
        let m = identity_motion(&s, 4);
        let fk = forward_kinematics(&s, &m).unwrap();
        assert_eq!(fk.positions[0][0], Vector3::zeros());
        assert_eq!(fk.positions[0][3], Vector3::new(0.0, 0.0, 0.65));
        assert_eq!(fk.positions[0][5], Vector3::new(0.12, 0.0, -0.85));
        assert_eq!(fk.positions[0][7], Vector3::new(-0.12, 0.0, -0.85));
    }

    #[test]
    fn fk_root_yaw_rotates_child_offset() {
        let s = Skeleton::desk_default();
        let mut m = identity_motion(&s, 4);
        // Yaw the root by 90 degrees; the left-hip offset (0.12, 0, 0) should
        // land at (0, 0.12, 0).
        let yaw90 = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2);
        for t in 0..m.frames() {
            m.root[t] = Se3::new(yaw90, Vector3::zeros());
        }
        let fk = forward_kinematics(&s, &m).unwrap();
        let p = fk.positions[0][4];
        assert!((p - Vector3::new(0.0, 0.12, 0.0)).norm() < 1e-12, "{p:?}");

        // Hand-check a unit offset too: yaw 90 applied to (1,0,0) is (0,1,0).
        let r = yaw90 * Vector3::new(1.0, 0.0, 0.0);
        assert!((r - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn fk_two_link_chain_with_pitched_middle_joint() {
        // Two links of offset (0,0,1); pitching the middle joint by 90 about
        // +y sends the tip to (0,0,1) + pitched (0,0,1) = (1,0,1).
        let skel = Skeleton {
            parents: vec![None, Some(0), Some(1)],
            offsets: vec![
                Vector3::zeros(),
                Vector3::new(0.0, 0.0, 1.0),
                Vector3::new(0.0, 0.0, 1.0),
            ],
            head_index: 2,
            foot_indices: [0, 0],
        };
        skel.validate().unwrap();
        let pitch90 = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), std::f64::consts::FRAC_PI_2);
        let mut local = vec![vec![UnitQuaternion::identity(); 3]; 4];
        for f in &mut local {
            f[1] = pitch90;
        }
        let m = MotionSequence::new(30.0, vec![Se3::identity(); 4], local).unwrap();
        let fk = forward_kinematics(&skel, &m).unwrap();
        let tip = fk.positions[0][2];
        assert!((tip - Vector3::new(1.0, 0.0, 1.0)).norm() < 1e-12, "{tip:?}");
    }

    #[test]
    fn fk_rejects_joint_count_mismatch() {
        let s = Skeleton::desk_default();
        let m = MotionSequence::new(
            30.0,
            vec![Se3::identity(); 4],
            vec![vec![UnitQuaternion::identity(); 5]; 4],
        )
        .unwrap();
        assert!(forward_kinematics(&s, &m).is_err());
    }

    #[test]
    fn fk_linear_in_root_translation() {
        let s = Skeleton::desk_default();
        let mut rng = Rng::new(3);
        let m = random_motion(&s, 6, &mut rng);
        let v = Vector3::new(1.5, -2.0, 0.25);
        let mut shifted = m.clone();
        for t in 0..m.frames() {
            shifted.root[t].translation += v;
        }
        let a = forward_kinematics(&s, &m).unwrap();
        let b = forward_kinematics(&s, &shifted).unwrap();
        for t in 0..m.frames() {
            for j in 0..s.joint_count() {
                assert!((b.positions[t][j] - a.positions[t][j] - v).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fk_equivariant_under_global_rotation() {
        let s = Skeleton::desk_default();
        let mut rng = Rng::new(4);
        let m = random_motion(&s, 5, &mut rng);
        let q = quat_from_wxyz(0.3, 1.0, -0.4, 0.2);
        let mut rotated = m.clone();
        for t in 0..m.frames() {
            rotated.root[t] = Se3::new(q * m.root[t].rotation, q * m.root[t].translation);
        }
        let a = forward_kinematics(&s, &m).unwrap();
        let b = forward_kinematics(&s, &rotated).unwrap();
        for t in 0..m.frames() {
            for j in 0..s.joint_count() {
                assert!((b.positions[t][j] - q * a.positions[t][j]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn head_trajectory_matches_fk_and_shifts_with_translation() {
        let s = Skeleton::desk_default();
        let m = identity_motion(&s, 4);
        let h = derive_head_trajectory(&s, &m).unwrap();
        assert_eq!(h.poses[0].translation, Vector3::new(0.0, 0.0, 0.65));
        assert_eq!(h.poses[0].rotation, UnitQuaternion::identity());

        let mut shifted = m.clone();
        for t in 0..m.frames() {
            shifted.root[t].translation += Vector3::new(1.0, 2.0, 0.0);
        }
        let h2 = derive_head_trajectory(&s, &shifted).unwrap();
        for t in 0..m.frames() {
            let d = h2.poses[t].translation - h.poses[t].translation;
            assert!((d - Vector3::new(1.0, 2.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn condition_frame_one_is_canonical() {
        let s = Skeleton::desk_default();
        let m = identity_motion(&s, 4);
        let h = derive_head_trajectory(&s, &m).unwrap();
        let c = invariant_condition(&h);
        let f = c.frame(0);
        // Identity rotation encoding: columns (1,0,0) and (0,1,0).
        assert_eq!(&f[0..6], &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        // Horizontal part of frame 1 is quotiented; height survives.
        assert_eq!(&f[6..9], &[0.0, 0.0, 0.65]);
    }

    #[test]
    fn condition_invariant_under_yaw_and_horizontal_shift() {
        let mut rng = Rng::new(5);
        let s = Skeleton::desk_default();
        for _ in 0..100 {
            let m = random_motion(&s, 5, &mut rng);
            let h = derive_head_trajectory(&s, &m).unwrap();
            let yaw = rng.uniform_in(-3.0, 3.0);
            let moved = apply_yaw_shift(&h, yaw, rng.uniform_in(-5.0, 5.0), rng.uniform_in(-5.0, 5.0));
            let a = invariant_condition(&h);
            let b = invariant_condition(&moved);
            for t in 0..h.frames() {
                for k in 0..CONDITION_DIM {
                    assert!(
                        (a.frame(t)[k] - b.frame(t)[k]).abs() < 1e-9,
                        "frame {t} component {k}: {} vs {}",
                        a.frame(t)[k],
                        b.frame(t)[k]
                    );
                }
            }
        }
    }

    #[test]
    fn condition_not_invariant_under_pitch() {
        let s = Skeleton::desk_default();
        let mut rng = Rng::new(6);
        let m = random_motion(&s, 5, &mut rng);
        let h = derive_head_trajectory(&s, &m).unwrap();
        let pitch = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), 10f64.to_radians());
        let b = Se3::new(pitch, Vector3::zeros());
        let pitched = HeadTrajectory {
            poses: h.poses.iter().map(|p| b.compose(p)).collect(),
        };
        let a = invariant_condition(&h);
        let c = invariant_condition(&pitched);
        let max_diff = (0..h.frames())
            .flat_map(|t| (0..CONDITION_DIM).map(move |k| (t, k)))
            .map(|(t, k)| (a.frame(t)[k] - c.frame(t)[k]).abs())
            .fold(0.0f64, f64::max);
        assert!(max_diff > 1e-3, "pitch should change features, diff {max_diff}");
    }

    #[test]
    fn canonicalization_idempotent_and_w_nonnegative() {
        let mut rng = Rng::new(7);
        for _ in 0..200 {
            let q = quat_from_wxyz(rng.normal(), rng.normal(), rng.normal(), rng.normal());
            assert!(q.coords.w >= 0.0);
            let qq = canonicalize(q);
            assert_eq!(q, qq);
            assert!((q.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn se3_compose_inverse_is_identity() {
        let mut rng = Rng::new(8);
        for _ in 0..100 {
            let a = Se3::new(
                quat_from_wxyz(rng.normal(), rng.normal(), rng.normal(), rng.normal()),
                Vector3::new(rng.normal(), rng.normal(), rng.normal()),
            );
            let e = a.compose(&a.inverse());
            assert!(e.translation.norm() < 1e-12);
            assert!(e.rotation.angle() < 1e-9);
        }
    }
}
