//! Flat encoding of a motion sequence as the diffusion state vector.

use crate::error::{Error, Result};
use crate::kinematics::{quat_from_wxyz, MotionSequence, Se3};

/// Per-frame slots for the root: quaternion (w,x,y,z) + translation (x,y,z).
pub const ROOT_DIM: usize = 7;

/// Flat dimension of a motion vector with `frames` frames and `joints`
/// local joints: per frame, the root 7-vector followed by one quaternion
/// (w,x,y,z) per joint.
pub fn motion_dim(frames: usize, joints: usize) -> usize {
    frames * (joints * 4 + ROOT_DIM)
}

/// A motion sequence flattened into one finite f64 vector — the variable the
/// diffusion process corrupts and the sampler denoises. Entries are NOT kept
/// normalized during diffusion (that would break the Gaussian transition
/// model); quaternion renormalization happens only in [`MotionVector::decode`].
///
/// Frame layout: `[root qw qx qy qz, root tx ty tz, joint_0 qw qx qy qz, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionVector {
    frames: usize,
    joints: usize,
    data: Vec<f64>,
}

impl MotionVector {
    pub fn zeros(frames: usize, joints: usize) -> Self {
        MotionVector {
            frames,
            joints,
            data: vec![0.0; motion_dim(frames, joints)],
        }
    }

    pub fn from_data(frames: usize, joints: usize, data: Vec<f64>) -> Result<Self> {
        let dim = motion_dim(frames, joints);
        if data.len() != dim {
            return Err(Error::dimension("MotionVector", dim, data.len()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::non_finite(format!("MotionVector entry {i}")));
        }
        Ok(MotionVector { frames, joints, data })
    }

    /// Flattens a motion sequence. Quaternions are already canonical unit
    /// quaternions inside a [`MotionSequence`], so this is lossless.
    pub fn encode(motion: &MotionSequence) -> Self {
        let frames = motion.frames();
        let joints = motion.joint_count();
        let mut data = Vec::with_capacity(motion_dim(frames, joints));
        for t in 0..frames {
            data.extend_from_slice(&motion.root()[t].to_wxyz_t());
            for q in &motion.local_rot()[t] {
                data.extend_from_slice(&[q.w, q.i, q.j, q.k]);
            }
        }
        MotionVector { frames, joints, data }
    }

    /// Reconstructs a motion sequence, renormalizing every quaternion slot
    /// (a near-zero-norm slot decodes to the identity rotation).
    pub fn decode(&self, fps: f64) -> Result<MotionSequence> {
        let stride = self.joints * 4 + ROOT_DIM;
        let mut root = Vec::with_capacity(self.frames);
        let mut local_rot = Vec::with_capacity(self.frames);
        for t in 0..self.frames {
            let f = &self.data[t * stride..(t + 1) * stride];
            root.push(Se3::from_wxyz_t(&[
                f[0], f[1], f[2], f[3], f[4], f[5], f[6],
            ]));
            let mut joints_t = Vec::with_capacity(self.joints);
            for j in 0..self.joints {
                let q = &f[ROOT_DIM + j * 4..ROOT_DIM + (j + 1) * 4];
                joints_t.push(quat_from_wxyz(q[0], q[1], q[2], q[3]));
            }
            local_rot.push(joints_t);
        }
        MotionSequence::new(fps, root, local_rot)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Skeleton;
    use crate::numerics::Rng;
    use crate::synthdata::{generate_walk, sample_gait_params};

    #[test]
    fn dimension_formula_matches_layout() {
        // 4 frames, 8 joints: 4 · (32 + 7) = 156.
        assert_eq!(motion_dim(4, 8), 156);
        assert_eq!(MotionVector::zeros(4, 8).dim(), 156);
    }

    #[test]
    fn encode_decode_round_trips_a_generated_walk() {
        let skel = Skeleton::desk_default();
        let mut rng = Rng::new(11).child("roundtrip");
        let params = sample_gait_params(&mut rng);
        let motion = generate_walk(&skel, &params, 8, 30.0).unwrap();
        let vec = MotionVector::encode(&motion);
        let back = vec.decode(30.0).unwrap();
        assert_eq!(back.frames(), motion.frames());
        assert_eq!(back.joint_count(), motion.joint_count());
        for t in 0..motion.frames() {
            let a = motion.root()[t].to_wxyz_t();
            let b = back.root()[t].to_wxyz_t();
            for k in 0..7 {
                assert_eq!(a[k], b[k], "root slot {k} frame {t} not bit-exact");
            }
            for j in 0..motion.joint_count() {
                let qa = motion.local_rot()[t][j];
                let qb = back.local_rot()[t][j];
                assert_eq!(qa.coords, qb.coords, "joint {j} frame {t}");
            }
        }
    }

    #[test]
    fn decode_renormalizes_scaled_and_zero_quaternions() {
        let mut v = MotionVector::zeros(4, 2);
        // Leave every quaternion slot zero except frame 0 joint 0, which gets
        // a scaled x-rotation; zero-norm slots must decode to the identity.
        let d = v.data_mut();
        let s = 3.0;
        d[7] = s * (0.5_f64).cos(); // qw of joint 0
        d[8] = s * (0.5_f64).sin(); // qx
        let m = v.decode(30.0).unwrap();
        let q = m.local_rot()[0][0];
        assert!((q.w - (0.5_f64).cos()).abs() < 1e-12);
        assert!((q.i - (0.5_f64).sin()).abs() < 1e-12);
        assert_eq!(m.local_rot()[1][0], nalgebra::UnitQuaternion::identity());
        assert_eq!(m.root()[0].rotation, nalgebra::UnitQuaternion::identity());
    }

    #[test]
    fn from_data_rejects_wrong_length_and_non_finite() {
        assert!(MotionVector::from_data(4, 8, vec![0.0; 100]).is_err());
        let mut data = vec![0.0; motion_dim(4, 8)];
        data[3] = f64::NAN;
        let err = MotionVector::from_data(4, 8, data).unwrap_err();
        assert!(err.to_string().contains("entry 3"), "{err}");
    }
}
