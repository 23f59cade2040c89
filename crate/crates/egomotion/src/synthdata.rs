//! Procedural gait generator and dataset persistence.
//!
//! Walks are parametrized sinusoidal gaits on the desk skeleton: the root
//! advances at constant speed along its heading, yaws at a constant turn
//! rate, and bobs vertically; hips swing in antiphase, feet counter-rotate to
//! stay level, the torso sways, and the neck nods gently. The generator keeps
//! the pelvis at or above standing height so no joint ever dips below the
//! ground plane.
//!
//! Datasets persist as one JSON object per line with floats printed at 17
//! significant digits, which round-trips every f64 exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{
    derive_head_trajectory, quat_from_wxyz, HeadTrajectory, MotionSequence, Se3, Skeleton,
};
use crate::numerics::Rng;

/// Gait description for one generated walk.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitParams {
    /// Stride cycles per second.
    pub stride_frequency: f64,
    /// Peak hip swing, radians.
    pub stride_amplitude: f64,
    /// Root speed along the heading, m/s.
    pub forward_speed: f64,
    /// Heading change, rad/s.
    pub turn_rate: f64,
    /// Peak-to-trough vertical bob of the pelvis, meters.
    pub bob_amplitude: f64,
    /// Stride phase per limb (left, right); sampled walks keep them in
    /// antiphase.
    pub limb_phase: [f64; 2],
}

impl Default for GaitParams {
    fn default() -> Self {
        GaitParams {
            stride_frequency: 1.0,
            stride_amplitude: 0.4,
            forward_speed: 0.9,
            turn_rate: 0.0,
            bob_amplitude: 0.025,
            limb_phase: [0.0, std::f64::consts::PI],
        }
    }
}

impl GaitParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.stride_frequency > 0.0) {
            return Err(Error::invalid("GaitParams", "stride_frequency must be > 0"));
        }
        if self.stride_amplitude < 0.0 || self.bob_amplitude < 0.0 {
            return Err(Error::invalid("GaitParams", "amplitudes must be >= 0"));
        }
        Ok(())
    }
}

/// Sampling ranges for dataset generation (uniform per record).
pub const STRIDE_FREQUENCY_RANGE: (f64, f64) = (0.6, 1.4);
pub const STRIDE_AMPLITUDE_RANGE: (f64, f64) = (0.2, 0.6);
pub const FORWARD_SPEED_RANGE: (f64, f64) = (0.4, 1.4);
pub const TURN_RATE_RANGE: (f64, f64) = (-0.5, 0.5);
pub const BOB_RANGE: (f64, f64) = (0.01, 0.04);

pub fn sample_gait_params(rng: &mut Rng) -> GaitParams {
    let base_phase = rng.uniform_in(0.0, std::f64::consts::TAU);
    GaitParams {
        stride_frequency: rng.uniform_in(STRIDE_FREQUENCY_RANGE.0, STRIDE_FREQUENCY_RANGE.1),
        stride_amplitude: rng.uniform_in(STRIDE_AMPLITUDE_RANGE.0, STRIDE_AMPLITUDE_RANGE.1),
        forward_speed: rng.uniform_in(FORWARD_SPEED_RANGE.0, FORWARD_SPEED_RANGE.1),
        turn_rate: rng.uniform_in(TURN_RATE_RANGE.0, TURN_RATE_RANGE.1),
        bob_amplitude: rng.uniform_in(BOB_RANGE.0, BOB_RANGE.1),
        limb_phase: [base_phase, base_phase + std::f64::consts::PI],
    }
}

/// Generates a walking sequence on the given skeleton. Pure function of its
/// arguments; the per-record randomness lives in the sampled [`GaitParams`].
pub fn generate_walk(skel: &Skeleton, params: &GaitParams, frames: usize, fps: f64) -> Result<MotionSequence> {
    params.validate()?;
    if frames < 4 {
        return Err(Error::invalid("generate_walk", format!("need >= 4 frames, got {frames}")));
    }
    let n = skel.joint_count();
    let head = skel.head_index();
    let neck = skel
        .parent(head)
        .expect("head is never the root in this skeleton family");
    let [l_foot, r_foot] = skel.foot_indices();
    let l_hip = skel.parent(l_foot).expect("feet hang off hips");
    let r_hip = skel.parent(r_foot).expect("feet hang off hips");

    let dt = 1.0 / fps;
    let mut root = Vec::with_capacity(frames);
    let mut local_rot = Vec::with_capacity(frames);
    let mut x = 0.0;
    let mut y = 0.0;
    for t in 0..frames {
        let time = t as f64 * dt;
        let heading = params.turn_rate * time;
        if t > 0 {
            let prev_heading = params.turn_rate * (t - 1) as f64 * dt;
            x += params.forward_speed * dt * prev_heading.cos();
            y += params.forward_speed * dt * prev_heading.sin();
        }
        let phase = std::f64::consts::TAU * params.stride_frequency * time;
        // The bob term is non-negative, so the pelvis never drops below
        // standing height and straight legs keep every joint at z >= 0.
        let z = Skeleton::LEG_LENGTH
            + 0.5 * params.bob_amplitude * (1.0 + (2.0 * phase + 2.0 * params.limb_phase[0]).sin());
        root.push(Se3::new(
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), heading),
            Vector3::new(x, y, z),
        ));

        let mut frame = vec![UnitQuaternion::identity(); n];
        let swing_l = params.stride_amplitude * (phase + params.limb_phase[0]).sin();
        let swing_r = params.stride_amplitude * (phase + params.limb_phase[1]).sin();
        frame[l_hip] = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), swing_l);
        frame[r_hip] = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), swing_r);
        // Feet counter-rotate so the sole stays parallel to the ground.
        frame[l_foot] = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), -swing_l);
        frame[r_foot] = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), -swing_r);
        // Gentle torso sway (about z, which preserves chain height) and a
        // neck nod for non-trivial upper-body rotations.
        let sway = 0.1 * params.stride_amplitude * (phase + params.limb_phase[0]).sin();
        let mut j = neck;
        while let Some(p) = skel.parent(j) {
            if j != neck {
                frame[j] = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), sway);
            }
            if p == 0 {
                break;
            }
            j = p;
        }
        frame[neck] = UnitQuaternion::from_axis_angle(
            &Vector3::y_axis(),
            0.1 * params.stride_amplitude * (2.0 * phase).sin(),
        );
        local_rot.push(frame);
    }
    MotionSequence::new(fps, root, local_rot)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub motion: MotionSequence,
    pub head: HeadTrajectory,
    pub split: Split,
}

/// Paired motion/head records with train/val/test labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<DatasetRecord>,
    seed: u64,
}

impl Dataset {
    /// Wraps explicitly constructed records (e.g. walks generated with
    /// hand-picked parameters) into a dataset. The caller owns split
    /// assignment; `check_consistency` can validate the result.
    pub fn from_records(records: Vec<DatasetRecord>, seed: u64) -> Dataset {
        Dataset { records, seed }
    }

    pub fn records(&self) -> &[DatasetRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn indices_of(&self, split: Split) -> Vec<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.split == split)
            .map(|(i, _)| i)
            .collect()
    }

    /// Verifies that every stored head track is the one forward kinematics
    /// derives from its motion (tolerance 1e-9 per component).
    pub fn check_consistency(&self, skel: &Skeleton) -> Result<()> {
        for (i, rec) in self.records.iter().enumerate() {
            let derived = derive_head_trajectory(skel, &rec.motion)?;
            if derived.frames() != rec.head.frames() {
                return Err(Error::Dataset(format!("record {i}: head frame count mismatch")));
            }
            for t in 0..derived.frames() {
                let a = derived.poses[t].to_wxyz_t();
                let b = rec.head.poses[t].to_wxyz_t();
                for k in 0..7 {
                    if (a[k] - b[k]).abs() > 1e-9 {
                        return Err(Error::Dataset(format!(
                            "record {i} frame {t}: stored head disagrees with kinematics (component {k})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Generates `count` records with per-record child RNGs and contiguous
/// train/val/test splits by cumulative rounding of the fractions.
pub fn build_dataset(
    skel: &Skeleton,
    count: usize,
    frames: usize,
    fps: f64,
    seed: u64,
    split_fractions: [f64; 3],
) -> Result<Dataset> {
    let total: f64 = split_fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 || split_fractions.iter().any(|f| *f < 0.0) {
        return Err(Error::invalid(
            "build_dataset",
            format!("split fractions must be non-negative and sum to 1, got {split_fractions:?}"),
        ));
    }
    let root_rng = Rng::new(seed).child("dataset");
    let n_train = ((count as f64) * split_fractions[0]).round() as usize;
    let n_val = ((count as f64) * (split_fractions[0] + split_fractions[1])).round() as usize;
    let mut records = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = root_rng.child_index(i as u64);
        let params = sample_gait_params(&mut rng);
        let motion = generate_walk(skel, &params, frames, fps)?;
        let head = derive_head_trajectory(skel, &motion)?;
        let split = if i < n_train {
            Split::Train
        } else if i < n_val {
            Split::Val
        } else {
            Split::Test
        };
        records.push(DatasetRecord { motion, head, split });
    }
    Ok(Dataset { records, seed })
}

/// Generates `base_count` walk PAIRS: the two members of a pair share every
/// gait parameter except a small symmetric relative offset on forward speed,
/// with stride frequency scaled by the same factor so stride length is
/// preserved. Their head tracks then differ only by a slowly growing
/// translation offset (a few centimetres by the last frame), while the body
/// motions lie far apart — conditions that are almost, but not quite,
/// interchangeable over clearly distinct motions. The two members of each
/// pair share every gait parameter except:
///
/// * `forward_speed`, scaled by (1 ± speed_delta_rel/2): a slow, purely
///   translational drift between their head trajectories, so the pair's
///   conditions differ only by a small low-frequency translation signature
///   (the head-chain rotations are untouched); and
/// * the right limb phase, offset by π: an antiphase right-leg swing that
///   cannot be seen from the head joint at all, yet separates the two
///   full-body motions by a large margin.
///
/// This shape of data matters for condition-perturbation studies: smooth
/// low-frequency noise on the head translations can drown exactly the slow
/// speed signature, making a perturbed condition genuinely ambiguous
/// between the pair, whereas the clean condition still identifies its motion.
/// Splits are assigned per pair so both members always land in the same split.
pub fn build_paired_dataset(
    skel: &Skeleton,
    base_count: usize,
    frames: usize,
    fps: f64,
    seed: u64,
    split_fractions: [f64; 3],
    speed_delta_rel: f64,
) -> Result<Dataset> {
    let total: f64 = split_fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 || split_fractions.iter().any(|f| *f < 0.0) {
        return Err(Error::invalid(
            "build_paired_dataset",
            format!("split fractions must be non-negative and sum to 1, got {split_fractions:?}"),
        ));
    }
    if !(0.0..1.0).contains(&speed_delta_rel) {
        return Err(Error::invalid(
            "build_paired_dataset",
            format!("speed_delta_rel must be in [0, 1), got {speed_delta_rel}"),
        ));
    }
    let root_rng = Rng::new(seed).child("paired-dataset");
    let n_train = ((base_count as f64) * split_fractions[0]).round() as usize;
    let n_val = ((base_count as f64) * (split_fractions[0] + split_fractions[1])).round() as usize;
    let mut records = Vec::with_capacity(base_count * 2);
    for i in 0..base_count {
        let mut rng = root_rng.child_index(i as u64);
        let base = sample_gait_params(&mut rng);
        let split = if i < n_train {
            Split::Train
        } else if i < n_val {
            Split::Val
        } else {
            Split::Test
        };
        for (sign, phase_flip) in [(-1.0, 0.0), (1.0, std::f64::consts::PI)] {
            let scale = 1.0 + sign * speed_delta_rel / 2.0;
            let params = GaitParams {
                forward_speed: base.forward_speed * scale,
                limb_phase: [base.limb_phase[0], base.limb_phase[1] + phase_flip],
                ..base
            };
            let motion = generate_walk(skel, &params, frames, fps)?;
            let head = derive_head_trajectory(skel, &motion)?;
            records.push(DatasetRecord { motion, head, split });
        }
    }
    Ok(Dataset { records, seed })
}

#[derive(Serialize, Deserialize)]
struct RecordDto {
    fps: f64,
    frames: usize,
    root: Vec<[f64; 7]>,
    local_rot: Vec<Vec<[f64; 4]>>,
    head: Vec<[f64; 7]>,
    split: Split,
}

impl RecordDto {
    fn from_record(rec: &DatasetRecord) -> Self {
        let motion = &rec.motion;
        RecordDto {
            fps: motion.fps(),
            frames: motion.frames(),
            root: motion.root().iter().map(Se3::to_wxyz_t).collect(),
            local_rot: motion
                .local_rot()
                .iter()
                .map(|frame| {
                    frame
                        .iter()
                        .map(|q| {
                            let c = q.coords;
                            [c.w, c.x, c.y, c.z]
                        })
                        .collect()
                })
                .collect(),
            head: rec.head.poses.iter().map(Se3::to_wxyz_t).collect(),
            split: rec.split,
        }
    }

    fn into_record(self) -> Result<DatasetRecord> {
        if self.root.len() != self.frames || self.local_rot.len() != self.frames || self.head.len() != self.frames {
            return Err(Error::Dataset(format!(
                "frame count {} disagrees with per-frame array lengths",
                self.frames
            )));
        }
        let root = self.root.iter().map(Se3::from_wxyz_t).collect();
        let local_rot = self
            .local_rot
            .into_iter()
            .map(|frame| {
                frame
                    .into_iter()
                    .map(|q| quat_from_wxyz(q[0], q[1], q[2], q[3]))
                    .collect()
            })
            .collect();
        let motion = MotionSequence::new(self.fps, root, local_rot)?;
        let head = HeadTrajectory {
            poses: self.head.iter().map(Se3::from_wxyz_t).collect(),
        };
        Ok(DatasetRecord {
            motion,
            head,
            split: self.split,
        })
    }
}

/// serde_json formatter that prints every float with 17 significant digits
/// (scientific notation), enough to reproduce any f64 bit-exactly on read.
struct SigDigits17;

impl serde_json::ser::Formatter for SigDigits17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        let mut s = String::new();
        write!(s, "{value:.16e}").expect("formatting f64 cannot fail");
        writer.write_all(s.as_bytes())
    }
}

fn record_to_line(rec: &DatasetRecord) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits17);
    RecordDto::from_record(rec).serialize(&mut ser)?;
    String::from_utf8(buf).map_err(|_| Error::Dataset("non-utf8 serialization".into()))
}

/// One JSON object per line; the trailing newline after the last record makes
/// truncation detectable.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for rec in &dataset.records {
        out.push_str(&record_to_line(rec)?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Loads and validates a dataset. The skeleton is reconstructed from the
/// joint count (the desk family is parametrized by torso length only) and
/// every record is checked for head/motion consistency. The generator seed is
/// not part of the file format (provenance lives in run manifests), so the
/// loaded dataset reports seed 0.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let dto: RecordDto = serde_json::from_str(&line).map_err(|e| {
            let last_ok = if i == 0 {
                "none".to_string()
            } else {
                format!("{}", i - 1)
            };
            Error::Dataset(format!(
                "parse error at record {i} (last complete record: {last_ok}): {e}"
            ))
        })?;
        records.push(dto.into_record().map_err(|e| {
            Error::Dataset(format!("record {i} is structurally invalid: {e}"))
        })?);
    }
    let dataset = Dataset { records, seed: 0 };
    if let Some(first) = dataset.records.first() {
        let joints = first.motion.joint_count();
        if joints >= 7 {
            let skel = Skeleton::with_torso_joints(joints - 6);
            dataset.check_consistency(&skel)?;
        }
    }
    Ok(dataset)
}
