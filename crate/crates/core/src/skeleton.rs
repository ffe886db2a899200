//! Skeleton topology, poses, and bone-length estimation.
//!
//! A skeleton is a rooted tree over named joints. Every non-root joint
//! defines one bone from its parent, and carries a reference joint that
//! fixes the roll of that bone's local frame (see [`crate::kinematics`]).
//! Positions are world-space meters.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::math::{pairwise_mean, Vec3};
use crate::tolerances::{COLLINEAR_SIN, DEGENERATE_BONE_M};

#[derive(Debug, Error, PartialEq)]
pub enum SkeletonError {
    #[error("joint name {name:?} is empty or contains whitespace")]
    BadJointName { name: String },
    #[error("duplicate joint name {name:?}")]
    DuplicateJointName { name: String },
    #[error("no root joint (every joint has a parent)")]
    NoRoot,
    #[error("multiple root joints: {first:?} and {second:?}")]
    MultipleRoots { first: String, second: String },
    #[error("joint {joint:?}: parent index {parent} out of range")]
    ParentOutOfRange { joint: String, parent: usize },
    #[error("parent indices form a cycle through joint {joint:?}")]
    ParentCycle { joint: String },
    #[error("joint {joint:?}: missing reference joint for its bone")]
    ReferenceMissing { joint: String },
    #[error("joint {joint:?}: reference index {reference} out of range")]
    ReferenceOutOfRange { joint: String, reference: usize },
    #[error("joint {joint:?}: reference joint must differ from the bone endpoints")]
    ReferenceIsEndpoint { joint: String },
    #[error("root joint {joint:?} must not carry a reference joint")]
    RootReference { joint: String },
    #[error("joint position {index} is not finite")]
    NonFinitePosition { index: usize },
    #[error("pose has {got} joints, topology expects {expected}")]
    JointCountMismatch { expected: usize, got: usize },
    #[error("frame {frame} has {got} joints, topology expects {expected}")]
    FrameJointCountMismatch { frame: usize, expected: usize, got: usize },
    #[error("sequence must contain at least one frame")]
    EmptySequence,
    #[error("frame rate {rate} must be positive and finite")]
    BadFrameRate { rate: f64 },
    #[error("rest bone into joint {joint:?} has zero length")]
    DegenerateRestBone { joint: String },
    #[error("reference joint for bone into {joint:?} is collinear with the bone in the rest pose")]
    CollinearRestReference { joint: String },
    #[error("expected {expected} bone lengths, got {got}")]
    BoneCountMismatch { expected: usize, got: usize },
    #[error("bone into joint {joint:?}: target length {value} must be positive and finite")]
    NonPositiveLength { joint: String, value: f64 },
    #[error("no shape profiles to average")]
    EmptyProfiles,
    #[error("shape profile {index} does not share key {key:?} with profile 0")]
    ProfileKeyMismatch { index: usize, key: String },
    #[error("shape parameter {name:?} has non-positive value {value}")]
    NonPositiveShapeValue { name: String, value: f64 },
}

/// One directed bone, identified by the joint it ends at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bone {
    /// Joint the bone starts at.
    pub parent: usize,
    /// Joint the bone ends at; also the bone's identity.
    pub child: usize,
    /// Third joint fixing the secondary axis of the bone's local frame.
    pub reference: usize,
}

/// Rooted joint tree with per-bone reference joints.
///
/// Joint order is the order names were given in; bone order is a fixed
/// topological order (parents before children) computed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonTopology {
    names: Vec<String>,
    parents: Vec<Option<usize>>,
    references: Vec<Option<usize>>,
    root: usize,
    bones: Vec<Bone>,
    bone_of: Vec<Option<usize>>,
}

impl SkeletonTopology {
    /// Validates and builds a topology. `parents[i] == None` marks the root;
    /// `references[i]` must be `Some` exactly for non-root joints.
    pub fn new(
        names: Vec<String>,
        parents: Vec<Option<usize>>,
        references: Vec<Option<usize>>,
    ) -> Result<Self, SkeletonError> {
        assert_eq!(names.len(), parents.len());
        assert_eq!(names.len(), references.len());
        let n = names.len();
        for name in &names {
            if name.is_empty() || name.chars().any(|c| c.is_whitespace()) {
                return Err(SkeletonError::BadJointName { name: name.clone() });
            }
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(SkeletonError::DuplicateJointName { name: name.clone() });
            }
        }
        let mut root = None;
        for (i, parent) in parents.iter().enumerate() {
            match parent {
                None => match root {
                    None => root = Some(i),
                    Some(r) => {
                        return Err(SkeletonError::MultipleRoots {
                            first: names[r].clone(),
                            second: names[i].clone(),
                        })
                    }
                },
                Some(p) if *p >= n => {
                    return Err(SkeletonError::ParentOutOfRange { joint: names[i].clone(), parent: *p })
                }
                Some(_) => {}
            }
        }
        let root = root.ok_or(SkeletonError::NoRoot)?;

        // Walk each parent chain; a chain longer than n joints revisits one.
        for start in 0..n {
            let mut cursor = start;
            for _ in 0..n {
                match parents[cursor] {
                    None => break,
                    Some(p) if p == cursor => {
                        return Err(SkeletonError::ParentCycle { joint: names[cursor].clone() })
                    }
                    Some(p) => cursor = p,
                }
            }
            if parents[cursor].is_some() {
                return Err(SkeletonError::ParentCycle { joint: names[start].clone() });
            }
        }

        for i in 0..n {
            match (parents[i], references[i]) {
                (None, Some(_)) => {
                    return Err(SkeletonError::RootReference { joint: names[i].clone() })
                }
                (Some(_), None) => {
                    return Err(SkeletonError::ReferenceMissing { joint: names[i].clone() })
                }
                (Some(p), Some(r)) => {
                    if r >= n {
                        return Err(SkeletonError::ReferenceOutOfRange {
                            joint: names[i].clone(),
                            reference: r,
                        });
                    }
                    if r == i || r == p {
                        return Err(SkeletonError::ReferenceIsEndpoint { joint: names[i].clone() });
                    }
                }
                (None, None) => {}
            }
        }

        // Topological bone order: breadth-first from the root, children in
        // joint-index order, so downstream iteration is deterministic.
        let mut bones = Vec::with_capacity(n - 1);
        let mut queue = vec![root];
        let mut head = 0;
        while head < queue.len() {
            let j = queue[head];
            head += 1;
            for c in 0..n {
                if parents[c] == Some(j) {
                    bones.push(Bone { parent: j, child: c, reference: references[c].unwrap() });
                    queue.push(c);
                }
            }
        }
        debug_assert_eq!(bones.len(), n - 1);
        let mut bone_of = vec![None; n];
        for (b, bone) in bones.iter().enumerate() {
            bone_of[bone.child] = Some(b);
        }

        Ok(SkeletonTopology { names, parents, references, root, bones, bone_of })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn joint_names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, joint: usize) -> &str {
        &self.names[joint]
    }

    pub fn parent_of(&self, joint: usize) -> Option<usize> {
        self.parents[joint]
    }

    pub fn reference_of(&self, joint: usize) -> Option<usize> {
        self.references[joint]
    }

    /// Bones in topological order (every parent bone precedes its children).
    pub fn bones(&self) -> &[Bone] {
        &self.bones
    }

    /// Index into [`Self::bones`] of the bone ending at `joint`.
    pub fn bone_ending_at(&self, joint: usize) -> Option<usize> {
        self.bone_of[joint]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// World-space joint positions for one frame. Conformance to a topology is
/// checked wherever a pose meets one.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose3D {
    positions: Vec<Vec3>,
}

impl Pose3D {
    pub fn new(positions: Vec<Vec3>) -> Result<Self, SkeletonError> {
        for (i, p) in positions.iter().enumerate() {
            if !p.is_finite() {
                return Err(SkeletonError::NonFinitePosition { index: i });
            }
        }
        Ok(Pose3D { positions })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn position(&self, joint: usize) -> Vec3 {
        self.positions[joint]
    }
}

/// A pose sequence bound to its topology. Never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence {
    topology: SkeletonTopology,
    frames: Vec<Pose3D>,
    frame_rate_hz: f64,
}

impl PoseSequence {
    pub fn new(
        topology: SkeletonTopology,
        frames: Vec<Pose3D>,
        frame_rate_hz: f64,
    ) -> Result<Self, SkeletonError> {
        if frames.is_empty() {
            return Err(SkeletonError::EmptySequence);
        }
        if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
            return Err(SkeletonError::BadFrameRate { rate: frame_rate_hz });
        }
        for (t, frame) in frames.iter().enumerate() {
            if frame.len() != topology.len() {
                return Err(SkeletonError::FrameJointCountMismatch {
                    frame: t,
                    expected: topology.len(),
                    got: frame.len(),
                });
            }
        }
        Ok(PoseSequence { topology, frames, frame_rate_hz })
    }

    pub fn topology(&self) -> &SkeletonTopology {
        &self.topology
    }

    pub fn frames(&self) -> &[Pose3D] {
        &self.frames
    }

    pub fn frame_rate_hz(&self) -> f64 {
        self.frame_rate_hz
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Per-bone lengths in meters, indexed like [`SkeletonTopology::bones`].
/// Values come straight from a pose, so a degenerate pose can yield zeros;
/// rest poses and retarget targets reject those at their own boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct BoneLengths {
    values: Vec<f64>,
}

impl BoneLengths {
    pub fn from_values(values: Vec<f64>) -> Self {
        BoneLengths { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, bone: usize) -> f64 {
        self.values[bone]
    }

    /// Uniformly scaled copy, e.g. for driving a taller target skeleton.
    pub fn scaled(&self, factor: f64) -> BoneLengths {
        BoneLengths { values: self.values.iter().map(|v| v * factor).collect() }
    }
}

/// Canonical pose defining a skeleton's bone lengths and frame references.
///
/// Construction checks that every bone has positive length and that every
/// reference joint is non-collinear with its bone, so frame construction on
/// the rest pose itself can never fail.
#[derive(Debug, Clone, PartialEq)]
pub struct RestPose {
    topology: SkeletonTopology,
    pose: Pose3D,
}

impl RestPose {
    pub fn new(topology: SkeletonTopology, pose: Pose3D) -> Result<Self, SkeletonError> {
        if pose.len() != topology.len() {
            return Err(SkeletonError::JointCountMismatch {
                expected: topology.len(),
                got: pose.len(),
            });
        }
        for bone in topology.bones() {
            let v = pose.position(bone.child) - pose.position(bone.parent);
            let len = v.norm();
            if len < DEGENERATE_BONE_M {
                return Err(SkeletonError::DegenerateRestBone {
                    joint: topology.name(bone.child).to_string(),
                });
            }
            let r = pose.position(bone.reference) - pose.position(bone.parent);
            let rn = r.norm();
            if rn < DEGENERATE_BONE_M || v.cross(r).norm() < COLLINEAR_SIN * len * rn {
                return Err(SkeletonError::CollinearRestReference {
                    joint: topology.name(bone.child).to_string(),
                });
            }
        }
        Ok(RestPose { topology, pose })
    }

    pub fn topology(&self) -> &SkeletonTopology {
        &self.topology
    }

    pub fn pose(&self) -> &Pose3D {
        &self.pose
    }

    /// Bone vector (child minus parent) in the rest pose.
    pub fn bone_vector(&self, bone: usize) -> Vec3 {
        let b = self.topology.bones()[bone];
        self.pose.position(b.child) - self.pose.position(b.parent)
    }

    pub fn bone_lengths(&self) -> BoneLengths {
        bone_lengths(&self.pose, &self.topology).expect("rest pose conforms to its topology")
    }
}

/// Euclidean length of every bone in one pose.
pub fn bone_lengths(pose: &Pose3D, topology: &SkeletonTopology) -> Result<BoneLengths, SkeletonError> {
    if pose.len() != topology.len() {
        return Err(SkeletonError::JointCountMismatch { expected: topology.len(), got: pose.len() });
    }
    let values = topology
        .bones()
        .iter()
        .map(|b| pose.position(b.child).distance(pose.position(b.parent)))
        .collect();
    Ok(BoneLengths::from_values(values))
}

/// How per-frame bone lengths are pooled into one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregator {
    Mean,
    /// Robust to occasional tracking glitches; the default.
    #[default]
    Median,
}

/// Aggregates per-frame bone lengths over a sequence. Subject skeletons are
/// stable over a walk, so the median of per-frame measurements recovers them
/// even with sporadic outlier frames.
pub fn estimate_skeleton(sequence: &PoseSequence, aggregator: Aggregator) -> BoneLengths {
    let topo = sequence.topology();
    let mut per_bone: Vec<Vec<f64>> = vec![Vec::with_capacity(sequence.len()); topo.bones().len()];
    for frame in sequence.frames() {
        for (b, bone) in topo.bones().iter().enumerate() {
            per_bone[b].push(frame.position(bone.child).distance(frame.position(bone.parent)));
        }
    }
    let values = per_bone
        .iter()
        .map(|samples| match aggregator {
            Aggregator::Mean => pairwise_mean(samples),
            Aggregator::Median => median(samples),
        })
        .collect();
    BoneLengths::from_values(values)
}

fn median(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Rescales a rest pose to the given bone lengths, preserving every bone's
/// direction and the root position. Joints are rebuilt root-outward, so the
/// subtree beyond a lengthened bone translates rigidly with it.
pub fn match_skeleton_lengths(
    rest: &RestPose,
    target: &BoneLengths,
) -> Result<RestPose, SkeletonError> {
    let topo = rest.topology();
    if target.len() != topo.bones().len() {
        return Err(SkeletonError::BoneCountMismatch {
            expected: topo.bones().len(),
            got: target.len(),
        });
    }
    for (b, bone) in topo.bones().iter().enumerate() {
        let v = target.get(b);
        if !(v.is_finite() && v > 0.0) {
            return Err(SkeletonError::NonPositiveLength {
                joint: topo.name(bone.child).to_string(),
                value: v,
            });
        }
    }
    let mut positions = vec![Vec3::ZERO; topo.len()];
    positions[topo.root()] = rest.pose().position(topo.root());
    for (b, bone) in topo.bones().iter().enumerate() {
        let dir = rest
            .bone_vector(b)
            .normalized()
            .expect("rest bones have positive length");
        positions[bone.child] = positions[bone.parent] + dir * target.get(b);
    }
    RestPose::new(rest.topology().clone(), Pose3D::new(positions)?)
}

/// Named body-shape parameters (e.g. limb circumferences), all positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeProfile {
    values: BTreeMap<String, f64>,
}

impl ShapeProfile {
    pub fn new(values: BTreeMap<String, f64>) -> Result<Self, SkeletonError> {
        for (name, v) in &values {
            if !(v.is_finite() && *v > 0.0) {
                return Err(SkeletonError::NonPositiveShapeValue { name: name.clone(), value: *v });
            }
        }
        Ok(ShapeProfile { values })
    }

    pub fn values(&self) -> &BTreeMap<String, f64> {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

/// Per-parameter mean over frame profiles. Shape parameters fluctuate with
/// pose estimation noise frame to frame; the subject's profile is defined as
/// their average. All profiles must carry the same parameter set.
pub fn frame_average_shape(profiles: &[ShapeProfile]) -> Result<ShapeProfile, SkeletonError> {
    let first = profiles.first().ok_or(SkeletonError::EmptyProfiles)?;
    for (i, p) in profiles.iter().enumerate().skip(1) {
        for key in p.values.keys() {
            if !first.values.contains_key(key) {
                return Err(SkeletonError::ProfileKeyMismatch { index: i, key: key.clone() });
            }
        }
        for key in first.values.keys() {
            if !p.values.contains_key(key) {
                return Err(SkeletonError::ProfileKeyMismatch { index: i, key: key.clone() });
            }
        }
    }
    let mut averaged = BTreeMap::new();
    for key in first.values.keys() {
        let samples: Vec<f64> = profiles.iter().map(|p| p.values[key]).collect();
        averaged.insert(key.clone(), pairwise_mean(&samples));
    }
    ShapeProfile::new(averaged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain3() -> SkeletonTopology {
        // root -> mid -> tip, plus a reference post off to the side.
        SkeletonTopology::new(
            vec!["root".into(), "mid".into(), "tip".into(), "post".into()],
            vec![None, Some(0), Some(1), Some(0)],
            vec![None, Some(3), Some(3), Some(1)],
        )
        .unwrap()
    }

    fn pose(points: &[[f64; 3]]) -> Pose3D {
        Pose3D::new(points.iter().map(|p| Vec3::from(*p)).collect()).unwrap()
    }

    #[test]
    fn bone_lengths_on_a_chain() {
        let topo = chain3();
        let p = pose(&[[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.9, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let lens = bone_lengths(&p, &topo).unwrap();
        // Bone order is topological: mid, post (children of root), then tip.
        assert_eq!(topo.bones()[0].child, 1);
        assert_eq!(topo.bones()[1].child, 3);
        assert_eq!(topo.bones()[2].child, 2);
        assert!((lens.get(0) - 0.5).abs() < 1e-15);
        assert!((lens.get(1) - 1.0).abs() < 1e-15);
        assert!((lens.get(2) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn coincident_joints_yield_zero_length() {
        let topo = chain3();
        let p = pose(&[[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.4, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let lens = bone_lengths(&p, &topo).unwrap();
        assert_eq!(lens.get(0), 0.0);
        // The same pose is rejected as a rest pose.
        assert_eq!(
            RestPose::new(topo, p).unwrap_err(),
            SkeletonError::DegenerateRestBone { joint: "mid".into() }
        );
    }

    #[test]
    fn joint_count_mismatch_is_reported() {
        let topo = chain3();
        let p = pose(&[[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]]);
        assert_eq!(
            bone_lengths(&p, &topo).unwrap_err(),
            SkeletonError::JointCountMismatch { expected: 4, got: 2 }
        );
    }

    #[test]
    fn cycle_is_rejected_naming_a_joint() {
        let err = SkeletonTopology::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![None, Some(2), Some(1)],
            vec![None, Some(0), Some(0)],
        )
        .unwrap_err();
        assert!(matches!(err, SkeletonError::ParentCycle { .. }), "{err}");
    }

    #[test]
    fn median_estimate_ignores_one_outlier_frame() {
        let topo = chain3();
        let clean = pose(&[[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.9, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let glitch = pose(&[[0.0, 0.0, 0.0], [0.8, 0.0, 0.0], [1.2, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let mut frames = vec![clean; 10];
        frames[3] = glitch;
        let seq = PoseSequence::new(topo, frames, 30.0).unwrap();
        let est = estimate_skeleton(&seq, Aggregator::Median);
        assert_eq!(est.get(0), 0.5);
        let mean = estimate_skeleton(&seq, Aggregator::Mean);
        assert!((mean.get(0) - 0.53).abs() < 1e-12);
    }

    #[test]
    fn mean_estimate_averages_lengths() {
        let topo = SkeletonTopology::new(
            vec!["root".into(), "mid".into(), "post".into()],
            vec![None, Some(0), Some(0)],
            vec![None, Some(2), Some(1)],
        )
        .unwrap();
        let frames = [0.4, 0.5, 0.6]
            .iter()
            .map(|l| pose(&[[0.0, 0.0, 0.0], [*l, 0.0, 0.0], [0.0, 1.0, 0.0]]))
            .collect();
        let seq = PoseSequence::new(topo, frames, 30.0).unwrap();
        let est = estimate_skeleton(&seq, Aggregator::Mean);
        assert!((est.get(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_sequence_is_rejected_at_construction() {
        let topo = chain3();
        assert_eq!(PoseSequence::new(topo, vec![], 30.0).unwrap_err(), SkeletonError::EmptySequence);
    }

    #[test]
    fn match_lengths_identity_and_uniform_scale() {
        let topo = chain3();
        let rest = RestPose::new(
            topo,
            pose(&[[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.9, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        )
        .unwrap();
        let same = match_skeleton_lengths(&rest, &rest.bone_lengths()).unwrap();
        for (a, b) in same.pose().positions().iter().zip(rest.pose().positions()) {
            assert!(a.distance(*b) < 1e-12);
        }
        let doubled = match_skeleton_lengths(&rest, &rest.bone_lengths().scaled(2.0)).unwrap();
        assert!(doubled.pose().position(2).distance(Vec3::new(1.8, 0.0, 0.0)) < 1e-12);
        assert_eq!(doubled.pose().position(0), Vec3::ZERO);
    }

    #[test]
    fn match_lengths_moves_only_the_rescaled_subtree() {
        let topo = chain3();
        let rest = RestPose::new(
            topo,
            pose(&[[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.9, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        )
        .unwrap();
        // Lengthen only the tip bone (bone order: mid, post, tip).
        let target = BoneLengths::from_values(vec![0.5, 1.0, 0.8]);
        let out = match_skeleton_lengths(&rest, &target).unwrap();
        assert!(out.pose().position(1).distance(Vec3::new(0.5, 0.0, 0.0)) < 1e-12);
        assert!(out.pose().position(2).distance(Vec3::new(1.3, 0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn match_lengths_rejects_nonpositive_targets() {
        let topo = chain3();
        let rest = RestPose::new(
            topo,
            pose(&[[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.9, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        )
        .unwrap();
        let err =
            match_skeleton_lengths(&rest, &BoneLengths::from_values(vec![0.5, 0.0, 0.4])).unwrap_err();
        assert!(matches!(err, SkeletonError::NonPositiveLength { .. }), "{err}");
    }

    #[test]
    fn shape_average_and_key_mismatch() {
        let p1 = ShapeProfile::new(BTreeMap::from([("waist".to_string(), 0.8), ("hip".to_string(), 1.0)]))
            .unwrap();
        let p2 = ShapeProfile::new(BTreeMap::from([("waist".to_string(), 0.9), ("hip".to_string(), 1.1)]))
            .unwrap();
        let avg = frame_average_shape(&[p1.clone(), p2]).unwrap();
        assert!((avg.get("waist").unwrap() - 0.85).abs() < 1e-15);
        assert!((avg.get("hip").unwrap() - 1.05).abs() < 1e-15);
        assert_eq!(frame_average_shape(std::slice::from_ref(&p1)).unwrap(), p1);

        let odd = ShapeProfile::new(BTreeMap::from([("waist".to_string(), 0.9)])).unwrap();
        let err = frame_average_shape(&[p1, odd]).unwrap_err();
        assert!(matches!(err, SkeletonError::ProfileKeyMismatch { index: 1, .. }), "{err}");
        assert_eq!(frame_average_shape(&[]).unwrap_err(), SkeletonError::EmptyProfiles);
    }

    #[test]
    fn collinear_rest_reference_is_rejected() {
        // Straight arm: shoulder, elbow, wrist on one line, wrist referencing shoulder.
        let topo = SkeletonTopology::new(
            vec!["shoulder".into(), "elbow".into(), "wrist".into(), "post".into()],
            vec![None, Some(0), Some(1), Some(0)],
            vec![None, Some(3), Some(0), Some(1)],
        )
        .unwrap();
        let p = pose(&[[0.0, 0.0, 0.0], [0.3, 0.0, 0.0], [0.6, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert_eq!(
            RestPose::new(topo, p).unwrap_err(),
            SkeletonError::CollinearRestReference { joint: "wrist".into() }
        );
    }
}
