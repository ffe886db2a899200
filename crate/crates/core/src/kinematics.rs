//! Quaternion motion retargeting over skeleton trees.
//!
//! Each bone gets an orthonormal local frame built from its two endpoints
//! plus a reference joint; the frame's quaternion is the bone's world
//! rotation. Retargeting measures, per bone, the world rotation taking the
//! rest frame onto the observed frame, re-expresses it relative to the
//! parent bone, and drives the target skeleton with the result through
//! forward kinematics. Bone directions are reproduced exactly, so a target
//! with the same bone lengths lands on the source joints, and a rescaled
//! target moves with identical joint angles.

use rayon::prelude::*;
use thiserror::Error;

use crate::math::{Quaternion, Vec3};
use crate::skeleton::{Pose3D, PoseSequence, RestPose, SkeletonTopology};
use crate::tolerances::{COLLINEAR_SIN, DEGENERATE_BONE_M};

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("bone into joint {joint:?} has zero length")]
    DegenerateBone { joint: String },
    #[error("reference joint for bone into {joint:?} is collinear with the bone")]
    CollinearReference { joint: String },
    #[error("pose has {got} joints, topology expects {expected}")]
    JointCountMismatch { expected: usize, got: usize },
    #[error("rotation set has {got} bones, topology expects {expected}")]
    BoneCountMismatch { expected: usize, got: usize },
    #[error("expected {expected:?}-space rotations, got {got:?}")]
    SpaceMismatch { expected: RotationSpace, got: RotationSpace },
    #[error("topologies differ: {context}")]
    TopologyMismatch { context: &'static str },
    #[error("frame {frame}: {source}")]
    AtFrame {
        frame: usize,
        #[source]
        source: Box<KinematicsError>,
    },
}

/// Failure modes of raw frame construction, before joint names are known.
#[derive(Debug, Error, PartialEq, Eq, Clone, Copy)]
pub enum FrameError {
    #[error("bone endpoints coincide")]
    DegenerateBone,
    #[error("reference point is collinear with the bone axis")]
    CollinearReference,
}

/// Orthonormal right-handed frame attached to a bone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    /// Unit vector along the bone, parent to child.
    pub primary: Vec3,
    /// Unit vector toward the reference joint, orthogonalized against the bone.
    pub secondary: Vec3,
    /// `primary × secondary`.
    pub tertiary: Vec3,
}

impl LocalFrame {
    /// Quaternion rotating the world basis onto this frame
    /// (x to primary, y to secondary, z to tertiary).
    pub fn to_quaternion(&self) -> Quaternion {
        Quaternion::from_basis(self.primary, self.secondary, self.tertiary)
    }
}

/// Whether rotations are absolute or relative to the parent bone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationSpace {
    World,
    Local,
}

/// One rotation per bone for a single frame, ordered like
/// [`SkeletonTopology::bones`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoneRotationSet {
    space: RotationSpace,
    rotations: Vec<Quaternion>,
}

impl BoneRotationSet {
    pub fn new(space: RotationSpace, rotations: Vec<Quaternion>) -> Self {
        BoneRotationSet { space, rotations }
    }

    pub fn space(&self) -> RotationSpace {
        self.space
    }

    pub fn rotations(&self) -> &[Quaternion] {
        &self.rotations
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn get(&self, bone: usize) -> Quaternion {
        self.rotations[bone]
    }
}

/// Builds a bone's local frame from its endpoints and a reference point.
///
/// The primary axis runs parent to child; the secondary axis is the
/// component of `reference - parent` orthogonal to the bone; the tertiary
/// axis completes the right-handed basis.
pub fn build_local_frame(parent: Vec3, child: Vec3, reference: Vec3) -> Result<LocalFrame, FrameError> {
    let v = child - parent;
    let len = v.norm();
    if len < DEGENERATE_BONE_M {
        return Err(FrameError::DegenerateBone);
    }
    let primary = v * (1.0 / len);
    let r = reference - parent;
    let rn = r.norm();
    if rn < DEGENERATE_BONE_M || v.cross(r).norm() < COLLINEAR_SIN * len * rn {
        return Err(FrameError::CollinearReference);
    }
    frame_from_seed(primary, r).ok_or(FrameError::CollinearReference)
}

/// Gram-Schmidt step shared by strict and fallback construction: seed minus
/// its component along the bone. `None` when the residual is too small to
/// normalize.
fn frame_from_seed(primary: Vec3, seed: Vec3) -> Option<LocalFrame> {
    let secondary = (seed - primary * seed.dot(primary)).normalized()?;
    Some(LocalFrame { primary, secondary, tertiary: primary.cross(secondary) })
}

/// World axis with the smallest projection on the bone; used when no usable
/// reference direction exists. Ties resolve in x, y, z order.
fn least_aligned_world_axis(primary: Vec3) -> Vec3 {
    let candidates = [Vec3::X, Vec3::Y, Vec3::Z];
    let mut best = candidates[0];
    let mut best_dot = f64::INFINITY;
    for axis in candidates {
        let d = axis.dot(primary).abs();
        if d < best_dot {
            best_dot = d;
            best = axis;
        }
    }
    best
}

/// Per-bone world rotations for one pose: the quaternion mapping the world
/// basis onto each bone's local frame.
pub fn world_rotations(
    pose: &Pose3D,
    topology: &SkeletonTopology,
) -> Result<BoneRotationSet, KinematicsError> {
    if pose.len() != topology.len() {
        return Err(KinematicsError::JointCountMismatch {
            expected: topology.len(),
            got: pose.len(),
        });
    }
    let mut rotations = Vec::with_capacity(topology.bones().len());
    for bone in topology.bones() {
        let frame = build_local_frame(
            pose.position(bone.parent),
            pose.position(bone.child),
            pose.position(bone.reference),
        )
        .map_err(|e| named(e, topology, bone.child))?;
        rotations.push(frame.to_quaternion());
    }
    Ok(BoneRotationSet::new(RotationSpace::World, rotations))
}

fn named(e: FrameError, topology: &SkeletonTopology, child: usize) -> KinematicsError {
    let joint = topology.name(child).to_string();
    match e {
        FrameError::DegenerateBone => KinematicsError::DegenerateBone { joint },
        FrameError::CollinearReference => KinematicsError::CollinearReference { joint },
    }
}

/// Re-expresses world rotations relative to each bone's parent bone.
/// Bones whose parent joint is the root keep their world rotation.
pub fn local_rotations(
    world: &BoneRotationSet,
    topology: &SkeletonTopology,
) -> Result<BoneRotationSet, KinematicsError> {
    if world.space() != RotationSpace::World {
        return Err(KinematicsError::SpaceMismatch {
            expected: RotationSpace::World,
            got: world.space(),
        });
    }
    if world.len() != topology.bones().len() {
        return Err(KinematicsError::BoneCountMismatch {
            expected: topology.bones().len(),
            got: world.len(),
        });
    }
    let mut rotations = Vec::with_capacity(world.len());
    for (b, bone) in topology.bones().iter().enumerate() {
        let q = match topology.bone_ending_at(bone.parent) {
            None => world.get(b),
            Some(pb) => world.get(pb).conjugate().compose(world.get(b)),
        };
        rotations.push(q);
    }
    Ok(BoneRotationSet::new(RotationSpace::Local, rotations))
}

/// Local drive rotations that, applied to `rest` through
/// [`forward_kinematics`], reproduce every bone direction of `target`.
///
/// Per bone, the world correction `g = world(target) ⊗ world(rest)⁻¹` maps
/// the rest frame onto the target frame; the drive is `g` re-expressed
/// relative to the parent bone's correction, so a target that is a rigid
/// rotation of the rest pose factors into a single root rotation with
/// identity drives below it.
pub fn retarget_frame(rest: &RestPose, target: &Pose3D) -> Result<BoneRotationSet, KinematicsError> {
    let ws = world_rotations(rest.pose(), rest.topology())
        .expect("rest poses are frame-valid by construction");
    let wt = world_rotations(target, rest.topology())?;
    Ok(drives_from_worlds(&ws, &wt, rest.topology()))
}

fn drives_from_worlds(
    ws: &BoneRotationSet,
    wt: &BoneRotationSet,
    topology: &SkeletonTopology,
) -> BoneRotationSet {
    let bones = topology.bones();
    let mut corrections = Vec::with_capacity(bones.len());
    for b in 0..bones.len() {
        corrections.push(wt.get(b).compose(ws.get(b).conjugate()));
    }
    let mut drives = Vec::with_capacity(bones.len());
    for (b, bone) in bones.iter().enumerate() {
        let q = match topology.bone_ending_at(bone.parent) {
            None => corrections[b],
            Some(pb) => corrections[pb].conjugate().compose(corrections[b]),
        };
        drives.push(q);
    }
    BoneRotationSet::new(RotationSpace::Local, drives)
}

/// Reconstructs joint positions from local drive rotations.
///
/// Joints are rebuilt in topological order: each bone's rest vector is
/// rotated by the parent-chain composition of drives and added to the parent
/// joint; the root sits at `root_position`.
pub fn forward_kinematics(
    rest: &RestPose,
    drive: &BoneRotationSet,
    root_position: Vec3,
) -> Result<Pose3D, KinematicsError> {
    if drive.space() != RotationSpace::Local {
        return Err(KinematicsError::SpaceMismatch {
            expected: RotationSpace::Local,
            got: drive.space(),
        });
    }
    let topo = rest.topology();
    if drive.len() != topo.bones().len() {
        return Err(KinematicsError::BoneCountMismatch {
            expected: topo.bones().len(),
            got: drive.len(),
        });
    }
    let mut accumulated = vec![Quaternion::IDENTITY; topo.bones().len()];
    let mut positions = vec![Vec3::ZERO; topo.len()];
    positions[topo.root()] = root_position;
    for (b, bone) in topo.bones().iter().enumerate() {
        let acc = match topo.bone_ending_at(bone.parent) {
            None => drive.get(b),
            Some(pb) => accumulated[pb].compose(drive.get(b)),
        };
        accumulated[b] = acc;
        positions[bone.child] = positions[bone.parent] + acc.rotate(rest.bone_vector(b));
    }
    Ok(Pose3D::new(positions).expect("rotations of finite vectors are finite"))
}

/// Drive rotations plus the reconstructed motion on the target skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct RetargetResult {
    /// Per-frame local drive rotations.
    pub drives: Vec<BoneRotationSet>,
    /// Forward-kinematics reconstruction on the target skeleton, with the
    /// source root trajectory.
    pub sequence: PoseSequence,
}

/// Retargets a whole sequence from `source_rest` onto `target_rest`.
///
/// Reference joints may drift collinear with their bone mid-sequence; such
/// frames reuse the previous frame's secondary axis (re-orthogonalized), so
/// twist stays continuous instead of erroring. A collinear first frame falls
/// back to the world axis least aligned with the bone. This carries state
/// across frames, so frame axes are resolved serially first; the per-frame
/// retarget and reconstruction then run in parallel with a fixed output
/// order, making results independent of thread count.
pub fn retarget_sequence(
    source: &PoseSequence,
    source_rest: &RestPose,
    target_rest: &RestPose,
) -> Result<RetargetResult, KinematicsError> {
    if source.topology() != source_rest.topology() {
        return Err(KinematicsError::TopologyMismatch { context: "source sequence vs source rest" });
    }
    if source_rest.topology() != target_rest.topology() {
        return Err(KinematicsError::TopologyMismatch { context: "source rest vs target rest" });
    }
    let topo = source.topology();
    let ws = world_rotations(source_rest.pose(), topo)
        .expect("rest poses are frame-valid by construction");

    let world_sets = resolve_world_rotations(source, topo)?;

    let frames: Vec<(BoneRotationSet, Pose3D)> = world_sets
        .par_iter()
        .zip(source.frames().par_iter())
        .map(|(wt, src_frame)| {
            let drives = drives_from_worlds(&ws, wt, topo);
            let pose = forward_kinematics(target_rest, &drives, src_frame.position(topo.root()))
                .expect("drive sets conform to the shared topology");
            (drives, pose)
        })
        .collect();

    let (drives, poses): (Vec<_>, Vec<_>) = frames.into_iter().unzip();
    let sequence = PoseSequence::new(topo.clone(), poses, source.frame_rate_hz())
        .expect("reconstruction keeps frame count and joint counts");
    Ok(RetargetResult { drives, sequence })
}

/// Serial pass building per-frame world rotations with the cross-frame
/// secondary-axis fallback. The first failure aborts with its frame index.
fn resolve_world_rotations(
    source: &PoseSequence,
    topo: &SkeletonTopology,
) -> Result<Vec<BoneRotationSet>, KinematicsError> {
    let bones = topo.bones();
    let mut prev_secondary: Vec<Option<Vec3>> = vec![None; bones.len()];
    let mut out = Vec::with_capacity(source.len());
    for (t, frame) in source.frames().iter().enumerate() {
        let mut rotations = Vec::with_capacity(bones.len());
        for (b, bone) in bones.iter().enumerate() {
            let parent = frame.position(bone.parent);
            let child = frame.position(bone.child);
            let reference = frame.position(bone.reference);
            let frame_axes = match build_local_frame(parent, child, reference) {
                Ok(f) => f,
                Err(FrameError::DegenerateBone) => {
                    return Err(KinematicsError::AtFrame {
                        frame: t,
                        source: Box::new(named(FrameError::DegenerateBone, topo, bone.child)),
                    })
                }
                Err(FrameError::CollinearReference) => {
                    let primary = (child - parent)
                        .normalized()
                        .expect("degenerate bones were rejected above");
                    let carried = prev_secondary[b].and_then(|s| frame_from_seed(primary, s));
                    match carried {
                        Some(f) => f,
                        None => frame_from_seed(primary, least_aligned_world_axis(primary))
                            .expect("a least-aligned world axis is never collinear"),
                    }
                }
            };
            prev_secondary[b] = Some(frame_axes.secondary);
            rotations.push(frame_axes.to_quaternion());
        }
        out.push(BoneRotationSet::new(RotationSpace::World, rotations));
    }
    Ok(out)
}
