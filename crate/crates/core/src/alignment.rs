//! Alignment quality metrics between two pose sequences: mean per-joint
//! position error (mm) and mean per-bone joint-angle error (degrees).
//!
//! Both metrics pool uniformly over (frame, element) pairs, and all means
//! use fixed-order pairwise summation, so results are bit-stable across
//! runs and thread counts.

use thiserror::Error;

use crate::kinematics::{local_rotations, world_rotations, KinematicsError};
use crate::math::pairwise_mean;
use crate::skeleton::PoseSequence;

#[derive(Debug, Error, PartialEq)]
pub enum AlignmentError {
    #[error("sequences have different topologies")]
    TopologyMismatch,
    #[error("sequences have {a} and {b} frames")]
    FrameCountMismatch { a: usize, b: usize },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// Full alignment breakdown between two sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentReport {
    pub frame_count: usize,
    /// Pooled over every (frame, joint) pair, in millimeters.
    pub mean_joint_position_error_mm: f64,
    /// Pooled over every (frame, bone) pair, in degrees.
    pub mean_joint_angle_error_deg: f64,
    /// Per-joint means over frames, keyed by joint name.
    pub per_joint_position_error_mm: Vec<(String, f64)>,
    /// Per-bone means over frames, keyed by the bone's child joint name.
    pub per_bone_angle_error_deg: Vec<(String, f64)>,
}

fn check_compatible(a: &PoseSequence, b: &PoseSequence) -> Result<(), AlignmentError> {
    if a.topology() != b.topology() {
        return Err(AlignmentError::TopologyMismatch);
    }
    if a.len() != b.len() {
        return Err(AlignmentError::FrameCountMismatch { a: a.len(), b: b.len() });
    }
    Ok(())
}

/// Joint-major table of position errors: `errors[joint][frame]` in mm.
fn position_errors(a: &PoseSequence, b: &PoseSequence, root_relative: bool) -> Vec<Vec<f64>> {
    let joints = a.topology().len();
    let root = a.topology().root();
    let mut errors = vec![Vec::with_capacity(a.len()); joints];
    for (fa, fb) in a.frames().iter().zip(b.frames()) {
        for (j, joint_errors) in errors.iter_mut().enumerate().take(joints) {
            let d = if root_relative {
                let pa = fa.position(j) - fa.position(root);
                let pb = fb.position(j) - fb.position(root);
                pa.distance(pb)
            } else {
                fa.position(j).distance(fb.position(j))
            };
            joint_errors.push(d * 1000.0);
        }
    }
    errors
}

/// Bone-major table of geodesic angles between local rotations, in degrees.
fn angle_errors(a: &PoseSequence, b: &PoseSequence) -> Result<Vec<Vec<f64>>, AlignmentError> {
    let topo = a.topology();
    let bones = topo.bones().len();
    let mut errors = vec![Vec::with_capacity(a.len()); bones];
    for (t, (fa, fb)) in a.frames().iter().zip(b.frames()).enumerate() {
        let la = local_rotations(&world_rotations(fa, topo).map_err(|e| at_frame(t, e))?, topo)
            .map_err(|e| at_frame(t, e))?;
        let lb = local_rotations(&world_rotations(fb, topo).map_err(|e| at_frame(t, e))?, topo)
            .map_err(|e| at_frame(t, e))?;
        for (bone, bone_errors) in errors.iter_mut().enumerate().take(bones) {
            bone_errors.push(la.get(bone).angle_to(lb.get(bone)).to_degrees());
        }
    }
    Ok(errors)
}

fn at_frame(frame: usize, source: KinematicsError) -> AlignmentError {
    AlignmentError::Kinematics(KinematicsError::AtFrame { frame, source: Box::new(source) })
}

fn pooled_mean(table: &[Vec<f64>]) -> f64 {
    let flat: Vec<f64> = table.iter().flatten().copied().collect();
    if flat.is_empty() {
        0.0
    } else {
        pairwise_mean(&flat)
    }
}

/// Mean per-joint position error in millimeters, pooled over every
/// (frame, joint) pair. With `root_relative`, each frame's root position is
/// subtracted from both poses first, removing trajectory differences.
pub fn mpjpe(a: &PoseSequence, b: &PoseSequence, root_relative: bool) -> Result<f64, AlignmentError> {
    check_compatible(a, b)?;
    Ok(pooled_mean(&position_errors(a, b, root_relative)))
}

/// Mean geodesic angle between per-bone local rotations, in degrees,
/// pooled over every (frame, bone) pair.
pub fn joint_angle_error(a: &PoseSequence, b: &PoseSequence) -> Result<f64, AlignmentError> {
    check_compatible(a, b)?;
    Ok(pooled_mean(&angle_errors(a, b)?))
}

/// Both metrics plus per-element breakdowns. The report means are computed
/// from the same pooled samples as [`mpjpe`] and [`joint_angle_error`].
pub fn alignment_report(
    a: &PoseSequence,
    b: &PoseSequence,
    root_relative: bool,
) -> Result<AlignmentReport, AlignmentError> {
    check_compatible(a, b)?;
    let topo = a.topology();
    let positions = position_errors(a, b, root_relative);
    let angles = angle_errors(a, b)?;
    let per_joint = topo
        .joint_names()
        .iter()
        .zip(&positions)
        .map(|(name, samples)| (name.clone(), pairwise_mean(samples)))
        .collect();
    let per_bone = topo
        .bones()
        .iter()
        .zip(&angles)
        .map(|(bone, samples)| (topo.name(bone.child).to_string(), pairwise_mean(samples)))
        .collect();
    Ok(AlignmentReport {
        frame_count: a.len(),
        mean_joint_position_error_mm: pooled_mean(&positions),
        mean_joint_angle_error_deg: pooled_mean(&angles),
        per_joint_position_error_mm: per_joint,
        per_bone_angle_error_deg: per_bone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{Quaternion, Vec3};
    use crate::skeleton::{Pose3D, SkeletonTopology};

    fn pose(points: &[[f64; 3]]) -> Pose3D {
        Pose3D::new(points.iter().map(|p| Vec3::from(*p)).collect()).unwrap()
    }

    fn tri_topology() -> SkeletonTopology {
        SkeletonTopology::new(
            vec!["root".into(), "mid".into(), "post".into()],
            vec![None, Some(0), Some(0)],
            vec![None, Some(2), Some(1)],
        )
        .unwrap()
    }

    fn seq(topo: &SkeletonTopology, frames: Vec<Pose3D>) -> PoseSequence {
        PoseSequence::new(topo.clone(), frames, 30.0).unwrap()
    }

    #[test]
    fn identical_sequences_score_zero() {
        let topo = tri_topology();
        let a = seq(&topo, vec![pose(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])]);
        assert_eq!(mpjpe(&a, &a, false).unwrap(), 0.0);
        assert_eq!(joint_angle_error(&a, &a).unwrap(), 0.0);
        let report = alignment_report(&a, &a, false).unwrap();
        assert_eq!(report.mean_joint_position_error_mm, 0.0);
        assert_eq!(report.mean_joint_angle_error_deg, 0.0);
    }

    #[test]
    fn constant_offset_reads_in_millimeters() {
        let topo = tri_topology();
        let base = pose(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let shifted = Pose3D::new(
            base.positions().iter().map(|p| *p + Vec3::new(0.01, 0.0, 0.0)).collect(),
        )
        .unwrap();
        let a = seq(&topo, vec![base]);
        let b = seq(&topo, vec![shifted]);
        assert!((mpjpe(&a, &b, false).unwrap() - 10.0).abs() < 1e-9);
        // The offset is a pure translation, so root-relative error vanishes.
        assert!(mpjpe(&a, &b, true).unwrap() < 1e-12);
    }

    #[test]
    fn pooling_averages_per_joint_offsets() {
        let topo = tri_topology();
        let a = seq(&topo, vec![pose(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])]);
        // Offsets 0, 20 mm, 10 mm pool to 10 mm.
        let b = seq(&topo, vec![pose(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.02], [0.0, 1.0, 0.01]])]);
        assert!((mpjpe(&a, &b, false).unwrap() - 10.0).abs() < 1e-9);
        assert_eq!(mpjpe(&a, &b, false).unwrap(), mpjpe(&b, &a, false).unwrap());
    }

    #[test]
    fn single_30_degree_bone_among_three_pools_to_ten() {
        // Geometry chosen so rotating the tip bone 30 degrees about +z turns
        // its whole frame by exactly that rotation: the reference offset for
        // the tip bone points along +z (the rotation axis) and the bone lies
        // in the xy plane.
        let topo = SkeletonTopology::new(
            vec!["root".into(), "up".into(), "mid".into(), "tip".into()],
            vec![None, Some(0), Some(0), Some(2)],
            vec![None, Some(2), Some(1), Some(1)],
        )
        .unwrap();
        let a = pose(&[[0.0, 0.0, 0.0], [1.0, 0.0, 1.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        let ang = 30f64.to_radians();
        let tip = [1.0 + ang.cos(), ang.sin(), 0.0];
        let b = pose(&[[0.0, 0.0, 0.0], [1.0, 0.0, 1.0], [1.0, 0.0, 0.0], tip]);
        let sa = seq(&topo, vec![a]);
        let sb = seq(&topo, vec![b]);
        let err = joint_angle_error(&sa, &sb).unwrap();
        assert!((err - 10.0).abs() < 1e-9, "got {err}");
    }

    #[test]
    fn shared_rotation_leaves_both_metrics_unchanged() {
        let topo = tri_topology();
        let a0 = pose(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let b0 = pose(&[[0.1, 0.0, 0.0], [0.9, 0.3, 0.0], [0.0, 1.1, 0.2]]);
        let q = Quaternion::from_axis_angle(Vec3::new(1.0, 2.0, 3.0), 0.9);
        let rot = |p: &Pose3D| {
            Pose3D::new(p.positions().iter().map(|v| q.rotate(*v)).collect()).unwrap()
        };
        let (a, b) = (seq(&topo, vec![a0.clone()]), seq(&topo, vec![b0.clone()]));
        let (ra, rb) = (seq(&topo, vec![rot(&a0)]), seq(&topo, vec![rot(&b0)]));
        let dp = (mpjpe(&a, &b, false).unwrap() - mpjpe(&ra, &rb, false).unwrap()).abs();
        assert!(dp < 1e-9, "position error moved by {dp}");
        let da = (joint_angle_error(&a, &b).unwrap() - joint_angle_error(&ra, &rb).unwrap()).abs();
        assert!(da < 1e-9, "angle error moved by {da}");
    }

    #[test]
    fn report_means_match_breakdowns() {
        let topo = tri_topology();
        let a = seq(
            &topo,
            vec![
                pose(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
                pose(&[[0.0, 0.0, 0.0], [0.8, 0.6, 0.0], [0.0, 1.0, 0.0]]),
            ],
        );
        let b = seq(
            &topo,
            vec![
                pose(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.03], [0.0, 1.0, 0.0]]),
                pose(&[[0.0, 0.0, 0.0], [0.6, 0.8, 0.0], [0.0, 0.9, 0.1]]),
            ],
        );
        let report = alignment_report(&a, &b, false).unwrap();
        let joint_avg: f64 = report.per_joint_position_error_mm.iter().map(|(_, v)| v).sum::<f64>()
            / report.per_joint_position_error_mm.len() as f64;
        assert!((report.mean_joint_position_error_mm - joint_avg).abs() < 1e-9);
        let bone_avg: f64 = report.per_bone_angle_error_deg.iter().map(|(_, v)| v).sum::<f64>()
            / report.per_bone_angle_error_deg.len() as f64;
        assert!((report.mean_joint_angle_error_deg - bone_avg).abs() < 1e-9);
        assert_eq!(report.frame_count, 2);
    }

    #[test]
    fn mismatches_are_structural_errors() {
        let topo = tri_topology();
        let a = seq(&topo, vec![pose(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])]);
        let b = seq(
            &topo,
            vec![
                pose(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
                pose(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
            ],
        );
        assert_eq!(
            mpjpe(&a, &b, false).unwrap_err(),
            AlignmentError::FrameCountMismatch { a: 1, b: 2 }
        );
        let other = SkeletonTopology::new(
            vec!["root".into(), "alt".into(), "post".into()],
            vec![None, Some(0), Some(0)],
            vec![None, Some(2), Some(1)],
        )
        .unwrap();
        let c = PoseSequence::new(
            other,
            vec![pose(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])],
            30.0,
        )
        .unwrap();
        assert_eq!(mpjpe(&a, &c, false).unwrap_err(), AlignmentError::TopologyMismatch);
    }

    #[test]
    fn degenerate_bone_error_carries_its_frame() {
        let topo = tri_topology();
        let good = pose(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let bad = pose(&[[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let a = seq(&topo, vec![good.clone(), bad]);
        let b = seq(&topo, vec![good.clone(), good]);
        match joint_angle_error(&a, &b).unwrap_err() {
            AlignmentError::Kinematics(KinematicsError::AtFrame { frame, .. }) => {
                assert_eq!(frame, 1)
            }
            other => panic!("unexpected error {other}"),
        }
    }
}
