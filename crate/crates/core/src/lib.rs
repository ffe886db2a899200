//! Identity-preserving gait kinematics toolkit.
//!
//! The crate covers the desk-scale, geometry-and-metrics side of a
//! pose-based gait pipeline:
//!
//! - [`skeleton`]: joint trees, poses, bone lengths, and skeleton matching.
//! - [`kinematics`]: quaternion local frames, drive rotations, forward
//!   kinematics, and motion retargeting between skeletons of different
//!   proportions.
//! - [`alignment`]: mean per-joint position error (millimeters) and mean
//!   joint-angle error (degrees) between aligned sequences.
//! - [`thickness`]: silhouette-based relative clothing thickness and its
//!   ten-level THK binning.
//! - [`gon`]: reference math for per-strip feature-map normalization and the
//!   two-layer normalized head.
//! - [`retrieval`]: Rank-1 / mAP retrieval evaluation with the THK0-gallery
//!   protocol.
//! - [`io`]: versioned, diff-able file formats with located parse errors.
//! - [`walker`]: a deterministic 17-joint synthetic walker for fixtures.
//! - [`fixtures`]: seeded random generators shared by tests and benchmarks.
//!
//! Numerical reductions use fixed-order pairwise summation, and every
//! parallel path collects in deterministic order, so identical inputs give
//! bit-identical outputs regardless of thread count.

pub mod alignment;
pub mod fixtures;
pub mod gon;
pub mod io;
pub mod kinematics;
pub mod math;
pub mod retrieval;
pub mod skeleton;
pub mod thickness;
pub mod tolerances;
pub mod walker;

pub use alignment::{alignment_report, joint_angle_error, mpjpe, AlignmentError, AlignmentReport};
pub use gon::{
    gon_fc_forward, gon_forward, gon_stats, FcWeights, FeatureMap, GonAffine, GonError, GonParams,
    GonStats, LinearMap, StripPartition, DEFAULT_EPSILON,
};
pub use kinematics::{
    build_local_frame, forward_kinematics, local_rotations, retarget_frame, retarget_sequence,
    world_rotations, BoneRotationSet, KinematicsError, LocalFrame, RetargetResult, RotationSpace,
};
pub use math::{Quaternion, Vec3};
pub use retrieval::{
    distance, distance_matrix, evaluate_protocol, mean_average_precision, rank1, Covariate,
    DistanceMetric, Embedding, EmbeddingSet, EvalReport, LevelResult, RetrievalError,
};
pub use skeleton::{
    bone_lengths, estimate_skeleton, frame_average_shape, match_skeleton_lengths, Aggregator,
    Bone, BoneLengths, Pose3D, PoseSequence, RestPose, ShapeProfile, SkeletonError,
    SkeletonTopology,
};
pub use thickness::{
    non_overlap_area, relative_thickness, thickness_level, Silhouette, ThicknessError,
    ThicknessLevel, THICKNESS_BIN_WIDTH,
};
pub use walker::{synth_walker, walker_rest_pose, walker_topology, WalkerError, WalkerSpec};
