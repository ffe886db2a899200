//! Seeded fixture generators shared by unit tests, integration tests, and
//! benchmarks. Everything runs on ChaCha8, so a fixed seed yields the same
//! fixture on every platform and rand release in use here.
//!
//! Pose generators reject configurations whose bone references come within a
//! 0.05 sine margin of collinearity. The library itself only needs 1e-6;
//! the wide margin keeps randomized round-trip tests far from the fallback
//! paths they are not trying to exercise.

use rand::Rng;
use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

use crate::gon::{FeatureMap, StripPartition};
use crate::kinematics::{forward_kinematics, BoneRotationSet, RotationSpace};
use crate::math::{Quaternion, Vec3};
use crate::retrieval::{Covariate, Embedding, EmbeddingSet};
use crate::skeleton::{Pose3D, RestPose, SkeletonTopology};
use crate::thickness::{Silhouette, ThicknessLevel};

/// Sine margin kept between every bone and its reference direction.
pub const REFERENCE_MARGIN: f64 = 0.05;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
        );
        let n = v.norm();
        if (0.1..=1.0).contains(&n) {
            return v * (1.0 / n);
        }
    }
}

pub fn random_unit_quaternion(rng: &mut ChaCha8Rng) -> Quaternion {
    let axis = unit_vector(rng);
    let angle = rng.gen_range(0.0..std::f64::consts::PI);
    Quaternion::from_axis_angle(axis, angle)
}

/// Random tree: joint 0 is the root, every other joint hangs off an earlier
/// one, and every bone gets a reference joint distinct from its endpoints.
pub fn random_topology(rng: &mut ChaCha8Rng, max_joints: usize) -> SkeletonTopology {
    let n = rng.gen_range(3..=max_joints.max(3));
    let names = (0..n).map(|i| format!("j{i}")).collect();
    let mut parents = vec![None];
    let mut references = vec![None];
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        let reference = loop {
            let r = rng.gen_range(0..n);
            if r != i && r != parent {
                break r;
            }
        };
        parents.push(Some(parent));
        references.push(Some(reference));
    }
    SkeletonTopology::new(names, parents, references).expect("construction satisfies tree rules")
}

/// Smallest reference sine over all bones; 0 when any length involved is
/// too short to trust.
pub fn reference_margin(positions: &[Vec3], topology: &SkeletonTopology) -> f64 {
    let mut margin = f64::INFINITY;
    for bone in topology.bones() {
        let v = positions[bone.child] - positions[bone.parent];
        let r = positions[bone.reference] - positions[bone.parent];
        if v.norm() < REFERENCE_MARGIN || r.norm() < REFERENCE_MARGIN {
            return 0.0;
        }
        margin = margin.min(v.cross(r).norm() / (v.norm() * r.norm()));
    }
    margin
}

/// Random topology plus a rest pose whose references hold the margin.
pub fn random_rest_pose(rng: &mut ChaCha8Rng, max_joints: usize) -> RestPose {
    loop {
        let topology = random_topology(rng, max_joints);
        let mut positions = vec![Vec3::ZERO; topology.len()];
        positions[topology.root()] = unit_vector(rng) * rng.gen_range(0.0..0.5);
        for bone in topology.bones() {
            positions[bone.child] =
                positions[bone.parent] + unit_vector(rng) * rng.gen_range(0.3..1.0);
        }
        if reference_margin(&positions, &topology) >= REFERENCE_MARGIN {
            let pose = Pose3D::new(positions).expect("finite by construction");
            return RestPose::new(topology, pose).expect("margin implies validity");
        }
    }
}

pub fn random_local_drives(rng: &mut ChaCha8Rng, bone_count: usize) -> BoneRotationSet {
    BoneRotationSet::new(
        RotationSpace::Local,
        (0..bone_count).map(|_| random_unit_quaternion(rng)).collect(),
    )
}

/// A pose reachable from `rest` by rigid bones: FK of random local drives,
/// re-rolled until the posed references also hold the margin. Returns the
/// drives alongside the pose.
pub fn random_fk_pose(rng: &mut ChaCha8Rng, rest: &RestPose) -> (BoneRotationSet, Pose3D) {
    let topology = rest.topology();
    loop {
        let drives = random_local_drives(rng, topology.bones().len());
        let root = rest.pose().position(topology.root())
            + unit_vector(rng) * rng.gen_range(0.0..0.5);
        let pose = forward_kinematics(rest, &drives, root).expect("drives match topology");
        if reference_margin(pose.positions(), topology) >= REFERENCE_MARGIN {
            return (drives, pose);
        }
    }
}

/// Random mask with at least one foreground pixel when `ensure_foreground`.
pub fn random_silhouette(
    rng: &mut ChaCha8Rng,
    max_width: usize,
    max_height: usize,
    ensure_foreground: bool,
) -> Silhouette {
    let width = rng.gen_range(1..=max_width);
    let height = rng.gen_range(1..=max_height);
    let mut mask: Vec<bool> = (0..width * height).map(|_| rng.gen_bool(0.5)).collect();
    if ensure_foreground && !mask.iter().any(|m| *m) {
        let i = rng.gen_range(0..mask.len());
        mask[i] = true;
    }
    Silhouette::new(width, height, mask).expect("dimensions are positive")
}

pub fn random_feature_map(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_c: usize,
    max_h: usize,
    max_w: usize,
) -> FeatureMap {
    let (n, c, h, w) = (
        rng.gen_range(1..=max_n),
        rng.gen_range(1..=max_c),
        rng.gen_range(1..=max_h),
        rng.gen_range(1..=max_w),
    );
    let values = (0..n * c * h * w).map(|_| rng.gen_range(-3.0..3.0)).collect();
    FeatureMap::new(n, c, h, w, values).expect("counts match dims")
}

/// Random partition of `height` rows into at most 5 strips.
pub fn random_partition(rng: &mut ChaCha8Rng, height: usize) -> StripPartition {
    let strips = rng.gen_range(1..=height.min(5));
    let mut cuts = vec![0, height];
    while cuts.len() < strips + 1 {
        let cut = rng.gen_range(1..height);
        if !cuts.contains(&cut) {
            cuts.push(cut);
        }
    }
    cuts.sort_unstable();
    let heights = cuts.windows(2).map(|w| w[1] - w[0]).collect();
    StripPartition::new(heights).expect("cuts are strictly increasing")
}

/// Unlabeled random embeddings over up to `max_subjects` subjects.
pub fn random_embeddings(
    rng: &mut ChaCha8Rng,
    max_subjects: usize,
    max_count: usize,
    dimension: usize,
) -> Vec<Embedding> {
    let subjects = rng.gen_range(1..=max_subjects);
    let count = rng.gen_range(1..=max_count);
    (0..count)
        .map(|_| {
            let subject = format!("s{}", rng.gen_range(0..subjects));
            let features = (0..dimension).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Embedding::new(subject, None, features).expect("dimension is positive")
        })
        .collect()
}

/// Protocol-shaped set: every subject appears at THK0 plus a few probe
/// levels, with per-instance noise scaled by `noise`.
pub fn random_protocol_set(
    rng: &mut ChaCha8Rng,
    max_subjects: usize,
    dimension: usize,
    noise: f64,
) -> EmbeddingSet {
    let subjects = rng.gen_range(2..=max_subjects.max(2));
    let mut all = Vec::new();
    for s in 0..subjects {
        let center: Vec<f64> = (0..dimension).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut levels = vec![0u32];
        for level in 1..=9 {
            if rng.gen_bool(0.4) {
                levels.push(level);
            }
        }
        for level in levels {
            let features =
                center.iter().map(|c| c + rng.gen_range(-noise..=noise)).collect();
            all.push(
                Embedding::new(
                    format!("s{s}"),
                    Some(Covariate::Thickness(ThicknessLevel::new(level).unwrap())),
                    features,
                )
                .expect("dimension is positive"),
            );
        }
    }
    EmbeddingSet::new(all).expect("uniform dimension")
}
