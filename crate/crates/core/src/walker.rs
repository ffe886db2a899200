//! Deterministic synthetic walker: a 17-joint humanoid (12 limb and torso
//! joints plus 5 head landmarks) walking along +x with sinusoidal hip and
//! knee flexion and antiphase arm swing. Coordinates are meters, x forward,
//! y up, z to the walker's left. The same spec always produces bit-identical
//! output; the seed only drives the optional position noise.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec3;
use crate::skeleton::{Pose3D, PoseSequence, RestPose, SkeletonTopology};

#[derive(Debug, Error, PartialEq)]
pub enum WalkerError {
    #[error("bone profile is missing key {key:?}")]
    MissingProfileKey { key: &'static str },
    #[error("bone profile has unknown key {key:?}")]
    UnknownProfileKey { key: String },
    #[error("bone profile {key:?} = {value} must be positive and finite")]
    BadProfileValue { key: String, value: f64 },
    #[error("stride frequency {value} must be non-negative and finite")]
    BadFrequency { value: f64 },
    #[error("amplitude {value} rad for {which} is outside [0, 1.2]")]
    BadAmplitude { which: &'static str, value: f64 },
    #[error("forward speed {value} must be non-negative and finite")]
    BadSpeed { value: f64 },
    #[error("frame count must be at least 1")]
    NoFrames,
    #[error("frame rate {value} must be positive and finite")]
    BadFrameRate { value: f64 },
    #[error("position noise {value} must lie in [0, {max}] for this bone profile")]
    BadNoise { value: f64, max: f64 },
}

/// Symmetric bone-length keys; left and right limbs share entries.
pub const PROFILE_KEYS: [&str; 10] = [
    "spine", "neck", "head", "nose", "shoulder", "upper_arm", "forearm", "hip", "thigh", "shank",
];

fn default_bone_profile() -> BTreeMap<String, f64> {
    [
        ("spine", 0.25),
        ("neck", 0.25),
        ("head", 0.12),
        ("nose", 0.10),
        ("shoulder", 0.18),
        ("upper_arm", 0.30),
        ("forearm", 0.26),
        ("hip", 0.10),
        ("thigh", 0.42),
        ("shank", 0.40),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkerSpec {
    /// Bone lengths in meters, keyed by `PROFILE_KEYS`.
    #[serde(default = "default_bone_profile")]
    pub bone_profile_m: BTreeMap<String, f64>,
    pub stride_frequency_hz: f64,
    pub stride_amplitude_rad: f64,
    pub arm_swing_amplitude_rad: f64,
    pub forward_speed_m_per_s: f64,
    pub frame_count: usize,
    pub frame_rate_hz: f64,
    pub seed: u64,
    /// Uniform per-joint jitter in [-v, v] per axis; 0 disables it.
    #[serde(default)]
    pub position_noise_m: f64,
}

impl Default for WalkerSpec {
    fn default() -> Self {
        WalkerSpec {
            bone_profile_m: default_bone_profile(),
            stride_frequency_hz: 1.0,
            stride_amplitude_rad: 0.5,
            arm_swing_amplitude_rad: 0.3,
            forward_speed_m_per_s: 1.2,
            frame_count: 120,
            frame_rate_hz: 30.0,
            seed: 7,
            position_noise_m: 0.0,
        }
    }
}

impl WalkerSpec {
    pub fn validate(&self) -> Result<(), WalkerError> {
        for key in PROFILE_KEYS {
            match self.bone_profile_m.get(key) {
                None => return Err(WalkerError::MissingProfileKey { key }),
                Some(v) if !(v.is_finite() && *v > 0.0) => {
                    return Err(WalkerError::BadProfileValue { key: key.to_string(), value: *v });
                }
                Some(_) => {}
            }
        }
        if let Some(key) = self.bone_profile_m.keys().find(|k| !PROFILE_KEYS.contains(&k.as_str()))
        {
            return Err(WalkerError::UnknownProfileKey { key: key.clone() });
        }
        if !(self.stride_frequency_hz.is_finite() && self.stride_frequency_hz >= 0.0) {
            return Err(WalkerError::BadFrequency { value: self.stride_frequency_hz });
        }
        for (which, value) in [
            ("stride", self.stride_amplitude_rad),
            ("arm swing", self.arm_swing_amplitude_rad),
        ] {
            if !(value.is_finite() && (0.0..=1.2).contains(&value)) {
                return Err(WalkerError::BadAmplitude { which, value });
            }
        }
        if !(self.forward_speed_m_per_s.is_finite() && self.forward_speed_m_per_s >= 0.0) {
            return Err(WalkerError::BadSpeed { value: self.forward_speed_m_per_s });
        }
        if self.frame_count == 0 {
            return Err(WalkerError::NoFrames);
        }
        if !(self.frame_rate_hz.is_finite() && self.frame_rate_hz > 0.0) {
            return Err(WalkerError::BadFrameRate { value: self.frame_rate_hz });
        }
        // Jitter an order of magnitude below the shortest bone keeps every
        // frame's bone lengths positive and references non-collinear.
        let max_noise = self
            .bone_profile_m
            .values()
            .fold(f64::INFINITY, |a, b| a.min(*b))
            / 10.0;
        if !(self.position_noise_m.is_finite()
            && (0.0..=max_noise).contains(&self.position_noise_m))
        {
            return Err(WalkerError::BadNoise { value: self.position_noise_m, max: max_noise });
        }
        Ok(())
    }

    fn length(&self, key: &str) -> f64 {
        self.bone_profile_m[key]
    }

    /// Pelvis height with both legs vertical.
    fn pelvis_height(&self) -> f64 {
        self.length("thigh") + self.length("shank")
    }
}

const JOINT_NAMES: [&str; 17] = [
    "pelvis",
    "spine",
    "neck",
    "head",
    "nose",
    "l_shoulder",
    "l_elbow",
    "l_wrist",
    "r_shoulder",
    "r_elbow",
    "r_wrist",
    "l_hip",
    "l_knee",
    "l_ankle",
    "r_hip",
    "r_knee",
    "r_ankle",
];

const PELVIS: usize = 0;
const SPINE: usize = 1;
const NECK: usize = 2;
const HEAD: usize = 3;
const NOSE: usize = 4;
const L_SHOULDER: usize = 5;
const L_ELBOW: usize = 6;
const L_WRIST: usize = 7;
const R_SHOULDER: usize = 8;
const R_ELBOW: usize = 9;
const R_WRIST: usize = 10;
const L_HIP: usize = 11;
const L_KNEE: usize = 12;
const L_ANKLE: usize = 13;
const R_HIP: usize = 14;
const R_KNEE: usize = 15;
const R_ANKLE: usize = 16;

/// The fixed 17-joint layout. References are chosen off each bone's motion
/// plane so local frames stay well defined throughout a stride.
pub fn walker_topology() -> SkeletonTopology {
    let parents = vec![
        None,
        Some(PELVIS),
        Some(SPINE),
        Some(NECK),
        Some(HEAD),
        Some(NECK),
        Some(L_SHOULDER),
        Some(L_ELBOW),
        Some(NECK),
        Some(R_SHOULDER),
        Some(R_ELBOW),
        Some(PELVIS),
        Some(L_HIP),
        Some(L_KNEE),
        Some(PELVIS),
        Some(R_HIP),
        Some(R_KNEE),
    ];
    let references = vec![
        None,
        Some(L_HIP),
        Some(L_SHOULDER),
        Some(NOSE),
        Some(NECK),
        Some(SPINE),
        Some(NECK),
        Some(NECK),
        Some(SPINE),
        Some(NECK),
        Some(NECK),
        Some(SPINE),
        Some(PELVIS),
        Some(PELVIS),
        Some(SPINE),
        Some(PELVIS),
        Some(PELVIS),
    ];
    SkeletonTopology::new(
        JOINT_NAMES.iter().map(|n| n.to_string()).collect(),
        parents,
        references,
    )
    .expect("fixed layout is a valid tree")
}

/// Joint positions for one instant. Angles are radians from vertical in the
/// sagittal (x-y) plane, positive swinging forward.
fn skeleton_at(spec: &WalkerSpec, pelvis: Vec3, phase: f64) -> Vec<Vec3> {
    let swing = |origin: Vec3, length: f64, angle: f64| {
        origin + Vec3::new(angle.sin(), -angle.cos(), 0.0) * length
    };

    let mut p = vec![Vec3::ZERO; 17];
    p[PELVIS] = pelvis;
    p[SPINE] = pelvis + Vec3::new(0.0, spec.length("spine"), 0.0);
    p[NECK] = p[SPINE] + Vec3::new(0.0, spec.length("neck"), 0.0);
    p[HEAD] = p[NECK] + Vec3::new(0.0, spec.length("head"), 0.0);
    p[NOSE] = p[HEAD] + Vec3::new(spec.length("nose"), 0.0, 0.0);

    // Arms swing opposite the same-side leg.
    let left_arm = spec.arm_swing_amplitude_rad * (phase + std::f64::consts::PI).sin();
    let right_arm = spec.arm_swing_amplitude_rad * phase.sin();
    for (shoulder, elbow, wrist, side, angle) in [
        (L_SHOULDER, L_ELBOW, L_WRIST, 1.0, left_arm),
        (R_SHOULDER, R_ELBOW, R_WRIST, -1.0, right_arm),
    ] {
        p[shoulder] = p[NECK] + Vec3::new(0.0, 0.0, side * spec.length("shoulder"));
        p[elbow] = swing(p[shoulder], spec.length("upper_arm"), angle);
        p[wrist] = swing(p[elbow], spec.length("forearm"), angle);
    }

    // Legs: hip angle is a sinusoid, knee flexion a non-negative sinusoid at
    // the same frequency, so the shank lags the thigh.
    for (hip, knee, ankle, side, leg_phase) in [
        (L_HIP, L_KNEE, L_ANKLE, 1.0, phase),
        (R_HIP, R_KNEE, R_ANKLE, -1.0, phase + std::f64::consts::PI),
    ] {
        let theta = spec.stride_amplitude_rad * leg_phase.sin();
        let flexion = 0.5 * spec.stride_amplitude_rad * (1.0 - leg_phase.cos());
        p[hip] = pelvis + Vec3::new(0.0, 0.0, side * spec.length("hip"));
        p[knee] = swing(p[hip], spec.length("thigh"), theta);
        p[ankle] = swing(p[knee], spec.length("shank"), theta - flexion);
    }
    p
}

/// The stationary pose the walker interpolates around: legs and arms
/// vertical, pelvis over the origin.
pub fn walker_rest_pose(spec: &WalkerSpec) -> Result<RestPose, WalkerError> {
    spec.validate()?;
    let mut stance = spec.clone();
    stance.stride_amplitude_rad = 0.0;
    stance.arm_swing_amplitude_rad = 0.0;
    let positions = skeleton_at(&stance, Vec3::new(0.0, spec.pelvis_height(), 0.0), 0.0);
    let pose = Pose3D::new(positions).expect("rest geometry is finite");
    Ok(RestPose::new(walker_topology(), pose).expect("rest geometry satisfies bone invariants"))
}

/// Synthesizes the walking sequence described by `spec`.
pub fn synth_walker(spec: &WalkerSpec) -> Result<PoseSequence, WalkerError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let height = spec.pelvis_height();
    let mut frames = Vec::with_capacity(spec.frame_count);
    for i in 0..spec.frame_count {
        let t = i as f64 / spec.frame_rate_hz;
        let phase = 2.0 * std::f64::consts::PI * spec.stride_frequency_hz * t;
        let pelvis = Vec3::new(spec.forward_speed_m_per_s * t, height, 0.0);
        let mut positions = skeleton_at(spec, pelvis, phase);
        if spec.position_noise_m > 0.0 {
            let n = spec.position_noise_m;
            for p in &mut positions {
                *p = *p
                    + Vec3::new(
                        rng.gen_range(-n..=n),
                        rng.gen_range(-n..=n),
                        rng.gen_range(-n..=n),
                    );
            }
        }
        frames.push(Pose3D::new(positions).expect("walker geometry is finite"));
    }
    Ok(PoseSequence::new(walker_topology(), frames, spec.frame_rate_hz)
        .expect("frames match the fixed topology"))
}
