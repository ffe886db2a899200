//! Line-oriented text format for pose sequences.
//!
//! ```text
//! GAITKIT-POSE 1
//! units m
//! rate 30.0
//! joints 3
//! joint pelvis -1 -1
//! joint spine 0 2
//! joint neck 1 0
//! frames 2
//! 0.0 0.9 0.0 0.0 1.15 0.0 0.0 1.4 0.0
//! 0.1 0.9 0.0 0.1 1.15 0.0 0.1 1.4 0.0
//! ```
//!
//! `joint <name> <parent> <reference>` uses joint indices in file order and
//! `-1` for "none" (the root carries -1 for both). Each frame line holds
//! x y z for every joint in order. Floats are written with shortest
//! round-trip decimals, so parse and rewrite reproduces a written file
//! byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use crate::io::{read_magic, read_text, write_file, FormatError, FormatErrorKind, LineReader};
use crate::math::Vec3;
use crate::skeleton::{Pose3D, PoseSequence, SkeletonError, SkeletonTopology};

const MAGIC: &str = "GAITKIT-POSE";
const VERSION: u32 = 1;

/// Joint index or -1 for none.
fn parse_link(
    r: &LineReader<'_>,
    line: usize,
    field: &str,
    token: &str,
) -> Result<Option<usize>, FormatError> {
    let value: i64 = token
        .parse()
        .map_err(|_| r.bad_field(line, field, "a joint index or -1", token))?;
    match value {
        -1 => Ok(None),
        v if v >= 0 => Ok(Some(v as usize)),
        _ => Err(r.bad_field(line, field, "a joint index or -1", token)),
    }
}

fn joint_named_in(err: &SkeletonError) -> Option<&str> {
    match err {
        SkeletonError::BadJointName { name } | SkeletonError::DuplicateJointName { name } => {
            Some(name)
        }
        SkeletonError::MultipleRoots { second, .. } => Some(second),
        SkeletonError::ParentOutOfRange { joint, .. }
        | SkeletonError::ParentCycle { joint }
        | SkeletonError::ReferenceMissing { joint }
        | SkeletonError::ReferenceOutOfRange { joint, .. }
        | SkeletonError::ReferenceIsEndpoint { joint }
        | SkeletonError::RootReference { joint } => Some(joint),
        _ => None,
    }
}

pub fn read_pose_sequence(path: &Path) -> Result<PoseSequence, FormatError> {
    let text = read_text(path)?;
    let mut r = LineReader::new(path, &text);
    read_magic(&mut r, MAGIC, VERSION)?;

    let (no, tokens) = r.keyword_line("units")?;
    if tokens != ["m"] {
        return Err(r.bad_field(no, "units", "m", &tokens.join(" ")));
    }

    let (no, tokens) = r.keyword_line("rate")?;
    let [token] = tokens[..] else {
        return Err(r.bad_field(no, "rate", "one number", &tokens.join(" ")));
    };
    let rate = r.parse_f64(no, "rate", token)?;
    if !rate.is_finite() {
        return Err(FormatError::parse(
            path,
            no,
            FormatErrorKind::NonFinite { field: "rate".to_string() },
        ));
    }
    if rate <= 0.0 {
        return Err(r.bad_field(no, "rate", "a positive frame rate", token));
    }

    let (no, tokens) = r.keyword_line("joints")?;
    let [token] = tokens[..] else {
        return Err(r.bad_field(no, "joints", "one count", &tokens.join(" ")));
    };
    let joint_count = r.parse_count(no, "joints", token)?;
    if joint_count == 0 {
        return Err(r.bad_field(no, "joints", "at least one joint", token));
    }

    let mut names = Vec::with_capacity(joint_count);
    let mut parents = Vec::with_capacity(joint_count);
    let mut references = Vec::with_capacity(joint_count);
    let mut joint_lines = Vec::with_capacity(joint_count);
    for _ in 0..joint_count {
        let (no, tokens) = r.keyword_line("joint")?;
        let [name, parent, reference] = tokens[..] else {
            return Err(r.bad_field(no, "joint", "joint <name> <parent> <reference>", &tokens.join(" ")));
        };
        names.push(name.to_string());
        parents.push(parse_link(&r, no, &format!("parent of {name}"), parent)?);
        references.push(parse_link(&r, no, &format!("reference of {name}"), reference)?);
        joint_lines.push(no);
    }

    let (frames_line, tokens) = r.keyword_line("frames")?;
    let [token] = tokens[..] else {
        return Err(r.bad_field(frames_line, "frames", "one count", &tokens.join(" ")));
    };
    let frame_count = r.parse_count(frames_line, "frames", token)?;
    if frame_count == 0 {
        return Err(r.bad_field(frames_line, "frames", "at least one frame", token));
    }

    let mut frames = Vec::with_capacity(frame_count);
    for _ in 0..frame_count {
        let (no, line) = r.next_line("frame line")?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 3 * joint_count {
            return Err(FormatError::parse(
                path,
                no,
                FormatErrorKind::WrongValueCount { expected: 3 * joint_count, got: tokens.len() },
            ));
        }
        let mut positions = Vec::with_capacity(joint_count);
        for (j, triple) in tokens.chunks(3).enumerate() {
            let mut coords = [0.0; 3];
            for (axis, token) in triple.iter().enumerate() {
                let field = format!("joint {j} coordinate {}", ["x", "y", "z"][axis]);
                let value = r.parse_f64(no, &field, token)?;
                if !value.is_finite() {
                    return Err(FormatError::parse(path, no, FormatErrorKind::NonFinite { field }));
                }
                coords[axis] = value;
            }
            positions.push(Vec3::from(coords));
        }
        frames.push(Pose3D::new(positions).expect("coordinates checked finite"));
    }

    r.expect_eof()?;

    let topology = SkeletonTopology::new(names.clone(), parents, references).map_err(|e| {
        let line = joint_named_in(&e)
            .and_then(|name| names.iter().position(|n| n == name))
            .map(|idx| joint_lines[idx])
            .unwrap_or(joint_lines[0]);
        FormatError::parse(path, line, FormatErrorKind::Skeleton(e))
    })?;
    PoseSequence::new(topology, frames, rate)
        .map_err(|e| FormatError::parse(path, frames_line, FormatErrorKind::Skeleton(e)))
}

pub fn write_pose_sequence(sequence: &PoseSequence, path: &Path) -> Result<(), FormatError> {
    let topology = sequence.topology();
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(out, "units m").unwrap();
    writeln!(out, "rate {:?}", sequence.frame_rate_hz()).unwrap();
    writeln!(out, "joints {}", topology.len()).unwrap();
    for j in 0..topology.len() {
        let link = |v: Option<usize>| v.map_or(-1, |i| i as i64);
        writeln!(
            out,
            "joint {} {} {}",
            topology.name(j),
            link(topology.parent_of(j)),
            link(topology.reference_of(j)),
        )
        .unwrap();
    }
    writeln!(out, "frames {}", sequence.frames().len()).unwrap();
    for frame in sequence.frames() {
        let mut first = true;
        for p in frame.positions() {
            for v in [p.x, p.y, p.z] {
                if !first {
                    out.push(' ');
                }
                write!(out, "{v:?}").unwrap();
                first = false;
            }
        }
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}
