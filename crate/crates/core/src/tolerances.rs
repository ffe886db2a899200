//! Numeric tolerances shared across modules.
//!
//! These are part of the library contract: callers relying on degenerate-input
//! detection get exactly these thresholds.

/// A bone shorter than this (meters) has no usable direction.
pub const DEGENERATE_BONE_M: f64 = 1e-12;

/// Sine of the angle between a reference offset and the bone axis below which
/// the reference is treated as collinear. For small angles sine and angle
/// agree, so this is an angular tolerance of 1e-6 rad.
pub const COLLINEAR_SIN: f64 = 1e-6;

/// Unit-quaternion norm drift allowed after arbitrary composition chains.
pub const UNIT_NORM_DRIFT: f64 = 1e-9;
