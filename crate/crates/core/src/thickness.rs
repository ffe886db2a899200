//! Clothing-thickness measurement from registered binary silhouettes.
//!
//! The non-overlapping region between an unclothed and a clothed silhouette
//! of the same subject, normalized by the unclothed area, gives a
//! dimensionless relative thickness, binned into ten 15%-wide levels
//! THK0..THK9 (the last bin absorbs everything above 135%).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ThicknessError {
    #[error("silhouette dimensions must be at least 1x1, got {width}x{height}")]
    BadDimensions { width: usize, height: usize },
    #[error("mask has {got} pixels, dimensions imply {expected}")]
    MaskLengthMismatch { expected: usize, got: usize },
    #[error("silhouettes are {aw}x{ah} and {bw}x{bh}; they must match")]
    DimensionMismatch { aw: usize, ah: usize, bw: usize, bh: usize },
    #[error("unclothed silhouette has no foreground pixels")]
    EmptyUnclothed,
    #[error("thickness ratio {value} must be non-negative and finite")]
    BadRatio { value: f64 },
    #[error("thickness level {level} outside 0..=9")]
    BadLevel { level: u32 },
    #[error("cannot parse {text:?} as a thickness level (expected THK0..THK9)")]
    BadLevelText { text: String },
}

/// Row-major binary occupancy mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Silhouette {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl Silhouette {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self, ThicknessError> {
        if width == 0 || height == 0 {
            return Err(ThicknessError::BadDimensions { width, height });
        }
        if mask.len() != width * height {
            return Err(ThicknessError::MaskLengthMismatch {
                expected: width * height,
                got: mask.len(),
            });
        }
        Ok(Silhouette { width, height, mask })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn foreground_count(&self) -> usize {
        self.mask.iter().filter(|p| **p).count()
    }
}

/// Width of one thickness bin: each level covers a 15% increase.
pub const THICKNESS_BIN_WIDTH: f64 = 0.15;

/// Discrete clothing-thickness level THK0..THK9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThicknessLevel(u8);

impl ThicknessLevel {
    pub fn new(level: u32) -> Result<Self, ThicknessError> {
        if level > 9 {
            return Err(ThicknessError::BadLevel { level });
        }
        Ok(ThicknessLevel(level as u8))
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = ThicknessLevel> {
        (0..=9).map(ThicknessLevel)
    }
}

impl fmt::Display for ThicknessLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "THK{}", self.0)
    }
}

impl FromStr for ThicknessLevel {
    type Err = ThicknessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s
            .strip_prefix("THK")
            .ok_or_else(|| ThicknessError::BadLevelText { text: s.to_string() })?;
        let level: u32 = digits
            .parse()
            .map_err(|_| ThicknessError::BadLevelText { text: s.to_string() })?;
        ThicknessLevel::new(level).map_err(|_| ThicknessError::BadLevelText { text: s.to_string() })
    }
}

fn check_dims(a: &Silhouette, b: &Silhouette) -> Result<(), ThicknessError> {
    if a.width != b.width || a.height != b.height {
        return Err(ThicknessError::DimensionMismatch {
            aw: a.width,
            ah: a.height,
            bw: b.width,
            bh: b.height,
        });
    }
    Ok(())
}

/// Pixels where exactly one mask is foreground (symmetric difference).
/// Symmetric difference rather than clothed-minus-unclothed: clothing can
/// also pull the outline inward where it occludes limbs.
pub fn non_overlap_area(a: &Silhouette, b: &Silhouette) -> Result<usize, ThicknessError> {
    check_dims(a, b)?;
    Ok(a.mask.iter().zip(&b.mask).filter(|(p, q)| p != q).count())
}

/// Symmetric difference normalized by the unclothed area. Unbounded above;
/// bulky outfits can more than double the outline.
pub fn relative_thickness(
    unclothed: &Silhouette,
    clothed: &Silhouette,
) -> Result<f64, ThicknessError> {
    let diff = non_overlap_area(unclothed, clothed)?;
    let area = unclothed.foreground_count();
    if area == 0 {
        return Err(ThicknessError::EmptyUnclothed);
    }
    Ok(diff as f64 / area as f64)
}

/// Bins a relative thickness: `min(floor(t / 0.15), 9)`. Bins are half-open,
/// so a boundary value belongs to the upper bin.
pub fn thickness_level(t: f64) -> Result<ThicknessLevel, ThicknessError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(ThicknessError::BadRatio { value: t });
    }
    let level = (t / THICKNESS_BIN_WIDTH).floor().min(9.0);
    Ok(ThicknessLevel(level as u8))
}
