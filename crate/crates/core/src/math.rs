//! Small fixed-size linear algebra used by the kinematics pipeline.
//!
//! Conventions:
//! - `Quaternion` is always unit norm (renormalized after every composition)
//!   and sign-canonical: `w >= 0`, and when `w == 0` the first nonzero of
//!   `x, y, z` is positive. Two canonical quaternions compare equal iff they
//!   encode the same rotation.
//! - `a.compose(b)` (written `a ⊗ b` in docs) applies `b` first, then `a`,
//!   matching rotation-matrix products acting on column vectors.

use std::ops::{Add, Mul, Neg, Sub};

/// A point or direction in 3-space, in meters for skeletal data.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction, or `None` when the norm is
    /// too small to divide by.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n < 1e-12 {
            None
        } else {
            Some(self * (1.0 / n))
        }
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

/// Unit quaternion representing a rotation, stored as `(w, x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Builds a unit quaternion from raw components.
    ///
    /// Panics when the components have zero or non-finite norm; rotation
    /// sources in this crate never produce such input.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        let q = Quaternion { w, x, y, z };
        let n = q.norm();
        assert!(n.is_finite() && n > 0.0, "quaternion components must have positive finite norm");
        (q * (1.0 / n)).canonicalized()
    }

    pub fn from_axis_angle(axis: Vec3, angle_rad: f64) -> Self {
        let u = axis.normalized().expect("rotation axis must be nonzero");
        let half = angle_rad / 2.0;
        let s = half.sin();
        Quaternion::new(half.cos(), u.x * s, u.y * s, u.z * s)
    }

    /// Converts an orthonormal right-handed basis (matrix columns) to the
    /// quaternion mapping the world basis onto it. Shepperd's method: branch
    /// on the largest of trace and diagonal entries for stability.
    pub fn from_basis(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        // Matrix entries m[row][col] with columns c0, c1, c2.
        let (m00, m01, m02) = (c0.x, c1.x, c2.x);
        let (m10, m11, m12) = (c0.y, c1.y, c2.y);
        let (m20, m21, m22) = (c0.z, c1.z, c2.z);
        let trace = m00 + m11 + m22;
        let (w, x, y, z);
        if trace > m00 && trace > m11 && trace > m22 {
            let s = (trace + 1.0).sqrt() * 2.0;
            w = 0.25 * s;
            x = (m21 - m12) / s;
            y = (m02 - m20) / s;
            z = (m10 - m01) / s;
        } else if m00 > m11 && m00 > m22 {
            let s = (1.0 + m00 - m11 - m22).sqrt() * 2.0;
            w = (m21 - m12) / s;
            x = 0.25 * s;
            y = (m01 + m10) / s;
            z = (m02 + m20) / s;
        } else if m11 > m22 {
            let s = (1.0 + m11 - m00 - m22).sqrt() * 2.0;
            w = (m02 - m20) / s;
            x = (m01 + m10) / s;
            y = 0.25 * s;
            z = (m12 + m21) / s;
        } else {
            let s = (1.0 + m22 - m00 - m11).sqrt() * 2.0;
            w = (m10 - m01) / s;
            x = (m02 + m20) / s;
            y = (m12 + m21) / s;
            z = 0.25 * s;
        }
        Quaternion::new(w, x, y, z)
    }

    fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Flips sign so `w >= 0`; when `w == 0`, the first nonzero of
    /// `x, y, z` is made positive. `q` and `-q` encode the same rotation,
    /// so this picks one representative per rotation.
    fn canonicalized(self) -> Self {
        let flip = if self.w != 0.0 {
            self.w < 0.0
        } else if self.x != 0.0 {
            self.x < 0.0
        } else if self.y != 0.0 {
            self.y < 0.0
        } else {
            self.z < 0.0
        };
        if flip {
            Quaternion { w: -self.w, x: -self.x, y: -self.y, z: -self.z }
        } else {
            self
        }
    }

    /// Hamilton product `self ⊗ rhs`: applies `rhs` first, then `self`.
    /// The result is renormalized and sign-canonicalized.
    pub fn compose(self, rhs: Quaternion) -> Quaternion {
        let (w1, x1, y1, z1) = (self.w, self.x, self.y, self.z);
        let (w2, x2, y2, z2) = (rhs.w, rhs.x, rhs.y, rhs.z);
        Quaternion::new(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )
    }

    /// Inverse rotation. For unit quaternions the conjugate is the inverse.
    pub fn conjugate(self) -> Quaternion {
        Quaternion { w: self.w, x: -self.x, y: -self.y, z: -self.z }.canonicalized()
    }

    /// Rotates a vector.
    pub fn rotate(self, v: Vec3) -> Vec3 {
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    pub fn dot(self, other: Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Geodesic distance on the rotation group, in radians: `2·acos(|⟨a,b⟩|)`.
    /// The dot product is clamped so roundoff never produces NaN.
    pub fn angle_to(self, other: Quaternion) -> f64 {
        let d = self.dot(other).abs().clamp(0.0, 1.0);
        2.0 * d.acos()
    }

    /// Rotation angle away from the identity, in radians.
    pub fn angle(self) -> f64 {
        self.angle_to(Quaternion::IDENTITY)
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        Quaternion { w: self.w * s, x: self.x * s, y: self.y * s, z: self.z * s }
    }
}

/// Sums in a fixed balanced order so error stays O(log n) and the result
/// does not depend on chunking or thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        acc
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Arithmetic mean via `pairwise_sum`. Empty input yields NaN; callers
/// guard emptiness at their own boundaries.
pub fn pairwise_mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}
