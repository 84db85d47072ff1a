use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A wave vector in units of `k_ref`.
///
/// With `c = 1` the vacuum dispersion relation is `ω_k = |k|`, so
/// [`KVec3::frequency`] and [`KVec3::magnitude`] coincide.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KVec3 {
    pub kx: f64,
    pub ky: f64,
    pub kz: f64,
}

impl KVec3 {
    pub const ZERO: KVec3 = KVec3 { kx: 0.0, ky: 0.0, kz: 0.0 };

    pub const fn new(kx: f64, ky: f64, kz: f64) -> Self {
        Self { kx, ky, kz }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.kx, self.ky, self.kz]
    }

    pub fn dot(self, other: KVec3) -> f64 {
        self.kx * other.kx + self.ky * other.ky + self.kz * other.kz
    }

    pub fn magnitude(self) -> f64 {
        self.kx.hypot(self.ky).hypot(self.kz)
    }

    /// `ω_k = c|k|` with `c = 1`.
    pub fn frequency(self) -> f64 {
        self.magnitude()
    }

    pub fn is_finite(self) -> bool {
        self.kx.is_finite() && self.ky.is_finite() && self.kz.is_finite()
    }

    /// Unit vector along `self`, or the zero vector when `|self| == 0`.
    pub fn normalized(self) -> KVec3 {
        let m = self.magnitude();
        if m > 0.0 {
            self * (1.0 / m)
        } else {
            KVec3::ZERO
        }
    }

    /// Angle between two non-zero vectors, in `[0, π]`.
    pub fn angle_to(self, other: KVec3) -> f64 {
        // atan2 form stays accurate for nearly (anti)parallel vectors
        let cross = KVec3::new(
            self.ky * other.kz - self.kz * other.ky,
            self.kz * other.kx - self.kx * other.kz,
            self.kx * other.ky - self.ky * other.kx,
        );
        cross.magnitude().atan2(self.dot(other))
    }
}

impl Add for KVec3 {
    type Output = KVec3;
    fn add(self, o: KVec3) -> KVec3 {
        KVec3::new(self.kx + o.kx, self.ky + o.ky, self.kz + o.kz)
    }
}

impl Sub for KVec3 {
    type Output = KVec3;
    fn sub(self, o: KVec3) -> KVec3 {
        KVec3::new(self.kx - o.kx, self.ky - o.ky, self.kz - o.kz)
    }
}

impl Mul<f64> for KVec3 {
    type Output = KVec3;
    fn mul(self, s: f64) -> KVec3 {
        KVec3::new(self.kx * s, self.ky * s, self.kz * s)
    }
}

impl Neg for KVec3 {
    type Output = KVec3;
    fn neg(self) -> KVec3 {
        KVec3::new(-self.kx, -self.ky, -self.kz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magnitude_and_frequency_agree() {
        let k = KVec3::new(3.0, 0.0, 4.0);
        assert_eq!(k.magnitude(), 5.0);
        assert_eq!(k.frequency(), 5.0);
    }

    #[test]
    fn angle_between_orthogonal_vectors() {
        let a = KVec3::new(1.0, 0.0, 0.0);
        let b = KVec3::new(0.0, 2.0, 0.0);
        assert!((a.angle_to(b) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(a.angle_to(a), 0.0);
    }

    #[test]
    fn zero_vector_normalizes_to_zero() {
        assert_eq!(KVec3::ZERO.normalized(), KVec3::ZERO);
    }
}
