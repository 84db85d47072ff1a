use serde::Serialize;

use super::KVec3;
use crate::error::{Error, Result};

/// Pure Lorentz boost acting on null wave vectors `(ω = |k|, k)`.
///
/// [`LorentzBoost::apply`] maps lab-frame momenta into the frame moving with
/// velocity `β` (in units of `c`) relative to the lab.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LorentzBoost {
    velocity: KVec3,
    gamma: f64,
}

impl LorentzBoost {
    pub fn new(velocity: KVec3) -> Result<Self> {
        let b2 = velocity.dot(velocity);
        if !(b2 < 1.0) || !velocity.is_finite() {
            return Err(Error::Domain(format!("boost speed |β|² = {b2} must be below 1")));
        }
        Ok(Self { velocity, gamma: 1.0 / (1.0 - b2).sqrt() })
    }

    /// Boost into the rest frame of a massive four-momentum `(e, p)`, with
    /// `γ = e/m` taken directly rather than from `1 − β²`.
    pub fn to_rest_frame(e: f64, p: KVec3) -> Result<Self> {
        let pm = p.magnitude();
        let m2 = (e - pm) * (e + pm);
        if !(e > 0.0) || !(m2 > 0.0) || !p.is_finite() {
            return Err(Error::Domain(format!("four-momentum ({e}, {pm}) is not timelike")));
        }
        Ok(Self { velocity: p * (1.0 / e), gamma: e / m2.sqrt() })
    }

    pub fn identity() -> Self {
        Self { velocity: KVec3::ZERO, gamma: 1.0 }
    }

    pub fn velocity(&self) -> KVec3 {
        self.velocity
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn speed(&self) -> f64 {
        self.velocity.magnitude()
    }
    pub fn rapidity(&self) -> f64 {
        self.speed().atanh()
    }
    pub fn is_identity(&self) -> bool {
        self.velocity == KVec3::ZERO
    }

    pub fn inverse(&self) -> Self {
        Self { velocity: -self.velocity, gamma: self.gamma }
    }

    /// Boost a general four-vector `(e, p)`.
    pub fn apply_four(&self, e: f64, p: KVec3) -> (f64, KVec3) {
        let b = self.speed();
        if b == 0.0 {
            return (e, p);
        }
        let n = self.velocity * (1.0 / b);
        let par = p.dot(n);
        let perp = p - n * par;
        let e2 = self.gamma * (e - b * par);
        let par2 = self.gamma * (par - b * e);
        (e2, perp + n * par2)
    }

    /// Boost a photon wave vector (uses `ω = |k|`).
    pub fn apply(&self, k: KVec3) -> KVec3 {
        self.apply_four(k.frequency(), k).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let b = LorentzBoost::new(KVec3::new(0.3, -0.2, 0.6)).unwrap();
        let k = KVec3::new(1.0, 2.0, -0.5);
        let back = b.inverse().apply(b.apply(k));
        assert!((back - k).magnitude() < 1e-13);
    }

    #[test]
    fn preserves_null_norm() {
        let b = LorentzBoost::new(KVec3::new(0.0, 0.0, 0.99)).unwrap();
        let k = KVec3::new(0.4, 0.1, 3.0);
        let (e, p) = b.apply_four(k.frequency(), k);
        assert!((e - p.magnitude()).abs() < 1e-12);
    }

    #[test]
    fn superluminal_rejected() {
        assert!(LorentzBoost::new(KVec3::new(1.0, 0.0, 0.0)).is_err());
    }
}
