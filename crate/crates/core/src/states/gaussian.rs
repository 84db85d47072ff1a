use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::amplitude::Amplitude;
use super::packet::{PacketTag, WavePacket};
use crate::error::{Error, Result};
use crate::kspace::{KGrid, KVec3, SphericalKGrid};

/// Largest tolerated probability mass outside the sampled region.
pub const TAIL_TOL: f64 = 1e-10;

/// Isotropic Gaussian packet `|k − k₀| ~ σ`, centred at `r₀` in space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacketSpec {
    pub k0: KVec3,
    pub sigma: f64,
    #[serde(default)]
    pub r0: [f64; 3],
}

impl GaussianPacketSpec {
    pub fn new(k0: KVec3, sigma: f64, r0: [f64; 3]) -> Result<Self> {
        let spec = Self { k0, sigma, r0 };
        spec.validate()?;
        Ok(spec)
    }

    /// Carrier `(0, 0, k0)` at the origin.
    pub fn along_z(k0: f64, sigma: f64) -> Result<Self> {
        Self::new(KVec3::new(0.0, 0.0, k0), sigma, [0.0; 3])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Domain(format!("σ must be positive, got {}", self.sigma)));
        }
        if !self.k0.is_finite() || self.r0.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("k₀ and r₀ must be finite".into()));
        }
        Ok(())
    }

    /// `k_max = |k₀| + 8σ`.
    pub fn default_k_max(&self) -> f64 {
        self.k0.magnitude() + 8.0 * self.sigma
    }

    /// Default spherical grid: 128 × 64 × 64 nodes out to `|k₀| + 8σ`.
    pub fn default_grid(&self) -> Result<SphericalKGrid> {
        SphericalKGrid::with_k_max(self.default_k_max())
    }

    /// Probability outside the ball `|k| ≤ k_max`, bounded by the mass
    /// outside the ball of radius `k_max − |k₀|` about the carrier.
    pub fn tail_outside_ball(&self, k_max: f64) -> f64 {
        let u = (k_max - self.k0.magnitude()) / self.sigma;
        if u <= 0.0 {
            return 1.0;
        }
        libm::erfc(u) + 2.0 / PI.sqrt() * u * (-u * u).exp()
    }

    /// Probability outside the sampled cube `[lo, hi]³` (union bound over axes).
    pub fn tail_outside_box(&self, lo: f64, hi: f64) -> f64 {
        self.k0
            .to_array()
            .iter()
            .map(|&c| 0.5 * libm::erfc((hi - c) / self.sigma) + 0.5 * libm::erfc((c - lo) / self.sigma))
            .sum()
    }

    pub fn amplitude(&self) -> Amplitude {
        Amplitude::Gaussian(*self)
    }
}

/// Sample `π^{-3/4} σ^{-3/2} exp(−|k−k₀|²/2σ²) e^{−ik·r₀}` on `grid` and
/// normalize by quadrature.
pub fn make_gaussian_packet(spec: &GaussianPacketSpec, grid: Arc<KGrid>) -> Result<WavePacket> {
    spec.validate()?;
    let tail = match &*grid {
        KGrid::Spherical(g) => spec.tail_outside_ball(g.k_max()),
        KGrid::Cartesian(g) => spec.tail_outside_box(g.k_axis(0), g.k_axis(g.n() - 1)),
        KGrid::Shell(_) => {
            return Err(Error::Capability("Gaussian packets need a volumetric grid".into()));
        }
    };
    if tail > TAIL_TOL {
        return Err(Error::Coverage(format!(
            "grid {} leaves tail mass {tail:e} of the Gaussian outside",
            grid.describe()
        )));
    }
    WavePacket::from_amplitude(grid, spec.amplitude(), 1, PacketTag::Gaussian)?.normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kspace::CartesianKGrid;

    #[test]
    fn rejects_bad_sigma() {
        assert!(GaussianPacketSpec::along_z(1.0, 0.0).is_err());
        assert!(GaussianPacketSpec::along_z(1.0, f64::NAN).is_err());
    }

    #[test]
    fn default_grid_normalizes() {
        let spec = GaussianPacketSpec::along_z(10.0, 1.0).unwrap();
        let g = Arc::new(KGrid::Spherical(spec.default_grid().unwrap()));
        let raw = WavePacket::from_amplitude(Arc::clone(&g), spec.amplitude(), 1, PacketTag::Gaussian).unwrap();
        assert!((raw.norm() - 1.0).abs() < 1e-10);
        let p = make_gaussian_packet(&spec, g).unwrap();
        assert!((p.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_grid_is_a_coverage_error() {
        let spec = GaussianPacketSpec::along_z(10.0, 1.0).unwrap();
        let g = Arc::new(KGrid::Spherical(SphericalKGrid::new(32, 16, 16, 14.0).unwrap()));
        assert!(matches!(make_gaussian_packet(&spec, g), Err(Error::Coverage(_))));
    }

    #[test]
    fn phase_centre_leaves_modulus() {
        let a = GaussianPacketSpec::along_z(5.0, 1.0).unwrap();
        let b = GaussianPacketSpec::new(a.k0, 1.0, [1.0, -2.0, 0.5]).unwrap();
        let g = Arc::new(KGrid::Spherical(SphericalKGrid::new(32, 16, 16, 13.0).unwrap()));
        let pa = make_gaussian_packet(&a, Arc::clone(&g)).unwrap();
        let pb = make_gaussian_packet(&b, g).unwrap();
        for (x, y) in pa.components()[0].samples.iter().zip(&pb.components()[0].samples) {
            assert!((x.norm_sqr() - y.norm_sqr()).abs() < 1e-14);
        }
    }

    #[test]
    fn cartesian_coverage() {
        let spec = GaussianPacketSpec::along_z(3.0, 1.0).unwrap();
        let small = Arc::new(KGrid::Cartesian(CartesianKGrid::new(16, 6.0).unwrap()));
        assert!(matches!(make_gaussian_packet(&spec, small), Err(Error::Coverage(_))));
        let big = Arc::new(KGrid::Cartesian(CartesianKGrid::new(32, 12.0).unwrap()));
        let p = make_gaussian_packet(&spec, big).unwrap();
        assert!((p.norm() - 1.0).abs() < 1e-12);
    }
}
