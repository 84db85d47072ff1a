use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::amplitude::Amplitude;
use super::packet::{PacketTag, WavePacket};
use crate::error::{Error, Result};
use crate::kspace::{gauss_legendre, KGrid, TransverseShellGrid};

/// `w_p ≥ REGIME_FACTOR · sqrt(L λ_p)` counts as the wide-pump regime.
pub const REGIME_FACTOR: f64 = 10.0;

const INNER_NODES: usize = 64;
const DEFAULT_TRANSVERSE_NODES: usize = 64;

/// Frequency-degenerate type-I SPDC source. All lengths in units of `1/k_ref`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiphotonSpec {
    pub pump_waist: f64,
    pub crystal_length: f64,
    pub pump_wavelength: f64,
    pub n_o: f64,
    /// Half-width `Q` of the transverse window `[−Q, Q]²` per photon;
    /// defaults to `1/sqrt(b)` with `b = L λ_p / 8π n_o`.
    #[serde(default)]
    pub bound: Option<f64>,
    /// Gauss–Legendre nodes per transverse axis.
    #[serde(default)]
    pub transverse_nodes: Option<usize>,
}

impl BiphotonSpec {
    pub fn new(pump_waist: f64, crystal_length: f64, pump_wavelength: f64, n_o: f64) -> Result<Self> {
        let spec = Self { pump_waist, crystal_length, pump_wavelength, n_o, bound: None, transverse_nodes: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pump waist", self.pump_waist),
            ("crystal length", self.crystal_length),
            ("pump wavelength", self.pump_wavelength),
            ("n_o", self.n_o),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(q) = self.bound {
            if !(q > 0.0) || !q.is_finite() {
                return Err(Error::Domain(format!("transverse bound must be positive, got {q}")));
            }
        }
        if self.transverse_nodes == Some(0) {
            return Err(Error::Domain("transverse node count must be positive".into()));
        }
        Ok(())
    }

    /// Sinc scale `b = L λ_p / (8π n_o)`.
    pub fn sinc_scale(&self) -> f64 {
        self.crystal_length * self.pump_wavelength / (8.0 * PI * self.n_o)
    }

    /// Per-photon wavenumber at degeneracy, `2π / (2 λ_p)`.
    pub fn k_deg(&self) -> f64 {
        PI / self.pump_wavelength
    }

    pub fn default_bound(&self) -> f64 {
        1.0 / self.sinc_scale().sqrt()
    }

    pub fn resolved_bound(&self) -> f64 {
        self.bound.unwrap_or_else(|| self.default_bound())
    }

    /// `w_p ≥ 10 sqrt(L λ_p)`.
    pub fn in_regime(&self) -> bool {
        self.pump_waist >= REGIME_FACTOR * (self.crystal_length * self.pump_wavelength).sqrt()
    }

    pub fn default_grid(&self) -> Result<TransverseShellGrid> {
        TransverseShellGrid::new(
            self.transverse_nodes.unwrap_or(DEFAULT_TRANSVERSE_NODES),
            self.resolved_bound(),
            self.k_deg(),
        )
    }

    /// `exp(−w_p² S²) sinc(b S²)` with `S = k⊥₁ + k⊥₂`.
    ///
    /// Note that the sinc also depends on the sum, not on the difference
    /// `k⊥₁ − k⊥₂` that textbook phase matching would use.
    pub fn joint_amplitude(&self, k1: (f64, f64), k2: (f64, f64)) -> f64 {
        let sx = k1.0 + k2.0;
        let sy = k1.1 + k2.1;
        pair_factor(self.pump_waist, self.sinc_scale(), sx * sx + sy * sy)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn pair_factor(w: f64, b: f64, s2: f64) -> f64 {
    (-w * w * s2).exp() * sinc(b * s2)
}

/// Single-photon marginal of the biphoton over the transverse window.
///
/// `ρ(k₁) = ∫_{[−Q,Q]²} |A(k₁, k₂)|² d²k₂ / Z`, evaluated in the sum variable
/// `S = k₁ + k₂`, restricted to where the pump Gaussian is non-negligible.
#[derive(Debug, Clone)]
pub struct BiphotonMarginal {
    w: f64,
    b: f64,
    q: f64,
    reach: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    z: f64,
}

impl BiphotonMarginal {
    fn new(spec: &BiphotonSpec, q: f64) -> Result<Self> {
        let (nodes, weights) = gauss_legendre(INNER_NODES, -1.0, 1.0)?;
        let reach = (2.0 * q).min(6.0 / spec.pump_waist);
        Ok(Self { w: spec.pump_waist, b: spec.sinc_scale(), q, reach, nodes, weights, z: 1.0 })
    }

    /// Unnormalized `∫|A|² d²k₂`.
    fn raw_density(&self, kx: f64, ky: f64) -> f64 {
        if kx.abs() > self.q || ky.abs() > self.q {
            return 0.0;
        }
        let span = |k: f64| ((k - self.q).max(-self.reach), (k + self.q).min(self.reach));
        let (ax, bx) = span(kx);
        let (ay, by) = span(ky);
        if ax >= bx || ay >= by {
            return 0.0;
        }
        let (hx, cx) = (0.5 * (bx - ax), 0.5 * (bx + ax));
        let (hy, cy) = (0.5 * (by - ay), 0.5 * (by + ay));
        let mut acc = 0.0;
        for (u, wu) in self.nodes.iter().zip(&self.weights) {
            let sx = cx + hx * u;
            let mut row = 0.0;
            for (v, wv) in self.nodes.iter().zip(&self.weights) {
                let sy = cy + hy * v;
                let a = pair_factor(self.w, self.b, sx * sx + sy * sy);
                row += wv * a * a;
            }
            acc += wu * row;
        }
        acc * hx * hy
    }

    /// Normalized marginal density per unit transverse area.
    pub fn density(&self, kx: f64, ky: f64) -> f64 {
        self.raw_density(kx, ky) / self.z
    }

    /// Real, non-negative single-photon amplitude `sqrt(ρ)`.
    pub fn amplitude(&self, kx: f64, ky: f64) -> f64 {
        self.density(kx, ky).sqrt()
    }

    pub fn bound(&self) -> f64 {
        self.q
    }
}

/// Two-photon packet on the degenerate shell carrying the biphoton marginal.
///
/// The returned packet has two photons per mode and amplitude `sqrt(ρ)`,
/// so its observables are those of the photon pair.
pub fn make_biphoton(spec: &BiphotonSpec, grid: &TransverseShellGrid) -> Result<WavePacket> {
    spec.validate()?;
    if ((grid.k_deg() - spec.k_deg()) / spec.k_deg()).abs() > 1e-12 {
        return Err(Error::Argument(format!(
            "shell radius {} does not match the degenerate wavenumber {}",
            grid.k_deg(),
            spec.k_deg()
        )));
    }
    let q = grid.bound();
    let first_zero = (PI / spec.sinc_scale()).sqrt();
    if 2.0 * q < first_zero {
        return Err(Error::Coverage(format!(
            "transverse window ±{q} does not reach the first phase-matching zero at |S| = {first_zero}"
        )));
    }
    let mut marginal = BiphotonMarginal::new(spec, q)?;
    let grid = Arc::new(KGrid::Shell(grid.clone()));
    let z = crate::parallel::ordered_sum(grid.len(), 64, |i| {
        let k = grid.node(i);
        marginal.raw_density(k.kx, k.ky) * grid.weight(i)
    });
    if !(z > 0.0) {
        return Err(Error::Degenerate("biphoton amplitude vanishes on the grid".into()));
    }
    marginal.z = z;
    WavePacket::from_amplitude(grid, Amplitude::Biphoton(Arc::new(marginal)), 2, PacketTag::BiphotonMarginal)?
        .normalize()
}
