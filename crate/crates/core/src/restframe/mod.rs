//! Rest-frame boost and fixed-LI-mass spherical-harmonic modes.
//!
//! Amplitudes transform with the scalar, measure-preserving law
//! `ψ'(k') = ψ(Λ⁻¹k') sqrt(ω/ω')`, which keeps `∫|ψ|² dk` invariant because
//! `d³k/ω` is Lorentz invariant.

mod modes;

pub use modes::{
    decompose, energy_in_modes, reconstruct, scalar_product_modes, AngularDecomposition, TRUNCATION_WARN,
};

use std::sync::Arc;

use log::debug;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kspace::{KGrid, KVec3, LorentzBoost, SphericalKGrid};
use crate::observables::observables_packet;
use crate::parallel;
use crate::states::{Amplitude, PacketTag, WavePacket};

/// Masses at or below this (natural units) have no usable rest frame.
pub const MASS_FLOOR: f64 = 1e-8;
/// Largest tolerated norm change caused by the boost resampling.
pub const BOOST_NORM_TOL: f64 = 1e-6;
/// Density cutoff, relative to the peak, used to locate the support.
const SUPPORT_CUTOFF: f64 = 1e-16;
/// Upper bound on rest-frame grid nodes, to keep memory predictable.
const MAX_REST_NODES: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoostParameters {
    /// `γ = ⟨H⟩_lab / m`.
    pub gamma: f64,
    pub direction: KVec3,
    pub rapidity: f64,
    pub speed: f64,
    pub lab_energy: f64,
    pub mass: f64,
    /// `Σ_s ∫|ψ'_s|²` before the final renormalization.
    pub norm_after_boost: f64,
}

impl BoostParameters {
    pub fn boost(&self) -> Result<LorentzBoost> {
        if self.speed == 0.0 {
            return Ok(LorentzBoost::identity());
        }
        LorentzBoost::to_rest_frame(self.lab_energy, self.direction * (self.speed * self.lab_energy))
    }
}

fn next_pow2(x: usize) -> usize {
    x.max(1).next_power_of_two()
}

/// Spherical grid for the rest-frame image of `p` under `boost`.
///
/// `k_max` covers the boosted support (lab nodes whose density exceeds
/// `1e-16` of the peak) with a 5% margin. Without an explicit shape the lab
/// shape (or the default) is refined in `k` and `θ` by the power of two
/// `≥ γ/5`, resolving the thin sheet a fast packet becomes.
pub fn rest_frame_grid(
    p: &WavePacket,
    boost: &LorentzBoost,
    shape: Option<(usize, usize, usize)>,
) -> Result<SphericalKGrid> {
    let grid = p.grid();
    let rho = p.weighted_density();
    let peak = rho.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Degenerate("packet has no support".into()));
    }
    let reach = parallel::map_chunks(rho.len(), 4096, |r| {
        r.filter(|&i| rho[i] >= SUPPORT_CUTOFF * peak)
            .map(|i| boost.apply(grid.node(i)).magnitude())
            .fold(0.0, f64::max)
    })
    .into_iter()
    .fold(0.0, f64::max);
    let k_max = 1.05 * reach;
    let (nk, nt, np) = match shape {
        Some(s) => s,
        None => {
            let (bk, bt, bp) = grid
                .as_spherical()
                .map(|g| (g.n_k(), g.n_theta(), g.n_phi()))
                .unwrap_or(SphericalKGrid::DEFAULT_SHAPE);
            let mut f = next_pow2((boost.gamma() / 5.0).ceil() as usize);
            while f > 1 && bk * f * bt * f * bp > MAX_REST_NODES {
                f /= 2;
            }
            (bk * f, bt * f, bp)
        }
    };
    debug!("rest-frame grid {nk}x{nt}x{np}, k_max = {k_max}");
    SphericalKGrid::new(nk, nt, np, k_max)
}

/// Apply `boost` to every component and sample the result on `grid`.
///
/// Closed-form components are evaluated exactly at the pulled-back nodes;
/// sampled ones through tricubic interpolation.
pub fn apply_boost(p: &WavePacket, boost: &LorentzBoost, grid: Arc<KGrid>) -> Result<WavePacket> {
    p.map_models(grid, PacketTag::Boosted, |source| match source {
        Amplitude::Boosted { source, boost: inner } if compose_is_identity(&inner, boost) => *source,
        other => Amplitude::Boosted { source: Box::new(other), boost: *boost },
    })
}

fn compose_is_identity(a: &LorentzBoost, b: &LorentzBoost) -> bool {
    a.velocity() == -b.velocity()
}

/// Boost a normalized packet into its rest frame.
///
/// Packets already at rest are returned unchanged with `γ = 1`. Otherwise
/// the rest-frame packet lives on `target` (or on [`rest_frame_grid`]),
/// and is renormalized after checking the norm changed by at most 1e-6.
pub fn boost_to_rest_frame(p: &WavePacket, target: Option<Arc<KGrid>>) -> Result<(WavePacket, BoostParameters)> {
    let obs = observables_packet(p)?;
    if obs.mass <= MASS_FLOOR {
        return Err(Error::Degenerate(format!("LI mass {} at or below the floor {MASS_FLOOR}", obs.mass)));
    }
    if obs.beta == 0.0 {
        let params = BoostParameters {
            gamma: 1.0,
            direction: KVec3::ZERO,
            rapidity: 0.0,
            speed: 0.0,
            lab_energy: obs.energy,
            mass: obs.mass,
            norm_after_boost: p.norm(),
        };
        return Ok((p.clone(), params));
    }
    let boost = LorentzBoost::to_rest_frame(obs.energy, obs.momentum)?;
    let grid = match target {
        Some(g) => g,
        None => Arc::new(KGrid::Spherical(rest_frame_grid(p, &boost, None)?)),
    };
    let boosted = apply_boost(p, &boost, grid)?;
    let norm = boosted.norm();
    if (norm - 1.0).abs() > BOOST_NORM_TOL {
        return Err(Error::Coverage(format!(
            "boosted packet keeps norm {norm} on {}",
            boosted.grid().describe()
        )));
    }
    let params = BoostParameters {
        gamma: boost.gamma(),
        direction: obs.direction,
        rapidity: boost.rapidity(),
        speed: obs.beta,
        lab_energy: obs.energy,
        mass: obs.mass,
        norm_after_boost: norm,
    };
    Ok((boosted.normalize()?, params))
}

/// `∫|ψ_a − ψ_b|²` summed over polarizations; packets must share a grid.
pub fn l2_distance_sq(a: &WavePacket, b: &WavePacket) -> Result<f64> {
    if a.grid() != b.grid() || a.components().len() != b.components().len() {
        return Err(Error::Argument("packets live on different grids".into()));
    }
    let g = a.grid();
    Ok(a.components()
        .iter()
        .zip(b.components())
        .map(|(x, y)| {
            parallel::ordered_sum(g.len(), 4096, |i| (x.samples[i] - y.samples[i]).norm_sqr() * g.weight(i))
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_gaussian_packet, GaussianPacketSpec};
    use num_complex::Complex64;

    #[test]
    fn isotropic_packet_is_its_own_rest_frame() {
        let g = Arc::new(KGrid::Spherical(SphericalKGrid::new(48, 16, 16, 8.0).unwrap()));
        let p = WavePacket::from_fn(g, 1, |k| Complex64::new((-k.dot(k)).exp(), 0.0))
            .unwrap()
            .normalize()
            .unwrap();
        let (r, params) = boost_to_rest_frame(&p, None).unwrap();
        assert_eq!(params.gamma, 1.0);
        assert_eq!(r.components()[0].samples, p.components()[0].samples);
    }

    #[test]
    fn moderate_gaussian_reaches_rest() {
        let spec = GaussianPacketSpec::along_z(2.0, 1.0).unwrap();
        let g = Arc::new(KGrid::Spherical(spec.default_grid().unwrap()));
        let p = make_gaussian_packet(&spec, g).unwrap();
        let (r, params) = boost_to_rest_frame(&p, None).unwrap();
        let o = observables_packet(&r).unwrap();
        assert!(o.momentum.magnitude() <= 1e-6 * params.mass);
        assert!((o.energy - params.mass).abs() <= 1e-6 * params.mass);
        assert!((params.norm_after_boost - 1.0).abs() < 1e-8);
        let back = apply_boost(&r, &params.boost().unwrap().inverse(), p.grid_arc()).unwrap();
        assert!(l2_distance_sq(&back, &p).unwrap().sqrt() < 1e-6);
    }

    #[test]
    fn single_node_state_is_degenerate() {
        let sg = SphericalKGrid::new(16, 8, 8, 1.0).unwrap();
        let target = sg.node(8 * 8 * 2 + 3);
        let g = Arc::new(KGrid::Spherical(sg));
        let p = WavePacket::from_fn(g, 1, move |k| {
            if k == target {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap()
        .normalize()
        .unwrap();
        assert!(matches!(boost_to_rest_frame(&p, None), Err(Error::Degenerate(_))));
    }
}
