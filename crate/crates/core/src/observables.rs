//! Mean energy, momentum, LI mass and propagation velocity, plus the
//! closed-form results used as oracles.
//!
//! For any state `m² = ⟨H⟩² − |⟨p⟩|²` and `β = v/c = |⟨p⟩| / ⟨H⟩`
//! (natural units).

use std::f64::consts::PI;
use std::sync::Arc;

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kspace::{KGrid, KVec3};
use crate::parallel;
use crate::states::{make_gaussian_packet, BiphotonSpec, DiscreteModeState, GaussianPacketSpec, WavePacket};
use crate::units::UnitScale;

/// `|⟨p⟩| ≤ ZERO_MOMENTUM · ⟨H⟩` is treated as a state at rest.
pub const ZERO_MOMENTUM: f64 = 1e-12;
/// Negative `m²` above `−CLAMP_TOL · ⟨H⟩²` is rounding noise and clamped.
pub const CLAMP_TOL: f64 = 1e-10;
/// Largest boundary mass fraction accepted by [`observables_packet`].
pub const COVERAGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables {
    pub energy: f64,
    pub momentum: KVec3,
    pub mass: f64,
    pub beta: f64,
    pub direction: KVec3,
    /// Set when a slightly negative `m²` was clamped to zero.
    pub clamped: bool,
}

impl Observables {
    /// Derive mass, velocity and direction from `⟨H⟩` and `⟨p⟩`.
    pub fn from_energy_momentum(energy: f64, momentum: KVec3) -> Result<Self> {
        if !(energy > 0.0) || !energy.is_finite() || !momentum.is_finite() {
            return Err(Error::Degenerate(format!("mean energy {energy} is not positive")));
        }
        let p = momentum.magnitude();
        let m2 = (energy - p) * (energy + p);
        Self::assemble(energy, momentum, m2)
    }

    fn assemble(energy: f64, momentum: KVec3, m2: f64) -> Result<Self> {
        let p = momentum.magnitude();
        let mut clamped = false;
        let mass = if m2 >= 0.0 {
            m2.sqrt()
        } else if m2 > -CLAMP_TOL * energy * energy {
            warn!("m² = {m2:e} clamped to zero");
            clamped = true;
            0.0
        } else {
            return Err(Error::Contract(format!("|⟨p⟩| = {p} exceeds ⟨H⟩ = {energy}")));
        };
        let (beta, direction) = if p <= ZERO_MOMENTUM * energy {
            (0.0, KVec3::ZERO)
        } else {
            ((p / energy).min(1.0), momentum * (1.0 / p))
        };
        Ok(Self { energy, momentum, mass, beta, direction, clamped })
    }

    /// Same state with every photon count multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            energy: self.energy * factor,
            momentum: self.momentum * factor,
            mass: self.mass * factor,
            ..*self
        }
    }

    /// SI values: energy in J, momentum in kg·m/s, mass in kg. `beta` and
    /// `direction` are dimensionless and copied unchanged.
    pub fn to_si(&self, u: &UnitScale) -> ObservablesSi {
        ObservablesSi {
            energy: u.energy_to_si(self.energy),
            momentum: self.momentum.to_array().map(|p| u.momentum_to_si(p)),
            mass: u.mass_to_si(self.mass),
            beta: self.beta,
            direction: self.direction.to_array(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservablesSi {
    pub energy: f64,
    pub momentum: [f64; 3],
    pub mass: f64,
    pub beta: f64,
    pub direction: [f64; 3],
}

/// Observables of a discrete Fock ensemble.
///
/// `m²` is accumulated in the pairwise form
/// `Σ_{a<b} c_a c_b · 4|k_a||k_b| sin²(ϑ_ab/2)`, `c = λ n`, which equals
/// `⟨H⟩² − |⟨p⟩|²` without its cancellation.
pub fn observables_discrete(s: &DiscreteModeState) -> Result<Observables> {
    let (energy, momentum) = s.energy_momentum();
    let entries: Vec<(f64, KVec3)> = s
        .terms()
        .iter()
        .zip(s.weights())
        .flat_map(|(t, &w)| t.modes().iter().map(move |m| (w * m.n as f64, m.k)))
        .collect();
    let mut m2 = 0.0;
    for (a, &(ca, ka)) in entries.iter().enumerate() {
        for &(cb, kb) in &entries[a + 1..] {
            let half = 0.5 * ka.angle_to(kb);
            m2 += ca * cb * 4.0 * ka.magnitude() * kb.magnitude() * half.sin().powi(2);
        }
    }
    if !(energy > 0.0) {
        return Err(Error::Degenerate("state carries no energy".into()));
    }
    Observables::assemble(energy, momentum, m2)
}

/// `⟨H⟩ = ⟨n⟩∫ω|ψ|²`, `⟨p⟩ = ⟨n⟩∫k|ψ|²` over the marginal density.
pub fn observables_packet(p: &WavePacket) -> Result<Observables> {
    let rho = p.marginal_density()?;
    let grid = p.grid();
    let leak = grid.boundary_fraction(&rho);
    if leak > COVERAGE_TOL {
        return Err(Error::Coverage(format!(
            "boundary carries {leak:e} of the density on {}",
            grid.describe()
        )));
    }
    let (energy, momentum) = moments(&rho, grid);
    let nbar = p.mean_photons();
    Observables::from_energy_momentum(nbar * energy, momentum * nbar)
}

/// `(Σ w ω ρ, Σ w k ρ)`.
pub(crate) fn moments(rho: &[f64], grid: &KGrid) -> (f64, KVec3) {
    let [e, px, py, pz] = parallel::ordered_sum_array::<4, _>(rho.len(), 4096, |i| {
        let k = grid.node(i);
        let m = rho[i] * grid.weight(i);
        [m * k.frequency(), m * k.kx, m * k.ky, m * k.kz]
    });
    (e, KVec3::new(px, py, pz))
}

/// `n ω₀ sin(ϑ/2)` for `|n/2, n/2⟩` over two modes at angle `ϑ`.
pub fn closed_form_two_mode_mass(n: u32, omega0: f64, theta: f64) -> Result<f64> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Domain(format!("n must be even and ≥ 2, got {n}")));
    }
    if !(omega0 > 0.0) {
        return Err(Error::Domain("ω₀ must be positive".into()));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("ϑ = {theta} outside [0, π]")));
    }
    Ok(n as f64 * omega0 * (0.5 * theta).sin())
}

/// `2 n ω₀ sqrt(Σ_{i>j} λ_i λ_j sin²(ϑ_ij/2))`.
///
/// `angles[i][j]` is the angle between modes `i` and `j`; only `i > j` is read.
pub fn closed_form_mixed_mass(n: u32, omega0: f64, weights: &[f64], angles: &[Vec<f64>]) -> Result<f64> {
    if n == 0 || !(omega0 > 0.0) {
        return Err(Error::Domain("n ≥ 1 and ω₀ > 0 required".into()));
    }
    if angles.len() != weights.len() || angles.iter().any(|r| r.len() != weights.len()) {
        return Err(Error::Argument("angle matrix must be square and match the weights".into()));
    }
    let mut acc = 0.0;
    for i in 0..weights.len() {
        for j in 0..i {
            acc += weights[i] * weights[j] * (0.5 * angles[i][j]).sin().powi(2);
        }
    }
    Ok(2.0 * n as f64 * omega0 * acc.sqrt())
}

/// Pairwise angles between wave vectors, for [`closed_form_mixed_mass`].
pub fn pairwise_angles(k: &[KVec3]) -> Vec<Vec<f64>> {
    k.iter().map(|a| k.iter().map(|&b| a.angle_to(b)).collect()).collect()
}

/// `k₀ erf(k₀/σ)(1 + σ²/2k₀²) + σ e^{−k₀²/σ²}/sqrt(π)`.
///
/// At `k₀ = 0` this tends to `2σ/sqrt(π)`.
pub fn closed_form_gaussian_energy(k0: f64, sigma: f64) -> f64 {
    let x = k0 / sigma;
    if x.abs() < 1e-8 {
        return 2.0 * sigma / PI.sqrt();
    }
    k0 * libm::erf(x) * (1.0 + sigma * sigma / (2.0 * k0 * k0)) + sigma * (-x * x).exp() / PI.sqrt()
}

/// `E − k₀` without cancellation (for `k₀ < σ` the direct difference is
/// already well conditioned).
fn gaussian_energy_excess(k0: f64, sigma: f64) -> f64 {
    let x = k0 / sigma;
    if x < 1.0 {
        return closed_form_gaussian_energy(k0, sigma) - k0;
    }
    let s2 = sigma * sigma;
    -k0 * libm::erfc(x) * (1.0 + s2 / (2.0 * k0 * k0)) + s2 / (2.0 * k0) + sigma * (-x * x).exp() / PI.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianMass {
    pub mass: f64,
    /// Large-`k₀/σ` asymptote `σ`.
    pub asymptote: f64,
    /// `|mass − σ| ≤ 2% · σ`.
    pub asymptote_valid: bool,
    pub clamped: bool,
}

/// Exact single-photon Gaussian mass `sqrt(E² − k₀²)` and its asymptote.
pub fn closed_form_gaussian_mass(k0: f64, sigma: f64) -> GaussianMass {
    let excess = gaussian_energy_excess(k0, sigma);
    let m2 = excess * (excess + 2.0 * k0);
    let clamped = m2 < 0.0;
    let mass = m2.max(0.0).sqrt();
    GaussianMass {
        mass,
        asymptote: sigma,
        asymptote_valid: (mass - sigma).abs() <= 0.02 * sigma,
        clamped,
    }
}

/// Leading-order velocity `sqrt(1 − σ²/k₀²)`.
pub fn leading_order_beta(k0: f64, sigma: f64) -> f64 {
    (1.0 - (sigma / k0).powi(2)).max(0.0).sqrt()
}

/// Exact closed-form Gaussian velocity `k₀ / E`.
pub fn closed_form_gaussian_beta(k0: f64, sigma: f64) -> f64 {
    k0 / closed_form_gaussian_energy(k0, sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeScalingRow {
    pub scale: f64,
    pub sigma: f64,
    pub k0: f64,
    /// `V^{1/3} = sqrt(2π)/σ`.
    pub v_cbrt: f64,
    pub mass: f64,
    pub product: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeScaling {
    pub rows: Vec<VolumeScalingRow>,
    /// `max(m V^{1/3}) / min(m V^{1/3}) − 1`.
    pub spread: f64,
    /// `None` for a single-member family.
    pub constant: Option<bool>,
}

pub const VOLUME_SCALING_TOL: f64 = 0.03;

/// Quadrature mass `m` against localization length `V^{1/3}` for the
/// Gaussian family `σ = σ₀/a`, `k₀ = ratio · σ`, on default grids.
///
/// A Gaussian of momentum width `σ` has coordinate-space amplitude width
/// `1/σ`; its localization volume is taken as `(sqrt(2π)/σ)³`.
pub fn volume_scaling_check(ratio: f64, sigma0: f64, scales: &[f64]) -> Result<VolumeScaling> {
    let mut rows = Vec::with_capacity(scales.len());
    for &a in scales {
        if !(a > 0.0) {
            return Err(Error::Domain(format!("scale must be positive, got {a}")));
        }
        let sigma = sigma0 / a;
        let k0 = ratio * sigma;
        let spec = GaussianPacketSpec::along_z(k0, sigma)?;
        let grid = Arc::new(KGrid::Spherical(spec.default_grid()?));
        let obs = observables_packet(&make_gaussian_packet(&spec, grid)?)?;
        let v_cbrt = (2.0 * PI).sqrt() / sigma;
        rows.push(VolumeScalingRow { scale: a, sigma, k0, v_cbrt, mass: obs.mass, product: obs.mass * v_cbrt });
    }
    let max = rows.iter().map(|r| r.product).fold(f64::MIN, f64::max);
    let min = rows.iter().map(|r| r.product).fold(f64::MAX, f64::min);
    let spread = if rows.is_empty() { 0.0 } else { max / min - 1.0 };
    let constant = (rows.len() > 1).then_some(spread <= VOLUME_SCALING_TOL);
    Ok(VolumeScaling { rows, spread, constant })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiphotonEstimate {
    pub mass: f64,
    /// `1/(2 w_p)`, the scale the estimate should exceed.
    pub floor: f64,
    pub schmidt_number: f64,
    pub in_regime: bool,
}

/// `(K/2w_p) sqrt(ln(πL/2n_oλ_p)/π)` with `K = 2π w_p sqrt(n_o)/sqrt(Lλ_p)`.
pub fn biphoton_mass_estimate(spec: &BiphotonSpec) -> Result<BiphotonEstimate> {
    spec.validate()?;
    let w = spec.pump_waist;
    let l = spec.crystal_length;
    let lp = spec.pump_wavelength;
    let k = 2.0 * PI * w * spec.n_o.sqrt() / (l * lp).sqrt();
    let log = (PI * l / (2.0 * spec.n_o * lp)).ln().max(0.0);
    let in_regime = spec.in_regime();
    if !in_regime {
        warn!("biphoton estimate requested outside the wide-pump regime");
    }
    Ok(BiphotonEstimate {
        mass: k / (2.0 * w) * (log / PI).sqrt(),
        floor: 1.0 / (2.0 * w),
        schmidt_number: k,
        in_regime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kspace::SphericalKGrid;
    use crate::states::EnsembleKind;

    #[test]
    fn single_mode_is_massless() {
        for n in [1, 2, 7] {
            let s = DiscreteModeState::fock(
                crate::states::FockConfiguration::single(KVec3::new(0.3, -1.0, 2.0), n).unwrap(),
            );
            let o = observables_discrete(&s).unwrap();
            assert_eq!(o.mass, 0.0);
            assert!((o.beta - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_mode_right_angle() {
        let s = DiscreteModeState::two_mode(2, 1.0, PI / 2.0).unwrap();
        let o = observables_discrete(&s).unwrap();
        assert!((o.mass - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn symmetric_triple_is_at_rest() {
        let k: Vec<KVec3> = (0..3)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 3.0;
                KVec3::new(a.cos(), a.sin(), 0.0)
            })
            .collect();
        let w = vec![1.0 / 3.0; 3];
        let s = DiscreteModeState::ensemble(2, &k, w, vec![0.0; 3], EnsembleKind::MixedEnsemble).unwrap();
        let o = observables_discrete(&s).unwrap();
        assert_eq!(o.beta, 0.0);
        assert_eq!(o.direction, KVec3::ZERO);
        assert!((o.mass - 2.0).abs() < 1e-14);
    }

    #[test]
    fn clamp_and_contract() {
        let o = Observables::assemble(1.0, KVec3::new(0.0, 0.0, 1.0), -1e-12).unwrap();
        assert!(o.clamped && o.mass == 0.0);
        assert!(matches!(
            Observables::from_energy_momentum(1.0, KVec3::new(0.0, 0.0, 1.1)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn gaussian_closed_forms() {
        let g = closed_form_gaussian_mass(10.0, 1.0);
        assert!((g.mass - 1.001_249_219_725_039_3).abs() < 1e-13);
        assert!(g.asymptote_valid);
        let g2 = closed_form_gaussian_mass(2.0, 1.0);
        assert!((g2.mass - 1.030_358_523_525_566_8).abs() < 1e-13);
        assert!(!g2.asymptote_valid);
        assert!((closed_form_gaussian_energy(2.0, 1.0) - 2.249_808_588_969_689_7).abs() < 1e-14);
        assert!(closed_form_gaussian_mass(1.0, 1e-6).mass < 2e-6);
        let k0 = 1e4;
        assert!((closed_form_gaussian_energy(k0, 1.0) - k0 * (1.0 + 0.5 / (k0 * k0))).abs() < 1e-9);
    }

    #[test]
    fn biphoton_estimate_ignores_waist() {
        let a = BiphotonSpec::new(100.0, 200.0, 0.0405, 1.66).unwrap();
        let b = BiphotonSpec { pump_waist: 200.0, ..a };
        let ea = biphoton_mass_estimate(&a).unwrap();
        let eb = biphoton_mass_estimate(&b).unwrap();
        assert!((ea.mass - eb.mass).abs() < 1e-12 * ea.mass);
        assert!(ea.mass > ea.floor);
        assert!(ea.in_regime);
    }

    #[test]
    fn isotropic_packet_is_at_rest() {
        let grid = Arc::new(KGrid::Spherical(SphericalKGrid::new(64, 16, 16, 10.0).unwrap()));
        let p = WavePacket::from_fn(grid, 1, |k| num_complex::Complex64::new((-k.dot(k)).exp(), 0.0))
            .unwrap()
            .normalize()
            .unwrap();
        let o = observables_packet(&p).unwrap();
        assert_eq!(o.beta, 0.0);
        assert!((o.mass - o.energy).abs() < 1e-12 * o.energy);
    }

    #[test]
    fn beta_survives_unit_change() {
        let s = DiscreteModeState::two_mode(4, 1.3, 1.1).unwrap();
        let o = observables_discrete(&s).unwrap();
        let a = o.to_si(&UnitScale::si(1e6));
        let b = o.to_si(&UnitScale { hbar: 2.0 * crate::units::HBAR_SI, ..UnitScale::si(1e6) });
        assert_eq!(a.beta.to_bits(), b.beta.to_bits());
        assert_eq!(a.beta.to_bits(), o.beta.to_bits());
    }

    #[test]
    fn single_row_family_has_no_flag() {
        let v = volume_scaling_check(20.0, 1.0, &[1.0]).unwrap();
        assert_eq!(v.rows.len(), 1);
        assert!(v.constant.is_none());
    }
}
