use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kspace::KVec3;

/// Plane-wave mode with polarization `s ∈ {0, 1}` holding `n ≥ 1` photons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeOccupation {
    pub k: KVec3,
    pub s: u8,
    pub n: u32,
}

impl ModeOccupation {
    pub fn new(k: KVec3, s: u8, n: u32) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::Argument("mode wave vector must be finite".into()));
        }
        if s > 1 {
            return Err(Error::Argument(format!("polarization index {s} not in {{0, 1}}")));
        }
        if n == 0 {
            return Err(Error::Argument("occupation must be ≥ 1".into()));
        }
        Ok(Self { k, s, n })
    }

    fn same_mode(&self, other: &ModeOccupation) -> bool {
        self.k == other.k && self.s == other.s
    }
}

/// Product Fock state `|n₁ n₂ …⟩` over distinct plane-wave modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockConfiguration {
    modes: Vec<ModeOccupation>,
}

impl FockConfiguration {
    /// Occupations of repeated modes are added together.
    pub fn new(modes: Vec<ModeOccupation>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Argument("configuration needs at least one mode".into()));
        }
        let mut merged: Vec<ModeOccupation> = Vec::with_capacity(modes.len());
        for m in modes {
            match merged.iter_mut().find(|x| x.same_mode(&m)) {
                Some(x) => x.n += m.n,
                None => merged.push(m),
            }
        }
        Ok(Self { modes: merged })
    }

    pub fn single(k: KVec3, n: u32) -> Result<Self> {
        Self::new(vec![ModeOccupation::new(k, 0, n)?])
    }

    pub fn modes(&self) -> &[ModeOccupation] {
        &self.modes
    }

    pub fn photon_count(&self) -> u32 {
        self.modes.iter().map(|m| m.n).sum()
    }

    /// `Σ n ω_k`, `Σ n k`.
    pub fn energy_momentum(&self) -> (f64, KVec3) {
        self.modes.iter().fold((0.0, KVec3::ZERO), |(e, p), m| {
            (e + m.n as f64 * m.k.frequency(), p + m.k * m.n as f64)
        })
    }

    fn same_state(&self, other: &FockConfiguration) -> bool {
        self.modes.len() == other.modes.len()
            && self
                .modes
                .iter()
                .all(|m| other.modes.iter().any(|o| o.same_mode(m) && o.n == m.n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// `Σ sqrt(λ_i) e^{iφ_i} |config_i⟩`.
    PureSuperposition,
    /// `Σ λ_i |config_i⟩⟨config_i|`; phases are ignored.
    MixedEnsemble,
}

/// Finite Fock-basis state: a coherent superposition or statistical mixture
/// of plane-wave configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteModeState {
    terms: Vec<FockConfiguration>,
    weights: Vec<f64>,
    phases: Vec<f64>,
    kind: EnsembleKind,
}

const WEIGHT_TOL: f64 = 1e-12;

impl DiscreteModeState {
    /// Weights must be non-negative and sum to one within 1e-12.
    ///
    /// For pure superpositions, terms describing the same Fock state are
    /// merged coherently so that the configurations of the stored state are
    /// mutually orthogonal.
    pub fn new(
        terms: Vec<FockConfiguration>,
        weights: Vec<f64>,
        phases: Vec<f64>,
        kind: EnsembleKind,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Argument("state needs at least one term".into()));
        }
        if weights.len() != terms.len() || phases.len() != terms.len() {
            return Err(Error::Argument(format!(
                "{} terms but {} weights and {} phases",
                terms.len(),
                weights.len(),
                phases.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::Argument("weights must be finite and non-negative".into()));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::Argument("phases must be finite".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Argument(format!("weights sum to {total}, expected 1")));
        }
        let state = Self { terms, weights, phases, kind };
        Ok(match kind {
            EnsembleKind::PureSuperposition => state.merge_coherent()?,
            EnsembleKind::MixedEnsemble => state,
        })
    }

    /// One configuration with unit weight.
    pub fn fock(config: FockConfiguration) -> Self {
        Self {
            terms: vec![config],
            weights: vec![1.0],
            phases: vec![0.0],
            kind: EnsembleKind::PureSuperposition,
        }
    }

    /// `|n/2, n/2⟩` over two modes with `|k₁| = |k₂| = ω₀` at angle `ϑ`,
    /// `k₁` along z and `k₂` in the x–z plane.
    pub fn two_mode(n: u32, omega0: f64, theta: f64) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Domain(format!("two-mode state needs even n ≥ 2, got {n}")));
        }
        if !(omega0 > 0.0) {
            return Err(Error::Domain("ω₀ must be positive".into()));
        }
        let k1 = KVec3::new(0.0, 0.0, omega0);
        let k2 = KVec3::new(omega0 * theta.sin(), 0.0, omega0 * theta.cos());
        let cfg = FockConfiguration::new(vec![
            ModeOccupation::new(k1, 0, n / 2)?,
            ModeOccupation::new(k2, 0, n / 2)?,
        ])?;
        Ok(Self::fock(cfg))
    }

    /// `Σ λ_i |n_{k_i}⟩` (mixed) or `Σ sqrt(λ_i) e^{iφ_i} |n_{k_i}⟩` (pure).
    pub fn ensemble(
        n: u32,
        wave_vectors: &[KVec3],
        weights: Vec<f64>,
        phases: Vec<f64>,
        kind: EnsembleKind,
    ) -> Result<Self> {
        let terms = wave_vectors
            .iter()
            .map(|&k| FockConfiguration::single(k, n))
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms, weights, phases, kind)
    }

    pub fn terms(&self) -> &[FockConfiguration] {
        &self.terms
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    /// `⟨H⟩` and `⟨p⟩`. Distinct configurations are orthogonal, so the
    /// number operators are diagonal and pure and mixed kinds agree.
    pub fn energy_momentum(&self) -> (f64, KVec3) {
        self.terms
            .iter()
            .zip(&self.weights)
            .fold((0.0, KVec3::ZERO), |(e, p), (t, &w)| {
                let (te, tp) = t.energy_momentum();
                (e + w * te, p + tp * w)
            })
    }

    fn merge_coherent(self) -> Result<Self> {
        let mut terms: Vec<FockConfiguration> = Vec::new();
        let mut amps: Vec<num_complex::Complex64> = Vec::new();
        for ((t, w), ph) in self.terms.into_iter().zip(self.weights).zip(self.phases) {
            let a = num_complex::Complex64::from_polar(w.sqrt(), ph);
            match terms.iter().position(|x| x.same_state(&t)) {
                Some(i) => amps[i] += a,
                None => {
                    terms.push(t);
                    amps.push(a);
                }
            }
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm <= f64::EPSILON {
            return Err(Error::Degenerate("coherent terms cancel exactly".into()));
        }
        let weights = amps.iter().map(|a| a.norm_sqr() / norm).collect();
        let phases = amps.iter().map(|a| a.arg()).collect();
        Ok(Self { terms, weights, phases, kind: self.kind })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_must_sum_to_one() {
        let k = [KVec3::new(0.0, 0.0, 1.0), KVec3::new(1.0, 0.0, 0.0)];
        let err = DiscreteModeState::ensemble(1, &k, vec![0.5, 0.6], vec![0.0; 2], EnsembleKind::MixedEnsemble);
        assert!(matches!(err, Err(Error::Argument(_))));
    }

    #[test]
    fn two_mode_needs_even_n() {
        assert!(DiscreteModeState::two_mode(3, 1.0, 1.0).is_err());
        let s = DiscreteModeState::two_mode(4, 2.0, 0.5).unwrap();
        assert_eq!(s.terms()[0].photon_count(), 4);
    }

    #[test]
    fn collinear_two_mode_collapses_to_one_mode() {
        let s = DiscreteModeState::two_mode(2, 1.0, 0.0).unwrap();
        assert_eq!(s.terms()[0].modes().len(), 1);
        assert_eq!(s.terms()[0].modes()[0].n, 2);
    }

    #[test]
    fn pure_duplicates_merge() {
        let k = [KVec3::new(0.0, 0.0, 1.0), KVec3::new(0.0, 0.0, 1.0), KVec3::new(1.0, 0.0, 0.0)];
        let s = DiscreteModeState::ensemble(
            1,
            &k,
            vec![0.25, 0.25, 0.5],
            vec![0.0, 0.0, 0.0],
            EnsembleKind::PureSuperposition,
        )
        .unwrap();
        // amplitudes add: (1/2 + 1/2)|a⟩ + sqrt(1/2)|b⟩, renormalized
        assert_eq!(s.terms().len(), 2);
        assert!((s.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cancelling_pure_terms_are_degenerate() {
        let k = [KVec3::new(0.0, 0.0, 1.0); 2];
        let err = DiscreteModeState::ensemble(
            1,
            &k,
            vec![0.5, 0.5],
            vec![0.0, std::f64::consts::PI],
            EnsembleKind::PureSuperposition,
        );
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }
}
