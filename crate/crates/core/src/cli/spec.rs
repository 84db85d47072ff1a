//! State-spec documents: schema, validation and conversion to natural units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kspace::KVec3;
use crate::states::{
    BiphotonSpec, DiscreteModeState, EnsembleKind, FockConfiguration, GaussianPacketSpec, ModeOccupation,
};
use crate::units::{UnitScale, UnitSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpecDocument {
    pub units: UnitSystem,
    /// Reference wavenumber in m⁻¹; required for SI documents only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_ref: Option<f64>,
    pub state: StateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tasks: Option<Vec<TaskSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Discrete {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kind: Option<EnsembleKind>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        terms: Option<Vec<TermSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        two_mode: Option<TwoModeSpec>,
    },
    Gaussian {
        k0: [f64; 3],
        sigma: f64,
        #[serde(default)]
        r0: [f64; 3],
        #[serde(default = "one")]
        photons: u32,
    },
    Biphoton {
        pump_waist: f64,
        crystal_length: f64,
        pump_wavelength: f64,
        n_o: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        transverse_nodes: Option<usize>,
    },
    Superposition {
        a: Box<StateSpec>,
        b: Box<StateSpec>,
        #[serde(default)]
        relative_phase: f64,
    },
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub modes: Vec<ModeSpec>,
    pub weight: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: [f64; 3],
    #[serde(default)]
    pub s: u8,
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoModeSpec {
    pub n: u32,
    pub omega0: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_phi: Option<usize>,
    /// Radial cutoff in the document's wavenumber unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cartesian_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub op: TaskOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<TaskParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskOp {
    Observables,
    Detect,
    Decompose,
    Oracle,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cartesian_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toa: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub export_records: Option<bool>,
}

/// Packet states, in natural units, that can be rebuilt on any grid.
#[derive(Debug, Clone, PartialEq)]
pub enum PacketRecipe {
    Gaussian { spec: GaussianPacketSpec, photons: u32 },
    Biphoton(BiphotonSpec),
    Superposition { a: Box<PacketRecipe>, b: Box<PacketRecipe>, relative_phase: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedState {
    Discrete(DiscreteModeState),
    Packet(PacketRecipe),
}

impl StateSpecDocument {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Argument(format!("spec: {e}")))
    }

    /// Conversion to natural units implied by the document.
    pub fn scale(&self) -> Result<Option<UnitScale>> {
        match (self.units, self.k_ref) {
            (UnitSystem::Si, Some(k)) if k > 0.0 && k.is_finite() => Ok(Some(UnitScale::si(k))),
            (UnitSystem::Si, _) => Err(Error::Argument("SI documents need a positive \"k_ref\"".into())),
            (UnitSystem::Natural, None) => Ok(None),
            (UnitSystem::Natural, Some(_)) => {
                Err(Error::Argument("\"k_ref\" is only meaningful for SI documents".into()))
            }
        }
    }

    pub fn resolve(&self) -> Result<ResolvedState> {
        let scale = self.scale()?;
        resolve_state(&self.state, scale.as_ref())
    }

    /// Radial cutoff override in natural units.
    pub fn k_max_override(&self) -> Result<Option<f64>> {
        let scale = self.scale()?;
        Ok(self.grid.as_ref().and_then(|g| g.k_max).map(|k| wavenumber(k, scale.as_ref())))
    }
}

fn wavenumber(k: f64, s: Option<&UnitScale>) -> f64 {
    s.map_or(k, |s| s.wavenumber_to_natural(k))
}

fn length(x: f64, s: Option<&UnitScale>) -> f64 {
    s.map_or(x, |s| s.length_to_natural(x))
}

fn vec3(k: [f64; 3], s: Option<&UnitScale>) -> KVec3 {
    KVec3::from_array(k.map(|v| wavenumber(v, s)))
}

fn resolve_state(spec: &StateSpec, s: Option<&UnitScale>) -> Result<ResolvedState> {
    Ok(match spec {
        StateSpec::Discrete { kind, terms, two_mode } => {
            ResolvedState::Discrete(match (terms, two_mode) {
                (Some(terms), None) => {
                    let configs = terms
                        .iter()
                        .map(|t| {
                            let modes = t
                                .modes
                                .iter()
                                .map(|m| ModeOccupation::new(vec3(m.k, s), m.s, m.n))
                                .collect::<Result<Vec<_>>>()?;
                            FockConfiguration::new(modes)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    DiscreteModeState::new(
                        configs,
                        terms.iter().map(|t| t.weight).collect(),
                        terms.iter().map(|t| t.phase).collect(),
                        kind.unwrap_or(EnsembleKind::PureSuperposition),
                    )?
                }
                (None, Some(t)) => {
                    if kind.is_some() {
                        return Err(Error::Argument("\"kind\" does not apply to \"two_mode\"".into()));
                    }
                    DiscreteModeState::two_mode(t.n, wavenumber(t.omega0, s), t.theta)?
                }
                _ => {
                    return Err(Error::Argument(
                        "discrete state needs exactly one of \"terms\" and \"two_mode\"".into(),
                    ))
                }
            })
        }
        StateSpec::Gaussian { k0, sigma, r0, photons } => {
            if *photons == 0 {
                return Err(Error::Argument("photons must be ≥ 1".into()));
            }
            let spec = GaussianPacketSpec::new(vec3(*k0, s), wavenumber(*sigma, s), r0.map(|x| length(x, s)))?;
            ResolvedState::Packet(PacketRecipe::Gaussian { spec, photons: *photons })
        }
        StateSpec::Biphoton { pump_waist, crystal_length, pump_wavelength, n_o, bound, transverse_nodes } => {
            let spec = BiphotonSpec {
                pump_waist: length(*pump_waist, s),
                crystal_length: length(*crystal_length, s),
                pump_wavelength: length(*pump_wavelength, s),
                n_o: *n_o,
                bound: bound.map(|q| wavenumber(q, s)),
                transverse_nodes: *transverse_nodes,
            };
            spec.validate()?;
            ResolvedState::Packet(PacketRecipe::Biphoton(spec))
        }
        StateSpec::Superposition { a, b, relative_phase } => {
            let part = |x: &StateSpec| match resolve_state(x, s)? {
                ResolvedState::Packet(PacketRecipe::Biphoton(_)) => {
                    Err(Error::Argument("biphotons cannot enter superpositions".into()))
                }
                ResolvedState::Packet(p) => Ok(p),
                ResolvedState::Discrete(_) => {
                    Err(Error::Argument("superpositions combine wave packets only".into()))
                }
            };
            if !relative_phase.is_finite() {
                return Err(Error::Argument("relative phase must be finite".into()));
            }
            ResolvedState::Packet(PacketRecipe::Superposition {
                a: Box::new(part(a)?),
                b: Box::new(part(b)?),
                relative_phase: *relative_phase,
            })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"units":"natural","state":{"type":"gaussian","k0":[0,0,10],"sigma":1,"colour":3}}"#;
        assert!(StateSpecDocument::parse(text).is_err());
        let text = r#"{"units":"natural","extra":1,"state":{"type":"gaussian","k0":[0,0,10],"sigma":1}}"#;
        assert!(StateSpecDocument::parse(text).is_err());
    }

    #[test]
    fn si_requires_k_ref() {
        let text = r#"{"units":"si","state":{"type":"gaussian","k0":[0,0,1e7],"sigma":1e6}}"#;
        let doc = StateSpecDocument::parse(text).unwrap();
        assert!(doc.resolve().is_err());
    }

    #[test]
    fn si_gaussian_resolves_to_natural() {
        let text = r#"{"units":"si","k_ref":1e6,"state":{"type":"gaussian","k0":[0,0,1e7],"sigma":1e6,"r0":[1e-6,0,0]}}"#;
        let doc = StateSpecDocument::parse(text).unwrap();
        match doc.resolve().unwrap() {
            ResolvedState::Packet(PacketRecipe::Gaussian { spec, .. }) => {
                assert_eq!(spec.k0, KVec3::new(0.0, 0.0, 10.0));
                assert_eq!(spec.sigma, 1.0);
                assert_eq!(spec.r0, [1.0, 0.0, 0.0]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn discrete_forms() {
        let text = r#"{"units":"natural","state":{"type":"discrete","two_mode":{"n":2,"omega0":1,"theta":3.141592653589793}}}"#;
        assert!(matches!(StateSpecDocument::parse(text).unwrap().resolve().unwrap(), ResolvedState::Discrete(_)));
        let text = r#"{"units":"natural","state":{"type":"discrete","kind":"mixed_ensemble","terms":[
            {"modes":[{"k":[0,0,1],"n":2}],"weight":0.5},{"modes":[{"k":[1,0,0],"n":2}],"weight":0.5}]}}"#;
        assert!(matches!(StateSpecDocument::parse(text).unwrap().resolve().unwrap(), ResolvedState::Discrete(_)));
        let text = r#"{"units":"natural","state":{"type":"discrete"}}"#;
        assert!(StateSpecDocument::parse(text).unwrap().resolve().is_err());
    }
}
