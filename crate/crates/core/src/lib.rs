//! Lorentz-invariant (LI) mass and mean propagation velocity of multiphoton
//! states of light.
//!
//! Internally everything is expressed in natural units `ħ = c = 1`, with
//! wavenumbers measured in a user-chosen reference `k_ref`. Energies are then
//! in units of `ħ c k_ref`, momenta in `ħ k_ref` and masses in `ħ k_ref / c`;
//! see [`units`] for the conversion to SI.
//!
//! Module map:
//!
//! * [`kspace`]: wave-vector sampling, quadrature and spherical harmonics.
//! * [`states`]: discrete Fock ensembles, wave packets, SPDC biphotons.
//! * [`observables`]: mean energy, momentum, LI mass, velocity and the
//!   closed-form results they are checked against.
//! * [`restframe`]: boost into the rest frame and fixed-mass mode expansion.
//! * [`detection`]: first-order intensity synthesis and kinematic velocity
//!   estimators.
//! * [`cli`]: spec documents, reports and the batch driver.

pub mod cli;
pub mod detection;
pub mod error;
pub mod kspace;
pub mod observables;
pub mod parallel;
pub mod restframe;
pub mod states;
pub mod units;

pub use error::{Error, Result};
pub use kspace::{CartesianKGrid, KGrid, KVec3, SphericalKGrid, TransverseShellGrid};
pub use observables::Observables;
pub use states::{DiscreteModeState, GaussianPacketSpec, WavePacket};
