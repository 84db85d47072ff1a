//! State model: discrete Fock ensembles, continuous wave packets, Gaussian
//! packets and SPDC biphotons.

mod amplitude;
mod biphoton;
mod discrete;
mod gaussian;
mod interp;
mod packet;

pub use amplitude::Amplitude;
pub use biphoton::{make_biphoton, BiphotonMarginal, BiphotonSpec, REGIME_FACTOR};
pub use discrete::{DiscreteModeState, EnsembleKind, FockConfiguration, ModeOccupation};
pub use gaussian::{make_gaussian_packet, GaussianPacketSpec, TAIL_TOL};
pub use interp::interpolate;
pub use packet::{sample, superpose, PacketTag, PolarizationComponent, WavePacket, NORM_TOL};
