use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::biphoton::BiphotonMarginal;
use super::gaussian::GaussianPacketSpec;
use crate::kspace::{KVec3, LorentzBoost};

type AmplitudeFn = dyn Fn(KVec3) -> Complex64 + Send + Sync;

/// Closed-form single-photon amplitude `ψ(k)`.
///
/// Packets keep one of these next to their samples so they can be evaluated
/// exactly at arbitrary wave vectors, e.g. at the pulled-back nodes of a
/// boosted grid.
#[derive(Clone)]
pub enum Amplitude {
    Gaussian(GaussianPacketSpec),
    /// `Σ c_i ψ_i(k)`.
    Combination(Vec<(Complex64, Amplitude)>),
    /// Amplitude seen from the frame reached by `boost`:
    /// `ψ'(k') = ψ(Λ⁻¹k') sqrt(ω/ω')`.
    Boosted { source: Box<Amplitude>, boost: LorentzBoost },
    Biphoton(Arc<BiphotonMarginal>),
    Custom(Arc<AmplitudeFn>),
}

impl fmt::Debug for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Amplitude::Gaussian(s) => f.debug_tuple("Gaussian").field(s).finish(),
            Amplitude::Combination(t) => f.debug_tuple("Combination").field(t).finish(),
            Amplitude::Boosted { source, boost } => f
                .debug_struct("Boosted")
                .field("source", source)
                .field("boost", boost)
                .finish(),
            Amplitude::Biphoton(_) => f.write_str("Biphoton(..)"),
            Amplitude::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Amplitude {
    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(KVec3) -> Complex64 + Send + Sync + 'static,
    {
        Amplitude::Custom(Arc::new(f))
    }

    pub fn scaled(self, c: Complex64) -> Self {
        match self {
            Amplitude::Combination(terms) => {
                Amplitude::Combination(terms.into_iter().map(|(a, t)| (a * c, t)).collect())
            }
            other => Amplitude::Combination(vec![(c, other)]),
        }
    }

    pub fn eval(&self, k: KVec3) -> Complex64 {
        match self {
            Amplitude::Gaussian(spec) => gaussian_amplitude(spec, k),
            Amplitude::Combination(terms) => terms.iter().map(|(c, a)| c * a.eval(k)).sum(),
            Amplitude::Boosted { source, boost } => {
                let lab = boost.inverse().apply(k);
                let w_rest = k.frequency();
                let w_lab = lab.frequency();
                let jac = if w_rest > 0.0 { (w_lab / w_rest).sqrt() } else { boost.gamma().sqrt() };
                source.eval(lab) * jac
            }
            Amplitude::Biphoton(m) => Complex64::new(m.amplitude(k.kx, k.ky), 0.0),
            Amplitude::Custom(f) => f(k),
        }
    }
}

/// `π^{-3/4} σ^{-3/2} exp(−|k−k₀|²/2σ²) · e^{−i k·r₀}`, so that the field
/// `∫ψ e^{ik·r}` peaks at `r₀`.
fn gaussian_amplitude(spec: &GaussianPacketSpec, k: KVec3) -> Complex64 {
    let d = k - spec.k0;
    let s2 = spec.sigma * spec.sigma;
    let env = PI.powf(-0.75) * spec.sigma.powf(-1.5) * (-d.dot(d) / (2.0 * s2)).exp();
    let r0 = KVec3::from_array(spec.r0);
    Complex64::from_polar(env, -k.dot(r0))
}
