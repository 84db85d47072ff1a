use std::sync::Arc;

use num_complex::Complex64;

use super::amplitude::Amplitude;
use super::interp;
use crate::error::{Error, Result};
use crate::kspace::{integrate, KGrid, KVec3};
use crate::parallel;

/// Tolerance on `Σ_s ∫|ψ_s|² = 1` for operations requiring a normalized packet.
pub const NORM_TOL: f64 = 1e-10;

/// Amplitude `ψ_s(k)` of one polarization component.
///
/// `samples` always holds the values at the grid nodes. When the component
/// was built from a closed form, `model` reproduces the samples exactly and
/// can be evaluated off-grid.
#[derive(Debug, Clone)]
pub struct PolarizationComponent {
    pub photons: u32,
    pub samples: Vec<Complex64>,
    pub model: Option<Amplitude>,
}

impl PolarizationComponent {
    pub fn eval(&self, grid: &KGrid, k: KVec3) -> Result<Complex64> {
        match &self.model {
            Some(m) => Ok(m.eval(k)),
            None => interp::interpolate(&self.samples, grid, k),
        }
    }
}

/// Provenance of a packet's amplitude, echoed into reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketTag {
    Gaussian,
    BiphotonMarginal,
    Custom,
    Superposition,
    Boosted,
    Reconstructed,
}

/// Multiphoton wave packet `Σ_s ∫ψ_s(k)|n_{k,s}⟩ dk` sampled on a grid.
#[derive(Debug, Clone)]
pub struct WavePacket {
    grid: Arc<KGrid>,
    components: Vec<PolarizationComponent>,
    tag: PacketTag,
}

impl WavePacket {
    /// Packet from raw per-polarization components. At most two components
    /// are allowed and every sample must be finite.
    pub fn from_components(grid: Arc<KGrid>, components: Vec<PolarizationComponent>, tag: PacketTag) -> Result<Self> {
        if components.is_empty() || components.len() > 2 {
            return Err(Error::Argument(format!(
                "expected 1 or 2 polarization components, got {}",
                components.len()
            )));
        }
        for c in &components {
            if c.samples.len() != grid.len() {
                return Err(Error::Argument(format!(
                    "component has {} samples, grid has {} nodes",
                    c.samples.len(),
                    grid.len()
                )));
            }
            if c.photons == 0 {
                return Err(Error::Argument("photons per mode must be ≥ 1".into()));
            }
            if c.samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Argument("amplitude samples must be finite".into()));
            }
        }
        Ok(Self { grid, components, tag })
    }

    /// Single-polarization packet sampled from a closed-form amplitude.
    pub fn from_amplitude(grid: Arc<KGrid>, amplitude: Amplitude, photons: u32, tag: PacketTag) -> Result<Self> {
        let samples = sample(&grid, |k| amplitude.eval(k));
        Self::from_components(
            grid,
            vec![PolarizationComponent { photons, samples, model: Some(amplitude) }],
            tag,
        )
    }

    /// Single-polarization packet from a closure, e.g. a custom amplitude.
    pub fn from_fn<F>(grid: Arc<KGrid>, photons: u32, f: F) -> Result<Self>
    where
        F: Fn(KVec3) -> Complex64 + Send + Sync + 'static,
    {
        Self::from_amplitude(grid, Amplitude::custom(f), photons, PacketTag::Custom)
    }

    pub fn grid(&self) -> &KGrid {
        &self.grid
    }
    pub fn grid_arc(&self) -> Arc<KGrid> {
        Arc::clone(&self.grid)
    }
    pub fn components(&self) -> &[PolarizationComponent] {
        &self.components
    }
    pub fn tag(&self) -> PacketTag {
        self.tag
    }

    /// Photon-number weighted mean `⟨n⟩ = Σ_s n_s ∫|ψ_s|² / Σ_s ∫|ψ_s|²`.
    pub fn mean_photons(&self) -> f64 {
        let norms: Vec<f64> = self.components.iter().map(|c| self.component_norm(c)).collect();
        let total: f64 = norms.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        self.components.iter().zip(&norms).map(|(c, n)| c.photons as f64 * n).sum::<f64>() / total
    }

    fn component_norm(&self, c: &PolarizationComponent) -> f64 {
        let g = &*self.grid;
        parallel::ordered_sum(c.samples.len(), 4096, |i| c.samples[i].norm_sqr() * g.weight(i))
    }

    /// `Σ_s ∫|ψ_s|² dk`.
    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| self.component_norm(c)).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOL
    }

    /// Multiply every component (samples and model) by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let components = self
            .components
            .iter()
            .map(|comp| PolarizationComponent {
                photons: comp.photons,
                samples: comp.samples.iter().map(|z| z * c).collect(),
                model: comp.model.clone().map(|m| m.scaled(c)),
            })
            .collect();
        Self { grid: Arc::clone(&self.grid), components, tag: self.tag }
    }

    /// Rescale so that `Σ_s ∫|ψ_s|² = 1`.
    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Degenerate(format!("cannot normalize a packet of norm {n}")));
        }
        if n == 1.0 {
            return Ok(self.clone());
        }
        Ok(self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }

    /// Same amplitude, every polarization now carrying `n` photons per mode.
    pub fn with_photons(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("photons per mode must be ≥ 1".into()));
        }
        let mut out = self.clone();
        for c in &mut out.components {
            c.photons = n;
        }
        Ok(out)
    }

    /// `|ψ(k)|² = (1/⟨n⟩) Σ_s n_s |ψ_s(k)|²` at each node.
    pub fn marginal_density(&self) -> Result<Vec<f64>> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Contract(format!("packet norm is {norm}, expected 1")));
        }
        Ok(self.weighted_density())
    }

    /// Marginal density without the normalization pre-condition; integrates
    /// to the packet norm.
    pub(crate) fn weighted_density(&self) -> Vec<f64> {
        let nbar = self.mean_photons();
        let mut rho = vec![0.0; self.grid.len()];
        if nbar <= 0.0 {
            return rho;
        }
        for c in &self.components {
            let f = c.photons as f64 / nbar;
            for (r, z) in rho.iter_mut().zip(&c.samples) {
                *r += f * z.norm_sqr();
            }
        }
        rho
    }

    /// `Σ_s ∫ conj(ψ_a,s) ψ_b,s dk`.
    pub fn overlap(&self, other: &WavePacket) -> Result<Complex64> {
        self.check_compatible(other)?;
        Ok(self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| {
                let f: Vec<Complex64> = a.samples.iter().zip(&b.samples).map(|(x, y)| x.conj() * y).collect();
                integrate(&f, &self.grid)
            })
            .sum())
    }

    fn check_compatible(&self, other: &WavePacket) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Argument(format!(
                "grid mismatch: {} vs {}",
                self.grid.describe(),
                other.grid.describe()
            )));
        }
        if self.components.len() != other.components.len()
            || self.components.iter().zip(&other.components).any(|(a, b)| a.photons != b.photons)
        {
            return Err(Error::Argument("packets differ in polarization or photon content".into()));
        }
        Ok(())
    }

    /// `ψ_a + e^{iδ} ψ_b` before renormalization.
    pub fn add(&self, other: &WavePacket, relative_phase: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let ph = Complex64::from_polar(1.0, relative_phase);
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| PolarizationComponent {
                photons: a.photons,
                samples: a.samples.iter().zip(&b.samples).map(|(x, y)| x + ph * y).collect(),
                model: match (&a.model, &b.model) {
                    (Some(ma), Some(mb)) => Some(Amplitude::Combination(vec![
                        (Complex64::new(1.0, 0.0), ma.clone()),
                        (ph, mb.clone()),
                    ])),
                    _ => None,
                },
            })
            .collect();
        Ok(Self { grid: Arc::clone(&self.grid), components, tag: PacketTag::Superposition })
    }

    /// Evaluate every component at the nodes of `grid` and return the packet
    /// living there. Closed-form components are evaluated exactly, sampled
    /// ones interpolated.
    pub fn resample(&self, grid: Arc<KGrid>) -> Result<Self> {
        let mut components = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let samples = match &c.model {
                Some(m) => sample(&grid, |k| m.eval(k)),
                None => {
                    let parts = parallel::map_chunks(grid.len(), 1024, |r| {
                        r.map(|i| interp::interpolate(&c.samples, &self.grid, grid.node(i)))
                            .collect::<Result<Vec<_>>>()
                    });
                    let mut out = Vec::with_capacity(grid.len());
                    for p in parts {
                        out.extend(p?);
                    }
                    out
                }
            };
            components.push(PolarizationComponent { photons: c.photons, samples, model: c.model.clone() });
        }
        Self::from_components(grid, components, self.tag)
    }

    /// Replace the amplitude of every component by `f(component model)`,
    /// resampling on `grid`.
    pub(crate) fn map_models<F>(&self, grid: Arc<KGrid>, tag: PacketTag, f: F) -> Result<Self>
    where
        F: Fn(Amplitude) -> Amplitude,
    {
        let mut components = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let base = match &c.model {
                Some(m) => m.clone(),
                None => {
                    let samples = c.samples.clone();
                    let g = Arc::clone(&self.grid);
                    Amplitude::custom(move |k| interp::interpolate(&samples, &g, k).unwrap_or_default())
                }
            };
            let model = f(base);
            let samples = sample(&grid, |k| model.eval(k));
            components.push(PolarizationComponent { photons: c.photons, samples, model: Some(model) });
        }
        Self::from_components(grid, components, tag)
    }
}

/// Evaluate `f` at every node of `grid` in parallel, preserving node order.
pub fn sample<F>(grid: &KGrid, f: F) -> Vec<Complex64>
where
    F: Fn(KVec3) -> Complex64 + Sync,
{
    parallel::map_chunks(grid.len(), 4096, |r| r.map(|i| f(grid.node(i))).collect::<Vec<_>>())
        .into_iter()
        .flatten()
        .collect()
}

/// `normalize(ψ_a + e^{iδ} ψ_b)`; an exactly cancelling sum is degenerate.
pub fn superpose(a: &WavePacket, b: &WavePacket, relative_phase: f64) -> Result<WavePacket> {
    let sum = a.add(b, relative_phase)?;
    let n = sum.norm();
    let scale = a.norm() + b.norm();
    if !(n > 1e-24 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::Degenerate(format!("superposition cancels (norm {n:e})")));
    }
    sum.normalize()
}
