//! First-order photodetection: scalar field synthesis, plane intensity
//! records and kinematic estimators of the mean propagation velocity.
//!
//! The positive-frequency field of a single-photon amplitude is
//! `Φ(r, t) = ∫ sqrt(k) ψ(k) e^{i(k·r − ω_k t)} dk`; polarization vectors and
//! constant prefactors are dropped since they cancel in normalized
//! intensities. On a [`CartesianKGrid`] with `k_i = −k_ext + iΔk` and
//! `r_j = −L/2 + jΔr`, `L = 2π/Δk`, the sum reduces to
//! `Φ_j = (−1)^j Δk³ IDFT[(−1)^i a_i]` whenever `n` is a multiple of four.

mod fft;
mod plan;
mod record;

pub use plan::{plan_transit, PlaneWindow, TransitPlan, CENTROID_SAMPLES};
pub use record::{intensity_record, intensity_record_with_tolerance, read_binary_raster, IntensityRecord, BINARY_HEADER_LEN, WINDOW_TOL};

use log::warn;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kspace::{CartesianKGrid, KVec3};
use crate::parallel;
use crate::states::WavePacket;

/// Edge-mass fraction (outer four cells) above which a frame is aliased.
pub const ALIAS_TOL: f64 = 1e-6;
/// Centroid fit residual, relative to the box length, that triggers a warning.
pub const FIT_RESIDUAL_WARN: f64 = 1e-3;
/// Smallest `|k|` accepted by [`dispersion_gradient_check`].
pub const GRADIENT_MIN_K: f64 = 1e-3;
const EDGE_CELLS: usize = 4;

pub(crate) fn sign(i: usize) -> f64 {
    if i % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Complex scalar field on the coordinate grid conjugate to a
/// [`CartesianKGrid`], at time `t`.
#[derive(Debug, Clone)]
pub struct FieldFrame {
    pub n: usize,
    pub dr: f64,
    pub origin: f64,
    pub t: f64,
    pub values: Vec<Complex64>,
}

impl FieldFrame {
    pub fn coordinate(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.dr
    }

    pub fn box_length(&self) -> f64 {
        self.n as f64 * self.dr
    }

    /// `∫|Φ|² dr`.
    pub fn total_intensity(&self) -> f64 {
        let v = &self.values;
        parallel::ordered_sum(v.len(), 1 << 14, |i| v[i].norm_sqr()) * self.dr.powi(3)
    }

    /// `∫ r |Φ|² dr / ∫|Φ|² dr`.
    pub fn centroid(&self) -> KVec3 {
        let n = self.n;
        let v = &self.values;
        let [w, x, y, z] = parallel::ordered_sum_array::<4, _>(v.len(), 1 << 14, |i| {
            let m = v[i].norm_sqr();
            let (a, b, c) = (i / (n * n), (i / n) % n, i % n);
            [m, m * self.coordinate(a), m * self.coordinate(b), m * self.coordinate(c)]
        });
        KVec3::new(x / w, y / w, z / w)
    }

    /// Fraction of `∫|Φ|²` within four cells of any face of the box.
    pub fn edge_fraction(&self) -> f64 {
        let n = self.n;
        let near = |j: usize| j < EDGE_CELLS || j + EDGE_CELLS >= n;
        let v = &self.values;
        let [tot, edge] = parallel::ordered_sum_array::<2, _>(v.len(), 1 << 14, |i| {
            let m = v[i].norm_sqr();
            let (a, b, c) = (i / (n * n), (i / n) % n, i % n);
            [m, if near(a) || near(b) || near(c) { m } else { 0.0 }]
        });
        if tot > 0.0 {
            edge / tot
        } else {
            0.0
        }
    }
}

pub(crate) fn cartesian_grid(p: &WavePacket) -> Result<&CartesianKGrid> {
    let g = p
        .grid()
        .as_cartesian()
        .ok_or_else(|| Error::Capability("field synthesis needs a Cartesian k-grid".into()))?;
    if g.n() % 4 != 0 {
        return Err(Error::Capability("field synthesis needs n divisible by 4".into()));
    }
    Ok(g)
}

/// `sqrt(k) ψ(k)` summed over polarizations, per component.
fn weighted_spectrum(p: &WavePacket) -> Vec<Vec<Complex64>> {
    let g = p.grid();
    p.components()
        .iter()
        .map(|c| {
            c.samples
                .iter()
                .enumerate()
                .map(|(i, z)| z * g.node(i).magnitude().sqrt())
                .collect()
        })
        .collect()
}

/// `Φ(r, t)` for one polarization component via a 3D FFT.
fn synthesize_component(g: &CartesianKGrid, weighted: &[Complex64], t: f64) -> Vec<Complex64> {
    let n = g.n();
    let mut a: Vec<Complex64> = parallel::map_chunks(weighted.len(), 1 << 14, |r| {
        r.map(|i| {
            let (ix, iy, iz) = g.split_index(i);
            let w = g.node(i).frequency();
            weighted[i] * Complex64::from_polar(sign(ix + iy + iz), -w * t)
        })
        .collect::<Vec<_>>()
    })
    .concat();
    fft::ifft3(&mut a, n);
    let dk3 = g.dk().powi(3);
    for (i, v) in a.iter_mut().enumerate() {
        let (jx, jy, jz) = g.split_index(i);
        *v *= sign(jx + jy + jz) * dk3;
    }
    a
}

/// Field frames of every polarization component at time `t`.
///
/// Photon numbers scale the intensity uniformly and are ignored here.
pub fn synthesize_components(p: &WavePacket, t: f64) -> Result<Vec<FieldFrame>> {
    let g = cartesian_grid(p)?;
    let frames: Vec<FieldFrame> = weighted_spectrum(p)
        .iter()
        .map(|w| FieldFrame {
            n: g.n(),
            dr: g.dr(),
            origin: g.r_axis(0),
            t,
            values: synthesize_component(g, w, t),
        })
        .collect();
    for f in &frames {
        let edge = f.edge_fraction();
        if edge > ALIAS_TOL {
            return Err(Error::Coverage(format!(
                "field at t = {t} has {edge:e} of its intensity at the box edge"
            )));
        }
    }
    Ok(frames)
}

/// Field frame of a single-polarization packet at time `t`.
pub fn synthesize_field(p: &WavePacket, t: f64) -> Result<FieldFrame> {
    if p.components().len() != 1 {
        return Err(Error::Capability(
            "synthesize_field takes single-polarization packets; use synthesize_components".into(),
        ));
    }
    Ok(synthesize_components(p, t)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    CentroidSlope,
    PlaneToa,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VelocityEstimate {
    pub kind: EstimatorKind,
    /// Speed estimate `v/c`.
    pub value: f64,
    /// Fitted velocity vector (centroid) or `(0, 0, v_z)` (ToA).
    pub velocity: KVec3,
    /// RMS centroid deviation from the fitted line (centroid), or relative
    /// flux mismatch between the two planes (ToA).
    pub residual: f64,
    /// First and last sample time.
    pub window: [f64; 2],
    pub samples: usize,
}

/// Equally spaced times `t0, …, t1`.
pub fn time_samples(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![t0; n];
    }
    (0..n).map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64).collect()
}

/// Velocity from a least-squares line through the intensity centroid
/// `⟨r⟩(t)` at each of `times` (at least 8).
pub fn estimate_velocity_centroid(p: &WavePacket, times: &[f64]) -> Result<VelocityEstimate> {
    if times.len() < 8 {
        return Err(Error::Argument(format!("need ≥ 8 time samples, got {}", times.len())));
    }
    let mut centroids = Vec::with_capacity(times.len());
    let mut box_len = 0.0;
    for &t in times {
        let frames = synthesize_components(p, t)?;
        box_len = frames[0].box_length();
        let mut w_tot = 0.0;
        let mut acc = KVec3::ZERO;
        for (f, c) in frames.iter().zip(p.components()) {
            let w = f.total_intensity() * c.photons as f64;
            acc = acc + f.centroid() * w;
            w_tot += w;
        }
        centroids.push(acc * (1.0 / w_tot));
    }
    let n = times.len() as f64;
    let tm = times.iter().sum::<f64>() / n;
    let cm = centroids.iter().fold(KVec3::ZERO, |a, &c| a + c) * (1.0 / n);
    let stt: f64 = times.iter().map(|t| (t - tm) * (t - tm)).sum();
    if !(stt > 0.0) {
        return Err(Error::Argument("time samples must not coincide".into()));
    }
    let slope = times
        .iter()
        .zip(&centroids)
        .fold(KVec3::ZERO, |a, (&t, &c)| a + (c - cm) * (t - tm))
        * (1.0 / stt);
    let rss: f64 = times
        .iter()
        .zip(&centroids)
        .map(|(&t, &c)| {
            let d = c - (cm + slope * (t - tm));
            d.dot(d)
        })
        .sum();
    let residual = (rss / n).sqrt();
    if residual > FIT_RESIDUAL_WARN * box_len {
        warn!("centroid track deviates from a line by {residual:e} (box {box_len})");
    }
    Ok(VelocityEstimate {
        kind: EstimatorKind::CentroidSlope,
        value: slope.magnitude(),
        velocity: slope,
        residual,
        window: [times[0], times[times.len() - 1]],
        samples: times.len(),
    })
}

/// `v_z = (z₂ − z₁) / (⟨t⟩₂ − ⟨t⟩₁)` from mean times of arrival at two planes.
pub fn estimate_velocity_toa(rec1: &IntensityRecord, rec2: &IntensityRecord) -> Result<VelocityEstimate> {
    if !(rec2.z > rec1.z) {
        return Err(Error::Argument(format!("planes must satisfy z₂ > z₁ (got {} and {})", rec1.z, rec2.z)));
    }
    let t1 = rec1.mean_arrival_time();
    let t2 = rec2.mean_arrival_time();
    if !(t2 > t1) {
        return Err(Error::Ordering(format!("mean arrival at z₂ ({t2}) not after z₁ ({t1})")));
    }
    let v = (rec2.z - rec1.z) / (t2 - t1);
    let residual = (rec2.normalization / rec1.normalization - 1.0).abs();
    Ok(VelocityEstimate {
        kind: EstimatorKind::PlaneToa,
        value: v,
        velocity: KVec3::new(0.0, 0.0, v),
        residual,
        window: [
            rec1.times[0].min(rec2.times[0]),
            rec1.times[rec1.times.len() - 1].max(rec2.times[rec2.times.len() - 1]),
        ],
        samples: rec1.times.len() + rec2.times.len(),
    })
}

/// Central-difference gradient of `ω(k) = |k|`; should equal `k/|k|`.
pub fn dispersion_gradient_check(k: KVec3) -> Result<KVec3> {
    let m = k.magnitude();
    if !(m >= GRADIENT_MIN_K) {
        return Err(Error::Conditioning(format!("|k| = {m:e} below {GRADIENT_MIN_K}")));
    }
    let h = 1e-5 * m;
    let d = |e: KVec3| ((k + e * h).frequency() - (k - e * h).frequency()) / (2.0 * h);
    Ok(KVec3::new(
        d(KVec3::new(1.0, 0.0, 0.0)),
        d(KVec3::new(0.0, 1.0, 0.0)),
        d(KVec3::new(0.0, 0.0, 1.0)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kspace::KGrid;
    use crate::states::{make_gaussian_packet, GaussianPacketSpec};
    use std::sync::Arc;

    fn small_packet(k0: KVec3, r0: [f64; 3]) -> WavePacket {
        let spec = GaussianPacketSpec::new(k0, 1.0, r0).unwrap();
        let g = CartesianKGrid::new(128, k0.magnitude() + 8.0).unwrap();
        make_gaussian_packet(&spec, Arc::new(KGrid::Cartesian(g))).unwrap()
    }

    #[test]
    fn centroid_starts_at_r0() {
        let p = small_packet(KVec3::new(0.0, 0.0, 3.0), [1.5, -2.0, 0.7]);
        let f = synthesize_field(&p, 0.0).unwrap();
        let c = f.centroid();
        assert!((c - KVec3::new(1.5, -2.0, 0.7)).magnitude() < f.dr, "{c:?}");
    }

    #[test]
    fn intensity_is_conserved() {
        let p = small_packet(KVec3::new(0.0, 0.0, 3.0), [0.0, 0.0, -4.0]);
        let i0 = synthesize_field(&p, 0.0).unwrap().total_intensity();
        for t in [1.0, 2.5, 4.0, 6.0] {
            let it = synthesize_field(&p, t).unwrap().total_intensity();
            assert!(((it - i0) / i0).abs() < 1e-8);
        }
    }

    #[test]
    fn gradient_matches_direction() {
        for k in [KVec3::new(0.0, 0.0, 5.0), KVec3::new(3.0, 0.0, 4.0), KVec3::new(1.0, 1.0, 1.0)] {
            let g = dispersion_gradient_check(k).unwrap();
            assert!((g - k.normalized()).magnitude() < 1e-6);
        }
        assert!(matches!(
            dispersion_gradient_check(KVec3::new(1e-4, 0.0, 0.0)),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn too_few_samples() {
        let p = small_packet(KVec3::new(0.0, 0.0, 3.0), [0.0; 3]);
        assert!(matches!(
            estimate_velocity_centroid(&p, &[0.0, 1.0]),
            Err(Error::Argument(_))
        ));
    }
}
