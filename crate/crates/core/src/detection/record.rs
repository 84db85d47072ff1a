use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::{cartesian_grid, fft, sign, EDGE_CELLS};
use crate::error::{Error, Result};
use crate::parallel;
use crate::states::WavePacket;

/// Spectral entries below this fraction of the peak `|a|²` are skipped.
const SPARSE_CUTOFF: f64 = 1e-20;
/// Plane flux at the first or last sample above this fraction of the peak,
/// or transverse-edge intensity above this fraction of the total, means the
/// transit is not contained.
pub const WINDOW_TOL: f64 = 1e-6;
/// Size of the JSON header of the binary raster.
pub const BINARY_HEADER_LEN: usize = 64;

/// Normalized intensity `p_z(x, y, t) = Σ_s n_s |Φ_s|²` on the plane `z`.
#[derive(Debug, Clone, Serialize)]
pub struct IntensityRecord {
    pub z: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub times: Vec<f64>,
    /// Row-major `[t][x][y]`.
    pub samples: Vec<f64>,
    /// `∫ Σ_s n_s |Φ_s|² dx dy dt` before normalization.
    pub normalization: f64,
    #[serde(skip)]
    dt: Vec<f64>,
    #[serde(skip)]
    cell: f64,
}

struct SparseMode {
    ix: usize,
    iy: usize,
    kz: f64,
    w: f64,
    a: Complex64,
}

/// Quadrature weights for a strictly increasing sample of times.
fn time_weights(times: &[f64]) -> Result<Vec<f64>> {
    if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("need ≥ 2 strictly increasing times".into()));
    }
    let n = times.len();
    Ok((0..n)
        .map(|i| {
            let lo = if i == 0 { times[0] } else { 0.5 * (times[i - 1] + times[i]) };
            let hi = if i + 1 == n { times[n - 1] } else { 0.5 * (times[i] + times[i + 1]) };
            hi - lo
        })
        .collect())
}

/// Sample the detected intensity on the plane `z` at `times`, over the full
/// transverse extent of the conjugate coordinate grid.
pub fn intensity_record(p: &WavePacket, z: f64, times: &[f64]) -> Result<IntensityRecord> {
    intensity_record_with_tolerance(p, z, times, WINDOW_TOL)
}

/// [`intensity_record`] with containment tolerance `tol` for both the
/// edge-time flux and the transverse-edge intensity.
pub fn intensity_record_with_tolerance(p: &WavePacket, z: f64, times: &[f64], tol: f64) -> Result<IntensityRecord> {
    let g = cartesian_grid(p)?;
    let n = g.n();
    let (lo, hi) = (g.r_axis(0), g.r_axis(n - 1));
    if !(lo..=hi).contains(&z) {
        return Err(Error::Window(format!("plane z = {z} outside the box [{lo}, {hi}]")));
    }
    let dt = time_weights(times)?;
    let grid = p.grid();
    let modes: Vec<(f64, Vec<SparseMode>)> = p
        .components()
        .iter()
        .map(|c| {
            let a: Vec<Complex64> =
                c.samples.iter().enumerate().map(|(i, z)| z * grid.node(i).magnitude().sqrt()).collect();
            let peak = a.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
            let sparse = a
                .iter()
                .enumerate()
                .filter(|(_, v)| v.norm_sqr() >= SPARSE_CUTOFF * peak && peak > 0.0)
                .map(|(i, v)| {
                    let (ix, iy, _) = g.split_index(i);
                    let k = g.node(i);
                    SparseMode { ix, iy, kz: k.kz, w: k.frequency(), a: *v }
                })
                .collect();
            (c.photons as f64, sparse)
        })
        .collect();
    let dk3 = g.dk().powi(3);
    let frames: Vec<Vec<f64>> = parallel::map_chunks(times.len(), 1, |r| {
        r.map(|it| {
            let t = times[it];
            let mut plane = vec![0.0; n * n];
            for (photons, sparse) in &modes {
                let mut b = vec![Complex64::new(0.0, 0.0); n * n];
                for m in sparse {
                    b[m.ix * n + m.iy] += m.a * Complex64::from_polar(sign(m.ix + m.iy), m.kz * z - m.w * t);
                }
                fft::ifft2(&mut b, n);
                for (q, v) in plane.iter_mut().zip(&b) {
                    *q += photons * (v * dk3).norm_sqr();
                }
            }
            plane
        })
        .collect::<Vec<_>>()
    })
    .concat();
    let cell = g.dr() * g.dr();
    let flux: Vec<f64> = frames.iter().map(|f| f.iter().sum::<f64>() * cell).collect();
    let peak = flux.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Window(format!("no intensity reaches the plane z = {z}")));
    }
    let (first, last) = (flux[0], flux[flux.len() - 1]);
    if first > tol * peak || last > tol * peak {
        return Err(Error::Window(format!(
            "transit through z = {z} not contained: edge flux {:e}, {:e} of peak",
            first / peak,
            last / peak
        )));
    }
    let near = |j: usize| j < EDGE_CELLS || j + EDGE_CELLS >= n;
    let mut total = 0.0;
    let mut edge = 0.0;
    for (f, w) in frames.iter().zip(&dt) {
        for (i, v) in f.iter().enumerate() {
            let m = v * cell * w;
            total += m;
            if near(i / n) || near(i % n) {
                edge += m;
            }
        }
    }
    if edge > tol * total {
        return Err(Error::Window(format!(
            "transverse edge of plane z = {z} carries {:e} of the intensity",
            edge / total
        )));
    }
    let samples = frames.concat().into_iter().map(|v| v / total).collect();
    let axis: Vec<f64> = (0..n).map(|j| g.r_axis(j)).collect();
    Ok(IntensityRecord {
        z,
        x: axis.clone(),
        y: axis,
        times: times.to_vec(),
        samples,
        normalization: total,
        dt,
        cell,
    })
}

impl IntensityRecord {
    fn plane_len(&self) -> usize {
        self.x.len() * self.y.len()
    }

    /// `∫ p_z dx dy` at each time sample.
    pub fn flux(&self) -> Vec<f64> {
        self.samples.chunks(self.plane_len()).map(|f| f.iter().sum::<f64>() * self.cell).collect()
    }

    /// `∫ p_z dx dy dt` (1 after construction).
    pub fn total(&self) -> f64 {
        self.flux().iter().zip(&self.dt).map(|(f, w)| f * w).sum()
    }

    /// `⟨t⟩ = ∫ t p_z dx dy dt`.
    pub fn mean_arrival_time(&self) -> f64 {
        let flux = self.flux();
        let num: f64 = flux.iter().zip(&self.dt).zip(&self.times).map(|((f, w), t)| f * w * t).sum();
        let den: f64 = flux.iter().zip(&self.dt).map(|(f, w)| f * w).sum();
        num / den
    }

    /// CSV with columns `x,y,t,p`, ordered by `t`, then `x`, then `y`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,y,t,p")?;
        let ny = self.y.len();
        for (it, t) in self.times.iter().enumerate() {
            for (ix, x) in self.x.iter().enumerate() {
                for (iy, y) in self.y.iter().enumerate() {
                    let v = self.samples[(it * self.x.len() + ix) * ny + iy];
                    writeln!(out, "{x:e},{y:e},{t:e},{v:e}")?;
                }
            }
        }
        Ok(())
    }

    /// 64-byte space-padded JSON header followed by the samples as
    /// little-endian `f64`, row-major `[t][x][y]`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header = format!(
            "{{\"shape\":[{},{},{}],\"axes\":\"txy\",\"unit\":\"1/k_ref\"}}",
            self.times.len(),
            self.x.len(),
            self.y.len()
        );
        if header.len() >= BINARY_HEADER_LEN {
            return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "raster header too long"));
        }
        let mut bytes = header.into_bytes();
        bytes.resize(BINARY_HEADER_LEN - 1, b' ');
        bytes.push(b'\n');
        out.write_all(&bytes)?;
        for v in &self.samples {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Parse a raster written by [`IntensityRecord::write_binary`] into its
/// shape and samples.
pub fn read_binary_raster(bytes: &[u8]) -> Result<(Vec<usize>, Vec<f64>)> {
    if bytes.len() < BINARY_HEADER_LEN {
        return Err(Error::Argument("raster shorter than its header".into()));
    }
    let head = std::str::from_utf8(&bytes[..BINARY_HEADER_LEN])
        .map_err(|e| Error::Argument(format!("raster header is not UTF-8: {e}")))?;
    let json: serde_json::Value =
        serde_json::from_str(head.trim()).map_err(|e| Error::Argument(format!("bad raster header: {e}")))?;
    let shape: Vec<usize> = json["shape"]
        .as_array()
        .ok_or_else(|| Error::Argument("raster header lacks a shape".into()))?
        .iter()
        .map(|v| v.as_u64().map(|x| x as usize))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Argument("raster shape must hold integers".into()))?;
    let body = &bytes[BINARY_HEADER_LEN..];
    let count: usize = shape.iter().product();
    if body.len() != 8 * count {
        return Err(Error::Argument(format!("raster holds {} bytes, expected {}", body.len(), 8 * count)));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((shape, data))
}
