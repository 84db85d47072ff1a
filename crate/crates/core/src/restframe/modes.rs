use std::fmt::Write as _;
use std::sync::Arc;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kspace::{angular_project_all, channel_count, channel_index, channel_lj, theta_factors, KGrid, SphericalKGrid};
use crate::observables::observables_packet;
use crate::states::{PacketTag, PolarizationComponent, WavePacket};

/// `1 − Parseval sum` above this triggers a truncation warning.
pub const TRUNCATION_WARN: f64 = 1e-3;
/// Rest-frame contract: `|⟨p⟩| ≤ REST_TOL · m`.
const REST_TOL: f64 = 1e-6;

/// Radial-resolved spherical-harmonic coefficients `β_{l,j}(k_r)` of a
/// rest-frame packet, one table per polarization.
///
/// Tables are laid out `[channel][radial node]` with channel `l² + l + j`.
#[derive(Debug, Clone, Serialize)]
pub struct AngularDecomposition {
    l_max: usize,
    #[serde(skip)]
    grid: SphericalKGrid,
    photons: Vec<u32>,
    coefficients: Vec<Vec<Complex64>>,
    residual: f64,
}

impl AngularDecomposition {
    /// Assemble a decomposition from explicit coefficient tables.
    pub fn from_coefficients(
        grid: SphericalKGrid,
        l_max: usize,
        photons: Vec<u32>,
        coefficients: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        let want = channel_count(l_max) * grid.n_k();
        if photons.len() != coefficients.len() || coefficients.iter().any(|c| c.len() != want) {
            return Err(Error::Argument(format!("expected {want} coefficients per component")));
        }
        Ok(Self { l_max, grid, photons, coefficients, residual: 0.0 })
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }
    pub fn grid(&self) -> &SphericalKGrid {
        &self.grid
    }
    pub fn radial_nodes(&self) -> &[f64] {
        self.grid.k_nodes()
    }
    pub fn components(&self) -> usize {
        self.coefficients.len()
    }
    /// `1 − Σ|β|²` relative to the norm of the decomposed packet.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `β_{l,j}(k_r)` of component `s` at every radial node.
    pub fn profile(&self, s: usize, l: usize, j: i32) -> Result<&[Complex64]> {
        if l > self.l_max || j.unsigned_abs() as usize > l {
            return Err(Error::Domain(format!("channel ({l}, {j}) outside l_max = {}", self.l_max)));
        }
        let table = self
            .coefficients
            .get(s)
            .ok_or_else(|| Error::Argument(format!("no polarization component {s}")))?;
        let nk = self.grid.n_k();
        let ch = channel_index(l, j);
        Ok(&table[ch * nk..(ch + 1) * nk])
    }

    /// `Σ_{l,j} ∫|β_{l,j}(k)|² k² dk`, summed over components.
    pub fn parseval_sum(&self) -> f64 {
        self.radial_sum(|_, b1, _| b1.norm_sqr(), self)
    }

    fn radial_sum<F>(&self, f: F, other: &AngularDecomposition) -> f64
    where
        F: Fn(f64, Complex64, Complex64) -> f64,
    {
        let nk = self.grid.n_k();
        let mut total = 0.0;
        for (a, b) in self.coefficients.iter().zip(&other.coefficients) {
            for ch in 0..channel_count(self.l_max) {
                for ik in 0..nk {
                    let k = self.grid.k_nodes()[ik];
                    total += f(k, a[ch * nk + ik], b[ch * nk + ik]) * self.grid.radial_weight(ik);
                }
            }
        }
        total
    }

    /// Coefficients of the fixed-mass modes `|m, lj⟩` at `k_m = m`:
    /// `β^{[m]}_{l,j} = ∫ψ Y* δ(k − k_m)/k dk = k_m β_{l,j}(k_m)`.
    ///
    /// The radial profile is interpolated with four-point Lagrange
    /// polynomials. Output is indexed by channel.
    pub fn fixed_mass_coefficients(&self, s: usize, k_m: f64) -> Result<Vec<Complex64>> {
        let nodes = self.grid.k_nodes();
        if !(k_m >= 0.0 && k_m <= self.grid.k_max()) {
            return Err(Error::Domain(format!("k_m = {k_m} outside the radial grid")));
        }
        if nodes.len() < 4 {
            return Err(Error::Capability("radial interpolation needs ≥ 4 nodes".into()));
        }
        let i = nodes.partition_point(|&v| v <= k_m).saturating_sub(2).min(nodes.len() - 4);
        let mut w = [1.0; 4];
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    w[a] *= (k_m - nodes[i + b]) / (nodes[i + a] - nodes[i + b]);
                }
            }
        }
        let table = self
            .coefficients
            .get(s)
            .ok_or_else(|| Error::Argument(format!("no polarization component {s}")))?;
        let nk = nodes.len();
        Ok((0..channel_count(self.l_max))
            .map(|ch| (0..4).map(|a| table[ch * nk + i + a] * w[a]).sum::<Complex64>() * k_m)
            .collect())
    }

    /// Whitespace-separated table `l j k_r re_beta im_beta`, one block per
    /// polarization component.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let nk = self.grid.n_k();
        for (s, table) in self.coefficients.iter().enumerate() {
            let _ = writeln!(out, "# component {s}");
            let _ = writeln!(out, "l j k_r re_beta im_beta");
            for ch in 0..channel_count(self.l_max) {
                let (l, j) = channel_lj(ch);
                for ik in 0..nk {
                    let b = table[ch * nk + ik];
                    let _ = writeln!(out, "{l} {j} {:e} {:e} {:e}", self.grid.k_nodes()[ik], b.re, b.im);
                }
            }
        }
        out
    }
}

/// Expand a rest-frame packet into `β_{l,j}(k_r)` for `l ≤ l_max`.
pub fn decompose(p: &WavePacket, l_max: usize) -> Result<AngularDecomposition> {
    let grid = p
        .grid()
        .as_spherical()
        .ok_or_else(|| Error::Capability("angular decomposition needs a spherical grid".into()))?
        .clone();
    let obs = observables_packet(p)?;
    let pmag = obs.momentum.magnitude();
    if pmag > REST_TOL * obs.mass {
        return Err(Error::Contract(format!(
            "packet is not at rest: |⟨p⟩| = {pmag:e} with m = {}",
            obs.mass
        )));
    }
    let coefficients = p
        .components()
        .iter()
        .map(|c| angular_project_all(&c.samples, &grid, l_max))
        .collect::<Result<Vec<_>>>()?;
    let photons = p.components().iter().map(|c| c.photons).collect();
    let mut d = AngularDecomposition { l_max, grid, photons, coefficients, residual: 0.0 };
    d.residual = p.norm() - d.parseval_sum();
    if d.residual > TRUNCATION_WARN {
        warn!("angular truncation at l_max = {l_max} leaves residual {:e}", d.residual);
    }
    Ok(d)
}

/// `ψ(k) = Σ_{l,j} β_{l,j}(k_r) Y_{l,j}(θ, φ)` on the decomposition's grid.
pub fn reconstruct(d: &AngularDecomposition) -> Result<WavePacket> {
    let g = &d.grid;
    let (nk, nt, np) = (g.n_k(), g.n_theta(), g.n_phi());
    let lm = d.l_max;
    let thetas: Vec<Vec<f64>> = g
        .cos_nodes()
        .iter()
        .map(|&c| theta_factors(lm, c, (1.0 - c * c).max(0.0).sqrt()))
        .collect();
    // e^{ijφ_p}, j = −l_max..=l_max
    let phase: Vec<Complex64> = (-(lm as i32)..=lm as i32)
        .flat_map(|j| g.phi_nodes().iter().map(move |&p| Complex64::from_polar(1.0, j as f64 * p)))
        .collect();
    let mut components = Vec::with_capacity(d.coefficients.len());
    for (table, &photons) in d.coefficients.iter().zip(&d.photons) {
        let shells: Vec<Vec<Complex64>> = (0..nk)
            .into_par_iter()
            .map(|ik| {
                let mut shell = vec![Complex64::new(0.0, 0.0); nt * np];
                let mut cj = vec![Complex64::new(0.0, 0.0); 2 * lm + 1];
                for it in 0..nt {
                    cj.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
                    for l in 0..=lm {
                        for j in -(l as i32)..=(l as i32) {
                            let m = j.unsigned_abs() as usize;
                            let mut th = thetas[it][l * (l + 1) / 2 + m];
                            if j < 0 && m % 2 == 1 {
                                th = -th;
                            }
                            cj[(lm as i32 + j) as usize] += table[channel_index(l, j) * nk + ik] * th;
                        }
                    }
                    let row = &mut shell[it * np..(it + 1) * np];
                    for (jj, c) in cj.iter().enumerate() {
                        if *c == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        let ph = &phase[jj * np..(jj + 1) * np];
                        for (v, e) in row.iter_mut().zip(ph) {
                            *v += c * e;
                        }
                    }
                }
                shell
            })
            .collect();
        components.push(PolarizationComponent { photons, samples: shells.concat(), model: None });
    }
    WavePacket::from_components(Arc::new(KGrid::Spherical(g.clone())), components, PacketTag::Reconstructed)
}

fn check_pair(a: &AngularDecomposition, b: &AngularDecomposition) -> Result<()> {
    if a.grid != b.grid || a.l_max != b.l_max || a.photons != b.photons {
        return Err(Error::Argument("decompositions differ in radial grid, l_max or components".into()));
    }
    Ok(())
}

/// `Σ_{l,j} ∫ conj(β₁) β₂ k² dk`, summed over polarizations.
pub fn scalar_product_modes(a: &AngularDecomposition, b: &AngularDecomposition) -> Result<Complex64> {
    check_pair(a, b)?;
    let re = a.radial_sum(|_, x, y| (x.conj() * y).re, b);
    let im = a.radial_sum(|_, x, y| (x.conj() * y).im, b);
    Ok(Complex64::new(re, im))
}

/// `Σ_s n_s Σ_{l,j} ∫ k |β_{l,j}(k)|² k² dk`.
pub fn energy_in_modes(d: &AngularDecomposition) -> f64 {
    let nk = d.grid.n_k();
    let mut total = 0.0;
    for (table, &n) in d.coefficients.iter().zip(&d.photons) {
        let mut e = 0.0;
        for ch in 0..channel_count(d.l_max) {
            for ik in 0..nk {
                e += d.grid.k_nodes()[ik] * table[ch * nk + ik].norm_sqr() * d.grid.radial_weight(ik);
            }
        }
        total += n as f64 * e;
    }
    total
}
