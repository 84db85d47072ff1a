use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::Serialize;

use super::KVec3;
use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights mapped onto `[a, b]`, nodes ascending.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = NonZeroUsize::new(n)
        .ok_or_else(|| Error::Argument("quadrature order must be positive".into()))?;
    if !(b > a) {
        return Err(Error::Argument(format!("empty interval [{a}, {b}]")));
    }
    let rule = GaussLegendre::new(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut pairs: Vec<(f64, f64)> = rule
        .nodes()
        .zip(rule.weights())
        .map(|(&x, &w)| (mid + half * x, half * w))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(pairs.into_iter().unzip())
}

/// Product grid over the ball `|k| ≤ k_max`.
///
/// Radial nodes are Gauss–Legendre on `[0, k_max]`, polar nodes
/// Gauss–Legendre in `cos θ ∈ [−1, 1]`, azimuthal nodes uniform on
/// `[0, 2π)` with equal trapezoid weights. Node `(ik, it, ip)` has flat
/// index `(ik·n_θ + it)·n_φ + ip`.
#[derive(Debug, Clone)]
pub struct SphericalKGrid {
    k_max: f64,
    k_nodes: Vec<f64>,
    k_weights: Vec<f64>,
    cos_nodes: Vec<f64>,
    sin_nodes: Vec<f64>,
    cos_weights: Vec<f64>,
    phi_nodes: Vec<f64>,
    cos_phi: Vec<f64>,
    sin_phi: Vec<f64>,
}

impl PartialEq for SphericalKGrid {
    fn eq(&self, other: &Self) -> bool {
        self.k_max == other.k_max
            && self.n_k() == other.n_k()
            && self.n_theta() == other.n_theta()
            && self.n_phi() == other.n_phi()
    }
}

impl SphericalKGrid {
    /// Default resolution: 128 radial, 64 polar and 64 azimuthal nodes.
    pub const DEFAULT_SHAPE: (usize, usize, usize) = (128, 64, 64);

    pub fn new(n_k: usize, n_theta: usize, n_phi: usize, k_max: f64) -> Result<Self> {
        if n_phi == 0 {
            return Err(Error::Argument("n_phi must be positive".into()));
        }
        if !(k_max.is_finite() && k_max > 0.0) {
            return Err(Error::Argument(format!("k_max must be positive, got {k_max}")));
        }
        let (k_nodes, k_weights) = gauss_legendre(n_k, 0.0, k_max)?;
        let (cos_nodes, cos_weights) = gauss_legendre(n_theta, -1.0, 1.0)?;
        let sin_nodes = cos_nodes.iter().map(|c| (1.0 - c * c).max(0.0).sqrt()).collect();
        let phi_nodes: Vec<f64> = (0..n_phi).map(|i| 2.0 * PI * i as f64 / n_phi as f64).collect();
        let cos_phi = phi_nodes.iter().map(|p| p.cos()).collect();
        let sin_phi = phi_nodes.iter().map(|p| p.sin()).collect();
        Ok(Self {
            k_max,
            k_nodes,
            k_weights,
            cos_nodes,
            sin_nodes,
            cos_weights,
            phi_nodes,
            cos_phi,
            sin_phi,
        })
    }

    /// Default-resolution grid.
    pub fn with_k_max(k_max: f64) -> Result<Self> {
        let (a, b, c) = Self::DEFAULT_SHAPE;
        Self::new(a, b, c, k_max)
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }
    pub fn n_k(&self) -> usize {
        self.k_nodes.len()
    }
    pub fn n_theta(&self) -> usize {
        self.cos_nodes.len()
    }
    pub fn n_phi(&self) -> usize {
        self.phi_nodes.len()
    }
    pub fn len(&self) -> usize {
        self.n_k() * self.n_theta() * self.n_phi()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn k_nodes(&self) -> &[f64] {
        &self.k_nodes
    }
    pub fn cos_nodes(&self) -> &[f64] {
        &self.cos_nodes
    }
    pub fn cos_weights(&self) -> &[f64] {
        &self.cos_weights
    }
    pub fn phi_nodes(&self) -> &[f64] {
        &self.phi_nodes
    }
    pub fn phi_weight(&self) -> f64 {
        2.0 * PI / self.n_phi() as f64
    }

    /// Radial measure `w_k · k²` of shell `ik`.
    pub fn radial_weight(&self, ik: usize) -> f64 {
        self.k_weights[ik] * self.k_nodes[ik] * self.k_nodes[ik]
    }

    /// Number of nodes on one radial shell.
    pub fn shell_len(&self) -> usize {
        self.n_theta() * self.n_phi()
    }

    pub fn split_index(&self, i: usize) -> (usize, usize, usize) {
        let np = self.n_phi();
        let nt = self.n_theta();
        (i / (nt * np), (i / np) % nt, i % np)
    }

    pub fn node(&self, i: usize) -> KVec3 {
        let (ik, it, ip) = self.split_index(i);
        let k = self.k_nodes[ik];
        let s = self.sin_nodes[it];
        KVec3::new(
            k * s * self.cos_phi[ip],
            k * s * self.sin_phi[ip],
            k * self.cos_nodes[it],
        )
    }

    pub fn weight(&self, i: usize) -> f64 {
        let (ik, it, _) = self.split_index(i);
        self.radial_weight(ik) * self.cos_weights[it] * self.phi_weight()
    }

    /// Spherical coordinates `(k, θ, φ)` of node `i`.
    pub fn spherical_coords(&self, i: usize) -> (f64, f64, f64) {
        let (ik, it, ip) = self.split_index(i);
        (self.k_nodes[ik], self.cos_nodes[it].acos(), self.phi_nodes[ip])
    }
}

/// Uniform cube `[−k_ext, k_ext)³` with `n` samples per axis.
///
/// `n` must be a power of two (at least 4). The conjugate coordinate grid has
/// spacing `Δr = 2π/(n Δk)` and spans `[−L/2, L/2)` with `L = n Δr`. Flat
/// index is `(ix·n + iy)·n + iz`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CartesianKGrid {
    n: usize,
    k_ext: f64,
}

impl CartesianKGrid {
    pub fn new(n: usize, k_ext: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Argument(format!("cartesian size must be a power of two ≥ 4, got {n}")));
        }
        if !(k_ext.is_finite() && k_ext > 0.0) {
            return Err(Error::Argument(format!("k_ext must be positive, got {k_ext}")));
        }
        Ok(Self { n, k_ext })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k_ext(&self) -> f64 {
        self.k_ext
    }
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dk(&self) -> f64 {
        2.0 * self.k_ext / self.n as f64
    }
    pub fn dr(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.dk())
    }
    /// Edge length of the conjugate coordinate box.
    pub fn box_length(&self) -> f64 {
        self.n as f64 * self.dr()
    }
    pub fn k_axis(&self, i: usize) -> f64 {
        -self.k_ext + i as f64 * self.dk()
    }
    pub fn r_axis(&self, j: usize) -> f64 {
        -0.5 * self.box_length() + j as f64 * self.dr()
    }
    pub fn split_index(&self, i: usize) -> (usize, usize, usize) {
        let n = self.n;
        (i / (n * n), (i / n) % n, i % n)
    }
    pub fn node(&self, i: usize) -> KVec3 {
        let (ix, iy, iz) = self.split_index(i);
        KVec3::new(self.k_axis(ix), self.k_axis(iy), self.k_axis(iz))
    }
    pub fn weight(&self, _i: usize) -> f64 {
        self.dk().powi(3)
    }
}

/// Transverse plane `(k_x, k_y) ∈ [−Q, Q]²` lifted onto the sphere
/// `|k| = k_deg` with `k_z = sqrt(k_deg² − k⊥²) > 0`.
///
/// Weights are the transverse measure `d²k⊥`; densities sampled on this grid
/// are per unit transverse area.
#[derive(Debug, Clone)]
pub struct TransverseShellGrid {
    k_deg: f64,
    bound: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl PartialEq for TransverseShellGrid {
    fn eq(&self, other: &Self) -> bool {
        self.k_deg == other.k_deg && self.bound == other.bound && self.nodes.len() == other.nodes.len()
    }
}

impl TransverseShellGrid {
    pub fn new(n: usize, bound: f64, k_deg: f64) -> Result<Self> {
        if !(bound > 0.0 && k_deg > 0.0) {
            return Err(Error::Argument("bound and k_deg must be positive".into()));
        }
        if bound * std::f64::consts::SQRT_2 >= k_deg {
            return Err(Error::Domain(format!(
                "transverse bound {bound} leaves the paraxial shell |k| = {k_deg}"
            )));
        }
        let (nodes, weights) = gauss_legendre(n, -bound, bound)?;
        Ok(Self { k_deg, bound, nodes, weights })
    }

    pub fn k_deg(&self) -> f64 {
        self.k_deg
    }
    pub fn bound(&self) -> f64 {
        self.bound
    }
    pub fn n(&self) -> usize {
        self.nodes.len()
    }
    pub fn axis_nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn len(&self) -> usize {
        self.n() * self.n()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn transverse(&self, i: usize) -> (f64, f64) {
        let n = self.n();
        (self.nodes[i / n], self.nodes[i % n])
    }
    pub fn node(&self, i: usize) -> KVec3 {
        let (x, y) = self.transverse(i);
        KVec3::new(x, y, (self.k_deg * self.k_deg - x * x - y * y).sqrt())
    }
    pub fn weight(&self, i: usize) -> f64 {
        let n = self.n();
        self.weights[i / n] * self.weights[i % n]
    }
}

/// Any of the supported sampling layouts.
#[derive(Debug, Clone, PartialEq)]
pub enum KGrid {
    Spherical(SphericalKGrid),
    Cartesian(CartesianKGrid),
    Shell(TransverseShellGrid),
}

impl KGrid {
    pub fn len(&self) -> usize {
        match self {
            KGrid::Spherical(g) => g.len(),
            KGrid::Cartesian(g) => g.len(),
            KGrid::Shell(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, i: usize) -> KVec3 {
        match self {
            KGrid::Spherical(g) => g.node(i),
            KGrid::Cartesian(g) => g.node(i),
            KGrid::Shell(g) => g.node(i),
        }
    }

    pub fn weight(&self, i: usize) -> f64 {
        match self {
            KGrid::Spherical(g) => g.weight(i),
            KGrid::Cartesian(g) => g.weight(i),
            KGrid::Shell(g) => g.weight(i),
        }
    }

    pub fn as_spherical(&self) -> Option<&SphericalKGrid> {
        match self {
            KGrid::Spherical(g) => Some(g),
            _ => None,
        }
    }

    pub fn as_cartesian(&self) -> Option<&CartesianKGrid> {
        match self {
            KGrid::Cartesian(g) => Some(g),
            _ => None,
        }
    }

    /// Short human-readable description, echoed into reports.
    pub fn describe(&self) -> String {
        match self {
            KGrid::Spherical(g) => format!(
                "spherical n_k={} n_theta={} n_phi={} k_max={}",
                g.n_k(),
                g.n_theta(),
                g.n_phi(),
                g.k_max()
            ),
            KGrid::Cartesian(g) => format!("cartesian n={} k_ext={}", g.n(), g.k_ext()),
            KGrid::Shell(g) => format!("shell n={} bound={} k_deg={}", g.n(), g.bound(), g.k_deg()),
        }
    }

    /// Mass-fraction proxy for density leaking past the outer boundary.
    ///
    /// Spherical grids report the fraction of `Σ w ρ` carried by the outer 10%
    /// of the radial interval; Cartesian grids the fraction in the outermost
    /// four cells along any axis. Shell grids are bounded by construction and
    /// report zero.
    pub fn boundary_fraction(&self, density: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut edge = 0.0;
        match self {
            KGrid::Spherical(g) => {
                for (i, d) in density.iter().enumerate() {
                    let m = d * g.weight(i);
                    total += m;
                    if g.k_nodes[g.split_index(i).0] > 0.9 * g.k_max {
                        edge += m;
                    }
                }
            }
            KGrid::Cartesian(g) => {
                let n = g.n();
                let near = |j: usize| j < 4 || j + 4 >= n;
                for (i, d) in density.iter().enumerate() {
                    total += d;
                    let (a, b, c) = g.split_index(i);
                    if near(a) || near(b) || near(c) {
                        edge += d;
                    }
                }
            }
            KGrid::Shell(_) => return 0.0,
        }
        if total > 0.0 {
            edge / total
        } else {
            0.0
        }
    }
}
