//! Tricubic (4-point Lagrange per axis) interpolation of sampled amplitudes.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kspace::{KGrid, KVec3};

/// Four-point Lagrange weights for `x` on the nodes `xs`.
fn lagrange4(xs: [f64; 4], x: f64) -> [f64; 4] {
    let mut w = [1.0; 4];
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                w[i] *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
    }
    w
}

/// First index of a 4-wide stencil around `x` on ascending `nodes`.
fn stencil_start(nodes: &[f64], x: f64) -> usize {
    let n = nodes.len();
    let i = nodes.partition_point(|&v| v <= x);
    i.saturating_sub(2).min(n.saturating_sub(4))
}

/// Interpolate grid samples at an arbitrary wave vector.
///
/// Outside the sampled region the amplitude is taken as zero. Axes with
/// fewer than four nodes are not supported.
pub fn interpolate(samples: &[Complex64], grid: &KGrid, k: KVec3) -> Result<Complex64> {
    match grid {
        KGrid::Spherical(g) => {
            if g.n_k() < 4 || g.n_theta() < 4 || g.n_phi() < 4 {
                return Err(Error::Capability("interpolation needs ≥ 4 nodes per axis".into()));
            }
            let r = k.magnitude();
            if r > g.k_max() {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let c = if r > 0.0 { (k.kz / r).clamp(-1.0, 1.0) } else { 1.0 };
            let mut phi = k.ky.atan2(k.kx);
            if phi < 0.0 {
                phi += 2.0 * std::f64::consts::PI;
            }
            let ks = g.k_nodes();
            let cs = g.cos_nodes();
            let ik = stencil_start(ks, r);
            let it = stencil_start(cs, c);
            let wk = lagrange4([ks[ik], ks[ik + 1], ks[ik + 2], ks[ik + 3]], r);
            let wt = lagrange4([cs[it], cs[it + 1], cs[it + 2], cs[it + 3]], c);
            let np = g.n_phi();
            let dphi = g.phi_weight();
            let p0 = (phi / dphi).floor() as isize - 1;
            let xs = [0.0, 1.0, 2.0, 3.0].map(|o| (p0 as f64 + o) * dphi);
            let wp = lagrange4(xs, phi);
            let nt = g.n_theta();
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, wa) in wk.iter().enumerate() {
                for (b, wb) in wt.iter().enumerate() {
                    let base = ((ik + a) * nt + it + b) * np;
                    for (cidx, wc) in wp.iter().enumerate() {
                        let ip = (p0 + cidx as isize).rem_euclid(np as isize) as usize;
                        acc += samples[base + ip] * (wa * wb * wc);
                    }
                }
            }
            Ok(acc)
        }
        KGrid::Cartesian(g) => {
            let n = g.n();
            let dk = g.dk();
            let fx = |v: f64| (v + g.k_ext()) / dk;
            let (ux, uy, uz) = (fx(k.kx), fx(k.ky), fx(k.kz));
            let hi = (n - 1) as f64;
            if [ux, uy, uz].iter().any(|&u| u < 0.0 || u > hi) {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let start = |u: f64| ((u.floor() as isize) - 1).clamp(0, n as isize - 4) as usize;
            let weights = |u: f64, s: usize| lagrange4([0.0, 1.0, 2.0, 3.0].map(|o| s as f64 + o), u);
            let (sx, sy, sz) = (start(ux), start(uy), start(uz));
            let (wx, wy, wz) = (weights(ux, sx), weights(uy, sy), weights(uz, sz));
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, wa) in wx.iter().enumerate() {
                for (b, wb) in wy.iter().enumerate() {
                    for (c, wc) in wz.iter().enumerate() {
                        acc += samples[((sx + a) * n + sy + b) * n + sz + c] * (wa * wb * wc);
                    }
                }
            }
            Ok(acc)
        }
        KGrid::Shell(_) => Err(Error::Capability(
            "shell-supported amplitudes cannot be interpolated off the shell".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kspace::{CartesianKGrid, SphericalKGrid};

    #[test]
    fn cubic_is_exact_on_cartesian() {
        let g = CartesianKGrid::new(16, 2.0).unwrap();
        let f = |k: KVec3| Complex64::new(k.kx * k.kx * k.ky - 2.0 * k.kz.powi(3) + 1.0, k.ky);
        let s: Vec<Complex64> = (0..g.len()).map(|i| f(g.node(i))).collect();
        let grid = KGrid::Cartesian(g);
        let p = KVec3::new(0.13, -0.71, 0.4);
        assert!((interpolate(&s, &grid, p).unwrap() - f(p)).norm() < 1e-12);
    }

    #[test]
    fn smooth_field_on_spherical_grid() {
        let g = SphericalKGrid::new(48, 48, 48, 6.0).unwrap();
        let f = |k: KVec3| Complex64::new((-(k - KVec3::new(0.0, 0.0, 1.0)).dot(k - KVec3::new(0.0, 0.0, 1.0))).exp(), 0.0);
        let s: Vec<Complex64> = (0..g.len()).map(|i| f(g.node(i))).collect();
        let grid = KGrid::Spherical(g);
        for p in [KVec3::new(0.3, 0.2, 1.1), KVec3::new(-0.5, 0.1, 0.4)] {
            let err = (interpolate(&s, &grid, p).unwrap() - f(p)).norm();
            assert!(err < 1e-3, "{err}");
        }
        assert_eq!(interpolate(&s, &grid, KVec3::new(0.0, 0.0, 7.0)).unwrap(), Complex64::new(0.0, 0.0));
    }
}
