//! Spherical harmonics `Y_{l,j}(θ, φ) = Θ_{l,j}(θ) e^{ijφ}` with the
//! Condon–Shortley phase, and angular projections on a [`SphericalKGrid`].
//!
//! For `j ≥ 0`, `Θ_{l,j} = (−1)^j N_{lj} P_l^j(cos θ)` where `P_l^j` carries no
//! phase of its own and `N_{lj} = sqrt((2l+1)(l−j)! / (4π (l+j)!))`.
//! Negative orders follow from `Y_{l,−j} = (−1)^j conj(Y_{l,j})`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::SphericalKGrid;
use crate::error::{Error, Result};

/// Highest degree the harmonic machinery accepts.
pub const L_MAX_SUPPORTED: usize = 32;

/// Flat channel index of `(l, j)`: `l² + l + j`.
pub fn channel_index(l: usize, j: i32) -> usize {
    ((l * l + l) as i64 + j as i64) as usize
}

/// Inverse of [`channel_index`].
pub fn channel_lj(ch: usize) -> (usize, i32) {
    let l = (ch as f64).sqrt() as usize;
    let l = if (l + 1) * (l + 1) <= ch { l + 1 } else { l };
    (l, ch as i32 - (l * l + l) as i32)
}

/// Number of channels with `l ≤ l_max`.
pub fn channel_count(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

fn check_lj(l: usize, j: i32) -> Result<()> {
    if j.unsigned_abs() as usize > l {
        return Err(Error::Domain(format!("|j| = {} exceeds l = {l}", j.abs())));
    }
    if l > L_MAX_SUPPORTED {
        return Err(Error::Capability(format!("l = {l} beyond supported l_max = {L_MAX_SUPPORTED}")));
    }
    Ok(())
}

fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Real polar factors `Θ_{l,m}(θ)` for `0 ≤ m ≤ l ≤ l_max`, stored at
/// `l(l+1)/2 + m`, evaluated by the normalized upward recurrence.
pub fn theta_factors(l_max: usize, cos_theta: f64, sin_theta: f64) -> Vec<f64> {
    let mut q = vec![0.0; tri(l_max, l_max) + 1];
    let x = cos_theta;
    // q_m^m then q_{m+1}^m, then three-term recurrence in l
    let mut qmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=l_max {
        if m > 0 {
            qmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin_theta;
        }
        q[tri(m, m)] = qmm;
        if m < l_max {
            q[tri(m + 1, m)] = x * ((2 * m + 3) as f64).sqrt() * qmm;
        }
        for l in (m + 2)..=l_max {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            q[tri(l, m)] = a * (x * q[tri(l - 1, m)] - b * q[tri(l - 2, m)]);
        }
    }
    for l in 0..=l_max {
        for m in (1..=l).step_by(2) {
            q[tri(l, m)] = -q[tri(l, m)];
        }
    }
    q
}

/// `Θ_{l,j}` for any sign of `j`, read from a [`theta_factors`] table.
fn theta_signed(table: &[f64], l: usize, j: i32) -> f64 {
    let m = j.unsigned_abs() as usize;
    let v = table[tri(l, m)];
    if j < 0 && m % 2 == 1 {
        -v
    } else {
        v
    }
}

/// `Y_{l,j}(θ, φ)` for `0 ≤ θ ≤ π`.
pub fn spherical_harmonic(l: usize, j: i32, theta: f64, phi: f64) -> Result<Complex64> {
    check_lj(l, j)?;
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("θ = {theta} outside [0, π]")));
    }
    let table = theta_factors(l, theta.cos(), theta.sin());
    Ok(Complex64::from_polar(theta_signed(&table, l, j), j as f64 * phi))
}

/// Radial profile `β_{l,j}(k_r) = ∫ f conj(Y_{l,j}) dΩ` at every radial node.
pub fn angular_project(f: &[Complex64], grid: &SphericalKGrid, l: usize, j: i32) -> Result<Vec<Complex64>> {
    check_lj(l, j)?;
    let all = angular_project_all(f, grid, l)?;
    let ch = channel_index(l, j);
    let nk = grid.n_k();
    Ok(all[ch * nk..(ch + 1) * nk].to_vec())
}

/// All channels `l ≤ l_max` at once, laid out as `[channel][radial node]`.
pub fn angular_project_all(f: &[Complex64], grid: &SphericalKGrid, l_max: usize) -> Result<Vec<Complex64>> {
    if l_max > L_MAX_SUPPORTED {
        return Err(Error::Capability(format!(
            "l_max = {l_max} beyond supported {L_MAX_SUPPORTED}"
        )));
    }
    if f.len() != grid.len() {
        return Err(Error::Argument(format!(
            "field has {} samples, grid has {} nodes",
            f.len(),
            grid.len()
        )));
    }
    let nt = grid.n_theta();
    let np = grid.n_phi();
    let nk = grid.n_k();
    let lm = l_max;
    let thetas: Vec<Vec<f64>> = grid
        .cos_nodes()
        .iter()
        .map(|&c| theta_factors(lm, c, (1.0 - c * c).max(0.0).sqrt()))
        .collect();
    // e^{−imφ_p} for m = 0..=l_max
    let wphi = grid.phi_weight();
    let phase: Vec<Complex64> = (0..=lm)
        .flat_map(|m| grid.phi_nodes().iter().map(move |&p| Complex64::from_polar(1.0, -(m as f64) * p)))
        .collect();
    let per_shell: Vec<Vec<Complex64>> = (0..nk)
        .into_par_iter()
        .map(|ik| {
            let mut out = vec![Complex64::new(0.0, 0.0); channel_count(lm)];
            let mut fm = vec![Complex64::new(0.0, 0.0); 2 * lm + 1];
            for it in 0..nt {
                let row = &f[(ik * nt + it) * np..(ik * nt + it + 1) * np];
                for m in 0..=lm {
                    let ph = &phase[m * np..(m + 1) * np];
                    let (mut pos, mut neg) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                    for (v, e) in row.iter().zip(ph) {
                        pos += v * e;
                        neg += v * e.conj();
                    }
                    fm[lm + m] = pos * wphi;
                    fm[lm - m] = neg * wphi;
                }
                let wt = grid.cos_weights()[it];
                let table = &thetas[it];
                for l in 0..=lm {
                    for j in -(l as i32)..=(l as i32) {
                        let th = theta_signed(table, l, j);
                        out[channel_index(l, j)] += fm[(lm as i32 + j) as usize] * (wt * th);
                    }
                }
            }
            out
        })
        .collect();
    let nch = channel_count(lm);
    let mut beta = vec![Complex64::new(0.0, 0.0); nch * nk];
    for (ik, shell) in per_shell.into_iter().enumerate() {
        for (ch, v) in shell.into_iter().enumerate() {
            beta[ch * nk + ik] = v;
        }
    }
    Ok(beta)
}
