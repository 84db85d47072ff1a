//! Wave-vector space: sampled grids, quadrature and spherical harmonics.
//!
//! All k-space integrals in the crate are weighted sums over the nodes of a
//! [`KGrid`]. Three layouts exist:
//!
//! * [`SphericalKGrid`]: Gauss–Legendre in `k` and `cos θ`, trapezoid in `φ`;
//!   the workhorse for energies, momenta and angular decompositions.
//! * [`CartesianKGrid`]: uniform cube whose conjugate coordinate grid feeds
//!   the FFT field synthesis.
//! * [`TransverseShellGrid`]: transverse plane lifted onto the sphere
//!   `|k| = k_deg`, used by frequency-degenerate biphotons.

mod boost;
mod grid;
mod harmonics;
mod vector;

pub use boost::LorentzBoost;
pub use grid::{gauss_legendre, CartesianKGrid, KGrid, SphericalKGrid, TransverseShellGrid};
pub use harmonics::{
    angular_project, angular_project_all, channel_count, channel_index, channel_lj,
    spherical_harmonic, theta_factors, L_MAX_SUPPORTED,
};
pub use vector::KVec3;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::parallel;

/// Quadrature of a complex field sampled at every node of `grid`.
pub fn integrate_spherical(f: &[Complex64], grid: &SphericalKGrid) -> Result<Complex64> {
    if f.len() != grid.len() {
        return Err(Error::Argument(format!(
            "field has {} samples, grid has {} nodes",
            f.len(),
            grid.len()
        )));
    }
    Ok(integrate(f, &KGrid::Spherical(grid.clone())))
}

/// Weighted sum `Σ f_i w_i` over any grid, reduced in a fixed order.
pub fn integrate(f: &[Complex64], grid: &KGrid) -> Complex64 {
    debug_assert_eq!(f.len(), grid.len());
    let [re, im] = parallel::ordered_sum_array::<2, _>(f.len(), 4096, |i| {
        let w = grid.weight(i);
        [f[i].re * w, f[i].im * w]
    });
    Complex64::new(re, im)
}

/// Real-valued counterpart of [`integrate`].
pub fn integrate_real(f: &[f64], grid: &KGrid) -> f64 {
    debug_assert_eq!(f.len(), grid.len());
    parallel::ordered_sum(f.len(), 4096, |i| f[i] * grid.weight(i))
}
