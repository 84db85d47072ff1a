//! Box and sampling geometry for a single transit of a moving packet.

use serde::Serialize;

use super::time_samples;
use crate::error::{Error, Result};
use crate::kspace::KVec3;

/// Default number of centroid samples.
pub const CENTROID_SAMPLES: usize = 16;
/// Plane offsets from the start point, in spatial widths.
const PLANE_OFFSETS: [f64; 2] = [6.0, 12.0];
/// Lead of each window before the expected arrival, in spatial widths.
const WINDOW_WIDTHS: f64 = 6.0;
/// Transverse directions below this cosine tolerance count as "along z".
const AXIS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitPlan {
    pub n: usize,
    pub k_ext: f64,
    pub box_length: f64,
    /// Initial packet centre, `−β̂ L/8`.
    pub start: [f64; 3],
    pub centroid_times: Vec<f64>,
    /// Detector planes and their time windows; empty when the mean motion is
    /// not along `+z`.
    pub planes: Vec<PlaneWindow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneWindow {
    pub z: f64,
    pub times: Vec<f64>,
}

/// Geometry for a packet of mean velocity `beta · direction` and spatial
/// width `width` on an `n³` grid of half-extent `k_ext`.
///
/// The packet starts a distance `L/8` behind the box centre and is followed
/// for `L/4`. Planes sit 6 and 12 widths ahead of the start. Each is sampled
/// from 6 widths before the expected arrival to `max(L/4, 6 widths/β)`
/// after it, leaving room for the slow tail, but stopping before the
/// leading edge could wrap around the periodic box onto the plane again.
pub fn plan_transit(direction: KVec3, beta: f64, width: f64, n: usize, k_ext: f64, samples: usize) -> Result<TransitPlan> {
    if !(width > 0.0) || !(k_ext > 0.0) || !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!("bad transit parameters: beta {beta}, width {width}, k_ext {k_ext}")));
    }
    if samples < 2 {
        return Err(Error::Argument("need ≥ 2 samples per window".into()));
    }
    let box_length = n as f64 * std::f64::consts::PI / k_ext;
    let start = direction * (-box_length / 8.0);
    let along_z = direction.kz > 0.0 && direction.kx.abs() < AXIS_TOL && direction.ky.abs() < AXIS_TOL;
    let planes = if along_z && beta > super::GRADIENT_MIN_K {
        PLANE_OFFSETS
            .iter()
            .map(|off| {
                let dz = off * width;
                let t = dz / beta;
                let lead = WINDOW_WIDTHS * width / beta;
                let end = (t + (0.25 * box_length).max(lead)).min(box_length + dz - 2.0 * WINDOW_WIDTHS * width);
                PlaneWindow { z: start.kz + dz, times: time_samples(t - lead, end, samples) }
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(TransitPlan {
        n,
        k_ext,
        box_length,
        start: start.to_array(),
        centroid_times: time_samples(0.0, box_length / 4.0, CENTROID_SAMPLES),
        planes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_along_z() {
        let p = plan_transit(KVec3::new(0.0, 0.0, 1.0), 0.99, 1.0, 256, 18.0, 64).unwrap();
        assert!((p.box_length - 256.0 * std::f64::consts::PI / 18.0).abs() < 1e-12);
        assert!((p.start[2] + p.box_length / 8.0).abs() < 1e-12);
        assert_eq!(p.planes.len(), 2);
        assert!(p.planes[1].z > p.planes[0].z);
        assert_eq!(p.centroid_times.len(), CENTROID_SAMPLES);
    }

    #[test]
    fn tilted_motion_has_no_planes() {
        let d = KVec3::new(1.0, 0.0, 1.0) * std::f64::consts::FRAC_1_SQRT_2;
        assert!(plan_transit(d, 0.9, 1.0, 128, 18.0, 64).unwrap().planes.is_empty());
        assert!(plan_transit(KVec3::ZERO, 0.0, 1.0, 128, 18.0, 64).unwrap().planes.is_empty());
    }
}
