//! Unnormalized inverse DFTs (`Σ_i a_i e^{+2πi ij/n}`) on square and cubic
//! row-major arrays.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

fn plan(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(n)
}

/// Transform every contiguous length-`n` row of `data`.
fn rows(fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64], n: usize) {
    data.par_chunks_mut(n * 64).for_each(|block| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for row in block.chunks_mut(n) {
            fft.process_with_scratch(row, &mut scratch);
        }
    });
}

/// In-place transpose of each `n × n` tile of `data`.
fn transpose_tiles(data: &mut [Complex64], n: usize) {
    data.par_chunks_mut(n * n).for_each(|tile| {
        for a in 0..n {
            for b in (a + 1)..n {
                tile.swap(a * n + b, b * n + a);
            }
        }
    });
}

/// 2D inverse DFT of an `n × n` array.
pub fn ifft2(data: &mut [Complex64], n: usize) {
    let fft = plan(n);
    rows(&fft, data, n);
    transpose_tiles(data, n);
    rows(&fft, data, n);
    transpose_tiles(data, n);
}

/// 3D inverse DFT of an `n × n × n` array indexed `(x·n + y)·n + z`.
pub fn ifft3(data: &mut [Complex64], n: usize) {
    let fft = plan(n);
    // z, then y within each x-slab
    rows(&fft, data, n);
    transpose_tiles(data, n);
    rows(&fft, data, n);
    transpose_tiles(data, n);
    // x: gather each y-plane into [z][x] rows
    let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for iy in 0..n {
        for ix in 0..n {
            for iz in 0..n {
                buf[iz * n + ix] = data[(ix * n + iy) * n + iz];
            }
        }
        for row in buf.chunks_mut(n) {
            fft.process_with_scratch(row, &mut scratch);
        }
        for ix in 0..n {
            for iz in 0..n {
                data[(ix * n + iy) * n + iz] = buf[iz * n + ix];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive3(a: &[Complex64], n: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n * n * n];
        for jx in 0..n {
            for jy in 0..n {
                for jz in 0..n {
                    let mut s = Complex64::new(0.0, 0.0);
                    for ix in 0..n {
                        for iy in 0..n {
                            for iz in 0..n {
                                let ph = 2.0 * PI * ((ix * jx + iy * jy + iz * jz) as f64) / n as f64;
                                s += a[(ix * n + iy) * n + iz] * Complex64::from_polar(1.0, ph);
                            }
                        }
                    }
                    out[(jx * n + jy) * n + jz] = s;
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let n = 4;
        let a: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut b = a.clone();
        ifft3(&mut b, n);
        let c = naive3(&a, n);
        for (x, y) in b.iter().zip(&c) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn two_dimensional_delta() {
        let n = 8;
        let mut a = vec![Complex64::new(0.0, 0.0); n * n];
        a[n + 2] = Complex64::new(1.0, 0.0);
        ifft2(&mut a, n);
        for jx in 0..n {
            for jy in 0..n {
                let ph = 2.0 * PI * (jx + 2 * jy) as f64 / n as f64;
                assert!((a[jx * n + jy] - Complex64::from_polar(1.0, ph)).norm() < 1e-12);
            }
        }
    }
}
