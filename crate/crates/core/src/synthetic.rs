//! Synthetic test cubes.
//!
//! Each band is a stationary separable 2-D AR(1) field; bands are chained by
//! a spectral AR(1) recursion, then scaled, offset, perturbed with white
//! noise and rounded. The result has Laplacian-like prediction residuals
//! with statistics that do not drift along the image.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::image::{CubeGeometry, ImageCube};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticParams {
    /// Correlation between horizontally or vertically adjacent samples.
    pub spatial_corr: f64,
    /// Correlation between co-located samples of adjacent bands.
    pub spectral_corr: f64,
    /// Standard deviation of the correlated field.
    pub field_std: f64,
    /// Standard deviation of the white noise added on top.
    pub noise_std: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            spatial_corr: 0.95,
            spectral_corr: 0.98,
            field_std: 100.0,
            noise_std: 3.0,
        }
    }
}

impl SyntheticParams {
    /// Independent samples around mid-range.
    pub fn white(noise_std: f64) -> Self {
        SyntheticParams {
            spatial_corr: 0.0,
            spectral_corr: 0.0,
            field_std: 0.0,
            noise_std,
        }
    }
}

pub fn correlated_cube(geometry: &CubeGeometry, params: &SyntheticParams, seed: u64) -> ImageCube {
    let g = geometry;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let (w, h) = (g.n_cols, g.n_rows);
    let a = params.spatial_corr;
    let rho = params.spectral_corr;
    let edge = (1.0 - a * a).sqrt();
    let inner = 1.0 - a * a;
    let spectral_gain = (1.0 - rho * rho).sqrt();
    let mid = g.mid_sample() as f64;
    let (lo, hi) = (g.min_sample() as f64, g.max_sample() as f64);

    let mut field = vec![0f64; w * h];
    let mut chained = vec![0f64; w * h];
    let mut samples = vec![0i32; g.sample_count()];
    for z in 0..g.n_bands {
        for y in 0..h {
            for x in 0..w {
                let e = normal();
                let v = match (x, y) {
                    (0, 0) => e,
                    (_, 0) => a * field[x - 1] + edge * e,
                    (0, _) => a * field[(y - 1) * w] + edge * e,
                    _ => {
                        a * field[y * w + x - 1] + a * field[(y - 1) * w + x]
                            - a * a * field[(y - 1) * w + x - 1]
                            + inner * e
                    }
                };
                field[y * w + x] = v;
            }
        }
        for (c, &f) in chained.iter_mut().zip(&field) {
            *c = if z == 0 {
                f
            } else {
                rho * *c + spectral_gain * f
            };
        }
        // mild band-to-band gain variation, as in real spectra
        let gain = params.field_std * (1.0 + 0.25 * (z as f64 * 0.7).sin());
        for y in 0..h {
            for x in 0..w {
                let s = mid + gain * chained[y * w + x] + params.noise_std * normal();
                samples[g.index(x, y, z)] = s.round().clamp(lo, hi) as i32;
            }
        }
    }
    ImageCube::from_samples(*g, samples).expect("samples are clamped to range")
}
