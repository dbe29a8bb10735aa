//! Closed-loop adaptive linear predictor over reconstructed samples.
//!
//! The prediction for `(x, y, z)` starts from the local sum `σ` of the four
//! causal neighbours W, NW, N and NE in the current band. A weight vector
//! per band combines the central local differences `4 s̃ - σ` of the `P`
//! preceding bands (co-located) with three directional differences of the
//! current band, `4N - σ`, `4W - σ` and `4NW - σ`:
//!
//! ```text
//! ŝ = clamp(round(w · d / 2^Ω + σ / 4))
//! ```
//!
//! Weights adapt by sign-LMS. All arithmetic is integer so encoder and
//! decoder stay in lock step.

use crate::error::{Error, Result};
use crate::image::CubeGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictorConfig {
    /// Number of preceding bands used (`P`).
    pub bands: u16,
    /// Fractional bits of the weights (`Ω`).
    pub weight_resolution: u8,
    /// Adaptation exponent at the start of each band.
    pub rho_initial: u8,
    /// Adaptation exponent once fully settled.
    pub rho_final: u8,
    /// Samples between exponent increments.
    pub rho_interval: u16,
    /// Width of the inner-product accumulator in bits.
    pub register_size: u8,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            bands: 3,
            weight_resolution: 13,
            rho_initial: 2,
            rho_final: 6,
            rho_interval: 64,
            register_size: 64,
        }
    }
}

impl PredictorConfig {
    /// Default parameters with `P` capped by the cube's band count.
    pub fn for_geometry(geometry: &CubeGeometry) -> Self {
        let mut c = PredictorConfig::default();
        c.bands = c.bands.min((geometry.n_bands - 1) as u16);
        c
    }

    pub fn validate(&self, geometry: &CubeGeometry) -> Result<()> {
        if self.bands as usize > geometry.n_bands - 1 {
            return Err(Error::Config(format!(
                "predictor uses {} previous bands but the cube has {}",
                self.bands, geometry.n_bands
            )));
        }
        if !(2..=20).contains(&self.weight_resolution) {
            return Err(Error::Config(format!(
                "weight resolution {} outside [2, 20]",
                self.weight_resolution
            )));
        }
        if self.rho_initial > self.rho_final || self.rho_final > 24 {
            return Err(Error::Config(format!(
                "adaptation exponents {}..{} are invalid",
                self.rho_initial, self.rho_final
            )));
        }
        if self.rho_interval == 0 {
            return Err(Error::Config("adaptation interval must be positive".into()));
        }
        let needed = self.accumulator_bits(geometry.bit_depth);
        if needed > self.register_size as u32 || self.register_size > 64 {
            return Err(Error::Config(format!(
                "inner product needs {needed} bits, register is {} (max 64)",
                self.register_size
            )));
        }
        Ok(())
    }

    /// Worst-case bits of `w · d + σ 2^(Ω-2)`, sign included.
    pub fn accumulator_bits(&self, bit_depth: u8) -> u32 {
        // |d| <= 8 * 2^D, |w| <= 2^(Ω+2)
        let term = bit_depth as u32 + 3 + self.weight_resolution as u32 + 2;
        let terms = self.bands as u32 + 4;
        term + (32 - (terms - 1).leading_zeros()) + 1
    }

    fn weight_count(&self) -> usize {
        self.bands as usize + 3
    }
}

#[derive(Debug, Clone)]
pub struct Predictor {
    config: PredictorConfig,
    n_cols: usize,
    n_bands: usize,
    min: i32,
    max: i32,
    mid: i32,
    prev_row: Vec<i32>,
    cur_row: Vec<i32>,
    weights: Vec<i32>,
    w_min: i32,
    w_max: i32,
    diffs: Vec<i32>,
    pending: Option<Pending>,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    x: usize,
    y: usize,
    z: usize,
    prediction: i32,
    adaptive: bool,
}

impl Predictor {
    pub fn new(geometry: &CubeGeometry, config: PredictorConfig) -> Result<Self> {
        geometry.validate()?;
        config.validate(geometry)?;
        let omega = config.weight_resolution as i32;
        let nw = config.weight_count();
        let mut weights = vec![0i32; geometry.n_bands * nw];
        if config.bands > 0 {
            for band in weights.chunks_mut(nw) {
                band[0] = (7 << omega) / 8;
            }
        }
        let plane = geometry.n_bands * geometry.n_cols;
        Ok(Predictor {
            config,
            n_cols: geometry.n_cols,
            n_bands: geometry.n_bands,
            min: geometry.min_sample(),
            max: geometry.max_sample(),
            mid: geometry.mid_sample(),
            prev_row: vec![0; plane],
            cur_row: vec![0; plane],
            weights,
            w_min: -(1 << (omega + 2)),
            w_max: (1 << (omega + 2)) - 1,
            diffs: vec![0; nw],
            pending: None,
        })
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    /// Weights of band `z`: `P` central then N, W, NW directional.
    pub fn weights(&self, z: usize) -> &[i32] {
        let nw = self.config.weight_count();
        &self.weights[z * nw..(z + 1) * nw]
    }

    #[inline]
    fn cur(&self, x: usize, z: usize) -> i32 {
        self.cur_row[z * self.n_cols + x]
    }

    #[inline]
    fn prev(&self, x: usize, z: usize) -> i32 {
        self.prev_row[z * self.n_cols + x]
    }

    /// Local sum over reconstructed neighbours of `(x, y)` in band `z`.
    /// Not defined for the first sample of a band.
    fn local_sum(&self, x: usize, y: usize, z: usize) -> i32 {
        debug_assert!(x > 0 || y > 0);
        if y == 0 {
            return 4 * self.cur(x - 1, z);
        }
        let n = self.prev(x, z);
        let ne = if x + 1 < self.n_cols {
            self.prev(x + 1, z)
        } else {
            n
        };
        let (w, nw) = if x > 0 {
            (self.cur(x - 1, z), self.prev(x - 1, z))
        } else {
            (n, n)
        };
        w + nw + n + ne
    }

    /// Predicts `(x, y, z)`. Positions must be visited in BIL order, each
    /// followed by [`Predictor::update`].
    pub fn predict(&mut self, x: usize, y: usize, z: usize) -> i32 {
        assert!(
            self.pending.is_none(),
            "predict called twice without update"
        );
        assert!(x < self.n_cols && z < self.n_bands);
        let p = self.config.bands as usize;

        if x == 0 && y == 0 {
            let prediction = if z == 0 || p == 0 {
                self.mid
            } else {
                self.cur(0, z - 1)
            };
            self.pending = Some(Pending {
                x,
                y,
                z,
                prediction,
                adaptive: false,
            });
            return prediction;
        }

        let sigma = self.local_sum(x, y, z);
        for i in 1..=p {
            self.diffs[i - 1] = if i <= z {
                let zb = z - i;
                4 * self.cur(x, zb) - self.local_sum(x, y, zb)
            } else {
                0
            };
        }
        if y > 0 {
            let n = self.prev(x, z);
            let (w, nw) = if x > 0 {
                (self.cur(x - 1, z), self.prev(x - 1, z))
            } else {
                (n, n)
            };
            self.diffs[p] = 4 * n - sigma;
            self.diffs[p + 1] = 4 * w - sigma;
            self.diffs[p + 2] = 4 * nw - sigma;
        } else {
            self.diffs[p..].fill(0);
        }

        let omega = self.config.weight_resolution as u32;
        let weights = &self.weights[z * (p + 3)..(z + 1) * (p + 3)];
        let dot: i64 = weights
            .iter()
            .zip(&self.diffs)
            .map(|(&w, &d)| w as i64 * d as i64)
            .sum();
        let acc = dot + ((sigma as i64) << (omega - 2)) + (1i64 << (omega - 1));
        let prediction = (acc >> omega).clamp(self.min as i64, self.max as i64) as i32;
        self.pending = Some(Pending {
            x,
            y,
            z,
            prediction,
            adaptive: true,
        });
        prediction
    }

    /// Adapts the weights with `error = s̃ - ŝ` and records the
    /// reconstructed sample `ŝ + error`.
    pub fn update(&mut self, error: i32) {
        let Pending {
            x,
            y,
            z,
            prediction,
            adaptive,
        } = self.pending.take().expect("update without predict");
        let recon = prediction + error;
        debug_assert!((self.min..=self.max).contains(&recon));

        if adaptive && error != 0 {
            let t = (y * self.n_cols + x) as u64;
            let rho = (self.config.rho_initial as u64 + t / self.config.rho_interval as u64)
                .min(self.config.rho_final as u64) as i32;
            let shift = rho as u32;
            let sign = error.signum();
            let nw = self.config.weight_count();
            let (lo, hi) = (self.w_min, self.w_max);
            let weights = &mut self.weights[z * nw..(z + 1) * nw];
            for (w, &d) in weights.iter_mut().zip(&self.diffs) {
                let step = sign * d;
                let delta = if shift == 0 {
                    step
                } else {
                    (step + (1 << (shift - 1))) >> shift
                };
                *w = (*w + delta).clamp(lo, hi);
            }
        }

        self.cur_row[z * self.n_cols + x] = recon;
        if x + 1 == self.n_cols && z + 1 == self.n_bands {
            std::mem::swap(&mut self.prev_row, &mut self.cur_row);
        }
    }
}
