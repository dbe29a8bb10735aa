//! Encoder and decoder loops.
//!
//! Every sample of a line is predicted from reconstructed data, quantized
//! with the line's step and entropy coded; the reconstruction is formed in
//! the loop exactly as the decoder will form it. Unquantized residual
//! magnitudes feed the per-band statistics. At the last sample of each band
//! the band scale is finalized, and at the last sample of the last band the
//! controller measures the line's output, corrects its target and picks the
//! next step.

use std::time::{Duration, Instant};

use crate::bitstream::{Bitstream, Header};
use crate::controller::{ControllerConfig, RateController};
use crate::entropy::{BandModel, RangeDecoder, RangeEncoder};
use crate::error::{Error, Result};
use crate::image::{bil_positions, ImageCube, PixelType};
use crate::predictor::{Predictor, PredictorConfig};
use crate::quantizer::{dequantize, quantize, StepSize};
use crate::rate_model::RateLut;
use crate::stats::LineStatistics;
use crate::DEFAULT_SUBSET_LEN;

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub controller: ControllerConfig,
    /// `None` picks the defaults for the cube.
    pub predictor: Option<PredictorConfig>,
    /// Median subset length `L`.
    pub subset_len: usize,
    /// Keep a per-line record in the report.
    pub trace: bool,
}

impl EncoderConfig {
    pub fn with_rate(target_rate: f64) -> Self {
        EncoderConfig {
            controller: ControllerConfig::with_rate(target_rate),
            predictor: None,
            subset_len: DEFAULT_SUBSET_LEN,
            trace: false,
        }
    }
}

/// One row of the controller trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineTrace {
    pub line: usize,
    /// Step used on this line.
    pub step: u16,
    /// Payload bits produced by this line.
    pub actual_bits: u64,
    /// Working target after feedback, millibits per sample.
    pub target_millibits: i64,
    /// Step chosen for the next line.
    pub next_step: u16,
    /// Predicted line rate at `next_step`, millibits summed over bands.
    pub predicted_millibits: i64,
    pub cumulative_lookups: u64,
}

impl LineTrace {
    pub const CSV_HEADER: &'static str =
        "line,q,actual_bits,target_millibits,next_q,predicted_millibits,cumulative_lookups";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.line,
            self.step,
            self.actual_bits,
            self.target_millibits,
            self.next_step,
            self.predicted_millibits,
            self.cumulative_lookups
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct EncodeReport {
    pub samples: u64,
    pub payload_bytes: u64,
    pub container_bytes: u64,
    pub lookups: u64,
    pub search_moves: u64,
    pub lines: u64,
    pub max_delta: u8,
    /// Statistics finalization, step selection and feedback.
    pub controller_time: Duration,
    pub total_time: Duration,
    pub trace: Vec<LineTrace>,
}

impl EncodeReport {
    pub fn payload_bpp(&self) -> f64 {
        self.payload_bytes as f64 * 8.0 / self.samples as f64
    }

    pub fn container_bpp(&self) -> f64 {
        self.container_bytes as f64 * 8.0 / self.samples as f64
    }

    /// Every line was coded with `Q = 1`.
    pub fn lossless(&self) -> bool {
        self.max_delta == 0
    }

    pub fn lookups_per_megasample(&self) -> f64 {
        self.lookups as f64 * 1e6 / self.samples as f64
    }
}

#[derive(Debug, Clone)]
pub struct Encoded {
    pub bitstream: Bitstream,
    /// The encoder's in-loop reconstruction.
    pub reconstruction: ImageCube,
    pub report: EncodeReport,
}

pub fn encode(cube: &ImageCube, config: &EncoderConfig, lut: &RateLut) -> Result<Encoded> {
    let started = Instant::now();
    let g = *cube.geometry();
    if config.subset_len == 0 || config.subset_len > u16::MAX as usize {
        return Err(Error::Config(format!(
            "subset length must be in [1, 65535], got {}",
            config.subset_len
        )));
    }
    let predictor_config = config
        .predictor
        .unwrap_or_else(|| PredictorConfig::for_geometry(&g));
    let mut predictor = Predictor::new(&g, predictor_config)?;
    let mut controller = RateController::new(config.controller)?;

    let (lo, hi) = (g.min_sample(), g.max_sample());
    let line_samples = (g.n_cols * g.n_bands) as u64;
    let mut stats = vec![LineStatistics::new(config.subset_len, g.n_cols); g.n_bands];
    let mut medians = vec![0u32; g.n_bands];
    let mut models = vec![BandModel::new(); g.n_bands];
    let mut coder = RangeEncoder::new();
    let mut recon = vec![0i32; g.sample_count()];
    let mut deltas = Vec::with_capacity(g.n_rows);
    let mut trace = Vec::new();
    let mut controller_time = Duration::ZERO;
    let mut line_start_bits = 0u64;
    let mut step = controller.step();
    let mut max_delta = 0u8;

    for (i, pos) in bil_positions(&g, config.subset_len).enumerate() {
        if pos.x == 0 && pos.z == 0 {
            step = controller.step();
            deltas.push(step.delta());
            max_delta = max_delta.max(step.delta());
        }
        let sample = cube.samples()[i];
        let prediction = predictor.predict(pos.x, pos.y, pos.z);
        let residual = prediction - sample;
        let emitted = stats[pos.z].push_residual(residual);
        debug_assert!(pos.kind != PixelType::B || emitted.is_some());

        let index = quantize(residual, step);
        coder.encode_index(&mut models[pos.z], index);
        let rec = (prediction - dequantize(index, step)).clamp(lo, hi);
        predictor.update(rec - prediction);
        recon[i] = rec;

        match pos.kind {
            PixelType::A | PixelType::B => {}
            PixelType::C => {
                let t = Instant::now();
                medians[pos.z] = stats[pos.z].finalize_line()?;
                controller_time += t.elapsed();
            }
            PixelType::D => {
                let t = Instant::now();
                medians[pos.z] = stats[pos.z].finalize_line()?;
                let bits = coder.bits_written();
                let line_bits = bits - line_start_bits;
                line_start_bits = bits;
                controller.update_target(line_bits, line_samples);
                let next = controller.select_next_q(&medians, lut);
                controller_time += t.elapsed();
                if config.trace {
                    trace.push(LineTrace {
                        line: pos.y,
                        step: step.get(),
                        actual_bits: line_bits,
                        target_millibits: controller.target_millibits(),
                        next_step: next.get(),
                        predicted_millibits: controller.last_predicted(),
                        cumulative_lookups: controller.lookups(),
                    });
                }
            }
        }
    }

    let payload = coder.finish();
    let header = Header::new(g, predictor_config, &config.controller, config.subset_len);
    let bitstream = Bitstream {
        header,
        deltas,
        payload,
    };
    let report = EncodeReport {
        samples: g.sample_count() as u64,
        payload_bytes: bitstream.payload.len() as u64,
        container_bytes: bitstream.encoded_len() as u64,
        lookups: controller.lookups(),
        search_moves: controller.search_moves(),
        lines: controller.lines_done(),
        max_delta,
        controller_time,
        total_time: started.elapsed(),
        trace,
    };
    Ok(Encoded {
        bitstream,
        reconstruction: ImageCube::from_samples(g, recon)?,
        report,
    })
}

/// Decodes a parsed container.
pub fn decode_bitstream(bitstream: &Bitstream) -> Result<ImageCube> {
    let h = &bitstream.header;
    let g = h.geometry;
    if bitstream.deltas.len() != g.n_rows {
        return Err(Error::Corrupt(format!(
            "{} step entries for {} rows",
            bitstream.deltas.len(),
            g.n_rows
        )));
    }
    let mut predictor = Predictor::new(&g, h.predictor)?;
    let mut models = vec![BandModel::new(); g.n_bands];
    let mut coder = RangeDecoder::new(&bitstream.payload)?;
    let (lo, hi) = (g.min_sample(), g.max_sample());
    let mut samples = Vec::with_capacity(g.sample_count());
    let mut step = StepSize::LOSSLESS;

    for pos in bil_positions(&g, h.subset_len as usize) {
        if pos.x == 0 && pos.z == 0 {
            step = StepSize::from_delta(bitstream.deltas[pos.y]);
        }
        let prediction = predictor.predict(pos.x, pos.y, pos.z);
        let index = coder.decode_index(&mut models[pos.z])?;
        let rec = (prediction as i64 - index as i64 * step.get() as i64).clamp(lo as i64, hi as i64)
            as i32;
        predictor.update(rec - prediction);
        samples.push(rec);
    }
    if coder.position() != bitstream.payload.len() {
        return Err(Error::Corrupt(format!(
            "{} trailing payload bytes",
            bitstream.payload.len() - coder.position()
        )));
    }
    ImageCube::from_samples(g, samples)
}

/// Decodes a serialized container.
pub fn decode(bytes: &[u8]) -> Result<ImageCube> {
    decode_bitstream(&Bitstream::from_bytes(bytes)?)
}
