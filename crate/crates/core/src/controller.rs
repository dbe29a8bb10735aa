//! Per-line step selection and feedback on the working target.
//!
//! At the last sample of every spectral line the controller receives the
//! band scales `m_z` and picks the step for the next line. The search is
//! warm-started at the current step: if the predicted line rate is at or
//! above the target the step walks up by 2 while it stays at or above the
//! target, otherwise it walks down while at or below; a final comparison
//! rolls back one step if the previous candidate was strictly closer.
//!
//! The working target is then corrected from measured output: the
//! difference between the cumulative budget and the bits actually produced
//! is spread over the next `tau` lines.

use crate::error::{Error, Result};
use crate::quantizer::{StepSize, MAX_STEP};
use crate::rate_model::RateLut;
use crate::stats::MAX_MEDIAN;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    /// User target in bits per sample.
    pub target_rate: f64,
    pub q_max: u16,
    /// Number of lines over which a budget deficit is spread.
    pub tau: u32,
    /// Past lines used by the feedback. Only 1 is supported.
    pub window: u32,
    pub q_init: u16,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            target_rate: 2.0,
            q_max: MAX_STEP,
            tau: 5,
            window: 1,
            q_init: 1,
        }
    }
}

impl ControllerConfig {
    pub fn with_rate(target_rate: f64) -> Self {
        ControllerConfig {
            target_rate,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_rate > 0.0 && self.target_rate.is_finite()) {
            return Err(Error::Config(format!(
                "target rate must be positive, got {}",
                self.target_rate
            )));
        }
        if self.target_rate > 64.0 {
            return Err(Error::Config(format!(
                "target rate {} bits/sample exceeds any supported depth",
                self.target_rate
            )));
        }
        StepSize::new(self.q_max).map_err(|_| {
            Error::Config(format!(
                "Q_max must be odd and in [1, {MAX_STEP}], got {}",
                self.q_max
            ))
        })?;
        let q_init = StepSize::new(self.q_init)
            .map_err(|_| Error::Config(format!("Q_init must be odd, got {}", self.q_init)))?;
        if q_init.get() > self.q_max {
            return Err(Error::Config(format!(
                "Q_init {} exceeds Q_max {}",
                self.q_init, self.q_max
            )));
        }
        if self.tau == 0 {
            return Err(Error::Config("tau must be at least 1".into()));
        }
        if self.window != 1 {
            return Err(Error::Config(format!(
                "feedback window of {} lines is not supported (only 1)",
                self.window
            )));
        }
        Ok(())
    }

    /// Target in whole millibits per sample.
    pub fn target_millibits(&self) -> i64 {
        (self.target_rate * 1000.0).round() as i64
    }
}

/// Result of one step search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOutcome {
    pub step: StepSize,
    /// Predicted line rate at `step`, summed over bands (millibits).
    pub predicted: i64,
    /// Number of `±2` moves taken, rollback excluded.
    pub moves: u32,
    /// Table lookups performed.
    pub lookups: u64,
}

fn line_rate(lut: &RateLut, medians: &[u32], step: StepSize) -> i64 {
    medians.iter().map(|&m| lut.lookup(m, step) as i64).sum()
}

/// Warm-started search for the step whose summed band rate is closest to
/// `line_target` (millibits summed over bands). `q_prev` must not exceed
/// `q_max`.
pub fn search_step(
    lut: &RateLut,
    medians: &[u32],
    line_target: i64,
    q_prev: StepSize,
    q_max: StepSize,
) -> SearchOutcome {
    debug_assert!(q_prev <= q_max);
    debug_assert!(medians.iter().all(|&m| m <= MAX_MEDIAN));
    let n = medians.len() as u64;
    let mut q = q_prev;
    let mut rate = line_rate(lut, medians, q);
    let mut lookups = n;
    let mut moves = 0;
    let mut previous: Option<(StepSize, i64)> = None;

    if rate >= line_target {
        while rate >= line_target && q < q_max {
            previous = Some((q, rate));
            q = q.up();
            rate = line_rate(lut, medians, q);
            lookups += n;
            moves += 1;
        }
    } else {
        while rate <= line_target && q > StepSize::LOSSLESS {
            previous = Some((q, rate));
            q = q.down();
            rate = line_rate(lut, medians, q);
            lookups += n;
            moves += 1;
        }
    }
    if let Some((q_old, r_old)) = previous {
        if (rate - line_target).abs() > (r_old - line_target).abs() {
            q = q_old;
            rate = r_old;
        }
    }
    SearchOutcome {
        step: q,
        predicted: rate,
        moves,
        lookups,
    }
}

#[derive(Debug, Clone)]
pub struct RateController {
    config: ControllerConfig,
    q_max: StepSize,
    step: StepSize,
    user_millibits: i64,
    target_millibits: i64,
    produced_bits: u64,
    samples_done: u64,
    lines_done: u64,
    lookups: u64,
    moves: u64,
    last_predicted: i64,
}

impl RateController {
    pub fn new(config: ControllerConfig) -> Result<Self> {
        config.validate()?;
        let user = config.target_millibits();
        Ok(RateController {
            q_max: StepSize::new(config.q_max)?,
            step: StepSize::new(config.q_init)?,
            user_millibits: user,
            target_millibits: user,
            produced_bits: 0,
            samples_done: 0,
            lines_done: 0,
            lookups: 0,
            moves: 0,
            last_predicted: 0,
            config,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    /// Step for the line currently being coded.
    pub fn step(&self) -> StepSize {
        self.step
    }

    /// Working target, millibits per sample.
    pub fn target_millibits(&self) -> i64 {
        self.target_millibits
    }

    pub fn produced_bits(&self) -> u64 {
        self.produced_bits
    }

    pub fn lines_done(&self) -> u64 {
        self.lines_done
    }

    pub fn lookups(&self) -> u64 {
        self.lookups
    }

    /// Total `±2` search moves so far.
    pub fn search_moves(&self) -> u64 {
        self.moves
    }

    /// Predicted summed band rate of the last selection (millibits).
    pub fn last_predicted(&self) -> i64 {
        self.last_predicted
    }

    /// Feeds back the payload bits of a finished line. The new target is
    /// `R_user + (B - P) / (tau * line_samples)`, floored at zero, where `B`
    /// is the cumulative budget and `P` the cumulative output.
    pub fn update_target(&mut self, line_bits: u64, line_samples: u64) {
        self.produced_bits += line_bits;
        self.samples_done += line_samples;
        self.lines_done += 1;
        let budget_milli = self.user_millibits as i128 * self.samples_done as i128;
        let produced_milli = self.produced_bits as i128 * 1000;
        let spread = self.config.tau as i128 * line_samples.max(1) as i128;
        let correction = (budget_milli - produced_milli).div_euclid(spread);
        self.target_millibits = (self.user_millibits as i128 + correction).max(0) as i64;
    }

    /// Chooses and adopts the step for the next line from the band scales.
    pub fn select_next_q(&mut self, medians: &[u32], lut: &RateLut) -> StepSize {
        let line_target = self.target_millibits * medians.len() as i64;
        let out = search_step(lut, medians, line_target, self.step, self.q_max);
        self.lookups += out.lookups;
        self.moves += out.moves as u64;
        self.last_predicted = out.predicted;
        self.step = out.step;
        out.step
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn lut() -> &'static RateLut {
        static LUT: OnceLock<RateLut> = OnceLock::new();
        LUT.get_or_init(RateLut::build)
    }

    fn step(q: u16) -> StepSize {
        StepSize::new(q).unwrap()
    }

    #[test]
    fn zero_scales_walk_down_to_lossless() {
        let out = search_step(lut(), &[0, 0, 0], 3000, step(41), step(511));
        assert_eq!(out.step, StepSize::LOSSLESS);
        assert_eq!(out.moves, 20);
    }

    #[test]
    fn saturates_at_q_max() {
        let out = search_step(lut(), &[1023; 4], 100, step(63), step(63));
        assert_eq!(out.step, step(63));
        assert_eq!(out.moves, 0);
        assert_eq!(out.lookups, 4);
    }

    #[test]
    fn single_band_rolls_back_when_previous_is_closer() {
        // R(10,1) = 5.7652, R(10,3) = 4.1845: 0.765 from 5.0 beats 0.816.
        assert_eq!(lut().entry(10, 0), 5765);
        assert_eq!(lut().entry(10, 1), 4184);
        let out = search_step(lut(), &[10], 5000, StepSize::LOSSLESS, step(511));
        assert_eq!(out.moves, 1);
        assert_eq!(out.step, StepSize::LOSSLESS);
        assert_eq!(out.predicted, 5765);
        // a target nearer to R(10,3) keeps the move
        let out = search_step(lut(), &[10], 4900, StepSize::LOSSLESS, step(511));
        assert_eq!(out.step, step(3));
    }

    #[test]
    fn warm_start_is_cheap_for_stationary_scales() {
        let medians = vec![37u32; 16];
        let mut c = RateController::new(ControllerConfig::with_rate(2.0)).unwrap();
        c.select_next_q(&medians, lut());
        let before = c.lookups();
        c.select_next_q(&medians, lut());
        assert!(c.lookups() - before <= 2 * medians.len() as u64);
    }

    #[test]
    fn on_budget_keeps_user_target() {
        let mut c = RateController::new(ControllerConfig::with_rate(2.0)).unwrap();
        c.update_target(2 * 1000, 1000);
        assert_eq!(c.target_millibits(), 2000);
    }

    #[test]
    fn overshoot_of_tau_lines_lowers_target_by_one_bit() {
        let cfg = ControllerConfig::with_rate(3.0);
        let mut c = RateController::new(cfg).unwrap();
        let spl = 640u64;
        let budget = 3 * spl;
        c.update_target(budget + cfg.tau as u64 * spl, spl);
        assert_eq!(c.target_millibits(), 2000);
    }

    #[test]
    fn target_never_negative() {
        let mut c = RateController::new(ControllerConfig::with_rate(0.5)).unwrap();
        c.update_target(1_000_000, 10);
        assert_eq!(c.target_millibits(), 0);
    }

    #[test]
    fn persistent_overshoot_drives_target_down() {
        let mut c = RateController::new(ControllerConfig::with_rate(1.0)).unwrap();
        let spl = 100;
        let mut prev = c.target_millibits();
        for _ in 0..20 {
            // source always produces 1.5 bits/sample regardless of target
            c.update_target(150, spl);
            let t = c.target_millibits();
            assert!(t < prev || t == 0);
            prev = t;
        }
    }

    #[test]
    fn config_validation() {
        let ok = ControllerConfig::with_rate(1.0);
        assert!(ok.validate().is_ok());
        assert!(ControllerConfig { q_max: 64, ..ok }.validate().is_err());
        assert!(ControllerConfig { q_max: 513, ..ok }.validate().is_err());
        assert!(ControllerConfig {
            q_init: 65,
            q_max: 63,
            ..ok
        }
        .validate()
        .is_err());
        assert!(ControllerConfig { tau: 0, ..ok }.validate().is_err());
        assert!(ControllerConfig { window: 2, ..ok }.validate().is_err());
        assert!(ControllerConfig::with_rate(0.0).validate().is_err());
        assert!(ControllerConfig::with_rate(f64::NAN).validate().is_err());
    }
}
