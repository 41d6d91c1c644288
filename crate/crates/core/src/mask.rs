//! Streaming 0/1/2 data-quality mask.
//!
//! Each frame gets a frequency estimate and a fringe contrast. Low contrast
//! means split-mode operation (label 2, checked first because split-mode
//! frequencies can wander back into the good band). Otherwise the frame is
//! good (0) when its frequency lies within `k_sigma · ref_sigma_hz` of the
//! reference and anomalous (1) when it does not.

use alloc::vec::Vec;

use crate::estimator::FrequencyEstimator;
use crate::single_tone::FreqEstimate;
use crate::{Error, Result, SignalWindow};

/// Mask thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskConfig {
    /// Center of the good band, Hz.
    pub ref_mean_hz: f64,
    /// Standard deviation of the frequency on disturbance-free data, Hz.
    pub ref_sigma_hz: f64,
    /// Half-width of the good band in units of `ref_sigma_hz`.
    pub k_sigma: f64,
    /// Contrast below which a frame is split mode.
    pub contrast_threshold: f64,
    /// Samples per envelope segment for [`fringe_contrast_segmented`]; 0
    /// uses the whole frame.
    pub envelope_window: usize,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self { ref_mean_hz: 280.0, ref_sigma_hz: 1.0, k_sigma: 2.0, contrast_threshold: 0.5, envelope_window: 0 }
    }
}

impl MaskConfig {
    /// Checks the band and threshold invariants.
    pub fn validate(&self) -> Result<()> {
        if !self.ref_mean_hz.is_finite() {
            return Err(Error::NonFinite);
        }
        if !(self.ref_sigma_hz.is_finite() && self.ref_sigma_hz > 0.0) {
            return Err(Error::Domain("ref_sigma_hz must be positive"));
        }
        if !(self.k_sigma.is_finite() && self.k_sigma > 0.0) {
            return Err(Error::Domain("k_sigma must be positive"));
        }
        if !(self.contrast_threshold > 0.0 && self.contrast_threshold < 1.0) {
            return Err(Error::Domain("contrast_threshold must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Frame quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MaskLabel {
    /// In band, good contrast.
    Good = 0,
    /// Out of band or estimator failure.
    Anomaly = 1,
    /// Fringe contrast collapsed.
    SplitMode = 2,
}

impl MaskLabel {
    /// Numeric label.
    pub fn code(self) -> u8 {
        self as u8
    }
}

/// `(I_max − I_min)/(I_max + I_min)` from the extrema of `samples`.
fn contrast_of(samples: &[f64]) -> Result<f64> {
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let sum = hi + lo;
    if !(sum > 0.0) {
        return Err(Error::ContrastUndefined(sum));
    }
    Ok((hi - lo) / sum)
}

/// Fringe contrast of an intensity window from its extrema.
pub fn fringe_contrast(window: &SignalWindow) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::EmptySet);
    }
    contrast_of(window.samples())
}

/// Mean fringe contrast over consecutive segments of `segment` samples (a
/// trailing partial segment joins the previous one); `segment` 0 or longer
/// than the window means the whole window.
pub fn fringe_contrast_segmented(window: &SignalWindow, segment: usize) -> Result<f64> {
    let s = window.samples();
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    if segment == 0 || segment >= s.len() {
        return contrast_of(s);
    }
    let n = s.len() / segment;
    let mut total = 0.0;
    for k in 0..n {
        let end = if k + 1 == n { s.len() } else { (k + 1) * segment };
        total += contrast_of(&s[k * segment..end])?;
    }
    Ok(total / n as f64)
}

/// Labels one frame. Contrast is checked first.
pub fn classify_frame(freq: &FreqEstimate, contrast: f64, cfg: &MaskConfig) -> MaskLabel {
    if contrast < cfg.contrast_threshold {
        MaskLabel::SplitMode
    } else if libm::fabs(freq.frequency_hz - cfg.ref_mean_hz) > cfg.k_sigma * cfg.ref_sigma_hz
        || !freq.frequency_hz.is_finite()
    {
        MaskLabel::Anomaly
    } else {
        MaskLabel::Good
    }
}

/// Output of the mask for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskedFrame {
    /// Zero-based position in the stream.
    pub index: u64,
    /// Assigned label.
    pub label: MaskLabel,
    /// Frequency estimate, when the estimator succeeded.
    pub frequency_hz: Option<f64>,
    /// Fringe contrast, when defined.
    pub contrast: Option<f64>,
}

#[derive(Debug, Clone)]
struct Calibration {
    remaining: usize,
    base: MaskConfig,
    estimates: Vec<f64>,
}

/// Causal mask over a frame stream.
///
/// With a calibration prefix, the first frames build the reference band
/// (mean and sample standard deviation of their in-contrast estimates). While
/// calibrating, frames are labeled 2 on low contrast, 1 on failure and 0
/// otherwise.
pub struct MaskStream<E> {
    estimator: E,
    cfg: MaskConfig,
    calibration: Option<Calibration>,
    frame_len: Option<usize>,
    next_index: u64,
    failures: u64,
}

impl<E: FrequencyEstimator> MaskStream<E> {
    /// Stream with a fixed reference band.
    pub fn new(estimator: E, cfg: MaskConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { estimator, cfg, calibration: None, frame_len: None, next_index: 0, failures: 0 })
    }

    /// Stream whose reference band comes from the first `frames` frames;
    /// `cfg.ref_mean_hz` and `cfg.ref_sigma_hz` are replaced once calibration
    /// completes.
    pub fn calibrating(estimator: E, cfg: MaskConfig, frames: usize) -> Result<Self> {
        let mut s = Self::new(estimator, cfg)?;
        if frames > 0 {
            s.calibration = Some(Calibration { remaining: frames, base: cfg, estimates: Vec::with_capacity(frames) });
        }
        Ok(s)
    }

    /// Current thresholds.
    pub fn config(&self) -> &MaskConfig {
        &self.cfg
    }

    /// Whether the calibration prefix is still being consumed.
    pub fn is_calibrating(&self) -> bool {
        self.calibration.is_some()
    }

    /// Frames labeled 1 because estimation or contrast failed.
    pub fn failures(&self) -> u64 {
        self.failures
    }

    /// Labels the next frame.
    pub fn push(&mut self, frame: &SignalWindow) -> MaskedFrame {
        let index = self.next_index;
        self.next_index += 1;
        let expected = *self.frame_len.get_or_insert(frame.len());
        let estimate = if frame.len() == expected {
            self.estimator.estimate(frame).ok().filter(|e| e.frequency_hz.is_finite())
        } else {
            None
        };
        let contrast = fringe_contrast_segmented(frame, self.cfg.envelope_window).ok();
        let (Some(est), Some(c)) = (estimate, contrast) else {
            self.failures += 1;
            self.tick_calibration();
            return MaskedFrame { index, label: MaskLabel::Anomaly, frequency_hz: estimate.map(|e| e.frequency_hz), contrast };
        };
        let label = match self.calibration.as_mut() {
            Some(cal) => {
                let label = if c < cal.base.contrast_threshold {
                    MaskLabel::SplitMode
                } else {
                    cal.estimates.push(est.frequency_hz);
                    MaskLabel::Good
                };
                self.tick_calibration();
                label
            }
            None => classify_frame(&est, c, &self.cfg),
        };
        MaskedFrame { index, label, frequency_hz: Some(est.frequency_hz), contrast: Some(c) }
    }

    fn tick_calibration(&mut self) {
        let Some(cal) = self.calibration.as_mut() else { return };
        cal.remaining -= 1;
        if cal.remaining > 0 {
            return;
        }
        let Some(cal) = self.calibration.take() else { return };
        let mut cfg = cal.base;
        if let Ok((mean, sigma)) = crate::eval::mean_std(&cal.estimates) {
            cfg.ref_mean_hz = mean;
            if sigma > 0.0 {
                cfg.ref_sigma_hz = sigma;
            }
        }
        self.cfg = cfg;
    }

    /// Labels every frame of `frames` in order.
    pub fn run(&mut self, frames: &[SignalWindow]) -> Vec<MaskedFrame> {
        frames.iter().map(|f| self.push(f)).collect()
    }
}

/// Labels a finite stream with a fixed reference band.
pub fn mask_stream<E: FrequencyEstimator>(frames: &[SignalWindow], estimator: E, cfg: MaskConfig) -> Result<Vec<MaskLabel>> {
    let mut s = MaskStream::new(estimator, cfg)?;
    Ok(frames.iter().map(|f| s.push(f).label).collect())
}
