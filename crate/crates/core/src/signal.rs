//! Synthetic beat-note windows.
//!
//! A record pairs a noisy window
//!
//! ```text
//! noisy[i] = A(t_i) * sin(2π f t_i + φ + η_φ[i]) + offset + η_G[i]
//! ```
//!
//! with its clean counterpart `clean[i] = sin(2π f t_i)`, where `t_i = i / fs`,
//! `A` ramps linearly from `trend_start` to `trend_end` across the window and
//! the phase and amplitude noise terms are drawn independently per sample.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::{derive_seed, stream, NOISE_STREAM};
use crate::{Error, Result};

/// Closed interval `[lo, hi]` from which a parameter is drawn uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    /// Lower bound.
    pub lo: f64,
    /// Upper bound.
    pub hi: f64,
}

impl Interval {
    /// `[lo, hi]`.
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// Zero-width interval `[value, value]`.
    pub const fn fixed(value: f64) -> Self {
        Self { lo: value, hi: value }
    }

    fn check(&self, field: &'static str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            return Err(Error::InvalidRange { field, lo: self.lo, hi: self.hi });
        }
        Ok(())
    }

    /// `lo + (hi - lo) * u` with `u` uniform on `[0, 1)`; returns `lo` exactly
    /// for a zero-width interval.
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        if self.lo == self.hi {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * u
        }
    }

    /// Whether `x` lies in the interval.
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Sampling ranges for every stochastic field of [`GenParams`], plus the
/// window geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRanges {
    /// Tone frequency, Hz.
    pub frequency_hz: Interval,
    /// Initial phase, rad.
    pub phase_rad: Interval,
    /// Additive offset.
    pub offset: Interval,
    /// Amplitude at the first sample.
    pub trend_start: Interval,
    /// Amplitude at the last sample.
    pub trend_end: Interval,
    /// Standard deviation of the additive Gaussian noise.
    pub sigma_amp: Interval,
    /// Standard deviation of the per-sample phase noise, rad.
    pub sigma_phase: Interval,
    /// Window length.
    pub n_samples: usize,
    /// Sample rate, Hz.
    pub sample_rate_hz: f64,
}

impl Default for ParamRanges {
    /// Training distribution: 100-500 Hz tones, 50 samples at 5 kHz.
    fn default() -> Self {
        Self {
            frequency_hz: Interval::new(100.0, 500.0),
            phase_rad: Interval::new(-PI, PI),
            offset: Interval::new(-0.2, 0.2),
            trend_start: Interval::new(0.6, 1.2),
            trend_end: Interval::new(0.6, 1.2),
            sigma_amp: Interval::new(0.001, 0.01),
            sigma_phase: Interval::new(0.001, 0.01),
            n_samples: 50,
            sample_rate_hz: 5000.0,
        }
    }
}

impl ParamRanges {
    /// Same ranges with the tone frequency pinned to `frequency_hz`.
    pub fn with_frequency(mut self, frequency_hz: f64) -> Self {
        self.frequency_hz = Interval::fixed(frequency_hz);
        self
    }

    /// Ranges with every field fixed and no noise: a pure `sin(2π f t)`.
    pub fn noiseless(frequency_hz: f64) -> Self {
        Self {
            frequency_hz: Interval::fixed(frequency_hz),
            phase_rad: Interval::fixed(0.0),
            offset: Interval::fixed(0.0),
            trend_start: Interval::fixed(1.0),
            trend_end: Interval::fixed(1.0),
            sigma_amp: Interval::fixed(0.0),
            sigma_phase: Interval::fixed(0.0),
            ..Self::default()
        }
    }

    /// Checks interval ordering, noise signs and the window geometry.
    pub fn validate(&self) -> Result<()> {
        self.frequency_hz.check("frequency_hz")?;
        self.phase_rad.check("phase_rad")?;
        self.offset.check("offset")?;
        self.trend_start.check("trend_start")?;
        self.trend_end.check("trend_end")?;
        self.sigma_amp.check("sigma_amp")?;
        self.sigma_phase.check("sigma_phase")?;
        if self.frequency_hz.lo <= 0.0 {
            return Err(Error::InvalidRange {
                field: "frequency_hz",
                lo: self.frequency_hz.lo,
                hi: self.frequency_hz.hi,
            });
        }
        if self.sigma_amp.lo < 0.0 {
            return Err(Error::InvalidRange {
                field: "sigma_amp",
                lo: self.sigma_amp.lo,
                hi: self.sigma_amp.hi,
            });
        }
        if self.sigma_phase.lo < 0.0 {
            return Err(Error::InvalidRange {
                field: "sigma_phase",
                lo: self.sigma_phase.lo,
                hi: self.sigma_phase.hi,
            });
        }
        check_geometry(self.n_samples, self.sample_rate_hz, self.frequency_hz.hi)
    }
}

fn check_geometry(n_samples: usize, sample_rate_hz: f64, frequency_hz: f64) -> Result<()> {
    if n_samples < 2 {
        return Err(Error::WindowTooShort { len: n_samples, min: 2 });
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::Domain("sample rate must be positive"));
    }
    if sample_rate_hz <= 2.0 * frequency_hz {
        return Err(Error::Nyquist { frequency_hz, sample_rate_hz });
    }
    Ok(())
}

/// Full parameter vector of one synthetic record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    /// Tone frequency, Hz.
    pub frequency_hz: f64,
    /// Initial phase, rad.
    pub phase_rad: f64,
    /// Additive offset.
    pub offset: f64,
    /// Amplitude at the first sample.
    pub trend_start: f64,
    /// Amplitude at the last sample.
    pub trend_end: f64,
    /// Standard deviation of the additive Gaussian noise.
    pub sigma_amp: f64,
    /// Standard deviation of the per-sample phase noise, rad.
    pub sigma_phase: f64,
    /// Window length.
    pub n_samples: usize,
    /// Sample rate, Hz.
    pub sample_rate_hz: f64,
    /// Seed of the per-sample noise stream.
    pub seed: u64,
}

impl GenParams {
    /// Checks geometry, Nyquist and noise signs.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.frequency_hz,
            self.phase_rad,
            self.offset,
            self.trend_start,
            self.trend_end,
            self.sigma_amp,
            self.sigma_phase,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain("generator parameters must be finite"));
        }
        if self.frequency_hz <= 0.0 {
            return Err(Error::Domain("frequency must be positive"));
        }
        if self.sigma_amp < 0.0 || self.sigma_phase < 0.0 {
            return Err(Error::Domain("noise standard deviations must be non-negative"));
        }
        check_geometry(self.n_samples, self.sample_rate_hz, self.frequency_hz)
    }
}

/// Fixed-length frame of samples with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalWindow {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl SignalWindow {
    /// Wraps `samples`, rejecting non-finite values or sample rates.
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Domain("sample rate must be positive"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { samples, sample_rate_hz })
    }

    /// Sample values.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// True for a zero-length window.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample rate, Hz.
    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Window duration `len / fs`, seconds.
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Consumes the window, returning its samples.
    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Training triple: noisy input, clean target and the true frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    /// Window with every perturbation applied.
    pub noisy: SignalWindow,
    /// Unperturbed `sin(2π f t)`.
    pub clean: SignalWindow,
    /// Tone frequency, Hz.
    pub frequency_hz: f64,
}

/// Draws a parameter vector from `ranges`.
///
/// Fields are drawn in declaration order (frequency, phase, offset,
/// trend start, trend end, amplitude sigma, phase sigma) from the stream
/// seeded by `rng_seed`; the returned `seed` is
/// `derive_seed(rng_seed, NOISE_STREAM)`.
pub fn sample_params(rng_seed: u64, ranges: &ParamRanges) -> Result<GenParams> {
    ranges.validate()?;
    let mut rng = stream(rng_seed);
    Ok(GenParams {
        frequency_hz: ranges.frequency_hz.draw(&mut rng),
        phase_rad: ranges.phase_rad.draw(&mut rng),
        offset: ranges.offset.draw(&mut rng),
        trend_start: ranges.trend_start.draw(&mut rng),
        trend_end: ranges.trend_end.draw(&mut rng),
        sigma_amp: ranges.sigma_amp.draw(&mut rng),
        sigma_phase: ranges.sigma_phase.draw(&mut rng),
        n_samples: ranges.n_samples,
        sample_rate_hz: ranges.sample_rate_hz,
        seed: derive_seed(rng_seed, NOISE_STREAM),
    })
}

/// Synthesizes the clean/noisy pair described by `params`.
///
/// Per sample, the phase-noise deviate is drawn before the amplitude-noise
/// deviate, both from the stream seeded by `params.seed`.
pub fn generate_pair(params: &GenParams) -> Result<DatasetRecord> {
    params.validate()?;
    let n = params.n_samples;
    let fs = params.sample_rate_hz;
    let omega = 2.0 * PI * params.frequency_hz;
    let last = (n - 1) as f64;
    let mut rng = stream(params.seed);
    let mut noisy = Vec::with_capacity(n);
    let mut clean = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / fs;
        let z_phase: f64 = rng.sample(StandardNormal);
        let z_amp: f64 = rng.sample(StandardNormal);
        let amplitude = if i == 0 {
            params.trend_start
        } else if i == n - 1 {
            params.trend_end
        } else {
            params.trend_start + (params.trend_end - params.trend_start) * (i as f64 / last)
        };
        let arg = omega * t;
        clean.push(libm::sin(arg));
        noisy.push(
            amplitude * libm::sin(arg + params.phase_rad + params.sigma_phase * z_phase)
                + params.offset
                + params.sigma_amp * z_amp,
        );
    }
    Ok(DatasetRecord {
        noisy: SignalWindow::new(noisy, fs)?,
        clean: SignalWindow::new(clean, fs)?,
        frequency_hz: params.frequency_hz,
    })
}

/// Deterministic stream of `n` records; record `i` is generated from
/// `sample_params(derive_seed(master_seed, i), ranges)`.
#[derive(Debug, Clone)]
pub struct Dataset {
    ranges: ParamRanges,
    master_seed: u64,
    next: u64,
    len: u64,
}

impl Dataset {
    /// Number of records.
    pub fn len(&self) -> u64 {
        self.len
    }

    /// Always false; empty datasets are rejected at construction.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Ranges the records are drawn from.
    pub fn ranges(&self) -> &ParamRanges {
        &self.ranges
    }

    /// Parameters of record `index` (random access, independent of iteration).
    pub fn params(&self, index: u64) -> GenParams {
        // ranges were validated at construction, so sampling cannot fail
        sample_params(derive_seed(self.master_seed, index), &self.ranges)
            .expect("validated ranges")
    }

    /// Record `index`.
    pub fn record(&self, index: u64) -> DatasetRecord {
        generate_pair(&self.params(index)).expect("validated ranges")
    }
}

impl Iterator for Dataset {
    type Item = DatasetRecord;

    fn next(&mut self) -> Option<DatasetRecord> {
        if self.next >= self.len {
            return None;
        }
        let record = self.record(self.next);
        self.next += 1;
        Some(record)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.len - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Dataset {}

/// Stream of `n` independent records drawn from `ranges`.
pub fn generate_dataset(n: u64, ranges: &ParamRanges, master_seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    ranges.validate()?;
    Ok(Dataset { ranges: *ranges, master_seed, next: 0, len: n })
}

/// Sagnac beat frequency `4 Ω A cos θ / (P λ)` of a ring cavity, Hz.
///
/// `omega` in rad/s, `area` in m², `perimeter` and `wavelength` in m and
/// `theta` (angle between the area vector and the rotation axis) in rad.
pub fn sagnac_frequency(
    omega: f64,
    area: f64,
    perimeter: f64,
    wavelength: f64,
    theta: f64,
) -> Result<f64> {
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !(positive(omega) && positive(area) && positive(perimeter) && positive(wavelength)) {
        return Err(Error::Domain("rotation rate and cavity geometry must be positive"));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain("theta must lie in [0, π]"));
    }
    Ok(4.0 * omega * area * libm::cos(theta) / (perimeter * wavelength))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_ranges_return_constants() {
        let ranges = ParamRanges {
            frequency_hz: Interval::fixed(321.5),
            phase_rad: Interval::fixed(0.25),
            offset: Interval::fixed(-0.1),
            trend_start: Interval::fixed(0.7),
            trend_end: Interval::fixed(1.1),
            sigma_amp: Interval::fixed(0.004),
            sigma_phase: Interval::fixed(0.002),
            ..ParamRanges::default()
        };
        let p = sample_params(99, &ranges).unwrap();
        assert_eq!(p.frequency_hz, 321.5);
        assert_eq!(p.phase_rad, 0.25);
        assert_eq!(p.offset, -0.1);
        assert_eq!(p.trend_start, 0.7);
        assert_eq!(p.trend_end, 1.1);
        assert_eq!(p.sigma_amp, 0.004);
        assert_eq!(p.sigma_phase, 0.002);
    }

    #[test]
    fn inverted_range_is_rejected() {
        let ranges = ParamRanges { offset: Interval::new(0.2, -0.2), ..ParamRanges::default() };
        assert!(matches!(
            sample_params(1, &ranges),
            Err(Error::InvalidRange { field: "offset", .. })
        ));
    }

    #[test]
    fn nyquist_violation_is_rejected() {
        let mut p = sample_params(3, &ParamRanges::default()).unwrap();
        p.frequency_hz = 2500.0;
        assert!(matches!(generate_pair(&p), Err(Error::Nyquist { .. })));
        let ranges = ParamRanges { sample_rate_hz: 900.0, ..ParamRanges::default() };
        assert!(matches!(ranges.validate(), Err(Error::Nyquist { .. })));
    }

    #[test]
    fn clean_sample_values() {
        let r = generate_pair(&sample_params(5, &ParamRanges::noiseless(100.0)).unwrap()).unwrap();
        // sin(2π·100/5000) = sin(π/25), evaluated to 20 digits offline.
        assert!((r.clean.samples()[1] - 0.125_333_233_564_304_24).abs() < 1e-15);
        let r = generate_pair(&sample_params(5, &ParamRanges::noiseless(250.0)).unwrap()).unwrap();
        assert!(r.clean.samples()[10].abs() < 1e-12);
    }

    #[test]
    fn trend_endpoints_are_exact() {
        let ranges = ParamRanges {
            phase_rad: Interval::fixed(PI / 2.0),
            frequency_hz: Interval::fixed(100.0),
            offset: Interval::fixed(0.0),
            trend_start: Interval::fixed(0.6),
            trend_end: Interval::fixed(1.2),
            sigma_amp: Interval::fixed(0.0),
            sigma_phase: Interval::fixed(0.0),
            ..ParamRanges::default()
        };
        let r = generate_pair(&sample_params(0, &ranges).unwrap()).unwrap();
        // cos(0) = 1 at the first sample; last sample at 2π·100·49/5000.
        assert!((r.noisy.samples()[0] - 0.6).abs() < 1e-15);
        let arg = 2.0 * PI * 100.0 * 49.0 / 5000.0 + PI / 2.0;
        assert!((r.noisy.samples()[49] - 1.2 * libm::sin(arg)).abs() < 1e-15);
    }

    #[test]
    fn sagnac_reference_cavity() {
        let omega = 7.292_115e-5;
        let (area, perimeter, lambda) = (12.96, 14.4, 632.8e-9);
        let f0 = sagnac_frequency(omega, area, perimeter, lambda, 0.0).unwrap();
        // 4·7.292115e-5·12.96 / (14.4·632.8e-9)
        assert!((f0 - 414.848_514_538_558_8).abs() < 1e-9, "{f0}");
        let colat = (90.0_f64 - 42.45).to_radians();
        let f = sagnac_frequency(omega, area, perimeter, lambda, colat).unwrap();
        assert!((f - 280.0).abs() < 1.0, "{f}");
        let f90 = sagnac_frequency(omega, area, perimeter, lambda, PI / 2.0).unwrap();
        assert!(f90.abs() < 1e-12);
        assert!(sagnac_frequency(omega, 0.0, perimeter, lambda, 0.0).is_err());
        assert!(sagnac_frequency(omega, area, -1.0, lambda, 0.0).is_err());
        assert!(sagnac_frequency(omega, area, perimeter, lambda, 4.0).is_err());
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert_eq!(
            generate_dataset(0, &ParamRanges::default(), 1).unwrap_err(),
            Error::EmptyDataset
        );
    }

    #[test]
    fn single_degenerate_record() {
        let mut ds = generate_dataset(1, &ParamRanges::noiseless(300.0), 11).unwrap();
        let r = ds.next().unwrap();
        assert!(ds.next().is_none());
        assert_eq!(r.frequency_hz, 300.0);
        assert_eq!(r.noisy, r.clean);
    }
}
