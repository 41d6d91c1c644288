//! Monte Carlo precision sweeps over a grid of target frequencies.
//!
//! For every grid point the harness draws `trials_per_freq` noisy windows with
//! the frequency pinned and all other generator parameters random, runs an
//! estimator on them and reduces the estimates to bias, standard deviation and
//! histogram spread.

use alloc::vec::Vec;

use crate::estimator::FrequencyEstimator;
use crate::rng::derive_seed;
use crate::signal::{generate_dataset, Interval, ParamRanges, SignalWindow};
use crate::single_tone::EstimateMethod;
use crate::{Error, Result};

/// Default histogram bin width for the spread metric, Hz.
pub const DEFAULT_BIN_WIDTH_HZ: f64 = 0.1;

/// Windows per estimator call inside a sweep.
const CHUNK: usize = 512;

/// Sweep settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// First grid frequency, Hz.
    pub f_start: f64,
    /// Last grid frequency (inclusive when on the grid), Hz.
    pub f_stop: f64,
    /// Grid step, Hz.
    pub f_step: f64,
    /// Windows per grid frequency.
    pub trials_per_freq: u64,
    /// Noise ranges, window length and sample rate. The frequency range is
    /// replaced by each grid point.
    pub ranges: ParamRanges,
    /// Which estimator the report was made with.
    pub estimator: EstimateMethod,
    /// Master seed; grid point `i` uses `derive_seed(seed, i)`.
    pub seed: u64,
    /// Spread histogram bin width, Hz.
    pub bin_width_hz: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            f_start: 100.0,
            f_stop: 500.0,
            f_step: 2.0,
            trials_per_freq: 10_000,
            ranges: ParamRanges::default(),
            estimator: EstimateMethod::SingleTone,
            seed: 7,
            bin_width_hz: DEFAULT_BIN_WIDTH_HZ,
        }
    }
}

impl SweepConfig {
    /// Checks the grid, trial count, bin width and noise ranges.
    pub fn validate(&self) -> Result<()> {
        if !(self.f_start.is_finite() && self.f_stop.is_finite() && self.f_start <= self.f_stop) {
            return Err(Error::InvalidRange { field: "grid", lo: self.f_start, hi: self.f_stop });
        }
        if !(self.f_step.is_finite() && self.f_step > 0.0) {
            return Err(Error::Domain("f_step must be positive"));
        }
        if self.trials_per_freq == 0 {
            return Err(Error::Domain("trials_per_freq must be at least 1"));
        }
        if !(self.bin_width_hz.is_finite() && self.bin_width_hz > 0.0) {
            return Err(Error::Domain("bin width must be positive"));
        }
        self.ranges.clone().with_frequency(self.f_stop).validate()?;
        self.ranges.clone().with_frequency(self.f_start).validate()
    }

    /// Grid frequencies `f_start + i·f_step` up to `f_stop` (with a 1e-9 step
    /// tolerance so that `f_stop` itself is included when on the grid).
    pub fn grid(&self) -> Vec<f64> {
        let n = libm::floor((self.f_stop - self.f_start) / self.f_step + 1e-9) as usize;
        (0..=n).map(|i| self.f_start + i as f64 * self.f_step).collect()
    }

    /// Ranges used at grid point `frequency_hz`.
    pub fn ranges_at(&self, frequency_hz: f64) -> ParamRanges {
        ParamRanges { frequency_hz: Interval::fixed(frequency_hz), ..self.ranges.clone() }
    }
}

/// Metrics at one target frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqStats {
    /// True frequency, Hz.
    pub target_hz: f64,
    /// Mean estimate, Hz.
    pub mean_hz: f64,
    /// `mean_hz - target_hz`.
    pub bias_hz: f64,
    /// Sample standard deviation (n − 1), Hz; 0 for a single estimate.
    pub sigma_hz: f64,
    /// Histogram spread, Hz.
    pub spread_hz: f64,
    /// Successful estimates.
    pub n: u64,
    /// Trials on which the estimator failed.
    pub dropped: u64,
}

impl FreqStats {
    /// Reduces a set of estimates at `target_hz`.
    pub fn from_estimates(target_hz: f64, estimates: &[f64], dropped: u64, bin_width_hz: f64) -> Result<Self> {
        let (mean, sigma) = mean_std(estimates)?;
        Ok(Self {
            target_hz,
            mean_hz: mean,
            bias_hz: mean - target_hz,
            sigma_hz: sigma,
            spread_hz: spread(estimates, bin_width_hz)?,
            n: estimates.len() as u64,
            dropped,
        })
    }
}

/// Per-frequency metrics of a sweep plus the configuration that produced
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Configuration echo.
    pub config: SweepConfig,
    /// One entry per grid frequency, in grid order.
    pub rows: Vec<FreqStats>,
}

impl SweepReport {
    /// Mean of `sigma_hz` over rows whose target lies in `[lo, hi]`.
    pub fn mean_sigma_in(&self, lo: f64, hi: f64) -> Option<f64> {
        band_mean(&self.rows, lo, hi, |r| r.sigma_hz)
    }

    /// Mean of `spread_hz` over rows whose target lies in `[lo, hi]`.
    pub fn mean_spread_in(&self, lo: f64, hi: f64) -> Option<f64> {
        band_mean(&self.rows, lo, hi, |r| r.spread_hz)
    }
}

fn band_mean(rows: &[FreqStats], lo: f64, hi: f64, f: impl Fn(&FreqStats) -> f64) -> Option<f64> {
    let picked: Vec<f64> = rows.iter().filter(|r| r.target_hz >= lo && r.target_hz <= hi).map(f).collect();
    if picked.is_empty() {
        None
    } else {
        Some(picked.iter().sum::<f64>() / picked.len() as f64)
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((mean, libm::sqrt(ss / (n - 1.0))))
}

/// Sample skewness `m3 / m2^{3/2}` (population moments); 0 for a constant
/// sample.
pub fn skewness(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if m2 == 0.0 {
        return Ok(0.0);
    }
    Ok(m3 / libm::pow(m2, 1.5))
}

/// Histogram spread: bins of width `bin_width_hz` anchored at 0, result is the
/// distance between the lowest and highest occupied bin centers plus one bin
/// width.
pub fn spread(estimates: &[f64], bin_width_hz: f64) -> Result<f64> {
    if !(bin_width_hz.is_finite() && bin_width_hz > 0.0) {
        return Err(Error::Domain("bin width must be positive"));
    }
    if estimates.is_empty() {
        return Err(Error::EmptySet);
    }
    if estimates.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite);
    }
    let bin = |e: f64| libm::floor(e / bin_width_hz) as i64;
    let (lo, hi) = estimates.iter().fold((i64::MAX, i64::MIN), |(lo, hi), &e| {
        let b = bin(e);
        (lo.min(b), hi.max(b))
    });
    Ok((hi - lo) as f64 * bin_width_hz + bin_width_hz)
}

/// Runs `estimator` on the windows of one grid point and returns the
/// successful estimates and the number of failures.
pub fn sweep_frequency(
    config: &SweepConfig,
    index: usize,
    estimator: &dyn FrequencyEstimator,
) -> Result<(Vec<f64>, u64)> {
    let grid = config.grid();
    let target = *grid.get(index).ok_or(Error::Domain("grid index out of range"))?;
    let ranges = config.ranges_at(target);
    let mut records = generate_dataset(config.trials_per_freq, &ranges, derive_seed(config.seed, index as u64))?;
    let mut estimates = Vec::with_capacity(config.trials_per_freq as usize);
    let mut dropped = 0;
    let mut windows: Vec<SignalWindow> = Vec::with_capacity(CHUNK);
    loop {
        windows.clear();
        windows.extend(records.by_ref().take(CHUNK).map(|r| r.noisy));
        if windows.is_empty() {
            break;
        }
        for r in estimator.estimate_many(&windows) {
            match r {
                Ok(e) if e.frequency_hz.is_finite() => estimates.push(e.frequency_hz),
                _ => dropped += 1,
            }
        }
    }
    Ok((estimates, dropped))
}

/// Sweeps the whole grid with `estimator`.
///
/// A grid point where every trial failed is an error (no statistics exist).
pub fn sweep(config: &SweepConfig, estimator: &dyn FrequencyEstimator) -> Result<SweepReport> {
    config.validate()?;
    let mut config = config.clone();
    config.estimator = estimator.method();
    let grid = config.grid();
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &target) in grid.iter().enumerate() {
        let (estimates, dropped) = sweep_frequency(&config, i, estimator)?;
        rows.push(FreqStats::from_estimates(target, &estimates, dropped, config.bin_width_hz)?);
    }
    Ok(SweepReport { config, rows })
}

/// Per-frequency ratios of two reports on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    /// `(target_hz, sigma_a / sigma_b, spread_a / spread_b)` per grid point.
    pub rows: Vec<(f64, f64, f64)>,
    /// Mean of the per-frequency sigma ratios.
    pub mean_sigma_ratio: f64,
    /// Mean of the per-frequency spread ratios.
    pub mean_spread_ratio: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else {
        a / b
    }
}

/// Compares `a` against `b`: ratios above 1 mean `b` is the more precise
/// estimator.
pub fn compare(a: &SweepReport, b: &SweepReport) -> Result<ComparisonTable> {
    let same_grid = a.rows.len() == b.rows.len()
        && a.rows.iter().zip(&b.rows).all(|(x, y)| libm::fabs(x.target_hz - y.target_hz) < 1e-9);
    if !same_grid {
        return Err(Error::Config(alloc::string::String::from("reports are on different frequency grids")));
    }
    if a.rows.is_empty() {
        return Err(Error::EmptySet);
    }
    let rows: Vec<(f64, f64, f64)> = a
        .rows
        .iter()
        .zip(&b.rows)
        .map(|(x, y)| (x.target_hz, ratio(x.sigma_hz, y.sigma_hz), ratio(x.spread_hz, y.spread_hz)))
        .collect();
    let n = rows.len() as f64;
    Ok(ComparisonTable {
        mean_sigma_ratio: rows.iter().map(|r| r.1).sum::<f64>() / n,
        mean_spread_ratio: rows.iter().map(|r| r.2).sum::<f64>() / n,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::single_tone::{FreqEstimate, SingleTone};
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    struct Constant(f64);

    impl FrequencyEstimator for Constant {
        fn method(&self) -> EstimateMethod {
            EstimateMethod::SingleTone
        }

        fn estimate(&self, _: &SignalWindow) -> Result<FreqEstimate> {
            Ok(FreqEstimate { frequency_hz: self.0, amplitude: 1.0, method: EstimateMethod::SingleTone, warning: None })
        }
    }

    struct FailsEveryThird(core::cell::Cell<u32>);

    impl FrequencyEstimator for FailsEveryThird {
        fn method(&self) -> EstimateMethod {
            EstimateMethod::SingleTone
        }

        fn estimate(&self, w: &SignalWindow) -> Result<FreqEstimate> {
            let k = self.0.get();
            self.0.set(k + 1);
            if k % 3 == 0 {
                Err(Error::NoTone)
            } else {
                SingleTone::default().estimate(w)
            }
        }
    }

    fn small(trials: u64) -> SweepConfig {
        SweepConfig { f_start: 270.0, f_stop: 290.0, f_step: 10.0, trials_per_freq: trials, ..SweepConfig::default() }
    }

    #[test]
    fn spread_closed_forms() {
        assert!((spread(&[279.0, 281.0], 0.1).unwrap() - 2.1).abs() < 1e-9);
        assert!((spread(&[280.03; 7], 0.1).unwrap() - 0.1).abs() < 1e-12);
        assert!((spread(&[280.0, 280.09], 0.1).unwrap() - 0.1).abs() < 1e-12);
        assert!((spread(&[-0.05, 0.05], 0.1).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(spread(&[], 0.1), Err(Error::EmptySet));
        assert!(spread(&[1.0], 0.0).is_err());
    }

    #[test]
    fn spread_of_gaussian_sample_tracks_its_range() {
        let mut rng = stream(99);
        let xs: Vec<f64> = (0..100_000).map(|_| 280.0 + rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let s = spread(&xs, 0.1).unwrap();
        // brute force: enumerate occupied bins by sorting
        let mut bins: Vec<i64> = xs.iter().map(|x| (x / 0.1).floor() as i64).collect();
        bins.sort_unstable();
        let expected = (bins[bins.len() - 1] - bins[0] + 1) as f64 * 0.1;
        assert!((s - expected).abs() < 1e-9);
        assert!((7.0..=11.0).contains(&s), "{s}");
    }

    #[test]
    fn grid_includes_endpoint() {
        let c = SweepConfig { f_start: 250.0, f_stop: 310.0, f_step: 2.0, ..SweepConfig::default() };
        let g = c.grid();
        assert_eq!(g.len(), 31);
        assert_eq!(g[30], 310.0);
        let c = SweepConfig { f_start: 100.0, f_stop: 500.0, f_step: 0.2, ..SweepConfig::default() };
        assert_eq!(c.grid().len(), 2001);
    }

    #[test]
    fn constant_mock_estimator() {
        let report = sweep(&small(50), &Constant(300.0)).unwrap();
        for r in &report.rows {
            assert_eq!(r.sigma_hz, 0.0);
            assert!((r.spread_hz - 0.1).abs() < 1e-12);
            assert!((r.bias_hz - (300.0 - r.target_hz)).abs() < 1e-9);
            assert_eq!((r.n, r.dropped), (50, 0));
        }
    }

    #[test]
    fn failures_are_counted_as_dropped() {
        let report = sweep(&small(30), &FailsEveryThird(core::cell::Cell::new(0))).unwrap();
        let dropped: u64 = report.rows.iter().map(|r| r.dropped).sum();
        let kept: u64 = report.rows.iter().map(|r| r.n).sum();
        assert_eq!(dropped, 30);
        assert_eq!(kept, 60);
    }

    #[test]
    fn sweeps_are_reproducible() {
        let a = sweep(&small(200), &SingleTone::default()).unwrap();
        let b = sweep(&small(200), &SingleTone::default()).unwrap();
        assert_eq!(a, b);
        let c = sweep(&SweepConfig { seed: 8, ..small(200) }, &SingleTone::default()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_exact_bins_have_no_bias() {
        let config = SweepConfig {
            f_start: 200.0,
            f_stop: 400.0,
            f_step: 100.0,
            trials_per_freq: 20,
            ranges: ParamRanges::noiseless(200.0),
            ..SweepConfig::default()
        };
        let report = sweep(&config, &SingleTone::default()).unwrap();
        for r in &report.rows {
            assert!(r.bias_hz.abs() < 1e-6, "{:?}", r);
        }
    }

    #[test]
    fn comparison_against_itself_is_unity() {
        let a = sweep(&small(100), &SingleTone::default()).unwrap();
        let t = compare(&a, &a).unwrap();
        assert_eq!(t.mean_sigma_ratio, 1.0);
        assert_eq!(t.mean_spread_ratio, 1.0);
        assert!(t.rows.iter().all(|r| r.1 == 1.0 && r.2 == 1.0));
    }

    #[test]
    fn comparison_requires_matching_grids() {
        let a = sweep(&small(10), &Constant(1.0)).unwrap();
        let b = sweep(&SweepConfig { f_stop: 280.0, ..small(10) }, &Constant(1.0)).unwrap();
        assert!(matches!(compare(&a, &b), Err(Error::Config(_))));
    }

    #[test]
    fn skewness_reference_values() {
        assert_eq!(skewness(&[3.0, 3.0]).unwrap(), 0.0);
        // {0, 0, 3}: mean 1, m2 = 2, m3 = 2 → 2 / 2^1.5
        let g = skewness(&[0.0, 0.0, 3.0]).unwrap();
        assert!((g - 2.0 / 2f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn sigma_stabilizes_with_trials() {
        let base = SweepConfig { f_start: 280.0, f_stop: 281.0, f_step: 10.0, ..SweepConfig::default() };
        let a = sweep(&SweepConfig { trials_per_freq: 10_000, ..base.clone() }, &SingleTone::default()).unwrap();
        let b = sweep(&SweepConfig { trials_per_freq: 40_000, seed: 11, ..base }, &SingleTone::default()).unwrap();
        let (sa, sb) = (a.rows[0].sigma_hz, b.rows[0].sigma_hz);
        assert!((sa / sb - 1.0).abs() < 0.1, "{sa} vs {sb}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn spread_bounds(xs in proptest::collection::vec(0.0f64..1000.0, 1..60), w in 0.01f64..2.0) {
            let s = spread(&xs, w).unwrap();
            let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(s >= w - 1e-9);
            prop_assert!(s >= hi - lo - 1e-9);
            prop_assert!(s <= hi - lo + 2.0 * w + 1e-9);
        }
    }
}
